#pragma once

#include <string>
#include <vector>

#include "twoview/inference.hpp"

namespace twoview::harness {

enum class ExperimentType { OverlapCurve, Spectrum, DetectionSweep, GridSearchSweep, StrengthSweep };

std::string to_string(ExperimentType t);
ExperimentType experiment_from_string(const std::string& s);

struct ExperimentConfig {
    ModelParams model;             // rho is taken from rho_grid per row
    std::vector<double> rho_grid;
    int trials = 1;
    std::uint64_t master_seed = 1;
    ExperimentType experiment = ExperimentType::OverlapCurve;
    std::string output_path;
    bool planted = true;           // detection sweeps may run the null instead
    int threads = 0;               // 0 = hardware concurrency
    double eps = 0.1;              // grid-search / strength parameters
    double mesh = 0.05;
    double threshold_c = 4.0;

    void validate() const;
};

struct ExperimentRow {
    double rho = 0.0;
    double mean_overlap = 0.0;      // summed overlap <a_hat,a>^2 + <b_hat,b>^2
    double std_overlap = 0.0;       // (strength sweeps: mean/std of estimation error)
    double predicted_overlap = 0.0;
    double lambda1_mean = 0.0;
    double lambda_out_pred = 0.0;   // nan when no outlier is predicted
    double reject_rate = 0.0;
    int trials = 0;
};

// Runs the experiment, writes the CSV (comment line with the full config,
// header, one row per rho) and returns the rows. Per-trial seeds are
// hash(master_seed, rho_index, trial_index); the output is identical for any
// thread count. Spectrum experiments additionally write
// "<output_path>.hist.csv" with the pooled eigenvalue histogram and the
// predicted limiting density.
std::vector<ExperimentRow> run_experiment(const ExperimentConfig& config);

std::string config_json(const ExperimentConfig& config);  // canonical one-line form

}  // namespace twoview::harness
