#include "twoview/harness.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <thread>

#include "twoview/deteq.hpp"
#include "twoview/errors.hpp"
#include "twoview/jsonfmt.hpp"
#include "twoview/outlier.hpp"
#include "twoview/rng.hpp"

namespace twoview::harness {

std::string to_string(ExperimentType t) {
    switch (t) {
        case ExperimentType::OverlapCurve: return "overlap_curve";
        case ExperimentType::Spectrum: return "spectrum";
        case ExperimentType::DetectionSweep: return "detection_sweep";
        case ExperimentType::GridSearchSweep: return "grid_search_sweep";
        case ExperimentType::StrengthSweep: return "strength_sweep";
    }
    return "?";
}

ExperimentType experiment_from_string(const std::string& s) {
    if (s == "overlap_curve") return ExperimentType::OverlapCurve;
    if (s == "spectrum") return ExperimentType::Spectrum;
    if (s == "detection_sweep") return ExperimentType::DetectionSweep;
    if (s == "grid_search_sweep") return ExperimentType::GridSearchSweep;
    if (s == "strength_sweep") return ExperimentType::StrengthSweep;
    throw ValidationError("unknown experiment type: " + s);
}

void ExperimentConfig::validate() const {
    if (trials < 1) throw ValidationError("experiment needs trials >= 1");
    if (rho_grid.empty()) throw ValidationError("experiment needs a nonempty rho grid");
    for (double r : rho_grid)
        if (r < 0.0 || r > 1.0) throw ValidationError("rho grid values must lie in [0,1]");
    if (output_path.empty()) throw ValidationError("experiment needs an output path");
}

std::string config_json(const ExperimentConfig& c) {
    using jsonfmt::Value;
    std::string grid = "[";
    for (size_t i = 0; i < c.rho_grid.size(); ++i)
        grid += (i ? "," : "") + jsonfmt::num(c.rho_grid[i]);
    grid += "]";
    std::map<std::string, Value> model{{"kind", to_string(c.model.kind)},
                                       {"n", c.model.n},
                                       {"m", c.model.m},
                                       {"k", c.model.k},
                                       {"alpha", c.model.alpha},
                                       {"beta", c.model.beta}};
    // nested pieces are pre-rendered and spliced below
    std::map<std::string, std::string> raw{
        {"experiment", "\"" + to_string(c.experiment) + "\""},
        {"master_seed", jsonfmt::num(static_cast<long long>(c.master_seed))},
        {"mesh", jsonfmt::num(c.mesh)},
        {"eps", jsonfmt::num(c.eps)},
        {"model", jsonfmt::object(model)},
        {"planted", c.planted ? "true" : "false"},
        {"rho_grid", grid},
        {"threshold_c", jsonfmt::num(c.threshold_c)},
        {"trials", jsonfmt::num(static_cast<long long>(c.trials))}};
    std::string out = "{";
    bool first = true;
    for (const auto& [k, v] : raw) {
        if (!first) out += ",";
        first = false;
        out += "\"" + k + "\":" + v;
    }
    return out + "}";
}

namespace {

struct TrialOutcome {
    double overlap = 0.0;   // summed empirical overlap (or estimation error)
    double lambda1 = 0.0;
    bool reject = false;
    std::vector<double> spectrum;  // full eigenvalue set for spectrum runs
};

struct RhoPrediction {
    double overlap = 0.0;
    double lambda_out = std::nan("");
};

RhoPrediction predict_for(const ModelParams& params, double rho) {
    RhoPrediction pred;
    outlier::OutlierPrediction op = outlier::find_outlier(params.limit(), rho);
    if (op.exists) {
        pred.overlap = op.overlap_a + op.overlap_b;
        pred.lambda_out = op.lambda_out;
    }
    return pred;
}

TrialOutcome run_trial(const ExperimentConfig& cfg, double rho, std::uint64_t seed) {
    ModelParams params = cfg.model;
    params.rho = rho;
    params.validate();
    TrialOutcome out;
    inference::ThresholdRule rule{cfg.threshold_c};

    switch (cfg.experiment) {
        case ExperimentType::OverlapCurve:
        case ExperimentType::DetectionSweep: {
            TwoViewInstance inst = sample_instance(params, cfg.planted, seed);
            spectral::SpectralResult spec = spectral::top_eigs(inst, std::nullopt, 2);
            out.lambda1 = spec.eigenvalues(0);
            double edge = params.kind == ModelKind::CCA ? deteq::edge(params.limit()) : 1.0;
            out.reject = out.lambda1 >= edge + cfg.threshold_c * std::pow(params.n, -1.0 / 3.0);
            if (inst.planted) {
                auto [oa, ob] = spectral::empirical_overlap(spec, inst);
                out.overlap = oa + ob;
            }
            break;
        }
        case ExperimentType::Spectrum: {
            TwoViewInstance inst = sample_instance(params, cfg.planted, seed);
            Matrix w = spectral::build_w(inst);
            Vector vals;
            if (params.kind == ModelKind::CCA) {
                vals = linalg::sym_eigvalues(w);
            } else {
                // eigenvalues of W equal those of the symmetrized H
                double kap = spectral::stat_coeffs(params.kind, params.tau(),
                                                   {params.alpha, params.beta})
                                 .kappa;
                const int h = static_cast<int>(w.rows()) / 2;
                double uu = 0.5 * (std::sqrt(1.0 + kap) + std::sqrt(1.0 - kap));
                double vv = 0.5 * (std::sqrt(1.0 + kap) - std::sqrt(1.0 - kap));
                Matrix ubar = w.topLeftCorner(h, h), vbar = w.bottomRightCorner(h, h);
                Matrix hm(2 * h, 2 * h);
                hm.topLeftCorner(h, h) = uu * uu * ubar + vv * vv * vbar;
                hm.bottomRightCorner(h, h) = vv * vv * ubar + uu * uu * vbar;
                hm.topRightCorner(h, h) = uu * vv * (ubar + vbar);
                hm.bottomLeftCorner(h, h) = hm.topRightCorner(h, h);
                vals = linalg::sym_eigvalues(hm);
            }
            out.spectrum.assign(vals.data(), vals.data() + vals.size());
            out.lambda1 = vals(0);
            if (cfg.planted && inst.planted) {
                spectral::SpectralResult spec = spectral::top_eigs(inst, std::nullopt, 2);
                auto [oa, ob] = spectral::empirical_overlap(spec, inst);
                out.overlap = oa + ob;
            }
            double edge = params.kind == ModelKind::CCA ? deteq::edge(params.limit()) : 1.0;
            out.reject = out.lambda1 >= edge + cfg.threshold_c * std::pow(params.n, -1.0 / 3.0);
            break;
        }
        case ExperimentType::GridSearchSweep: {
            TwoViewInstance inst = sample_instance(params, cfg.planted, seed);
            inference::GridSearchResult gs = inference::grid_search(inst, cfg.eps, cfg.mesh, rule);
            out.lambda1 = gs.detection.statistic;
            out.reject = gs.detection.reject_null;
            if (inst.planted) {
                auto [oa, ob] = spectral::empirical_overlap(gs.spectral, inst);
                out.overlap = oa + ob;
            }
            break;
        }
        case ExperimentType::StrengthSweep: {
            TwoViewInstance inst = sample_instance(params, true, seed);
            inference::StrengthOptions sopts;
            sopts.eps = cfg.eps;
            sopts.mesh = cfg.mesh;
            inference::StrengthEstimate est =
                inference::estimate_strengths(inst, rng::derive_key(seed, "aux"), sopts);
            out.overlap = 0.5 * (std::abs(est.alpha_hat - params.alpha) +
                                 std::abs(est.beta_hat - params.beta));
            out.lambda1 = est.alpha_hat;
            break;
        }
    }
    return out;
}

void write_histogram(const std::string& path, const ExperimentConfig& cfg,
                     const std::vector<double>& pooled) {
    if (pooled.empty()) return;
    double lo = pooled.front(), hi = pooled.front();
    for (double x : pooled) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    const int bins = 80;
    double width = (hi - lo) / bins;
    if (width <= 0.0) width = 1.0;
    std::vector<int> counts(bins, 0);
    for (double x : pooled) {
        int b = std::min(bins - 1, static_cast<int>((x - lo) / width));
        counts[b]++;
    }
    std::ofstream out(path);
    if (!out) throw NumericalError("cannot open " + path);
    out << "bin_center,empirical_density,predicted_density\n";
    LimitModel lim = cfg.model.limit();
    char buf[128];
    for (int b = 0; b < bins; ++b) {
        double center = lo + (b + 0.5) * width;
        double emp = counts[b] / (pooled.size() * width);
        double pred = deteq::limiting_density(lim, center, 1e-3);
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", center, emp, pred);
        out << buf;
    }
}

}  // namespace

std::vector<ExperimentRow> run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const int nr = static_cast<int>(cfg.rho_grid.size());
    const int total = nr * cfg.trials;
    std::vector<TrialOutcome> outcomes(total);

    // deterministic per-trial seeds; evaluation order never matters
    std::vector<std::uint64_t> seeds(total);
    for (int i = 0; i < nr; ++i)
        for (int t = 0; t < cfg.trials; ++t)
            seeds[i * cfg.trials + t] = rng::derive_key(cfg.master_seed, i, t);

    int threads = cfg.threads > 0 ? cfg.threads
                                  : static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min(threads, total));
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mu;
    auto worker = [&]() {
        for (;;) {
            int idx = next.fetch_add(1);
            if (idx >= total) return;
            try {
                outcomes[idx] = run_trial(cfg, cfg.rho_grid[idx / cfg.trials], seeds[idx]);
            } catch (...) {
                std::lock_guard<std::mutex> lk(error_mu);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (error) std::rethrow_exception(error);

    std::vector<ExperimentRow> rows(nr);
    std::vector<double> pooled_spectrum;
    for (int i = 0; i < nr; ++i) {
        ExperimentRow& row = rows[i];
        row.rho = cfg.rho_grid[i];
        row.trials = cfg.trials;
        double sum = 0, sum2 = 0, l1 = 0, rej = 0;
        for (int t = 0; t < cfg.trials; ++t) {
            const TrialOutcome& o = outcomes[i * cfg.trials + t];
            sum += o.overlap;
            sum2 += o.overlap * o.overlap;
            l1 += o.lambda1;
            rej += o.reject ? 1.0 : 0.0;
            pooled_spectrum.insert(pooled_spectrum.end(), o.spectrum.begin(), o.spectrum.end());
        }
        row.mean_overlap = sum / cfg.trials;
        row.std_overlap = std::sqrt(std::max(0.0, sum2 / cfg.trials - row.mean_overlap * row.mean_overlap));
        row.lambda1_mean = l1 / cfg.trials;
        row.reject_rate = rej / cfg.trials;

        if (cfg.experiment == ExperimentType::StrengthSweep) {
            row.predicted_overlap = 0.0;
            row.lambda_out_pred = std::nan("");
        } else {
            ModelParams params = cfg.model;
            params.rho = row.rho;
            RhoPrediction pred = predict_for(params, row.rho);
            row.predicted_overlap = pred.overlap;
            row.lambda_out_pred = pred.lambda_out;
        }
    }

    std::ofstream out(cfg.output_path);
    if (!out) throw NumericalError("cannot open " + cfg.output_path);
    out << "# config=" << config_json(cfg) << "\n";
    out << "rho,mean_overlap,std_overlap,predicted_overlap,lambda1_mean,lambda_out_pred,"
           "reject_rate,trials\n";
    char buf[256];
    for (const ExperimentRow& r : rows) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", r.rho,
                      r.mean_overlap, r.std_overlap, r.predicted_overlap, r.lambda1_mean,
                      r.lambda_out_pred, r.reject_rate, r.trials);
        out << buf;
    }
    out.close();

    if (cfg.experiment == ExperimentType::Spectrum)
        write_histogram(cfg.output_path + ".hist.csv", cfg, pooled_spectrum);
    return rows;
}

}  // namespace twoview::harness
