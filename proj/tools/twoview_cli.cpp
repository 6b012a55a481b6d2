#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "twoview/errors.hpp"
#include "twoview/harness.hpp"
#include "twoview/jsonfmt.hpp"
#include "twoview/outlier.hpp"

using namespace twoview;
using jsonfmt::Value;

namespace {

std::uint64_t default_seed() {
    if (const char* env = std::getenv("TWOVIEW_SEED")) return std::strtoull(env, nullptr, 10);
    return 1;
}

struct ModelFlags {
    std::string model;
    int n = 1000, m = 500, k = 500;
    double alpha = 0.8, beta = 0.8, rho = 0.0;
};

void add_model_flags(CLI::App* sub, ModelFlags& mf) {
    sub->add_option("--model", mf.model, "model kind: cca | cswig | cswish")->required();
    sub->add_option("--n", mf.n, "samples (cca) / dimension (cswig) / rows (cswish)");
    sub->add_option("--m", mf.m, "first-view dimension (cca) / columns (cswish)");
    sub->add_option("--k", mf.k, "second-view dimension (cca)");
    sub->add_option("--alpha", mf.alpha, "first signal strength (spiked models)");
    sub->add_option("--beta", mf.beta, "second signal strength (spiked models)");
    sub->add_option("--rho", mf.rho, "correlation in [0,1]");
}

ModelParams make_params(const ModelFlags& mf) {
    ModelKind kind = model_kind_from_string(mf.model);
    switch (kind) {
        case ModelKind::CCA: return ModelParams::cca(mf.n, mf.m, mf.k, mf.rho);
        case ModelKind::CSWig: return ModelParams::cswig(mf.n, mf.alpha, mf.beta, mf.rho);
        case ModelKind::CSWish: return ModelParams::cswish(mf.n, mf.m, mf.alpha, mf.beta, mf.rho);
    }
    throw ValidationError("unknown model");
}

void emit(const std::map<std::string, Value>& fields) {
    std::cout << jsonfmt::object(fields) << "\n";
}

harness::ExperimentConfig config_from_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file " + path);
    nlohmann::json j;
    in >> j;
    harness::ExperimentConfig cfg;
    auto jm = j.at("model");
    std::string kind = jm.at("kind").get<std::string>();
    double rho0 = jm.value("rho", 0.0);
    if (kind == "cca")
        cfg.model = ModelParams::cca(jm.at("n"), jm.at("m"), jm.at("k"), rho0);
    else if (kind == "cswig")
        cfg.model = ModelParams::cswig(jm.at("n"), jm.at("alpha"), jm.at("beta"), rho0);
    else if (kind == "cswish")
        cfg.model = ModelParams::cswish(jm.at("n"), jm.at("m"), jm.at("alpha"), jm.at("beta"), rho0);
    else
        throw ValidationError("unknown model kind in config: " + kind);
    cfg.rho_grid = j.at("rho_grid").get<std::vector<double>>();
    cfg.trials = j.value("trials", 1);
    cfg.master_seed = j.value("master_seed", static_cast<std::uint64_t>(1));
    cfg.experiment = harness::experiment_from_string(j.at("experiment").get<std::string>());
    cfg.output_path = j.at("output_path").get<std::string>();
    cfg.planted = j.value("planted", true);
    cfg.threads = j.value("threads", 0);
    cfg.eps = j.value("eps", 0.1);
    cfg.mesh = j.value("mesh", 0.05);
    cfg.threshold_c = j.value("threshold_c", 4.0);
    return cfg;
}

int run(int argc, char** argv) {
    CLI::App app{"spectral detection and recovery for correlated two-view models"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand
    int threads = 0;
    app.add_option("--threads", threads,
                   "worker threads for experiments (results identical for any value)");

    // ---- predict ----
    auto* predict = app.add_subcommand("predict", "deterministic predictions: kappa, edge, outlier, overlaps");
    std::string p_model;
    double p_tau_m = 2, p_tau_k = 2, p_tau = 1, p_alpha = 0.8, p_beta = 0.8, p_rho = 0;
    double p_ga = -1, p_gb = -1;
    predict->add_option("--model", p_model)->required();
    predict->add_option("--tau-m", p_tau_m, "n/m ratio (cca)");
    predict->add_option("--tau-k", p_tau_k, "n/k ratio (cca)");
    predict->add_option("--tau", p_tau, "n/m ratio (cswish)");
    predict->add_option("--alpha", p_alpha);
    predict->add_option("--beta", p_beta);
    predict->add_option("--rho", p_rho)->required();
    predict->add_option("--guess-alpha", p_ga, "mismatched guess (spiked models)");
    predict->add_option("--guess-beta", p_gb);

    // ---- generate ----
    auto* generate = app.add_subcommand("generate", "sample an instance and dump CSV matrices");
    ModelFlags g_mf;
    std::uint64_t g_seed = default_seed();
    bool g_planted = false;
    std::string g_prefix = "instance_";
    add_model_flags(generate, g_mf);
    generate->add_flag("--planted", g_planted, "sample from the planted model");
    generate->add_option("--seed", g_seed);
    generate->add_option("--out-prefix", g_prefix);

    // ---- detect ----
    auto* detect_cmd = app.add_subcommand("detect", "lambda_1 detection test on a sampled instance");
    ModelFlags d_mf;
    std::uint64_t d_seed = default_seed();
    bool d_planted = false;
    double d_c = 4.0;
    add_model_flags(detect_cmd, d_mf);
    detect_cmd->add_flag("--planted", d_planted);
    detect_cmd->add_option("--seed", d_seed);
    detect_cmd->add_option("--threshold-c", d_c, "threshold constant c in edge + c n^{-1/3}");

    // ---- recover ----
    auto* recover = app.add_subcommand("recover", "top eigenvector recovery and empirical overlaps");
    ModelFlags r_mf;
    std::uint64_t r_seed = default_seed();
    add_model_flags(recover, r_mf);
    recover->add_option("--seed", r_seed);

    // ---- grid-search ----
    auto* grid = app.add_subcommand("grid-search", "parameter-free detection/recovery over the admissible grid");
    ModelFlags gs_mf;
    std::uint64_t gs_seed = default_seed();
    bool gs_planted = true, gs_fine = false;
    double gs_eps = 0.1, gs_mesh = -1, gs_c = 4.0;
    add_model_flags(grid, gs_mf);
    grid->add_option("--seed", gs_seed);
    grid->add_flag("--planted,!--null", gs_planted, "planted (default) or null instance");
    grid->add_option("--eps", gs_eps);
    grid->add_option("--mesh", gs_mesh, "grid mesh (default eps^2)");
    grid->add_flag("--fine-mesh", gs_fine, "use the full-fidelity eps^9 mesh");
    grid->add_option("--threshold-c", gs_c);

    // ---- estimate-strength ----
    auto* strength = app.add_subcommand("estimate-strength", "split-noise signal-strength estimators");
    ModelFlags st_mf;
    std::uint64_t st_seed = default_seed(), st_aux = 777;
    double st_eps = 0.1, st_mesh = 0.1;
    add_model_flags(strength, st_mf);
    strength->add_option("--seed", st_seed);
    strength->add_option("--aux-seed", st_aux, "seed of the fresh splitting noise");
    strength->add_option("--eps", st_eps);
    strength->add_option("--mesh", st_mesh, "recovery grid mesh");

    // ---- spectrum ----
    auto* spectrum = app.add_subcommand("spectrum", "full spectrum histogram with the predicted density");
    ModelFlags sp_mf;
    std::uint64_t sp_seed = default_seed();
    bool sp_planted = false;
    std::string sp_out = "spectrum.csv";
    add_model_flags(spectrum, sp_mf);
    spectrum->add_flag("--planted", sp_planted);
    spectrum->add_option("--seed", sp_seed);
    spectrum->add_option("--out", sp_out);

    // ---- experiment ----
    auto* experiment = app.add_subcommand("experiment", "Monte Carlo experiment driven by a JSON config");
    std::string e_config;
    int e_trials = -1;
    std::int64_t e_seed = -1;
    std::string e_out;
    experiment->add_option("--config", e_config, "JSON config file")->required();
    experiment->add_option("--trials", e_trials, "override trials");
    experiment->add_option("--seed", e_seed, "override master seed");
    experiment->add_option("--out", e_out, "override output path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        app.exit(e);
        return 0;
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    if (*predict) {
        ModelKind kind = model_kind_from_string(p_model);
        LimitModel lim;
        std::optional<theory::Guess> guess;
        if (kind == ModelKind::CCA) {
            lim = LimitModel::cca(p_tau_m, p_tau_k);
        } else {
            lim = kind == ModelKind::CSWig ? LimitModel::cswig(p_alpha, p_beta)
                                           : LimitModel::cswish(p_alpha, p_beta, p_tau);
            if (p_ga > 0 && p_gb > 0) guess = theory::Guess{p_ga, p_gb};
        }
        theory::ThresholdReport rep = theory::threshold_report(lim, p_rho, guess);
        outlier::OutlierPrediction pred = outlier::find_outlier(lim, p_rho, guess);
        std::map<std::string, Value> out{
            {"kappa", rep.kappa},
            {"lambda_star", rep.lambda_star},
            {"rho", p_rho},
            {"exists", pred.exists},
            {"edge_det", pred.edge_det},
            {"threshold", pred.threshold},
            {"is_lower_bound", pred.is_lower_bound},
        };
        if (pred.exists) {
            out.emplace("lambda_out", pred.lambda_out);
            out.emplace("overlap_a", pred.overlap_a);
            out.emplace("overlap_b", pred.overlap_b);
            out.emplace("overlap_sum", pred.overlap_a + pred.overlap_b);
        }
        emit(out);
        return 0;
    }

    if (*generate) {
        TwoViewInstance inst = sample_instance(make_params(g_mf), g_planted, g_seed);
        save_matrix_csv(g_prefix + "U.csv", inst.U);
        save_matrix_csv(g_prefix + "V.csv", inst.V);
        std::map<std::string, Value> out{{"u_file", g_prefix + "U.csv"},
                                         {"v_file", g_prefix + "V.csv"},
                                         {"seed", g_seed},
                                         {"planted", g_planted}};
        if (inst.planted) {
            save_matrix_csv(g_prefix + "a.csv", inst.planted->a);
            save_matrix_csv(g_prefix + "b.csv", inst.planted->b);
            out.emplace("a_file", g_prefix + "a.csv");
            out.emplace("b_file", g_prefix + "b.csv");
            if (inst.planted->u.size() > 0) {
                save_matrix_csv(g_prefix + "u_latent.csv", inst.planted->u);
                save_matrix_csv(g_prefix + "v_latent.csv", inst.planted->v);
            }
        }
        emit(out);
        return 0;
    }

    if (*detect_cmd) {
        TwoViewInstance inst = sample_instance(make_params(d_mf), d_planted, d_seed);
        inference::DetectionResult res = inference::detect(inst, {d_c});
        emit({{"statistic", res.statistic},
              {"threshold", res.threshold},
              {"reject_null", res.reject_null},
              {"seed", d_seed}});
        return 0;
    }

    if (*recover) {
        TwoViewInstance inst = sample_instance(make_params(r_mf), true, r_seed);
        spectral::SpectralResult spec = spectral::top_eigs(inst, std::nullopt, 2);
        auto [oa, ob] = spectral::empirical_overlap(spec, inst);
        emit({{"lambda1", spec.eigenvalues(0)},
              {"lambda2", spec.eigenvalues(1)},
              {"overlap_a", oa},
              {"overlap_b", ob},
              {"overlap_sum", oa + ob},
              {"seed", r_seed}});
        return 0;
    }

    if (*grid) {
        TwoViewInstance inst = sample_instance(make_params(gs_mf), gs_planted, gs_seed);
        std::optional<double> mesh;
        if (gs_fine) mesh = std::pow(gs_eps, 9);
        else if (gs_mesh > 0) mesh = gs_mesh;
        inference::GridSearchResult res = inference::grid_search(inst, gs_eps, mesh, {gs_c});
        std::map<std::string, Value> out{
            {"lambda_eps", res.detection.statistic},
            {"threshold", res.detection.threshold},
            {"reject_null", res.detection.reject_null},
            {"argmax_alpha", res.detection.argmax_guess->first},
            {"argmax_beta", res.detection.argmax_guess->second},
            {"grid_points", static_cast<long long>(res.grid.size())},
            {"seed", gs_seed}};
        if (inst.planted) {
            auto [oa, ob] = spectral::empirical_overlap(res.spectral, inst);
            out.emplace("overlap_a", oa);
            out.emplace("overlap_b", ob);
            out.emplace("overlap_sum", oa + ob);
        }
        emit(out);
        return 0;
    }

    if (*strength) {
        TwoViewInstance inst = sample_instance(make_params(st_mf), true, st_seed);
        inference::StrengthOptions opts;
        opts.eps = st_eps;
        opts.mesh = st_mesh;
        inference::StrengthEstimate est = inference::estimate_strengths(inst, st_aux, opts);
        emit({{"alpha_hat", est.alpha_hat},
              {"beta_hat", est.beta_hat},
              {"eta", est.eta},
              {"aux_seed", est.aux_seed},
              {"seed", st_seed}});
        return 0;
    }

    if (*spectrum) {
        harness::ExperimentConfig cfg;
        cfg.model = make_params(sp_mf);
        cfg.rho_grid = {sp_mf.rho};
        cfg.trials = 1;
        cfg.master_seed = sp_seed;
        cfg.experiment = harness::ExperimentType::Spectrum;
        cfg.output_path = sp_out;
        cfg.planted = sp_planted;
        cfg.threads = threads;
        auto rows = harness::run_experiment(cfg);
        emit({{"lambda1", rows[0].lambda1_mean},
              {"output", sp_out},
              {"histogram", sp_out + ".hist.csv"}});
        return 0;
    }

    if (*experiment) {
        harness::ExperimentConfig cfg = config_from_json(e_config);
        if (e_trials > 0) cfg.trials = e_trials;
        if (e_seed >= 0) cfg.master_seed = static_cast<std::uint64_t>(e_seed);
        if (!e_out.empty()) cfg.output_path = e_out;
        if (threads > 0) cfg.threads = threads;
        auto rows = harness::run_experiment(cfg);
        emit({{"rows", static_cast<long long>(rows.size())}, {"output", cfg.output_path}});
        return 0;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const ValidationError& e) {
        std::cerr << "invalid parameters: " << e.what() << "\n";
        return 1;
    } catch (const DomainError& e) {
        std::cerr << "numerical domain error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
