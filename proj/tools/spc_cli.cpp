/*
 Copyright 2026 The SPC Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "spc/bench.hpp"

namespace fs = std::filesystem;

namespace {

std::vector<double> to_std(const spc::Vec& v) { return {v.data(), v.data() + v.size()}; }

double parse_eta(const std::string& s) {
    if (s == "auto") return 0.0;
    const double eta = std::stod(s);
    if (!(eta > 0)) throw spc::ContractError("--eta must be positive or auto");
    return eta;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Smart predict-then-control: control-aware model refinement"};
    app.require_subcommand(1);

    std::string model_id = "scalar", variant = "fixed", eta_arg = "auto", out_dir = "spc_out", theta_emp = "eq7";
    int iters = 40, tau = 10, trajectories = 10, horizon = 10;
    std::uint64_t seed = 0;
    bool early_stop = false, save_data = false;

    auto* refine = app.add_subcommand("refine", "run fixed or updated SPC on a synthetic instance");
    refine->add_option("--model", model_id, "scalar | double-integrator | pointmass-wind");
    refine->add_option("--variant", variant, "fixed | updated")->check(CLI::IsMember({"fixed", "updated"}));
    refine->add_option("--eta", eta_arg, "step size or auto (1 / L_hat)");
    refine->add_option("--iters", iters, "iteration budget K")->check(CLI::NonNegativeNumber);
    refine->add_option("--tau", tau, "refresh period of the updated variant")->check(CLI::PositiveNumber);
    refine->add_option("--seed", seed);
    refine->add_option("--theta-emp", theta_emp, "eq7 | tpc")->check(CLI::IsMember({"eq7", "tpc"}));
    refine->add_option("--trajectories", trajectories);
    refine->add_option("--horizon", horizon);
    refine->add_option("--out", out_dir);
    refine->add_flag("--early-stop", early_stop);
    refine->add_flag("--save-data", save_data);

    int grid = 41, lb_samples = 8;
    auto* diagnose = app.add_subcommand("diagnose", "transfer report and convergence certificate as JSON");
    diagnose->add_option("--model", model_id);
    diagnose->add_option("--eta", eta_arg);
    diagnose->add_option("--iters", iters);
    diagnose->add_option("--seed", seed);
    diagnose->add_option("--theta-emp", theta_emp)->check(CLI::IsMember({"eq7", "tpc"}));
    diagnose->add_option("--grid", grid, "grid points per axis for one- or two-parameter models");
    diagnose->add_option("--lb-samples", lb_samples);
    diagnose->add_option("--out", out_dir);

    auto* bench = app.add_subcommand("bench", "closed-loop benchmark");
    bench->require_subcommand(1);
    std::string config_path, report_dir;
    auto* bench_run = bench->add_subcommand("run", "run the benchmark from a JSON config");
    bench_run->add_option("--config", config_path)->required();
    bench_run->add_option("--out", out_dir, "overrides output_dir of the config");
    auto* bench_report = bench->add_subcommand("report", "aggregate an output directory");
    bench_report->add_option("--dir", report_dir)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*refine || *diagnose) {
            spc::SyntheticOptions opts;
            opts.trajectories = trajectories;
            opts.horizon = horizon;
            opts.theta_emp_from_tpc = theta_emp == "tpc";
            auto inst = spc::make_synthetic_instance(model_id, seed, opts);
            spc::SurrogateConfig cfg;
            cfg.eta = parse_eta(eta_arg);
            cfg.iters = iters;
            cfg.tau = tau;
            cfg.early_stop = early_stop;
            cfg.variant = variant == "updated" ? spc::Variant::Updated : spc::Variant::Fixed;
            fs::create_directories(out_dir);

            if (*refine) {
                if (save_data) spc::save_dataset(inst.data, inst.model, (fs::path(out_dir) / "data").string());
                const auto run = cfg.variant == spc::Variant::Fixed
                                     ? spc::run_spc(inst.set, inst.theta_tpc, inst.theta_emp, inst.box, cfg)
                                     : spc::run_updated_spc(inst.set, inst.theta_tpc, inst.theta_emp, inst.box, cfg);
                spc::write_run_csv(run, (fs::path(out_dir) / "run.csv").string());
                spc::write_run_summary(run, (fs::path(out_dir) / "summary.json").string());
                std::cout << "theta_tpc = " << inst.theta_tpc.transpose() << "\n"
                          << "theta_K   = " << run.theta_final.transpose() << "\n"
                          << "loss " << run.log.front().loss << " -> " << run.log.back().loss << "\n";
                return 0;
            }

            const auto run = spc::run_spc(inst.set, inst.theta_tpc, inst.theta_emp, inst.box, cfg);
            nlohmann::json j;
            j["model"] = model_id;
            j["seed"] = seed;
            j["theta_tpc"] = to_std(inst.theta_tpc);
            j["theta_emp"] = to_std(inst.theta_emp);
            j["theta_final"] = to_std(run.theta_final);
            j["eta"] = run.eta;
            j["L_hat"] = run.L_hat;

            const auto cert = spc::convergence_certificate(run, run.eta, run.L_hat);
            j["certificate"] = {{"worst_slack", cert.worst_slack}, {"descent_holds", cert.descent_holds},
                                {"min_gm_norm_sq", cert.min_gm_norm_sq}, {"rate_bound", cert.rate_bound},
                                {"rate_holds", cert.rate_holds}, {"flags", cert.flags}};

            double LB = spc::estimate_bias_lipschitz(inst.dep, inst.set, inst.theta_emp, inst.box, lb_samples);
            std::string source = "sampled (diagnostic, not a certificate)";
            if (inst.model.p <= 2) {
                const auto rows = spc::grid_sweep(inst.dep, inst.set, inst.theta_emp, inst.box, grid);
                spc::write_grid_csv(rows, (fs::path(out_dir) / "grid.csv").string());
                LB = spc::grid_bias_lipschitz(rows);
                source = "grid";
            }
            const auto rep = spc::transfer_check(run, inst.dep, inst.set, inst.theta_emp, LB);
            j["transfer"] = {{"surrogate_decrease", rep.surrogate_decrease}, {"step_norm", rep.step_norm},
                             {"L_B", rep.L_B}, {"L_B_source", source}, {"margin", rep.margin},
                             {"V0", rep.V0}, {"VK", rep.VK}, {"condition_holds", rep.condition_holds},
                             {"verdict", rep.verdict}};
            std::ofstream(fs::path(out_dir) / "diagnose.json") << j.dump(2) << "\n";
            std::cout << j.dump(2) << "\n";
            return 0;
        }

        if (*bench_run) {
            auto cfg = spc::load_bench_config(config_path);
            if (bench_run->count("--out")) cfg.output_dir = out_dir;
            if (cfg.output_dir.empty()) cfg.output_dir = "bench_out";
            const auto res = spc::run_bench(cfg);
            std::cout << spc::bench_report(res.rows);
            std::cout << "elapsed " << res.seconds << " s, outputs in " << cfg.output_dir << "\n";
            return res.any_failed ? 1 : 0;
        }
        if (*bench_report) {
            const auto rows = spc::read_metrics_csv((fs::path(report_dir) / "metrics.csv").string());
            std::cout << spc::bench_report(rows);
            bool failed = false;
            for (const auto& r : rows) failed = failed || r.status != "ok";
            return failed ? 1 : 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
