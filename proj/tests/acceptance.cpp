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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any selected criterion fails.
//
//   acceptance [--only <name>] [--list]

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "test_support.hpp"

namespace spc {
namespace {

namespace fs = std::filesystem;
using testing::central_gradient;
using testing::central_jacobian;
using testing::rel_err;

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
    std::ostringstream ss;
    ss.precision(3);
    ss << v;
    return ss.str();
}

SolverConfig tight() {
    SolverConfig cfg;
    cfg.tol = 1e-12;
    return cfg;
}

Outcome gradient_suite() {
    const auto t0 = std::chrono::steady_clock::now();
    double worst_cost = 0.0, worst_surr = 0.0;
    int instances = 0;
    std::mt19937_64 rng(2024);
    for (const auto& id : model_zoo_ids()) {
        const auto model = make_model(id);
        for (int k = 0; k < 50; ++k, ++instances) {
            const int T = 3 + k % 4;
            const auto set = testing::random_set(model, 2, T, rng, 0.1);
            const Vec U = testing::gaussian(set.num_controls(), 1, rng);
            const Vec th = testing::uniform_in(model.box, rng);
            const auto& s = set.scenarios[0];
            const auto g = cost_gradients(model, set.cost, s.x0, as_controls(U, model.m), th, s.W);
            const auto J = [&](const Vec& z, const Vec& t) {
                return total_cost(model, set.cost, s.x0, as_controls(z, model.m), t, s.W);
            };
            const Vec fdU = central_gradient([&](const Vec& z) { return J(z, th); }, U, 1e-6);
            const Vec fdT = central_gradient([&](const Vec& z) { return J(U, z); }, th, 1e-6);
            worst_cost = std::max({worst_cost, rel_err(g.grad_U, fdU), rel_err(g.grad_theta, fdT)});

            const Vec te = testing::uniform_in(model.box, rng);
            const Vec gs = evaluate_surrogate(set, th, te, tight()).grad;
            const Vec fdS = central_gradient(
                [&](const Vec& z) { return evaluate_surrogate(set, z, te, tight(), nullptr, false).loss; }, th,
                1e-4 * (1.0 + th.norm()));
            worst_surr = std::max(worst_surr, rel_err(gs, fdS));
        }
    }
    const double secs = seconds_since(t0);
    Outcome o;
    o.pass = worst_cost <= 1e-6 && worst_surr <= 1e-4 && secs < 60.0;
    o.detail = std::to_string(instances) + " instances, cost rel err " + fmt(worst_cost) + ", surrogate rel err " +
               fmt(worst_surr) + ", " + fmt(secs) + " s";
    return o;
}

Outcome implicit_jacobian() {
    double worst_du = 0.0, worst_ls = 0.0;
    std::mt19937_64 rng(77);
    std::vector<ModelSpec> models{make_model("scalar"), make_model("double-integrator"),
                                  make_model("pointmass-wind"), testing::make_nonlinear_model()};
    for (const auto& model : models) {
        for (int k = 0; k < 5; ++k) {
            const auto set = testing::random_set(model, 3, 6, rng, 0.2);
            const Vec th = testing::uniform_in(model.box, rng);
            const auto rep = solve_optimal_control(set, 0, th, tight());
            const Mat DU = optimizer_jacobian(set, 0, rep.U, th);
            const Mat fd = central_jacobian([&](const Vec& z) { return solve_optimal_control(set, 0, z, tight()).U; },
                                            th, 1e-5);
            worst_du = std::max(worst_du, rel_err(DU, fd));
            if (model.id != "nonlinear") {
                const Vec ls = testing::batch_least_squares(set, set.scenarios[0].x0, th);
                worst_ls = std::max(worst_ls, (rep.U - ls).cwiseAbs().maxCoeff());
            }
        }
    }
    return {worst_du <= 1e-4 && worst_ls <= 1e-8,
            "DU* rel err " + fmt(worst_du) + ", batch LS max abs err " + fmt(worst_ls)};
}

Outcome descent_certificate() {
    double worst_slack = std::numeric_limits<double>::infinity();
    int rate_ok = 0, runs = 0;
    for (int seed = 0; seed < 10; ++seed, ++runs) {
        const auto& id = model_zoo_ids()[seed % 3];
        const auto inst = make_synthetic_instance(id, seed);
        SurrogateConfig cfg;
        cfg.iters = 20;
        cfg.lipschitz_seed = 100 + seed;
        const auto run = run_spc(inst.set, inst.theta_tpc, inst.theta_emp, inst.box, cfg);
        const auto c = convergence_certificate(run, run.eta, run.L_hat);
        worst_slack = std::min(worst_slack, c.worst_slack);
        if (c.rate_holds) ++rate_ok;
    }
    return {worst_slack >= -1e-9 && rate_ok == runs,
            std::to_string(runs) + " runs, worst slack " + fmt(worst_slack) + ", rate bound held in " +
                std::to_string(rate_ok)};
}

Outcome decomposition_identity() {
    const auto inst = make_synthetic_instance("double-integrator", 3);
    std::mt19937_64 rng(5);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
        const Vec a = testing::uniform_in(inst.box, rng), b = testing::uniform_in(inst.box, rng);
        const auto da = decompose(inst.dep, inst.set, a, inst.theta_emp);
        const auto db = decompose(inst.dep, inst.set, b, inst.theta_emp);
        worst = std::max(worst, std::abs((da.V - db.V) - ((da.L - db.L) + (da.B - db.B))));
    }
    return {worst <= 1e-12, "100 pairs, max residual " + fmt(worst)};
}

Outcome transfer_implication() {
    // Long horizons make the bias slope dominate everywhere, so the condition only
    // becomes satisfiable on short horizons and sub-boxes away from theta_emp.
    int runs = 0, satisfied = 0, counter = 0;
    const std::vector<std::pair<double, double>> boxes{{-1.5, 1.5}, {0.8, 1.5}, {1.0, 1.5}, {0.2, 0.9}};
    for (int horizon : {1, 10}) {
        SyntheticOptions opts;
        opts.horizon = horizon;
        for (int seed = 0; seed < 4; ++seed) {
            const auto inst = make_synthetic_instance("scalar", seed, opts);
            for (const auto& [lo, hi] : boxes) {
                const Box box(Vec::Constant(1, lo), Vec::Constant(1, hi));
                const double LB = grid_bias_lipschitz(grid_sweep(inst.dep, inst.set, inst.theta_emp, box, 301));
                for (double frac : {0.0, 0.5, 1.0}) {
                    for (int K : {3, 15}) {
                        SurrogateConfig cfg;
                        cfg.iters = K;
                        const Vec start = Vec::Constant(1, lo + frac * (hi - lo));
                        const auto run = run_spc(inst.set, start, inst.theta_emp, box, cfg);
                        const auto rep = transfer_check(run, inst.dep, inst.set, inst.theta_emp, LB);
                        ++runs;
                        if (rep.condition_holds) {
                            ++satisfied;
                            if (!rep.deployment_decreased) ++counter;
                        }
                    }
                }
            }
        }
    }
    return {counter == 0, std::to_string(runs) + " runs, condition held in " + std::to_string(satisfied) +
                              ", counterexamples " + std::to_string(counter)};
}

Outcome misalignment_pattern() {
    auto cfg = load_bench_config(SPC_SOURCE_DIR "/configs/default.json");
    cfg.output_dir = (fs::temp_directory_path() / "spc_acceptance_bench").string();
    fs::remove_all(cfg.output_dir);
    const auto t0 = std::chrono::steady_clock::now();
    const auto res = run_bench(cfg);
    const double secs = seconds_since(t0);
    std::map<std::string, std::array<double, 3>> mean;  // rmse, cost, prediction mse
    std::map<std::string, int> count;
    for (const auto& r : res.rows) {
        auto& m = mean[r.method];
        m[0] += r.rmse;
        m[1] += r.cost;
        m[2] += r.prediction_mse;
        ++count[r.method];
    }
    for (auto& [k, m] : mean)
        for (double& v : m) v /= count[k];
    // ties count for TPC (DiffCtrl can stay exactly at the prediction fit)
    bool tpc_min_mse = true;
    for (const auto& [k, m] : mean)
        if (m[2] < mean["TPC"][2]) tpc_min_mse = false;
    const auto& tpc = mean["TPC"];
    const auto& f = mean["F-SPC"];
    const auto& u = mean["U-SPC"];
    const bool order = u[0] < f[0] && f[0] < tpc[0];
    const double rmse_red = 1.0 - u[0] / tpc[0], cost_red = 1.0 - u[1] / tpc[1];
    Outcome o;
    o.pass = !res.any_failed && tpc_min_mse && order && rmse_red >= 0.4 && cost_red >= 0.2 && secs <= 600.0;
    o.detail = std::string("TPC lowest prediction MSE ") + (tpc_min_mse ? "yes" : "no") + ", RMSE TPC " + fmt(tpc[0]) + " F-SPC " + fmt(f[0]) +
               " U-SPC " + fmt(u[0]) + ", U-SPC RMSE reduction " + fmt(100 * rmse_red) + "%, cost reduction " +
               fmt(100 * cost_red) + "%, " + fmt(secs) + " s";
    fs::remove_all(cfg.output_dir);
    return o;
}

Outcome envelope() {
    double worst_grad = 0.0, worst_total = 0.0;
    for (int seed = 0; seed < 3; ++seed) {
        const auto inst = make_synthetic_instance(model_zoo_ids()[seed], 40 + seed);
        SurrogateConfig cfg;
        cfg.iters = 5;
        for (auto variant : {Variant::Fixed, Variant::Updated}) {
            cfg.variant = variant;
            cfg.tau = 2;
            const auto run = variant == Variant::Fixed
                                 ? run_spc(inst.set, inst.theta_tpc, inst.theta_emp, inst.box, cfg)
                                 : run_updated_spc(inst.set, inst.theta_tpc, inst.theta_emp, inst.box, cfg);
            for (const auto& e : run.log) worst_grad = std::max(worst_grad, e.max_envelope);
        }
        std::mt19937_64 rng(seed);
        for (int i = 0; i < std::min(3, inst.set.size()); ++i) {
            const Vec th = testing::uniform_in(inst.box, rng);
            const auto rep = solve_optimal_control(inst.set, i, th, tight());
            const Vec partial = scenario_gradients(inst.set, i, rep.U, th).grad_theta;
            const Vec total = central_gradient(
                [&](const Vec& z) { return solve_optimal_control(inst.set, i, z, tight()).value; }, th, 1e-5);
            worst_total = std::max(worst_total, rel_err(partial, total));
        }
    }
    return {worst_grad <= 1e-9 && worst_total <= 1e-5,
            "max inner gradient " + fmt(worst_grad) + ", total vs partial rel err " + fmt(worst_total)};
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

Outcome determinism() {
    const auto root = fs::temp_directory_path() / "spc_acceptance_det";
    fs::remove_all(root);
    int files = 0, differing = 0;
    std::vector<std::string> dirs;
    for (const char* tag : {"a", "b"}) {
        BenchConfig cfg;
        cfg.seeds = {0};
        cfg.data.trajectories = 8;
        cfg.data.length = 10;
        cfg.episode_seconds = 4.0;
        cfg.spc_iters = 3;
        cfg.tau = 2;
        cfg.lipschitz_samples = 3;
        cfg.cwreg_lambdas = {0.1};
        cfg.output_dir = (root / tag).string();
        run_bench(cfg);

        const auto inst = make_synthetic_instance("double-integrator", 8);
        SurrogateConfig sc;
        sc.iters = 6;
        sc.tau = 3;
        write_run_csv(run_updated_spc(inst.set, inst.theta_tpc, inst.theta_emp, inst.box, sc),
                      (root / tag / "run.csv").string());
        write_grid_csv(grid_sweep(inst.dep, inst.set, inst.theta_emp, inst.box, 5), (root / tag / "grid.csv").string());
    }
    for (const auto& entry : fs::recursive_directory_iterator(root / "a")) {
        if (!entry.is_regular_file() || entry.path().extension() != ".csv") continue;
        const auto rel = fs::relative(entry.path(), root / "a");
        ++files;
        if (slurp(entry.path()) != slurp(root / "b" / rel)) ++differing;
    }
    fs::remove_all(root);
    return {files > 0 && differing == 0,
            std::to_string(files) + " CSV files compared, " + std::to_string(differing) + " differ"};
}

const std::vector<std::pair<std::string, Outcome (*)()>>& criteria() {
    static const std::vector<std::pair<std::string, Outcome (*)()>> all{
        {"gradient-suite", gradient_suite},
        {"implicit-jacobian", implicit_jacobian},
        {"descent-certificate", descent_certificate},
        {"decomposition-identity", decomposition_identity},
        {"transfer-implication", transfer_implication},
        {"misalignment-pattern", misalignment_pattern},
        {"envelope", envelope},
        {"determinism", determinism},
    };
    return all;
}

}  // namespace
}  // namespace spc

int main(int argc, char** argv) {
    std::string only;
    for (int k = 1; k < argc; ++k) {
        const std::string a = argv[k];
        if (a == "--only" && k + 1 < argc) {
            only = argv[++k];
        } else if (a == "--list") {
            for (const auto& [name, fn] : spc::criteria()) std::cout << name << "\n";
            return 0;
        } else {
            std::cerr << "usage: acceptance [--only <name>] [--list]\n";
            return 2;
        }
    }
    bool all_pass = true, matched = false;
    for (const auto& [name, fn] : spc::criteria()) {
        if (!only.empty() && only != name) continue;
        matched = true;
        spc::Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
        all_pass = all_pass && o.pass;
    }
    if (!matched) {
        std::cerr << "unknown criterion " << only << "\n";
        return 2;
    }
    return all_pass ? 0 : 1;
}
