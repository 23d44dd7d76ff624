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

#ifndef SPC_BENCH_HPP
#define SPC_BENCH_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "spc/diagnostics.hpp"

namespace spc {

struct ReferenceSpec {
    double radius = 2.5;
    double sway = 1.0;
    double depth = 2.5;
    double figure8_x = 2.5;
    double figure8_y = 1.25;
    std::vector<double> phase_seconds{8.0, 8.0, 8.0};
};

struct Reference {
    Mat position;  // 3 x S
    Mat velocity;  // 3 x S
    int samples() const { return static_cast<int>(position.cols()); }
};

struct DataCollectionSpec {
    int trajectories = 20;
    int length = 25;
    double kp = 3.0;
    double kd = 2.5;
    double control_noise = 0.6;
    double setpoint_range = 1.0;
    double train_fraction = 0.8;
};

struct BenchConfig {
    std::string model_id = "pointmass-wind";
    ReferenceSpec reference;
    WindSpec wind;
    int horizon = 50;
    double dt = 0.02;
    double episode_seconds = 24.0;
    std::vector<std::string> methods{"TPC", "CW-Reg", "DiffCtrl", "F-SPC", "U-SPC"};
    std::vector<std::uint64_t> seeds{0, 1, 2};
    std::vector<double> cwreg_lambdas{0.01, 0.1, 1.0};
    std::string output_dir;

    double mass = 1.0;
    Eigen::Vector3d drag_linear{0.1, 0.1, 0.1};
    Eigen::Vector3d drag_quadratic{0.35, 0.35, 0.35};
    DataCollectionSpec data;

    double q_position = 10.0;
    double q_velocity = 1.0;
    double r_control = 0.1;

    int spc_iters = 40;
    int tau = 10;
    double eta = 0.0;  // 0 selects 1 / L_hat
    int lipschitz_samples = 6;
    bool theta_emp_from_tpc = false;

    void validate() const;
};

BenchConfig bench_config_from_json(const nlohmann::json& j);
nlohmann::json bench_config_to_json(const BenchConfig& cfg);
BenchConfig load_bench_config(const std::string& path);

Reference generate_reference(const BenchConfig& cfg);

// Position and velocity of the reference at time t (seconds).
void reference_at(const ReferenceSpec& spec, double t, Eigen::Vector3d& pos, Eigen::Vector3d& vel);

PointMassTruth make_truth(const BenchConfig& cfg);

Dataset generate_dataset(const BenchConfig& cfg, std::uint64_t seed);

struct ClosedLoopResult {
    Mat X;  // 6 x S
    Mat U;  // 3 x (S-1)
    double rmse = 0.0;
    double cost = 0.0;
    double effort = 0.0;
};

// Receding-horizon tracking MPC in error coordinates on the true system.
ClosedLoopResult closed_loop_rollout(const PointMassTruth& truth, const ModelSpec& model,
                                     const Vec& controller_theta, const Reference& ref,
                                     const CostMatrices& cost, int horizon);

Vec run_baseline_cwreg(const Dataset& data, const ModelSpec& model, const Box& box, double lambda,
                       const ScenarioSet& set, const BoxMinimizeConfig& cfg = {});

// Projected gradient on (1/N) sum_i F_i(U_i*(theta), theta_tpc), differentiated through U_i*.
struct DiffCtrlResult {
    Vec theta;
    int iterations = 0;
    double final_gradient_norm = 0.0;
};

DiffCtrlResult run_baseline_diffctrl(const ScenarioSet& set, const Vec& theta_tpc, const Box& box,
                                     double eta, int iters, const SolverConfig& solver = {});

struct MetricsRow {
    std::string method;
    std::uint64_t seed = 0;
    std::string status = "ok";
    double rmse = 0.0;
    double cost = 0.0;
    double effort = 0.0;
    double prediction_mse = 0.0;
    double train_prediction_mse = 0.0;
    double lambda = 0.0;
    Vec theta;
};

struct BenchResult {
    std::vector<MetricsRow> rows;
    nlohmann::json summary;
    bool any_failed = false;
    double seconds = 0.0;
};

// Writes metrics.csv, summary.json and trajectories/ when cfg.output_dir is set.
BenchResult run_bench(const BenchConfig& cfg);

CostMatrices bench_cost(const BenchConfig& cfg);

std::vector<MetricsRow> read_metrics_csv(const std::string& path);

// Aggregate table (mean and std per method) rendered as markdown.
std::string bench_report(const std::vector<MetricsRow>& rows);

nlohmann::json summarize(const std::vector<MetricsRow>& rows);

}  // namespace spc

#endif
