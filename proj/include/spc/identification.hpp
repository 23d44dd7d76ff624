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

#ifndef SPC_IDENTIFICATION_HPP
#define SPC_IDENTIFICATION_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "spc/box_minimize.hpp"
#include "spc/scenario_control.hpp"

namespace spc {

struct RecordedTrajectory {
    Mat X;  // n x (T+1)
    Mat U;  // m x T
};

struct Dataset {
    std::vector<RecordedTrajectory> trajectories;
    std::vector<int> train;
    std::vector<int> test;
    double dt = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
};

enum class Split { Train, Test };

// Random 80/20 partition by trajectory (at least one trajectory on each side when possible).
void split_dataset(Dataset& data, std::uint64_t seed, double train_fraction = 0.8);

// Least-squares prediction fit over the training split. Minimizes the mean
// one-step squared error, which has the same minimizer as the sum.
Vec fit_tpc(const Dataset& data, const ModelSpec& model, const Box& box,
            const BoxMinimizeConfig& cfg = {});

// w_t = x_{t+1} - f(x_t, u_t; theta0) for each training trajectory.
std::vector<Mat> estimate_disturbances(const Dataset& data, const ModelSpec& model, const Vec& theta0);

// Scenarios (x0_i, W_i) from the training split; all trajectories must share T.
ScenarioSet make_scenario_set(const Dataset& data, const ModelSpec& model, const CostMatrices& cost,
                              const Vec& theta0);

// x_hat_{t+1} = f(x_hat_t, u*_t; theta) + w_{t,i}
Mat counterfactual_rollout(const ScenarioSet& set, int i, const Vec& theta, const Vec& Ustar);

// Auxiliary fit on counterfactual rollouts with the residuals subtracted back.
Vec fit_theta_emp(const std::vector<Mat>& rollouts, const std::vector<Vec>& controls,
                  const std::vector<Mat>& residuals, const ModelSpec& model, const Box& box,
                  const BoxMinimizeConfig& cfg = {}, const Vec* start = nullptr);

// Whole pipeline at theta: solve U_i*(theta), roll out counterfactually, fit.
Vec build_theta_emp(const ScenarioSet& set, const Vec& theta, const Box& box,
                    const SolverConfig& solver = {}, const BoxMinimizeConfig& cfg = {},
                    std::vector<Vec>* warm = nullptr);

double prediction_mse(const Dataset& data, Split split, const ModelSpec& model, const Vec& theta);

// Mean one-step squared error over the given trajectories, with gradient and Gauss-Newton curvature.
double prediction_loss(const Dataset& data, const std::vector<int>& idx, const ModelSpec& model,
                       const Vec& theta, Vec* grad = nullptr, Mat* curvature = nullptr);

// One CSV per trajectory (t, x..., u...) and manifest.json.
void save_dataset(const Dataset& data, const ModelSpec& model, const std::string& dir);
Dataset load_dataset(const std::string& dir);

}  // namespace spc

#endif
