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

#ifndef SPC_DYNAMICS_HPP
#define SPC_DYNAMICS_HPP

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "spc/types.hpp"

namespace spc {

using ConstRef = Eigen::Ref<const Vec>;
using OutRef = Eigen::Ref<Vec>;

// x_{t+1} = f(x_t, u_t; theta) + w_t. Trajectories are n x (T+1) matrices,
// control and disturbance sequences are m x T and n x T (one column per step).
struct ModelSpec {
    std::string id;
    int n = 0;
    int m = 0;
    int p = 0;
    std::function<void(ConstRef x, ConstRef u, ConstRef theta, OutRef out)> eval;
    std::function<void(ConstRef x, ConstRef u, ConstRef theta, Mat& A, Mat& B, Mat& C)> jacobians;
    Box box;
    Vec theta_nominal;
    std::vector<std::string> theta_names;

    Vec f(const Vec& x, const Vec& u, const Vec& theta) const;
};

struct StepJacobians {
    Mat A;
    Mat B;
    Mat C;
};

Mat rollout(const ModelSpec& model, const Vec& x0, const Mat& U, const Vec& theta, const Mat& W);

std::vector<StepJacobians> rollout_jacobians(const ModelSpec& model, const Mat& X, const Mat& U,
                                             const Vec& theta);

// Sensitivities of the stacked states x_1..x_T with respect to the stacked
// controls (nT x mT) and the parameters (nT x p).
struct RolloutSensitivity {
    Mat dX_dU;
    Mat dX_dtheta;
};

RolloutSensitivity rollout_sensitivity(const ModelSpec& model, const Mat& X, const Mat& U,
                                       const Vec& theta);

void check_dimensions(const ModelSpec& model, const Vec& x0, const Mat& U, const Vec& theta,
                      const Mat& W);

enum class LinearEntry { A, B };

struct MaskEntry {
    LinearEntry matrix;
    int row;
    int col;
};

ModelSpec make_linear_model(const Mat& A, const Mat& B, const std::vector<MaskEntry>& mask);

// f = theta * x + u.
ModelSpec make_scalar_model();

// position/velocity with theta = (velocity retention, control gain).
ModelSpec make_double_integrator_model(double dt = 0.1);

struct WindSpec {
    Eigen::Vector3d steady{0.35, -0.15, 0.0};
    Eigen::Vector3d amplitude{0.20, 0.25, 0.0};
    Eigen::Vector3d frequency{0.05, 0.08, 0.0};
    Eigen::Vector3d phase{0.0, 1.0471975511965976, 0.0};

    // Force in newtons at step index k.
    Eigen::Vector3d force(int k, double dt) const;
};

enum class ThetaLayout { Drag, DragWind };

// 3-D point mass, state (position, velocity), control is a force.
// Drag layout: theta = (c_x, c_y, c_z). DragWind adds a constant force bias (b_x, b_y, b_z).
ModelSpec make_pointmass_wind_model(double dt, double mass,
                                    ThetaLayout layout = ThetaLayout::DragWind);

// Simulator of the true point mass: linear plus quadratic drag and the wind force.
struct PointMassTruth {
    double dt = 0.02;
    double mass = 1.0;
    Eigen::Vector3d drag_linear{0.1, 0.1, 0.1};
    Eigen::Vector3d drag_quadratic{0.35, 0.35, 0.35};
    WindSpec wind;
    bool wind_enabled = true;

    Vec step(const Vec& x, const Vec& u, int k) const;
};

ModelSpec make_model(const std::string& id);

const std::vector<std::string>& model_zoo_ids();

}  // namespace spc

#endif
