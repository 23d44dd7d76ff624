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

#include "spc/dynamics.hpp"

#include <cmath>
#include <numbers>

namespace spc {

Vec ModelSpec::f(const Vec& x, const Vec& u, const Vec& theta) const {
    Vec out(n);
    eval(x, u, theta, out);
    return out;
}

void check_dimensions(const ModelSpec& model, const Vec& x0, const Mat& U, const Vec& theta,
                      const Mat& W) {
    if (x0.size() != model.n) throw ContractError("x0 has wrong dimension");
    if (U.rows() != model.m) throw ContractError("controls have wrong dimension");
    if (theta.size() != model.p) throw ContractError("theta has wrong dimension");
    if (W.rows() != model.n || W.cols() != U.cols())
        throw ContractError("disturbance sequence does not match the control horizon");
}

Mat rollout(const ModelSpec& model, const Vec& x0, const Mat& U, const Vec& theta, const Mat& W) {
    check_dimensions(model, x0, U, theta, W);
    const int T = static_cast<int>(U.cols());
    Mat X(model.n, T + 1);
    X.col(0) = x0;
    for (int t = 0; t < T; ++t) {
        model.eval(X.col(t), U.col(t), theta, X.col(t + 1));
        X.col(t + 1) += W.col(t);
        if (!X.col(t + 1).allFinite()) throw OverflowError(t);
    }
    return X;
}

std::vector<StepJacobians> rollout_jacobians(const ModelSpec& model, const Mat& X, const Mat& U,
                                             const Vec& theta) {
    if (X.cols() != U.cols() + 1) throw ContractError("trajectory length must be T+1");
    const int T = static_cast<int>(U.cols());
    std::vector<StepJacobians> out(T);
    for (int t = 0; t < T; ++t) {
        auto& J = out[t];
        J.A.resize(model.n, model.n);
        J.B.resize(model.n, model.m);
        J.C.resize(model.n, model.p);
        model.jacobians(X.col(t), U.col(t), theta, J.A, J.B, J.C);
    }
    return out;
}

RolloutSensitivity rollout_sensitivity(const ModelSpec& model, const Mat& X, const Mat& U,
                                       const Vec& theta) {
    const int n = model.n, m = model.m, p = model.p;
    const int T = static_cast<int>(U.cols());
    const auto jac = rollout_jacobians(model, X, U, theta);
    RolloutSensitivity s{Mat::Zero(n * T, m * T), Mat::Zero(n * T, p)};
    for (int t = 0; t < T; ++t) {
        // row block t holds d x_{t+1}
        if (t > 0) {
            s.dX_dU.block(n * t, 0, n, m * t) = jac[t].A * s.dX_dU.block(n * (t - 1), 0, n, m * t);
            s.dX_dtheta.middleRows(n * t, n) = jac[t].A * s.dX_dtheta.middleRows(n * (t - 1), n);
        }
        s.dX_dU.block(n * t, m * t, n, m) = jac[t].B;
        s.dX_dtheta.middleRows(n * t, n) += jac[t].C;
    }
    return s;
}

ModelSpec make_linear_model(const Mat& A, const Mat& B, const std::vector<MaskEntry>& mask) {
    if (A.rows() != A.cols() || B.rows() != A.rows()) throw ContractError("A and B are inconsistent");
    for (const auto& e : mask) {
        const Mat& M = e.matrix == LinearEntry::A ? A : B;
        if (e.row < 0 || e.col < 0 || e.row >= M.rows() || e.col >= M.cols())
            throw ContractError("mask index out of range");
    }
    ModelSpec s;
    s.id = "linear";
    s.n = static_cast<int>(A.rows());
    s.m = static_cast<int>(B.cols());
    s.p = static_cast<int>(mask.size());
    Vec nominal(s.p);
    for (int k = 0; k < s.p; ++k) {
        const auto& e = mask[k];
        nominal(k) = e.matrix == LinearEntry::A ? A(e.row, e.col) : B(e.row, e.col);
        s.theta_names.push_back(std::string(e.matrix == LinearEntry::A ? "A" : "B") +
                                std::to_string(e.row) + std::to_string(e.col));
    }
    auto substitute = [A, B, mask](ConstRef theta, Mat& As, Mat& Bs) {
        As = A;
        Bs = B;
        for (std::size_t k = 0; k < mask.size(); ++k) {
            const auto& e = mask[k];
            (e.matrix == LinearEntry::A ? As : Bs)(e.row, e.col) = theta(k);
        }
    };
    s.eval = [substitute](ConstRef x, ConstRef u, ConstRef theta, OutRef out) {
        Mat As, Bs;
        substitute(theta, As, Bs);
        out.noalias() = As * x + Bs * u;
    };
    s.jacobians = [substitute, mask](ConstRef x, ConstRef u, ConstRef theta, Mat& Aj, Mat& Bj,
                                     Mat& C) {
        substitute(theta, Aj, Bj);
        C.setZero(Aj.rows(), static_cast<Eigen::Index>(mask.size()));
        for (std::size_t k = 0; k < mask.size(); ++k) {
            const auto& e = mask[k];
            C(e.row, static_cast<Eigen::Index>(k)) = e.matrix == LinearEntry::A ? x(e.col) : u(e.col);
        }
    };
    s.theta_nominal = nominal;
    if (s.p > 0) s.box = Box(nominal.array() - 1.0, nominal.array() + 1.0);
    return s;
}

ModelSpec make_scalar_model() {
    ModelSpec s;
    s.id = "scalar";
    s.n = 1;
    s.m = 1;
    s.p = 1;
    s.eval = [](ConstRef x, ConstRef u, ConstRef theta, OutRef out) { out(0) = theta(0) * x(0) + u(0); };
    s.jacobians = [](ConstRef x, ConstRef, ConstRef theta, Mat& A, Mat& B, Mat& C) {
        A.resize(1, 1);
        B.resize(1, 1);
        C.resize(1, 1);
        A(0, 0) = theta(0);
        B(0, 0) = 1.0;
        C(0, 0) = x(0);
    };
    s.box = Box(Vec::Constant(1, -1.5), Vec::Constant(1, 1.5));
    s.theta_nominal = Vec::Constant(1, 0.9);
    s.theta_names = {"a"};
    return s;
}

ModelSpec make_double_integrator_model(double dt) {
    if (!(dt > 0)) throw ContractError("dt must be positive");
    Mat A(2, 2), B(2, 1);
    A << 1.0, dt, 0.0, 0.95;
    B << 0.0, dt;
    auto s = make_linear_model(A, B, {{LinearEntry::A, 1, 1}, {LinearEntry::B, 1, 0}});
    s.id = "double-integrator";
    s.theta_names = {"retention", "gain"};
    Vec lo(2), hi(2);
    lo << 0.5, 0.5 * dt;
    hi << 1.2, 2.0 * dt;
    s.box = Box(lo, hi);
    return s;
}

Eigen::Vector3d WindSpec::force(int k, double dt) const {
    const double t = k * dt;
    Eigen::Vector3d f;
    for (int a = 0; a < 3; ++a)
        f(a) = steady(a) + amplitude(a) * std::sin(2.0 * std::numbers::pi * frequency(a) * t + phase(a));
    return f;
}

ModelSpec make_pointmass_wind_model(double dt, double mass, ThetaLayout layout) {
    if (!(dt > 0)) throw ContractError("dt must be positive");
    if (!(mass > 0)) throw ContractError("mass must be positive");
    const bool with_wind = layout == ThetaLayout::DragWind;
    ModelSpec s;
    s.id = "pointmass-wind";
    s.n = 6;
    s.m = 3;
    s.p = with_wind ? 6 : 3;
    const double k = dt / mass;
    s.eval = [dt, k, with_wind](ConstRef x, ConstRef u, ConstRef theta, OutRef out) {
        for (int a = 0; a < 3; ++a) {
            double force = u(a) - theta(a) * x(3 + a);
            if (with_wind) force += theta(3 + a);
            out(a) = x(a) + dt * x(3 + a);
            out(3 + a) = x(3 + a) + k * force;
        }
    };
    s.jacobians = [dt, k, with_wind](ConstRef x, ConstRef, ConstRef theta, Mat& A, Mat& B, Mat& C) {
        A.setIdentity(6, 6);
        B.setZero(6, 3);
        C.setZero(6, with_wind ? 6 : 3);
        for (int a = 0; a < 3; ++a) {
            A(a, 3 + a) = dt;
            A(3 + a, 3 + a) = 1.0 - k * theta(a);
            B(3 + a, a) = k;
            C(3 + a, a) = -k * x(3 + a);
            if (with_wind) C(3 + a, 3 + a) = k;
        }
    };
    Vec lo(s.p), hi(s.p), nominal(s.p);
    lo.head(3).setZero();
    hi.head(3).setConstant(2.0);
    nominal.head(3).setConstant(0.3);
    s.theta_names = {"drag_x", "drag_y", "drag_z"};
    if (with_wind) {
        lo.tail(3).setConstant(-1.0);
        hi.tail(3).setConstant(1.0);
        nominal.tail(3).setZero();
        for (const char* nm : {"wind_x", "wind_y", "wind_z"}) s.theta_names.push_back(nm);
    }
    s.box = Box(lo, hi);
    s.theta_nominal = nominal;
    return s;
}

Vec PointMassTruth::step(const Vec& x, const Vec& u, int k) const {
    Vec next(6);
    const Eigen::Vector3d w = wind_enabled ? wind.force(k, dt) : Eigen::Vector3d::Zero();
    for (int a = 0; a < 3; ++a) {
        const double v = x(3 + a);
        const double force = u(a) - drag_linear(a) * v - drag_quadratic(a) * std::abs(v) * v + w(a);
        next(a) = x(a) + dt * v;
        next(3 + a) = v + dt / mass * force;
    }
    if (!next.allFinite()) throw OverflowError(k);
    return next;
}

ModelSpec make_model(const std::string& id) {
    if (id == "scalar") return make_scalar_model();
    if (id == "double-integrator") return make_double_integrator_model();
    if (id == "pointmass-wind") return make_pointmass_wind_model(0.02, 1.0);
    throw ContractError("unknown model id: " + id);
}

const std::vector<std::string>& model_zoo_ids() {
    static const std::vector<std::string> ids{"scalar", "double-integrator", "pointmass-wind"};
    return ids;
}

}  // namespace spc
