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

#include "spc/cost.hpp"

namespace spc {

namespace {

void check_symmetric_floor(const Mat& M, double floor, const char* name) {
    if (M.rows() != M.cols()) throw ContractError(std::string(name) + " must be square");
    if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + M.norm()))
        throw ContractError(std::string(name) + " must be symmetric");
    Eigen::SelfAdjointEigenSolver<Mat> es(M, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < floor)
        throw ContractError(std::string(name) + " fails the definiteness check");
}

}  // namespace

void CostMatrices::validate() const {
    check_symmetric_floor(Q, -1e-10, "Q");
    check_symmetric_floor(P, -1e-10, "P");
    check_symmetric_floor(R, 1e-10, "R");
    if (P.rows() != Q.rows()) throw ContractError("P and Q differ in size");
}

double trajectory_cost(const CostMatrices& cm, const Mat& X, const Mat& U) {
    const int T = static_cast<int>(U.cols());
    double J = 0.0;
    for (int t = 0; t < T; ++t)
        J += X.col(t).dot(cm.Q * X.col(t)) + U.col(t).dot(cm.R * U.col(t));
    J += X.col(T).dot(cm.P * X.col(T));
    return J;
}

double total_cost(const ModelSpec& model, const CostMatrices& cm, const Vec& x0, const Mat& U,
                  const Vec& theta, const Mat& W) {
    if (cm.Q.rows() != model.n || cm.R.rows() != model.m) throw ContractError("cost dimensions");
    return trajectory_cost(cm, rollout(model, x0, U, theta, W), U);
}

CostGradients cost_gradients(const ModelSpec& model, const CostMatrices& cm, const Vec& x0,
                             const Mat& U, const Vec& theta, const Mat& W) {
    if (cm.Q.rows() != model.n || cm.R.rows() != model.m) throw ContractError("cost dimensions");
    const Mat X = rollout(model, x0, U, theta, W);
    const int T = static_cast<int>(U.cols());
    CostGradients g;
    g.cost = trajectory_cost(cm, X, U);
    g.grad_U.resize(model.m * T);
    g.grad_theta = Vec::Zero(model.p);

    Mat A(model.n, model.n), B(model.n, model.m), C(model.n, model.p);
    Vec lambda = 2.0 * cm.P * X.col(T);
    Vec next(model.n);
    for (int t = T - 1; t >= 0; --t) {
        model.jacobians(X.col(t), U.col(t), theta, A, B, C);
        g.grad_U.segment(model.m * t, model.m).noalias() = 2.0 * cm.R * U.col(t) + B.transpose() * lambda;
        g.grad_theta.noalias() += C.transpose() * lambda;
        next.noalias() = 2.0 * cm.Q * X.col(t) + A.transpose() * lambda;
        lambda.swap(next);
    }
    return g;
}

}  // namespace spc
