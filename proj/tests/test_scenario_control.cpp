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

#include <gtest/gtest.h>

#include "test_support.hpp"

namespace spc {
namespace {

using testing::central_gradient;
using testing::central_jacobian;
using testing::rel_err;

TEST(ScenarioObjective, HandExamples) {
    const auto one = testing::scalar_instance({0.0});
    EXPECT_DOUBLE_EQ(scenario_objective(one, 0, Vec::Zero(1), Vec::Ones(1)),
                     total_cost(one.model, one.cost, Vec::Ones(1), Mat::Zero(1, 1), Vec::Ones(1), Mat::Zero(1, 1)));
    const auto two = testing::scalar_instance({0.0, 1.0});
    EXPECT_DOUBLE_EQ(scenario_objective(two, 0, Vec::Zero(1), Vec::Ones(1)), 3.5);
}

TEST(ScenarioObjective, SymmetricDisturbances) {
    // from the origin with zero controls, w and -w cost the same on a linear model
    std::mt19937_64 rng(1);
    auto set = testing::random_set(make_model("double-integrator"), 1, 5, rng);
    const Mat W = set.scenarios[0].W;
    set.scenarios.push_back({Vec::Zero(2), -W, 1});
    const Vec th = set.model.theta_nominal;
    const double a = total_cost(set.model, set.cost, Vec::Zero(2), Mat::Zero(1, 5), th, W);
    EXPECT_NEAR(scenario_objective(set, Vec::Zero(2), Vec::Zero(5), th), a, 1e-14);
}

TEST(ScenarioGradients, SingleScenarioEqualsCostGradients) {
    std::mt19937_64 rng(2);
    const auto set = testing::random_set(make_model("pointmass-wind"), 1, 4, rng);
    const Vec U = testing::gaussian(12, 1, rng), th = set.model.theta_nominal;
    const auto a = scenario_gradients(set, 0, U, th);
    const auto b = cost_gradients(set.model, set.cost, set.scenarios[0].x0, as_controls(U, 3), th, set.scenarios[0].W);
    EXPECT_EQ(a.grad_U, b.grad_U);
    EXPECT_EQ(a.grad_theta, b.grad_theta);
}

TEST(ScenarioGradients, MatchFiniteDifferences) {
    std::mt19937_64 rng(3);
    for (const auto& model : {make_model("double-integrator"), make_model("pointmass-wind"), testing::make_nonlinear_model()}) {
        for (int trial = 0; trial < 10; ++trial) {
            const auto set = testing::random_set(model, 3, 5, rng);
            const Vec U = testing::gaussian(set.num_controls(), 1, rng);
            const Vec th = testing::uniform_in(model.box, rng);
            const auto g = scenario_gradients(set, 1, U, th);
            const Vec fdU = central_gradient([&](const Vec& z) { return scenario_objective(set, 1, z, th); }, U, 1e-6);
            const Vec fdT = central_gradient([&](const Vec& z) { return scenario_objective(set, 1, U, z); }, th, 1e-6);
            EXPECT_LE(rel_err(g.grad_U, fdU), 1e-6);
            EXPECT_LE(rel_err(g.grad_theta, fdT), 1e-6);
        }
    }
}

TEST(Solve, ScalarAnalyticMinimizers) {
    const auto set = testing::scalar_instance();
    const auto r1 = solve_optimal_control(set, 0, Vec::Ones(1));
    EXPECT_NEAR(r1.U(0), -0.5, 1e-9);
    EXPECT_LE(r1.grad_norm, 1e-9);
    EXPECT_NEAR(r1.value, 1.5, 1e-12);
    const auto r0 = solve_optimal_control(set, 0, Vec::Zero(1));
    EXPECT_NEAR(r0.U(0), 0.0, 1e-9);
}

TEST(Solve, LinearModelMatchesBatchLeastSquares) {
    std::mt19937_64 rng(4);
    for (const auto& model : {make_model("double-integrator"), make_model("pointmass-wind"), make_model("scalar")}) {
        const auto set = testing::random_set(model, 4, 12, rng);
        const Vec th = testing::uniform_in(model.box, rng);
        for (int i = 0; i < set.size(); ++i) {
            const auto rep = solve_optimal_control(set, i, th);
            const Vec ref = testing::batch_least_squares(set, set.scenarios[i].x0, th);
            EXPECT_LE((rep.U - ref).cwiseAbs().maxCoeff(), 1e-8) << model.id;
        }
    }
}

TEST(Solve, UniqueFromRandomWarmStarts) {
    std::mt19937_64 rng(5);
    const auto set = testing::random_set(testing::make_nonlinear_model(), 3, 8, rng);
    const Vec th = set.model.theta_nominal;
    const auto ref = solve_optimal_control(set, 0, th);
    for (int k = 0; k < 10; ++k) {
        const Vec warm = testing::gaussian(set.num_controls(), 1, rng, 2.0);
        const auto rep = solve_optimal_control(set, 0, th, {}, &warm);
        EXPECT_LE((rep.U - ref.U).cwiseAbs().maxCoeff(), 1e-7);
    }
}

TEST(Solve, NonConvergenceCarriesBestIterate) {
    const auto set = testing::scalar_instance();
    SolverConfig cfg;
    cfg.max_iters = 0;
    try {
        solve_optimal_control(set, 0, Vec::Ones(1), cfg);
        FAIL() << "expected nonconvergence";
    } catch (const NonConvergenceError& e) {
        EXPECT_EQ(e.best().size(), 1);
        EXPECT_GT(e.residual(), 1e-9);
    }
}

TEST(OptimizerHessians, ScalarInstance) {
    const auto set = testing::scalar_instance();
    const auto rep = solve_optimal_control(set, 0, Vec::Ones(1));
    const auto H = optimizer_hessians(set, 0, rep.U, Vec::Ones(1));
    EXPECT_NEAR(H.H_UU(0, 0), 4.0, 1e-6);
    const Mat DU = optimizer_jacobian(H);
    EXPECT_NEAR(DU(0, 0), -0.5, 1e-6);
    for (double th : {-0.7, 0.2, 1.3}) {
        const auto r = solve_optimal_control(set, 0, Vec::Constant(1, th));
        EXPECT_NEAR(optimizer_jacobian(set, 0, r.U, Vec::Constant(1, th))(0, 0), -0.5, 1e-6);
    }
}

TEST(OptimizerHessians, LinearModelMatchesQuadraticAssembly) {
    std::mt19937_64 rng(6);
    const auto set = testing::random_set(make_model("double-integrator"), 2, 6, rng);
    const Vec th = set.model.theta_nominal;
    const auto rep = solve_optimal_control(set, 0, th);
    const auto H = optimizer_hessians(set, 0, rep.U, th);
    // dense assembly: 2 (Su' Qbar Su + Rbar)
    const int n = 2, T = 6;
    Mat A(2, 2), B(2, 1), C(2, 2);
    set.model.jacobians(Vec::Zero(2), Vec::Zero(1), th, A, B, C);
    Mat Su = Mat::Zero(n * (T + 1), T);
    for (int t = 1; t <= T; ++t) {
        Su.middleRows(n * t, n) = A * Su.middleRows(n * (t - 1), n);
        Su.block(n * t, t - 1, n, 1) = B;
    }
    const Mat ref = 2.0 * (Su.transpose() * Su + Mat::Identity(T, T));
    EXPECT_LE(rel_err(H.H_UU, ref), 1e-6);
    EXPECT_EQ(H.H_UU, H.H_UU.transpose());
}

TEST(OptimizerHessians, ThetaIndependentModel) {
    std::mt19937_64 rng(7);
    const auto set = testing::random_set(testing::make_theta_free_model(), 2, 4, rng);
    const auto rep = solve_optimal_control(set, 0, Vec::Zero(1));
    const auto H = optimizer_hessians(set, 0, rep.U, Vec::Zero(1));
    EXPECT_EQ(H.H_Utheta.norm(), 0.0);
    EXPECT_EQ(optimizer_jacobian(H).norm(), 0.0);
}

TEST(OptimizerHessians, FloorViolationIsAConvexityError) {
    const auto set = testing::scalar_instance();
    EXPECT_THROW(optimizer_hessians(set, 0, Vec::Zero(1), Vec::Ones(1), 10.0), ConvexityError);
    OptimizerHessians bad{Mat::Constant(1, 1, -1.0), Mat::Ones(1, 1)};
    EXPECT_THROW(optimizer_jacobian(bad), ConvexityError);
}

TEST(OptimizerJacobian, MatchesResolveOracle) {
    std::mt19937_64 rng(8);
    SolverConfig tight;
    tight.tol = 1e-12;
    for (const auto& model : {testing::make_nonlinear_model(), make_model("pointmass-wind"), make_model("double-integrator")}) {
        const auto set = testing::random_set(model, 3, 6, rng);
        const Vec th = testing::uniform_in(model.box, rng);
        const auto rep = solve_optimal_control(set, 0, th, tight);
        const Mat DU = optimizer_jacobian(set, 0, rep.U, th);
        const Mat fd = central_jacobian([&](const Vec& z) { return solve_optimal_control(set, 0, z, tight).U; }, th, 1e-5);
        EXPECT_LE(rel_err(DU, fd), 1e-4) << model.id;
    }
}

TEST(Envelope, TotalDerivativeEqualsPartial) {
    std::mt19937_64 rng(9);
    SolverConfig tight;
    tight.tol = 1e-12;
    for (const auto& model : {testing::make_nonlinear_model(), make_model("pointmass-wind")}) {
        const auto set = testing::random_set(model, 3, 6, rng);
        const Vec th = testing::uniform_in(model.box, rng);
        const auto rep = solve_optimal_control(set, 1, th, tight);
        const Vec partial = scenario_gradients(set, 1, rep.U, th).grad_theta;
        const Vec total = central_gradient(
            [&](const Vec& z) { return solve_optimal_control(set, 1, z, tight).value; }, th, 1e-5);
        EXPECT_LE(rel_err(partial, total), 1e-5) << model.id;
    }
}

}  // namespace
}  // namespace spc
