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

#include <gtest/gtest.h>

#include "test_support.hpp"

namespace spc {
namespace {

Dataset scalar_dataset(double theta, int N, int T, std::mt19937_64& rng, double noise = 0.0) {
    const auto model = make_scalar_model();
    std::normal_distribution<double> nd(0.0, 1.0);
    Dataset data;
    data.dt = 1.0;
    for (int i = 0; i < N; ++i) {
        RecordedTrajectory tr;
        tr.U = testing::gaussian(1, T, rng);
        Mat W = testing::gaussian(1, T, rng, noise);
        tr.X = rollout(model, Vec::Constant(1, nd(rng)), tr.U, Vec::Constant(1, theta), W);
        data.trajectories.push_back(tr);
    }
    split_dataset(data, 3);
    return data;
}

Dataset single_transition(double x0, double u, double x1) {
    Dataset data;
    data.dt = 1.0;
    data.trajectories.push_back({Mat::Constant(1, 2, x0), Mat::Constant(1, 1, u)});
    data.trajectories[0].X(0, 1) = x1;
    data.train = {0};
    return data;
}

TEST(FitTpc, RecoversNoiselessParameter) {
    std::mt19937_64 rng(1);
    const auto data = scalar_dataset(0.7, 10, 8, rng);
    const auto model = make_scalar_model();
    EXPECT_NEAR(fit_tpc(data, model, model.box)(0), 0.7, 1e-8);
}

TEST(FitTpc, SingleTransitionAndActiveBound) {
    const auto model = make_scalar_model();
    const auto data = single_transition(1.0, 0.0, 0.5);
    EXPECT_NEAR(fit_tpc(data, model, model.box)(0), 0.5, 1e-10);
    const Box tight(Vec::Constant(1, 0.8), Vec::Constant(1, 1.0));
    EXPECT_DOUBLE_EQ(fit_tpc(data, model, tight)(0), 0.8);
}

TEST(FitTpc, RecoversDoubleIntegratorEntries) {
    std::mt19937_64 rng(2);
    const auto model = make_model("double-integrator");
    Vec truth(2);
    truth << 0.9, 0.12;
    Dataset data;
    for (int i = 0; i < 6; ++i) {
        const Mat U = testing::gaussian(1, 10, rng);
        data.trajectories.push_back({rollout(model, testing::gaussian(2, 1, rng), U, truth, Mat::Zero(2, 10)), U});
    }
    split_dataset(data, 1);
    EXPECT_LE((fit_tpc(data, model, model.box) - truth).norm(), 1e-7);
}

TEST(FitTpc, EmptyParameterIsDegenerate) {
    const auto model = make_linear_model(Mat::Ones(1, 1), Mat::Ones(1, 1), {});
    const auto data = single_transition(1.0, 0.0, 1.0);
    EXPECT_THROW(fit_tpc(data, model, model.box), DegenerateError);
}

TEST(Disturbances, ScalarResidual) {
    const auto model = make_scalar_model();
    const auto data = single_transition(1.0, 0.0, 0.6);
    const auto W = estimate_disturbances(data, model, Vec::Constant(1, 0.5));
    ASSERT_EQ(W.size(), 1u);
    EXPECT_NEAR(W[0](0, 0), 0.1, 1e-15);
}

TEST(Disturbances, PointMassResidualIsTheWind) {
    PointMassTruth truth;
    truth.drag_quadratic.setZero();
    const auto model = make_pointmass_wind_model(truth.dt, truth.mass, ThetaLayout::Drag);
    std::mt19937_64 rng(3);
    const int T = 40;
    RecordedTrajectory tr;
    tr.U = testing::gaussian(3, T, rng);
    tr.X.resize(6, T + 1);
    tr.X.col(0) = testing::gaussian(6, 1, rng);
    for (int t = 0; t < T; ++t) tr.X.col(t + 1) = truth.step(tr.X.col(t), tr.U.col(t), t);
    Dataset data;
    data.dt = truth.dt;
    data.trajectories.push_back(tr);
    data.train = {0};
    const auto W = estimate_disturbances(data, model, truth.drag_linear);
    for (int t = 0; t < T; ++t) {
        EXPECT_LE(W[0].col(t).head(3).norm(), 1e-12);
        EXPECT_LE((W[0].col(t).tail(3) - truth.dt / truth.mass * truth.wind.force(t, truth.dt)).norm(), 1e-3);
    }
}

TEST(Disturbances, ReplayReproducesRecordedStates) {
    std::mt19937_64 rng(4);
    const auto data = scalar_dataset(0.95, 6, 7, rng, 0.2);
    const auto model = make_scalar_model();
    const Vec th0 = Vec::Constant(1, 0.4);
    const auto W = estimate_disturbances(data, model, th0);
    for (std::size_t k = 0; k < data.train.size(); ++k) {
        const auto& tr = data.trajectories[data.train[k]];
        EXPECT_LE((rollout(model, tr.X.col(0), tr.U, th0, W[k]) - tr.X).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(Counterfactual, RecordedControlsAtTheta0GiveRecordedStates) {
    std::mt19937_64 rng(5);
    const auto data = scalar_dataset(0.8, 5, 6, rng, 0.3);
    const auto model = make_scalar_model();
    const Vec th0 = Vec::Constant(1, 0.5);
    const auto set = make_scenario_set(data, model, CostMatrices::identity(1, 1), th0);
    for (int i = 0; i < set.size(); ++i) {
        const auto& tr = data.trajectories[data.train[i]];
        const Vec U = Eigen::Map<const Vec>(tr.U.data(), tr.U.size());
        EXPECT_LE((counterfactual_rollout(set, i, th0, U) - tr.X).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_EQ(set.scenarios[i].id, data.train[i]);
    }
}

TEST(ThetaEmp, SelfConsistentOnIdentifiableModels) {
    std::mt19937_64 rng(6);
    const auto model = testing::make_nonlinear_model();
    const auto set = testing::random_set(model, 4, 8, rng, 0.1);
    for (int trial = 0; trial < 3; ++trial) {
        const Vec th = testing::uniform_in(model.box, rng);
        EXPECT_LE((build_theta_emp(set, th, model.box) - th).norm(), 1e-6);
    }
}

TEST(ThetaEmp, ResidualsStayFixed) {
    std::mt19937_64 rng(7);
    const auto model = make_scalar_model();
    const auto set = testing::random_set(model, 3, 5, rng, 0.2);
    std::vector<Mat> rollouts, residuals;
    std::vector<Vec> controls;
    const Vec th = Vec::Constant(1, 0.3);
    for (int i = 0; i < set.size(); ++i) {
        const Vec U = testing::gaussian(5, 1, rng);
        rollouts.push_back(counterfactual_rollout(set, i, th, U));
        controls.push_back(U);
        residuals.push_back(set.scenarios[i].W);
    }
    EXPECT_NEAR(fit_theta_emp(rollouts, controls, residuals, model, model.box)(0), 0.3, 1e-8);
    residuals.pop_back();
    EXPECT_THROW(fit_theta_emp(rollouts, controls, residuals, model, model.box), ContractError);
}

TEST(PredictionMse, HandValue) {
    const auto model = make_scalar_model();
    auto data = single_transition(1.0, 0.0, 0.6);
    data.test = {0};
    EXPECT_NEAR(prediction_mse(data, Split::Test, model, Vec::Constant(1, 0.5)), 0.01, 1e-15);
    Vec g;
    Mat H;
    prediction_loss(data, {0}, model, Vec::Constant(1, 0.5), &g, &H);
    EXPECT_NEAR(g(0), -0.2, 1e-14);
    EXPECT_NEAR(H(0, 0), 2.0, 1e-14);
}

TEST(Split, PartitionsAllTrajectories) {
    std::mt19937_64 rng(8);
    auto data = scalar_dataset(0.5, 20, 3, rng);
    split_dataset(data, 42);
    EXPECT_EQ(data.train.size(), 16u);
    EXPECT_EQ(data.test.size(), 4u);
    std::vector<int> all = data.train;
    all.insert(all.end(), data.test.begin(), data.test.end());
    std::sort(all.begin(), all.end());
    for (int k = 0; k < 20; ++k) EXPECT_EQ(all[k], k);
    auto again = data;
    split_dataset(again, 42);
    EXPECT_EQ(again.train, data.train);
}

TEST(DatasetIo, RoundTripIsExact) {
    std::mt19937_64 rng(9);
    const auto model = make_model("double-integrator");
    Dataset data;
    data.dt = 0.1;
    data.seed = 9;
    for (int i = 0; i < 4; ++i) {
        const Mat U = testing::gaussian(1, 6, rng);
        data.trajectories.push_back({rollout(model, testing::gaussian(2, 1, rng), U, model.theta_nominal,
                                             testing::gaussian(2, 6, rng, 0.1)),
                                     U});
    }
    split_dataset(data, 2);
    const auto dir = std::filesystem::temp_directory_path() / "spc_dataset_roundtrip";
    std::filesystem::remove_all(dir);
    save_dataset(data, model, dir.string());
    EXPECT_TRUE(std::filesystem::exists(dir / "manifest.json"));
    EXPECT_TRUE(std::filesystem::exists(dir / "traj_0000.csv"));
    const auto back = load_dataset(dir.string());
    ASSERT_EQ(back.trajectories.size(), 4u);
    for (int i = 0; i < 4; ++i) {
        EXPECT_EQ(back.trajectories[i].X, data.trajectories[i].X);
        EXPECT_EQ(back.trajectories[i].U, data.trajectories[i].U);
    }
    EXPECT_EQ(back.train, data.train);
    EXPECT_EQ(back.test, data.test);
    EXPECT_DOUBLE_EQ(back.dt, 0.1);
    std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace spc
