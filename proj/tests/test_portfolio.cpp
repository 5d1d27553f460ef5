#include <cmath>

#include <gtest/gtest.h>

#include "ranklab/portfolio.hpp"
#include "ranklab/rank_transform.hpp"
#include "ranklab/sde_engine.hpp"

using namespace ranklab;

namespace {

// Smooth log prices that never cross: X_i(t) = a_i + b_i sin(t) + c_i t.
PathMatrix smooth_logs(std::size_t steps) {
    const auto t = build_grid(1.0, steps).points();
    PathMatrix out(3, t.size());
    out.row(0) = (0.8 + 0.3 * t.array().sin() + 0.1 * t.array()).transpose();
    out.row(1) = (0.2 - 0.2 * t.array().sin() + 0.3 * t.array()).transpose();
    out.row(2) = (-0.5 + 0.1 * t.array().sin() - 0.2 * t.array()).transpose();
    return out;
}

Eigen::VectorXd finite_difference(const GeneratingFunction& S, const Eigen::VectorXd& x) {
    Eigen::VectorXd out(x.size());
    const double h = 1e-6;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        Eigen::VectorXd up = x, down = x;
        up[i] += h;
        down[i] -= h;
        out[i] = (S.value(up) - S.value(down)) / (2.0 * h);
    }
    return out;
}

}  // namespace

TEST(GeneratingFunction, GradientsMatchFiniteDifferences) {
    const Eigen::Vector3d x(0.5, 0.3, 0.2);
    for (const auto& S : {GeneratingFunction::entropy(), GeneratingFunction::diversity(0.5),
                          GeneratingFunction::geometric_mean(), GeneratingFunction::constant(2.0)}) {
        EXPECT_LT((S.gradient(x) - finite_difference(S, x)).cwiseAbs().maxCoeff(), 1e-6) << S.name();
    }
}

TEST(GeneratingFunction, Values) {
    const Eigen::Vector2d half(0.5, 0.5);
    EXPECT_NEAR(GeneratingFunction::entropy().value(half), std::log(2.0), 1e-15);
    EXPECT_NEAR(GeneratingFunction::geometric_mean().value(half), 0.5, 1e-15);
    EXPECT_NEAR(GeneratingFunction::diversity(0.5).value(half), 2.0, 1e-14);
    EXPECT_EQ(GeneratingFunction::entropy().value(Eigen::Vector2d(1.0, 0.0)), 0.0);
    EXPECT_EQ(GeneratingFunction::geometric_mean().value(Eigen::Vector2d(1.0, 0.0)), 0.0);
}

TEST(GeneratingFunction, InteriorGuard) {
    const Eigen::Vector3d edge(1.0 - 1e-13, 1e-13, 0.0);
    EXPECT_THROW(GeneratingFunction::entropy().gradient(edge), NumericError);
    EXPECT_THROW(GeneratingFunction::geometric_mean().gradient(edge), NumericError);
    EXPECT_THROW(GeneratingFunction::diversity(0.5).value(edge), NumericError);
}

TEST(GeneratingFunction, ByName) {
    EXPECT_EQ(GeneratingFunction::by_name("diversity", {{"p", 0.3}}).parameters().at("p"), 0.3);
    EXPECT_EQ(GeneratingFunction::by_name("entropy", {}).name(), "entropy");
    EXPECT_THROW(GeneratingFunction::by_name("cubic", {}), ValidationError);
    EXPECT_THROW(GeneratingFunction::diversity(1.0), ValidationError);
    EXPECT_THROW(GeneratingFunction::constant(0.0), ValidationError);
}

TEST(MarketWeights, Softmax) {
    PathMatrix logs(3, 2);
    logs << 0.0, 1000.0,
            std::log(2.0), 1000.0,
            std::log(5.0), 0.0;
    const PathMatrix mu = market_weights_path(logs);
    EXPECT_NEAR(mu(0, 0), 0.125, 1e-15);
    EXPECT_NEAR(mu(1, 0), 0.25, 1e-15);
    EXPECT_NEAR(mu(2, 0), 0.625, 1e-15);
    EXPECT_NEAR(mu(0, 1), 0.5, 1e-15);
    EXPECT_EQ(mu(2, 1), 0.0);
}

TEST(GeneratedWeights, WorkedExample) {
    // Entropy at mu = (0.5, 0.25, 0.25): D log S = (-log mu - 1) / S.
    PathMatrix logs(3, 1);
    logs << std::log(0.25), std::log(0.5), std::log(0.25);
    const PathMatrix mu = market_weights_path(logs);
    const auto frame = ranked_path(logs).frame;
    const PathMatrix pi = generated_weights_path(mu, frame, GeneratingFunction::entropy());
    const double s = 1.5 * std::log(2.0);
    // pi_i = -mu_i log mu_i / S for entropy.
    EXPECT_NEAR(pi(1, 0), 0.5 * std::log(2.0) / s, 1e-14);
    EXPECT_NEAR(pi(0, 0), 0.25 * std::log(4.0) / s, 1e-14);
    EXPECT_NEAR(pi(2, 0), 0.25 * std::log(4.0) / s, 1e-14);
}

TEST(GeneratedWeights, ConstantIsMarketAndGeometricMeanIsEqual) {
    const auto ens = simulate_atlas({4, 0.1, 0.2, {}}, build_grid(1.0, 200), RngSpec{5}, 3);
    const auto mu = market_weights(ens);
    const auto frames = ranked_ensemble(ens).frames;
    const auto constant = generated_weights(mu, frames, GeneratingFunction::constant(3.0));
    const auto equal = generated_weights(mu, frames, GeneratingFunction::geometric_mean());
    for (std::size_t p = 0; p < 3; ++p) {
        EXPECT_TRUE(constant.path(p) == mu.path(p));
        EXPECT_LT((equal.path(p).array() - 0.25).abs().maxCoeff(), 1e-14);
    }
    EXPECT_LT(constant.max_normalization_error(), 1e-14);
}

TEST(GeneratedWeights, DiversityNearOneApproachesMarket) {
    const auto ens = simulate_atlas({4, 0.1, 0.2, {}}, build_grid(1.0, 200), RngSpec{5}, 2);
    const auto mu = market_weights(ens);
    const auto pi = generated_weights(mu, ranked_ensemble(ens).frames, GeneratingFunction::diversity(0.999));
    for (std::size_t p = 0; p < 2; ++p) EXPECT_LT((pi.path(p) - mu.path(p)).cwiseAbs().maxCoeff(), 1e-2);
    EXPECT_LT(pi.max_normalization_error(), 1e-12);
}

TEST(GeneratedWeights, PermutationEquivariant) {
    const PathMatrix logs = simulate_atlas({4, 0.1, 0.2, {}}, build_grid(1.0, 100), RngSpec{7}, 1).path(0);
    const Eigen::Vector4i perm(2, 0, 3, 1);  // new row r holds old asset perm[r]
    PathMatrix permuted(4, logs.cols());
    for (int r = 0; r < 4; ++r) permuted.row(r) = logs.row(perm[r]);
    const auto S = GeneratingFunction::entropy();
    const PathMatrix a = generated_weights_path(market_weights_path(logs), ranked_path(logs).frame, S);
    const PathMatrix b =
        generated_weights_path(market_weights_path(permuted), ranked_path(permuted).frame, S);
    for (int r = 0; r < 4; ++r) EXPECT_LT((b.row(r) - a.row(perm[r])).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(GeneratedWeights, ErrorCarriesTimeIndexAndPath) {
    PathMatrix logs(2, 3);
    logs << 0.0, 0.0, 0.0,
            0.0, 0.0, -100.0;
    const PathEnsemble ens(build_grid(1.0, 2), {logs, logs});
    const auto mu = market_weights(ens);
    try {
        generated_weights(mu, ranked_ensemble(ens).frames, GeneratingFunction::entropy());
        FAIL() << "expected NumericError";
    } catch (const NumericError& e) {
        EXPECT_EQ(e.path(), std::optional<std::size_t>(0));
        EXPECT_EQ(e.time_index(), std::optional<std::size_t>(2));
    }
}

TEST(RelativeWealth, MarketPortfolioIsZero) {
    const auto ens = simulate_atlas({3, 0.1, 0.2, {}}, build_grid(1.0, 500), RngSpec{8}, 2);
    const auto mu = market_weights(ens);
    const auto rel = relative_wealth(mu, ens);
    for (const auto& r : rel) EXPECT_LT(r.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(RelativeWealth, HandComputedExample) {
    // X = (1, 1) -> (1.5, 1): holding only asset 0 earns 1.5 against a market gain of 1.25.
    PathMatrix logs(2, 2);
    logs << 0.0, std::log(1.5),
            0.0, 0.0;
    PathMatrix pi(2, 2);
    pi << 1.0, 1.0,
          0.0, 0.0;
    const Series r = relative_wealth_path(pi, logs);
    EXPECT_NEAR(r[1], std::log(1.5 / 1.25), 1e-15);
}

TEST(RelativeWealth, SingleAssetAndShortingFailure) {
    PathMatrix one(1, 3);
    one << 0.0, 0.4, -0.2;
    EXPECT_LT(relative_wealth_path(PathMatrix::Ones(1, 3), one).cwiseAbs().maxCoeff(), 1e-15);

    PathMatrix logs(2, 2);
    logs << 0.0, std::log(0.1),
            0.0, 1.0;
    PathMatrix shorted(2, 2);
    shorted << 2.0, 2.0,
               -1.0, -1.0;
    try {
        relative_wealth_path(shorted, logs);
        FAIL() << "expected NumericError";
    } catch (const NumericError& e) {
        EXPECT_EQ(e.time_index(), std::optional<std::size_t>(0));
    }
    EXPECT_THROW(relative_wealth_path(PathMatrix::Ones(2, 3), logs), ValidationError);
}

TEST(Structural, ConstantWeightsTelescope) {
    const PathMatrix logs = smooth_logs(100);
    const PathMatrix mu = market_weights_path(logs);
    PathMatrix pi(3, logs.cols());
    pi.row(0).setConstant(0.2);
    pi.row(1).setConstant(0.3);
    pi.row(2).setConstant(0.5);
    const Series s = structural_process_path(pi, mu);
    const Eigen::Index last = logs.cols() - 1;
    double expected = 0.0;
    for (Eigen::Index i = 0; i < 3; ++i) expected += pi(i, 0) * std::log(mu(i, last) / mu(i, 0));
    EXPECT_NEAR(s[last], expected, 1e-13);
}

TEST(Structural, SmoothPathMatchesGeneratingChange) {
    const PathMatrix logs = smooth_logs(1000);
    const PathMatrix mu = market_weights_path(logs);
    const auto frame = ranked_path(logs).frame;
    for (const auto& S : {GeneratingFunction::entropy(), GeneratingFunction::diversity(0.5),
                          GeneratingFunction::geometric_mean()}) {
        const Decomposition d = decompose_path(generated_weights_path(mu, frame, S), mu, frame, S, logs);
        EXPECT_LT((d.structural - d.generating_log_change).cwiseAbs().maxCoeff(), 1e-6) << S.name();
        EXPECT_LT((d.trading + d.structural - d.relative_log_return).cwiseAbs().maxCoeff(), 1e-14);
    }
}

TEST(Decompose, ConstantGeneratorHasNoDrift) {
    const auto ens = simulate_atlas({3, 0.1, 0.2, {}}, build_grid(1.0, 300), RngSpec{9}, 2);
    const auto mu = market_weights(ens);
    const auto frames = ranked_ensemble(ens).frames;
    const auto S = GeneratingFunction::constant();
    const auto report = decompose(generated_weights(mu, frames, S), mu, frames, S, ens);
    EXPECT_EQ(report.generating_function, "constant");
    for (const auto& d : report.paths) {
        EXPECT_LT(d.theta_hat.cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_TRUE((d.generating_log_change.array() == 0.0).all());
    }
}
