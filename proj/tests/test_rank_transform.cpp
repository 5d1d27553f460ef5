#include <set>

#include <gtest/gtest.h>

#include "ranklab/rank_transform.hpp"
#include "ranklab/sde_engine.hpp"

using namespace ranklab;

namespace {

PathMatrix column(std::initializer_list<double> values) {
    PathMatrix out(static_cast<Eigen::Index>(values.size()), 1);
    Eigen::Index i = 0;
    for (double v : values) out(i++, 0) = v;
    return out;
}

}  // namespace

TEST(RankPermutation, DistinctValues) {
    const auto r = rank_permutation(Eigen::Vector3d(3.0, 1.0, 2.0));
    EXPECT_EQ(r.rank, Eigen::Vector3i(0, 2, 1));
    EXPECT_EQ(r.order, Eigen::Vector3i(0, 2, 1));
}

TEST(RankPermutation, TiesGoToLowerIndex) {
    const auto r = rank_permutation(Eigen::Vector3d(2.0, 2.0, 1.0));
    EXPECT_EQ(r.rank, Eigen::Vector3i(0, 1, 2));
    const auto s = rank_permutation(Eigen::Vector3d(1.0, 2.0, 2.0));
    EXPECT_EQ(s.order, Eigen::Vector3i(1, 2, 0));
}

TEST(RankedPath, SingleAsset) {
    const auto rp = ranked_path(column({5.0}));
    EXPECT_EQ(rp.ranked(0, 0), 5.0);
    EXPECT_EQ(rp.frame.rank(0, 0), 0);
}

TEST(RankedPath, ConstantPathsKeepRanks) {
    PathMatrix v(3, 4);
    v.row(0).setConstant(1.0);
    v.row(1).setConstant(3.0);
    v.row(2).setConstant(2.0);
    const auto rp = ranked_path(v);
    for (Eigen::Index m = 0; m < 4; ++m) {
        EXPECT_EQ(rp.frame.rank(0, m), 2);
        EXPECT_EQ(rp.frame.rank(1, m), 0);
        EXPECT_EQ(rp.frame.rank(2, m), 1);
    }
    EXPECT_TRUE(rp.ranked.row(0) == v.row(1));
}

TEST(RankedPath, CrossingLinesSwapOnce) {
    PathMatrix v(2, 5);
    v.row(0) << 0.0, 1.0, 2.0, 3.0, 4.0;
    v.row(1) << 4.0, 3.0, 2.0, 1.0, 0.0;
    const auto rp = ranked_path(v);
    EXPECT_EQ(Eigen::RowVectorXi(rp.frame.rank.row(0)), (Eigen::RowVectorXi(5) << 1, 1, 0, 0, 0).finished());
    EXPECT_EQ(rp.ranked.row(0), (Eigen::RowVectorXd(5) << 4.0, 3.0, 2.0, 3.0, 4.0).finished());
    EXPECT_EQ(rp.ranked.row(1), (Eigen::RowVectorXd(5) << 0.0, 1.0, 2.0, 1.0, 0.0).finished());
}

TEST(RankedPath, PropertiesOnSimulatedAtlas) {
    const auto ens = simulate_atlas({5, 0.1, 0.2, {}}, build_grid(1.0, 400), RngSpec{21}, 8);
    const auto ranked = ranked_ensemble(ens);
    ASSERT_EQ(ranked.frames.size(), 8u);
    for (std::size_t p = 0; p < 8; ++p) {
        const auto& v = ens.path(p);
        const auto& r = ranked.ranked.path(p);
        const auto& f = ranked.frames[p];
        for (Eigen::Index m = 0; m < v.cols(); ++m) {
            for (Eigen::Index i = 0; i < 5; ++i) {
                EXPECT_EQ(f.order(f.rank(i, m), m), i);
                EXPECT_EQ(r(f.rank(i, m), m), v(i, m));
            }
            for (Eigen::Index k = 0; k + 1 < 5; ++k) EXPECT_GE(r(k, m), r(k + 1, m));
            EXPECT_NEAR(r.col(m).sum(), v.col(m).sum(), 1e-12);
        }
        for (std::size_t k = 0; k < 5; ++k) {
            Series total = Series::Zero(v.cols());
            for (std::size_t i = 0; i < 5; ++i) total += occupation_indicator(f, i, k);
            EXPECT_TRUE((total.array() == 1.0).all());
        }
    }
}

TEST(RankedPath, TieSetsMatch) {
    PathMatrix v(3, 3);
    v << 1.0, 2.0, 3.0,
         1.0, 0.0, 3.0,
         0.5, 2.0, 3.0;
    const auto pc = path_coincidence(v, 0.1);
    // Named ties at m = 0 (assets 0,1), m = 1 (assets 0,2), m = 2 (all three).
    EXPECT_EQ(pc.named_tie_points, 3u);
    EXPECT_EQ(pc.ranked_tie_points, pc.named_tie_points);
    EXPECT_EQ(pc.triple_points, 1u);
}

TEST(Coincidence, PairCounts) {
    PathMatrix v(2, 6);
    v.row(0) << 1.0, 0.5, 0.0, -0.5, 0.05, 1.0;
    v.row(1).setZero();
    const auto pc = path_coincidence(v, 0.1);
    ASSERT_EQ(pc.pairs.size(), 1u);
    const auto& pair = pc.pairs[0];
    EXPECT_EQ(pair.exact_ties, 1u);
    // sgn: + + - - + +
    EXPECT_EQ(pair.sign_changes, 2u);
    EXPECT_EQ(pair.band_points, 2u);
    EXPECT_DOUBLE_EQ(pair.occupation_fraction, 2.0 / 6.0);
}

TEST(Coincidence, DegenerateInputs) {
    PathMatrix single(1, 3);
    single << 0.0, 1.0, 2.0;
    const auto pc = path_coincidence(single, 0.5);
    EXPECT_TRUE(pc.pairs.empty());
    EXPECT_EQ(pc.triple_points, 0u);
    EXPECT_THROW(path_coincidence(single, 0.0), ValidationError);

    PathMatrix same(3, 2);
    same.setConstant(1.0);
    const auto all = path_coincidence(same, 1e-9);
    EXPECT_EQ(all.triple_points, 2u);
    for (const auto& pair : all.pairs) {
        EXPECT_EQ(pair.exact_ties, 2u);
        EXPECT_EQ(pair.sign_changes, 0u);
        EXPECT_DOUBLE_EQ(pair.occupation_fraction, 1.0);
    }
}

TEST(Coincidence, EnsembleAggregates) {
    const auto grid = build_grid(1.0, 100);
    const auto ens = simulate_atlas({3, 0.1, 0.2, {}}, grid, RngSpec{2}, 4);
    const auto stats = coincidence_stats(ens, 0.05);
    EXPECT_EQ(stats.num_paths, 4u);
    EXPECT_EQ(stats.points_per_path, 101u);
    ASSERT_EQ(stats.pairs.size(), 3u);
    EXPECT_EQ(stats.path_occupation.rows(), 4);
    EXPECT_EQ(stats.path_occupation.cols(), 3);
    std::size_t band = 0;
    for (std::size_t p = 0; p < 4; ++p) band += path_coincidence(ens.path(p), 0.05).pairs[1].band_points;
    EXPECT_EQ(stats.pairs[1].band_points, band);
    EXPECT_NEAR(stats.pairs[1].occupation_fraction, static_cast<double>(band) / (4.0 * 101.0), 1e-15);
    EXPECT_THROW(coincidence_stats(ens, -1.0), ValidationError);
}
