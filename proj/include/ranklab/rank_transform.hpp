#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "ranklab/core_paths.hpp"

namespace ranklab {

// Ranks and assets are 0-based throughout: rank 0 holds the largest value.

using RankMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// rank[i] is the rank of asset i, order[k] the asset holding rank k.
struct RankPermutation {
    Eigen::VectorXi rank;
    Eigen::VectorXi order;
};

/**
 * Descending ranks with ties broken by index: asset i outranks asset j when
 * values[i] > values[j], or values[i] == values[j] and i < j. Exact floating
 * point ties are honored; there is no tolerance.
 */
template <typename Derived>
RankPermutation rank_permutation(const Eigen::MatrixBase<Derived>& values) {
    const auto n = values.size();
    RankPermutation out{Eigen::VectorXi(n), Eigen::VectorXi(n)};
    std::iota(out.order.begin(), out.order.end(), 0);
    std::sort(out.order.begin(), out.order.end(), [&](int a, int b) {
        const auto va = values(a);
        const auto vb = values(b);
        return va > vb || (va == vb && a < b);
    });
    for (Eigen::Index k = 0; k < n; ++k) out.rank[out.order[k]] = static_cast<int>(k);
    return out;
}

/// Rank permutations of one path at every grid point (n rows by M+1 columns).
struct RankFrame {
    RankMatrix rank;
    RankMatrix order;
};

struct RankedPath {
    PathMatrix ranked;  // row k is the rank-k process
    RankFrame frame;
};

RankedPath ranked_path(const PathMatrix& values);

struct RankedEnsemble {
    PathEnsemble ranked;
    std::vector<RankFrame> frames;
};

RankedEnsemble ranked_ensemble(const PathEnsemble& ensemble);

/// 1 where asset holds rank at grid point m, else 0.
Series occupation_indicator(const RankFrame& frame, std::size_t asset, std::size_t rank);

struct PairCoincidence {
    std::size_t first = 0;
    std::size_t second = 0;
    std::size_t exact_ties = 0;
    std::size_t sign_changes = 0;
    std::size_t band_points = 0;
    double occupation_fraction = 0.0;
};

/// Crossing statistics of a single path.
struct PathCoincidence {
    std::vector<PairCoincidence> pairs;  // lexicographic (i, j), i < j
    std::size_t triple_points = 0;
    std::size_t named_tie_points = 0;   // grid points where some X_i == X_j, i != j
    std::size_t ranked_tie_points = 0;  // grid points where some X_(k) == X_(l), k != l
};

/**
 * Pair statistics accumulated over every path of an ensemble.
 *
 * Sign changes follow sgn(x) = +1 for x > 0 and -1 otherwise applied to
 * X_i - X_j. The band is |X_i - X_j| < delta. A triple point is a grid point
 * where three or more assets lie pairwise within delta.
 */
struct CoincidenceStats {
    double delta = 0.0;
    std::size_t num_paths = 0;
    std::size_t points_per_path = 0;
    std::vector<PairCoincidence> pairs;
    std::size_t triple_points = 0;
    std::size_t named_tie_points = 0;
    std::size_t ranked_tie_points = 0;
    /// Row p, column q: occupation fraction of pair q on path p.
    Eigen::MatrixXd path_occupation;
};

PathCoincidence path_coincidence(const PathMatrix& values, double delta);

CoincidenceStats coincidence_stats(const PathEnsemble& ensemble, double delta);

}  // namespace ranklab
