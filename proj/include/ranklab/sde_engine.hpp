#pragma once

#include <cstddef>
#include <optional>

#include <Eigen/Dense>

#include "ranklab/core_paths.hpp"

namespace ranklab {

/// Atlas model: every asset drifts at -g except the smallest, which drifts at (n-1) g.
struct AtlasParams {
    std::size_t n = 2;
    double g = 0.1;
    double sigma = 0.2;
    Eigen::VectorXd initial_log;  // empty means all zeros

    void validate() const;
};

/// First-order model: drift and volatility depend on the current rank only.
struct RankBasedParams {
    Eigen::VectorXd drifts;      // per rank, rank 0 = largest
    Eigen::VectorXd volatilities;
    Eigen::VectorXd initial_log;  // empty means all zeros

    std::size_t n() const noexcept { return static_cast<std::size_t>(drifts.size()); }
    void validate() const;

    /// True iff the coefficients are exactly those produced by from_atlas for some g, sigma.
    bool is_atlas() const;

    static RankBasedParams from_atlas(const AtlasParams& atlas);
};

/**
 * Euler recursion on log capitalizations, rank frozen at the left endpoint:
 *   log X_i(t_{m+1}) = log X_i(t_m) + g_{r(i)} h + sigma_{r(i)} dW_i(m).
 * `increments` is n rows by M columns; the grid supplies h.
 */
PathMatrix simulate_rank_based_path(const RankBasedParams& params, const TimeGrid& grid,
                                    const PathMatrix& increments);

PathEnsemble simulate_rank_based(const RankBasedParams& params, const TimeGrid& grid,
                                 const RngSpec& rng, std::size_t paths);

PathEnsemble simulate_atlas(const AtlasParams& params, const TimeGrid& grid, const RngSpec& rng,
                            std::size_t paths);

PathMatrix simulate_atlas_path(const AtlasParams& params, const TimeGrid& grid,
                               const PathMatrix& increments);

}  // namespace ranklab
