#include "ranklab/sde_engine.hpp"

#include <cmath>
#include <string>

#include "ranklab/rank_transform.hpp"

namespace ranklab {

namespace {

Eigen::VectorXd initial_or_zero(const Eigen::VectorXd& initial, std::size_t n) {
    return initial.size() == 0 ? Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n)) : initial;
}

}  // namespace

void AtlasParams::validate() const {
    if (n < 2) throw ValidationError("Atlas model needs n >= 2, got " + std::to_string(n));
    if (!(g > 0.0) || !std::isfinite(g)) throw ValidationError("Atlas growth g must be positive");
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw ValidationError("Atlas volatility sigma must be positive");
    }
    if (initial_log.size() != 0 && static_cast<std::size_t>(initial_log.size()) != n) {
        throw ValidationError("initial log values must have length n");
    }
    if (!initial_log.allFinite()) throw ValidationError("initial log values must be finite");
}

void RankBasedParams::validate() const {
    if (drifts.size() < 2) throw ValidationError("rank-based model needs n >= 2");
    if (volatilities.size() != drifts.size()) {
        throw ValidationError("per-rank drift and volatility tables differ in length");
    }
    if (!drifts.allFinite()) throw ValidationError("per-rank drifts must be finite");
    if (!volatilities.allFinite() || (volatilities.array() <= 0.0).any()) {
        throw ValidationError("per-rank volatilities must be positive");
    }
    if (initial_log.size() != 0 && initial_log.size() != drifts.size()) {
        throw ValidationError("initial log values must have length n");
    }
    if (!initial_log.allFinite()) throw ValidationError("initial log values must be finite");
}

RankBasedParams RankBasedParams::from_atlas(const AtlasParams& atlas) {
    atlas.validate();
    const auto n = static_cast<Eigen::Index>(atlas.n);
    RankBasedParams out;
    out.drifts = Eigen::VectorXd::Constant(n, -atlas.g);
    out.drifts[n - 1] = -atlas.g + static_cast<double>(atlas.n) * atlas.g;
    out.volatilities = Eigen::VectorXd::Constant(n, atlas.sigma);
    out.initial_log = initial_or_zero(atlas.initial_log, atlas.n);
    return out;
}

bool RankBasedParams::is_atlas() const {
    const auto n = drifts.size();
    if (n < 2 || volatilities.size() != n) return false;
    const double g = -drifts[0];
    if (!(g > 0.0)) return false;
    for (Eigen::Index k = 0; k + 1 < n; ++k) {
        if (drifts[k] != -g) return false;
    }
    if (drifts[n - 1] != -g + static_cast<double>(n) * g) return false;
    return volatilities[0] > 0.0 && (volatilities.array() == volatilities[0]).all();
}

PathMatrix simulate_rank_based_path(const RankBasedParams& params, const TimeGrid& grid,
                                    const PathMatrix& increments) {
    const auto n = static_cast<Eigen::Index>(params.n());
    if (increments.rows() != n || static_cast<std::size_t>(increments.cols()) != grid.steps()) {
        throw ValidationError("increment array shape does not match model and grid");
    }
    const double h = grid.step();
    PathMatrix out(n, static_cast<Eigen::Index>(grid.size()));
    out.col(0) = initial_or_zero(params.initial_log, params.n());
    for (Eigen::Index m = 0; m < increments.cols(); ++m) {
        const auto perm = rank_permutation(out.col(m));
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto k = perm.rank[i];
            out(i, m + 1) = out(i, m) + params.drifts[k] * h + params.volatilities[k] * increments(i, m);
        }
    }
    return out;
}

PathEnsemble simulate_rank_based(const RankBasedParams& params, const TimeGrid& grid,
                                 const RngSpec& rng, std::size_t paths) {
    params.validate();
    if (paths == 0) throw ValidationError("number of paths must be positive");
    std::vector<PathMatrix> out(paths);
    for_each_path(paths, [&](std::size_t p) {
        out[p] = simulate_rank_based_path(params, grid, path_increments(rng, grid, params.n(), p));
    });
    return PathEnsemble(grid, std::move(out));
}

PathEnsemble simulate_atlas(const AtlasParams& params, const TimeGrid& grid, const RngSpec& rng,
                            std::size_t paths) {
    return simulate_rank_based(RankBasedParams::from_atlas(params), grid, rng, paths);
}

PathMatrix simulate_atlas_path(const AtlasParams& params, const TimeGrid& grid,
                               const PathMatrix& increments) {
    return simulate_rank_based_path(RankBasedParams::from_atlas(params), grid, increments);
}

}  // namespace ranklab
