#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "ranklab/errors.hpp"

namespace ranklab {

/// Per-path storage: one row per asset, one column per grid point.
template <typename Scalar>
using PathMatrixT = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using PathMatrix = PathMatrixT<double>;
using Series = Eigen::VectorXd;

/// Uniform partition of [0, T] into M steps.
class TimeGrid {
public:
    TimeGrid(double horizon, std::size_t num_steps);

    double horizon() const noexcept { return horizon_; }
    std::size_t steps() const noexcept { return steps_; }
    std::size_t size() const noexcept { return steps_ + 1; }
    double step() const noexcept { return step_; }

    /// t_m = m h, with t_M pinned to T.
    double point(std::size_t m) const;
    Series points() const;

    /// Same horizon, M / factor steps.
    TimeGrid coarsened(std::size_t factor) const;

    bool operator==(const TimeGrid&) const = default;

private:
    double horizon_;
    std::size_t steps_;
    double step_;
};

TimeGrid build_grid(double horizon, std::size_t num_steps);

/// Values of n processes on a common grid for P independent paths.
class PathEnsemble {
public:
    /// Throws ValidationError on shape mismatch or non-finite entries.
    PathEnsemble(TimeGrid grid, std::vector<PathMatrix> paths);

    const TimeGrid& grid() const noexcept { return grid_; }
    std::size_t num_paths() const noexcept { return paths_.size(); }
    std::size_t num_assets() const noexcept { return assets_; }

    const PathMatrix& path(std::size_t p) const { return paths_.at(p); }
    const std::vector<PathMatrix>& paths() const noexcept { return paths_; }

private:
    TimeGrid grid_;
    std::size_t assets_;
    std::vector<PathMatrix> paths_;
};

/**
 * Deterministic seeding of independent Gaussian substreams.
 *
 * Substream (path, asset) is seeded with
 *   mix64(mix64(master_seed) ^ (path << 32 | asset))
 * where mix64 is the SplitMix64 finalizer. mix64 is a bijection on 64-bit
 * words, so distinct (path, asset) pairs with path, asset < 2^32 never share a
 * seed. Each substream drives a std::mt19937_64 whose outputs become uniforms
 * u = (x >> 11 + 1) 2^-53 in (0, 1]; normals come from Box-Muller, both the
 * cosine and sine branch, consumed in that order.
 */
struct RngSpec {
    std::uint64_t master_seed = 0;

    std::uint64_t substream_seed(std::size_t path, std::size_t asset) const;
};

std::uint64_t mix64(std::uint64_t x) noexcept;

/// Brownian increments of one path: n rows by M columns, each N(0, h).
PathMatrix path_increments(const RngSpec& spec, const TimeGrid& grid, std::size_t num_assets,
                           std::size_t path);

/// Increments for paths 0..P-1; entry p equals path_increments(spec, grid, n, p).
std::vector<PathMatrix> gaussian_increments(const RngSpec& spec, const TimeGrid& grid,
                                            std::size_t num_assets, std::size_t num_paths);

/// Sums consecutive blocks of `factor` increments. Throws unless factor divides M.
PathMatrix coarsen_increments(const PathMatrix& increments, std::size_t factor);

/// Running sums started at `start` (one column per grid point).
PathMatrix cumulative_path(const PathMatrix& increments, const Eigen::VectorXd& start);

/// Threads used by path-parallel loops. Output never depends on this value.
void set_parallelism(int threads);
int parallelism() noexcept;

/**
 * Runs body(p) for p in [0, count) across the configured threads. If any
 * iteration throws, the exception from the lowest failing index is rethrown.
 */
void for_each_path(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace ranklab
