#include "ranklab/core_paths.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <numbers>
#include <random>
#include <string>

#include <omp.h>

namespace ranklab {

TimeGrid::TimeGrid(double horizon, std::size_t num_steps)
    : horizon_(horizon), steps_(num_steps), step_(0.0) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw ValidationError("time grid horizon must be positive and finite, got " +
                              std::to_string(horizon));
    }
    if (num_steps < 2) {
        throw ValidationError("time grid needs at least 2 steps, got " + std::to_string(num_steps));
    }
    step_ = horizon / static_cast<double>(num_steps);
}

double TimeGrid::point(std::size_t m) const {
    if (m > steps_) throw ValidationError("grid index " + std::to_string(m) + " out of range");
    if (m == steps_) return horizon_;
    return static_cast<double>(m) * step_;
}

Series TimeGrid::points() const {
    Series t(size());
    for (std::size_t m = 0; m < size(); ++m) t[static_cast<Eigen::Index>(m)] = point(m);
    return t;
}

TimeGrid TimeGrid::coarsened(std::size_t factor) const {
    if (factor == 0 || steps_ % factor != 0) {
        throw ValidationError("coarsening factor " + std::to_string(factor) +
                              " does not divide " + std::to_string(steps_) + " steps");
    }
    return TimeGrid(horizon_, steps_ / factor);
}

TimeGrid build_grid(double horizon, std::size_t num_steps) { return TimeGrid(horizon, num_steps); }

PathEnsemble::PathEnsemble(TimeGrid grid, std::vector<PathMatrix> paths)
    : grid_(grid), assets_(0), paths_(std::move(paths)) {
    if (paths_.empty()) throw ValidationError("path ensemble needs at least one path");
    assets_ = static_cast<std::size_t>(paths_.front().rows());
    if (assets_ == 0) throw ValidationError("path ensemble needs at least one asset");
    for (std::size_t p = 0; p < paths_.size(); ++p) {
        const auto& values = paths_[p];
        if (static_cast<std::size_t>(values.rows()) != assets_ ||
            static_cast<std::size_t>(values.cols()) != grid_.size()) {
            throw ValidationError("path " + std::to_string(p) + " has shape " +
                                  std::to_string(values.rows()) + "x" + std::to_string(values.cols()) +
                                  ", expected " + std::to_string(assets_) + "x" +
                                  std::to_string(grid_.size()));
        }
        if (!values.allFinite()) {
            throw ValidationError("path " + std::to_string(p) + " contains non-finite values");
        }
    }
}

std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t RngSpec::substream_seed(std::size_t path, std::size_t asset) const {
    constexpr std::uint64_t limit = std::uint64_t{1} << 32;
    if (path >= limit || asset >= limit) {
        throw ValidationError("substream index out of range: path and asset must be < 2^32");
    }
    const std::uint64_t key = (static_cast<std::uint64_t>(path) << 32) | asset;
    return mix64(mix64(master_seed) ^ key);
}

PathMatrix path_increments(const RngSpec& spec, const TimeGrid& grid, std::size_t num_assets,
                           std::size_t path) {
    if (num_assets == 0) throw ValidationError("increment generation needs at least one asset");
    const auto steps = static_cast<Eigen::Index>(grid.steps());
    const double scale = std::sqrt(grid.step());
    constexpr double two_pi = 2.0 * std::numbers::pi;
    constexpr double unit = 0x1.0p-53;

    PathMatrix out(static_cast<Eigen::Index>(num_assets), steps);
    for (std::size_t i = 0; i < num_assets; ++i) {
        std::mt19937_64 engine(spec.substream_seed(path, i));
        auto uniform = [&] { return static_cast<double>((engine() >> 11) + 1) * unit; };
        auto row = out.row(static_cast<Eigen::Index>(i));
        for (Eigen::Index m = 0; m < steps; m += 2) {
            const double radius = std::sqrt(-2.0 * std::log(uniform()));
            const double angle = two_pi * uniform();
            row[m] = scale * radius * std::cos(angle);
            if (m + 1 < steps) row[m + 1] = scale * radius * std::sin(angle);
        }
    }
    return out;
}

std::vector<PathMatrix> gaussian_increments(const RngSpec& spec, const TimeGrid& grid,
                                            std::size_t num_assets, std::size_t num_paths) {
    std::vector<PathMatrix> out(num_paths);
    for_each_path(num_paths,
                  [&](std::size_t p) { out[p] = path_increments(spec, grid, num_assets, p); });
    return out;
}

PathMatrix coarsen_increments(const PathMatrix& increments, std::size_t factor) {
    const auto fine = static_cast<std::size_t>(increments.cols());
    if (factor == 0 || fine % factor != 0) {
        throw ValidationError("coarsening factor " + std::to_string(factor) +
                              " does not divide " + std::to_string(fine) + " steps");
    }
    if (factor == 1) return increments;
    const auto c = static_cast<Eigen::Index>(factor);
    const Eigen::Index coarse = increments.cols() / c;
    PathMatrix out(increments.rows(), coarse);
    for (Eigen::Index k = 0; k < coarse; ++k) {
        out.col(k) = increments.middleCols(k * c, c).rowwise().sum();
    }
    return out;
}

PathMatrix cumulative_path(const PathMatrix& increments, const Eigen::VectorXd& start) {
    if (start.size() != increments.rows()) {
        throw ValidationError("start vector length does not match number of assets");
    }
    PathMatrix out(increments.rows(), increments.cols() + 1);
    out.col(0) = start;
    for (Eigen::Index m = 0; m < increments.cols(); ++m) {
        out.col(m + 1) = out.col(m) + increments.col(m);
    }
    return out;
}

namespace {
std::atomic<int> g_threads{1};
}

void set_parallelism(int threads) {
    if (threads < 1) throw ValidationError("thread count must be at least 1");
    g_threads.store(threads);
}

int parallelism() noexcept { return g_threads.load(); }

void for_each_path(std::size_t count, const std::function<void(std::size_t)>& body) {
    std::vector<std::exception_ptr> errors(count);
    const auto n = static_cast<long long>(count);
#pragma omp parallel for schedule(dynamic) num_threads(parallelism())
    for (long long p = 0; p < n; ++p) {
        try {
            body(static_cast<std::size_t>(p));
        } catch (...) {
            errors[static_cast<std::size_t>(p)] = std::current_exception();
        }
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace ranklab
