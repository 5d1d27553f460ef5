#include "ranklab/rank_transform.hpp"

#include <cmath>
#include <string>

namespace ranklab {

RankedPath ranked_path(const PathMatrix& values) {
    const auto n = values.rows();
    const auto cols = values.cols();
    RankedPath out{PathMatrix(n, cols), RankFrame{RankMatrix(n, cols), RankMatrix(n, cols)}};
    for (Eigen::Index m = 0; m < cols; ++m) {
        const auto perm = rank_permutation(values.col(m));
        out.frame.rank.col(m) = perm.rank;
        out.frame.order.col(m) = perm.order;
        for (Eigen::Index k = 0; k < n; ++k) out.ranked(k, m) = values(perm.order[k], m);
    }
    return out;
}

RankedEnsemble ranked_ensemble(const PathEnsemble& ensemble) {
    std::vector<PathMatrix> ranked(ensemble.num_paths());
    std::vector<RankFrame> frames(ensemble.num_paths());
    for_each_path(ensemble.num_paths(), [&](std::size_t p) {
        auto r = ranked_path(ensemble.path(p));
        ranked[p] = std::move(r.ranked);
        frames[p] = std::move(r.frame);
    });
    return {PathEnsemble(ensemble.grid(), std::move(ranked)), std::move(frames)};
}

Series occupation_indicator(const RankFrame& frame, std::size_t asset, std::size_t rank) {
    const auto n = static_cast<std::size_t>(frame.rank.rows());
    if (asset >= n || rank >= n) {
        throw ValidationError("asset " + std::to_string(asset) + " or rank " + std::to_string(rank) +
                              " out of range for " + std::to_string(n) + " assets");
    }
    const auto row = frame.rank.row(static_cast<Eigen::Index>(asset));
    return (row.array() == static_cast<int>(rank)).cast<double>().transpose().matrix();
}

PathCoincidence path_coincidence(const PathMatrix& values, double delta) {
    if (!(delta > 0.0)) throw ValidationError("coincidence band delta must be positive");
    const auto n = values.rows();
    const auto cols = values.cols();
    PathCoincidence out;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            PairCoincidence pc;
            pc.first = static_cast<std::size_t>(i);
            pc.second = static_cast<std::size_t>(j);
            bool prev_positive = false;
            for (Eigen::Index m = 0; m < cols; ++m) {
                const double d = values(i, m) - values(j, m);
                const bool positive = d > 0.0;
                if (values(i, m) == values(j, m)) ++pc.exact_ties;
                if (std::abs(d) < delta) ++pc.band_points;
                if (m > 0 && positive != prev_positive) ++pc.sign_changes;
                prev_positive = positive;
            }
            pc.occupation_fraction = static_cast<double>(pc.band_points) / static_cast<double>(cols);
            out.pairs.push_back(pc);
        }
    }

    std::vector<double> sorted(static_cast<std::size_t>(n));
    for (Eigen::Index m = 0; m < cols; ++m) {
        bool named_tie = false;
        for (Eigen::Index i = 0; i < n && !named_tie; ++i) {
            for (Eigen::Index j = i + 1; j < n; ++j) {
                if (values(i, m) == values(j, m)) {
                    named_tie = true;
                    break;
                }
            }
        }
        for (Eigen::Index i = 0; i < n; ++i) sorted[static_cast<std::size_t>(i)] = values(i, m);
        std::sort(sorted.begin(), sorted.end(), std::greater<>());
        bool ranked_tie = false;
        bool triple = false;
        for (std::size_t k = 0; k + 1 < sorted.size(); ++k) {
            if (sorted[k] == sorted[k + 1]) ranked_tie = true;
            if (k + 2 < sorted.size() && sorted[k] - sorted[k + 2] < delta) triple = true;
        }
        out.named_tie_points += named_tie ? 1 : 0;
        out.ranked_tie_points += ranked_tie ? 1 : 0;
        out.triple_points += triple ? 1 : 0;
    }
    return out;
}

CoincidenceStats coincidence_stats(const PathEnsemble& ensemble, double delta) {
    if (!(delta > 0.0)) throw ValidationError("coincidence band delta must be positive");
    const std::size_t num_paths = ensemble.num_paths();
    std::vector<PathCoincidence> per_path(num_paths);
    for_each_path(num_paths, [&](std::size_t p) {
        per_path[p] = path_coincidence(ensemble.path(p), delta);
    });

    CoincidenceStats out;
    out.delta = delta;
    out.num_paths = num_paths;
    out.points_per_path = ensemble.grid().size();
    out.pairs = per_path.front().pairs;
    for (auto& pc : out.pairs) pc.exact_ties = pc.sign_changes = pc.band_points = 0;
    out.path_occupation.resize(static_cast<Eigen::Index>(num_paths),
                               static_cast<Eigen::Index>(out.pairs.size()));
    for (std::size_t p = 0; p < num_paths; ++p) {
        const auto& pp = per_path[p];
        for (std::size_t q = 0; q < out.pairs.size(); ++q) {
            out.pairs[q].exact_ties += pp.pairs[q].exact_ties;
            out.pairs[q].sign_changes += pp.pairs[q].sign_changes;
            out.pairs[q].band_points += pp.pairs[q].band_points;
            out.path_occupation(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q)) =
                pp.pairs[q].occupation_fraction;
        }
        out.triple_points += pp.triple_points;
        out.named_tie_points += pp.named_tie_points;
        out.ranked_tie_points += pp.ranked_tie_points;
    }
    const double total = static_cast<double>(num_paths * out.points_per_path);
    for (auto& pc : out.pairs) pc.occupation_fraction = static_cast<double>(pc.band_points) / total;
    return out;
}

}  // namespace ranklab
