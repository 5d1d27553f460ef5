#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ranklab/core_paths.hpp"
#include "ranklab/portfolio.hpp"
#include "ranklab/rank_transform.hpp"
#include "ranklab/sde_engine.hpp"

namespace ranklab {

/// A single process sampled on the grid. Rows of a PathMatrix bind without copying.
using SeriesView = Eigen::Ref<const Eigen::RowVectorXd>;

enum class Claim { lemma2, lemma3, lemma4_max, lemma4_min, prop1, prop3 };

const char* claim_name(Claim claim);
std::optional<Claim> parse_claim(const std::string& name);

/// Uniform (sup over the grid) and terminal absolute residual.
struct Residual {
    double sup = 0.0;
    double endpoint = 0.0;
};

Residual residual_of(const Eigen::Ref<const Eigen::VectorXd>& signed_error);

/// |X(t)| - |X(0)| against the Stratonovich integral of sgn(X) dX.
Residual verify_abs_representation(const SeriesView& x);

/// |X - Y| increments against the Stratonovich integrals of sgn(X - Y) dX and dY.
Residual verify_pair_difference(const SeriesView& x, const SeriesView& y);

/// Signed errors of the max and min representations; they sum to zero up to round-off.
struct MinMaxErrors {
    Series max;
    Series min;
};

MinMaxErrors minmax_errors(const SeriesView& x, const SeriesView& y);

struct MinMaxResidual {
    Residual max;
    Residual min;
};

MinMaxResidual verify_minmax(const SeriesView& x, const SeriesView& y);

struct RankRepresentation {
    std::vector<Residual> per_rank;
    /// X_(k)(0) plus the summed Stratonovich integrals, at the final grid point.
    Eigen::VectorXd reconstructed_final;
};

/// X_(k)(t) - X_(k)(0) against sum_i of the Stratonovich integral of 1{r(i) = k} dX_i.
RankRepresentation verify_rank_representation(const PathMatrix& values, const RankFrame& frame);

/// Per-path residuals for one claim (or one rank of prop1).
struct ResidualSeries {
    Claim claim = Claim::lemma2;
    std::string label;
    std::vector<double> sup;
    std::vector<double> endpoint;
};

struct DecompositionCheck {
    Residual generating_match;  // structural vs generating log-change
    double theta_qv = 0.0;      // realized QV of theta_hat
    double relative_qv = 0.0;   // realized QV of the relative log-return
    double theta_final = 0.0;
};

DecompositionCheck check_decomposition(const Decomposition& d);

/**
 * Per-path residuals of `claim` on an ensemble. lemma2 uses asset 0,
 * lemma3/lemma4 use assets 0 and 1, prop1 yields one series per rank,
 * prop3 needs a generating function.
 */
std::vector<ResidualSeries> verify_ensemble(Claim claim, const PathEnsemble& ensemble,
                                            const GeneratingFunction* S = nullptr);

/// Residual statistics at one refinement level.
struct LevelStats {
    std::size_t steps = 0;
    double step = 0.0;
    double mean_residual = 0.0;  // for prop1: max over ranks of the per-rank mean
    double max_residual = 0.0;
    double stderr_residual = 0.0;
    double mean_endpoint = 0.0;
    // prop3 only
    double mean_theta_qv = 0.0;
    double mean_relative_qv = 0.0;
    double mean_theta_final = 0.0;
    double stderr_theta_final = 0.0;
};

struct ConvergenceReport {
    Claim claim = Claim::lemma2;
    std::vector<LevelStats> levels;  // coarsest first
    double fitted_rate = 0.0;        // NaN when the fit was skipped
    double fitted_intercept = 0.0;
    /// Row p, column l: sup residual of path p at level l (max over ranks for prop1).
    Eigen::MatrixXd path_residuals;
};

/// Least-squares slope of log(residual) against log(h). NaN when residuals are at round-off.
struct RateFit {
    double rate;
    double intercept;
};
RateFit fit_rate(const std::vector<double>& steps, const std::vector<double>& residuals);

/// Structural-vs-generating residual and theta QV across refinement levels of the same paths.
ConvergenceReport verify_decomposition(const std::vector<DecompositionReport>& levels);

struct StudyConfig {
    Claim claim = Claim::lemma2;
    RankBasedParams model;
    double horizon = 1.0;
    std::vector<std::size_t> levels;  // step counts, strictly increasing, each dividing the last
    std::size_t paths = 100;
    RngSpec rng;
    std::optional<GeneratingFunction> generating_function;  // required for prop3
};

/**
 * Residual statistics at each level. Every path's Brownian increments are drawn
 * once on the finest grid and summed down to coarser levels, so all levels see
 * the same underlying noise.
 */
ConvergenceReport convergence_study(const StudyConfig& config);

/// Occupation of the band |X_i - X_j| < sqrt(h) at each coupled level.
struct BandLevel {
    std::size_t steps = 0;
    double step = 0.0;
    double mean_occupation = 0.0;
    double stderr_occupation = 0.0;
};

std::vector<BandLevel> crossing_band_study(const RankBasedParams& model, double horizon,
                                           const std::vector<std::size_t>& levels,
                                           std::size_t paths, const RngSpec& rng,
                                           std::size_t first = 0, std::size_t second = 1);

/// Rank representation and band statistics on a first-order model.
struct RemarkProbe {
    bool is_atlas = false;
    std::vector<double> mean_rank_residual;
    std::vector<double> max_rank_residual;
    CoincidenceStats coincidence;
};

RemarkProbe remark_probe(const RankBasedParams& model, const TimeGrid& grid, const RngSpec& rng,
                         std::size_t paths);

/// Sample mean and standard error of the mean.
struct MeanStderr {
    double mean;
    double stderr_mean;
};
MeanStderr mean_and_stderr(const Eigen::Ref<const Eigen::VectorXd>& samples);

}  // namespace ranklab
