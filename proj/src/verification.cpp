#include "ranklab/verification.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ranklab/stoch_calc.hpp"

namespace ranklab {

const char* claim_name(Claim claim) {
    switch (claim) {
        case Claim::lemma2: return "lemma2";
        case Claim::lemma3: return "lemma3";
        case Claim::lemma4_max: return "lemma4_max";
        case Claim::lemma4_min: return "lemma4_min";
        case Claim::prop1: return "prop1";
        case Claim::prop3: return "prop3";
    }
    return "unknown";
}

std::optional<Claim> parse_claim(const std::string& name) {
    for (Claim c : {Claim::lemma2, Claim::lemma3, Claim::lemma4_max, Claim::lemma4_min, Claim::prop1,
                    Claim::prop3}) {
        if (name == claim_name(c)) return c;
    }
    return std::nullopt;
}

Residual residual_of(const Eigen::Ref<const Eigen::VectorXd>& signed_error) {
    return {signed_error.cwiseAbs().maxCoeff(), std::abs(signed_error[signed_error.size() - 1])};
}

namespace {

Series abs_change(const SeriesView& x) {
    return (x.array().abs() - std::abs(x[0])).transpose().matrix();
}

Series indicator(const SeriesView& x, const SeriesView& y, bool greater_equal) {
    Series out(x.size());
    for (Eigen::Index m = 0; m < x.size(); ++m) {
        out[m] = (x[m] >= y[m]) == greater_equal ? 1.0 : 0.0;
    }
    return out;
}

}  // namespace

Residual verify_abs_representation(const SeriesView& x) {
    const auto integral = stratonovich_integral(sgn_series(x), x);
    return residual_of(abs_change(x) - integral.value);
}

Residual verify_pair_difference(const SeriesView& x, const SeriesView& y) {
    if (x.size() != y.size()) throw ValidationError("verify_pair_difference: series lengths differ");
    const Eigen::RowVectorXd diff = x - y;
    const Series s = sgn_series(diff);
    const Series integral = stratonovich_integral(s, x).value - stratonovich_integral(s, y).value;
    return residual_of(abs_change(diff) - integral);
}

MinMaxErrors minmax_errors(const SeriesView& x, const SeriesView& y) {
    if (x.size() != y.size()) throw ValidationError("verify_minmax: series lengths differ");
    const Series ge = indicator(x, y, true);
    const Series lt = indicator(x, y, false);
    Series upper(x.size());
    Series lower(x.size());
    for (Eigen::Index m = 0; m < x.size(); ++m) {
        upper[m] = std::max(x[m], y[m]);
        lower[m] = std::min(x[m], y[m]);
    }
    Series max_integral = Series::Zero(x.size());
    max_integral += stratonovich_integral(ge, x).value;
    max_integral += stratonovich_integral(lt, y).value;
    Series min_integral = Series::Zero(x.size());
    min_integral += stratonovich_integral(lt, x).value;
    min_integral += stratonovich_integral(ge, y).value;
    return {(upper.array() - upper[0]).matrix() - max_integral,
            (lower.array() - lower[0]).matrix() - min_integral};
}

MinMaxResidual verify_minmax(const SeriesView& x, const SeriesView& y) {
    const auto errors = minmax_errors(x, y);
    return {residual_of(errors.max), residual_of(errors.min)};
}

RankRepresentation verify_rank_representation(const PathMatrix& values, const RankFrame& frame) {
    const auto n = values.rows();
    const auto cols = values.cols();
    if (frame.order.rows() != n || frame.order.cols() != cols) {
        throw ValidationError("verify_rank_representation: rank frame does not match values");
    }
    RankRepresentation out{std::vector<Residual>(static_cast<std::size_t>(n)), Eigen::VectorXd(n)};
    for (Eigen::Index k = 0; k < n; ++k) {
        Series integral = Series::Zero(cols);
        for (Eigen::Index i = 0; i < n; ++i) {
            const Series occupied =
                occupation_indicator(frame, static_cast<std::size_t>(i), static_cast<std::size_t>(k));
            if (!occupied.any()) continue;  // contributes exactly zero
            integral += stratonovich_integral(occupied, values.row(i)).value;
        }
        Series ranked(cols);
        for (Eigen::Index m = 0; m < cols; ++m) ranked[m] = values(frame.order(k, m), m);
        out.per_rank[static_cast<std::size_t>(k)] =
            residual_of((ranked.array() - ranked[0]).matrix() - integral);
        out.reconstructed_final[k] = ranked[0] + integral[cols - 1];
    }
    return out;
}

DecompositionCheck check_decomposition(const Decomposition& d) {
    DecompositionCheck out;
    out.generating_match = residual_of(d.structural - d.generating_log_change);
    out.theta_qv = realized_quadratic_variation(d.theta_hat);
    out.relative_qv = realized_quadratic_variation(d.relative_log_return);
    out.theta_final = d.theta_hat[d.theta_hat.size() - 1];
    return out;
}

namespace {

struct PathOutcome {
    Residual combined;
    std::vector<Residual> per_rank;
    DecompositionCheck decomposition;
};

PathOutcome evaluate_claim(Claim claim, const PathMatrix& values, const GeneratingFunction* S) {
    PathOutcome out;
    switch (claim) {
        case Claim::lemma2:
            out.combined = verify_abs_representation(values.row(0));
            break;
        case Claim::lemma3:
            out.combined = verify_pair_difference(values.row(0), values.row(1));
            break;
        case Claim::lemma4_max:
            out.combined = verify_minmax(values.row(0), values.row(1)).max;
            break;
        case Claim::lemma4_min:
            out.combined = verify_minmax(values.row(0), values.row(1)).min;
            break;
        case Claim::prop1: {
            const auto ranked = ranked_path(values);
            out.per_rank = verify_rank_representation(values, ranked.frame).per_rank;
            for (const auto& r : out.per_rank) {
                out.combined.sup = std::max(out.combined.sup, r.sup);
                out.combined.endpoint = std::max(out.combined.endpoint, r.endpoint);
            }
            break;
        }
        case Claim::prop3: {
            if (S == nullptr) throw ValidationError("prop3 verification needs a generating function");
            const auto frame = ranked_path(values).frame;
            const PathMatrix market = market_weights_path(values);
            const PathMatrix weights = generated_weights_path(market, frame, *S);
            out.decomposition = check_decomposition(decompose_path(weights, market, frame, *S, values));
            out.combined = out.decomposition.generating_match;
            break;
        }
    }
    return out;
}

void require_pair(Claim claim, std::size_t assets) {
    if ((claim == Claim::lemma3 || claim == Claim::lemma4_max || claim == Claim::lemma4_min) &&
        assets < 2) {
        throw ValidationError(std::string(claim_name(claim)) + " needs at least two assets");
    }
}

LevelStats summarize(std::size_t steps, double step, const std::vector<PathOutcome>& outcomes,
                     Claim claim) {
    const auto P = static_cast<Eigen::Index>(outcomes.size());
    LevelStats s;
    s.steps = steps;
    s.step = step;
    Eigen::VectorXd sup(P), endpoint(P);
    for (Eigen::Index p = 0; p < P; ++p) {
        sup[p] = outcomes[static_cast<std::size_t>(p)].combined.sup;
        endpoint[p] = outcomes[static_cast<std::size_t>(p)].combined.endpoint;
    }
    s.max_residual = sup.maxCoeff();
    s.mean_endpoint = endpoint.mean();
    if (claim == Claim::prop1) {
        const std::size_t ranks = outcomes.front().per_rank.size();
        s.mean_residual = -1.0;
        for (std::size_t k = 0; k < ranks; ++k) {
            Eigen::VectorXd rank_sup(P);
            for (Eigen::Index p = 0; p < P; ++p) {
                rank_sup[p] = outcomes[static_cast<std::size_t>(p)].per_rank[k].sup;
            }
            const auto ms = mean_and_stderr(rank_sup);
            if (ms.mean > s.mean_residual) {
                s.mean_residual = ms.mean;
                s.stderr_residual = ms.stderr_mean;
            }
        }
    } else {
        const auto ms = mean_and_stderr(sup);
        s.mean_residual = ms.mean;
        s.stderr_residual = ms.stderr_mean;
    }
    if (claim == Claim::prop3) {
        Eigen::VectorXd theta_qv(P), relative_qv(P), theta_final(P);
        for (Eigen::Index p = 0; p < P; ++p) {
            const auto& d = outcomes[static_cast<std::size_t>(p)].decomposition;
            theta_qv[p] = d.theta_qv;
            relative_qv[p] = d.relative_qv;
            theta_final[p] = d.theta_final;
        }
        s.mean_theta_qv = theta_qv.mean();
        s.mean_relative_qv = relative_qv.mean();
        const auto ms = mean_and_stderr(theta_final);
        s.mean_theta_final = ms.mean;
        s.stderr_theta_final = ms.stderr_mean;
    }
    return s;
}

void finish_report(ConvergenceReport& report) {
    std::vector<double> steps, means;
    for (const auto& l : report.levels) {
        steps.push_back(l.step);
        means.push_back(l.mean_residual);
    }
    const auto fit = fit_rate(steps, means);
    report.fitted_rate = fit.rate;
    report.fitted_intercept = fit.intercept;
}

void validate_levels(const std::vector<std::size_t>& levels) {
    if (levels.size() < 3) {
        throw ValidationError("a convergence study needs at least 3 levels, got " +
                              std::to_string(levels.size()));
    }
    for (std::size_t l = 0; l < levels.size(); ++l) {
        if (levels[l] < 2) throw ValidationError("every level needs at least 2 steps");
        if (l > 0 && levels[l] <= levels[l - 1]) {
            throw ValidationError("level step counts must be strictly increasing");
        }
        if (levels.back() % levels[l] != 0) {
            throw ValidationError("level " + std::to_string(levels[l]) + " does not divide the finest level " +
                                  std::to_string(levels.back()));
        }
    }
}

}  // namespace

std::vector<ResidualSeries> verify_ensemble(Claim claim, const PathEnsemble& ensemble,
                                            const GeneratingFunction* S) {
    require_pair(claim, ensemble.num_assets());
    const std::size_t P = ensemble.num_paths();
    std::vector<PathOutcome> outcomes(P);
    for_each_path(P, [&](std::size_t p) {
        try {
            outcomes[p] = evaluate_claim(claim, ensemble.path(p), S);
        } catch (const NumericError& e) {
            throw e.on_path(p);
        }
    });

    std::vector<ResidualSeries> out;
    if (claim == Claim::prop1) {
        for (std::size_t k = 0; k < ensemble.num_assets(); ++k) {
            ResidualSeries rs{claim, "prop1_rank" + std::to_string(k + 1), {}, {}};
            for (const auto& o : outcomes) {
                rs.sup.push_back(o.per_rank[k].sup);
                rs.endpoint.push_back(o.per_rank[k].endpoint);
            }
            out.push_back(std::move(rs));
        }
    } else {
        ResidualSeries rs{claim, claim_name(claim), {}, {}};
        for (const auto& o : outcomes) {
            rs.sup.push_back(o.combined.sup);
            rs.endpoint.push_back(o.combined.endpoint);
        }
        out.push_back(std::move(rs));
    }
    return out;
}

MeanStderr mean_and_stderr(const Eigen::Ref<const Eigen::VectorXd>& samples) {
    const auto n = samples.size();
    if (n == 0) throw ValidationError("mean of an empty sample");
    const double mean = samples.mean();
    if (n == 1) return {mean, 0.0};
    const double var = (samples.array() - mean).square().sum() / static_cast<double>(n - 1);
    return {mean, std::sqrt(var / static_cast<double>(n))};
}

RateFit fit_rate(const std::vector<double>& steps, const std::vector<double>& residuals) {
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    if (steps.size() != residuals.size() || steps.size() < 2) return {nan, nan};
    const double largest = *std::max_element(residuals.begin(), residuals.end());
    const double smallest = *std::min_element(residuals.begin(), residuals.end());
    if (!(smallest > 0.0) || largest < 1e-11) return {nan, nan};
    const auto L = static_cast<Eigen::Index>(steps.size());
    Eigen::MatrixXd design(L, 2);
    Eigen::VectorXd target(L);
    for (Eigen::Index l = 0; l < L; ++l) {
        design(l, 0) = std::log(steps[static_cast<std::size_t>(l)]);
        design(l, 1) = 1.0;
        target[l] = std::log(residuals[static_cast<std::size_t>(l)]);
    }
    const Eigen::Vector2d coef = design.colPivHouseholderQr().solve(target);
    return {coef[0], coef[1]};
}

ConvergenceReport verify_decomposition(const std::vector<DecompositionReport>& levels) {
    if (levels.size() < 3) throw ValidationError("decomposition check needs at least 3 levels");
    const std::size_t P = levels.front().paths.size();
    ConvergenceReport report;
    report.claim = Claim::prop3;
    report.path_residuals.resize(static_cast<Eigen::Index>(P), static_cast<Eigen::Index>(levels.size()));
    for (std::size_t l = 0; l < levels.size(); ++l) {
        const auto& level = levels[l];
        if (level.paths.size() != P) throw ValidationError("levels disagree on the number of paths");
        if (l > 0 && level.grid.steps() <= levels[l - 1].grid.steps()) {
            throw ValidationError("level step counts must be strictly increasing");
        }
        std::vector<PathOutcome> outcomes(P);
        for (std::size_t p = 0; p < P; ++p) {
            outcomes[p].decomposition = check_decomposition(level.paths[p]);
            outcomes[p].combined = outcomes[p].decomposition.generating_match;
            report.path_residuals(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(l)) =
                outcomes[p].combined.sup;
        }
        report.levels.push_back(summarize(level.grid.steps(), level.grid.step(), outcomes, Claim::prop3));
    }
    finish_report(report);
    return report;
}

ConvergenceReport convergence_study(const StudyConfig& config) {
    validate_levels(config.levels);
    config.model.validate();
    if (config.paths == 0) throw ValidationError("a convergence study needs at least one path");
    require_pair(config.claim, config.model.n());
    if (config.claim == Claim::prop3 && !config.generating_function) {
        throw ValidationError("prop3 convergence study needs a generating function");
    }
    const GeneratingFunction* S = config.generating_function ? &*config.generating_function : nullptr;

    const std::size_t L = config.levels.size();
    const std::size_t P = config.paths;
    const TimeGrid finest(config.horizon, config.levels.back());
    std::vector<TimeGrid> grids;
    for (auto steps : config.levels) grids.emplace_back(config.horizon, steps);

    std::vector<std::vector<PathOutcome>> outcomes(L, std::vector<PathOutcome>(P));
    for_each_path(P, [&](std::size_t p) {
        const PathMatrix fine = path_increments(config.rng, finest, config.model.n(), p);
        for (std::size_t l = 0; l < L; ++l) {
            const PathMatrix increments = coarsen_increments(fine, finest.steps() / grids[l].steps());
            const PathMatrix values = simulate_rank_based_path(config.model, grids[l], increments);
            try {
                outcomes[l][p] = evaluate_claim(config.claim, values, S);
            } catch (const NumericError& e) {
                throw e.on_path(p);
            }
        }
    });

    ConvergenceReport report;
    report.claim = config.claim;
    report.path_residuals.resize(static_cast<Eigen::Index>(P), static_cast<Eigen::Index>(L));
    for (std::size_t l = 0; l < L; ++l) {
        for (std::size_t p = 0; p < P; ++p) {
            report.path_residuals(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(l)) =
                outcomes[l][p].combined.sup;
        }
        report.levels.push_back(summarize(grids[l].steps(), grids[l].step(), outcomes[l], config.claim));
    }
    finish_report(report);
    return report;
}

std::vector<BandLevel> crossing_band_study(const RankBasedParams& model, double horizon,
                                           const std::vector<std::size_t>& levels,
                                           std::size_t paths, const RngSpec& rng,
                                           std::size_t first, std::size_t second) {
    validate_levels(levels);
    model.validate();
    if (first >= model.n() || second >= model.n() || first == second) {
        throw ValidationError("crossing band study needs two distinct assets of the model");
    }
    const TimeGrid finest(horizon, levels.back());
    Eigen::MatrixXd occupation(static_cast<Eigen::Index>(paths), static_cast<Eigen::Index>(levels.size()));
    for_each_path(paths, [&](std::size_t p) {
        const PathMatrix fine = path_increments(rng, finest, model.n(), p);
        for (std::size_t l = 0; l < levels.size(); ++l) {
            const TimeGrid grid(horizon, levels[l]);
            const PathMatrix values = simulate_rank_based_path(
                model, grid, coarsen_increments(fine, finest.steps() / grid.steps()));
            const double band = std::sqrt(grid.step());
            const auto gap = (values.row(static_cast<Eigen::Index>(first)) -
                              values.row(static_cast<Eigen::Index>(second)))
                                 .array()
                                 .abs();
            occupation(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(l)) =
                (gap < band).cast<double>().mean();
        }
    });
    std::vector<BandLevel> out;
    for (std::size_t l = 0; l < levels.size(); ++l) {
        const auto ms = mean_and_stderr(occupation.col(static_cast<Eigen::Index>(l)));
        const TimeGrid grid(horizon, levels[l]);
        out.push_back({levels[l], grid.step(), ms.mean, ms.stderr_mean});
    }
    return out;
}

RemarkProbe remark_probe(const RankBasedParams& model, const TimeGrid& grid, const RngSpec& rng,
                         std::size_t paths) {
    const PathEnsemble ensemble = simulate_rank_based(model, grid, rng, paths);
    const auto n = model.n();
    Eigen::MatrixXd rank_sup(static_cast<Eigen::Index>(paths), static_cast<Eigen::Index>(n));
    for_each_path(paths, [&](std::size_t p) {
        const auto& values = ensemble.path(p);
        const auto rep = verify_rank_representation(values, ranked_path(values).frame);
        for (std::size_t k = 0; k < n; ++k) {
            rank_sup(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(k)) = rep.per_rank[k].sup;
        }
    });
    RemarkProbe out;
    out.is_atlas = model.is_atlas();
    for (std::size_t k = 0; k < n; ++k) {
        const auto col = rank_sup.col(static_cast<Eigen::Index>(k));
        out.mean_rank_residual.push_back(col.mean());
        out.max_rank_residual.push_back(col.maxCoeff());
    }
    out.coincidence = coincidence_stats(ensemble, std::sqrt(grid.step()));
    return out;
}

}  // namespace ranklab
