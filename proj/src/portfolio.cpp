#include "ranklab/portfolio.hpp"

#include <cmath>
#include <sstream>

#include "ranklab/stoch_calc.hpp"

namespace ranklab {

namespace {

void require_interior(const Eigen::VectorXd& x, const std::string& name) {
    const double least = x.minCoeff();
    if (!(least >= kSimplexFloor)) {
        std::ostringstream msg;
        msg << name << ": ranked weight " << least << " is outside the open simplex (floor "
            << kSimplexFloor << ")";
        throw NumericError(msg.str());
    }
}

Eigen::VectorXd ranked_column(const PathMatrix& market, const RankFrame& frame, Eigen::Index m) {
    Eigen::VectorXd out(market.rows());
    for (Eigen::Index k = 0; k < market.rows(); ++k) out[k] = market(frame.order(k, m), m);
    return out;
}

double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& v) {
    const double top = v.maxCoeff();
    return top + std::log((v.array() - top).exp().sum());
}

void require_same_shape(const PathMatrix& a, const PathMatrix& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ValidationError(std::string(op) + ": weight and price arrays are not aligned");
    }
}

}  // namespace

GeneratingFunction::GeneratingFunction(std::string name, Value value, Gradient gradient,
                                       std::map<std::string, double> parameters)
    : name_(std::move(name)),
      value_(std::move(value)),
      gradient_(std::move(gradient)),
      parameters_(std::move(parameters)) {}

double GeneratingFunction::log_value(const Eigen::VectorXd& x) const {
    const double s = value(x);
    if (!(s > 0.0) || !std::isfinite(s)) {
        throw NumericError(name_ + " generating function is not positive (" + std::to_string(s) + ")");
    }
    return std::log(s);
}

Eigen::VectorXd GeneratingFunction::log_gradient(const Eigen::VectorXd& x) const {
    const double s = value(x);
    if (!(s > 0.0) || !std::isfinite(s)) {
        throw NumericError(name_ + " generating function is not positive (" + std::to_string(s) + ")");
    }
    return gradient(x) / s;
}

GeneratingFunction GeneratingFunction::constant(double c) {
    if (!(c > 0.0)) throw ValidationError("constant generating function needs c > 0");
    return GeneratingFunction(
        "constant", [c](const Eigen::VectorXd&) { return c; },
        [](const Eigen::VectorXd& x) { return Eigen::VectorXd::Zero(x.size()).eval(); }, {{"c", c}});
}

GeneratingFunction GeneratingFunction::entropy() {
    return GeneratingFunction(
        "entropy",
        [](const Eigen::VectorXd& x) {
            double s = 0.0;
            for (double v : x) {
                if (v > 0.0) s -= v * std::log(v);
            }
            return s;
        },
        [](const Eigen::VectorXd& x) {
            require_interior(x, "entropy");
            return (-(x.array().log()) - 1.0).matrix().eval();
        });
}

GeneratingFunction GeneratingFunction::diversity(double p) {
    if (!(p > 0.0 && p < 1.0)) throw ValidationError("diversity exponent p must lie in (0, 1)");
    auto value = [p](const Eigen::VectorXd& x) {
        if ((x.array() <= 0.0).any()) throw NumericError("diversity: non-positive weight");
        return std::pow(x.array().pow(p).sum(), 1.0 / p);
    };
    auto gradient = [p, value](const Eigen::VectorXd& x) {
        const double s = value(x);
        return (std::pow(s, 1.0 - p) * x.array().pow(p - 1.0)).matrix().eval();
    };
    return GeneratingFunction("diversity", value, gradient, {{"p", p}});
}

GeneratingFunction GeneratingFunction::geometric_mean() {
    auto value = [](const Eigen::VectorXd& x) {
        if ((x.array() <= 0.0).any()) return 0.0;
        return std::exp(x.array().log().mean());
    };
    auto gradient = [value](const Eigen::VectorXd& x) {
        require_interior(x, "geometric_mean");
        const double n = static_cast<double>(x.size());
        return (value(x) / (n * x.array())).matrix().eval();
    };
    return GeneratingFunction("geometric_mean", value, gradient);
}

GeneratingFunction GeneratingFunction::by_name(const std::string& name,
                                               const std::map<std::string, double>& parameters) {
    auto param = [&](const std::string& key, double fallback) {
        const auto it = parameters.find(key);
        return it == parameters.end() ? fallback : it->second;
    };
    if (name == "constant") return constant(param("c", 1.0));
    if (name == "entropy") return entropy();
    if (name == "diversity") return diversity(param("p", 0.5));
    if (name == "geometric_mean") return geometric_mean();
    throw ValidationError("unknown generating function '" + name +
                          "' (expected constant, entropy, diversity, geometric_mean)");
}

double WeightSeries::max_normalization_error() const {
    double worst = 0.0;
    for (const auto& w : paths) {
        worst = std::max(worst, (w.colwise().sum().array() - 1.0).abs().maxCoeff());
    }
    return worst;
}

PathMatrix market_weights_path(const PathMatrix& log_values) {
    PathMatrix out(log_values.rows(), log_values.cols());
    for (Eigen::Index m = 0; m < log_values.cols(); ++m) {
        const Eigen::VectorXd shifted =
            (log_values.col(m).array() - log_values.col(m).maxCoeff()).exp().matrix();
        out.col(m) = shifted / shifted.sum();
    }
    return out;
}

WeightSeries market_weights(const PathEnsemble& log_values) {
    WeightSeries out{log_values.grid(), std::vector<PathMatrix>(log_values.num_paths())};
    for_each_path(log_values.num_paths(),
                  [&](std::size_t p) { out.paths[p] = market_weights_path(log_values.path(p)); });
    return out;
}

PathMatrix generated_weights_path(const PathMatrix& market, const RankFrame& frame,
                                  const GeneratingFunction& S) {
    if (frame.order.rows() != market.rows() || frame.order.cols() != market.cols()) {
        throw ValidationError("generated_weights: rank frame does not match market weights");
    }
    PathMatrix out(market.rows(), market.cols());
    for (Eigen::Index m = 0; m < market.cols(); ++m) {
        const Eigen::VectorXd ranked = ranked_column(market, frame, m);
        Eigen::VectorXd dlog;
        try {
            dlog = S.log_gradient(ranked);
        } catch (const NumericError& e) {
            throw NumericError(e.what(), std::nullopt, static_cast<std::size_t>(m));
        }
        const double correction = 1.0 - ranked.dot(dlog);
        for (Eigen::Index k = 0; k < market.rows(); ++k) {
            out(frame.order(k, m), m) = (dlog[k] + correction) * ranked[k];
        }
    }
    return out;
}

WeightSeries generated_weights(const WeightSeries& market, const std::vector<RankFrame>& frames,
                               const GeneratingFunction& S) {
    if (frames.size() != market.num_paths()) {
        throw ValidationError("generated_weights: one rank frame per path required");
    }
    WeightSeries out{market.grid, std::vector<PathMatrix>(market.num_paths())};
    for_each_path(market.num_paths(), [&](std::size_t p) {
        try {
            out.paths[p] = generated_weights_path(market.path(p), frames[p], S);
        } catch (const NumericError& e) {
            throw e.on_path(p);
        }
    });
    return out;
}

Series relative_wealth_path(const PathMatrix& weights, const PathMatrix& log_values) {
    require_same_shape(weights, log_values, "relative_wealth");
    const auto cols = log_values.cols();
    Series out(cols);
    out[0] = 0.0;
    double previous_market = log_sum_exp(log_values.col(0));
    for (Eigen::Index m = 0; m + 1 < cols; ++m) {
        const double growth =
            (weights.col(m).array() * (log_values.col(m + 1) - log_values.col(m)).array().exp()).sum();
        if (!(growth > 0.0) || !std::isfinite(growth)) {
            std::ostringstream msg;
            msg << "portfolio wealth became non-positive (growth factor " << growth << ", weights ["
                << weights.col(m).transpose() << "])";
            throw NumericError(msg.str(), std::nullopt, static_cast<std::size_t>(m));
        }
        const double market = log_sum_exp(log_values.col(m + 1));
        out[m + 1] = out[m] + std::log(growth) - (market - previous_market);
        previous_market = market;
    }
    return out;
}

std::vector<Series> relative_wealth(const WeightSeries& weights, const PathEnsemble& log_values) {
    if (weights.num_paths() != log_values.num_paths()) {
        throw ValidationError("relative_wealth: path counts differ");
    }
    std::vector<Series> out(weights.num_paths());
    for_each_path(weights.num_paths(), [&](std::size_t p) {
        try {
            out[p] = relative_wealth_path(weights.path(p), log_values.path(p));
        } catch (const NumericError& e) {
            throw e.on_path(p);
        }
    });
    return out;
}

Series structural_process_path(const PathMatrix& weights, const PathMatrix& market) {
    require_same_shape(weights, market, "structural_process");
    const PathMatrix log_market = market.array().log().matrix();
    Series out = Series::Zero(market.cols());
    for (Eigen::Index i = 0; i < market.rows(); ++i) {
        out += stratonovich_integral(weights.row(i), log_market.row(i)).value;
    }
    return out;
}

std::vector<Series> structural_process(const WeightSeries& weights, const WeightSeries& market) {
    if (weights.num_paths() != market.num_paths()) {
        throw ValidationError("structural_process: path counts differ");
    }
    std::vector<Series> out(weights.num_paths());
    for_each_path(weights.num_paths(), [&](std::size_t p) {
        out[p] = structural_process_path(weights.path(p), market.path(p));
    });
    return out;
}

Series generating_log_change_path(const PathMatrix& market, const RankFrame& frame,
                                  const GeneratingFunction& S) {
    Series out(market.cols());
    double start = 0.0;
    for (Eigen::Index m = 0; m < market.cols(); ++m) {
        double level = 0.0;
        try {
            level = S.log_value(ranked_column(market, frame, m));
        } catch (const NumericError& e) {
            throw NumericError(e.what(), std::nullopt, static_cast<std::size_t>(m));
        }
        if (m == 0) start = level;
        out[m] = level - start;
    }
    return out;
}

Decomposition decompose_path(const PathMatrix& weights, const PathMatrix& market,
                             const RankFrame& frame, const GeneratingFunction& S,
                             const PathMatrix& log_values) {
    Decomposition d;
    d.relative_log_return = relative_wealth_path(weights, log_values);
    d.generating_log_change = generating_log_change_path(market, frame, S);
    d.structural = structural_process_path(weights, market);
    d.trading = d.relative_log_return - d.structural;
    d.theta_hat = d.relative_log_return - d.generating_log_change;
    return d;
}

DecompositionReport decompose(const WeightSeries& weights, const WeightSeries& market,
                              const std::vector<RankFrame>& frames, const GeneratingFunction& S,
                              const PathEnsemble& log_values) {
    const std::size_t paths = log_values.num_paths();
    if (weights.num_paths() != paths || market.num_paths() != paths || frames.size() != paths) {
        throw ValidationError("decompose: inputs disagree on the number of paths");
    }
    DecompositionReport out{log_values.grid(), S.name(), std::vector<Decomposition>(paths)};
    for_each_path(paths, [&](std::size_t p) {
        try {
            out.paths[p] = decompose_path(weights.path(p), market.path(p), frames[p], S,
                                          log_values.path(p));
        } catch (const NumericError& e) {
            throw e.on_path(p);
        }
    });
    return out;
}

}  // namespace ranklab
