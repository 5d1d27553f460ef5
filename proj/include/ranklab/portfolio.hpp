#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ranklab/core_paths.hpp"
#include "ranklab/rank_transform.hpp"

namespace ranklab {

/// Ranked weights below this are treated as having left the open simplex.
inline constexpr double kSimplexFloor = 1e-12;

/**
 * A positive C^2 function on (a neighborhood of) the unit simplex, evaluated
 * on ranked market weights. Built-ins carry analytic gradients.
 */
class GeneratingFunction {
public:
    using Value = std::function<double(const Eigen::VectorXd&)>;
    using Gradient = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

    GeneratingFunction(std::string name, Value value, Gradient gradient,
                       std::map<std::string, double> parameters = {});

    const std::string& name() const noexcept { return name_; }
    const std::map<std::string, double>& parameters() const noexcept { return parameters_; }

    double value(const Eigen::VectorXd& x) const { return value_(x); }
    Eigen::VectorXd gradient(const Eigen::VectorXd& x) const { return gradient_(x); }

    /// D_k log S = D_k S / S. Throws NumericError when S(x) <= 0.
    Eigen::VectorXd log_gradient(const Eigen::VectorXd& x) const;
    double log_value(const Eigen::VectorXd& x) const;

    static GeneratingFunction constant(double c = 1.0);
    /// -sum x_k log x_k
    static GeneratingFunction entropy();
    /// (sum x_k^p)^(1/p), 0 < p < 1
    static GeneratingFunction diversity(double p);
    /// (prod x_k)^(1/n)
    static GeneratingFunction geometric_mean();

    /// Built-in by name: constant (c), entropy, diversity (p), geometric_mean.
    static GeneratingFunction by_name(const std::string& name,
                                      const std::map<std::string, double>& parameters);

private:
    std::string name_;
    Value value_;
    Gradient gradient_;
    std::map<std::string, double> parameters_;
};

/// Portfolio or market weights: one n by (M+1) matrix per path.
struct WeightSeries {
    TimeGrid grid;
    std::vector<PathMatrix> paths;

    std::size_t num_paths() const noexcept { return paths.size(); }
    const PathMatrix& path(std::size_t p) const { return paths.at(p); }

    /// max over paths and grid points of |sum_i w_i - 1|.
    double max_normalization_error() const;
};

/// mu_i = X_i / sum_j X_j computed from logs with the per-time max subtracted.
PathMatrix market_weights_path(const PathMatrix& log_values);
WeightSeries market_weights(const PathEnsemble& log_values);

/**
 * Weights generated by S of the ranked market weights:
 *   pi_{p(k)} = (D_k log S + 1 - sum_j mu_(j) D_j log S) mu_(k).
 */
PathMatrix generated_weights_path(const PathMatrix& market, const RankFrame& frame,
                                  const GeneratingFunction& S);
WeightSeries generated_weights(const WeightSeries& market, const std::vector<RankFrame>& frames,
                               const GeneratingFunction& S);

/**
 * log(Z_pi / Z_mu) under self-financing rebalancing at the left endpoint:
 *   Z_pi(t_{m+1}) / Z_pi(t_m) = sum_i pi_i(t_m) X_i(t_{m+1}) / X_i(t_m),
 * with Z_pi(0) = Z_mu(0) and Z_mu = sum_i X_i.
 */
Series relative_wealth_path(const PathMatrix& weights, const PathMatrix& log_values);
std::vector<Series> relative_wealth(const WeightSeries& weights, const PathEnsemble& log_values);

/// sum_i of the Stratonovich integral of pi_i against log mu_i.
Series structural_process_path(const PathMatrix& weights, const PathMatrix& market);
std::vector<Series> structural_process(const WeightSeries& weights, const WeightSeries& market);

/// Aligned series of one path; all start at 0.
struct Decomposition {
    Series relative_log_return;
    Series generating_log_change;  // log S(mu_()(t)) - log S(mu_()(0))
    Series structural;
    Series trading;    // relative_log_return - structural
    Series theta_hat;  // relative_log_return - generating_log_change
};

struct DecompositionReport {
    TimeGrid grid;
    std::string generating_function;
    std::vector<Decomposition> paths;
};

/// log S of the ranked weights at every grid point, minus its initial value.
Series generating_log_change_path(const PathMatrix& market, const RankFrame& frame,
                                  const GeneratingFunction& S);

Decomposition decompose_path(const PathMatrix& weights, const PathMatrix& market,
                             const RankFrame& frame, const GeneratingFunction& S,
                             const PathMatrix& log_values);

DecompositionReport decompose(const WeightSeries& weights, const WeightSeries& market,
                              const std::vector<RankFrame>& frames, const GeneratingFunction& S,
                              const PathEnsemble& log_values);

}  // namespace ranklab
