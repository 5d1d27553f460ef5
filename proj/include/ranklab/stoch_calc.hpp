#pragma once

// Discrete estimators for stochastic integrals and brackets on a uniform grid.
//
// All estimators take two equally long series on the same grid and return a
// running value with value[0] = 0. The averaging window is epsilon = c h,
// with paths extended constantly beyond both ends of the grid. At c = 1 the
// estimators reduce to the classical Riemann sums:
//   ito          sum_{j<m} Y_j (X_{j+1} - X_j)
//   backward     sum_{j<m} Y_{j+1} (X_{j+1} - X_j)
//   covariation  sum_{j<m} (X_{j+1} - X_j)(Y_{j+1} - Y_j)
//   stratonovich sum_{j<m} (Y_j + Y_{j+1})/2 (X_{j+1} - X_j)

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "ranklab/errors.hpp"

namespace ranklab {

enum class Scheme { ito, forward, backward, stratonovich, covariation };

inline const char* scheme_name(Scheme s) {
    switch (s) {
        case Scheme::ito: return "ito";
        case Scheme::forward: return "forward";
        case Scheme::backward: return "backward";
        case Scheme::stratonovich: return "stratonovich";
        case Scheme::covariation: return "covariation";
    }
    return "unknown";
}

template <typename Scalar>
using SeriesT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
struct BasicIntegralResult {
    SeriesT<Scalar> value;
    Scheme scheme = Scheme::ito;
    int window = 1;  // epsilon = window * h

    Scalar final() const { return value[value.size() - 1]; }
};

using IntegralResult = BasicIntegralResult<double>;

namespace detail {

template <typename A, typename B>
void require_aligned(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b, const char* op) {
    if (a.size() != b.size()) {
        throw ValidationError(std::string(op) + ": series lengths differ (" + std::to_string(a.size()) +
                              " vs " + std::to_string(b.size()) + ")");
    }
    if (a.size() < 1) throw ValidationError(std::string(op) + ": empty series");
}

inline void require_window(int window, const char* op) {
    if (window < 1) {
        throw ValidationError(std::string(op) + ": window must be a positive multiple of h, got " +
                              std::to_string(window));
    }
}

template <typename D>
using scalar_of = typename D::Scalar;

}  // namespace detail

/// +1 where x > 0, -1 where x <= 0.
template <typename Derived>
SeriesT<typename Derived::Scalar> sgn_series(const Eigen::MatrixBase<Derived>& x) {
    using S = typename Derived::Scalar;
    SeriesT<S> out(x.size());
    for (Eigen::Index m = 0; m < x.size(); ++m) out[m] = x(m) > S(0) ? S(1) : S(-1);
    return out;
}

template <typename DY, typename DX>
BasicIntegralResult<detail::scalar_of<DX>> ito_integral(const Eigen::MatrixBase<DY>& y,
                                                        const Eigen::MatrixBase<DX>& x) {
    using S = detail::scalar_of<DX>;
    detail::require_aligned(y, x, "ito_integral");
    const auto len = x.size();
    BasicIntegralResult<S> out{SeriesT<S>(len), Scheme::ito, 1};
    out.value[0] = S(0);
    for (Eigen::Index j = 0; j + 1 < len; ++j) {
        out.value[j + 1] = out.value[j] + y(j) * (x(j + 1) - x(j));
    }
    return out;
}

/// (1/c) sum_{j<m} Y_j (X_{min(j+c, M)} - X_j).
template <typename DY, typename DX>
BasicIntegralResult<detail::scalar_of<DX>> forward_integral(const Eigen::MatrixBase<DY>& y,
                                                            const Eigen::MatrixBase<DX>& x,
                                                            int window = 1) {
    using S = detail::scalar_of<DX>;
    detail::require_aligned(y, x, "forward_integral");
    detail::require_window(window, "forward_integral");
    const auto len = x.size();
    const auto last = len - 1;
    const Eigen::Index c = window;
    const S scale = S(1) / static_cast<S>(window);
    BasicIntegralResult<S> out{SeriesT<S>(len), Scheme::forward, window};
    out.value[0] = S(0);
    for (Eigen::Index j = 0; j < last; ++j) {
        const S dx = x(std::min(j + c, last)) - x(j);
        out.value[j + 1] = out.value[j] + (window == 1 ? y(j) * dx : scale * y(j) * dx);
    }
    return out;
}

/// (1/c) sum_{1<=j<=m} Y_j (X_j - X_{max(j-c, 0)}).
template <typename DY, typename DX>
BasicIntegralResult<detail::scalar_of<DX>> backward_integral(const Eigen::MatrixBase<DY>& y,
                                                             const Eigen::MatrixBase<DX>& x,
                                                             int window = 1) {
    using S = detail::scalar_of<DX>;
    detail::require_aligned(y, x, "backward_integral");
    detail::require_window(window, "backward_integral");
    const auto len = x.size();
    const Eigen::Index c = window;
    const S scale = S(1) / static_cast<S>(window);
    BasicIntegralResult<S> out{SeriesT<S>(len), Scheme::backward, window};
    out.value[0] = S(0);
    for (Eigen::Index j = 1; j < len; ++j) {
        const S dx = x(j) - x(std::max<Eigen::Index>(j - c, 0));
        out.value[j] = out.value[j - 1] + (window == 1 ? y(j) * dx : scale * y(j) * dx);
    }
    return out;
}

/// (1/c) sum_{j<m} (X_{j+c} - X_j)(Y_{j+c} - Y_j), indices clamped at M.
template <typename DX, typename DY>
BasicIntegralResult<detail::scalar_of<DX>> covariation(const Eigen::MatrixBase<DX>& x,
                                                       const Eigen::MatrixBase<DY>& y,
                                                       int window = 1) {
    using S = detail::scalar_of<DX>;
    detail::require_aligned(x, y, "covariation");
    detail::require_window(window, "covariation");
    const auto len = x.size();
    const auto last = len - 1;
    const Eigen::Index c = window;
    const S scale = S(1) / static_cast<S>(window);
    BasicIntegralResult<S> out{SeriesT<S>(len), Scheme::covariation, window};
    out.value[0] = S(0);
    for (Eigen::Index j = 0; j < last; ++j) {
        const auto ahead = std::min(j + c, last);
        const S term = (x(ahead) - x(j)) * (y(ahead) - y(j));
        out.value[j + 1] = out.value[j] + (window == 1 ? term : scale * term);
    }
    return out;
}

/**
 * Midpoint sum. The Ito-plus-half-covariation form is accumulated alongside
 * and the two must agree to round-off; a disagreement throws std::logic_error.
 */
template <typename DY, typename DX>
BasicIntegralResult<detail::scalar_of<DX>> stratonovich_integral(const Eigen::MatrixBase<DY>& y,
                                                                 const Eigen::MatrixBase<DX>& x) {
    using S = detail::scalar_of<DX>;
    detail::require_aligned(y, x, "stratonovich_integral");
    const auto len = x.size();
    BasicIntegralResult<S> out{SeriesT<S>(len), Scheme::stratonovich, 1};
    out.value[0] = S(0);
    S ito = S(0);
    S cov = S(0);
    S magnitude = S(0);
    S worst = S(0);
    const S tolerance = std::max(S(1e-10), S(64) * std::numeric_limits<S>::epsilon());
    for (Eigen::Index j = 0; j + 1 < len; ++j) {
        const S dx = x(j + 1) - x(j);
        const S dy = y(j + 1) - y(j);
        out.value[j + 1] = out.value[j] + S(0.5) * (y(j) + y(j + 1)) * dx;
        ito += y(j) * dx;
        cov += dy * dx;
        magnitude += (std::abs(y(j)) + std::abs(y(j + 1))) * std::abs(dx);
        worst = std::max(worst, std::abs(out.value[j + 1] - (ito + S(0.5) * cov)) -
                                    tolerance * magnitude);
    }
    if (worst > std::numeric_limits<S>::min()) {
        throw std::logic_error("stratonovich_integral: midpoint and ito + covariation/2 forms disagree");
    }
    return out;
}

template <typename Scalar>
struct BasicLocalTime {
    SeriesT<Scalar> half_signed;  // (int sgn(X) dX - |X(t)| + |X(0)|) / 2
    SeriesT<Scalar> standard;  // |X(t)| - |X(0)| - int sgn(X) dX, equal to -2 * half_signed
};

using LocalTime = BasicLocalTime<double>;

/// Tanaka residuals at zero from the Ito integral of sgn(X) against X.
template <typename Derived>
BasicLocalTime<typename Derived::Scalar> local_time_residual(const Eigen::MatrixBase<Derived>& x) {
    using S = typename Derived::Scalar;
    if (x.size() < 1) throw ValidationError("local_time_residual: empty series");
    const auto ito = ito_integral(sgn_series(x), x);
    const S start = std::abs(x(0));
    SeriesT<S> moved(x.size());
    for (Eigen::Index m = 0; m < x.size(); ++m) moved[m] = std::abs(x(m)) - start;
    BasicLocalTime<S> out;
    out.standard = moved - ito.value;
    out.half_signed = S(0.5) * (ito.value - moved);
    return out;
}

/// Sum of squared increments over the whole series.
template <typename Derived>
typename Derived::Scalar realized_quadratic_variation(const Eigen::MatrixBase<Derived>& x) {
    using S = typename Derived::Scalar;
    S qv = S(0);
    for (Eigen::Index j = 0; j + 1 < x.size(); ++j) {
        const S d = x(j + 1) - x(j);
        qv += d * d;
    }
    return qv;
}

}  // namespace ranklab
