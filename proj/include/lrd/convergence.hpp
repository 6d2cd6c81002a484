#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "chain.hpp"
#include "errors.hpp"
#include "prob_vector.hpp"
#include "return_time.hpp"
#include "summation.hpp"

namespace lrd {

struct series_point {
    std::uint64_t n;
    double value;
};

// Total variation distance between two truncated laws: half the L1 distance,
// with the two tail masses compared as one aggregated super-state.  This is
// exact when both tails sit on disjoint-from-truncation states and otherwise
// errs by at most the smaller tail mass.
inline double tv_distance(const prob_vector& mu, const prob_vector& nu) {
    if (mu.weights.size() != nu.weights.size()) {
        throw std::invalid_argument("tv_distance: mismatched supports (" +
                                    std::to_string(mu.weights.size()) + " vs " +
                                    std::to_string(nu.weights.size()) + " states)");
    }
    compensated_sum l1;
    for (std::size_t j = 0; j < mu.weights.size(); ++j) {
        l1.add(std::abs(mu.weights[j] - nu.weights[j]));
    }
    l1.add(std::abs(mu.tail_mass - nu.tail_mass));
    return 0.5 * l1.value();
}

// Weighted L1 distance sum_j f_j |mu_j - nu_j| for weights f_j >= 1; the tail
// super-state carries the minimal weight 1, so f == 1 gives exactly twice the
// total variation distance.
inline double f_norm(const prob_vector& mu, const prob_vector& nu,
                     const std::vector<double>& f) {
    if (mu.weights.size() != nu.weights.size() || f.size() != mu.weights.size()) {
        throw std::invalid_argument("f_norm: mismatched supports");
    }
    compensated_sum acc;
    for (std::size_t j = 0; j < f.size(); ++j) {
        if (!(f[j] >= 1.0)) {
            throw std::invalid_argument("f_norm: weights must be at least 1 everywhere");
        }
        acc.add(f[j] * std::abs(mu.weights[j] - nu.weights[j]));
    }
    acc.add(std::abs(mu.tail_mass - nu.tail_mass));
    return acc.value();
}

// Geometric grid of points integer-rounded between n_min and n_max inclusive;
// duplicates after rounding are dropped.
inline std::vector<std::uint64_t> geometric_grid(std::uint64_t n_min, std::uint64_t n_max,
                                                 std::size_t points) {
    if (n_min < 1 || n_max <= n_min || points < 2) {
        throw std::invalid_argument("geometric_grid: need 1 <= n_min < n_max and >= 2 points");
    }
    const double lo = std::log(static_cast<double>(n_min));
    const double hi = std::log(static_cast<double>(n_max));
    std::vector<std::uint64_t> grid;
    for (std::size_t i = 0; i < points; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(points - 1);
        const auto n = static_cast<std::uint64_t>(std::llround(std::exp(lo + t * (hi - lo))));
        if (grid.empty() || n > grid.back()) grid.push_back(n);
    }
    return grid;
}

inline std::vector<std::uint64_t> linear_grid(std::uint64_t n_min, std::uint64_t n_max,
                                              std::size_t points) {
    if (n_max <= n_min || points < 2) {
        throw std::invalid_argument("linear_grid: need n_min < n_max and >= 2 points");
    }
    std::vector<std::uint64_t> grid;
    for (std::size_t i = 0; i < points; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(points - 1);
        const auto n = static_cast<std::uint64_t>(
            std::llround(static_cast<double>(n_min) + t * static_cast<double>(n_max - n_min)));
        if (grid.empty() || n > grid.back()) grid.push_back(n);
    }
    return grid;
}

// Total variation distance between the time-n law and the stationary law at
// each grid point.  The renewal data is computed once and shared across the
// grid; start laws with positive tail mass fall back to stepwise evolution.
inline std::vector<series_point> tv_to_stationary(const age_chain& chain,
                                                  const prob_vector& init,
                                                  const std::vector<std::uint64_t>& grid,
                                                  std::size_t truncation) {
    if (grid.empty()) {
        throw std::invalid_argument("tv_to_stationary: empty grid");
    }
    for (std::size_t g = 1; g < grid.size(); ++g) {
        if (grid[g] <= grid[g - 1]) {
            throw std::invalid_argument("tv_to_stationary: grid must be strictly increasing");
        }
    }
    const prob_vector pi = stationary(chain, truncation);
    std::vector<series_point> out;
    out.reserve(grid.size());
    if (init.tail_mass == 0.0) {
        const detail::age_law_builder builder(chain, init, grid.back());
        for (std::uint64_t n : grid) {
            out.push_back({n, tv_distance(builder.law_at(n, truncation), pi)});
        }
    } else {
        std::uint64_t step = 0;
        prob_vector cur = n_step_distribution(chain, init, 0, truncation);
        const return_time_distribution& dist = chain.return_time();
        const std::uint64_t support = dist.max_support();
        const std::size_t age_cap =
            support == 0 ? truncation : std::min<std::size_t>(truncation, support - 1);
        std::vector<double> hazards(age_cap + 1);
        for (std::size_t j = 0; j <= age_cap; ++j) hazards[j] = dist.hazard(j);
        prob_vector walk;
        walk.weights.assign(age_cap + 1, 0.0);
        std::copy(cur.weights.begin(), cur.weights.begin() + age_cap + 1, walk.weights.begin());
        for (std::size_t j = age_cap + 1; j < cur.weights.size(); ++j) {
            if (cur.weights[j] != 0.0) {
                throw std::invalid_argument(
                    "tv_to_stationary: initial mass on unreachable age " + std::to_string(j));
            }
        }
        walk.tail_mass = cur.tail_mass;
        for (std::uint64_t n : grid) {
            for (; step < n; ++step) detail::step_truncated(hazards, walk);
            prob_vector padded;
            padded.weights.assign(truncation + 1, 0.0);
            std::copy(walk.weights.begin(), walk.weights.end(), padded.weights.begin());
            padded.tail_mass = walk.tail_mass;
            out.push_back({n, tv_distance(padded, pi)});
        }
    }
    return out;
}

inline std::vector<series_point> tv_to_stationary(const finite_chain& chain,
                                                  const prob_vector& init,
                                                  const std::vector<std::uint64_t>& grid) {
    if (grid.empty()) {
        throw std::invalid_argument("tv_to_stationary: empty grid");
    }
    const prob_vector pi = stationary(chain);
    std::vector<series_point> out;
    out.reserve(grid.size());
    prob_vector cur = init;
    std::uint64_t step = 0;
    for (std::uint64_t n : grid) {
        cur = n_step_distribution(chain, cur, n - step);
        step = n;
        out.push_back({n, tv_distance(cur, pi)});
    }
    return out;
}

enum class fit_model { power_law, geometric };

// Result of an ordinary-least-squares rate fit over a window of a series.
// power_law: log value against log n, slope = decay/growth exponent.
// geometric: log value against n, slope = per-step log ratio.
struct rate_fit {
    fit_model model;
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
    double r_squared = 0.0;
    std::uint64_t n_min = 0;
    std::uint64_t n_max = 0;

    // Per-step contraction factor implied by a geometric fit.
    double ratio() const { return std::exp(slope); }
};

namespace detail {

inline rate_fit ols_fit(fit_model model, const std::vector<series_point>& series) {
    if (series.size() < 4) {
        throw std::invalid_argument("rate fit: need at least 4 grid points, got " +
                                    std::to_string(series.size()));
    }
    const std::size_t m = series.size();
    std::vector<double> xs(m);
    std::vector<double> ys(m);
    for (std::size_t k = 0; k < m; ++k) {
        if (!(series[k].value > 0.0)) {
            throw std::invalid_argument("rate fit: series values must be positive, point n=" +
                                        std::to_string(series[k].n) + " is not");
        }
        xs[k] = model == fit_model::power_law ? std::log(static_cast<double>(series[k].n))
                                              : static_cast<double>(series[k].n);
        ys[k] = std::log(series[k].value);
    }
    double mean_x = 0.0;
    double mean_y = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        mean_x += xs[k];
        mean_y += ys[k];
    }
    mean_x /= static_cast<double>(m);
    mean_y /= static_cast<double>(m);
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        const double dx = xs[k] - mean_x;
        const double dy = ys[k] - mean_y;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    rate_fit fit;
    fit.model = model;
    fit.slope = sxy / sxx;
    fit.intercept = mean_y - fit.slope * mean_x;
    double ssr = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        const double resid = ys[k] - (fit.intercept + fit.slope * xs[k]);
        ssr += resid * resid;
    }
    fit.slope_stderr =
        std::sqrt(ssr / static_cast<double>(m - 2) / sxx);
    fit.r_squared = syy > 0.0 ? std::clamp(1.0 - ssr / syy, 0.0, 1.0) : 1.0;
    fit.n_min = series.front().n;
    fit.n_max = series.back().n;
    return fit;
}

}  // namespace detail

// OLS of log value against log n: recovers the exponent of a power-law
// series (planted exponents exactly, empirical ones with a standard error).
inline rate_fit fit_power_law(const std::vector<series_point>& series) {
    return detail::ols_fit(fit_model::power_law, series);
}

// OLS of log value against n: recovers the per-step ratio of a geometrically
// decaying series via exp(slope).
inline rate_fit fit_geometric(const std::vector<series_point>& series) {
    return detail::ols_fit(fit_model::geometric, series);
}

enum class rate_verdict { pass, fail };

// Tests whether n^beta * series(n) still vanishes: pass exactly when the
// fitted log-log slope of the scaled series is negative at one-sided 95%
// confidence.  For a power-law return time with tail exponent alpha the
// theory predicts pass for beta < alpha - 1 and fail beyond, so this probes
// the sharpness of the polynomial convergence rate.
inline rate_verdict verify_rate_theorem(const return_time_distribution& dist, double beta,
                                        const std::vector<series_point>& series) {
    if (dist.kind() != return_time_kind::power_law) {
        throw std::invalid_argument(
            "verify_rate_theorem: defined for power-law return times only");
    }
    if (!(beta >= 0.0)) {
        throw std::invalid_argument("verify_rate_theorem: beta must be nonnegative");
    }
    std::vector<series_point> scaled;
    scaled.reserve(series.size());
    for (const series_point& p : series) {
        scaled.push_back({p.n, p.value * std::pow(static_cast<double>(p.n), beta)});
    }
    const rate_fit fit = fit_power_law(scaled);
    constexpr double z95 = 1.6448536269514722;  // one-sided 95% normal quantile
    return fit.slope + z95 * fit.slope_stderr < 0.0 ? rate_verdict::pass
                                                    : rate_verdict::fail;
}

}  // namespace lrd
