#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "chain.hpp"
#include "convergence.hpp"
#include "errors.hpp"
#include "format.hpp"
#include "rng.hpp"
#include "summation.hpp"

namespace lrd {

inline std::string describe(const return_time_distribution& dist) {
    switch (dist.kind()) {
        case return_time_kind::power_law:
            return "power_law(alpha=" + format_double(dist.alpha()) + ")";
        case return_time_kind::geometric:
            return "geometric(p=" + format_double(dist.p()) + ")";
        case return_time_kind::finite_support:
            return "finite_support(K=" + std::to_string(dist.max_support()) + ")";
    }
    return "unknown";
}

// One sampled path: states[t-1] = X_t for t = 1..n, given X_0 = the start
// state.  Reproducible from (chain, start, n, seed).
struct trajectory {
    std::vector<std::uint64_t> states;
    std::uint64_t seed = 0;
    std::string chain_descriptor;
};

// Exact simulation of the age chain by renewal unrolling: draw the residual
// life of the start age, then successive full return times, and write out
// the deterministic age ramps in between.  Equivalent in law to stepwise
// hazard sampling, with O(number of renewals) random draws.
inline trajectory simulate_trajectory(const age_chain& chain, std::uint64_t start,
                                      std::size_t n, std::uint64_t seed) {
    if (n < 1) {
        throw std::invalid_argument("simulate_trajectory: length must be at least 1");
    }
    const return_time_distribution& dist = chain.return_time();
    if (dist.ccdf(start) <= 0.0) {
        throw zero_tail_error("simulate_trajectory: start age " + std::to_string(start) +
                              " is unreachable");
    }
    trajectory tr;
    tr.states.assign(n, 0);
    tr.seed = seed;
    tr.chain_descriptor = "age_chain(" + describe(dist) + ")";
    rng64 rng(seed);
    std::uint64_t t = 0;
    std::uint64_t age = start;
    while (t < n) {
        const std::uint64_t gap = dist.sample_residual(age, rng);
        const std::uint64_t ramp_end = std::min<std::uint64_t>(t + gap - 1, n);
        for (std::uint64_t s = t + 1; s <= ramp_end; ++s) {
            tr.states[s - 1] = age + (s - t);
        }
        if (t + gap <= n) {
            tr.states[t + gap - 1] = 0;
        }
        t += gap;
        age = 0;
    }
    return tr;
}

inline trajectory simulate_trajectory(const finite_chain& chain, std::size_t start,
                                      std::size_t n, std::uint64_t seed) {
    if (n < 1) {
        throw std::invalid_argument("simulate_trajectory: length must be at least 1");
    }
    if (start >= chain.size()) {
        throw std::invalid_argument("simulate_trajectory: start state out of range");
    }
    trajectory tr;
    tr.states.assign(n, 0);
    tr.seed = seed;
    tr.chain_descriptor = "finite_chain(S=" + std::to_string(chain.size()) + ")";
    std::vector<std::vector<double>> row_cdf(chain.size());
    for (std::size_t i = 0; i < chain.size(); ++i) {
        row_cdf[i].resize(chain.size());
        double cum = 0.0;
        for (std::size_t j = 0; j < chain.size(); ++j) {
            cum += chain.at(i, j);
            row_cdf[i][j] = cum;
        }
    }
    rng64 rng(seed);
    std::size_t cur = start;
    for (std::size_t t = 1; t <= n; ++t) {
        const double u = rng.uniform01();
        const auto it = std::upper_bound(row_cdf[cur].begin(), row_cdf[cur].end(), u);
        cur = std::min<std::size_t>(
            static_cast<std::size_t>(it - row_cdf[cur].begin()), chain.size() - 1);
        tr.states[t - 1] = cur;
    }
    return tr;
}

// Visit-count variances Var(N_i(0, n]) on a grid of horizons: exact values,
// Monte Carlo values with jackknife standard errors, or both.
struct variance_series {
    std::vector<std::uint64_t> grid;
    std::vector<double> var_exact;  // empty when not computed
    std::vector<double> var_mc;     // empty when not computed
    std::vector<double> stderr_mc;  // jackknife; parallel to var_mc
};

namespace detail {

inline void require_counting_grid(const std::vector<std::uint64_t>& grid) {
    if (grid.empty() || grid.front() < 1) {
        throw std::invalid_argument("counting variance: grid must start at n >= 1");
    }
    for (std::size_t g = 1; g < grid.size(); ++g) {
        if (grid[g] <= grid[g - 1]) {
            throw std::invalid_argument("counting variance: grid must be strictly increasing");
        }
    }
}

// Var(N_i(0,n]) under a stationary start from the lag covariances:
//   Var = n pi (1 - pi) + 2 pi sum_{d=1}^{n-1} (n - d)(p^d_ii - pi),
// evaluated on the whole grid in one sweep via the prefix sums of
// (p^d_ii - pi) and d (p^d_ii - pi).
inline std::vector<double> variance_from_return_probabilities(
    const std::vector<double>& pii, double pi, const std::vector<std::uint64_t>& grid) {
    std::vector<double> out;
    out.reserve(grid.size());
    compensated_sum dev_sum;    // A_m = sum_{d<=m} (p^d_ii - pi)
    compensated_sum dev_d_sum;  // B_m = sum_{d<=m} d (p^d_ii - pi)
    std::size_t g = 0;
    for (std::uint64_t d = 0; g < grid.size(); ++d) {
        while (g < grid.size() && grid[g] == d + 1) {
            const double n = static_cast<double>(grid[g]);
            const double weighted = n * dev_sum.value() - dev_d_sum.value();
            out.push_back(n * pi * (1.0 - pi) + 2.0 * pi * weighted);
            ++g;
        }
        if (g >= grid.size()) break;
        const double dev = pii[d + 1] - pi;
        dev_sum.add(dev);
        dev_d_sum.add(static_cast<double>(d + 1) * dev);
    }
    return out;
}

}  // namespace detail

inline variance_series counting_variance_exact(const age_chain& chain, std::size_t state,
                                               const std::vector<std::uint64_t>& grid) {
    detail::require_counting_grid(grid);
    const return_time_distribution& dist = chain.return_time();
    const double mean = dist.mean_return_time();
    if (!std::isfinite(mean)) {
        throw no_stationary_error("counting_variance_exact: null recurrent chain");
    }
    const double pi = dist.ccdf(state) / mean;
    const std::vector<double> pii =
        detail::return_probabilities(dist, state, grid.back());
    variance_series series;
    series.grid = grid;
    series.var_exact = detail::variance_from_return_probabilities(pii, pi, grid);
    return series;
}

inline variance_series counting_variance_exact(const finite_chain& chain, std::size_t state,
                                               const std::vector<std::uint64_t>& grid) {
    detail::require_counting_grid(grid);
    const prob_vector pi_vec = stationary(chain);
    const double pi = pi_vec.weights.at(state);
    std::vector<double> pii(grid.back() + 1, 0.0);
    pii[0] = 1.0;
    prob_vector cur = prob_vector::point_mass(state, chain.size() - 1);
    for (std::uint64_t d = 1; d <= grid.back(); ++d) {
        cur = n_step_distribution(chain, cur, 1);
        pii[d] = cur.weights[state];
    }
    variance_series series;
    series.grid = grid;
    series.var_exact = detail::variance_from_return_probabilities(pii, pi, grid);
    return series;
}

namespace detail {

// Sample variance plus delete-one jackknife standard error of that variance.
inline std::pair<double, double> variance_with_jackknife(const std::vector<double>& xs) {
    const std::size_t r = xs.size();
    compensated_sum total;
    for (double x : xs) total.add(x);
    const double mean = total.value() / static_cast<double>(r);
    compensated_sum centered;   // sums to ~0, kept for exact delete-one algebra
    compensated_sum centered2;
    std::vector<double> ys(r);
    for (std::size_t k = 0; k < r; ++k) {
        ys[k] = xs[k] - mean;
        centered.add(ys[k]);
        centered2.add(ys[k] * ys[k]);
    }
    const double s1 = centered.value();
    const double s2 = centered2.value();
    const double var = (s2 - s1 * s1 / static_cast<double>(r)) / static_cast<double>(r - 1);

    const double rm1 = static_cast<double>(r - 1);
    const double rm2 = static_cast<double>(r - 2);
    std::vector<double> leave_out(r);
    compensated_sum jack_total;
    for (std::size_t k = 0; k < r; ++k) {
        const double s1k = s1 - ys[k];
        const double s2k = s2 - ys[k] * ys[k];
        leave_out[k] = (s2k - s1k * s1k / rm1) / rm2;
        jack_total.add(leave_out[k]);
    }
    const double jack_mean = jack_total.value() / static_cast<double>(r);
    compensated_sum spread;
    for (double v : leave_out) {
        spread.add((v - jack_mean) * (v - jack_mean));
    }
    const double se = std::sqrt(rm1 / static_cast<double>(r) * spread.value());
    return {var, se};
}

// Visits to the given age during (0, n] along one renewal-unrolled path.
template <class Rng>
std::uint64_t sample_visit_count(const return_time_distribution& dist, std::uint64_t start,
                                 std::uint64_t target, std::uint64_t n, Rng& rng) {
    std::uint64_t visits = 0;
    std::uint64_t t = 0;
    std::uint64_t age = start;
    while (t < n) {
        const std::uint64_t gap = dist.sample_residual(age, rng);
        if (target > age && target - age < gap && t + (target - age) <= n) {
            ++visits;  // the ramp passes through the target age in time
        }
        if (target == 0 && t + gap <= n) {
            ++visits;  // renewal lands inside the window
        }
        t += gap;
        age = 0;
    }
    return visits;
}

// Stationary-start age table: cdf of the stationary age law truncated where
// it saturates machine precision or hits the cap.  Draws beyond the table are
// rejected and redrawn, i.e. the start is stationary conditioned on the
// covered range.
inline std::vector<double> stationary_age_cdf(const return_time_distribution& dist,
                                              double mean, std::size_t cap) {
    std::vector<double> cdf;
    compensated_sum cum;
    for (std::size_t j = 0; j < cap; ++j) {
        const double w = dist.ccdf(j) / mean;
        if (w <= 0.0) break;
        cum.add(w);
        cdf.push_back(std::min(cum.value(), 1.0));
        if (cdf.back() >= 1.0 - 1e-17) break;
    }
    return cdf;
}

}  // namespace detail

// Monte Carlo visit-count variance with stationary starts.  Every (grid
// point, replica) cell draws from its own deterministic substream, so the
// result is independent of evaluation order and reproducible from the seed.
inline variance_series counting_variance_mc(const age_chain& chain, std::size_t state,
                                            const std::vector<std::uint64_t>& grid,
                                            std::size_t reps, std::uint64_t seed) {
    detail::require_counting_grid(grid);
    if (reps < 2) {
        throw std::invalid_argument("counting_variance_mc: need at least 2 replicas");
    }
    const return_time_distribution& dist = chain.return_time();
    const double mean = dist.mean_return_time();
    if (!std::isfinite(mean)) {
        throw no_stationary_error("counting_variance_mc: null recurrent chain");
    }
    const std::size_t cap =
        std::max<std::size_t>(4 * grid.back(), std::size_t{1} << 20);
    const std::vector<double> cdf = detail::stationary_age_cdf(dist, mean, cap);

    variance_series series;
    series.grid = grid;
    std::vector<double> counts(reps);
    for (std::size_t g = 0; g < grid.size(); ++g) {
        const std::uint64_t n = grid[g];
        for (std::size_t r = 0; r < reps; ++r) {
            rng64 rng = rng64::stream(seed, static_cast<std::uint64_t>(g) * reps + r);
            std::size_t start;
            for (;;) {
                const double u = rng.uniform01();
                const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
                if (it != cdf.end()) {
                    start = static_cast<std::size_t>(it - cdf.begin());
                    break;
                }
            }
            counts[r] = static_cast<double>(
                detail::sample_visit_count(dist, start, state, n, rng));
        }
        const auto [var, se] = detail::variance_with_jackknife(counts);
        series.var_mc.push_back(var);
        series.stderr_mc.push_back(se);
    }
    return series;
}

inline variance_series counting_variance_mc(const finite_chain& chain, std::size_t state,
                                            const std::vector<std::uint64_t>& grid,
                                            std::size_t reps, std::uint64_t seed) {
    detail::require_counting_grid(grid);
    if (reps < 2) {
        throw std::invalid_argument("counting_variance_mc: need at least 2 replicas");
    }
    const prob_vector pi = stationary(chain);
    std::vector<double> start_cdf(chain.size());
    {
        double cum = 0.0;
        for (std::size_t j = 0; j < chain.size(); ++j) {
            cum += pi.weights[j];
            start_cdf[j] = cum;
        }
    }
    std::vector<std::vector<double>> row_cdf(chain.size());
    for (std::size_t i = 0; i < chain.size(); ++i) {
        row_cdf[i].resize(chain.size());
        double cum = 0.0;
        for (std::size_t j = 0; j < chain.size(); ++j) {
            cum += chain.at(i, j);
            row_cdf[i][j] = cum;
        }
    }
    variance_series series;
    series.grid = grid;
    std::vector<double> counts(reps);
    for (std::size_t g = 0; g < grid.size(); ++g) {
        const std::uint64_t n = grid[g];
        for (std::size_t r = 0; r < reps; ++r) {
            rng64 rng = rng64::stream(seed, static_cast<std::uint64_t>(g) * reps + r);
            const double u0 = rng.uniform01();
            std::size_t cur = std::min<std::size_t>(
                static_cast<std::size_t>(
                    std::upper_bound(start_cdf.begin(), start_cdf.end(), u0) -
                    start_cdf.begin()),
                chain.size() - 1);
            std::uint64_t visits = 0;
            for (std::uint64_t t = 1; t <= n; ++t) {
                const double u = rng.uniform01();
                cur = std::min<std::size_t>(
                    static_cast<std::size_t>(
                        std::upper_bound(row_cdf[cur].begin(), row_cdf[cur].end(), u) -
                        row_cdf[cur].begin()),
                    chain.size() - 1);
                if (cur == state) ++visits;
            }
            counts[r] = static_cast<double>(visits);
        }
        const auto [var, se] = detail::variance_with_jackknife(counts);
        series.var_mc.push_back(var);
        series.stderr_mc.push_back(se);
    }
    return series;
}

struct hurst_estimate {
    double value = 0.0;
    double stderr_value = 0.0;
    std::uint64_t n_min = 0;
    std::uint64_t n_max = 0;
};

// Aggregated-variance Hurst estimator: fit the log-log slope s of Var/n over
// the grid; then H = (1 + s)/2 with the delta-method standard error s_e/2.
// Prefers exact variances when both are present.
inline hurst_estimate hurst_from_variance(const variance_series& series) {
    const std::vector<double>& var =
        !series.var_exact.empty() ? series.var_exact : series.var_mc;
    if (var.empty()) {
        throw std::invalid_argument("hurst_from_variance: series carries no variances");
    }
    std::vector<series_point> normalized;
    normalized.reserve(series.grid.size());
    for (std::size_t g = 0; g < series.grid.size(); ++g) {
        normalized.push_back(
            {series.grid[g], var[g] / static_cast<double>(series.grid[g])});
    }
    const rate_fit fit = fit_power_law(normalized);
    hurst_estimate h;
    h.value = 0.5 * (1.0 + fit.slope);
    h.stderr_value = 0.5 * fit.slope_stderr;
    h.n_min = fit.n_min;
    h.n_max = fit.n_max;
    return h;
}

}  // namespace lrd
