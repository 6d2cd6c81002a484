#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "euler_maclaurin.hpp"
#include "summation.hpp"

namespace lrd {

enum class return_time_kind { power_law, geometric, finite_support };

enum class convergence_family { geometric, polynomial, null_recurrent };

// Convergence regime of the chain built from a return-time law: geometric
// ergodicity, polynomial ergodicity with the given rate exponent, or null
// recurrence (infinite mean return time, no stationary distribution).
struct ergodicity_class {
    convergence_family family;
    double rate_exponent = std::numeric_limits<double>::quiet_NaN();
};

enum class series_verdict { convergent, divergent, inconclusive };

namespace detail {

struct certified_value {
    double value;
    double error_bound;
};

// zeta(s) = sum_{n>=1} n^(-s) for s > 1: direct compensated summation of the
// head plus an Euler-Maclaurin tail with a certified remainder bound.
inline certified_value zeta_sum(double s) {
    constexpr int head_terms = 4096;
    compensated_sum head;
    for (int n = 1; n < head_terms; ++n) {
        head.add(std::pow(static_cast<double>(n), -s));
    }
    const tail_estimate tail =
        euler_maclaurin_tail(log_power_term{s, 0.0, 1.0}, static_cast<double>(head_terms));
    return {head.value() + tail.value, tail.error_bound};
}

}  // namespace detail

// Law of the return time T >= 1 of a recurrent state.  Three families:
//   power_law(alpha):     P(T > n) = (n+1)^(-alpha), so
//                         P(T = k) = k^(-alpha) - (k+1)^(-alpha);
//   geometric(p):         P(T > n) = (1-p)^n (memoryless);
//   finite_support(m):    P(T = k) = m[k-1] for k = 1..K.
// All queries are exact closed forms or certified summations; the power-law
// family keeps heavy tails with tail exponent alpha.
class return_time_distribution {
public:
    static return_time_distribution power_law(double alpha) {
        if (!(alpha > 0.0)) {
            throw std::invalid_argument("power_law: alpha must be positive, got " +
                                        std::to_string(alpha));
        }
        return_time_distribution d;
        d.kind_ = return_time_kind::power_law;
        d.alpha_ = alpha;
        return d;
    }

    static return_time_distribution geometric(double p) {
        if (!(p > 0.0 && p < 1.0)) {
            throw std::invalid_argument("geometric: p must lie in (0,1), got " +
                                        std::to_string(p));
        }
        return_time_distribution d;
        d.kind_ = return_time_kind::geometric;
        d.p_ = p;
        return d;
    }

    static return_time_distribution finite_support(std::vector<double> masses) {
        // masses[i] = P(T = i+1); trailing zeros are trimmed so the last
        // supported value K has positive mass and ccdf(K) = 0 exactly.
        while (!masses.empty() && masses.back() == 0.0) masses.pop_back();
        if (masses.empty()) {
            throw std::invalid_argument("finite_support: pmf must carry positive mass");
        }
        compensated_sum total;
        for (double m : masses) {
            if (!(m >= 0.0)) {
                throw std::invalid_argument("finite_support: pmf values must be nonnegative");
            }
            total.add(m);
        }
        if (std::abs(total.value() - 1.0) > 1e-12) {
            throw std::invalid_argument("finite_support: pmf must sum to 1 within 1e-12, got " +
                                        std::to_string(total.value()));
        }
        return_time_distribution d;
        d.kind_ = return_time_kind::finite_support;
        d.masses_ = std::move(masses);
        const std::size_t k = d.masses_.size();
        // Suffix sums give ccdf without cancellation: ccdf_[n] = P(T > n).
        d.ccdf_.assign(k + 1, 0.0);
        compensated_sum suffix;
        for (std::size_t n = k; n-- > 0;) {
            suffix.add(d.masses_[n]);
            d.ccdf_[n] = suffix.value();
        }
        d.cdf_.assign(k, 0.0);
        compensated_sum prefix;
        for (std::size_t i = 0; i < k; ++i) {
            prefix.add(d.masses_[i]);
            d.cdf_[i] = prefix.value();
        }
        return d;
    }

    return_time_kind kind() const noexcept { return kind_; }

    double alpha() const {
        require_kind(return_time_kind::power_law, "alpha");
        return alpha_;
    }

    double p() const {
        require_kind(return_time_kind::geometric, "p");
        return p_;
    }

    // Largest supported return time; 0 means unbounded support.
    std::uint64_t max_support() const noexcept {
        return kind_ == return_time_kind::finite_support ? masses_.size() : 0;
    }

    double pmf(std::uint64_t k) const {
        if (k == 0) {
            throw std::domain_error("pmf: return times start at 1");
        }
        switch (kind_) {
            case return_time_kind::power_law: {
                // k^(-a) - (k+1)^(-a) = k^(-a) * (1 - (1 + 1/k)^(-a)),
                // evaluated via expm1/log1p to dodge cancellation at large k.
                const double kd = static_cast<double>(k);
                return std::pow(kd, -alpha_) * -std::expm1(-alpha_ * std::log1p(1.0 / kd));
            }
            case return_time_kind::geometric:
                return p_ * std::pow(1.0 - p_, static_cast<double>(k - 1));
            case return_time_kind::finite_support:
                return k <= masses_.size() ? masses_[k - 1] : 0.0;
        }
        return 0.0;
    }

    double ccdf(std::uint64_t n) const {
        switch (kind_) {
            case return_time_kind::power_law:
                return std::pow(static_cast<double>(n) + 1.0, -alpha_);
            case return_time_kind::geometric:
                return std::pow(1.0 - p_, static_cast<double>(n));
            case return_time_kind::finite_support:
                return n < ccdf_.size() ? ccdf_[n] : 0.0;
        }
        return 0.0;
    }

    // Age-chain return probability q_j = P(T = j+1 | T > j).
    double hazard(std::uint64_t j) const {
        switch (kind_) {
            case return_time_kind::power_law: {
                // pmf(j+1)/ccdf(j) = 1 - ((j+2)/(j+1))^(-a), cancellation-free.
                const double jd = static_cast<double>(j);
                return -std::expm1(-alpha_ * std::log1p(1.0 / (jd + 1.0)));
            }
            case return_time_kind::geometric:
                return p_;
            case return_time_kind::finite_support: {
                if (j >= masses_.size() || ccdf_[j] <= 0.0) {
                    throw zero_tail_error("hazard: state " + std::to_string(j) +
                                          " has zero tail probability");
                }
                return masses_[j] / ccdf_[j];
            }
        }
        return 0.0;
    }

    // E[T] = sum_{n>=0} P(T > n); +infinity for power laws with alpha <= 1.
    double mean_return_time() const {
        switch (kind_) {
            case return_time_kind::power_law: {
                if (alpha_ <= 1.0) {
                    return std::numeric_limits<double>::infinity();
                }
                const detail::certified_value z = detail::zeta_sum(alpha_);
                if (z.error_bound > 1e-12 * z.value) {
                    throw certification_error(
                        "mean_return_time: tail bound " + std::to_string(z.error_bound) +
                        " exceeds 1e-12 relative tolerance");
                }
                return z.value;
            }
            case return_time_kind::geometric:
                return 1.0 / p_;
            case return_time_kind::finite_support: {
                compensated_sum mean;
                for (std::size_t i = 0; i < masses_.size(); ++i) {
                    mean.add(static_cast<double>(i + 1) * masses_[i]);
                }
                return mean.value();
            }
        }
        return 0.0;
    }

    // sup{ d : E[T^d] < infinity }: the tail exponent for power laws,
    // +infinity for the light-tailed families.
    double moment_index() const noexcept {
        return kind_ == return_time_kind::power_law
                   ? alpha_
                   : std::numeric_limits<double>::infinity();
    }

    // Inverse-CDF draw of T; consumes exactly one uniform from the source.
    template <class Rng>
    std::uint64_t sample(Rng& rng) const {
        const double u = rng.uniform01();
        switch (kind_) {
            case return_time_kind::power_law: {
                // Smallest k with 1 - (k+1)^(-a) >= u.
                const double raw = std::ceil(std::pow(1.0 - u, -1.0 / alpha_) - 1.0);
                return raw < 1.0 ? 1 : static_cast<std::uint64_t>(raw);
            }
            case return_time_kind::geometric: {
                const double raw = std::ceil(std::log1p(-u) / std::log1p(-p_));
                return raw < 1.0 ? 1 : static_cast<std::uint64_t>(raw);
            }
            case return_time_kind::finite_support: {
                const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
                const std::size_t idx = static_cast<std::size_t>(it - cdf_.begin());
                return idx >= masses_.size() ? masses_.size() : idx + 1;
            }
        }
        return 1;
    }

    // Draw of the residual life T - age conditioned on T > age; consumes one
    // uniform.  Feeds trajectory simulation started from a nonzero age.
    template <class Rng>
    std::uint64_t sample_residual(std::uint64_t age, Rng& rng) const {
        if (age == 0) return sample(rng);
        const double u = rng.uniform01();
        switch (kind_) {
            case return_time_kind::power_law: {
                // Smallest t with 1 - ((age+t+1)/(age+1))^(-a) >= u.
                const double a1 = static_cast<double>(age) + 1.0;
                const double raw = std::ceil(a1 * std::pow(1.0 - u, -1.0 / alpha_) - a1);
                return raw < 1.0 ? 1 : static_cast<std::uint64_t>(raw);
            }
            case return_time_kind::geometric:
                // Memoryless: the residual has the unconditioned law.
                return sample_with_uniform(u);
            case return_time_kind::finite_support: {
                if (age >= masses_.size() || ccdf_[age] <= 0.0) {
                    throw zero_tail_error("sample_residual: age " + std::to_string(age) +
                                          " has zero tail probability");
                }
                const double target = u * ccdf_[age];
                double cum = 0.0;
                for (std::uint64_t k = age + 1; k <= masses_.size(); ++k) {
                    cum += masses_[k - 1];
                    if (cum > target) return k - age;
                }
                return masses_.size() - age;
            }
        }
        return 1;
    }

private:
    return_time_distribution() = default;

    void require_kind(return_time_kind k, const char* what) const {
        if (kind_ != k) {
            throw std::logic_error(std::string(what) + ": wrong distribution kind");
        }
    }

    std::uint64_t sample_with_uniform(double u) const {
        const double raw = std::ceil(std::log1p(-u) / std::log1p(-p_));
        return raw < 1.0 ? 1 : static_cast<std::uint64_t>(raw);
    }

    return_time_kind kind_ = return_time_kind::geometric;
    double alpha_ = 0.0;
    double p_ = 0.5;
    std::vector<double> masses_;  // finite_support: P(T = i+1)
    std::vector<double> ccdf_;    // finite_support: P(T > n), n = 0..K
    std::vector<double> cdf_;     // finite_support: P(T <= i+1)
};

// Hurst parameter of the visit-count process when the return-time moment
// index lies in the long-range-dependent band: H = (3 - alpha)/2.
inline double hurst_from_moment_index(double alpha) {
    if (!(alpha > 1.0 && alpha < 2.0)) {
        throw std::domain_error("hurst_from_moment_index: alpha must lie in (1,2), got " +
                                std::to_string(alpha));
    }
    return (3.0 - alpha) / 2.0;
}

// Decides convergence of sum_n n^beta * P(T > n).  All three families admit
// an analytic verdict; a partial sum can never certify divergence, so no
// numeric fallback ever answers divergent.
inline series_verdict series_condition(const return_time_distribution& dist, double beta,
                                       std::uint64_t horizon) {
    if (!(beta >= 0.0)) {
        throw std::invalid_argument("series_condition: beta must be nonnegative");
    }
    if (horizon < 100) {
        throw std::invalid_argument("series_condition: horizon must be at least 100");
    }
    switch (dist.kind()) {
        case return_time_kind::power_law:
            return beta - dist.alpha() < -1.0 ? series_verdict::convergent
                                              : series_verdict::divergent;
        case return_time_kind::geometric:
        case return_time_kind::finite_support:
            // Geometric or bounded tails dominate every polynomial weight.
            return series_verdict::convergent;
    }
    return series_verdict::inconclusive;
}

// Geometric ergodicity holds exactly when the return-time generating
// function converges beyond radius 1 (geometric or bounded tails); power-law
// tails give polynomial convergence with exponent alpha - 1, degrading to
// null recurrence once the mean return time diverges.
inline ergodicity_class classify_ergodicity(const return_time_distribution& dist) {
    switch (dist.kind()) {
        case return_time_kind::power_law:
            if (dist.alpha() > 1.0) {
                return {convergence_family::polynomial, dist.alpha() - 1.0};
            }
            return {convergence_family::null_recurrent, {}};
        case return_time_kind::geometric:
        case return_time_kind::finite_support:
            return {convergence_family::geometric, {}};
    }
    return {convergence_family::null_recurrent, {}};
}

template <class Rng>
std::uint64_t sample_return_time(const return_time_distribution& dist, Rng& rng) {
    return dist.sample(rng);
}

}  // namespace lrd
