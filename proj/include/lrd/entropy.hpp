#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "chain.hpp"
#include "errors.hpp"
#include "euler_maclaurin.hpp"
#include "prob_vector.hpp"
#include "return_time.hpp"
#include "summation.hpp"

namespace lrd {

// -t ln t with the continuous extension 0 at t = 0.
inline double entropy_term(double t) {
    return t > 0.0 ? -t * std::log(t) : 0.0;
}

inline double binary_entropy(double q) {
    return entropy_term(q) + entropy_term(1.0 - q);
}

namespace detail {

// -sum_k P(T = k) ln P(T = k) for a power-law return time, with a certified
// error bound.  The head is summed directly; the tail is sandwiched between
// Euler-Maclaurin sums of -p ln p evaluated at the integral bounds
// a(k+1)^(-a-1) <= P(T = k) <= a k^(-a-1), using that -t ln t increases on
// (0, 1/e].  The head is extended adaptively until the bracket is tighter
// than tol.
inline certified_value power_law_pmf_entropy(double alpha, double tol) {
    const double log_alpha = std::log(alpha);
    // phi(a m^(-a-1)) = m^(-(a+1)) * (a(a+1) ln m - a ln a).
    const log_power_term tail_term{alpha + 1.0, alpha * (alpha + 1.0), -alpha * log_alpha};

    compensated_sum head;
    std::uint64_t k = 1;
    for (std::uint64_t budget = 1u << 18; budget <= (1u << 24); budget *= 2) {
        for (; k <= budget; ++k) {
            const double kd = static_cast<double>(k);
            const double p = std::pow(kd, -alpha) * -std::expm1(-alpha * std::log1p(1.0 / kd));
            head.add(entropy_term(p));
        }
        const tail_estimate upper =
            euler_maclaurin_tail(tail_term, static_cast<double>(budget) + 1.0);
        const tail_estimate lower =
            euler_maclaurin_tail(tail_term, static_cast<double>(budget) + 2.0);
        const double mid = 0.5 * (upper.value + lower.value);
        const double half_width =
            0.5 * (upper.value - lower.value) + 0.5 * (upper.error_bound + lower.error_bound);
        if (half_width <= tol) {
            return {head.value() + mid, half_width};
        }
    }
    throw certification_error(
        "entropy_rate: could not certify the pmf-entropy tail to tolerance " +
        std::to_string(tol));
}

}  // namespace detail

// Entropy of the transition row of state i (nats).  Age-chain rows are
// two-valued, so this is the binary entropy of the hazard.
inline double state_entropy(const age_chain& chain, std::uint64_t i) {
    return binary_entropy(chain.hazard(i));
}

inline double state_entropy(const finite_chain& chain, std::size_t i) {
    compensated_sum h;
    for (double p : chain.row(i)) h.add(entropy_term(p));
    return h.value();
}

// Entropy rate sum_i pi_i * state_entropy(i) in nats.  For the age chain the
// sum over ages telescopes exactly to (pmf entropy of T) / E[T]:
//   sum_j P(T > j) h(q_j) = -sum_k P(T = k) ln P(T = k),
// which reduces the infinite-state computation to one certified tail sum and
// gives closed forms for the light-tailed families.
inline double entropy_rate(const age_chain& chain) {
    const return_time_distribution& dist = chain.return_time();
    switch (dist.kind()) {
        case return_time_kind::geometric:
            // Every age has the same hazard p, so the rate is h(p) outright.
            return binary_entropy(dist.p());
        case return_time_kind::finite_support: {
            compensated_sum pmf_entropy;
            for (std::uint64_t k = 1; k <= dist.max_support(); ++k) {
                pmf_entropy.add(entropy_term(dist.pmf(k)));
            }
            return pmf_entropy.value() / dist.mean_return_time();
        }
        case return_time_kind::power_law: {
            const double mean = dist.mean_return_time();
            if (!std::isfinite(mean)) {
                throw no_stationary_error(
                    "entropy_rate: null recurrent chain has no stationary law");
            }
            const detail::certified_value h =
                detail::power_law_pmf_entropy(dist.alpha(), 1e-10 * mean);
            return h.value / mean;
        }
    }
    return 0.0;
}

inline double entropy_rate(const finite_chain& chain) {
    const prob_vector pi = stationary(chain);
    compensated_sum rate;
    for (std::size_t i = 0; i < chain.size(); ++i) {
        rate.add(pi.weights[i] * state_entropy(chain, i));
    }
    return rate.value();
}

// H[X_n | X_{n-1}, ..., X_0] = sum_j P(X_{n-1} = j) * state_entropy(j): the
// chain rule leaves exactly the expected transition-row entropy under the
// time-(n-1) law.  Truncated tail mass contributes at most ln 2 per unit for
// age chains (two-valued rows); the bound is checked against max_tail_entropy.
inline double conditional_entropy(const age_chain& chain, const prob_vector& init,
                                  std::uint64_t n, std::size_t truncation,
                                  double max_tail_entropy = 1e-9) {
    if (n < 1) {
        throw std::invalid_argument("conditional_entropy: n must be at least 1");
    }
    const prob_vector mu = n_step_distribution(chain, init, n - 1, truncation);
    const double tail_bound = mu.tail_mass * std::log(2.0);
    if (tail_bound > max_tail_entropy) {
        throw truncation_error("conditional_entropy: tail entropy bound " +
                               std::to_string(tail_bound) + " exceeds tolerance " +
                               std::to_string(max_tail_entropy));
    }
    const return_time_distribution& dist = chain.return_time();
    const std::uint64_t support = dist.max_support();
    compensated_sum h;
    for (std::size_t j = 0; j < mu.weights.size(); ++j) {
        if (mu.weights[j] == 0.0) continue;
        if (support != 0 && j >= support) continue;  // unreachable ages carry no mass
        h.add(mu.weights[j] * binary_entropy(dist.hazard(j)));
    }
    return h.value();
}

inline double conditional_entropy(const finite_chain& chain, const prob_vector& init,
                                  std::uint64_t n) {
    if (n < 1) {
        throw std::invalid_argument("conditional_entropy: n must be at least 1");
    }
    const prob_vector mu = n_step_distribution(chain, init, n - 1);
    compensated_sum h;
    for (std::size_t j = 0; j < mu.weights.size(); ++j) {
        h.add(mu.weights[j] * state_entropy(chain, j));
    }
    return h.value();
}

// Conditional entropies H[X_r | X_{r-1}, ..., X_0] for r = 1..horizon, the
// entropy rate, and the running sums E(r) of the deviations from the rate.
// E(n) estimates the mutual information between past and future; it diverges
// for long-range-dependent chains and converges for geometrically ergodic
// ones.
struct entropy_series {
    std::vector<double> values;           // values[r-1] = H[X_r | history]
    double rate = 0.0;
    std::vector<double> excess_partials;  // E(r) = sum_{m<=r} (values[m-1] - rate)
};

namespace detail {

// Conditional-entropy sequence for a zero-tail start law on the age chain,
// computed exactly by convolving the renewal-hit sequence with the
// age-weighted row entropies: H[X_r | ...] = sum_j hits[r-1-j] * ccdf(j) h_j
// plus the surviving-start-mass terms.  No truncation is involved: the age
// at time r-1 cannot exceed (largest start age) + r - 1.
inline std::vector<double> age_conditional_series(const age_chain& chain,
                                                  const prob_vector& init,
                                                  std::uint64_t horizon) {
    const return_time_distribution& dist = chain.return_time();
    const std::size_t m_max = horizon - 1;
    const std::vector<double> u = renewal_sequence(dist, std::max<std::size_t>(m_max, 1));
    const bool from_zero = is_point_mass_at_zero(init);
    std::vector<double> hits;
    if (!from_zero) {
        hits = renewal_hits(dist, init, u, m_max);
    }
    const std::vector<double>& arrivals = from_zero ? u : hits;

    // Weighted row entropies a_j = P(T > j) h(q_j); zero entries (underflowed
    // tails of light-tailed laws) are trimmed to shorten the convolution.
    const std::uint64_t support = dist.max_support();
    std::size_t j_cap = support == 0 ? m_max : std::min<std::size_t>(m_max, support - 1);
    std::vector<double> weighted(j_cap + 1, 0.0);
    for (std::size_t j = 0; j <= j_cap; ++j) {
        weighted[j] = dist.ccdf(j) * binary_entropy(dist.hazard(j));
    }
    while (!weighted.empty() && weighted.back() == 0.0) weighted.pop_back();

    std::vector<std::pair<std::uint64_t, double>> atoms;
    for (std::size_t a = 1; a < init.weights.size(); ++a) {
        if (init.weights[a] != 0.0) atoms.emplace_back(a, init.weights[a]);
    }

    std::vector<double> values(horizon);
    for (std::uint64_t r = 1; r <= horizon; ++r) {
        const std::uint64_t m = r - 1;
        compensated_sum h;
        if (!weighted.empty()) {
            const std::size_t top = std::min<std::size_t>(m, weighted.size() - 1);
            for (std::size_t j = 0; j <= top; ++j) {
                h.add(arrivals[m - j] * weighted[j]);
            }
        }
        for (const auto& [a, mass_a] : atoms) {
            const double stay = dist.ccdf(a + m);
            if (stay > 0.0) {
                h.add(mass_a * (stay / dist.ccdf(a)) * binary_entropy(dist.hazard(a + m)));
            }
        }
        values[m] = h.value();
    }
    return values;
}

}  // namespace detail

// Full entropy series to the given horizon.  Start laws with zero tail mass
// are handled exactly; a start with positive tail mass evolves the truncated
// chain stepwise and enforces the per-step tail entropy bound.
inline entropy_series excess_entropy_partials(const age_chain& chain, const prob_vector& init,
                                              std::uint64_t horizon, std::size_t truncation,
                                              double max_tail_entropy = 1e-9) {
    if (horizon < 1) {
        throw std::invalid_argument("excess_entropy_partials: horizon must be at least 1");
    }
    entropy_series series;
    series.rate = entropy_rate(chain);
    if (init.tail_mass == 0.0) {
        series.values = detail::age_conditional_series(chain, init, horizon);
    } else {
        series.values.resize(horizon);
        const return_time_distribution& dist = chain.return_time();
        const std::uint64_t support = dist.max_support();
        const std::size_t age_cap =
            support == 0 ? truncation : std::min<std::size_t>(truncation, support - 1);
        std::vector<double> hazards(age_cap + 1);
        std::vector<double> entropies(age_cap + 1);
        for (std::size_t j = 0; j <= age_cap; ++j) {
            hazards[j] = dist.hazard(j);
            entropies[j] = binary_entropy(hazards[j]);
        }
        prob_vector cur = n_step_distribution(chain, init, 0, age_cap);
        for (std::uint64_t r = 1; r <= horizon; ++r) {
            const double tail_bound = cur.tail_mass * std::log(2.0);
            if (tail_bound > max_tail_entropy) {
                throw truncation_error(
                    "excess_entropy_partials: tail entropy bound " +
                    std::to_string(tail_bound) + " exceeds tolerance " +
                    std::to_string(max_tail_entropy) + " at step " + std::to_string(r));
            }
            compensated_sum h;
            for (std::size_t j = 0; j <= age_cap; ++j) {
                if (cur.weights[j] != 0.0) h.add(cur.weights[j] * entropies[j]);
            }
            series.values[r - 1] = h.value();
            if (r < horizon) detail::step_truncated(hazards, cur);
        }
    }
    series.excess_partials.resize(horizon);
    double acc = 0.0;
    for (std::uint64_t r = 1; r <= horizon; ++r) {
        acc += series.values[r - 1] - series.rate;
        series.excess_partials[r - 1] = acc;
    }
    return series;
}

inline entropy_series excess_entropy_partials(const finite_chain& chain,
                                              const prob_vector& init, std::uint64_t horizon) {
    if (horizon < 1) {
        throw std::invalid_argument("excess_entropy_partials: horizon must be at least 1");
    }
    entropy_series series;
    series.rate = entropy_rate(chain);
    series.values.resize(horizon);
    std::vector<double> entropies(chain.size());
    for (std::size_t i = 0; i < chain.size(); ++i) entropies[i] = state_entropy(chain, i);
    prob_vector cur = init;
    for (std::uint64_t r = 1; r <= horizon; ++r) {
        compensated_sum h;
        for (std::size_t j = 0; j < cur.weights.size(); ++j) {
            h.add(cur.weights[j] * entropies[j]);
        }
        series.values[r - 1] = h.value();
        if (r < horizon) cur = n_step_distribution(chain, cur, 1);
    }
    series.excess_partials.resize(horizon);
    double acc = 0.0;
    for (std::uint64_t r = 1; r <= horizon; ++r) {
        acc += series.values[r - 1] - series.rate;
        series.excess_partials[r - 1] = acc;
    }
    return series;
}

}  // namespace lrd
