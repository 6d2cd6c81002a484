#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "errors.hpp"
#include "prob_vector.hpp"
#include "return_time.hpp"
#include "summation.hpp"

namespace lrd {

// Backward-recurrence-time chain over ages 0, 1, 2, ...: from age j the
// chain returns to 0 with the hazard q_j of the configured return-time law
// and otherwise ages to j+1.  The return time to state 0 from state 0 has
// exactly that law, making this the minimal chain realizing a prescribed
// return-time tail.
class age_chain {
public:
    explicit age_chain(return_time_distribution dist) : dist_(std::move(dist)) {
        if (dist_.kind() == return_time_kind::finite_support) {
            // Aperiodicity of the renewal process: the supported return
            // times must not share a common divisor > 1.
            std::uint64_t g = 0;
            for (std::uint64_t k = 1; k <= dist_.max_support(); ++k) {
                if (dist_.pmf(k) > 0.0) g = std::gcd(g, k);
            }
            if (g != 1) {
                throw std::invalid_argument(
                    "age_chain: periodic return-time support (gcd " + std::to_string(g) + ")");
            }
        }
    }

    const return_time_distribution& return_time() const noexcept { return dist_; }

    double hazard(std::uint64_t j) const { return dist_.hazard(j); }

private:
    return_time_distribution dist_;
};

// Explicit finite-state chain given by a row-stochastic matrix.  Construction
// validates stochasticity, irreducibility, and aperiodicity.
class finite_chain {
public:
    explicit finite_chain(std::vector<std::vector<double>> rows) : rows_(std::move(rows)) {
        const std::size_t s = rows_.size();
        if (s == 0) {
            throw std::invalid_argument("finite_chain: empty matrix");
        }
        for (std::size_t i = 0; i < s; ++i) {
            if (rows_[i].size() != s) {
                throw std::invalid_argument("finite_chain: row " + std::to_string(i) +
                                            " has " + std::to_string(rows_[i].size()) +
                                            " entries, expected " + std::to_string(s));
            }
            compensated_sum row_sum;
            for (double p : rows_[i]) {
                if (!(p >= 0.0 && p <= 1.0)) {
                    throw std::invalid_argument("finite_chain: entry outside [0,1] in row " +
                                                std::to_string(i));
                }
                row_sum.add(p);
            }
            if (std::abs(row_sum.value() - 1.0) > 1e-12) {
                throw std::invalid_argument("finite_chain: row " + std::to_string(i) +
                                            " sums to " + std::to_string(row_sum.value()));
            }
        }
        validate_irreducible_aperiodic();
    }

    // Plain-text matrix: one row per line, whitespace-separated probabilities.
    static finite_chain from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) {
            throw std::runtime_error("finite_chain: cannot open " + path);
        }
        std::vector<std::vector<double>> rows;
        std::string line;
        while (std::getline(in, line)) {
            std::istringstream fields(line);
            std::vector<double> row;
            double p;
            while (fields >> p) row.push_back(p);
            if (!fields.eof()) {
                throw std::runtime_error("finite_chain: malformed number in " + path);
            }
            if (!row.empty()) rows.push_back(std::move(row));
        }
        return finite_chain(std::move(rows));
    }

    std::size_t size() const noexcept { return rows_.size(); }

    double at(std::size_t i, std::size_t j) const { return rows_.at(i).at(j); }

    const std::vector<double>& row(std::size_t i) const { return rows_.at(i); }

private:
    void validate_irreducible_aperiodic() const {
        const std::size_t s = rows_.size();
        // Strong connectivity: every state reachable from 0 forwards and
        // backwards along positive-probability edges.
        const auto reachable = [&](bool transpose) {
            std::vector<char> seen(s, 0);
            std::queue<std::size_t> frontier;
            seen[0] = 1;
            frontier.push(0);
            while (!frontier.empty()) {
                const std::size_t u = frontier.front();
                frontier.pop();
                for (std::size_t v = 0; v < s; ++v) {
                    const double p = transpose ? rows_[v][u] : rows_[u][v];
                    if (p > 0.0 && !seen[v]) {
                        seen[v] = 1;
                        frontier.push(v);
                    }
                }
            }
            return seen;
        };
        const std::vector<char> fwd = reachable(false);
        const std::vector<char> bwd = reachable(true);
        for (std::size_t v = 0; v < s; ++v) {
            if (!fwd[v] || !bwd[v]) {
                throw std::invalid_argument("finite_chain: not irreducible (state " +
                                            std::to_string(v) + " isolated)");
            }
        }
        // Period = gcd over edges (u,v) of level(u) + 1 - level(v) for BFS
        // levels; 1 means aperiodic.
        std::vector<std::int64_t> level(s, -1);
        std::queue<std::size_t> frontier;
        level[0] = 0;
        frontier.push(0);
        while (!frontier.empty()) {
            const std::size_t u = frontier.front();
            frontier.pop();
            for (std::size_t v = 0; v < s; ++v) {
                if (rows_[u][v] > 0.0 && level[v] < 0) {
                    level[v] = level[u] + 1;
                    frontier.push(v);
                }
            }
        }
        std::int64_t g = 0;
        for (std::size_t u = 0; u < s; ++u) {
            for (std::size_t v = 0; v < s; ++v) {
                if (rows_[u][v] > 0.0) {
                    g = std::gcd(g, level[u] + 1 - level[v]);
                }
            }
        }
        if (g != 1) {
            throw std::invalid_argument("finite_chain: periodic (period " +
                                        std::to_string(g) + ")");
        }
    }

    std::vector<std::vector<double>> rows_;
};

// u_n = P(the age chain revisits 0 at step n | start at 0), n = 0..n_max,
// by the discrete renewal recursion u_n = sum_{k=1}^n P(T = k) u_{n-k} with
// u_0 = 1.  Compensated accumulation keeps 2^14-term convolutions at
// near-ulp accuracy.
inline std::vector<double> renewal_sequence(const return_time_distribution& dist,
                                            std::size_t n_max) {
    if (n_max < 1) {
        throw std::invalid_argument("renewal_sequence: horizon must be at least 1");
    }
    const std::uint64_t support = dist.max_support();
    const std::size_t k_max =
        support == 0 ? n_max : std::min<std::size_t>(support, n_max);
    std::vector<double> mass(k_max + 1, 0.0);
    for (std::size_t k = 1; k <= k_max; ++k) {
        mass[k] = dist.pmf(static_cast<std::uint64_t>(k));
    }
    std::vector<double> u(n_max + 1, 0.0);
    u[0] = 1.0;
    for (std::size_t n = 1; n <= n_max; ++n) {
        compensated_sum conv;
        const std::size_t top = std::min(n, k_max);
        for (std::size_t k = 1; k <= top; ++k) {
            conv.add(mass[k] * u[n - k]);
        }
        u[n] = std::clamp(conv.value(), 0.0, 1.0);
    }
    return u;
}

// Stationary law of the age chain truncated to ages 0..truncation:
// pi_j = P(T > j) / E[T], with the remainder reported as tail mass.
inline prob_vector stationary(const age_chain& chain, std::size_t truncation) {
    const return_time_distribution& dist = chain.return_time();
    const double mean = dist.mean_return_time();
    if (!std::isfinite(mean)) {
        throw no_stationary_error(
            "stationary: infinite mean return time (null recurrent chain)");
    }
    prob_vector pi;
    pi.weights.resize(truncation + 1);
    compensated_sum covered;
    for (std::size_t j = 0; j <= truncation; ++j) {
        pi.weights[j] = dist.ccdf(static_cast<std::uint64_t>(j)) / mean;
        covered.add(pi.weights[j]);
    }
    pi.tail_mass = std::max(0.0, 1.0 - covered.value());
    return pi;
}

// Stationary law of a finite chain: solves pi P = pi, sum pi = 1 by Gaussian
// elimination with partial pivoting.
inline prob_vector stationary(const finite_chain& chain) {
    const std::size_t s = chain.size();
    // System rows: (P^T - I) pi = 0 for the first s-1 equations, then the
    // normalization sum pi = 1.
    std::vector<std::vector<double>> a(s, std::vector<double>(s + 1, 0.0));
    for (std::size_t i = 0; i + 1 < s; ++i) {
        for (std::size_t j = 0; j < s; ++j) {
            a[i][j] = chain.at(j, i) - (i == j ? 1.0 : 0.0);
        }
    }
    for (std::size_t j = 0; j < s; ++j) a[s - 1][j] = 1.0;
    a[s - 1][s] = 1.0;

    for (std::size_t col = 0; col < s; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < s; ++r) {
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        }
        if (a[pivot][col] == 0.0) {
            throw std::runtime_error("stationary: singular system (chain not ergodic?)");
        }
        std::swap(a[col], a[pivot]);
        for (std::size_t r = 0; r < s; ++r) {
            if (r == col || a[r][col] == 0.0) continue;
            const double factor = a[r][col] / a[col][col];
            for (std::size_t c = col; c <= s; ++c) {
                a[r][c] -= factor * a[col][c];
            }
        }
    }
    prob_vector pi;
    pi.weights.resize(s);
    for (std::size_t j = 0; j < s; ++j) {
        pi.weights[j] = std::max(0.0, a[j][s] / a[j][j]);
    }
    return pi;
}

namespace detail {

inline bool is_point_mass_at_zero(const prob_vector& init) {
    if (init.tail_mass != 0.0) return false;
    if (init.weights.empty() || init.weights[0] != 1.0) return false;
    for (std::size_t j = 1; j < init.weights.size(); ++j) {
        if (init.weights[j] != 0.0) return false;
    }
    return true;
}

// Probability w_m that the age chain sits at age 0 at time m, m = 0..n, for
// an arbitrary start law with zero tail mass.  First-passage decomposition:
// mass at age a >= 1 first returns at time t with probability
// P(T = a + t)/P(T > a), and renewals then recur with the law of u.
inline std::vector<double> renewal_hits(const return_time_distribution& dist,
                                        const prob_vector& init,
                                        const std::vector<double>& u, std::size_t n) {
    std::vector<std::pair<std::uint64_t, double>> atoms;
    for (std::size_t a = 1; a < init.weights.size(); ++a) {
        if (init.weights[a] != 0.0) {
            if (dist.ccdf(a) <= 0.0) {
                throw std::invalid_argument(
                    "n_step_distribution: initial mass on unreachable age " +
                    std::to_string(a));
            }
            atoms.emplace_back(static_cast<std::uint64_t>(a), init.weights[a]);
        }
    }
    const double at_zero = init.weights.empty() ? 0.0 : init.weights[0];
    std::vector<double> first(n + 1, 0.0);
    for (std::size_t t = 1; t <= n; ++t) {
        compensated_sum g;
        for (const auto& [a, mass_a] : atoms) {
            g.add(mass_a * dist.pmf(a + t) / dist.ccdf(a));
        }
        first[t] = g.value();
    }
    std::vector<double> hits(n + 1, 0.0);
    hits[0] = at_zero;
    for (std::size_t m = 1; m <= n; ++m) {
        compensated_sum acc;
        acc.add(at_zero * u[m]);
        for (std::size_t t = 1; t <= m; ++t) {
            if (first[t] != 0.0) acc.add(first[t] * u[m - t]);
        }
        hits[m] = acc.value();
    }
    return hits;
}

// Shares the renewal precomputation needed to evaluate the exact age-chain
// law at many horizons n <= n_max from one zero-tail start law.
class age_law_builder {
public:
    age_law_builder(const age_chain& chain, const prob_vector& init, std::size_t n_max)
        : dist_(&chain.return_time()) {
        if (init.tail_mass != 0.0) {
            throw std::invalid_argument(
                "age_law_builder: start law must have zero tail mass");
        }
        u_ = renewal_sequence(*dist_, std::max<std::size_t>(n_max, 1));
        from_zero_ = is_point_mass_at_zero(init);
        if (!from_zero_) {
            hits_ = renewal_hits(*dist_, init, u_, n_max);
            for (std::size_t a = 1; a < init.weights.size(); ++a) {
                if (init.weights[a] != 0.0) atoms_.emplace_back(a, init.weights[a]);
            }
        }
    }

    // Exact law at time n (n <= n_max), truncated to ages 0..truncation.
    prob_vector law_at(std::uint64_t n, std::size_t truncation) const {
        prob_vector out;
        out.weights.assign(truncation + 1, 0.0);
        const std::vector<double>& arrivals = from_zero_ ? u_ : hits_;
        const std::uint64_t top = std::min<std::uint64_t>(n, truncation);
        for (std::uint64_t j = 0; j <= top; ++j) {
            out.weights[j] = arrivals[n - j] * dist_->ccdf(j);
        }
        // Mass that never returned to 0 sits at its initial age plus n.
        for (const auto& [a, mass_a] : atoms_) {
            if (a + n <= truncation) {
                out.weights[a + n] += mass_a * dist_->ccdf(a + n) / dist_->ccdf(a);
            }
        }
        compensated_sum covered;
        for (double w : out.weights) covered.add(w);
        out.tail_mass = std::max(0.0, 1.0 - covered.value());
        return out;
    }

private:
    const return_time_distribution* dist_;
    std::vector<double> u_;
    std::vector<double> hits_;
    std::vector<std::pair<std::uint64_t, double>> atoms_;
    bool from_zero_ = false;
};

// One exact step of the truncated age chain.  Mass pushed past the horizon
// joins the tail; tail mass stays in the tail, so the result is exact up to
// the (reported) tail and never loses total mass.
inline void step_truncated(const std::vector<double>& hazards, prob_vector& v) {
    const std::size_t n_states = v.weights.size();
    compensated_sum to_zero;
    for (std::size_t j = 0; j < n_states; ++j) {
        if (v.weights[j] != 0.0) to_zero.add(v.weights[j] * hazards[j]);
    }
    double spill = v.weights[n_states - 1] * (1.0 - hazards[n_states - 1]);
    for (std::size_t j = n_states - 1; j > 0; --j) {
        v.weights[j] = v.weights[j - 1] * (1.0 - hazards[j - 1]);
    }
    v.weights[0] = to_zero.value();
    v.tail_mass += spill;
}

}  // namespace detail

// Exact law of the age chain at time n from the given start law, truncated
// to ages 0..truncation.  Point-mass-at-0 starts use the renewal identity
// directly; general zero-tail starts use first-passage decomposition; starts
// with positive tail mass evolve stepwise with the tail treated as
// absorbing, which is exact up to the reported tail mass.  A tail mass above
// max_tail raises truncation_error.
inline prob_vector n_step_distribution(const age_chain& chain, const prob_vector& init,
                                       std::uint64_t n, std::size_t truncation,
                                       double max_tail = 1.0) {
    const return_time_distribution& dist = chain.return_time();
    prob_vector out;
    out.weights.assign(truncation + 1, 0.0);

    if (n == 0) {
        compensated_sum spill;
        for (std::size_t j = 0; j < init.weights.size(); ++j) {
            if (j <= truncation) {
                out.weights[j] = init.weights[j];
            } else {
                spill.add(init.weights[j]);
            }
        }
        spill.add(init.tail_mass);
        out.tail_mass = spill.value();
    } else if (init.tail_mass > 0.0) {
        const std::uint64_t support = dist.max_support();
        const std::size_t age_cap =
            support == 0 ? truncation : std::min<std::size_t>(truncation, support - 1);
        std::vector<double> hazards(age_cap + 1);
        for (std::size_t j = 0; j <= age_cap; ++j) {
            hazards[j] = dist.hazard(static_cast<std::uint64_t>(j));
        }
        prob_vector cur;
        cur.weights.assign(age_cap + 1, 0.0);
        compensated_sum spill;
        for (std::size_t j = 0; j < init.weights.size(); ++j) {
            if (j <= age_cap) {
                cur.weights[j] = init.weights[j];
            } else if (init.weights[j] != 0.0) {
                if (support != 0 && j >= support) {
                    throw std::invalid_argument(
                        "n_step_distribution: initial mass on unreachable age " +
                        std::to_string(j));
                }
                spill.add(init.weights[j]);
            }
        }
        spill.add(init.tail_mass);
        cur.tail_mass = spill.value();
        for (std::uint64_t step = 0; step < n; ++step) {
            detail::step_truncated(hazards, cur);
        }
        std::copy(cur.weights.begin(), cur.weights.end(), out.weights.begin());
        out.tail_mass = cur.tail_mass;
        if (out.tail_mass > max_tail) {
            throw truncation_error("n_step_distribution: tail mass " +
                                   std::to_string(out.tail_mass) + " exceeds tolerance " +
                                   std::to_string(max_tail));
        }
        return out;
    } else {
        out = detail::age_law_builder(chain, init, n).law_at(n, truncation);
    }

    if (out.tail_mass > max_tail) {
        throw truncation_error("n_step_distribution: tail mass " +
                               std::to_string(out.tail_mass) + " exceeds tolerance " +
                               std::to_string(max_tail));
    }
    return out;
}

// Exact law of the finite chain at time n: repeated vector-matrix products.
inline prob_vector n_step_distribution(const finite_chain& chain, const prob_vector& init,
                                       std::uint64_t n) {
    const std::size_t s = chain.size();
    if (init.weights.size() != s || init.tail_mass != 0.0) {
        throw std::invalid_argument(
            "n_step_distribution: start law must cover exactly the finite state space");
    }
    std::vector<double> cur = init.weights;
    std::vector<double> next(s, 0.0);
    for (std::uint64_t step = 0; step < n; ++step) {
        for (std::size_t j = 0; j < s; ++j) {
            compensated_sum acc;
            for (std::size_t i = 0; i < s; ++i) {
                acc.add(cur[i] * chain.at(i, j));
            }
            next[j] = acc.value();
        }
        cur.swap(next);
    }
    prob_vector out;
    out.weights = std::move(cur);
    return out;
}

namespace detail {

// n-step return probabilities p^r_ii of the age chain for r = 0..n.
inline std::vector<double> return_probabilities(const return_time_distribution& dist,
                                                std::size_t i, std::size_t n) {
    const std::vector<double> u = renewal_sequence(dist, n);
    if (i == 0) return u;
    if (dist.ccdf(i) <= 0.0) {
        throw zero_tail_error("return_probabilities: age " + std::to_string(i) +
                              " is unreachable");
    }
    prob_vector start = prob_vector::point_mass(i, i);
    const std::vector<double> hits = renewal_hits(dist, start, u, n);
    std::vector<double> pii(n + 1, 0.0);
    pii[0] = 1.0;
    const double stay = dist.ccdf(i);
    for (std::size_t r = i + 1; r <= n; ++r) {
        pii[r] = hits[r - i] * stay;
    }
    return pii;
}

}  // namespace detail

// Partial sums Q^r_ij = sum_{m=1}^{r} (p^m_ij - pi_j) for r = 0..n.  Their
// growth (bounded vs diverging) separates short- from long-range-dependent
// chains; consecutive differences recover p^r_ij - pi_j.
inline std::vector<double> q_sum_partials(const age_chain& chain, std::size_t i,
                                          std::size_t j, std::size_t n) {
    const return_time_distribution& dist = chain.return_time();
    const double mean = dist.mean_return_time();
    if (!std::isfinite(mean)) {
        throw no_stationary_error("q_sum: no stationary distribution (null recurrent)");
    }
    const double pi_j = dist.ccdf(j) / mean;
    const std::vector<double> u = renewal_sequence(dist, n);
    std::vector<double> hits;
    if (i == 0) {
        hits = u;
    } else {
        if (dist.ccdf(i) <= 0.0) {
            throw zero_tail_error("q_sum: start age " + std::to_string(i) +
                                  " is unreachable");
        }
        hits = detail::renewal_hits(dist, prob_vector::point_mass(i, i), u, n);
    }
    const double stay_j = dist.ccdf(j);
    std::vector<double> partials(n + 1, 0.0);
    double acc = 0.0;
    for (std::size_t r = 1; r <= n; ++r) {
        double p_r = r >= j ? hits[r - j] * stay_j : 0.0;
        if (i != 0 && j > i && r == j - i) {
            p_r += dist.ccdf(j) / dist.ccdf(i);  // survived from age i to age j
        }
        acc += p_r - pi_j;
        partials[r] = acc;
    }
    return partials;
}

inline std::vector<double> q_sum_partials(const finite_chain& chain, std::size_t i,
                                          std::size_t j, std::size_t n) {
    const prob_vector pi = stationary(chain);
    prob_vector cur = prob_vector::point_mass(i, chain.size() - 1);
    std::vector<double> partials(n + 1, 0.0);
    double acc = 0.0;
    for (std::size_t r = 1; r <= n; ++r) {
        cur = n_step_distribution(chain, cur, 1);
        acc += cur.weights[j] - pi.weights[j];
        partials[r] = acc;
    }
    return partials;
}

template <class Chain>
double q_sum(const Chain& chain, std::size_t i, std::size_t j, std::size_t n) {
    return q_sum_partials(chain, i, j, n).back();
}

// Stationary autocovariance of the indicator of state i at lag d:
// gamma_i(0) = pi_i (1 - pi_i), gamma_i(d) = pi_i (p^d_ii - pi_i).
inline double autocovariance(const age_chain& chain, std::size_t i, std::size_t d) {
    const return_time_distribution& dist = chain.return_time();
    const double mean = dist.mean_return_time();
    if (!std::isfinite(mean)) {
        throw no_stationary_error("autocovariance: no stationary distribution");
    }
    const double pi_i = dist.ccdf(i) / mean;
    if (d == 0) return pi_i * (1.0 - pi_i);
    const std::vector<double> pii = detail::return_probabilities(dist, i, d);
    return pi_i * (pii[d] - pi_i);
}

inline double autocovariance(const finite_chain& chain, std::size_t i, std::size_t d) {
    const prob_vector pi = stationary(chain);
    const double pi_i = pi.weights.at(i);
    if (d == 0) return pi_i * (1.0 - pi_i);
    const prob_vector at_d =
        n_step_distribution(chain, prob_vector::point_mass(i, chain.size() - 1), d);
    return pi_i * (at_d.weights[i] - pi_i);
}

}  // namespace lrd
