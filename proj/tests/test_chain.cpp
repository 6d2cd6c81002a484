#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

#include "lrd/chain.hpp"
#include "lrd/summation.hpp"

using lrd::age_chain;
using lrd::finite_chain;
using lrd::prob_vector;
using lrd::return_time_distribution;

namespace {

// Brute-force reference evolution of the age law: explicit one-step hazard
// transitions with plain arithmetic on a window wide enough that no mass can
// escape.  Hazards are formed directly as pmf/ccdf, independently of the
// library's closed forms.
std::vector<double> brute_age_law(const return_time_distribution& dist,
                                  std::vector<double> cur, std::uint64_t n) {
    const std::size_t w = cur.size();
    for (std::uint64_t step = 0; step < n; ++step) {
        std::vector<double> next(w, 0.0);
        for (std::size_t j = 0; j < w; ++j) {
            if (cur[j] == 0.0) continue;
            const double stay = dist.ccdf(j);
            REQUIRE(stay > 0.0);  // window must only hold reachable ages
            const double q = dist.pmf(j + 1) / stay;
            next[0] += cur[j] * q;
            REQUIRE(j + 1 < w);  // window wide enough by construction
            next[j + 1] += cur[j] * (1.0 - q);
        }
        cur = std::move(next);
    }
    return cur;
}

void check_against_brute(const return_time_distribution& dist, const prob_vector& init,
                         std::uint64_t n, std::size_t window, double tol) {
    std::vector<double> wide(window, 0.0);
    for (std::size_t j = 0; j < init.weights.size(); ++j) wide[j] = init.weights[j];
    const std::vector<double> brute = brute_age_law(dist, wide, n);

    const age_chain chain(dist);
    const prob_vector law = lrd::n_step_distribution(chain, init, n, window - 1);
    REQUIRE(law.tail_mass <= 1e-15);
    for (std::size_t j = 0; j < window; ++j) {
        INFO("n=" << n << " j=" << j);
        REQUIRE_THAT(law.weights[j], Catch::Matchers::WithinAbs(brute[j], tol));
    }
}

std::string write_temp_matrix(const std::string& name, const std::string& body) {
    const std::string path = "/tmp/" + name;
    std::ofstream out(path);
    out << body;
    return path;
}

}  // namespace

TEST_CASE("age chain rejects periodic finite supports") {
    REQUIRE_THROWS_AS(age_chain(return_time_distribution::finite_support({0.0, 1.0})),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(
        age_chain(return_time_distribution::finite_support({0.0, 0.5, 0.0, 0.5})),
        std::invalid_argument);
    REQUIRE_NOTHROW(age_chain(return_time_distribution::finite_support({0.5, 0.5})));
    REQUIRE_NOTHROW(age_chain(return_time_distribution::finite_support({0.0, 0.5, 0.5})));
    REQUIRE_NOTHROW(age_chain(return_time_distribution::power_law(1.5)));
}

TEST_CASE("renewal sequence of the fair geometric law is exactly one half") {
    const auto u =
        lrd::renewal_sequence(return_time_distribution::geometric(0.5), 512);
    REQUIRE(u[0] == 1.0);
    for (std::size_t n = 1; n <= 512; ++n) {
        REQUIRE(u[n] == 0.5);  // dyadic arithmetic is exact here
    }
}

TEST_CASE("renewal sequence matches high-precision references") {
    const auto dist = return_time_distribution::power_law(1.5);
    const auto u = lrd::renewal_sequence(dist, 4096);
    REQUIRE(u[0] == 1.0);
    REQUIRE(u[1] == dist.pmf(1));
    // 40-digit mpmath evaluations of the convolution recursion
    REQUIRE_THAT(u[1], Catch::Matchers::WithinRel(0.6464466094067263, 1e-15));
    REQUIRE_THAT(u[2], Catch::Matchers::WithinRel(0.578996519676851, 1e-14));
    REQUIRE_THAT(u[3], Catch::Matchers::WithinRel(0.545885109340646, 1e-14));

    // u_n approaches 1 / (mean return time) = 1 / zeta(3/2)
    REQUIRE_THAT(u[4096], Catch::Matchers::WithinAbs(0.38279338399942656, 0.02));

    // renewal identity: sum_j u_{n-j} ccdf(j) accounts for all the mass
    for (std::size_t n = 1; n <= 4096; n += 7) {
        lrd::compensated_sum total;
        for (std::size_t j = 0; j <= n; ++j) total.add(u[n - j] * dist.ccdf(j));
        REQUIRE_THAT(total.value(), Catch::Matchers::WithinAbs(1.0, 1e-12));
    }
}

TEST_CASE("stationary age law from the return-time tail") {
    const age_chain chain(return_time_distribution::power_law(1.5));
    const prob_vector pi = lrd::stationary(chain, 100000);
    REQUIRE_THAT(pi.weights[0], Catch::Matchers::WithinRel(0.38279338399942656, 1e-12));
    REQUIRE_THAT(pi.weights[1], Catch::Matchers::WithinRel(0.1353378988096703, 1e-11));
    REQUIRE(pi.tail_mass > 0.0);
    REQUIRE_THAT(pi.total(), Catch::Matchers::WithinAbs(1.0, 1e-12));

    const age_chain geo(return_time_distribution::geometric(0.5));
    const prob_vector pg = lrd::stationary(geo, 60);
    for (std::size_t j = 0; j <= 20; ++j) {
        REQUIRE_THAT(pg.weights[j],
                     Catch::Matchers::WithinRel(std::pow(2.0, -(double)(j + 1)), 1e-14));
    }

    const age_chain null_chain(return_time_distribution::power_law(0.9));
    REQUIRE_THROWS_AS(lrd::stationary(null_chain, 100), lrd::no_stationary_error);
}

TEST_CASE("n-step law agrees with brute-force evolution") {
    const auto pl = return_time_distribution::power_law(1.5);
    check_against_brute(pl, prob_vector::point_mass(0, 0), 60, 200, 1e-13);
    check_against_brute(pl, prob_vector::point_mass(5, 5), 40, 200, 1e-13);

    prob_vector mixed;
    mixed.weights = {0.2, 0.0, 0.0, 0.3, 0.0, 0.0, 0.0, 0.5};
    check_against_brute(pl, mixed, 40, 200, 1e-13);

    const auto geo = return_time_distribution::geometric(0.5);
    check_against_brute(geo, mixed, 30, 200, 1e-13);

    const auto fin = return_time_distribution::finite_support({0.2, 0.3, 0.5});
    prob_vector fin_init;
    fin_init.weights = {0.25, 0.25, 0.5};
    check_against_brute(fin, fin_init, 25, 100, 1e-13);
}

TEST_CASE("n-step law rejects mass on unreachable ages") {
    const age_chain chain(return_time_distribution::finite_support({0.2, 0.3, 0.5}));
    prob_vector bad;
    bad.weights = {0.5, 0.0, 0.0, 0.5};  // age 3 cannot occur: returns take <= 3 steps
    REQUIRE_THROWS_AS(lrd::n_step_distribution(chain, bad, 4, 10), std::invalid_argument);
}

TEST_CASE("truncated evolution conserves mass and honors the tail budget") {
    const age_chain chain(return_time_distribution::power_law(1.2));
    prob_vector init;
    init.weights = {0.6, 0.3};
    init.tail_mass = 0.1;  // forces the stepwise truncated path
    const prob_vector out = lrd::n_step_distribution(chain, init, 25, 8);
    REQUIRE_THAT(out.total(), Catch::Matchers::WithinAbs(1.0, 1e-13));
    REQUIRE(out.tail_mass >= 0.1);  // absorbing tail can only grow

    REQUIRE_THROWS_AS(lrd::n_step_distribution(chain, init, 25, 8, 0.05),
                      lrd::truncation_error);
}

TEST_CASE("first-passage sequence from age zero is the renewal sequence") {
    const auto dist = return_time_distribution::power_law(1.5);
    const auto u = lrd::renewal_sequence(dist, 50);
    const auto hits =
        lrd::detail::renewal_hits(dist, prob_vector::point_mass(0, 0), u, 50);
    REQUIRE(hits.size() == u.size());
    for (std::size_t m = 0; m <= 50; ++m) {
        REQUIRE(hits[m] == u[m]);
    }
}

TEST_CASE("finite chain parses, validates, and steps") {
    const std::string good = write_temp_matrix("lrd_good.mat", "0.9 0.1\n0.4 0.6\n");
    const finite_chain chain = finite_chain::from_file(good);
    REQUIRE(chain.size() == 2);
    REQUIRE(chain.at(0, 1) == 0.1);

    // third power of the matrix, row 0, by hand: (0.825, 0.175)
    const prob_vector law =
        lrd::n_step_distribution(chain, prob_vector::point_mass(0, 1), 3);
    REQUIRE_THAT(law.weights[0], Catch::Matchers::WithinAbs(0.825, 1e-15));
    REQUIRE_THAT(law.weights[1], Catch::Matchers::WithinAbs(0.175, 1e-15));

    // pi solves pi P = pi: (0.8, 0.2)
    const prob_vector pi = lrd::stationary(chain);
    REQUIRE_THAT(pi.weights[0], Catch::Matchers::WithinAbs(0.8, 1e-14));
    REQUIRE_THAT(pi.weights[1], Catch::Matchers::WithinAbs(0.2, 1e-14));

    using matrix = std::vector<std::vector<double>>;
    REQUIRE_NOTHROW(finite_chain(matrix{{1.0}}));  // one absorbing state, aperiodic

    REQUIRE_THROWS_AS(finite_chain::from_file("/tmp/lrd_does_not_exist.mat"),
                      std::runtime_error);
    const std::string ragged = write_temp_matrix("lrd_ragged.mat", "0.9 0.1\n1.0\n");
    REQUIRE_THROWS_AS(finite_chain::from_file(ragged), std::invalid_argument);
    const std::string badsum = write_temp_matrix("lrd_badsum.mat", "0.9 0.2\n0.4 0.6\n");
    REQUIRE_THROWS_AS(finite_chain::from_file(badsum), std::invalid_argument);
    REQUIRE_THROWS_AS(finite_chain({{1.0, 0.0}, {0.0, 1.0}}), std::invalid_argument);
    REQUIRE_THROWS_AS(finite_chain({{0.0, 1.0}, {1.0, 0.0}}), std::invalid_argument);
}

TEST_CASE("occupation deviations telescope against step probabilities") {
    const auto dist = return_time_distribution::power_law(1.5);
    const age_chain chain(dist);
    const double pi0 = dist.ccdf(0) / dist.mean_return_time();

    const auto partials = lrd::q_sum_partials(chain, 0, 0, 300);
    const auto u = lrd::renewal_sequence(dist, 300);
    REQUIRE(partials[0] == 0.0);
    for (std::size_t r = 1; r <= 300; ++r) {
        const double increment = partials[r] - partials[r - 1];
        REQUIRE_THAT(increment, Catch::Matchers::WithinAbs(u[r] - pi0, 1e-13));
    }
    REQUIRE(lrd::q_sum(chain, 0, 0, 300) == partials.back());
}

TEST_CASE("occupation deviations for shifted start and target states") {
    const auto dist = return_time_distribution::power_law(1.5);
    const age_chain chain(dist);
    const std::size_t i = 2;
    const std::size_t j = 4;
    const double pij = dist.ccdf(j) / dist.mean_return_time();

    const auto partials = lrd::q_sum_partials(chain, i, j, 40);
    const prob_vector start = prob_vector::point_mass(i, i);
    for (std::size_t r = 1; r <= 40; ++r) {
        const prob_vector law = lrd::n_step_distribution(chain, start, r, 64);
        const double increment = partials[r] - partials[r - 1];
        REQUIRE_THAT(increment,
                     Catch::Matchers::WithinAbs(law.weights[j] - pij, 1e-12));
    }
}

TEST_CASE("occupation deviations on a finite chain") {
    const finite_chain chain({{0.9, 0.1}, {0.4, 0.6}});
    const prob_vector pi = lrd::stationary(chain);
    const auto partials = lrd::q_sum_partials(chain, 0, 1, 30);
    prob_vector cur = prob_vector::point_mass(0, 1);
    double acc = 0.0;
    for (std::size_t r = 1; r <= 30; ++r) {
        cur = lrd::n_step_distribution(chain, cur, 1);
        acc += cur.weights[1] - pi.weights[1];
        REQUIRE_THAT(partials[r], Catch::Matchers::WithinAbs(acc, 1e-13));
    }
}

TEST_CASE("indicator autocovariance matches its definition") {
    const auto dist = return_time_distribution::power_law(1.5);
    const age_chain chain(dist);
    const double mean = dist.mean_return_time();
    const double pi0 = 1.0 / mean;

    REQUIRE_THAT(lrd::autocovariance(chain, 0, 0),
                 Catch::Matchers::WithinRel(pi0 * (1.0 - pi0), 1e-12));

    const auto u = lrd::renewal_sequence(dist, 7);
    REQUIRE_THAT(lrd::autocovariance(chain, 0, 7),
                 Catch::Matchers::WithinAbs(pi0 * (u[7] - pi0), 1e-14));

    // shifted state: p^d_ii from the n-step law
    const double pi2 = dist.ccdf(2) / mean;
    const prob_vector law =
        lrd::n_step_distribution(chain, prob_vector::point_mass(2, 2), 5, 32);
    REQUIRE_THAT(lrd::autocovariance(chain, 2, 5),
                 Catch::Matchers::WithinAbs(pi2 * (law.weights[2] - pi2), 1e-13));

    const finite_chain fin({{0.9, 0.1}, {0.4, 0.6}});
    REQUIRE_THAT(lrd::autocovariance(fin, 0, 0),
                 Catch::Matchers::WithinAbs(0.16, 1e-14));
    REQUIRE_THAT(lrd::autocovariance(fin, 0, 1),
                 Catch::Matchers::WithinAbs(0.8 * (0.9 - 0.8), 1e-13));
}
