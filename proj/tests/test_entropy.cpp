#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "lrd/counting.hpp"
#include "lrd/entropy.hpp"

using lrd::age_chain;
using lrd::finite_chain;
using lrd::prob_vector;
using lrd::return_time_distribution;

namespace {

// Reference values: 40-digit mpmath evaluations frozen as binary64.
constexpr double kLn2 = 0.6931471805599453;
constexpr double kBinEnt03 = 0.6108643020548935;
constexpr double kRow09Entropy = 0.32508297339144826;   // h(0.9, 0.1)
constexpr double kRow04Entropy = 0.6730116670092564;    // h(0.4, 0.6)
constexpr double kTwoStateRate = 0.39466871211500987;   // 0.8 h(.9) + 0.2 h(.4)
constexpr double kHazard0Entropy15 = 0.649618619387195;  // h at the alpha=1.5 root hazard
constexpr double kStepEntropy2Alpha15 = 0.6636168271920408;
constexpr double kPmfEntropy15 = 1.349741204006513;  // -sum pmf ln pmf, alpha = 1.5
constexpr double kPmfEntropy35 = 0.3730722470575329;
constexpr double kRate15 = 0.5166720030051135;  // pmf entropy / zeta(1.5)
constexpr double kRate35 = 0.3311094641593412;

// Path enumeration over a small state space: block entropy of (X_1..X_n)
// from a point-mass start, summing -P log P over every path.
double brute_block_entropy(const std::vector<std::vector<double>>& step, std::size_t start,
                           std::size_t n) {
    const std::size_t s = step.size();
    std::vector<std::pair<std::size_t, double>> paths{{start, 1.0}};  // (endpoint, prob)
    double block = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        std::vector<std::pair<std::size_t, double>> next;
        next.reserve(paths.size() * s);
        for (const auto& [state, prob] : paths) {
            for (std::size_t to = 0; to < s; ++to) {
                const double p = prob * step[state][to];
                if (p > 0.0) next.push_back({to, p});
            }
        }
        paths = std::move(next);
    }
    for (const auto& [state, prob] : paths) block += -prob * std::log(prob);
    return block;
}

std::vector<std::vector<double>> age_transition_matrix(const return_time_distribution& dist,
                                                       std::size_t states) {
    std::vector<std::vector<double>> step(states, std::vector<double>(states, 0.0));
    for (std::size_t j = 0; j < states; ++j) {
        if (dist.ccdf(j) <= 0.0) continue;
        const double q = dist.pmf(j + 1) / dist.ccdf(j);
        step[j][0] = q;
        if (j + 1 < states) step[j][j + 1] = 1.0 - q;
    }
    return step;
}

}  // namespace

TEST_CASE("entropy primitives") {
    REQUIRE(lrd::entropy_term(0.0) == 0.0);
    REQUIRE(lrd::entropy_term(1.0) == 0.0);
    REQUIRE_THAT(lrd::entropy_term(std::exp(-1.0)),
                 Catch::Matchers::WithinRel(std::exp(-1.0), 1e-15));
    REQUIRE(lrd::binary_entropy(0.0) == 0.0);
    REQUIRE(lrd::binary_entropy(1.0) == 0.0);
    REQUIRE(lrd::binary_entropy(0.5) == kLn2);
    REQUIRE_THAT(lrd::binary_entropy(0.3), Catch::Matchers::WithinRel(kBinEnt03, 1e-15));
    REQUIRE(lrd::binary_entropy(0.3) == lrd::binary_entropy(0.7));
}

TEST_CASE("state entropies are row entropies") {
    const age_chain chain(return_time_distribution::power_law(1.5));
    REQUIRE_THAT(lrd::state_entropy(chain, 0),
                 Catch::Matchers::WithinRel(kHazard0Entropy15, 1e-14));

    const finite_chain fin({{0.9, 0.1}, {0.4, 0.6}});
    REQUIRE_THAT(lrd::state_entropy(fin, 0),
                 Catch::Matchers::WithinRel(kRow09Entropy, 1e-14));
    REQUIRE_THAT(lrd::state_entropy(fin, 1),
                 Catch::Matchers::WithinRel(kRow04Entropy, 1e-14));
}

TEST_CASE("entropy rate closed forms and certified sums") {
    REQUIRE(lrd::entropy_rate(age_chain(return_time_distribution::geometric(0.5))) == kLn2);
    REQUIRE_THAT(lrd::entropy_rate(age_chain(return_time_distribution::geometric(0.3))),
                 Catch::Matchers::WithinRel(kBinEnt03, 1e-15));

    REQUIRE_THAT(lrd::entropy_rate(age_chain(return_time_distribution::power_law(1.5))),
                 Catch::Matchers::WithinRel(kRate15, 1e-10));
    REQUIRE_THAT(lrd::entropy_rate(age_chain(return_time_distribution::power_law(3.5))),
                 Catch::Matchers::WithinRel(kRate35, 1e-10));
    REQUIRE_THROWS_AS(lrd::entropy_rate(age_chain(return_time_distribution::power_law(1.0))),
                      lrd::no_stationary_error);

    // uniform on {1, 2}: entropy ln 2 per return, mean return 1.5
    REQUIRE_THAT(
        lrd::entropy_rate(age_chain(return_time_distribution::finite_support({0.5, 0.5}))),
        Catch::Matchers::WithinRel(kLn2 / 1.5, 1e-14));

    REQUIRE_THAT(lrd::entropy_rate(finite_chain({{0.9, 0.1}, {0.4, 0.6}})),
                 Catch::Matchers::WithinRel(kTwoStateRate, 1e-13));
}

TEST_CASE("certified pmf entropy carries an honest error bound") {
    const auto cert15 = lrd::detail::power_law_pmf_entropy(1.5, 1e-10);
    REQUIRE(cert15.error_bound <= 1e-10);
    REQUIRE(std::abs(cert15.value - kPmfEntropy15) <=
            cert15.error_bound + 1e-13 * kPmfEntropy15);

    const auto cert35 = lrd::detail::power_law_pmf_entropy(3.5, 1e-10);
    REQUIRE(cert35.error_bound <= 1e-10);
    REQUIRE(std::abs(cert35.value - kPmfEntropy35) <=
            cert35.error_bound + 1e-13 * kPmfEntropy35);
}

TEST_CASE("conditional entropy starts at the root row entropy") {
    const age_chain chain(return_time_distribution::power_law(1.5));
    const prob_vector init = prob_vector::point_mass(0, 64);
    REQUIRE(lrd::conditional_entropy(chain, init, 1, 64) == lrd::state_entropy(chain, 0));
    REQUIRE_THAT(lrd::conditional_entropy(chain, init, 2, 64),
                 Catch::Matchers::WithinRel(kStepEntropy2Alpha15, 1e-14));

    const age_chain geo(return_time_distribution::geometric(0.5));
    for (std::uint64_t n : {1, 2, 5, 17, 60}) {
        REQUIRE(lrd::conditional_entropy(geo, prob_vector::point_mass(0, 128), n, 128) ==
                kLn2);
    }
}

TEST_CASE("conditional entropy approaches the rate from a point start") {
    const age_chain chain(return_time_distribution::power_law(3.5));
    const prob_vector init = prob_vector::point_mass(0, 4096);
    const auto series = lrd::excess_entropy_partials(chain, init, 4096, 4096);
    const double d16 = std::abs(series.values[15] - series.rate);
    const double d4096 = std::abs(series.values[4095] - series.rate);
    REQUIRE(d4096 < 1e-6);
    REQUIRE(d16 > 100.0 * d4096);
}

TEST_CASE("series values agree with single-step conditional entropies") {
    const auto dist = return_time_distribution::power_law(1.5);
    const age_chain chain(dist);
    for (const std::uint64_t start : {std::uint64_t{0}, std::uint64_t{5}}) {
        const prob_vector init = prob_vector::point_mass(start, 64);
        const auto series = lrd::excess_entropy_partials(chain, init, 32, 64);
        for (std::uint64_t r = 1; r <= 32; ++r) {
            INFO("start=" << start << " r=" << r);
            REQUIRE_THAT(series.values[r - 1],
                         Catch::Matchers::WithinAbs(
                             lrd::conditional_entropy(chain, init, r, 200), 1e-12));
        }
    }

    const finite_chain fin({{0.9, 0.1}, {0.4, 0.6}});
    const prob_vector finit = prob_vector::point_mass(0, 1);
    const auto fseries = lrd::excess_entropy_partials(fin, finit, 20);
    for (std::uint64_t r = 1; r <= 20; ++r) {
        REQUIRE_THAT(fseries.values[r - 1],
                     Catch::Matchers::WithinAbs(lrd::conditional_entropy(fin, finit, r),
                                                1e-13));
    }
}

TEST_CASE("excess partial sums: exact zero, divergence, and convergence") {
    // fair geometric: every row entropy is ln 2, so E(n) must vanish exactly
    const age_chain geo(return_time_distribution::geometric(0.5));
    const auto gs =
        lrd::excess_entropy_partials(geo, prob_vector::point_mass(0, 1024), 1024, 1024);
    for (std::uint64_t r = 1; r <= 1024; ++r) {
        REQUIRE(gs.excess_partials[r - 1] == 0.0);
    }

    // heavy tail: the partial sums keep growing
    const age_chain slow(return_time_distribution::power_law(1.5));
    const auto ss =
        lrd::excess_entropy_partials(slow, prob_vector::point_mass(0, 4096), 4096, 4096);
    REQUIRE(ss.excess_partials[255] > 0.0);
    REQUIRE(ss.excess_partials[1023] > ss.excess_partials[255]);
    REQUIRE(ss.excess_partials[4095] > ss.excess_partials[1023]);

    // light tail: the partial sums settle
    const age_chain fast(return_time_distribution::power_law(3.5));
    const auto fs =
        lrd::excess_entropy_partials(fast, prob_vector::point_mass(0, 4096), 4096, 4096);
    REQUIRE(std::abs(fs.excess_partials[4095] - fs.excess_partials[2047]) < 1e-4);
}

TEST_CASE("block-entropy increments match the conditional series") {
    // finite-support age chain on states {0, 1, 2}: enumerate every path
    const auto dist = return_time_distribution::finite_support({0.2, 0.3, 0.5});
    const age_chain chain(dist);
    const auto step = age_transition_matrix(dist, 3);
    const prob_vector init = prob_vector::point_mass(0, 2);
    const auto series = lrd::excess_entropy_partials(chain, init, 8, 16);
    double prev_block = 0.0;
    for (std::size_t n = 1; n <= 8; ++n) {
        const double block = brute_block_entropy(step, 0, n);
        REQUIRE_THAT(series.values[n - 1],
                     Catch::Matchers::WithinAbs(block - prev_block, 1e-10));
        prev_block = block;
    }

    // general three-state chain
    const std::vector<std::vector<double>> rows{
        {0.2, 0.5, 0.3}, {0.6, 0.1, 0.3}, {0.25, 0.25, 0.5}};
    const finite_chain fin(rows);
    const prob_vector finit = prob_vector::point_mass(1, 2);
    const auto fseries = lrd::excess_entropy_partials(fin, finit, 8);
    prev_block = 0.0;
    for (std::size_t n = 1; n <= 8; ++n) {
        const double block = brute_block_entropy(rows, 1, n);
        REQUIRE_THAT(fseries.values[n - 1],
                     Catch::Matchers::WithinAbs(block - prev_block, 1e-10));
        prev_block = block;
    }
}

TEST_CASE("sampled log-likelihood reproduces the entropy rate") {
    // ergodic average of -ln(step probability) along one long path
    const auto dist = return_time_distribution::power_law(3.5);
    const age_chain chain(dist);
    const auto traj = lrd::simulate_trajectory(chain, 0, 2000000, 987654321);
    double acc = 0.0;
    std::uint64_t age = 0;
    for (const std::uint64_t next : traj.states) {
        const double q = chain.hazard(age);
        acc += -std::log(next == 0 ? q : 1.0 - q);
        age = next;
    }
    const double estimate = acc / static_cast<double>(traj.states.size());
    REQUIRE_THAT(estimate, Catch::Matchers::WithinAbs(kRate35, 0.01));
}

TEST_CASE("tail-entropy budget is enforced for truncated starts") {
    const age_chain chain(return_time_distribution::power_law(1.2));
    prob_vector init;
    init.weights = {0.4, 0.1};
    init.tail_mass = 0.5;
    REQUIRE_THROWS_AS(lrd::excess_entropy_partials(chain, init, 16, 8),
                      lrd::truncation_error);
    REQUIRE_NOTHROW(lrd::excess_entropy_partials(chain, init, 16, 8, 0.5));
    REQUIRE_THROWS_AS(lrd::conditional_entropy(chain, init, 4, 8), lrd::truncation_error);
}
