#pragma once

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "chain.hpp"
#include "convergence.hpp"
#include "counting.hpp"
#include "csv.hpp"
#include "entropy.hpp"
#include "errors.hpp"
#include "format.hpp"
#include "prob_vector.hpp"
#include "return_time.hpp"
#include "summation.hpp"

namespace lrd {

inline constexpr const char* tool_name_version = "lrdlab 1.0.0";

// Configuration problems: unknown/missing keys, values out of range, bad
// experiment names.  The CLI maps these to its usage exit code.
class config_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct grid_spec {
    std::uint64_t n_min = 1024;
    std::uint64_t n_max = 16384;
    std::uint64_t points = 9;
    std::string scale = "geometric";  // or "linear"

    std::vector<std::uint64_t> materialize() const {
        const auto pts = static_cast<std::size_t>(points);
        return scale == "linear" ? linear_grid(n_min, n_max, pts)
                                 : geometric_grid(n_min, n_max, pts);
    }
};

// One resolved experiment description.  Defaults match what the config
// parser leaves untouched; finalize_config() applies the cross-field rules.
struct experiment_config {
    std::string label = "run";
    std::string experiment;  // rate | entropy | excess | variance | classify | simulate

    // chain description: exactly one of (rt_kind ...) or matrix_file
    std::string rt_kind;  // power_law | geometric | finite_support
    double alpha = 0.0;
    bool has_alpha = false;
    double p = 0.0;
    bool has_p = false;
    std::vector<double> pmf;
    std::string matrix_file;

    grid_spec grid;
    std::uint64_t init_state = 0;    // start state / start age
    std::uint64_t target_state = 0;  // marked state for counting and classification
    double tolerance = 1e-6;         // truncation-entropy budget for evolved starts
    std::uint64_t seed = 0;
    bool has_seed = false;
    std::uint64_t reps = 0;
    std::uint64_t truncation = 0;  // 0 before finalize: defaults to grid.n_max
    bool has_truncation = false;
    std::string log_base = "nats";  // or "bits"
    std::string out_dir = ".";
};

namespace detail {

inline std::string trim(std::string_view s) {
    const char* ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return std::string();
    const auto e = s.find_last_not_of(ws);
    return std::string(s.substr(b, e - b + 1));
}

inline std::string strip_quotes(std::string s) {
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
        return s.substr(1, s.size() - 2);
    }
    return s;
}

inline std::uint64_t parse_config_u64(const std::string& key, const std::string& text) {
    std::uint64_t value = 0;
    const char* begin = text.data();
    const char* end = begin + text.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end || text.empty()) {
        throw config_error("invalid value for key '" + key +
                           "': expected a nonnegative integer, got '" + text + "'");
    }
    return value;
}

inline double parse_config_double(const std::string& key, const std::string& text) {
    double value = 0.0;
    const char* begin = text.data();
    const char* end = begin + text.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end || text.empty() || !std::isfinite(value)) {
        throw config_error("invalid value for key '" + key +
                           "': expected a finite number, got '" + text + "'");
    }
    return value;
}

inline std::vector<double> parse_config_double_list(const std::string& key,
                                                    const std::string& text) {
    std::vector<double> values;
    std::size_t pos = 0;
    while (pos < text.size()) {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
        if (pos >= text.size()) break;
        std::size_t end = pos;
        while (end < text.size() && !std::isspace(static_cast<unsigned char>(text[end]))) ++end;
        values.push_back(parse_config_double(key, text.substr(pos, end - pos)));
        pos = end;
    }
    if (values.empty()) {
        throw config_error("invalid value for key '" + key + "': expected a list of numbers");
    }
    return values;
}

}  // namespace detail

// Parse `key = value` lines into a flat map.  '#' starts a comment (outside
// quotes), later assignments win, and a brace value expands into dotted
// keys: `return_time = { kind = "geometric", p = 0.5 }` is shorthand for
// return_time.kind / return_time.p.
inline std::map<std::string, std::string> parse_config_stream(std::istream& in) {
    std::map<std::string, std::string> kv;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string visible;
        bool quoted = false;
        for (char c : line) {
            if (c == '"') quoted = !quoted;
            if (c == '#' && !quoted) break;
            visible += c;
        }
        const std::string entry = detail::trim(visible);
        if (entry.empty()) continue;
        const auto eq = entry.find('=');
        if (eq == std::string::npos) {
            throw config_error("config line " + std::to_string(lineno) +
                               ": expected 'key = value'");
        }
        const std::string key = detail::trim(entry.substr(0, eq));
        std::string value = detail::trim(entry.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw config_error("config line " + std::to_string(lineno) +
                               ": empty key or value");
        }
        if (value.front() == '{') {
            if (value.back() != '}') {
                throw config_error("config line " + std::to_string(lineno) +
                                   ": unterminated inline table");
            }
            const std::string inner = value.substr(1, value.size() - 2);
            std::size_t start = 0;
            while (start <= inner.size()) {
                const auto comma = inner.find(',', start);
                const std::string part = detail::trim(
                    inner.substr(start, comma == std::string::npos ? std::string::npos
                                                                   : comma - start));
                if (!part.empty()) {
                    const auto peq = part.find('=');
                    if (peq == std::string::npos) {
                        throw config_error("config line " + std::to_string(lineno) +
                                           ": inline table entry needs 'key = value'");
                    }
                    const std::string sub = detail::trim(part.substr(0, peq));
                    const std::string sval =
                        detail::strip_quotes(detail::trim(part.substr(peq + 1)));
                    if (sub.empty() || sval.empty()) {
                        throw config_error("config line " + std::to_string(lineno) +
                                           ": empty key or value in inline table");
                    }
                    kv[key + "." + sub] = sval;
                }
                if (comma == std::string::npos) break;
                start = comma + 1;
            }
        } else {
            kv[key] = detail::strip_quotes(value);
        }
    }
    return kv;
}

// Typed extraction; leftover keys are reported as unknown so typos fail fast.
inline experiment_config config_from_map(std::map<std::string, std::string> kv) {
    experiment_config cfg;
    auto take = [&kv](const char* key) -> std::optional<std::string> {
        auto it = kv.find(key);
        if (it == kv.end()) return std::nullopt;
        std::string value = std::move(it->second);
        kv.erase(it);
        return value;
    };
    if (auto v = take("label")) cfg.label = *v;
    if (auto v = take("experiment")) cfg.experiment = *v;
    if (auto v = take("return_time.kind")) cfg.rt_kind = *v;
    if (auto v = take("return_time.alpha")) {
        cfg.alpha = detail::parse_config_double("return_time.alpha", *v);
        cfg.has_alpha = true;
    }
    if (auto v = take("return_time.p")) {
        cfg.p = detail::parse_config_double("return_time.p", *v);
        cfg.has_p = true;
    }
    if (auto v = take("return_time.pmf")) {
        cfg.pmf = detail::parse_config_double_list("return_time.pmf", *v);
    }
    if (auto v = take("matrix_file")) cfg.matrix_file = *v;
    if (auto v = take("grid.min")) cfg.grid.n_min = detail::parse_config_u64("grid.min", *v);
    if (auto v = take("grid.max")) cfg.grid.n_max = detail::parse_config_u64("grid.max", *v);
    if (auto v = take("grid.points")) {
        cfg.grid.points = detail::parse_config_u64("grid.points", *v);
    }
    if (auto v = take("grid.scale")) cfg.grid.scale = *v;
    if (auto v = take("init")) cfg.init_state = detail::parse_config_u64("init", *v);
    if (auto v = take("state")) cfg.target_state = detail::parse_config_u64("state", *v);
    if (auto v = take("tolerance")) {
        cfg.tolerance = detail::parse_config_double("tolerance", *v);
    }
    if (auto v = take("seed")) {
        cfg.seed = detail::parse_config_u64("seed", *v);
        cfg.has_seed = true;
    }
    if (auto v = take("reps")) cfg.reps = detail::parse_config_u64("reps", *v);
    if (auto v = take("truncation")) {
        cfg.truncation = detail::parse_config_u64("truncation", *v);
        cfg.has_truncation = true;
    }
    if (auto v = take("log_base")) cfg.log_base = *v;
    if (auto v = take("out")) cfg.out_dir = *v;
    if (!kv.empty()) {
        throw config_error("unknown key '" + kv.begin()->first + "'");
    }
    return cfg;
}

inline experiment_config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw config_error("cannot open config file '" + path + "'");
    }
    return config_from_map(parse_config_stream(in));
}

// Cross-field validation plus resolution of defaulted fields.  Idempotent;
// run_experiment applies it to its own copy, so callers may skip it.
inline void finalize_config(experiment_config& cfg) {
    static const std::set<std::string> experiments = {"rate",     "entropy",  "excess",
                                                      "variance", "classify", "simulate"};
    if (cfg.experiment.empty()) {
        throw config_error("missing required key 'experiment'");
    }
    if (experiments.count(cfg.experiment) == 0) {
        throw config_error("invalid value for key 'experiment': '" + cfg.experiment +
                           "' (expected rate, entropy, excess, variance, classify, or "
                           "simulate)");
    }
    const bool has_rt = !cfg.rt_kind.empty() || cfg.has_alpha || cfg.has_p || !cfg.pmf.empty();
    if (!cfg.matrix_file.empty() && has_rt) {
        throw config_error("keys 'return_time.kind' and 'matrix_file' are mutually exclusive");
    }
    if (cfg.matrix_file.empty()) {
        if (cfg.rt_kind.empty()) {
            throw config_error("missing required key 'return_time.kind' (or 'matrix_file')");
        }
        if (cfg.rt_kind == "power_law") {
            if (!cfg.has_alpha) throw config_error("missing required key 'return_time.alpha'");
            if (cfg.has_p) {
                throw config_error("key 'return_time.p' is only valid for kind 'geometric'");
            }
            if (!cfg.pmf.empty()) {
                throw config_error(
                    "key 'return_time.pmf' is only valid for kind 'finite_support'");
            }
        } else if (cfg.rt_kind == "geometric") {
            if (!cfg.has_p) throw config_error("missing required key 'return_time.p'");
            if (cfg.has_alpha) {
                throw config_error("key 'return_time.alpha' is only valid for kind 'power_law'");
            }
            if (!cfg.pmf.empty()) {
                throw config_error(
                    "key 'return_time.pmf' is only valid for kind 'finite_support'");
            }
        } else if (cfg.rt_kind == "finite_support") {
            if (cfg.pmf.empty()) throw config_error("missing required key 'return_time.pmf'");
            if (cfg.has_alpha) {
                throw config_error("key 'return_time.alpha' is only valid for kind 'power_law'");
            }
            if (cfg.has_p) {
                throw config_error("key 'return_time.p' is only valid for kind 'geometric'");
            }
        } else {
            throw config_error("invalid value for key 'return_time.kind': '" + cfg.rt_kind +
                               "' (expected power_law, geometric, or finite_support)");
        }
    }
    if (cfg.grid.n_min < 1) {
        throw config_error("key 'grid.min' must be at least 1");
    }
    if (cfg.grid.n_min >= cfg.grid.n_max) {
        throw config_error("grid must be increasing: 'grid.min' < 'grid.max' required");
    }
    if (cfg.grid.points < 2) {
        throw config_error("key 'grid.points' must be at least 2");
    }
    if (cfg.grid.scale != "geometric" && cfg.grid.scale != "linear") {
        throw config_error("invalid value for key 'grid.scale': '" + cfg.grid.scale +
                           "' (expected geometric or linear)");
    }
    if (!(cfg.tolerance > 0.0) || cfg.tolerance > 1e-3) {
        throw config_error("key 'tolerance' must lie in (0, 0.001]");
    }
    if (cfg.reps > 0 && !cfg.has_seed) {
        throw config_error("key 'seed' is required when reps > 0");
    }
    if (cfg.experiment == "simulate" && !cfg.has_seed) {
        throw config_error("key 'seed' is required for the simulate experiment");
    }
    if (cfg.log_base != "nats" && cfg.log_base != "bits") {
        throw config_error("invalid value for key 'log_base': '" + cfg.log_base +
                           "' (expected nats or bits)");
    }
    if (cfg.has_truncation && cfg.truncation < 1) {
        throw config_error("key 'truncation' must be at least 1");
    }
    if (!cfg.has_truncation) {
        cfg.truncation = cfg.grid.n_max;
        cfg.has_truncation = true;
    }
    if (cfg.matrix_file.empty() && cfg.init_state > cfg.truncation) {
        throw config_error("key 'init' must not exceed 'truncation'");
    }
}

namespace detail {

inline std::string artifact_path(const experiment_config& cfg, const std::string& suffix) {
    return (std::filesystem::path(cfg.out_dir) / (cfg.label + "_" + suffix)).string();
}

inline return_time_distribution build_return_time(const experiment_config& cfg) {
    if (cfg.rt_kind == "power_law") return return_time_distribution::power_law(cfg.alpha);
    if (cfg.rt_kind == "geometric") return return_time_distribution::geometric(cfg.p);
    return return_time_distribution::finite_support(cfg.pmf);
}

inline void require_reachable_age(const return_time_distribution& dist, std::uint64_t age,
                                  const char* key) {
    if (dist.ccdf(age) <= 0.0) {
        throw config_error(std::string("key '") + key +
                           "' names an age beyond the return-time support");
    }
}

inline finite_chain load_matrix(const experiment_config& cfg) {
    try {
        return finite_chain::from_file(cfg.matrix_file);
    } catch (const std::exception& e) {
        throw config_error("key 'matrix_file': " + std::string(e.what()));
    }
}

inline void require_finite_state(const finite_chain& chain, std::uint64_t state,
                                 const char* key) {
    if (state >= chain.size()) {
        throw config_error(std::string("key '") + key + "' out of range: matrix has " +
                           std::to_string(chain.size()) + " states");
    }
}

// Distance to stationarity at every step 1..horizon for a point-mass start,
// sharing one renewal pass across the sweep: at time n the tracked states
// split into ages j <= min(n, truncation) reached through a renewal, the
// surviving start atom at age start + n, untouched states carrying only
// stationary mass, and the lumped tail.
inline std::vector<double> tv_sweep(const age_chain& chain, std::uint64_t start,
                                    std::uint64_t horizon, std::size_t truncation) {
    const return_time_distribution& dist = chain.return_time();
    require_reachable_age(dist, start, "init");
    const prob_vector pi = stationary(chain, truncation);
    const std::size_t cap = truncation;

    std::vector<double> survival(cap + 1);
    for (std::size_t j = 0; j <= cap; ++j) survival[j] = dist.ccdf(j);

    // suffix_pi[m] = sum of pi.weights[j] over j in (m, cap]
    std::vector<double> suffix_pi(cap + 1, 0.0);
    {
        compensated_sum acc;
        for (std::size_t m = cap; m-- > 0;) {
            acc.add(pi.weights[m + 1]);
            suffix_pi[m] = acc.value();
        }
    }

    std::vector<double> u = renewal_sequence(dist, horizon);
    std::vector<double> arrivals;
    if (start == 0) {
        arrivals = std::move(u);
    } else {
        const prob_vector init = prob_vector::point_mass(start, start);
        arrivals = renewal_hits(dist, init, u, horizon);
    }

    std::vector<double> tv(horizon + 1, 0.0);
    for (std::uint64_t n = 1; n <= horizon; ++n) {
        const std::uint64_t top = std::min<std::uint64_t>(n, cap);
        compensated_sum l1;
        compensated_sum covered;
        for (std::uint64_t j = 0; j <= top; ++j) {
            const double mu = arrivals[static_cast<std::size_t>(n - j)] * survival[j];
            l1.add(std::abs(mu - pi.weights[j]));
            covered.add(mu);
        }
        // states in (n, cap] hold no chain mass except the surviving atom
        double rest = n < cap ? suffix_pi[n] : 0.0;
        if (start >= 1) {
            const std::uint64_t atom = start + n;
            const double surv = dist.ccdf(atom) / dist.ccdf(start);
            if (atom <= cap) {
                rest -= pi.weights[atom];
                l1.add(std::abs(surv - pi.weights[atom]));
                covered.add(surv);
            }
            // atom > cap: the surviving mass belongs to the lumped tail and
            // is already collected by 1 - covered
        }
        if (rest < 0.0) rest = 0.0;
        const double tail_mu = std::max(0.0, 1.0 - covered.value());
        tv[n] = 0.5 * (l1.value() + rest + std::abs(tail_mu - pi.tail_mass));
    }
    return tv;
}

inline std::vector<double> tv_sweep(const finite_chain& chain, std::uint64_t start,
                                    std::uint64_t horizon) {
    require_finite_state(chain, start, "init");
    const prob_vector pi = stationary(chain);
    prob_vector cur =
        prob_vector::point_mass(static_cast<std::size_t>(start), chain.size() - 1);
    std::vector<double> tv(horizon + 1, 0.0);
    for (std::uint64_t n = 1; n <= horizon; ++n) {
        cur = n_step_distribution(chain, cur, 1);
        tv[n] = tv_distance(cur, pi);
    }
    return tv;
}

inline const char* fit_model_name(fit_model model) {
    return model == fit_model::power_law ? "power_law" : "geometric";
}

// Fit CSV: header always; the row is omitted when no admissible fit exists
// (fewer than four points or nonpositive values).
inline void write_fit_csv(const std::string& path, fit_model model,
                          const std::vector<series_point>& points) {
    csv_writer out(path);
    out.row({"model", "exponent_or_ratio", "stderr", "r_squared", "n_min", "n_max"});
    try {
        const rate_fit fit =
            model == fit_model::power_law ? fit_power_law(points) : fit_geometric(points);
        const bool ratio = model == fit_model::geometric;
        const double value = ratio ? fit.ratio() : fit.slope;
        const double se = ratio ? fit.ratio() * fit.slope_stderr : fit.slope_stderr;
        out.row({fit_model_name(model), format_double(value), format_double(se),
                 format_double(fit.r_squared), std::to_string(fit.n_min),
                 std::to_string(fit.n_max)});
    } catch (const std::invalid_argument&) {
        // header-only file: the series did not admit this fit
    }
}

inline fit_model fit_model_for(convergence_family family) {
    return family == convergence_family::geometric ? fit_model::geometric
                                                   : fit_model::power_law;
}

inline void run_rate(const experiment_config& cfg) {
    const std::vector<std::uint64_t> grid = cfg.grid.materialize();
    std::vector<series_point> series;
    convergence_family family = convergence_family::geometric;
    if (cfg.matrix_file.empty()) {
        const age_chain chain(build_return_time(cfg));
        require_reachable_age(chain.return_time(), cfg.init_state, "init");
        const prob_vector init = prob_vector::point_mass(
            static_cast<std::size_t>(cfg.init_state), cfg.truncation);
        series = tv_to_stationary(chain, init, grid, cfg.truncation);
        family = classify_ergodicity(chain.return_time()).family;
    } else {
        const finite_chain chain = load_matrix(cfg);
        require_finite_state(chain, cfg.init_state, "init");
        const prob_vector init = prob_vector::point_mass(
            static_cast<std::size_t>(cfg.init_state), chain.size() - 1);
        series = tv_to_stationary(chain, init, grid);
    }
    csv_writer out(artifact_path(cfg, "tv.csv"));
    out.row({"n", "tv_distance"});
    for (const series_point& point : series) {
        out.row({std::to_string(point.n), format_double(point.value)});
    }
    write_fit_csv(artifact_path(cfg, "fit.csv"), fit_model_for(family), series);
}

inline void run_entropy(const experiment_config& cfg, bool fit_excess) {
    const std::vector<std::uint64_t> grid = cfg.grid.materialize();
    const std::uint64_t horizon = grid.back();
    entropy_series series;
    std::vector<double> tv;
    convergence_family family = convergence_family::geometric;
    if (cfg.matrix_file.empty()) {
        const age_chain chain(build_return_time(cfg));
        require_reachable_age(chain.return_time(), cfg.init_state, "init");
        const prob_vector init = prob_vector::point_mass(
            static_cast<std::size_t>(cfg.init_state), cfg.truncation);
        series = excess_entropy_partials(chain, init, horizon, cfg.truncation, cfg.tolerance);
        tv = tv_sweep(chain, cfg.init_state, horizon, cfg.truncation);
        family = classify_ergodicity(chain.return_time()).family;
    } else {
        const finite_chain chain = load_matrix(cfg);
        require_finite_state(chain, cfg.init_state, "init");
        const prob_vector init = prob_vector::point_mass(
            static_cast<std::size_t>(cfg.init_state), chain.size() - 1);
        series = excess_entropy_partials(chain, init, horizon);
        tv = tv_sweep(chain, cfg.init_state, horizon);
    }
    const double scale = cfg.log_base == "bits" ? std::log(2.0) : 1.0;
    csv_writer out(artifact_path(cfg, "entropy.csv"));
    out.row({"n", "conditional_entropy", "entropy_rate", "excess_partial", "tv_distance"});
    for (std::uint64_t n = 1; n <= horizon; ++n) {
        out.row({std::to_string(n), format_double(series.values[n - 1] / scale),
                 format_double(series.rate / scale),
                 format_double(series.excess_partials[n - 1] / scale),
                 format_double(tv[n])});
    }
    std::vector<series_point> fit_points;
    fit_points.reserve(grid.size());
    for (const std::uint64_t n : grid) {
        const double value = fit_excess ? series.excess_partials[n - 1]
                                        : std::abs(series.values[n - 1] - series.rate);
        fit_points.push_back({n, value});
    }
    // growth of the running excess sum is polynomial whenever it diverges, so
    // the excess fit always uses the power-law model
    const fit_model model = fit_excess ? fit_model::power_law : fit_model_for(family);
    write_fit_csv(artifact_path(cfg, "fit.csv"), model, fit_points);
}

inline void run_variance(const experiment_config& cfg) {
    const std::vector<std::uint64_t> grid = cfg.grid.materialize();
    variance_series series;
    if (cfg.matrix_file.empty()) {
        const age_chain chain(build_return_time(cfg));
        require_reachable_age(chain.return_time(), cfg.target_state, "state");
        const auto state = static_cast<std::size_t>(cfg.target_state);
        series = counting_variance_exact(chain, state, grid);
        if (cfg.reps > 0) {
            const variance_series mc = counting_variance_mc(
                chain, state, grid, static_cast<std::size_t>(cfg.reps), cfg.seed);
            series.var_mc = mc.var_mc;
            series.stderr_mc = mc.stderr_mc;
        }
    } else {
        const finite_chain chain = load_matrix(cfg);
        require_finite_state(chain, cfg.target_state, "state");
        const auto state = static_cast<std::size_t>(cfg.target_state);
        series = counting_variance_exact(chain, state, grid);
        if (cfg.reps > 0) {
            const variance_series mc = counting_variance_mc(
                chain, state, grid, static_cast<std::size_t>(cfg.reps), cfg.seed);
            series.var_mc = mc.var_mc;
            series.stderr_mc = mc.stderr_mc;
        }
    }
    csv_writer out(artifact_path(cfg, "variance.csv"));
    out.row({"n", "var_exact", "var_mc", "stderr_mc", "var_over_n"});
    for (std::size_t g = 0; g < series.grid.size(); ++g) {
        const double n = static_cast<double>(series.grid[g]);
        out.row({std::to_string(series.grid[g]), format_double(series.var_exact[g]),
                 series.var_mc.empty() ? "" : format_double(series.var_mc[g]),
                 series.stderr_mc.empty() ? "" : format_double(series.stderr_mc[g]),
                 format_double(series.var_exact[g] / n)});
    }
    const hurst_estimate hurst = hurst_from_variance(series);
    csv_writer hout(artifact_path(cfg, "hurst.csv"));
    hout.row({"hurst", "stderr", "n_min", "n_max"});
    hout.row({format_double(hurst.value), format_double(hurst.stderr_value),
              std::to_string(hurst.n_min), std::to_string(hurst.n_max)});
}

inline std::string run_classify(const experiment_config& cfg) {
    std::string chain_cell;
    std::string family_cell;
    std::string exponent_cell;
    std::string moment_cell;
    std::string mean_cell;
    std::string hurst_cell;
    std::string verdict;
    if (cfg.matrix_file.empty()) {
        const return_time_distribution dist = build_return_time(cfg);
        const age_chain chain(dist);  // validates aperiodicity for finite support
        const ergodicity_class cls = classify_ergodicity(dist);
        chain_cell = describe(dist);
        switch (cls.family) {
            case convergence_family::geometric:
                family_cell = "geometric";
                verdict = "Geometric";
                break;
            case convergence_family::polynomial:
                family_cell = "polynomial";
                exponent_cell = format_double(cls.rate_exponent);
                verdict = "Polynomial(" + exponent_cell + ")";
                break;
            case convergence_family::null_recurrent:
                family_cell = "null_recurrent";
                verdict = "NullRecurrent";
                break;
        }
        const double moment = dist.moment_index();
        moment_cell = format_double(moment);
        mean_cell = format_double(dist.mean_return_time());
        if (moment > 1.0 && moment < 2.0) {
            hurst_cell = format_double(hurst_from_moment_index(moment));
        }
    } else {
        const finite_chain chain = load_matrix(cfg);
        require_finite_state(chain, cfg.target_state, "state");
        const prob_vector pi = stationary(chain);
        chain_cell = "finite_matrix(S=" + std::to_string(chain.size()) + ")";
        family_cell = "geometric";
        verdict = "Geometric";
        moment_cell = "inf";
        mean_cell =
            format_double(1.0 / pi.weights[static_cast<std::size_t>(cfg.target_state)]);
    }
    csv_writer out(artifact_path(cfg, "classify.csv"));
    out.row({"chain", "family", "rate_exponent", "moment_index", "mean_return_time",
             "hurst"});
    out.row({chain_cell, family_cell, exponent_cell, moment_cell, mean_cell, hurst_cell});
    return verdict;
}

inline void run_simulate(const experiment_config& cfg) {
    trajectory traj;
    if (cfg.matrix_file.empty()) {
        const age_chain chain(build_return_time(cfg));
        require_reachable_age(chain.return_time(), cfg.init_state, "init");
        traj = simulate_trajectory(chain, cfg.init_state,
                                   static_cast<std::size_t>(cfg.grid.n_max), cfg.seed);
    } else {
        const finite_chain chain = load_matrix(cfg);
        require_finite_state(chain, cfg.init_state, "init");
        traj = simulate_trajectory(chain, static_cast<std::size_t>(cfg.init_state),
                                   static_cast<std::size_t>(cfg.grid.n_max), cfg.seed);
    }
    const std::string path = artifact_path(cfg, "trajectory.txt");
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open trajectory file " + path);
    }
    for (const std::uint64_t state : traj.states) {
        out << state << '\n';
    }
}

// The manifest echoes the resolved configuration in the config syntax, so
// feeding it back through `run --config` reproduces the artifacts exactly.
inline void write_manifest(const experiment_config& cfg, double wall_seconds) {
    const std::string path = artifact_path(cfg, "manifest.txt");
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open manifest file " + path);
    }
    out << "# " << tool_name_version << "\n";
    out << "# wall_time_s = " << format_double(wall_seconds) << "\n";
    out << "label = " << cfg.label << "\n";
    out << "experiment = " << cfg.experiment << "\n";
    if (!cfg.matrix_file.empty()) {
        out << "matrix_file = " << cfg.matrix_file << "\n";
    } else {
        out << "return_time.kind = " << cfg.rt_kind << "\n";
        if (cfg.rt_kind == "power_law") {
            out << "return_time.alpha = " << format_double(cfg.alpha) << "\n";
        } else if (cfg.rt_kind == "geometric") {
            out << "return_time.p = " << format_double(cfg.p) << "\n";
        } else {
            out << "return_time.pmf = \"";
            for (std::size_t i = 0; i < cfg.pmf.size(); ++i) {
                if (i > 0) out << ' ';
                out << format_double(cfg.pmf[i]);
            }
            out << "\"\n";
        }
    }
    out << "grid.min = " << cfg.grid.n_min << "\n";
    out << "grid.max = " << cfg.grid.n_max << "\n";
    out << "grid.points = " << cfg.grid.points << "\n";
    out << "grid.scale = " << cfg.grid.scale << "\n";
    out << "init = " << cfg.init_state << "\n";
    out << "state = " << cfg.target_state << "\n";
    out << "tolerance = " << format_double(cfg.tolerance) << "\n";
    if (cfg.has_seed) {
        out << "seed = " << cfg.seed << "\n";
    }
    out << "reps = " << cfg.reps << "\n";
    out << "truncation = " << cfg.truncation << "\n";
    out << "log_base = " << cfg.log_base << "\n";
    out << "out = " << cfg.out_dir << "\n";
}

}  // namespace detail

struct run_result {
    std::string stdout_text;  // classification verdicts; empty otherwise
};

inline run_result run_experiment(experiment_config cfg) {
    finalize_config(cfg);
    const auto t0 = std::chrono::steady_clock::now();
    std::filesystem::create_directories(cfg.out_dir);
    run_result result;
    if (cfg.experiment == "rate") {
        detail::run_rate(cfg);
    } else if (cfg.experiment == "entropy") {
        detail::run_entropy(cfg, false);
    } else if (cfg.experiment == "excess") {
        detail::run_entropy(cfg, true);
    } else if (cfg.experiment == "variance") {
        detail::run_variance(cfg);
    } else if (cfg.experiment == "classify") {
        result.stdout_text = detail::run_classify(cfg);
    } else {
        detail::run_simulate(cfg);
    }
    const std::chrono::duration<double> wall = std::chrono::steady_clock::now() - t0;
    detail::write_manifest(cfg, wall.count());
    return result;
}

namespace detail {

inline std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot reopen artifact " + path);
    }
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

inline std::vector<std::string> merged_artifact_suffixes(const std::string& experiment) {
    if (experiment == "rate") return {"tv.csv", "fit.csv"};
    if (experiment == "entropy" || experiment == "excess") return {"entropy.csv", "fit.csv"};
    if (experiment == "variance") return {"variance.csv", "hurst.csv"};
    return {"classify.csv"};
}

}  // namespace detail

// Run every config, then join the per-run artifacts into long-format
// compare_*.csv files (keyed by label) in the first config's output
// directory.
inline run_result run_compare(std::vector<experiment_config> cfgs) {
    if (cfgs.size() < 2) {
        throw config_error("compare requires at least two configs");
    }
    for (experiment_config& cfg : cfgs) finalize_config(cfg);
    const std::string kind = cfgs.front().experiment;
    std::set<std::string> labels;
    for (const experiment_config& cfg : cfgs) {
        if (cfg.experiment != kind) {
            throw config_error("compare requires configs with the same experiment; got '" +
                               kind + "' and '" + cfg.experiment + "'");
        }
        if (!labels.insert(cfg.label).second) {
            throw config_error("compare requires distinct labels; '" + cfg.label +
                               "' appears twice");
        }
    }
    if (kind == "simulate") {
        throw config_error("compare does not support the simulate experiment");
    }
    run_result result;
    for (const experiment_config& cfg : cfgs) {
        const run_result one = run_experiment(cfg);
        if (!one.stdout_text.empty()) {
            if (!result.stdout_text.empty()) result.stdout_text += "\n";
            result.stdout_text += cfg.label + ": " + one.stdout_text;
        }
    }
    const std::filesystem::path dir(cfgs.front().out_dir);
    for (const std::string& suffix : detail::merged_artifact_suffixes(kind)) {
        const std::string merged_path = (dir / ("compare_" + suffix)).string();
        std::ofstream out(merged_path, std::ios::binary);
        if (!out) {
            throw std::runtime_error("cannot open merged artifact " + merged_path);
        }
        std::string header;
        for (const experiment_config& cfg : cfgs) {
            const std::vector<std::string> lines =
                detail::read_lines(detail::artifact_path(cfg, suffix));
            if (lines.empty()) {
                throw std::runtime_error("artifact " + detail::artifact_path(cfg, suffix) +
                                         " is empty");
            }
            if (header.empty()) {
                header = lines.front();
                out << "label," << header << '\n';
            } else if (lines.front() != header) {
                throw std::runtime_error("artifact headers disagree for " + suffix);
            }
            for (std::size_t i = 1; i < lines.size(); ++i) {
                out << cfg.label << ',' << lines[i] << '\n';
            }
        }
    }
    return result;
}

}  // namespace lrd
