#pragma once

#include "lastpassage/boundary.hpp"
#include "lastpassage/gain.hpp"
#include "lastpassage/levy_model.hpp"
#include "lastpassage/parallel.hpp"
#include "lastpassage/rng.hpp"
#include "lastpassage/stats.hpp"

#include <boost/random/exponential_distribution.hpp>
#include <boost/random/normal_distribution.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lastpassage {

// Kernel tables draw from substream 0, so a shared seed never reuses their streams.
inline constexpr std::uint64_t kSimulationSubstream = 1;

struct SimConfig {
    LevyModel model = LevyModel::brownian(0.0, 1.0);
    double theta = 0.0;
    double dt = 1e-3;
    std::size_t n_paths = 100000;
    std::uint64_t seed = 20240602;
    // Paths stop at min(max(e_theta, m_theta), cap); unset means m_theta + 40 / theta.
    std::optional<double> horizon_cap;
    double x0 = 0.0;
    unsigned threads = 0;
};

inline double median_of(double theta) { return std::numbers::ln2 / theta; }

inline double resolved_horizon_cap(const SimConfig& cfg) {
    return cfg.horizon_cap.value_or(median_of(cfg.theta) + 40.0 / cfg.theta);
}

inline void validate(const SimConfig& cfg) {
    if (!(cfg.theta > 0.0) || !std::isfinite(cfg.theta)) throw std::invalid_argument("sim: theta must be > 0");
    if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) throw std::invalid_argument("sim: dt must be > 0");
    if (cfg.n_paths < 1) throw std::invalid_argument("sim: n_paths must be >= 1");
    if (!std::isfinite(cfg.x0)) throw std::invalid_argument("sim: x0 must be finite");
    if (!(resolved_horizon_cap(cfg) >= median_of(cfg.theta)))
        throw std::invalid_argument("sim: horizon_cap must be at least m_theta");
}

/// One piece of a simulated path. Diffusive pieces carry the Gaussian variance
/// sigma^2 (t1 - t0); jumps are pieces with t0 == t1 and var == 0.
struct PathStep {
    double t0;
    double x0;
    double t1;
    double x1;
    double var;
};

/// Euler-Maruyama path on [0, horizon] with exact jump times. The path visits every
/// multiple of dt, every time in `marks` and every jump time; visit(step) is called
/// for each piece in order and may return false to stop early.
template <typename Visitor>
void simulate_path(const LevyModel& model, double x0, double dt, double horizon, std::span<const double> marks,
                   Engine& gen, Visitor&& visit) {
    boost::random::normal_distribution<double> normal;
    const bool jumps = model.has_jumps();
    boost::random::exponential_distribution<double> arrival(jumps ? model.lambda() : 1.0);
    boost::random::exponential_distribution<double> jump_size(jumps ? model.rho() : 1.0);
    const double mu = model.mu();
    const double sigma = model.sigma();
    const double s2 = sigma * sigma;

    double next_jump = jumps ? arrival(gen) : std::numeric_limits<double>::infinity();
    double t = 0.0;
    double x = x0;
    std::size_t j = 0;
    std::size_t mi = 0;
    while (t < horizon) {
        const double grid = std::min(static_cast<double>(j + 1) * dt, horizon);
        double target = grid;
        while (mi < marks.size() && marks[mi] <= t) ++mi;
        if (mi < marks.size() && marks[mi] < target) target = marks[mi];
        const bool jump_now = next_jump <= target;
        if (jump_now) target = next_jump;

        const double d = target - t;
        if (d > 0.0) {
            const double x1 = x + mu * d + sigma * std::sqrt(d) * normal(gen);
            if (!visit(PathStep{t, x, target, x1, s2 * d})) return;
            x = x1;
        }
        t = target;
        if (jump_now) {
            const double x1 = x - jump_size(gen);
            if (!visit(PathStep{t, x, t, x1, 0.0})) return;
            x = x1;
            next_jump = t + arrival(gen);
        }
        if (t >= static_cast<double>(j + 1) * dt) ++j;
    }
}

/// Minimum of a Brownian bridge from a to b with variance var over the piece, drawn
/// by inversion from u in (0, 1].
inline double bridge_minimum(double a, double b, double var, double u) {
    return std::min({a, b, 0.5 * (a + b - std::sqrt((b - a) * (b - a) - 2.0 * var * std::log(u)))});
}

/// Last time at or below zero up to `horizon`, from path pieces fed in order. A piece
/// that ends above zero after starting at or below it contributes its linearly
/// interpolated crossing time; sup of the empty set is 0.
struct LastZero {
    double horizon;
    double g = 0.0;

    void observe(const PathStep& s) noexcept {
        if (s.t1 > horizon) return;
        if (s.x1 <= 0.0) {
            g = s.t1;
        } else if (s.x0 <= 0.0) {
            g = s.t0 + (s.t1 - s.t0) * (-s.x0) / (s.x1 - s.x0);
        }
    }
};

/// Stopping rule "stop at the first t with X_t >= level(t)", level piecewise constant on
/// [t_k, t_{k+1}) and -inf from m_theta on.
struct StoppingRule {
    std::string name;
    std::vector<double> t;       // n + 1 nodes, t.back() == m_theta
    std::vector<double> levels;  // n levels

    double median() const noexcept { return t.back(); }

    std::size_t row(double time) const noexcept {
        const std::size_t n = levels.size();
        if (time >= median()) return n;
        if (time <= 0.0) return 0;
        const double h = median() / static_cast<double>(n);
        auto k = std::min(static_cast<std::size_t>(time / h), n - 1);
        while (k > 0 && time < t[k]) --k;
        while (k + 1 < n && time >= t[k + 1]) ++k;
        return k;
    }

    double level(double time) const noexcept {
        const std::size_t k = row(time);
        return k < levels.size() ? levels[k] : -std::numeric_limits<double>::infinity();
    }
};

/// tau_D for the boundary, optionally shifted by a constant.
inline StoppingRule boundary_rule(const BoundaryGrid& boundary, double shift = 0.0, std::string name = "optimal") {
    StoppingRule r{std::move(name), boundary.t, boundary.b};
    for (double& l : r.levels) l += shift;
    return r;
}

/// Constant level on [0, m_theta).
inline StoppingRule constant_rule(const BoundaryGrid& boundary, double level, std::string name = "constant") {
    return StoppingRule{std::move(name), boundary.t, std::vector<double>(boundary.n, level)};
}

/// tau = 0.
inline StoppingRule immediate_rule(const BoundaryGrid& boundary, std::string name = "immediate") {
    return StoppingRule{std::move(name), boundary.t,
                        std::vector<double>(boundary.n, -std::numeric_limits<double>::infinity())};
}

struct PathSample {
    double e_theta;
    double g;
    std::vector<double> tau;
    std::vector<double> loss;
};

/// Per-path outputs of one simulation run, indexed by path; tau is path-major.
struct SimRun {
    SimConfig cfg;
    double horizon_cap = 0.0;
    std::vector<std::string> rule_names;
    std::vector<double> e;           // e_theta
    std::vector<double> g;           // last time at or below zero before min(e_theta, cap)
    std::vector<double> inf_grid;    // -inf over path nodes on [0, e_theta]
    std::vector<double> inf_bridge;  // -inf with the bridge minimum sampled on every piece
    std::vector<double> tau;
    std::vector<unsigned char> truncated;

    std::size_t n_paths() const noexcept { return e.size(); }
    std::size_t n_rules() const noexcept { return rule_names.size(); }
    double tau_at(std::size_t path, std::size_t rule) const { return tau[path * n_rules() + rule]; }

    PathSample path(std::size_t p) const {
        PathSample s{e[p], g[p], {}, {}};
        for (std::size_t r = 0; r < n_rules(); ++r) {
            s.tau.push_back(tau_at(p, r));
            s.loss.push_back(std::abs(g[p] - tau_at(p, r)));
        }
        return s;
    }
};

namespace detail {

inline void simulate_one(const SimConfig& cfg, std::span<const StoppingRule> rules, double cap, std::size_t p,
                         SimRun& run) {
    Engine gen = make_engine(cfg.seed, p, kSimulationSubstream);
    const double m = median_of(cfg.theta);
    boost::random::exponential_distribution<double> horizon_law(cfg.theta);
    const double e = horizon_law(gen);
    const double e_eff = std::min(e, cap);
    // rules need the path up to m_theta; g and the infimum only up to e_theta
    const double horizon = rules.empty() ? e_eff : std::max(e_eff, m);
    const double marks[2] = {std::min(e_eff, m), std::max(e_eff, m)};

    LastZero last_zero{e_eff};
    double min_grid = cfg.x0;
    double min_bridge = cfg.x0;
    const std::size_t nr = rules.size();
    double* tau = run.tau.data() + p * nr;
    std::size_t active = 0;
    for (std::size_t r = 0; r < nr; ++r) {
        if (cfg.x0 >= rules[r].level(0.0)) {
            tau[r] = 0.0;
        } else {
            tau[r] = -1.0;
            ++active;
        }
    }

    const auto visit = [&](const PathStep& s) {
        last_zero.observe(s);
        if (s.t1 <= e_eff) {
            min_grid = std::min(min_grid, s.x1);
            if (s.var > 0.0) {
                // the piece dips below the running minimum with probability exp(-expo)
                const double expo = 2.0 * (s.x0 - min_bridge) * (s.x1 - min_bridge) / s.var;
                if (expo < 50.0) {
                    const double u = 1.0 - std::generate_canonical<double, 64>(gen);
                    min_bridge = std::min(min_bridge, bridge_minimum(s.x0, s.x1, s.var, u));
                }
            } else {
                min_bridge = std::min(min_bridge, s.x1);
            }
        }
        if (active > 0 && s.t1 <= m) {
            for (std::size_t r = 0; r < nr; ++r) {
                if (tau[r] >= 0.0) continue;
                const double level = rules[r].level(s.t1);
                if (s.x1 < level) continue;
                double when = s.t1;
                if (s.var > 0.0 && s.x0 < level && rules[r].row(s.t0) == rules[r].row(s.t1))
                    when = s.t0 + (s.t1 - s.t0) * (level - s.x0) / (s.x1 - s.x0);
                tau[r] = when;
                --active;
            }
        }
        return true;
    };
    simulate_path(cfg.model, cfg.x0, cfg.dt, horizon, marks, gen, visit);

    run.e[p] = e;
    run.g[p] = last_zero.g;
    run.inf_grid[p] = -min_grid;
    run.inf_bridge[p] = -min_bridge;
    run.truncated[p] = e > cap ? 1 : 0;
}

}  // namespace detail

/// Simulates cfg.n_paths paths and evaluates every rule on each of them (common paths).
/// Path p draws from stream (seed, p) only, so results do not depend on threading.
inline SimRun simulate_rules(const SimConfig& cfg, std::span<const StoppingRule> rules) {
    validate(cfg);
    const double m = median_of(cfg.theta);
    for (const StoppingRule& r : rules) {
        if (r.levels.empty() || r.t.size() != r.levels.size() + 1)
            throw std::invalid_argument("stopping rule '" + r.name + "' has inconsistent nodes");
        if (std::abs(r.median() - m) > 1e-12 * m)
            throw std::invalid_argument("stopping rule '" + r.name + "' was built for a different theta");
    }
    SimRun run;
    run.cfg = cfg;
    run.horizon_cap = resolved_horizon_cap(cfg);
    for (const StoppingRule& r : rules) run.rule_names.push_back(r.name);
    const std::size_t n = cfg.n_paths;
    run.e.resize(n);
    run.g.resize(n);
    run.inf_grid.resize(n);
    run.inf_bridge.resize(n);
    run.truncated.resize(n);
    run.tau.resize(n * rules.size());
    parallel_for(n, [&](std::size_t p) { detail::simulate_one(cfg, rules, run.horizon_cap, p, run); }, cfg.threads);
    return run;
}

struct RuleSummary {
    std::string name;
    double mean_loss = 0.0;
    double se_loss = 0.0;
    double mean_tau = 0.0;
    double max_tau = 0.0;
    // loss_r - loss_0 on common paths
    double diff_mean = 0.0;
    double diff_se = 0.0;
    // |g - tau| - g on common paths
    double excess_mean = 0.0;
    double excess_se = 0.0;
};

struct SimReport {
    SimConfig cfg;
    std::size_t n_paths = 0;
    double horizon_cap = 0.0;
    std::size_t truncated = 0;
    double truncation_probability = 0.0;
    double mean_g = 0.0;
    double se_g = 0.0;
    double mean_e = 0.0;
    double max_g_minus_e = 0.0;
    std::vector<RuleSummary> rules;
    // distance of the law of -inf_{[0, e_theta]} X from F; bridge-sampled and node-only minima
    std::optional<double> ks_bridge;
    std::optional<double> ks_grid;
    double ks_critical = 0.0;
};

/// Reduces a run in path order. The KS entries are filled when ctx is given and x0 == 0.
inline SimReport summarize(const SimRun& run, const GainContext* ctx = nullptr) {
    SimReport rep;
    rep.cfg = run.cfg;
    rep.n_paths = run.n_paths();
    rep.horizon_cap = run.horizon_cap;
    rep.truncation_probability = std::exp(-run.cfg.theta * run.horizon_cap);
    Welford g_stat, e_stat;
    rep.max_g_minus_e = -std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < rep.n_paths; ++p) {
        g_stat.add(run.g[p]);
        e_stat.add(run.e[p]);
        rep.truncated += run.truncated[p];
        rep.max_g_minus_e = std::max(rep.max_g_minus_e, run.g[p] - run.e[p]);
    }
    rep.mean_g = g_stat.mean();
    rep.se_g = g_stat.std_error();
    rep.mean_e = e_stat.mean();

    for (std::size_t r = 0; r < run.n_rules(); ++r) {
        Welford loss, diff, excess, tau;
        RuleSummary s;
        s.name = run.rule_names[r];
        for (std::size_t p = 0; p < rep.n_paths; ++p) {
            const double l = std::abs(run.g[p] - run.tau_at(p, r));
            loss.add(l);
            diff.add(l - std::abs(run.g[p] - run.tau_at(p, 0)));
            excess.add(l - run.g[p]);
            tau.add(run.tau_at(p, r));
            s.max_tau = std::max(s.max_tau, run.tau_at(p, r));
        }
        s.mean_loss = loss.mean();
        s.se_loss = loss.std_error();
        s.mean_tau = tau.mean();
        s.diff_mean = diff.mean();
        s.diff_se = diff.std_error();
        s.excess_mean = excess.mean();
        s.excess_se = excess.std_error();
        rep.rules.push_back(s);
    }

    rep.ks_critical = ks_critical_1pct(rep.n_paths);
    if (ctx != nullptr && run.cfg.x0 == 0.0) {
        const auto cdf = [&](double x) { return ctx->scale().F(x); };
        rep.ks_bridge = ks_distance(run.inf_bridge, cdf);
        rep.ks_grid = ks_distance(run.inf_grid, cdf);
    }
    return rep;
}

inline SimReport evaluate_rules(const SimConfig& cfg, std::span<const StoppingRule> rules,
                                const GainContext* ctx = nullptr) {
    if (rules.empty()) throw std::invalid_argument("evaluate_rules needs at least one rule");
    return summarize(simulate_rules(cfg, rules), ctx);
}

}  // namespace lastpassage
