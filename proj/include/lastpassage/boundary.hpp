#pragma once

#include "lastpassage/error.hpp"
#include "lastpassage/gain.hpp"
#include "lastpassage/kernels.hpp"

#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace lastpassage {

struct SolverSettings {
    double root_tolerance = kRootTolerance;
    // Brownian step equations must be met to this absolute residual.
    double residual_tolerance = 1e-8;
    double initial_expansion = 0.01;
    std::size_t max_expansions = 50;
    double h0 = 0.05;
    // Jump model: repeat the solve on every kernel batch to get standard errors of b_k.
    bool batch_errors = false;
};

/// Discretised stopping boundary on t_k = k m_theta / n.
struct BoundaryGrid {
    LevyModel model = LevyModel::brownian(0.0, 1.0);
    double theta = 0.0;
    std::size_t n = 0;
    double h_step = 0.0;
    std::vector<double> t;         // n + 1 times, t.back() == m_theta
    std::vector<double> b;         // n boundary levels
    std::vector<double> v;         // n jump functionals (jump model only)
    std::vector<double> residual;  // per-step equation residual
    std::vector<double> residual_se;  // jump model: batch standard error of the residual
    std::vector<double> v_se;         // jump model: batch standard error of V_k at b_k
    std::vector<double> b_se;         // jump model with batch_errors: standard error of b_k
    std::vector<bool> degenerate;  // step equation had no root above h(t_k); b_k = h(t_k)
    std::vector<bool> certified;
    std::vector<std::pair<std::string, std::string>> provenance;

    bool has_jump_functional() const noexcept { return !v.empty(); }
    double median() const noexcept { return t.empty() ? 0.0 : t.back(); }

    bool all_certified() const {
        return std::all_of(certified.begin(), certified.end(), [](bool c) { return c; });
    }

    /// Step interpolation b(t) = b_k on [t_k, t_{k+1}); -inf from m_theta on (always stop).
    double at(double time) const {
        if (time >= median()) return -std::numeric_limits<double>::infinity();
        if (time < 0.0) time = 0.0;
        auto k = static_cast<std::size_t>(time / h_step);
        if (k >= n) k = n - 1;
        // guard against t_k round-off putting time just below t_k
        while (k > 0 && time < t[k]) --k;
        while (k + 1 < n && time >= t[k + 1]) ++k;
        return b[k];
    }

    /// Row index k with time in [t_k, t_{k+1}); n when time >= m_theta.
    std::size_t row(double time) const {
        if (time >= median()) return n;
        if (time <= 0.0) return 0;
        auto k = std::min(static_cast<std::size_t>(time / h_step), n - 1);
        while (k > 0 && time < t[k]) --k;
        while (k + 1 < n && time >= t[k + 1]) ++k;
        return k;
    }
};

namespace detail {

inline BoundaryGrid make_grid(const GainContext& ctx, std::size_t n) {
    if (n < 2) throw std::invalid_argument("boundary grid needs n >= 2");
    BoundaryGrid g;
    g.model = ctx.model();
    g.theta = ctx.theta();
    g.n = n;
    g.h_step = ctx.median() / static_cast<double>(n);
    g.t.resize(n + 1);
    for (std::size_t k = 0; k <= n; ++k) g.t[k] = static_cast<double>(k) * g.h_step;
    g.t[n] = ctx.median();
    g.b.assign(n, 0.0);
    g.residual.assign(n, 0.0);
    g.degenerate.assign(n, false);
    g.certified.assign(n, true);
    return g;
}

inline std::string fmt12(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

inline void check_monotone(const BoundaryGrid& g, double slack) {
    for (std::size_t k = 0; k + 1 < g.n; ++k) {
        if (g.b[k] < g.b[k + 1] - slack) {
            std::ostringstream os;
            os.precision(15);
            os << "boundary increases between k=" << k << " (" << g.b[k] << ") and k=" << k + 1 << " ("
               << g.b[k + 1] << ")";
            throw InvariantError(os.str());
        }
    }
}

// First sign change of f above lo, searching [lo, start + d 2^j] for j < cap.
// Returns the bracket (a, b) with f(a) < 0 < f(b), or nullopt.
template <typename F>
std::optional<std::pair<double, double>> expand_bracket(F&& f, double lo, double start, double d,
                                                        std::size_t cap) {
    double a = lo;
    for (std::size_t j = 0; j < cap; ++j) {
        const double hi = std::max(start, lo) + d;
        const double fh = f(hi);
        if (fh > 0.0) return std::make_pair(a, hi);
        if (fh == 0.0) return std::make_pair(hi, hi);
        a = hi;
        d *= 2.0;
    }
    return std::nullopt;
}

}  // namespace detail

/// Backward induction for the Brownian-with-drift boundary. Step k solves
///   sum_{i=k}^{n-1} K(t_k, b_k, t_{i-k+1}, b_i) = 0
/// for b_k (the i = k term uses b_k as its own boundary) with the bracket
/// starting at h(t_k). When the sum is already nonnegative at h(t_k) the step is
/// degenerate and b_k = h(t_k).
inline BoundaryGrid solve_boundary_brownian(const GainContext& ctx, std::size_t n, const SolverSettings& settings = {}) {
    if (ctx.model().has_jumps()) throw UnsupportedModelError("solve_boundary_brownian requires a Brownian model");
    BoundaryGrid g = detail::make_grid(ctx, n);
    const double h = g.h_step;

    for (std::size_t k = n; k-- > 0;) {
        const double tk = g.t[k];
        const auto step_sum = [&](double x) {
            double acc = K_brownian(ctx, {tk, x, h, x});
            for (std::size_t i = k + 1; i < n; ++i)
                acc += K_brownian(ctx, {tk, x, static_cast<double>(i - k + 1) * h, g.b[i]});
            return acc;
        };

        const double lo = ctx.h(tk);
        const double f_lo = step_sum(lo);
        if (f_lo >= 0.0) {
            g.b[k] = lo;
            g.residual[k] = f_lo;
            g.degenerate[k] = true;
            continue;
        }
        const double start = k + 1 < n ? g.b[k + 1] : lo;
        const auto bracket =
            detail::expand_bracket(step_sum, lo, start, settings.initial_expansion, settings.max_expansions);
        if (!bracket) throw SolverError(k, "no sign change of the step equation after bracket expansion");

        double root = bracket->first;
        if (bracket->first != bracket->second) {
            std::uintmax_t iters = kMaxRootIterations;
            const auto r = boost::math::tools::toms748_solve(
                step_sum, bracket->first, bracket->second,
                [&](double a, double b) { return std::abs(b - a) <= settings.root_tolerance; }, iters);
            root = 0.5 * (r.first + r.second);
        }
        g.b[k] = root;
        g.residual[k] = step_sum(root);
        g.certified[k] = std::abs(g.residual[k]) <= settings.residual_tolerance;
    }

    detail::check_monotone(g, 2.0 * settings.root_tolerance);
    g.provenance = {{"solver", "backward_induction_brownian"},
                    {"model", ctx.model().describe()},
                    {"theta", detail::fmt12(ctx.theta())},
                    {"median", detail::fmt12(ctx.median())},
                    {"n", std::to_string(n)},
                    {"root_tolerance", detail::fmt12(settings.root_tolerance)}};
    return g;
}

namespace detail {

// Step equations of the jump model at step k for a trial b_k, using either the full
// kernel table (batch == nullopt) or one batch of it.
class JumpStep {
public:
    JumpStep(const McKernelTable& table, const BoundaryGrid& g, std::size_t k, double h0,
             std::optional<std::size_t> batch)
        : table_(table), g_(g), k_(k), h0_(h0), batch_(batch) {}

    struct Value {
        double residual;  // second equation after eliminating V_k with the first
        double v;         // V_k solving the first equation
    };

    Value operator()(double bk) const {
        const double tk = g_.t[k_];
        const double x1 = bk;
        const double x2 = bk + h0_;
        double a1 = k1(1, tk, x1, bk);
        double a2 = k1(1, tk, x2, bk);
        for (std::size_t i = k_ + 1; i < g_.n; ++i) {
            const std::size_t la = i - k_ + 1;
            a1 += k1(la, tk, x1, g_.b[i]) - g_.v[i] * k2(la, x1, g_.b[i]);
            a2 += k1(la, tk, x2, g_.b[i]) - g_.v[i] * k2(la, x2, g_.b[i]);
        }
        const double d1 = k2(1, x1, bk);
        const double d2 = k2(1, x2, bk);
        if (!(d1 > 0.0)) throw SolverError(k_, "K2 vanished on the boundary; kernel table too small");
        const double vk = a1 / d1;
        return {a2 - vk * d2, vk};
    }

private:
    double k1(std::size_t la, double t, double x, double b) const {
        return batch_ ? table_.k1_batch(*batch_, la, t, x, b) : table_.k1(la, t, x, b);
    }
    double k2(std::size_t la, double x, double b) const {
        return batch_ ? table_.k2_batch(*batch_, la, x, b) : table_.k2(la, x, b);
    }

    const McKernelTable& table_;
    const BoundaryGrid& g_;
    std::size_t k_;
    double h0_;
    std::optional<std::size_t> batch_;
};

// Backward induction for the jump model on the full table or on one batch.
inline void jump_backward_induction(const GainContext& ctx, const McKernelTable& table, BoundaryGrid& g,
                                    const SolverSettings& settings, std::optional<std::size_t> batch) {
    const std::size_t n = g.n;
    for (std::size_t k = n; k-- > 0;) {
        const JumpStep step(table, g, k, settings.h0, batch);
        const double lo = ctx.h(g.t[k]);

        // Scan upward from h(t_k) for the first sign change of the eliminated equation.
        double a = lo;
        auto fa = step(a);
        std::optional<std::pair<double, double>> bracket;
        if (fa.residual != 0.0) {
            double d = settings.initial_expansion;
            for (std::size_t j = 0; j < settings.max_expansions; ++j) {
                const double bnext = lo + d;
                const auto fb = step(bnext);
                if (fb.residual == 0.0 || std::signbit(fb.residual) != std::signbit(fa.residual)) {
                    bracket = std::make_pair(a, bnext);
                    break;
                }
                a = bnext;
                fa = fb;
                d *= 1.3;
            }
        } else {
            bracket = std::make_pair(lo, lo);
        }

        if (!bracket) {
            g.b[k] = lo;
            const auto at = step(lo);
            g.v[k] = at.v;
            g.residual[k] = at.residual;
            g.degenerate[k] = true;
            continue;
        }

        // Kernels are step functions of b (finite sample): bisect on sign.
        double left = bracket->first;
        double right = bracket->second;
        const bool left_sign = std::signbit(step(left).residual);
        for (std::size_t it = 0; it < static_cast<std::size_t>(kMaxRootIterations) &&
                                 right - left > settings.root_tolerance * std::max(1.0, right);
             ++it) {
            const double mid = 0.5 * (left + right);
            const auto fm = step(mid);
            if (fm.residual == 0.0) {
                left = right = mid;
                break;
            }
            if (std::signbit(fm.residual) == left_sign) left = mid; else right = mid;
        }
        const double root = 0.5 * (left + right);
        const auto at = step(root);
        g.b[k] = root;
        g.v[k] = at.v;
        g.residual[k] = at.residual;
    }
}

}  // namespace detail

/// Backward induction for the jump-diffusion boundary and jump functional. Step k solves
///   sum_i [K1(t_k, b_k, s_{i-k+1}, b_i) - V_i K2(t_k, b_k, s_{i-k+1}, b_i)] = 0
///   sum_i [K1(t_k, b_k + h0, s_{i-k+1}, b_i) - V_i K2(t_k, b_k + h0, s_{i-k+1}, b_i)] = 0
/// for (b_k, V_k). The first equation is linear in V_k, so V_k is eliminated and the
/// second is solved for b_k by scanning up from h(t_k) and bisecting the first sign change.
/// Steps whose V_k leaves [-G(t_k, b_k), 0] are flagged as not certified.
inline BoundaryGrid solve_boundary_jump(const GainContext& ctx, const McKernelTable& table, std::size_t n,
                                        const SolverSettings& settings = {}) {
    if (!ctx.model().has_jumps()) throw UnsupportedModelError("solve_boundary_jump requires the jump model");
    if (!(settings.h0 > 0.0)) throw std::invalid_argument("h0 must be positive");
    table.check_context(ctx);
    BoundaryGrid g = detail::make_grid(ctx, n);
    if (std::abs(table.step() - g.h_step) > 1e-12 * g.h_step || table.lookaheads() < n)
        throw std::invalid_argument("kernel table grid does not match the boundary grid");
    g.v.assign(n, 0.0);

    detail::jump_backward_induction(ctx, table, g, settings, std::nullopt);

    // batch standard errors of the residual and of V_k at the solution
    g.residual_se.assign(n, 0.0);
    g.v_se.assign(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        std::vector<detail::JumpStep::Value> per_batch;
        for (std::size_t j = 0; j < table.batches(); ++j)
            per_batch.push_back(detail::JumpStep(table, g, k, settings.h0, j)(g.b[k]));
        g.residual_se[k] = table.batch_estimate([&](std::size_t j) { return per_batch[j].residual; }).std_error;
        g.v_se[k] = table.batch_estimate([&](std::size_t j) { return per_batch[j].v; }).std_error;
    }

    if (settings.batch_errors) {
        const std::size_t nb = table.batches();
        std::vector<std::vector<double>> per_batch(nb);
        for (std::size_t j = 0; j < nb; ++j) {
            BoundaryGrid gj = detail::make_grid(ctx, n);
            gj.v.assign(n, 0.0);
            detail::jump_backward_induction(ctx, table, gj, settings, j);
            per_batch[j] = gj.b;
        }
        g.b_se.assign(n, 0.0);
        for (std::size_t k = 0; k < n; ++k) {
            double s = 0.0, s2 = 0.0;
            for (std::size_t j = 0; j < nb; ++j) {
                s += per_batch[j][k];
                s2 += per_batch[j][k] * per_batch[j][k];
            }
            const double mean = s / static_cast<double>(nb);
            const double var = std::max(0.0, (s2 - nb * mean * mean) / static_cast<double>(nb - 1));
            g.b_se[k] = std::sqrt(var / static_cast<double>(nb));
        }
    }

    const double tol = settings.root_tolerance;
    for (std::size_t k = 0; k < n; ++k) {
        const double gain = ctx.G(g.t[k], g.b[k]);
        const double v_slack = 3.0 * g.v_se[k] + tol;
        const bool v_ok = g.v[k] <= v_slack && g.v[k] >= -gain - v_slack;
        const bool above_h = g.b[k] >= ctx.h(g.t[k]) - tol;
        const bool solved = g.degenerate[k] || std::abs(g.residual[k]) <= 3.0 * g.residual_se[k] + tol;
        const bool monotone = k + 1 >= n || g.b[k] >= g.b[k + 1] - 2.0 * tol;
        g.certified[k] = v_ok && above_h && solved && monotone;
    }

    g.provenance = {{"solver", "backward_induction_jump"},
                    {"model", ctx.model().describe()},
                    {"theta", detail::fmt12(ctx.theta())},
                    {"median", detail::fmt12(ctx.median())},
                    {"n", std::to_string(n)},
                    {"h0", detail::fmt12(settings.h0)},
                    {"root_tolerance", detail::fmt12(settings.root_tolerance)},
                    {"kernel_paths", std::to_string(table.n_paths())},
                    {"kernel_batches", std::to_string(table.batches())},
                    {"kernel_seed", std::to_string(table.seed())}};
    return g;
}

}  // namespace lastpassage
