#pragma once

#include "lastpassage/boundary.hpp"
#include "lastpassage/gain.hpp"
#include "lastpassage/kernels.hpp"
#include "lastpassage/parallel.hpp"
#include "lastpassage/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

namespace lastpassage {

/// Which rows and x points to tabulate.
struct ValueGridSpec {
    std::vector<double> xs;        // ascending
    std::vector<std::size_t> rows; // boundary rows k; empty means all rows
};

/// V_h on boundary rows x an x grid. `values` is zero in the stopping region
/// x >= b_k; `raw` keeps the Riemann sum itself everywhere.
struct ValueGrid {
    BoundaryGrid boundary;
    std::vector<double> xs;
    std::vector<std::size_t> rows;
    std::vector<double> ts;
    std::vector<double> values;  // rows.size() x xs.size(), row-major
    std::vector<double> raw;
    std::vector<double> se;      // jump model: batch standard error of raw

    double at_index(std::size_t r, std::size_t j) const { return values[r * xs.size() + j]; }
    double raw_at(std::size_t r, std::size_t j) const { return raw[r * xs.size() + j]; }
    double se_at(std::size_t r, std::size_t j) const { return se.empty() ? 0.0 : se[r * xs.size() + j]; }

    /// V_h(t, xs[j]) with t mapped to its row [t_k, t_{k+1}); zero from m_theta on.
    double at(double t, std::size_t j) const {
        const std::size_t k = boundary.row(t);
        if (k >= boundary.n) return 0.0;
        const auto it = std::find(rows.begin(), rows.end(), k);
        if (it == rows.end()) throw std::out_of_range("value grid does not contain the row for this time");
        return at_index(static_cast<std::size_t>(it - rows.begin()), j);
    }
};

/// Default x grid: `points` values from -2 / r to b_0 + 1, where r is the slowest
/// decay rate of 1 - F.
inline std::vector<double> default_x_grid(const GainContext& ctx, const BoundaryGrid& boundary,
                                          std::size_t points = 200) {
    if (points < 2) throw std::invalid_argument("x grid needs at least two points");
    double rate = std::numeric_limits<double>::infinity();
    for (const ExpTerm& term : ctx.scale().tail_terms()) rate = std::min(rate, -term.rate);
    const double lo = -2.0 / rate;
    const double hi = boundary.b[0] + 1.0;
    std::vector<double> xs(points);
    for (std::size_t j = 0; j < points; ++j)
        xs[j] = lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(points - 1);
    return xs;
}

/// h sum_{i=k}^{n-1} K(t_k, x, s_{i-k+1}, b_i) for the Brownian model.
inline double riemann_value_brownian(const GainContext& ctx, const BoundaryGrid& boundary, std::size_t k, double x) {
    if (k >= boundary.n) return 0.0;
    double acc = 0.0;
    for (std::size_t i = k; i < boundary.n; ++i)
        acc += K_brownian(ctx, {boundary.t[k], x, static_cast<double>(i - k + 1) * boundary.h_step, boundary.b[i]});
    return acc * boundary.h_step;
}

/// h sum_{i=k}^{n-1} [K1 - V_i K2](t_k, x, s_{i-k+1}, b_i) for the jump model, with its batch standard error.
inline McEstimate riemann_value_jump(const McKernelTable& table, const BoundaryGrid& boundary, std::size_t k, double x) {
    if (k >= boundary.n) return {0.0, 0.0};
    const double tk = boundary.t[k];
    return table.batch_estimate([&](std::size_t j) {
        double acc = 0.0;
        for (std::size_t i = k; i < boundary.n; ++i) {
            const std::size_t la = i - k + 1;
            acc += table.k1_batch(j, la, tk, x, boundary.b[i]) - boundary.v[i] * table.k2_batch(j, la, x, boundary.b[i]);
        }
        return acc * boundary.h_step;
    });
}

namespace detail {

inline ValueGrid make_value_grid(const BoundaryGrid& boundary, const ValueGridSpec& spec) {
    if (spec.xs.empty()) throw std::invalid_argument("value grid needs x points");
    if (!std::is_sorted(spec.xs.begin(), spec.xs.end())) throw std::invalid_argument("x grid must be ascending");
    ValueGrid vg;
    vg.boundary = boundary;
    vg.xs = spec.xs;
    vg.rows = spec.rows;
    if (vg.rows.empty()) {
        for (std::size_t k = 0; k < boundary.n; ++k) vg.rows.push_back(k);
    }
    for (std::size_t k : vg.rows) {
        if (k >= boundary.n) throw std::out_of_range("value grid row outside the boundary grid");
        vg.ts.push_back(boundary.t[k]);
    }
    vg.values.assign(vg.rows.size() * vg.xs.size(), 0.0);
    vg.raw.assign(vg.values.size(), 0.0);
    return vg;
}

}  // namespace detail

inline ValueGrid value_brownian(const GainContext& ctx, const BoundaryGrid& boundary, const ValueGridSpec& spec) {
    if (boundary.model.has_jumps() || !(boundary.model == ctx.model()))
        throw std::invalid_argument("value_brownian needs a Brownian boundary built for this model");
    ValueGrid vg = detail::make_value_grid(boundary, spec);
    const std::size_t nx = vg.xs.size();
    parallel_for(vg.rows.size(), [&](std::size_t r) {
        const std::size_t k = vg.rows[r];
        for (std::size_t j = 0; j < nx; ++j) {
            const double v = riemann_value_brownian(ctx, boundary, k, vg.xs[j]);
            vg.raw[r * nx + j] = v;
            vg.values[r * nx + j] = vg.xs[j] >= boundary.b[k] ? 0.0 : v;
        }
    });
    return vg;
}

inline ValueGrid value_jump(const GainContext& ctx, const BoundaryGrid& boundary, const McKernelTable& table,
                            const ValueGridSpec& spec) {
    if (!boundary.has_jump_functional()) throw std::invalid_argument("value_jump needs a jump boundary with V_k");
    table.check_context(ctx);
    ValueGrid vg = detail::make_value_grid(boundary, spec);
    vg.se.assign(vg.values.size(), 0.0);
    const std::size_t nx = vg.xs.size();
    parallel_for(vg.rows.size(), [&](std::size_t r) {
        const std::size_t k = vg.rows[r];
        for (std::size_t j = 0; j < nx; ++j) {
            const McEstimate v = riemann_value_jump(table, boundary, k, vg.xs[j]);
            vg.raw[r * nx + j] = v.value;
            vg.se[r * nx + j] = v.std_error;
            vg.values[r * nx + j] = vg.xs[j] >= boundary.b[k] ? 0.0 : v.value;
        }
    });
    return vg;
}

/// Largest violations of the shape properties of V_h on the grid. Each entry is the
/// excess over the allowed slack (<= 0 means the property holds).
struct ValueShapeReport {
    double positive = 0.0;          // values above 0
    double below_floor = 0.0;       // values at or below -m_theta
    double decreasing_in_x = 0.0;   // V(t, x_j) - V(t, x_{j+1}) > 0
    double decreasing_in_t = 0.0;   // V(t_r, x) - V(t_{r+1}, x) > 0 on consecutive rows
    double boundary_residual = 0.0; // |raw V_h(t_k, b_k)| on listed rows
    double boundary_excess = 0.0;   // same, less h |residual_k| on degenerate Brownian steps

    bool ok() const noexcept {
        return positive <= 0.0 && below_floor <= 0.0 && decreasing_in_x <= 0.0 && decreasing_in_t <= 0.0;
    }
};

/// Checks sign and monotonicity with absolute slack plus `se_mult` standard errors
/// (jump model); the boundary residual is reported, not thresholded. A degenerate
/// Brownian step has b_k = h(t_k) with a nonzero step residual, and V_h(t_k, b_k) equals
/// h_step times that residual, so `boundary_excess` discounts it there.
inline ValueShapeReport check_value_shape(const GainContext& ctx, const ValueGrid& vg, double slack,
                                          double se_mult = 3.0, const McKernelTable* table = nullptr) {
    ValueShapeReport rep;
    const std::size_t nx = vg.xs.size();
    const double m = vg.boundary.median();
    auto worst = [](double& slot, double v) { slot = std::max(slot, v); };
    rep.positive = rep.below_floor = rep.decreasing_in_x = rep.decreasing_in_t = -std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < vg.rows.size(); ++r) {
        for (std::size_t j = 0; j < nx; ++j) {
            const double v = vg.at_index(r, j);
            const double s = se_mult * vg.se_at(r, j);
            worst(rep.positive, v - slack - s);
            worst(rep.below_floor, -m - v);
            if (j + 1 < nx) {
                const double s2 = se_mult * std::hypot(vg.se_at(r, j), vg.se_at(r, j + 1));
                worst(rep.decreasing_in_x, v - vg.at_index(r, j + 1) - slack - s2);
            }
            if (r + 1 < vg.rows.size() && vg.rows[r + 1] == vg.rows[r] + 1) {
                const double s2 = se_mult * std::hypot(vg.se_at(r, j), vg.se_at(r + 1, j));
                worst(rep.decreasing_in_t, v - vg.at_index(r + 1, j) - slack - s2);
            }
        }
        const std::size_t k = vg.rows[r];
        const double at_b = table ? riemann_value_jump(*table, vg.boundary, k, vg.boundary.b[k]).value
                                  : riemann_value_brownian(ctx, vg.boundary, k, vg.boundary.b[k]);
        rep.boundary_residual = std::max(rep.boundary_residual, std::abs(at_b));
        const bool degenerate = !table && k < vg.boundary.degenerate.size() && vg.boundary.degenerate[k];
        const double allowed = degenerate ? vg.boundary.h_step * std::abs(vg.boundary.residual[k]) : 0.0;
        rep.boundary_excess = std::max(rep.boundary_excess, std::abs(at_b) - allowed);
    }
    return rep;
}

/// Lipschitz constant in x: 2 M exp(Phi(theta) b(0)), M = 1 / psi'(Phi(theta)).
inline double lipschitz_bound(const GainContext& ctx, const BoundaryGrid& boundary) {
    const double phi = ctx.scale().phi();
    return 2.0 / ctx.model().psi_prime(phi) * std::exp(phi * boundary.b[0]);
}

struct ExpectedG {
    double mean = 0.0;
    double std_error = 0.0;
};

/// Monte Carlo estimate of E(g_theta) for the model in cfg (cfg.theta is used).
inline ExpectedG expected_g(const LevyModel& model, double theta, SimConfig cfg) {
    cfg.model = model;
    cfg.theta = theta;
    const SimRun run = simulate_rules(cfg, {});
    const SimReport rep = summarize(run);
    return {rep.mean_g, rep.se_g};
}

struct PredictionValue {
    double value = 0.0;
    double std_error = 0.0;
};

/// V_* = V_h(0, 0) + E(g_theta). `v00_se` is the standard error of V_h(0, 0) (zero for Brownian).
inline PredictionValue optimal_prediction_value(double v00, double v00_se, const ExpectedG& eg) {
    return {v00 + eg.mean, std::hypot(v00_se, eg.std_error)};
}

/// V_* from a value grid containing t = 0 and x = 0.
inline PredictionValue optimal_prediction_value(const ValueGrid& vg, const ExpectedG& eg) {
    const auto it = std::find(vg.xs.begin(), vg.xs.end(), 0.0);
    if (vg.rows.empty() || vg.rows.front() != 0 || it == vg.xs.end())
        throw std::invalid_argument("value grid does not contain (0, 0)");
    const auto j = static_cast<std::size_t>(it - vg.xs.begin());
    return optimal_prediction_value(vg.at_index(0, j), vg.se_at(0, j), eg);
}

}  // namespace lastpassage
