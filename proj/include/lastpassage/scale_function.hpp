#pragma once

#include "lastpassage/error.hpp"
#include "lastpassage/levy_model.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <sstream>
#include <vector>

namespace lastpassage {

/// One exponential mode c * exp(rate * x).
struct ExpTerm {
    double rate = 0.0;
    double coeff = 0.0;
};

/// Closed-form q-scale functions for the supported models.
///
/// For both families 1/(psi(beta) - q) has simple poles at the real roots
/// beta_r of psi = q, so on x >= 0
///
///   W(x) = sum_r exp(beta_r x) / psi'(beta_r)
///   Z(x) = 1 + q sum_r (exp(beta_r x) - 1) / (beta_r psi'(beta_r))
///
/// and F(x) = (q/Phi) W(x) - Z(x) + 1 collapses to 1 + sum_{beta_r < 0} c_r exp(beta_r x)
/// because the exp(Phi x) coefficients cancel exactly and sum_r 1/(beta_r psi'(beta_r)) = 1/q.
class ScaleContext {
public:
    ScaleContext(const LevyModel& model, double q) : model_(model), q_(q) {
        if (!(q > 0.0) || !std::isfinite(q)) throw DomainError("scale functions require q > 0");
        if (model.has_jumps()) {
            const RootSet roots = psi_roots(model, q);
            phi_ = roots.phi;
            roots_ = roots;
            modes_.push_back({roots.phi, model.psi_prime(roots.phi)});
            modes_.push_back({roots.zeta1, model.psi_prime_at_gap(roots.zeta1_gap)});
            modes_.push_back({roots.zeta2, model.psi_prime_at_gap(roots.zeta2_gap)});
        } else {
            const double s2 = model.sigma() * model.sigma();
            const double disc = std::sqrt(model.mu() * model.mu() + 2.0 * s2 * q);
            phi_ = phi_inverse(model, q);
            const double xi = -(disc + model.mu()) / s2;
            modes_.push_back({phi_, disc});
            modes_.push_back({xi, -disc});
        }
        if (!(modes_.front().coeff > 0.0)) {
            std::ostringstream os;
            os << "psi'(Phi(q)) must be positive, got " << modes_.front().coeff;
            throw InvariantError(os.str());
        }
        for (const ExpTerm& m : modes_) {
            if (m.rate < 0.0) tail_.push_back({m.rate, q_ * (1.0 / phi_ - 1.0 / m.rate) / m.coeff});
        }
    }

    const LevyModel& model() const noexcept { return model_; }
    double q() const noexcept { return q_; }
    double phi() const noexcept { return phi_; }

    /// Jump model only: the roots used by the three-term formulas.
    const RootSet& roots() const noexcept { return roots_; }

    /// (root, psi'(root)) pairs, Phi(q) first.
    std::span<const ExpTerm> modes() const noexcept { return modes_; }

    /// Negative-rate modes of F: F(x) = 1 + sum c_r exp(rate_r x) on x >= 0.
    std::span<const ExpTerm> tail_terms() const noexcept { return tail_; }

    double W(double x) const {
        if (x < 0.0) return 0.0;
        double acc = 0.0;
        for (const ExpTerm& m : modes_) acc += std::exp(m.rate * x) / m.coeff;
        return acc;
    }

    double Z(double x) const {
        if (x <= 0.0) return 1.0;
        double acc = 0.0;
        for (const ExpTerm& m : modes_) acc += std::expm1(m.rate * x) / (m.rate * m.coeff);
        return 1.0 + q_ * acc;
    }

    /// F(x) = P_x(inf_{[0, e_q]} X >= 0), the law of -inf X at an independent Exp(q) time.
    double F(double x) const {
        if (x < 0.0) return 0.0;
        double v = 1.0;
        for (const ExpTerm& t : tail_) v += t.coeff * std::exp(t.rate * x);
        return checked_probability(v, x);
    }

    /// Same quantity assembled literally as (q/Phi) W - Z + 1. Loses precision
    /// once exp(Phi x) is large; kept as an independent route for checks.
    double F_from_scale(double x) const {
        if (x < 0.0) return 0.0;
        return checked_probability(q_ / phi_ * W(x) - Z(x) + 1.0, x);
    }

private:
    static double checked_probability(double v, double x) {
        constexpr double slack = 1e-10;
        if (v < -slack || v > 1.0 + slack || std::isnan(v)) {
            std::ostringstream os;
            os.precision(17);
            os << "F(" << x << ") = " << v << " outside [0, 1]";
            throw InvariantError(os.str());
        }
        return std::clamp(v, 0.0, 1.0);
    }

    LevyModel model_;
    double q_;
    double phi_ = 0.0;
    RootSet roots_{};
    std::vector<ExpTerm> modes_;
    std::vector<ExpTerm> tail_;
};

inline double scale_W(const ScaleContext& ctx, double x) { return ctx.W(x); }
inline double scale_Z(const ScaleContext& ctx, double x) { return ctx.Z(x); }
inline double F_theta(const ScaleContext& ctx, double x) { return ctx.F(x); }

}  // namespace lastpassage
