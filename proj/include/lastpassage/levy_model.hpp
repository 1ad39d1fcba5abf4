#pragma once

#include "lastpassage/error.hpp"
#include "lastpassage/roots.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

namespace lastpassage {

enum class ModelKind { BrownianWithDrift, JumpDiffusion };

enum class VariationClass { FiniteVariation, InfiniteVariation };

inline std::string to_string(ModelKind kind) {
    return kind == ModelKind::BrownianWithDrift ? "brownian" : "jump_diffusion";
}

/// Spectrally negative Levy process from one of the supported families.
///
///  - BrownianWithDrift: X_t = mu t + sigma B_t
///  - JumpDiffusion:     X_t = sigma B_t + mu t - sum_{i <= N_t} Y_i,
///                       N Poisson(lambda), Y_i ~ Exp(rho)
///
/// Immutable; construction validates the parameters.
class LevyModel {
public:
    static LevyModel brownian(double mu, double sigma) {
        return LevyModel(ModelKind::BrownianWithDrift, mu, sigma, 0.0, 0.0);
    }

    static LevyModel jump_diffusion(double mu, double sigma, double lambda, double rho) {
        return LevyModel(ModelKind::JumpDiffusion, mu, sigma, lambda, rho);
    }

    ModelKind kind() const noexcept { return kind_; }
    bool has_jumps() const noexcept { return kind_ == ModelKind::JumpDiffusion; }
    double mu() const noexcept { return mu_; }
    double sigma() const noexcept { return sigma_; }
    double lambda() const noexcept { return lambda_; }
    double rho() const noexcept { return rho_; }

    double psi(double beta) const {
        const double diffusive = 0.5 * sigma_ * sigma_ * beta * beta + mu_ * beta;
        if (!has_jumps()) return diffusive;
        if (beta + rho_ == 0.0) throw DomainError("psi has a pole at beta = -rho");
        return diffusive - lambda_ * beta / (rho_ + beta);
    }

    double psi_prime(double beta) const {
        const double diffusive = sigma_ * sigma_ * beta + mu_;
        if (!has_jumps()) return diffusive;
        if (beta + rho_ == 0.0) throw DomainError("psi has a pole at beta = -rho");
        const double gap = rho_ + beta;
        return diffusive - lambda_ * rho_ / (gap * gap);
    }

    // psi and psi' at beta = -rho + gap, evaluated without forming beta first;
    // keeps full relative accuracy for roots sitting next to the pole.
    double psi_at_gap(double gap) const {
        const double beta = gap - rho_;
        // -lambda beta / gap = -lambda + lambda rho / gap
        return 0.5 * sigma_ * sigma_ * beta * beta + mu_ * beta - lambda_ + lambda_ * rho_ / gap;
    }

    double psi_prime_at_gap(double gap) const {
        const double beta = gap - rho_;
        return sigma_ * sigma_ * beta + mu_ - lambda_ * rho_ / (gap * gap);
    }

    /// E[X_1] = psi'(0+).
    double mean_rate() const noexcept { return mu_ - (has_jumps() ? lambda_ / rho_ : 0.0); }

    /// Var[X_1].
    double variance_rate() const noexcept {
        return sigma_ * sigma_ + (has_jumps() ? 2.0 * lambda_ / (rho_ * rho_) : 0.0);
    }

    /// Pi((-inf, -y)) for y > 0; zero for the continuous model.
    double jump_tail(double y) const noexcept {
        return has_jumps() ? lambda_ * std::exp(-rho_ * y) : 0.0;
    }

    std::string describe() const {
        std::ostringstream os;
        os.precision(12);
        os << "kind=" << to_string(kind_) << " mu=" << mu_ << " sigma=" << sigma_;
        if (has_jumps()) os << " lambda=" << lambda_ << " rho=" << rho_;
        return os.str();
    }

    friend bool operator==(const LevyModel&, const LevyModel&) = default;

private:
    LevyModel(ModelKind kind, double mu, double sigma, double lambda, double rho)
        : kind_(kind), mu_(mu), sigma_(sigma), lambda_(lambda), rho_(rho) {
        if (!std::isfinite(mu)) throw std::invalid_argument("mu must be finite");
        if (!(sigma > 0.0) || !std::isfinite(sigma))
            throw std::invalid_argument("sigma must be > 0 (finite-variation models are not supported)");
        if (kind == ModelKind::JumpDiffusion) {
            if (!(lambda > 0.0) || !std::isfinite(lambda))
                throw std::invalid_argument("lambda must be > 0");
            if (!(rho > 0.0) || !std::isfinite(rho)) throw std::invalid_argument("rho must be > 0");
        }
    }

    ModelKind kind_;
    double mu_;
    double sigma_;
    double lambda_;
    double rho_;
};

/// The three real solutions of psi(beta) = q for the jump model,
/// zeta2 < -rho < zeta1 < 0 < phi. The gaps are the roots measured from the
/// pole, zetaK_gap = zetaK + rho, carried separately for accuracy.
struct RootSet {
    double phi = 0.0;
    double zeta1 = 0.0;
    double zeta2 = 0.0;
    double zeta1_gap = 0.0;
    double zeta2_gap = 0.0;
};

inline double laplace_exponent(const LevyModel& model, double beta) { return model.psi(beta); }

inline VariationClass variation_class(const LevyModel& model) {
    // Both supported families carry a Gaussian part.
    return model.sigma() > 0.0 ? VariationClass::InfiniteVariation : VariationClass::FiniteVariation;
}

/// Right inverse Phi(q) = sup{beta >= 0 : psi(beta) = q}.
inline double phi_inverse(const LevyModel& model, double q) {
    if (!(q >= 0.0)) throw DomainError("phi_inverse requires q >= 0");
    const double s2 = model.sigma() * model.sigma();
    if (!model.has_jumps()) {
        const double disc = std::sqrt(model.mu() * model.mu() + 2.0 * s2 * q);
        // rationalised form avoids cancellation when mu > 0
        if (model.mu() > 0.0) return 2.0 * q / (disc + model.mu());
        return (disc - model.mu()) / s2;
    }

    const auto f = [&](double b) { return model.psi(b) - q; };
    const auto df = [&](double b) { return model.psi_prime(b); };

    double lo = 0.0;
    if (q == 0.0) {
        if (model.mean_rate() >= 0.0) return 0.0;
    }
    double hi = 1.0;
    int doublings = 0;
    while (f(hi) <= 0.0) {
        hi *= 2.0;
        if (++doublings > 1100) throw NumericError("phi_inverse: could not bracket root");
    }
    if (q == 0.0) {
        // psi < 0 just right of zero; walk down until we land inside (0, Phi(0))
        lo = hi;
        while (f(lo) >= 0.0) {
            lo *= 0.5;
            if (lo < 1e-300) throw NumericError("phi_inverse: could not bracket Phi(0)");
        }
    }
    const RootResult r = newton_bisect(f, df, lo, hi, 0.5 * (lo + hi));
    if (!r.converged && std::abs(r.residual) > 1e-10)
        throw NumericError("phi_inverse: residual " + std::to_string(r.residual));
    return r.x;
}

namespace detail {

// Real roots of a3 x^3 + a2 x^2 + a1 x + a0 when all three are real,
// ascending. Trigonometric form; throws if the cubic is not three-real-root.
inline std::array<double, 3> real_cubic_roots(double a3, double a2, double a1, double a0) {
    const double A = a2 / a3;
    const double B = a1 / a3;
    const double C = a0 / a3;
    const double p = B - A * A / 3.0;
    const double qd = 2.0 * A * A * A / 27.0 - A * B / 3.0 + C;
    if (!(p < 0.0)) throw NumericError("cubic does not have three distinct real roots (p >= 0)");
    const double m = 2.0 * std::sqrt(-p / 3.0);
    double arg = 3.0 * qd / (p * m);
    if (std::abs(arg) > 1.0 + 1e-12) throw NumericError("cubic does not have three real roots");
    arg = std::clamp(arg, -1.0, 1.0);
    const double phase = std::acos(arg) / 3.0;
    std::array<double, 3> r{};
    for (int k = 0; k < 3; ++k) {
        r[k] = m * std::cos(phase - 2.0 * std::numbers::pi * k / 3.0) - A / 3.0;
    }
    std::sort(r.begin(), r.end());
    return r;
}

inline double polish_cubic_root(double a3, double a2, double a1, double a0, double x) {
    for (int it = 0; it < 8; ++it) {
        const double v = ((a3 * x + a2) * x + a1) * x + a0;
        const double d = (3.0 * a3 * x + 2.0 * a2) * x + a1;
        if (d == 0.0) break;
        const double next = x - v / d;
        if (next == x) break;
        x = next;
    }
    return x;
}

}  // namespace detail

/// All three real roots of psi(beta) = q for the jump-diffusion model.
inline RootSet psi_roots(const LevyModel& model, double q) {
    if (!model.has_jumps()) throw UnsupportedModelError("psi_roots is defined for the jump-diffusion model");
    if (!(q > 0.0)) throw DomainError("psi_roots requires q > 0");

    const double s2 = model.sigma() * model.sigma();
    const double rho = model.rho();
    const double lambda = model.lambda();
    const double mu = model.mu();

    // Clear the denominator with beta = gap - rho:
    //   (c2 g^2 + c1 g + c0) g - lambda (g - rho) = 0
    const double c2 = 0.5 * s2;
    const double c1 = mu - s2 * rho;
    const double c0 = 0.5 * s2 * rho * rho - mu * rho - q;
    const double a3 = c2, a2 = c1, a1 = c0 - lambda, a0 = lambda * rho;

    auto gaps = detail::real_cubic_roots(a3, a2, a1, a0);
    for (double& g : gaps) g = detail::polish_cubic_root(a3, a2, a1, a0, g);
    std::sort(gaps.begin(), gaps.end());

    RootSet roots;
    roots.zeta2_gap = gaps[0];
    roots.zeta1_gap = gaps[1];
    roots.zeta2 = gaps[0] - rho;
    roots.zeta1 = gaps[1] - rho;
    roots.phi = phi_inverse(model, q);

    const double cubic_phi = gaps[2] - rho;
    const bool ordered = roots.zeta2_gap < 0.0 && roots.zeta1_gap > 0.0 && roots.zeta1 < 0.0 && roots.phi > 0.0;
    if (!ordered || std::abs(cubic_phi - roots.phi) > 1e-8 * std::max(1.0, roots.phi)) {
        std::ostringstream os;
        os.precision(17);
        os << "psi_roots: root ordering violated for " << model.describe() << " q=" << q << ": zeta2=" << roots.zeta2
           << " zeta1=" << roots.zeta1 << " phi=" << roots.phi << " (cubic phi=" << cubic_phi << ")";
        throw NumericError(os.str());
    }
    return roots;
}

}  // namespace lastpassage
