#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <string>

#include "qdw/model.hpp"
#include "qdw/specfun.hpp"

namespace qdw::classical {

/// Classical turning points at energy E.  Below the barrier (V_min < E < 0)
/// the orbit librates in one well between inner and outer; above (E > 0) it
/// spans [-outer, outer] and inner is absent.
struct TurningPoints {
    std::optional<double> inner;
    double outer = 0.0;
    double energy = 0.0;
};

enum class PeriodBranch { below_critical, above_critical };

struct PeriodSample {
    double energy = 0.0;
    double period = 0.0;
    PeriodBranch branch = PeriodBranch::below_critical;
};

namespace detail {

inline void require_classical(double energy, const PotentialParams& p) {
    validate(p);
    const double v_min = -p.a * p.a / (4.0 * p.b);
    if (energy == 0.0)
        throw separatrix_error("classical: E = 0 is the separatrix (infinite period)");
    if (!(energy > v_min))
        throw std::domain_error("classical: no classical motion below the well bottom (E=" +
                                std::to_string(energy) + " <= V_min=" + std::to_string(v_min) + ")");
}

/// sqrt(1 + 4bE/a^2); in (0,1) below the barrier, > 1 above.
inline double discriminant_root(double energy, const PotentialParams& p) {
    return std::sqrt(1.0 + 4.0 * p.b * energy / (p.a * p.a));
}

/// inner^2 in the cancellation-free form -2E/((-a)(1+s)); negative for E > 0.
inline double inner_squared(double energy, const PotentialParams& p) {
    return -2.0 * energy / ((-p.a) * (1.0 + discriminant_root(energy, p)));
}

}  // namespace detail

/// Closed-form roots of V(x) = E:  x^2 = (-a)(1 -+ s)/(2b), s = sqrt(1+4bE/a^2).
inline TurningPoints turning_points(double energy, const PotentialParams& p) {
    detail::require_classical(energy, p);
    const double s = detail::discriminant_root(energy, p);
    TurningPoints tp;
    tp.energy = energy;
    tp.outer = std::sqrt((-p.a) * (1.0 + s) / (2.0 * p.b));
    if (energy < 0.0) tp.inner = std::sqrt(detail::inner_squared(energy, p));
    return tp;
}

/// Oscillation period from the turning-point-factored quadrature
///   T = sqrt(2/b) Int dx / sqrt((x-x1)(x2-x)(x+x1)(x+x2)),
/// over [x1,x2] below the barrier (single well) and [-x2,x2] above.
inline double period_quadrature(double energy, const PotentialParams& p) {
    const TurningPoints tp = turning_points(energy, p);
    const double pref = std::sqrt(2.0 / p.b);
    if (energy < 0.0) {
        const double x1 = *tp.inner, x2 = tp.outer;
        return specfun::integrate_inverse_sqrt(
            [&](double x) { return pref / std::sqrt((x + x1) * (x + x2)); }, x1, x2);
    }
    const double q = -detail::inner_squared(energy, p);  // > 0 above the barrier
    return specfun::integrate_inverse_sqrt(
        [&](double x) { return pref / std::sqrt(x * x + q); }, -tp.outer, tp.outer);
}

/// Closed form T = sqrt(2/b) * 2/(x1+x2) * K(1 - 4 x1 x2/(x1+x2)^2), valid on
/// the four-real-turning-point branch V_min < E < 0 only.
inline double period_elliptic(double energy, const PotentialParams& p) {
    detail::require_classical(energy, p);
    if (!(energy < 0.0))
        throw std::domain_error("period_elliptic: closed form requires V_min < E < 0, got E=" +
                                std::to_string(energy));
    const TurningPoints tp = turning_points(energy, p);
    const double x1 = *tp.inner, x2 = tp.outer;
    const double sum = x1 + x2;
    const double m = 1.0 - 4.0 * x1 * x2 / (sum * sum);
    return std::sqrt(2.0 / p.b) * 2.0 / sum * specfun::elliptic_k(m);
}

/// Logarithmic small-|E| asymptote of the single-well period,
///   T -> -sqrt(2/-a) (log(sqrt(b)/(-4a)) + log|E|/2).
inline double period_asymptotic(double energy, const PotentialParams& p) {
    detail::require_classical(energy, p);
    if (!(energy < 0.0))
        throw std::domain_error("period_asymptotic: defined for E < 0 only");
    return -std::sqrt(2.0 / (-p.a)) *
           (std::log(std::sqrt(p.b) / (-4.0 * p.a)) + 0.5 * std::log(std::abs(energy)));
}

/// Loop action J(E): 2 Int sqrt(2(E-V)) dx over one well below the barrier,
/// over the full orbit above.  The sine substitution absorbs the sqrt
/// vanishing at the turning points, leaving an analytic integrand.
inline double action(double energy, const PotentialParams& p) {
    const TurningPoints tp = turning_points(energy, p);
    const double pref = 2.0 * std::sqrt(2.0 * p.b);
    constexpr double half_pi = std::numbers::pi / 2;
    if (energy < 0.0) {
        const double x1 = *tp.inner, x2 = tp.outer;
        const double c = 0.5 * (x1 + x2), r = 0.5 * (x2 - x1);
        return specfun::integrate_midpoint_doubling(
            [&](double th) {
                const double ct = std::cos(th);
                const double x = c + r * std::sin(th);
                return pref * r * r * ct * ct * std::sqrt((x + x1) * (x + x2));
            },
            -half_pi, half_pi, 1e-11);
    }
    const double x2 = tp.outer;
    const double q = -detail::inner_squared(energy, p);
    return specfun::integrate_midpoint_doubling(
        [&](double th) {
            const double ct = std::cos(th);
            const double x = x2 * std::sin(th);
            return pref * x2 * x2 * ct * ct * std::sqrt(x * x + q);
        },
        -half_pi, half_pi, 1e-11);
}

/// Separatrix value of the single-well action, J(0-) = 2 sqrt(2) (-a)^{3/2} / (3b).
inline double separatrix_action(const PotentialParams& p) {
    validate(p);
    return 2.0 * std::sqrt(2.0) * std::pow(-p.a, 1.5) / (3.0 * p.b);
}

/// Positive eigenvalue sqrt(-2a) of the flow linearized at the unstable origin.
inline double lyapunov(const PotentialParams& p) {
    if (!(p.a < 0.0))
        throw std::domain_error("lyapunov: origin is not unstable for a >= 0");
    return std::sqrt(-2.0 * p.a);
}

/// The straight line 2*pi*hbar*rho(E) = slope * log|E| + intercept predicted
/// near the critical energy; slope = -2/lambda, intercept = -(4/lambda) log(sqrt(b)/(-4a)).
struct DosLine {
    double slope = 0.0;
    double intercept = 0.0;
};

inline DosLine dos_asymptote_line(const PotentialParams& p) {
    const double lam = lyapunov(p);
    return {-2.0 / lam, -(4.0 / lam) * std::log(std::sqrt(p.b) / (-4.0 * p.a))};
}

inline double dos_asymptote(double energy, const PotentialParams& p) {
    detail::require_classical(energy, p);
    if (!(energy < 0.0))
        throw std::domain_error("dos_asymptote: defined for V_min < E < 0");
    const DosLine line = dos_asymptote_line(p);
    return line.slope * std::log(std::abs(energy)) + line.intercept;
}

}  // namespace qdw::classical
