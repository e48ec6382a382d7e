#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <lapacke.h>

#include "qdw/model.hpp"

namespace qdw::specfun {

// All elliptic integrals here use the PARAMETER convention, m = k^2.  The
// closed-form period passes 1 - 4 x1 x2/(x1+x2)^2 straight in as m; do not
// confuse with the modulus convention K(k).

/// Complete elliptic integral of the first kind K(m), m < 1, by the
/// arithmetic-geometric mean. Quadratic convergence, ~1e-15 relative.
inline double elliptic_k(double m) {
    if (!(m < 1.0))
        throw std::domain_error("elliptic_k: parameter must satisfy m < 1 (logarithmic "
                                "singularity at m = 1), got m=" + std::to_string(m));
    double a = 1.0, b = std::sqrt(1.0 - m);
    for (int i = 0; i < 60; ++i) {
        const double a1 = 0.5 * (a + b);
        const double b1 = std::sqrt(a * b);
        a = a1;
        b = b1;
        if (std::abs(a - b) <= 4.0 * std::numeric_limits<double>::epsilon() * a) break;
    }
    return std::numbers::pi / (2.0 * a);
}

namespace detail {

/// Carlson symmetric integral R_F(x,y,z) by the duplication theorem.
inline double carlson_rf(double x, double y, double z) {
    constexpr double tol = 1e-10;  // fifth-order remainder -> ~1e-16 accuracy
    double dx, dy, dz;
    double mu;
    do {
        const double sx = std::sqrt(x), sy = std::sqrt(y), sz = std::sqrt(z);
        const double lam = sx * (sy + sz) + sy * sz;
        x = 0.25 * (x + lam);
        y = 0.25 * (y + lam);
        z = 0.25 * (z + lam);
        mu = (x + y + z) / 3.0;
        dx = (mu - x) / mu;
        dy = (mu - y) / mu;
        dz = (mu - z) / mu;
    } while (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) > tol);
    const double e2 = dx * dy - dz * dz;
    const double e3 = dx * dy * dz;
    return (1.0 + (e2 / 24.0 - 0.1 - 3.0 * e3 / 44.0) * e2 + e3 / 14.0) / std::sqrt(mu);
}

}  // namespace detail

/// Incomplete elliptic integral of the first kind F(phi | m) on the principal
/// branch |phi| <= pi/2.  F(pi/2 | m) = elliptic_k(m).
inline double elliptic_f(double phi, double m) {
    if (!(m < 1.0))
        throw std::domain_error("elliptic_f: parameter must satisfy m < 1, got m=" + std::to_string(m));
    if (!(std::abs(phi) <= std::numbers::pi / 2 + 1e-12))
        throw std::domain_error("elliptic_f: principal branch requires |phi| <= pi/2, got phi=" +
                                std::to_string(phi));
    if (phi == 0.0) return 0.0;
    const double s = std::sin(phi), c = std::cos(phi);
    return s * detail::carlson_rf(c * c, 1.0 - m * s * s, 1.0);
}

enum class QuadratureKind { gauss_legendre, inverse_sqrt_endpoint };

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
    QuadratureKind kind = QuadratureKind::gauss_legendre;
};

/// n-point Gauss-Legendre rule on [-1, 1], Newton iteration on the Legendre
/// recurrence from the usual Chebyshev initial guesses.
inline QuadratureRule gauss_legendre(int n) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: n must be positive");
    QuadratureRule rule;
    rule.kind = QuadratureKind::gauss_legendre;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            pp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        rule.weights[i] = rule.weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * pp * pp);
    }
    if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
    return rule;
}

/// Integrates f(x)/sqrt((x-x1)(x2-x)) over [x1, x2] for smooth f.  The
/// substitution x = x1 + (x2-x1) sin^2(theta) removes both endpoint
/// singularities (the midpoint rule in theta is the Gauss-Chebyshev rule);
/// node count doubles until successive values agree to 1e-12 relative.
template <class F>
inline double integrate_inverse_sqrt(F&& f, double x1, double x2, int n = 32) {
    if (!(x1 < x2)) throw std::invalid_argument("integrate_inverse_sqrt: requires x1 < x2");
    if (n < 8) throw std::invalid_argument("integrate_inverse_sqrt: need n >= 8 starting nodes");
    const double width = x2 - x1;
    double prev = std::numeric_limits<double>::quiet_NaN();
    for (long nodes = n; nodes <= (1L << 24); nodes *= 2) {
        const double h = (std::numbers::pi / 2) / static_cast<double>(nodes);
        double sum = 0.0;
        for (long j = 0; j < nodes; ++j) {
            const double th = (static_cast<double>(j) + 0.5) * h;
            const double s = std::sin(th);
            const double x = x1 + width * s * s;
            const double fx = f(x);
            if (!std::isfinite(fx))
                throw numeric_error("integrate_inverse_sqrt: integrand non-finite at x=" +
                                    std::to_string(x));
            sum += fx;
        }
        const double val = 2.0 * sum * h;
        if (std::isfinite(prev) && std::abs(val - prev) <= 1e-12 * std::max(std::abs(val), 1e-300))
            return val;
        prev = val;
    }
    throw numeric_error("integrate_inverse_sqrt: no convergence on [" + std::to_string(x1) + ", " +
                        std::to_string(x2) + "]");
}

/// Integrates a smooth periodic-extension-friendly integrand g(theta) over
/// [a, b] by midpoint doubling; used for action and barrier integrals whose
/// sqrt endpoint behavior has been absorbed by a sine substitution.
template <class G>
inline double integrate_midpoint_doubling(G&& g, double a, double b, double rel_tol = 1e-12,
                                          int n0 = 32, int max_doublings = 20) {
    double prev = std::numeric_limits<double>::quiet_NaN();
    long nodes = n0;
    for (int d = 0; d <= max_doublings; ++d, nodes *= 2) {
        const double h = (b - a) / static_cast<double>(nodes);
        double sum = 0.0;
        for (long j = 0; j < nodes; ++j) {
            const double gx = g(a + (static_cast<double>(j) + 0.5) * h);
            if (!std::isfinite(gx))
                throw numeric_error("integrate_midpoint_doubling: integrand non-finite");
            sum += gx;
        }
        const double val = sum * h;
        if (std::isfinite(prev) && std::abs(val - prev) <= rel_tol * std::max(std::abs(val), 1e-300))
            return val;
        prev = val;
    }
    throw numeric_error("integrate_midpoint_doubling: no convergence after " +
                        std::to_string(max_doublings) + " doublings");
}

namespace detail {

/// Newton correction h_N(x)/h_N'(x) for the orthonormal Hermite polynomial,
/// evaluated with running rescaling so it stays finite for N up to 2000.
inline double hermite_newton_step(int n, double x) {
    double p0 = 1.0, p1 = std::sqrt(2.0) * x;  // orthonormal up to the common Gaussian weight
    for (int k = 2; k <= n; ++k) {
        const double p2 = x * std::sqrt(2.0 / k) * p1 - std::sqrt((k - 1.0) / k) * p0;
        p0 = p1;
        p1 = p2;
        const double mag = std::max(std::abs(p0), std::abs(p1));
        if (mag > 1e100) {
            p0 /= mag;
            p1 /= mag;
        }
    }
    // h_n'(x) = sqrt(2n) h_{n-1}(x)
    return p1 / (std::sqrt(2.0 * n) * p0);
}

}  // namespace detail

/// The N real roots of the Hermite polynomial H_N, ascending.  Golub-Welsch:
/// eigenvalues of the symmetric tridiagonal Jacobi matrix (off-diagonal
/// sqrt(k/2)), then one Newton polish and exact antisymmetrization.
inline std::vector<double> hermite_nodes(int n) {
    if (n < 1) throw std::invalid_argument("hermite_nodes: mesh size must be >= 1");
    if (n > 2000) throw std::invalid_argument("hermite_nodes: mesh size capped at 2000");
    std::vector<double> diag(n, 0.0), off(std::max(0, n - 1));
    for (int k = 1; k < n; ++k) off[k - 1] = std::sqrt(k / 2.0);
    const int info = LAPACKE_dstev(LAPACK_COL_MAJOR, 'N', n, diag.data(), off.data(), nullptr, n);
    if (info != 0)
        throw numeric_error("hermite_nodes: tridiagonal eigensolve failed, info=" + std::to_string(info));
    std::sort(diag.begin(), diag.end());
    for (int i = 0; i < n; ++i) {
        const double step = detail::hermite_newton_step(n, diag[i]);
        if (std::abs(step) > 1e-12 * std::max(1.0, std::abs(diag[i])))
            diag[i] -= step;
    }
    for (int i = 0; i < n / 2; ++i) {
        const double x = 0.5 * (diag[n - 1 - i] - diag[i]);
        diag[i] = -x;
        diag[n - 1 - i] = x;
    }
    if (n % 2 == 1) diag[n / 2] = 0.0;
    return diag;
}

}  // namespace qdw::specfun
