#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qdw/classical.hpp"
#include "qdw/model.hpp"
#include "qdw/solvers.hpp"

namespace qdw::analysis {

/// One density-of-states sample: 2*pi*hbar*rho at the midpoint of the level
/// pair that defined it.
struct DosPoint {
    double e_bar = 0.0;
    double scaled_density = 0.0;  ///< 2*pi*hbar*rho, time units
    bool below_critical = true;
};

/// Quasi-degenerate tunneling doublet below the critical energy.
struct ParityPair {
    double e_bar = 0.0;
    double gap = 0.0;  ///< E_odd - E_even >= 0
    int pair_index = 0;
};

struct FitResult {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    int n_points = 0;
};

/// Scaled density of states 2*pi*hbar*rho(E_bar).  Below E_c consecutive
/// SAME-parity levels define rho+- = 1/(E_{k+1} - E_k) and the quasi-double
/// degeneracy doubles it: 2*pi*hbar * 2 * rho+-.  Above E_c consecutive
/// levels irrespective of parity give 2*pi*hbar*rho.  Pairs straddling E_c
/// are dropped.
inline std::vector<DosPoint> density_of_states(const Spectrum& spec) {
    if (spec.levels.size() < 4)
        throw std::invalid_argument("density_of_states: need at least 4 levels");
    const double two_pi_hbar = 2.0 * std::numbers::pi * spec.params.hbar;
    std::vector<DosPoint> points;
    for (const EnergyLevel& lv : spec.levels)
        if (lv.energy < 0.0 && lv.parity == Parity::unknown)
            throw std::invalid_argument(
                "density_of_states: sub-critical levels lack parity labels; use a spectrum from a "
                "diagonalization method (or ebk), not raw eigenvalues");
    for (Parity par : {Parity::even, Parity::odd}) {
        std::vector<double> series;
        for (const EnergyLevel& lv : spec.levels)
            if (lv.parity == par && lv.energy < 0.0) series.push_back(lv.energy);
        for (std::size_t k = 0; k + 1 < series.size(); ++k)
            points.push_back({0.5 * (series[k] + series[k + 1]),
                              two_pi_hbar * 2.0 / (series[k + 1] - series[k]), true});
    }
    std::vector<double> above;
    for (const EnergyLevel& lv : spec.levels)
        if (lv.energy > 0.0) above.push_back(lv.energy);
    for (std::size_t k = 0; k + 1 < above.size(); ++k)
        points.push_back(
            {0.5 * (above[k] + above[k + 1]), two_pi_hbar / (above[k + 1] - above[k]), false});
    std::sort(points.begin(), points.end(),
              [](const DosPoint& l, const DosPoint& r) { return l.e_bar < r.e_bar; });
    return points;
}

/// Tunneling doublets (E_{2i}, E_{2i+1}) with parities (even, odd) below E_c.
/// EBK spectra are rejected outright: their pairs are degenerate by
/// construction and carry no tunneling information.
inline std::vector<ParityPair> parity_pairs(const Spectrum& spec) {
    if (spec.method == Method::ebk)
        throw std::invalid_argument("parity_pairs: EBK pairs are degenerate by construction; use a "
                                    "diagonalization spectrum");
    std::vector<ParityPair> pairs;
    for (std::size_t i = 0; i + 1 < spec.levels.size(); i += 2) {
        const EnergyLevel& lo = spec.levels[i];
        const EnergyLevel& hi = spec.levels[i + 1];
        if (!(lo.energy < 0.0 && hi.energy < 0.0)) break;
        if (lo.parity != Parity::even || hi.parity != Parity::odd)
            throw std::runtime_error("parity_pairs: parity pattern violation at level index " +
                                     std::to_string(i) + " (expected even,odd; got " +
                                     std::string(to_string(lo.parity)) + "," +
                                     std::string(to_string(hi.parity)) + ")");
        pairs.push_back(
            {0.5 * (lo.energy + hi.energy), hi.energy - lo.energy, static_cast<int>(i / 2)});
    }
    return pairs;
}

struct WkbOptions {
    bool half_barrier = false;   ///< integrate [0, x1] instead of [-x1, x1]
    bool textbook_hbar = false;  ///< exponent -(2 sqrt2/hbar) I instead of -2 sqrt(2/hbar) I
};

/// Barrier integral I = Int sqrt(V(x) - e_bar) dx over the classically
/// forbidden interval between the wells.
inline double barrier_integral(double e_bar, const PotentialParams& p, bool half_barrier = false) {
    const classical::TurningPoints tp = classical::turning_points(e_bar, p);
    const double x1 = *tp.inner, x2 = tp.outer;
    constexpr double half_pi = std::numbers::pi / 2;
    const double full = specfun::integrate_midpoint_doubling(
        [&](double th) {
            const double ct = std::cos(th);
            const double x = x1 * std::sin(th);
            return std::sqrt(p.b) * x1 * x1 * ct * ct * std::sqrt(x2 * x2 - x * x);
        },
        -half_pi, half_pi, 1e-12);
    return half_barrier ? 0.5 * full : full;
}

/// log of the WKB transmission coefficient.  Default is the exponent
/// -2 sqrt(2/hbar) * I as printed in the source analysis; textbook_hbar
/// switches to the standard -(2 sqrt 2 / hbar) * I.
inline double wkb_log_transmission(double e_bar, double hbar, const PotentialParams& p,
                                   WkbOptions opt = {}) {
    validate(p);
    if (!(hbar > 0.0)) throw std::invalid_argument("wkb_transmission: hbar must be positive");
    const double v_min = derived_constants(p).v_min;
    if (!(e_bar > v_min))
        throw std::domain_error("wkb_transmission: e_bar must exceed the well bottom");
    if (e_bar >= 0.0) return 0.0;  // no barrier
    const double integral = barrier_integral(e_bar, p, opt.half_barrier);
    return opt.textbook_hbar ? -(2.0 * std::sqrt(2.0) / hbar) * integral
                             : -2.0 * std::sqrt(2.0 / hbar) * integral;
}

struct Transmission {
    double value = 1.0;
    bool no_barrier = false;
};

inline Transmission wkb_transmission(double e_bar, double hbar, const PotentialParams& p,
                                     WkbOptions opt = {}) {
    validate(p);
    if (!(hbar > 0.0)) throw std::invalid_argument("wkb_transmission: hbar must be positive");
    const double v_min = derived_constants(p).v_min;
    if (!(e_bar > v_min))
        throw std::domain_error("wkb_transmission: e_bar must exceed the well bottom");
    if (e_bar >= 0.0) return {1.0, true};
    return {std::exp(wkb_log_transmission(e_bar, hbar, p, opt)), false};
}

/// Ordinary least squares of y on x.
inline FitResult fit_loglinear(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 3) throw std::invalid_argument("fit_loglinear: need at least 3 points");
    double mx = 0.0, my = 0.0;
    for (const auto& [x, y] : points) {
        if (!std::isfinite(x) || !std::isfinite(y))
            throw std::invalid_argument("fit_loglinear: non-finite point");
        mx += x;
        my += y;
    }
    const double n = static_cast<double>(points.size());
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const auto& [x, y] : points) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if (!(sxx > 0.0)) throw std::invalid_argument("fit_loglinear: degenerate abscissae (all equal)");
    FitResult fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.n_points = static_cast<int>(points.size());
    double ss_res = 0.0;
    for (const auto& [x, y] : points) {
        const double r = y - fit.slope * x - fit.intercept;
        ss_res += r * r;
    }
    fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
    return fit;
}

struct ConvergencePoint {
    int basis_size = 0;
    std::optional<double> delta_e;  ///< absent when the level is out of range at this size
};

/// Convergence metric Delta E_n(N) = |E_n(N) - E_n(ref_size)| against the
/// same-method reference, floored at max(1e-16, 1e-15 |E_ref|) where
/// subtraction noise dominates.
inline std::vector<ConvergencePoint> convergence_study(Method method,
                                                       std::optional<double> scale_override,
                                                       int level, double hbar,
                                                       const std::vector<int>& sizes, int ref_size,
                                                       const PotentialParams& params,
                                                       double* e_ref_out = nullptr) {
    PotentialParams p = params;
    p.hbar = hbar;
    for (int s : sizes)
        if (s >= ref_size)
            throw std::invalid_argument("convergence_study: all sizes must be below ref_size");
    solvers::SolverConfig ref_cfg{method, ref_size, scale_override.value_or(0.0), level + 1};
    const Spectrum ref = solvers::solve_spectrum(ref_cfg, p);
    if (static_cast<int>(ref.levels.size()) <= level)
        throw std::invalid_argument("convergence_study: level " + std::to_string(level) +
                                    " not resolvable at the reference size");
    const double e_ref = ref.levels[level].energy;
    if (e_ref_out) *e_ref_out = e_ref;
    const double floor_val = std::max(1e-16, 1e-15 * std::abs(e_ref));
    std::vector<ConvergencePoint> out;
    out.reserve(sizes.size());
    for (int s : sizes) {
        solvers::SolverConfig cfg{method, s, scale_override.value_or(0.0), level + 1};
        if (s <= level) {
            out.push_back({s, std::nullopt});
            continue;
        }
        const Spectrum spec = solvers::solve_spectrum(cfg, p);
        if (static_cast<int>(spec.levels.size()) <= level) {
            out.push_back({s, std::nullopt});
            continue;
        }
        out.push_back({s, std::max(std::abs(spec.levels[level].energy - e_ref), floor_val)});
    }
    return out;
}

struct TunnelingScaling {
    std::map<double, FitResult> alpha_gap;  ///< per-hbar slope of log T vs log(Delta E)
    FitResult alpha_hbar;                   ///< intercept shift at matched Delta E vs log hbar
};

/// Power-law analysis of transmission against the tunneling gap.  Per hbar the
/// (log Delta E, log T) points of its parity pairs are fit; across hbar the
/// per-point residuals log T - mean_slope * log Delta E (log T at matched
/// Delta E, up to a common line) are fit against log hbar.  Pairs with gaps
/// under gap_floor are eigensolver noise and are excluded.
inline TunnelingScaling tunneling_scaling(const std::map<double, Spectrum>& spectra,
                                          WkbOptions opt = {}, double gap_floor = 1e-9) {
    if (spectra.size() < 2)
        throw std::invalid_argument("tunneling_scaling: need at least 2 hbar values");
    TunnelingScaling out;
    std::map<double, std::vector<std::pair<double, double>>> pts;
    for (const auto& [hbar, spec] : spectra) {
        std::vector<std::pair<double, double>> xy;
        for (const ParityPair& pp : parity_pairs(spec)) {
            if (!(pp.gap > gap_floor)) continue;
            xy.emplace_back(std::log(pp.gap), wkb_log_transmission(pp.e_bar, hbar, spec.params, opt));
        }
        if (xy.size() < 5)
            throw std::invalid_argument("tunneling_scaling: fewer than 5 usable parity pairs at "
                                        "hbar=" + std::to_string(hbar));
        out.alpha_gap[hbar] = fit_loglinear(xy);
        pts[hbar] = std::move(xy);
    }
    double mean_slope = 0.0;
    for (const auto& [hbar, fit] : out.alpha_gap) mean_slope += fit.slope;
    mean_slope /= static_cast<double>(out.alpha_gap.size());
    std::vector<std::pair<double, double>> shift;
    for (const auto& [hbar, xy] : pts)
        for (const auto& [lg, lt] : xy) shift.emplace_back(std::log(hbar), lt - mean_slope * lg);
    out.alpha_hbar = fit_loglinear(shift);
    return out;
}

}  // namespace qdw::analysis
