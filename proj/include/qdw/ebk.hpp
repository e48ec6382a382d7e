#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "qdw/classical.hpp"
#include "qdw/model.hpp"

namespace qdw::ebk {

enum class Branch { well, above };

/// The requested quantum number's action target falls outside the branch's
/// action range; the caller moves to the other branch.
struct branch_overflow_error : std::domain_error {
    explicit branch_overflow_error(const std::string& msg) : std::domain_error(msg) {}
};

struct EbkLevel {
    int n = 0;  ///< per-branch quantum number
    double energy = 0.0;
    Branch branch = Branch::well;
};

/// Quantization rule J(E) = 2 pi hbar (n + 1/2): two turning points (mu = 2),
/// no hard walls (d = 0).  Below the barrier the rule applies per well (each
/// well an independent librational orbit); above, to the full orbit.
inline double quantized_action(int n, double hbar) {
    return 2.0 * std::numbers::pi * hbar * (n + 0.5);
}

/// Root of J(E) = 2 pi hbar (n + 1/2) on the given branch.  Newton with the
/// exact derivative dJ/dE = T, bisection-safeguarded; converged to
/// |Delta J| / J <= 1e-12.
inline double ebk_energy(int n, double hbar, const PotentialParams& p, Branch branch) {
    validate(p);
    if (n < 0) throw std::invalid_argument("ebk_energy: quantum number must be non-negative");
    if (!(hbar > 0.0)) throw std::invalid_argument("ebk_energy: hbar must be positive");
    const double target = quantized_action(n, hbar);
    const double v_min = derived_constants(p).v_min;
    double lo, hi;
    if (branch == Branch::well) {
        if (target >= classical::separatrix_action(p))
            throw branch_overflow_error("ebk_energy: action target " + std::to_string(target) +
                                        " exceeds the well branch range (J_sep=" +
                                        std::to_string(classical::separatrix_action(p)) + ")");
        const double delta = 1e-13 * std::abs(v_min);
        lo = v_min + delta;
        hi = -delta;
    } else {
        if (target <= 2.0 * classical::separatrix_action(p))
            throw branch_overflow_error("ebk_energy: action target " + std::to_string(target) +
                                        " is below the full-orbit separatrix action");
        lo = 1e-13 * std::abs(v_min);
        hi = std::abs(v_min);
        while (classical::action(hi, p) < target) {
            lo = hi;
            hi *= 2.0;
            if (hi > 1e12) throw numeric_error("ebk_energy: bracket growth failed");
        }
    }
    double e = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        const double j = classical::action(e, p);
        if (j > target)
            hi = e;
        else
            lo = e;
        if (std::abs(j - target) <= 1e-13 * target) break;
        const double period = classical::period_quadrature(e, p);
        double next = e + (target - j) / period;
        if (!(next > lo) || !(next < hi)) next = 0.5 * (lo + hi);
        if (next == e) break;
        e = next;
    }
    const double j_final = classical::action(e, p);
    if (std::abs(j_final - target) > 1e-12 * target)
        throw numeric_error("ebk_energy: root finder stalled at n=" + std::to_string(n) +
                            ", hbar=" + std::to_string(hbar) +
                            " (|dJ|/J=" + std::to_string(std::abs(j_final - target) / target) + ")");
    return e;
}

/// Number of well-branch quantum numbers, from the closed-form separatrix action.
inline int well_level_count(double hbar, const PotentialParams& p) {
    const double x = classical::separatrix_action(p) / (2.0 * std::numbers::pi * hbar) - 0.5;
    return x > 0.0 ? static_cast<int>(std::ceil(x)) : 0;
}

/// Number of states below the critical energy: each well level is doubly
/// degenerate, so 2 x #{n >= 0 : 2 pi hbar (n + 1/2) < J_well(0-)}.  No
/// root-finding involved.
inline long long count_states_below(double hbar, const PotentialParams& p, double e_c = 0.0) {
    validate(p);
    if (!(hbar > 0.0)) throw std::invalid_argument("count_states_below: hbar must be positive");
    if (e_c != 0.0)
        throw std::domain_error("count_states_below: the closed form counts below the critical "
                                "energy E_c = 0 only");
    return 2LL * well_level_count(hbar, p);
}

/// All EBK levels up to e_max as a Spectrum: well pairs expand to two entries
/// (even then odd, equal energies -- the rule cannot resolve tunneling
/// splittings), above-branch singlets carry unknown parity.
inline Spectrum ebk_spectrum(double hbar, const PotentialParams& p, double e_max) {
    validate(p);
    if (!(hbar > 0.0)) throw std::invalid_argument("ebk_spectrum: hbar must be positive");
    const double v_min = derived_constants(p).v_min;
    if (!(e_max >= v_min))
        throw std::domain_error("ebk_spectrum: e_max must not sit below the well bottom " +
                                std::to_string(v_min));
    PotentialParams params = p;
    params.hbar = hbar;
    Spectrum spec;
    spec.params = params;
    spec.method = Method::ebk;

    const int n_well = well_level_count(hbar, p);
    for (int n = 0; n < n_well; ++n) {
        const double e = ebk_energy(n, hbar, p, Branch::well);
        if (e > e_max) break;
        spec.levels.push_back({0, e, Parity::even, Method::ebk, std::nullopt});
        spec.levels.push_back({0, e, Parity::odd, Method::ebk, std::nullopt});
    }
    if (e_max > 0.0) {
        const double j_sep_full = 2.0 * classical::separatrix_action(p);
        int m = static_cast<int>(std::ceil(j_sep_full / (2.0 * std::numbers::pi * hbar) - 0.5));
        for (;; ++m) {
            double e;
            try {
                e = ebk_energy(m, hbar, p, Branch::above);
            } catch (const branch_overflow_error&) {
                continue;  // half-integer target still inside the separatrix action; step up
            }
            if (e > e_max) break;
            spec.levels.push_back({0, e, Parity::unknown, Method::ebk, std::nullopt});
        }
    }
    for (std::size_t i = 0; i < spec.levels.size(); ++i) spec.levels[i].n = static_cast<int>(i);
    return spec;
}

}  // namespace qdw::ebk
