#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace qdw {

/// A computation failed to converge or produced non-finite values.
struct numeric_error : std::runtime_error {
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// E = 0 is the separatrix: no closed orbit, infinite period. Kept distinct
/// from plain domain errors so energy sweeps can skip it cleanly.
struct separatrix_error : std::domain_error {
    explicit separatrix_error(const std::string& msg) : std::domain_error(msg) {}
};

/// Physical constants of one problem instance, V(x) = a x^2 + b x^4.
/// The double-well regime requires a < 0, b > 0; mass is fixed to 1.
struct PotentialParams {
    double a = -10.0;
    double b = 1.0;
    double mass = 1.0;
    double hbar = 1.0;
};

inline void validate(const PotentialParams& p) {
    if (!(p.a < 0.0) || !(p.b > 0.0))
        throw std::domain_error("PotentialParams: not a double well (need a < 0, b > 0; got a=" +
                                std::to_string(p.a) + ", b=" + std::to_string(p.b) + ")");
    if (p.mass != 1.0)
        throw std::domain_error("PotentialParams: mass is fixed to 1");
    if (!(p.hbar > 0.0))
        throw std::domain_error("PotentialParams: hbar must be positive");
}

inline double potential(double x, const PotentialParams& p) {
    const double x2 = x * x;
    return p.a * x2 + p.b * x2 * x2;
}

struct DerivedConstants {
    double x_min;     ///< well minimum abscissa, sqrt(-a/2b)
    double v_min;     ///< well bottom energy, -a^2/(4b)
    double e_crit;    ///< barrier-top (critical) energy, 0
    double lyapunov;  ///< instability exponent at the origin, sqrt(-2a)
};

inline DerivedConstants derived_constants(const PotentialParams& p) {
    validate(p);
    return {std::sqrt(-p.a / (2.0 * p.b)), -p.a * p.a / (4.0 * p.b), 0.0, std::sqrt(-2.0 * p.a)};
}

enum class Parity { even, odd, unknown };
enum class Method { sinc, hermite, lmm, ebk };

inline std::string_view to_string(Parity p) {
    switch (p) {
        case Parity::even: return "even";
        case Parity::odd: return "odd";
        default: return "unknown";
    }
}

inline std::string_view to_string(Method m) {
    switch (m) {
        case Method::sinc: return "sinc";
        case Method::hermite: return "hermite";
        case Method::lmm: return "lmm";
        default: return "ebk";
    }
}

inline Method parse_method(std::string_view s) {
    if (s == "sinc") return Method::sinc;
    if (s == "hermite") return Method::hermite;
    if (s == "lmm") return Method::lmm;
    if (s == "ebk") return Method::ebk;
    throw std::invalid_argument("unknown method '" + std::string(s) + "' (want sinc|hermite|lmm|ebk)");
}

/// One bound-state energy. basis_size is empty for semiclassical (EBK) levels.
struct EnergyLevel {
    int n = 0;
    double energy = 0.0;
    Parity parity = Parity::unknown;
    Method method = Method::sinc;
    std::optional<int> basis_size;
};

struct SpectrumMetadata {
    int basis_size = 0;   ///< 0 when not applicable
    double scale = 0.0;   ///< Omega (sinc/hermite) or mesh scale h (lmm); 0 for ebk
    double residual = 0.0;///< max eigenpair residual over the lowest pairs, relative to ||H||_F
};

/// Ordered bound-state energies with parity and provenance.
/// Invariants: levels ascending (ties: even before odd); below E_c resolved
/// parities alternate even, odd, even, ...
struct Spectrum {
    PotentialParams params;
    Method method = Method::sinc;
    std::vector<EnergyLevel> levels;
    SpectrumMetadata metadata;
};

}  // namespace qdw
