#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>

#include "qdw/model.hpp"

namespace qdw::io {

/// Doubles are printed with 15 significant digits throughout the interchange
/// formats.
inline std::string format_g15(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.15g", v);
    return buf;
}

/// Spectrum CSV: optional '#'-prefixed provenance line, then
/// n,energy,parity,method,basis_size.  basis_size is empty for EBK levels.
inline void write_spectrum_csv(std::ostream& os, const Spectrum& spec,
                               std::string_view provenance = {}) {
    if (!provenance.empty()) os << "# " << provenance << "\n";
    os << "n,energy,parity,method,basis_size\n";
    for (const EnergyLevel& lv : spec.levels) {
        os << lv.n << ',' << format_g15(lv.energy) << ',' << to_string(lv.parity) << ','
           << to_string(lv.method) << ',';
        if (lv.basis_size) os << *lv.basis_size;
        os << '\n';
    }
}

/// JSON mirror of the CSV document.  Hand-rolled so numeric fields carry the
/// same 15-significant-digit rendering as the CSV.
inline void write_spectrum_json(std::ostream& os, const Spectrum& spec) {
    const PotentialParams& p = spec.params;
    os << "{\n  \"params\": {\"a\": " << format_g15(p.a) << ", \"b\": " << format_g15(p.b)
       << ", \"mass\": " << format_g15(p.mass) << ", \"hbar\": " << format_g15(p.hbar) << "},\n";
    os << "  \"method\": \"" << to_string(spec.method) << "\",\n";
    os << "  \"metadata\": {\"basis_size\": " << spec.metadata.basis_size
       << ", \"scale\": " << format_g15(spec.metadata.scale)
       << ", \"residual\": " << format_g15(spec.metadata.residual) << "},\n";
    os << "  \"levels\": [";
    for (std::size_t i = 0; i < spec.levels.size(); ++i) {
        const EnergyLevel& lv = spec.levels[i];
        os << (i == 0 ? "\n" : ",\n");
        os << "    {\"n\": " << lv.n << ", \"energy\": " << format_g15(lv.energy)
           << ", \"parity\": \"" << to_string(lv.parity) << "\", \"method\": \""
           << to_string(lv.method) << "\", \"basis_size\": ";
        if (lv.basis_size)
            os << *lv.basis_size;
        else
            os << "null";
        os << "}";
    }
    os << "\n  ]\n}\n";
}

/// Writes through a temp file in the target directory and renames into place,
/// so an interrupted run never leaves a partial file at the final path.
inline void atomic_write_file(const std::filesystem::path& path,
                              const std::function<void(std::ostream&)>& writer) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
        writer(os);
        os.flush();
        if (!os) throw std::runtime_error("write failed on '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace qdw::io
