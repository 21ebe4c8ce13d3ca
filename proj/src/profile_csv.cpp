#include "geohall/profile_csv.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "geohall/error.hpp"

namespace geohall {

namespace {
constexpr std::string_view kHeader = "record_id,statistic,layer,value,flags";
}

void write_profiles(std::ostream& out, std::span<const geostats::LayerStatProfile> profiles) {
    out << kHeader << '\n';
    char buf[32];
    for (const auto& p : profiles) {
        for (std::size_t l = 0; l < p.values.size(); ++l) {
            std::snprintf(buf, sizeof buf, "%.17g", p.values[l]);
            out << p.record_id << ',' << p.statistic << ',' << l << ',' << buf << ','
                << geostats::flags_to_string(p.flags.empty() ? geostats::StatFlags{geostats::kNoFlags} : p.flags[l]) << '\n';
        }
    }
}

void write_profiles(const std::filesystem::path& path, std::span<const geostats::LayerStatProfile> profiles) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    write_profiles(out, profiles);
    if (!out) throw IoError("write failed for " + path.string());
}

std::vector<geostats::LayerStatProfile> read_profiles(std::istream& in) {
    std::vector<geostats::LayerStatProfile> out;
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line) || line != kHeader) throw FormatError("statistics CSV: expected header '" + std::string(kHeader) + "'");
    ++lineno;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::string where = "statistics CSV line " + std::to_string(lineno);
        std::vector<std::string> f;
        std::size_t pos = 0;
        while (true) {
            const auto c = line.find(',', pos);
            f.push_back(line.substr(pos, c == std::string::npos ? std::string::npos : c - pos));
            if (c == std::string::npos) break;
            pos = c + 1;
        }
        if (f.size() != 5) throw FormatError(where + ": expected 5 fields");
        char* end = nullptr;
        const long layer = std::strtol(f[2].c_str(), &end, 10);
        if (f[2].empty() || *end != '\0' || layer < 0) throw FormatError(where + ": bad layer '" + f[2] + "'");
        const double value = std::strtod(f[3].c_str(), &end);
        if (f[3].empty() || *end != '\0') throw FormatError(where + ": bad value '" + f[3] + "'");
        if (!std::isfinite(value)) throw ValueError(where + ": non-finite value");

        if (layer == 0) {
            out.push_back({f[0], f[1], {}, {}});
        } else if (out.empty() || out.back().record_id != f[0] || out.back().statistic != f[1] ||
                   static_cast<long>(out.back().values.size()) != layer) {
            throw FormatError(where + ": rows for " + f[0] + "/" + f[1] + " are not contiguous in layer order");
        }
        out.back().values.push_back(value);
        out.back().flags.push_back(geostats::parse_flags(f[4]));
    }
    return out;
}

std::vector<geostats::LayerStatProfile> read_profiles(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open statistics CSV " + path.string());
    return read_profiles(in);
}

}  // namespace geohall
