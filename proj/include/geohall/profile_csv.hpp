#pragma once

// Persisted statistic profiles: CSV `record_id,statistic,layer,value,flags`,
// one row per (record, statistic, layer).

#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "geohall/geostats.hpp"

namespace geohall {

void write_profiles(std::ostream& out, std::span<const geostats::LayerStatProfile> profiles);
void write_profiles(const std::filesystem::path& path, std::span<const geostats::LayerStatProfile> profiles);

// Rows for one (record, statistic) must be contiguous with layers 0..L-1 in order.
std::vector<geostats::LayerStatProfile> read_profiles(std::istream& in);
std::vector<geostats::LayerStatProfile> read_profiles(const std::filesystem::path& path);

}  // namespace geohall
