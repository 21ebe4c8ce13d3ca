#pragma once

// Perturbation normalization: a record's statistic expressed as a z-score
// against the same statistic on k copies of the response whose answer was
// shifted by small offsets. Domain-specific location and scale cancel out.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "geohall/geostats.hpp"

namespace geohall::pnorm {

using geostats::LayerStatProfile;

inline constexpr double kDegenerateTol = 1e-12;

// (base - mean) / population std of `siblings`. Returns 0 when the siblings are
// constant and base sits on them; throws DegenerateVarianceError otherwise.
// `context` names the record/layer in the error message.
double perturbation_normalize(double base_value, std::span<const double> sibling_values,
                              const std::string& context = {});

struct PerturbationGroup {
    LayerStatProfile base;
    std::vector<LayerStatProfile> siblings;  // one per offset, same order
    std::vector<std::int64_t> offsets;

    // k >= 2, matching statistic and layer count, siblings.size() == offsets.size().
    void validate() const;
};

// Layer-wise normalization; the result is tagged "<stat>-Norm".
LayerStatProfile normalize_profile(const PerturbationGroup& group);

std::string normalized_name(const std::string& statistic);

}  // namespace geohall::pnorm
