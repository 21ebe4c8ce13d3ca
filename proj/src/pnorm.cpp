#include "geohall/pnorm.hpp"

#include <cmath>

#include "geohall/error.hpp"

namespace geohall::pnorm {

double perturbation_normalize(double base_value, std::span<const double> sibling_values, const std::string& context) {
    const auto k = sibling_values.size();
    if (k < 2) throw UsageError("perturbation_normalize needs at least two siblings" +
                                (context.empty() ? std::string() : " (" + context + ")"));
    double mean = 0.0;
    for (double v : sibling_values) mean += v;
    mean /= static_cast<double>(k);
    double var = 0.0;
    for (double v : sibling_values) var += (v - mean) * (v - mean);
    const double sigma = std::sqrt(var / static_cast<double>(k));

    const double centered = base_value - mean;
    if (sigma < kDegenerateTol) {
        if (std::abs(centered) < kDegenerateTol) return 0.0;
        throw DegenerateVarianceError("degenerate sibling variance" +
                                      (context.empty() ? std::string() : " for " + context) +
                                      ": siblings are constant but base differs by " + std::to_string(centered));
    }
    return centered / sigma;
}

void PerturbationGroup::validate() const {
    const std::string who = "perturbation group for " + base.record_id;
    if (siblings.size() < 2) throw UsageError(who + ": needs k >= 2 siblings");
    if (siblings.size() != offsets.size()) throw UsageError(who + ": sibling count differs from offset count");
    for (const auto& s : siblings) {
        if (s.statistic != base.statistic) throw UsageError(who + ": sibling " + s.record_id + " has another statistic");
        if (s.values.size() != base.values.size())
            throw UsageError(who + ": sibling " + s.record_id + " has a different layer count");
    }
}

std::string normalized_name(const std::string& statistic) { return statistic + "-Norm"; }

LayerStatProfile normalize_profile(const PerturbationGroup& group) {
    group.validate();
    LayerStatProfile out;
    out.record_id = group.base.record_id;
    out.statistic = normalized_name(group.base.statistic);
    std::vector<double> column(group.siblings.size());
    for (std::size_t l = 0; l < group.base.values.size(); ++l) {
        geostats::StatFlags flags = group.base.flags.empty() ? geostats::StatFlags{geostats::kNoFlags} : group.base.flags[l];
        for (std::size_t i = 0; i < group.siblings.size(); ++i) {
            column[i] = group.siblings[i].values[l];
            if (!group.siblings[i].flags.empty()) flags |= group.siblings[i].flags[l];
        }
        out.values.push_back(perturbation_normalize(group.base.values[l], column,
                                                    group.base.record_id + " layer " + std::to_string(l)));
        out.flags.push_back(flags);
    }
    return out;
}

}  // namespace geohall::pnorm
