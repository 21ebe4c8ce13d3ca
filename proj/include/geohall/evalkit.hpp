#pragma once

// Detection evaluation: per-layer AUROC with a fixed orientation (higher
// statistic means hallucination), best-layer selection with tie reporting,
// detection tables and per-layer distribution summaries.

#include <array>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "geohall/corpus.hpp"
#include "geohall/geostats.hpp"

namespace geohall::evalkit {

using corpus::Domain;
using corpus::HallType;
using geostats::LayerStatProfile;

inline constexpr int kSchemaVersion = 1;
inline constexpr double kTieTol = 1e-12;

// P(h > c) + 0.5 P(h == c) for uniformly drawn hallucination score h and
// correct score c, via midranks. Throws UsageError on empty input and
// ValueError on non-finite scores.
double auroc(std::span<const double> hallucination_scores, std::span<const double> correct_scores);

struct LabeledProfile {
    LayerStatProfile profile;
    Domain dataset = Domain::math;
    HallType hall_type = HallType::baseline;
    int level = 0;
    bool is_perturbation = false;  // perturbation siblings never enter an evaluation
};

struct Condition {
    Domain dataset = Domain::math;
    HallType hall_type = HallType::incorrectness;
    int level = 1;
};

std::string describe(const std::string& statistic, const Condition& c);

struct EvalCell {
    std::string statistic;
    Domain domain = Domain::math;
    HallType hall_type = HallType::incorrectness;
    int level = 1;
    std::vector<double> auroc_per_layer;
    double best_auroc = 0.0;
    std::optional<int> best_layer;  // empty on ties
    bool tie = false;
    std::size_t num_positive = 0;
    std::size_t num_negative = 0;
};

// AUROC at every layer between the condition's records and the baseline
// records of the same dataset. Throws DataError naming the condition when
// either side is empty or layer counts disagree.
EvalCell layer_sweep(std::span<const LabeledProfile> profiles, const std::string& statistic, const Condition& condition);

// Columns of the detection table: incorrectness levels 1-3, then level 3 of
// confidence, irrelevance, incoherence and incompleteness.
const std::vector<std::pair<HallType, int>>& table_columns();
inline constexpr std::array<Domain, 4> kTableDomains{Domain::math, Domain::history, Domain::counting, Domain::all};

struct EvalReport {
    int schema_version = kSchemaVersion;
    bool normalized = false;
    std::vector<std::string> statistics;  // row labels in order, e.g. HS, ME, AS
    std::vector<EvalCell> cells;          // present cells, domain-major then statistic then column
    std::vector<std::string> missing;     // "<stat>/<domain>/<type>/<level>: reason"

    const EvalCell* find(const std::string& statistic, Domain d, HallType t, int level) const;
};

EvalReport detection_table(std::span<const LabeledProfile> profiles, std::span<const geostats::Statistic> statistics,
                           bool normalized);

std::string render_text(const EvalReport& report);
std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(std::string_view text);

struct GroupBy {
    bool domain = true;
    bool hall_type = true;
    bool level = true;
};

struct DistributionSummary {
    std::string statistic;
    std::optional<Domain> domain;
    std::optional<HallType> hall_type;
    std::optional<int> level;
    std::vector<double> mean;  // per layer
    std::vector<double> stddev;  // per layer, population
    std::size_t count = 0;

    std::string group_key() const;  // "HS|math|incorrectness|3", "*" for ungrouped keys
};

// Per-layer mean and population std per group. In baseline-relative mode the
// per-layer mean of the matching baseline group (same statistic, and same
// domain when grouping by domain) is subtracted first.
std::vector<DistributionSummary> distribution_summary(std::span<const LabeledProfile> profiles, GroupBy group_by,
                                                      bool baseline_relative = false);

// CSV with header `group,layer,mean,std`.
void write_distribution_csv(std::ostream& out, std::span<const DistributionSummary> summaries);

}  // namespace geohall::evalkit
