#pragma once

// Multi-record stages shared by the CLI subcommands.

#include <cstddef>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "geohall/corpus.hpp"
#include "geohall/evalkit.hpp"
#include "geohall/geostats.hpp"
#include "geohall/mocklm.hpp"
#include "geohall/trace.hpp"

namespace geohall::pipeline {

// Worker count: GEOHALL_THREADS when set to a positive integer, else the
// hardware concurrency (at least 1).
std::size_t worker_count();

// Runs fn(i) for i in [0, n) on up to `workers` threads. If any call throws,
// the exception from the lowest failing index is rethrown after all workers stop.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

enum class SpanMode { full, answer };
SpanMode parse_span_mode(std::string_view s);

struct ExtractOptions {
    trace::DType dtype = trace::DType::f32;
    trace::PayloadKind payload = trace::PayloadKind::hidden;
    std::size_t workers = 1;
};

// Mock-extracts every record and writes the trace dir plus traces.jsonl in
// dataset order.
std::vector<trace::TraceManifestEntry> mock_extract_all(const corpus::Dataset& dataset, const mocklm::MockConfig& config,
                                                        const std::filesystem::path& trace_dir,
                                                        const ExtractOptions& options);

// Statistic profiles for every manifest entry, ordered by entry then statistic.
// In answer mode, records with an empty answer_token_span are skipped.
std::vector<geostats::LayerStatProfile> compute_stats(std::span<const trace::TraceManifestEntry> entries,
                                                      const std::filesystem::path& trace_dir,
                                                      std::span<const geostats::Statistic> statistics, SpanMode span,
                                                      std::size_t workers);

// Perturbation-normalized profiles for every non-sibling record that has
// siblings in the manifest, one per statistic present.
std::vector<geostats::LayerStatProfile> normalize_all(std::span<const trace::TraceManifestEntry> entries,
                                                      std::span<const geostats::LayerStatProfile> profiles);

// Attaches dataset/type/level labels from the manifest. Throws DataError for
// profiles whose record is not in the manifest.
std::vector<evalkit::LabeledProfile> label_profiles(std::span<const trace::TraceManifestEntry> entries,
                                                    std::span<const geostats::LayerStatProfile> profiles);

}  // namespace geohall::pipeline
