#pragma once

// Activation traces and the `.ght` tensor file format.
//
// Tensor file layout (all integers little-endian):
//   "GHT1" | u32 dtype (0 = f32, 1 = f16) | u32 ndim | ndim x u64 dims | payload
// The payload is row-major IEEE-754 little-endian. A record directory holds
// L{ll}.{hidden|gram}.ght per layer plus attn.ght (dims L x n x m).

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "geohall/corpus.hpp"

namespace geohall::trace {

enum class DType : std::uint32_t { f32 = 0, f16 = 1 };
enum class PayloadKind { hidden, gram };

std::string_view to_string(DType t);
std::string_view to_string(PayloadKind k);
DType parse_dtype(std::string_view s);
PayloadKind parse_payload_kind(std::string_view s);

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ActivationTrace {
    std::string record_id;
    int hidden_dim = 0;  // d; kept for gram payloads as metadata
    int num_heads = 0;   // n
    PayloadKind payload_kind = PayloadKind::hidden;
    // Per layer: m x d hidden states or m x m Gram matrix.
    std::vector<Matrix> layers;
    // Per layer: n x m attention-map diagonals.
    std::vector<Matrix> attn_diag;

    int num_layers() const noexcept { return static_cast<int>(layers.size()); }
    int seq_len() const noexcept { return layers.empty() ? 0 : static_cast<int>(layers.front().rows()); }

    // Throws ValueError / ConsistencyError when an invariant does not hold:
    // L >= 1, m >= 1, consistent shapes, finite entries, diagonals in [0,1],
    // Gram payloads symmetric within 1e-5 relative.
    void validate() const;
};

// Converts hidden payload layers to Gram matrices H H^T.
ActivationTrace to_gram(const ActivationTrace& trace);

struct TokenSpan {
    std::size_t start = 0;
    std::size_t end = 0;
    bool empty() const noexcept { return end <= start; }
    bool operator==(const TokenSpan&) const = default;
};

struct TraceManifestEntry {
    std::string record_id;
    std::vector<std::string> layer_files;  // relative to the trace dir
    std::string attn_file;
    int num_layers = 0;
    int seq_len = 0;
    int hidden_dim = 0;
    int num_heads = 0;
    DType dtype = DType::f32;
    PayloadKind payload_kind = PayloadKind::hidden;
    TokenSpan answer_token_span;
    corpus::PRRecord labels;

    bool operator==(const TraceManifestEntry&) const = default;
};

inline constexpr std::string_view kManifestName = "traces.jsonl";

// --- single tensor files ---

struct Tensor {
    DType dtype = DType::f32;
    std::vector<std::uint64_t> dims;
    std::vector<double> values;  // row-major, widened
};

void write_tensor(const std::filesystem::path& file, DType dtype, std::span<const std::uint64_t> dims,
                  std::span<const double> values);
Tensor read_tensor(const std::filesystem::path& file);

// --- whole traces ---

// Writes the per-layer and attention files under dir/{record_id}/ and returns
// the manifest entry; the caller appends it (see ManifestWriter). The entry's
// labels and answer_token_span are left for the caller to fill.
TraceManifestEntry write_trace(const ActivationTrace& trace, const std::filesystem::path& dir, DType dtype);

// Reads a trace and checks every file against the manifest entry.
ActivationTrace read_trace(const TraceManifestEntry& entry, const std::filesystem::path& dir);

std::string entry_to_json_line(const TraceManifestEntry& entry);
TraceManifestEntry entry_from_json_line(std::string_view line);

// Appends entries to dir/traces.jsonl. Thread-safe; one writer per directory.
class ManifestWriter {
public:
    explicit ManifestWriter(const std::filesystem::path& dir, bool truncate = true);
    void append(const TraceManifestEntry& entry);

private:
    std::filesystem::path path_;
    std::ofstream out_;
    std::mutex mu_;
};

std::vector<TraceManifestEntry> read_trace_manifest(const std::filesystem::path& dir);

}  // namespace geohall::trace
