#pragma once

// Geometric statistics over activation traces: Hidden Score (sequence-normalized
// Gram log-determinant), Matrix Entropy (Shannon entropy of the trace-normalized
// Gram spectrum) and Attention Score (mean log self-attention).

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "geohall/trace.hpp"

namespace geohall::geostats {

using trace::Matrix;

enum class Statistic { HS, ME, AS };

std::string_view to_string(Statistic s);
Statistic parse_statistic(std::string_view s);  // accepts "HS", "ME", "AS"

enum StatFlag : std::uint8_t {
    kNoFlags = 0,
    kClampedEigenvalues = 1u << 0,
    kFlooredAttention = 1u << 1,
};
using StatFlags = std::uint8_t;

// "clamped_eigenvalues|floored_attention", or "" for none.
std::string flags_to_string(StatFlags f);
StatFlags parse_flags(std::string_view s);

inline constexpr double kEigenFloorRel = 1e-12;
inline constexpr double kAttentionFloor = 1e-12;

struct SpectrumResult {
    std::vector<double> eigenvalues;  // non-increasing, >= 0
    int clamped_count = 0;            // negative round-off eigenvalues set to 0
    double trace_value = 0.0;
};

// Eigenvalues of H H^T for an m x d matrix H. When d < m the d x d matrix H^T H
// is decomposed instead and the remaining m - d eigenvalues are exact zeros.
SpectrumResult spectrum_from_hidden(const Matrix& hidden);
// Eigenvalues of a symmetric PSD m x m Gram matrix.
SpectrumResult spectrum_from_gram(const Matrix& gram);

struct ScoredValue {
    double value = 0.0;
    StatFlags flags = kNoFlags;
};

// (1/m) sum log(max(lambda_i, 1e-12 * lambda_max)). Throws NumericalError on an
// all-zero spectrum.
ScoredValue hidden_score(const SpectrumResult& spectrum, std::size_t m);

// -sum q_i log q_i with q_i = lambda_i / sum(lambda). Throws NumericalError on zero trace.
double matrix_entropy(const SpectrumResult& spectrum);

// Mean over heads and tokens of log(diag), with entries below 1e-12 floored.
// `diag` is n x m. Throws ValueError for entries outside [0, 1].
ScoredValue attention_score(const Matrix& diag);

struct LayerStatProfile {
    std::string record_id;
    std::string statistic;  // "HS", "ME", "AS" or their "-Norm" variants
    std::vector<double> values;
    std::vector<StatFlags> flags;

    int num_layers() const noexcept { return static_cast<int>(values.size()); }
};

// Token range [start, end) used to restrict a statistic.
struct Span {
    std::size_t start = 0;
    std::size_t end = 0;
};

// Statistic at every layer. With `span`, rows of H (rows and columns of G) and
// columns of the attention diagonals are restricted first. Errors are rethrown
// with the layer index attached.
LayerStatProfile stats_profile(const trace::ActivationTrace& trace, Statistic statistic,
                               std::optional<Span> span = std::nullopt);

// Same as stats_profile for several statistics at once; each layer's spectrum
// is computed a single time. Output order follows `statistics`.
std::vector<LayerStatProfile> stats_profiles(const trace::ActivationTrace& trace,
                                             std::span<const Statistic> statistics,
                                             std::optional<Span> span = std::nullopt);

}  // namespace geohall::geostats
