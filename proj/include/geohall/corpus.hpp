#pragma once

// Synthetic QA corpora and prompt/response rendering for the three task
// domains (math, history, counting) and five hallucination types.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "geohall/hashing.hpp"

namespace geohall::corpus {

// `all` is a dataset pseudo-domain; QAPair::domain is never `all`.
enum class Domain { math, history, counting, all };

enum class HallType { baseline, incorrectness, confidence, irrelevance, incoherence, incompleteness };

std::string_view to_string(Domain d);
std::string_view to_string(HallType t);
Domain parse_domain(std::string_view s);      // throws UsageError
HallType parse_hall_type(std::string_view s);  // throws UsageError

inline constexpr std::array<Domain, 3> kSourceDomains{Domain::math, Domain::history, Domain::counting};
inline constexpr std::array<HallType, 5> kHallucinationTypes{
    HallType::incorrectness, HallType::confidence, HallType::irrelevance, HallType::incoherence,
    HallType::incompleteness};

struct QAPair {
    Domain domain = Domain::math;
    int index = 0;  // position within its domain corpus
    std::string question_text;
    std::int64_t answer = 0;
    // history: "region/timeframe"; counting: the repeated word; math: empty.
    std::string group_key;
    // math only: the two factors.
    std::array<int, 2> operands{0, 0};
};

// Half-open byte range into a response string.
struct CharSpan {
    std::size_t start = 0;
    std::size_t end = 0;
    bool empty() const noexcept { return end <= start; }
    bool operator==(const CharSpan&) const = default;
};

struct PRRecord {
    std::string record_id;
    std::string qa_ref;  // "{domain}:{index}"
    std::string prompt_text;
    std::string response_text;
    HallType hall_type = HallType::baseline;
    int level = 0;
    std::int64_t answer_offset = 0;
    std::string conf_mod;
    CharSpan answer_char_span;
    std::optional<std::int64_t> perturbation_offset;
    std::optional<std::string> parent_id;

    bool is_perturbation() const noexcept { return perturbation_offset.has_value(); }
    bool operator==(const PRRecord&) const = default;
};

struct HistoryRow {
    std::string region;
    std::string timeframe;
    std::string question;
    std::int64_t year = 0;
};

// Parses the versioned history CSV. Throws ConfigError naming `source` on any
// structural problem (missing version line, wrong header, bad field count,
// non-numeric year, empty table).
std::vector<HistoryRow> parse_history_table(std::string_view csv_text, std::string_view source);
std::vector<HistoryRow> load_history_table(const std::filesystem::path& path);
const std::vector<HistoryRow>& bundled_history_table();

std::vector<QAPair> generate_qa_corpus(Domain domain, std::uint64_t seed);
std::vector<QAPair> generate_qa_corpus(Domain domain, std::uint64_t seed,
                                       std::span<const HistoryRow> history);

struct Corpora {
    std::vector<QAPair> math;
    std::vector<QAPair> history;
    std::vector<QAPair> counting;

    const std::vector<QAPair>& of(Domain d) const;
};

Corpora generate_corpora(std::uint64_t seed);
Corpora generate_corpora(std::uint64_t seed, std::span<const HistoryRow> history);

// Magnitude range [lo, hi] of incorrectness offsets for a domain and level.
struct OffsetRange {
    std::int64_t lo;
    std::int64_t hi;
};
OffsetRange incorrectness_range(Domain domain, int level);

// Confidence modifier word for a level in {1,2,3}.
std::string_view confidence_word(int level);

// Question as it appears inside the response sentence ("46 × 53" spacing for math).
std::string response_question(const QAPair& qa);

// Renders one prompt/response record. The record id is
// "{qa.domain}-{qa.index}-{type}-{level}"; build_dataset rewrites it for `all`.
PRRecord render_record(const QAPair& qa, HallType type, int level, const Corpora& corpora, Rng& rng);

// Siblings of `record` with the final answer replaced by answer + offset, one
// per offset, in offset order. Throws DataError when the answer span is empty.
std::vector<PRRecord> build_perturbation_set(const PRRecord& record, std::span<const std::int64_t> offsets);

struct DatasetSpec {
    std::vector<Domain> domains;
    std::vector<HallType> types;  // `baseline` entries are ignored; baselines are always emitted
    std::vector<int> levels{1, 2, 3};
    std::uint64_t seed = 0;
    bool include_perturbations = false;
    std::vector<std::int64_t> perturbation_offsets{-5, -2, -1, 1, 2, 5};

    // Throws UsageError on empty selections, bad levels, zero or duplicate offsets.
    void validate() const;
};

struct Dataset {
    std::uint64_t seed = 0;
    std::vector<PRRecord> records;
};

// Numbers of QA pairs drawn per source domain into the `all` dataset.
inline constexpr int kAllMath = 75;
inline constexpr int kAllHistory = 70;
inline constexpr int kAllCounting = 80;

// QA pairs making up a dataset domain (the seeded subset for `all`).
std::vector<QAPair> dataset_qa_pairs(Domain dataset, const Corpora& corpora, std::uint64_t seed);

Dataset build_dataset(const DatasetSpec& spec);
Dataset build_dataset(const DatasetSpec& spec, const Corpora& corpora);

// Dataset domain of a record, recovered from its id prefix.
Domain dataset_domain(std::string_view record_id);
// Source domain of a record, recovered from its qa_ref.
Domain source_domain(const PRRecord& record);

// JSON-lines dataset manifest, one record per line with the dataset seed.
void write_manifest(std::ostream& out, const Dataset& dataset);
Dataset read_manifest(std::istream& in);
Dataset read_manifest(const std::filesystem::path& path);

// Number of Unicode code points in a UTF-8 string.
std::size_t utf8_length(std::string_view s);

}  // namespace geohall::corpus
