#include "geohall/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "geohall/error.hpp"
#include "geohall/json_io.hpp"

namespace geohall::corpus {

namespace detail {
extern const std::string_view kBundledHistoryCsv;
}

namespace {

constexpr std::string_view kHistoryVersionLine = "# geohall history table v1";
constexpr std::string_view kHistoryHeader = "region,timeframe,question,year";
constexpr std::string_view kTimes = "\xC3\x97";  // U+00D7 MULTIPLICATION SIGN

constexpr std::array<std::string_view, 8> kCountingWords{"apple", "river", "stone", "cloud",
                                                         "table", "green", "music", "paper"};
constexpr int kMinCount = 3;
constexpr int kMaxCount = 12;
constexpr int kMathLo = 40;
constexpr int kMathHi = 60;  // exclusive

std::string trim_cr(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return std::string(line);
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (true) {
        const auto next = s.find(sep, pos);
        out.emplace_back(s.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos));
        if (next == std::string_view::npos) break;
        pos = next + 1;
    }
    return out;
}

std::optional<std::int64_t> parse_int(std::string_view s) {
    std::int64_t v = 0;
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || ptr != end || s.empty()) return std::nullopt;
    return v;
}

std::string qa_ref_of(const QAPair& qa) {
    return std::string(to_string(qa.domain)) + ":" + std::to_string(qa.index);
}

std::string region_of(const QAPair& qa) {
    return qa.group_key.substr(0, qa.group_key.find('/'));
}

std::string math_question(int a, int b, bool spaced) {
    const std::string times = spaced ? " " + std::string(kTimes) + " " : std::string(kTimes);
    return "What is " + std::to_string(a) + times + std::to_string(b) + "?";
}

// One response sentence. `span` receives the byte range of the answer digits.
std::string sentence(const std::string& question, std::string_view conf_mod, std::int64_t value,
                     std::size_t base_offset, CharSpan* span) {
    std::string s = "The answer to '" + question + "' is ";
    if (!conf_mod.empty()) {
        s += conf_mod;
        s += ' ';
    }
    const std::string digits = std::to_string(value);
    if (span != nullptr) *span = {base_offset + s.size(), base_offset + s.size() + digits.size()};
    s += digits;
    s += '.';
    return s;
}

std::int64_t signed_offset(Rng& rng, OffsetRange r) {
    const auto magnitude = uniform_int(rng, r.lo, r.hi);
    return uniform_int(rng, 0, 1) == 0 ? -magnitude : magnitude;
}

template <class T>
const T& pick(Rng& rng, const std::vector<const T*>& candidates) {
    return *candidates[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(candidates.size()) - 1))];
}

std::string irrelevant_prompt(const QAPair& qa, int level, const Corpora& corpora, Rng& rng) {
    if (level == 3) {
        std::vector<Domain> others;
        for (Domain d : kSourceDomains)
            if (d != qa.domain && !corpora.of(d).empty()) others.push_back(d);
        if (others.empty())
            throw GenerationError("irrelevance level 3 for " + qa_ref_of(qa) + ": no other-domain questions available");
        const Domain d = others[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(others.size()) - 1))];
        const auto& pool = corpora.of(d);
        return pool[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(pool.size()) - 1))].question_text;
    }

    switch (qa.domain) {
        case Domain::math: {
            // b' ranges over the integers: |b'-b| < 5 (level 1) or 5 < |b'-b| < 20 (level 2).
            const OffsetRange r = level == 1 ? OffsetRange{1, 4} : OffsetRange{6, 19};
            const int b_prime = qa.operands[1] + static_cast<int>(signed_offset(rng, r));
            return math_question(qa.operands[0], b_prime, false);
        }
        case Domain::history: {
            std::vector<const QAPair*> candidates;
            const std::string region = region_of(qa);
            for (const auto& other : corpora.history) {
                if (other.index == qa.index) continue;
                const bool same_group = other.group_key == qa.group_key;
                if (level == 1 && same_group) candidates.push_back(&other);
                if (level == 2 && !same_group && region_of(other) == region) candidates.push_back(&other);
            }
            if (candidates.empty())
                throw GenerationError("irrelevance level " + std::to_string(level) + " for " + qa_ref_of(qa) +
                                      ": no candidate history question");
            return pick(rng, candidates).question_text;
        }
        case Domain::counting: {
            std::vector<const QAPair*> candidates;
            for (const auto& other : corpora.counting) {
                if (other.group_key != qa.group_key || other.answer == qa.answer) continue;
                const auto diff = std::abs(other.answer - qa.answer);
                if ((level == 1 && diff <= 3) || (level == 2 && diff > 3)) candidates.push_back(&other);
            }
            if (candidates.empty())
                throw GenerationError("irrelevance level " + std::to_string(level) + " for " + qa_ref_of(qa) +
                                      ": no candidate counting sequence");
            return pick(rng, candidates).question_text;
        }
        case Domain::all:
            break;
    }
    throw GenerationError("irrelevance: QA pair " + qa_ref_of(qa) + " has no source domain");
}

// Byte offset of the n-th code point (or s.size() when n >= length).
std::size_t utf8_prefix_bytes(std::string_view s, std::size_t n) {
    std::size_t count = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if ((static_cast<unsigned char>(s[i]) & 0xC0) != 0x80) {
            if (count == n) return i;
            ++count;
        }
    }
    return s.size();
}

std::uint64_t record_seed(std::uint64_t seed, std::string_view record_id) {
    return hash_combine(seed, fnv1a64(record_id));
}

std::string record_id_for(Domain dataset, int index, HallType type, int level) {
    return std::string(to_string(dataset)) + "-" + std::to_string(index) + "-" + std::string(to_string(type)) +
           "-" + std::to_string(level);
}

}  // namespace

std::string_view to_string(Domain d) {
    switch (d) {
        case Domain::math: return "math";
        case Domain::history: return "history";
        case Domain::counting: return "counting";
        case Domain::all: return "all";
    }
    return "?";
}

std::string_view to_string(HallType t) {
    switch (t) {
        case HallType::baseline: return "baseline";
        case HallType::incorrectness: return "incorrectness";
        case HallType::confidence: return "confidence";
        case HallType::irrelevance: return "irrelevance";
        case HallType::incoherence: return "incoherence";
        case HallType::incompleteness: return "incompleteness";
    }
    return "?";
}

Domain parse_domain(std::string_view s) {
    for (Domain d : {Domain::math, Domain::history, Domain::counting, Domain::all})
        if (to_string(d) == s) return d;
    throw UsageError("unknown domain '" + std::string(s) + "' (expected math, history, counting or all)");
}

HallType parse_hall_type(std::string_view s) {
    for (HallType t : {HallType::baseline, HallType::incorrectness, HallType::confidence, HallType::irrelevance,
                       HallType::incoherence, HallType::incompleteness})
        if (to_string(t) == s) return t;
    throw UsageError("unknown hallucination type '" + std::string(s) + "'");
}

std::size_t utf8_length(std::string_view s) {
    return static_cast<std::size_t>(
        std::count_if(s.begin(), s.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

std::vector<HistoryRow> parse_history_table(std::string_view csv_text, std::string_view source) {
    const std::string src(source);
    std::vector<std::string> lines;
    for (auto& l : split(csv_text, '\n')) lines.push_back(trim_cr(l));
    while (!lines.empty() && lines.back().empty()) lines.pop_back();

    if (lines.empty() || lines[0] != kHistoryVersionLine)
        throw ConfigError(src + ": missing version line '" + std::string(kHistoryVersionLine) + "'");
    if (lines.size() < 2 || lines[1] != kHistoryHeader)
        throw ConfigError(src + ": expected header '" + std::string(kHistoryHeader) + "'");

    std::vector<HistoryRow> rows;
    for (std::size_t i = 2; i < lines.size(); ++i) {
        const auto fields = split(lines[i], ',');
        const std::string where = src + ":" + std::to_string(i + 1);
        if (fields.size() != 4) throw ConfigError(where + ": expected 4 fields, got " + std::to_string(fields.size()));
        if (fields[0].empty() || fields[1].empty() || fields[2].empty())
            throw ConfigError(where + ": empty region, timeframe or question");
        const auto year = parse_int(fields[3]);
        if (!year || *year <= 0) throw ConfigError(where + ": year '" + fields[3] + "' is not a positive CE year");
        rows.push_back({fields[0], fields[1], fields[2], *year});
    }
    if (rows.empty()) throw ConfigError(src + ": history table has no rows");
    return rows;
}

std::vector<HistoryRow> load_history_table(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open history table " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_history_table(ss.str(), path.string());
}

const std::vector<HistoryRow>& bundled_history_table() {
    static const std::vector<HistoryRow> table = parse_history_table(detail::kBundledHistoryCsv, "<bundled history_v1.csv>");
    return table;
}

std::vector<QAPair> generate_qa_corpus(Domain domain, std::uint64_t seed) {
    return generate_qa_corpus(domain, seed, bundled_history_table());
}

std::vector<QAPair> generate_qa_corpus(Domain domain, std::uint64_t seed, std::span<const HistoryRow> history) {
    std::vector<QAPair> out;
    switch (domain) {
        case Domain::math:
            for (int a = kMathLo; a < kMathHi; ++a) {
                for (int b = kMathLo; b < kMathHi; ++b) {
                    QAPair qa;
                    qa.domain = Domain::math;
                    qa.index = static_cast<int>(out.size());
                    qa.question_text = math_question(a, b, false);
                    qa.answer = static_cast<std::int64_t>(a) * b;
                    qa.operands = {a, b};
                    out.push_back(std::move(qa));
                }
            }
            break;
        case Domain::history:
            for (const auto& row : history) {
                QAPair qa;
                qa.domain = Domain::history;
                qa.index = static_cast<int>(out.size());
                qa.question_text = row.question;
                qa.answer = row.year;
                qa.group_key = row.region + "/" + row.timeframe;
                out.push_back(std::move(qa));
            }
            if (out.empty()) throw ConfigError("history table is empty");
            break;
        case Domain::counting: {
            // The seed only decides where commas fall between repetitions.
            Rng rng(hash_combine(seed, fnv1a64("counting")));
            for (std::string_view word : kCountingWords) {
                for (int c = kMinCount; c <= kMaxCount; ++c) {
                    std::string seq(word);
                    for (int k = 1; k < c; ++k) {
                        seq += uniform_int(rng, 0, 3) == 0 ? ", " : " ";
                        seq += word;
                    }
                    QAPair qa;
                    qa.domain = Domain::counting;
                    qa.index = static_cast<int>(out.size());
                    qa.question_text = "How many words are in the sequence \"" + seq + "\"?";
                    qa.answer = c;
                    qa.group_key = std::string(word);
                    out.push_back(std::move(qa));
                }
            }
            break;
        }
        case Domain::all:
            throw UsageError("generate_qa_corpus: `all` is a dataset pseudo-domain, not a QA source");
    }
    return out;
}

const std::vector<QAPair>& Corpora::of(Domain d) const {
    switch (d) {
        case Domain::math: return math;
        case Domain::history: return history;
        case Domain::counting: return counting;
        case Domain::all: break;
    }
    throw UsageError("Corpora::of: `all` has no corpus of its own");
}

Corpora generate_corpora(std::uint64_t seed) { return generate_corpora(seed, bundled_history_table()); }

Corpora generate_corpora(std::uint64_t seed, std::span<const HistoryRow> history) {
    return {generate_qa_corpus(Domain::math, seed, history), generate_qa_corpus(Domain::history, seed, history),
            generate_qa_corpus(Domain::counting, seed, history)};
}

OffsetRange incorrectness_range(Domain domain, int level) {
    if (level < 1 || level > 3) throw UsageError("incorrectness level must be 1, 2 or 3");
    const auto i = static_cast<std::size_t>(level - 1);
    switch (domain) {
        case Domain::math: {
            constexpr std::array<OffsetRange, 3> r{{{1, 9}, {10, 99}, {100, 999}}};
            return r[i];
        }
        case Domain::history: {
            constexpr std::array<OffsetRange, 3> r{{{1, 5}, {6, 20}, {21, 50}}};
            return r[i];
        }
        case Domain::counting:
            return {level, level};
        case Domain::all:
            break;
    }
    throw UsageError("incorrectness_range: `all` has no offset range");
}

std::string_view confidence_word(int level) {
    switch (level) {
        case 1: return "probably";
        case 2: return "maybe";
        case 3: return "not";
        default: throw UsageError("confidence level must be 1, 2 or 3");
    }
}

std::string response_question(const QAPair& qa) {
    if (qa.domain == Domain::math) return math_question(qa.operands[0], qa.operands[1], true);
    return qa.question_text;
}

PRRecord render_record(const QAPair& qa, HallType type, int level, const Corpora& corpora, Rng& rng) {
    if (type == HallType::baseline ? level != 0 : (level < 1 || level > 3))
        throw UsageError("render_record: level " + std::to_string(level) + " invalid for " + std::string(to_string(type)));

    PRRecord r;
    r.record_id = record_id_for(qa.domain, qa.index, type, level);
    r.qa_ref = qa_ref_of(qa);
    r.prompt_text = qa.question_text;
    r.hall_type = type;
    r.level = level;
    const std::string rq = response_question(qa);

    switch (type) {
        case HallType::baseline:
            r.response_text = sentence(rq, "", qa.answer, 0, &r.answer_char_span);
            break;
        case HallType::incorrectness:
            r.answer_offset = signed_offset(rng, incorrectness_range(qa.domain, level));
            r.response_text = sentence(rq, "", qa.answer + r.answer_offset, 0, &r.answer_char_span);
            break;
        case HallType::confidence:
            r.conf_mod = std::string(confidence_word(level));
            r.response_text = sentence(rq, r.conf_mod, qa.answer, 0, &r.answer_char_span);
            break;
        case HallType::irrelevance:
            r.prompt_text = irrelevant_prompt(qa, level, corpora, rng);
            r.response_text = sentence(rq, "", qa.answer, 0, &r.answer_char_span);
            break;
        case HallType::incoherence: {
            // level+1 repetitions; all but the last carry distinct wrong answers.
            // Counting's level-3 range holds only two values, so it draws from ±[1,3].
            const OffsetRange wrong = qa.domain == Domain::counting ? OffsetRange{1, 3}
                                                                    : incorrectness_range(qa.domain, 3);
            std::set<std::int64_t> used;
            std::string text;
            for (int rep = 0; rep < level; ++rep) {
                std::int64_t off = 0;
                do off = signed_offset(rng, wrong);
                while (used.count(off) != 0);
                used.insert(off);
                text += sentence(rq, "", qa.answer + off, text.size(), nullptr);
                text += ' ';
            }
            text += sentence(rq, "", qa.answer, text.size(), &r.answer_char_span);
            r.response_text = std::move(text);
            break;
        }
        case HallType::incompleteness: {
            CharSpan full_span;
            const std::string full = sentence(rq, "", qa.answer, 0, &full_span);
            const std::size_t keep = utf8_length(full) * static_cast<std::size_t>(10 - level) / 10;
            const std::size_t cut = utf8_prefix_bytes(full, keep);
            r.response_text = full.substr(0, cut);
            r.answer_char_span = full_span.end <= cut ? full_span : CharSpan{};
            break;
        }
    }
    return r;
}

std::vector<PRRecord> build_perturbation_set(const PRRecord& record, std::span<const std::int64_t> offsets) {
    if (record.answer_char_span.empty())
        throw DataError("cannot perturb " + record.record_id + ": answer span is empty");
    const auto& span = record.answer_char_span;
    const std::string_view digits =
        std::string_view(record.response_text).substr(span.start, span.end - span.start);
    const auto value = parse_int(digits);
    if (!value) throw DataError("cannot perturb " + record.record_id + ": span does not hold an integer");

    std::vector<PRRecord> out;
    out.reserve(offsets.size());
    for (const auto off : offsets) {
        PRRecord s = record;
        const std::string replacement = std::to_string(*value + off);
        s.response_text = record.response_text.substr(0, span.start) + replacement + record.response_text.substr(span.end);
        s.answer_char_span = {span.start, span.start + replacement.size()};
        s.perturbation_offset = off;
        s.parent_id = record.record_id;
        s.record_id = record.record_id + "-p" + std::to_string(off);
        out.push_back(std::move(s));
    }
    return out;
}

void DatasetSpec::validate() const {
    if (domains.empty()) throw UsageError("dataset spec selects no domains");
    if (levels.empty() && std::any_of(types.begin(), types.end(), [](HallType t) { return t != HallType::baseline; }))
        throw UsageError("dataset spec selects hallucination types but no levels");
    for (int l : levels)
        if (l < 1 || l > 3) throw UsageError("level " + std::to_string(l) + " outside {1,2,3}");
    std::set<std::int64_t> seen;
    for (auto off : perturbation_offsets) {
        if (off == 0) throw UsageError("perturbation offsets must not contain 0");
        if (!seen.insert(off).second) throw UsageError("duplicate perturbation offset " + std::to_string(off));
    }
    if (include_perturbations && perturbation_offsets.size() < 2)
        throw UsageError("perturbation normalization needs at least two offsets");
}

std::vector<QAPair> dataset_qa_pairs(Domain dataset, const Corpora& corpora, std::uint64_t seed) {
    if (dataset != Domain::all) return corpora.of(dataset);

    // Seeded subset: partial Fisher-Yates, then restored to corpus order.
    auto subset = [&](const std::vector<QAPair>& pool, int want, std::string_view tag) {
        if (static_cast<int>(pool.size()) < want)
            throw ConfigError("`all` needs " + std::to_string(want) + " " + std::string(tag) + " QA pairs, corpus has " +
                              std::to_string(pool.size()));
        std::vector<std::size_t> idx(pool.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        Rng rng(hash_combine(seed, fnv1a64(tag)));
        for (int i = 0; i < want; ++i) {
            const auto j = static_cast<std::size_t>(uniform_int(rng, i, static_cast<std::int64_t>(idx.size()) - 1));
            std::swap(idx[static_cast<std::size_t>(i)], idx[j]);
        }
        idx.resize(static_cast<std::size_t>(want));
        std::sort(idx.begin(), idx.end());
        std::vector<QAPair> out;
        for (auto i : idx) out.push_back(pool[i]);
        return out;
    };
    auto out = subset(corpora.math, kAllMath, "all/math");
    for (auto& qa : subset(corpora.history, kAllHistory, "all/history")) out.push_back(std::move(qa));
    for (auto& qa : subset(corpora.counting, kAllCounting, "all/counting")) out.push_back(std::move(qa));
    return out;
}

Dataset build_dataset(const DatasetSpec& spec) {
    spec.validate();
    return build_dataset(spec, generate_corpora(spec.seed));
}

Dataset build_dataset(const DatasetSpec& spec, const Corpora& corpora) {
    spec.validate();
    std::vector<HallType> types;
    for (HallType t : kHallucinationTypes)
        if (std::find(spec.types.begin(), spec.types.end(), t) != spec.types.end()) types.push_back(t);
    std::vector<int> levels(spec.levels);
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    std::vector<Domain> domains;
    for (Domain d : {Domain::math, Domain::history, Domain::counting, Domain::all})
        if (std::find(spec.domains.begin(), spec.domains.end(), d) != spec.domains.end()) domains.push_back(d);

    Dataset ds;
    ds.seed = spec.seed;
    for (Domain dataset : domains) {
        const auto pairs = dataset_qa_pairs(dataset, corpora, spec.seed);
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            const auto& qa = pairs[i];
            auto emit = [&](HallType type, int level) {
                const std::string id = record_id_for(dataset, static_cast<int>(i), type, level);
                Rng rng(record_seed(spec.seed, id));
                PRRecord r = render_record(qa, type, level, corpora, rng);
                r.record_id = id;
                ds.records.push_back(r);
                if (spec.include_perturbations &&
                    (type == HallType::baseline || type == HallType::incorrectness)) {
                    for (auto& s : build_perturbation_set(r, spec.perturbation_offsets))
                        ds.records.push_back(std::move(s));
                }
            };
            emit(HallType::baseline, 0);
            for (HallType t : types)
                for (int l : levels) emit(t, l);
        }
    }
    return ds;
}

Domain dataset_domain(std::string_view record_id) {
    return parse_domain(record_id.substr(0, record_id.find('-')));
}

Domain source_domain(const PRRecord& record) {
    return parse_domain(std::string_view(record.qa_ref).substr(0, record.qa_ref.find(':')));
}

void write_manifest(std::ostream& out, const Dataset& dataset) {
    for (const auto& r : dataset.records) {
        Json j;
        record_to_json(j, r);
        j["seed"] = dataset.seed;
        out << j.dump() << '\n';
    }
}

Dataset read_manifest(std::istream& in) {
    Dataset ds;
    std::string line;
    std::size_t lineno = 0;
    bool have_seed = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        Json j;
        try {
            j = Json::parse(line);
        } catch (const Json::parse_error& e) {
            throw FormatError("dataset manifest line " + std::to_string(lineno) + ": " + e.what());
        }
        if (!j.contains("seed") || !j["seed"].is_number_unsigned())
            throw FormatError("dataset manifest line " + std::to_string(lineno) + ": missing seed");
        const auto seed = j["seed"].get<std::uint64_t>();
        if (have_seed && seed != ds.seed)
            throw FormatError("dataset manifest line " + std::to_string(lineno) + ": mixed seeds");
        ds.seed = seed;
        have_seed = true;
        ds.records.push_back(record_from_json(j));
    }
    return ds;
}

Dataset read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dataset manifest " + path.string());
    return read_manifest(in);
}

}  // namespace geohall::corpus

namespace geohall {

void record_to_json(Json& j, const corpus::PRRecord& r) {
    j["record_id"] = r.record_id;
    j["qa_ref"] = r.qa_ref;
    j["prompt_text"] = r.prompt_text;
    j["response_text"] = r.response_text;
    j["hall_type"] = std::string(corpus::to_string(r.hall_type));
    j["level"] = r.level;
    j["answer_offset"] = r.answer_offset;
    j["conf_mod"] = r.conf_mod;
    j["answer_char_span"] = Json::array({r.answer_char_span.start, r.answer_char_span.end});
    j["perturbation_offset"] = r.perturbation_offset ? Json(*r.perturbation_offset) : Json(nullptr);
    j["parent_id"] = r.parent_id ? Json(*r.parent_id) : Json(nullptr);
}

corpus::PRRecord record_from_json(const Json& j) {
    try {
        corpus::PRRecord r;
        r.record_id = j.at("record_id").get<std::string>();
        r.qa_ref = j.at("qa_ref").get<std::string>();
        r.prompt_text = j.at("prompt_text").get<std::string>();
        r.response_text = j.at("response_text").get<std::string>();
        r.hall_type = corpus::parse_hall_type(j.at("hall_type").get<std::string>());
        r.level = j.at("level").get<int>();
        r.answer_offset = j.at("answer_offset").get<std::int64_t>();
        r.conf_mod = j.at("conf_mod").get<std::string>();
        const auto& span = j.at("answer_char_span");
        r.answer_char_span = {span.at(0).get<std::size_t>(), span.at(1).get<std::size_t>()};
        if (const auto& p = j.at("perturbation_offset"); !p.is_null()) r.perturbation_offset = p.get<std::int64_t>();
        if (const auto& p = j.at("parent_id"); !p.is_null()) r.parent_id = p.get<std::string>();
        return r;
    } catch (const Json::exception& e) {
        throw FormatError(std::string("malformed record fields: ") + e.what());
    } catch (const UsageError& e) {
        throw FormatError(std::string("malformed record fields: ") + e.what());
    }
}

}  // namespace geohall
