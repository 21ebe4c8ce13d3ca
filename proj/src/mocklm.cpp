#include "geohall/mocklm.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>

#include "geohall/error.hpp"
#include "geohall/hashing.hpp"

namespace geohall::mocklm {

namespace {

constexpr double kMinDiag = 1e-9;

bool is_alnum(unsigned char c) { return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

void split_into(std::vector<Token>& out, std::string_view text, bool in_response) {
    std::size_t i = 0;
    while (i < text.size()) {
        const auto c = static_cast<unsigned char>(text[i]);
        if (is_space(c)) {
            ++i;
            continue;
        }
        std::size_t j = i + 1;
        if (is_alnum(c)) {
            while (j < text.size() && is_alnum(static_cast<unsigned char>(text[j]))) ++j;
        } else {
            while (j < text.size() && (static_cast<unsigned char>(text[j]) & 0xC0) == 0x80) ++j;
        }
        out.push_back({std::string(text.substr(i, j - i)), in_response, i, j});
        i = j;
    }
}

double parse_double(std::string_view s, std::string_view what) {
    // std::from_chars for double is unavailable in some libstdc++ builds.
    const std::string tmp(s);
    char* end = nullptr;
    const double v = std::strtod(tmp.c_str(), &end);
    if (tmp.empty() || end != tmp.c_str() + tmp.size()) throw UsageError("effect: bad " + std::string(what) + " '" + tmp + "'");
    return v;
}

int parse_int(std::string_view s, std::string_view what) {
    int v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) throw UsageError("effect: bad " + std::string(what) + " '" + std::string(s) + "'");
    return v;
}

}  // namespace

Effect parse_effect(std::string_view text) {
    std::vector<std::string_view> parts;
    std::size_t pos = 0;
    while (true) {
        const auto c = text.find(':', pos);
        parts.push_back(text.substr(pos, c == std::string_view::npos ? std::string_view::npos : c - pos));
        if (c == std::string_view::npos) break;
        pos = c + 1;
    }
    if (parts.size() != 5) throw UsageError("effect '" + std::string(text) + "' must be type:level:layer:scale:shift");
    Effect e;
    e.hall_type = corpus::parse_hall_type(parts[0]);
    e.level = parse_int(parts[1], "level");
    e.target_layer = parse_int(parts[2], "layer");
    e.hidden_scale = parse_double(parts[3], "scale");
    e.attn_diag_shift = parse_double(parts[4], "shift");
    return e;
}

void MockConfig::validate() const {
    if (num_layers < 1 || hidden_dim < 1 || num_heads < 1) throw UsageError("mock: L, d and n must be positive");
    if (!(answer_gain >= 0.0)) throw UsageError("mock: answer_gain must be non-negative");
    for (const auto& e : effects) {
        if (!(e.hidden_scale > 0.0)) throw UsageError("mock effect: hidden_scale must be > 0");
        if (e.target_layer < 0 || e.target_layer >= num_layers)
            throw UsageError("mock effect: target layer " + std::to_string(e.target_layer) + " outside [0, " +
                             std::to_string(num_layers) + ")");
        if (!(std::abs(e.attn_diag_shift) < 1.0)) throw UsageError("mock effect: attn_diag_shift must lie in (-1, 1)");
    }
    for (const auto& [d, s] : domain_hidden_scale)
        if (!(s > 0.0)) throw UsageError("mock: domain scale for " + std::string(corpus::to_string(d)) + " must be > 0");
}

std::vector<Token> tokenize(const corpus::PRRecord& record) {
    std::vector<Token> tokens;
    split_into(tokens, record.prompt_text, false);
    split_into(tokens, record.response_text, true);
    if (record.hall_type == corpus::HallType::incompleteness)
        tokens.push_back({std::string(kEndOfText), true, record.response_text.size(), record.response_text.size()});
    return tokens;
}

trace::TokenSpan answer_token_span(const std::vector<Token>& tokens, const corpus::CharSpan& answer_span) {
    if (answer_span.empty()) return {};
    std::size_t first = tokens.size();
    std::size_t last = 0;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const auto& t = tokens[i];
        if (!t.in_response || t.byte_end <= t.byte_start) continue;
        if (t.byte_start >= answer_span.start && t.byte_end <= answer_span.end) {
            first = std::min(first, i);
            last = i + 1;
        }
    }
    if (first >= last) return {};
    return {first, last};
}

MockOutput mock_extract(const corpus::PRRecord& record, const MockConfig& config) {
    config.validate();
    if (record.response_text.empty()) throw DataError("mock_extract: record " + record.record_id + " has an empty response");

    const auto tokens = tokenize(record);
    const auto m = static_cast<Eigen::Index>(tokens.size());
    const auto d = static_cast<Eigen::Index>(config.hidden_dim);
    const auto span = answer_token_span(tokens, record.answer_char_span);

    double domain_scale = 1.0;
    if (const auto it = config.domain_hidden_scale.find(corpus::source_domain(record));
        it != config.domain_hidden_scale.end())
        domain_scale = it->second;
    double answer_scale = 1.0;
    if (record.perturbation_offset)
        answer_scale += config.answer_gain * static_cast<double>(std::llabs(*record.perturbation_offset));

    MockOutput out;
    auto& tr = out.trace;
    tr.record_id = record.record_id;
    tr.hidden_dim = config.hidden_dim;
    tr.num_heads = config.num_heads;
    tr.payload_kind = trace::PayloadKind::hidden;

    std::vector<std::uint64_t> token_keys(tokens.size());
    for (std::size_t j = 0; j < tokens.size(); ++j)
        token_keys[j] = hash_combine(hash_combine(config.seed, fnv1a64(tokens[j].text)), j);

    for (int l = 0; l < config.num_layers; ++l) {
        trace::Matrix h(m, d);
        trace::Matrix a(config.num_heads, m);
        for (Eigen::Index j = 0; j < m; ++j) {
            const auto ju = static_cast<std::size_t>(j);
            const std::uint64_t key = hash_combine(token_keys[ju], static_cast<std::uint64_t>(l));
            double row_scale = domain_scale;
            if (ju >= span.start && ju < span.end) row_scale *= answer_scale;
            for (Eigen::Index k = 0; k < d; ++k)
                h(j, k) = row_scale * (2.0 * unit_interval(splitmix64(key + static_cast<std::uint64_t>(k))) - 1.0);
            for (int head = 0; head < config.num_heads; ++head) {
                // Position 0 attends only to itself; later tokens keep (j+1)^-u of their mass.
                const double u = 0.2 + 0.8 * unit_interval(hash_combine(key, 0x1000u + static_cast<std::uint64_t>(head)));
                a(head, j) = j == 0 ? 1.0 : std::pow(static_cast<double>(j + 1), -u);
            }
        }
        tr.layers.push_back(std::move(h));
        tr.attn_diag.push_back(std::move(a));
    }

    if (!record.is_perturbation()) {
        for (const auto& e : config.effects) {
            if (e.hall_type != record.hall_type || e.level != record.level) continue;
            const auto t = static_cast<std::size_t>(e.target_layer);
            tr.layers[t] *= e.hidden_scale;
            tr.attn_diag[t] = (tr.attn_diag[t].array() + e.attn_diag_shift).cwiseMax(kMinDiag).cwiseMin(1.0).matrix();
        }
    }
    out.answer_token_span = span;
    return out;
}

}  // namespace geohall::mocklm
