#pragma once

// Deterministic stand-in for a causal LM: hash-keyed hidden states and
// attention diagonals, with optional injected effects, so the statistics and
// evaluation pipeline can run without a model.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "geohall/corpus.hpp"
#include "geohall/trace.hpp"

namespace geohall::mocklm {

struct Effect {
    corpus::HallType hall_type = corpus::HallType::incorrectness;
    int level = 1;
    int target_layer = 0;
    double hidden_scale = 1.0;      // multiplies every hidden state at target_layer
    double attn_diag_shift = 0.0;   // added to attention diagonals at target_layer
};

// "type:level:layer:scale:shift", e.g. "incorrectness:3:5:1.5:0".
Effect parse_effect(std::string_view text);

struct MockConfig {
    int num_layers = 8;
    int hidden_dim = 32;
    int num_heads = 4;
    std::uint64_t seed = 0;
    std::vector<Effect> effects;
    // Source-domain hidden-state scale at every layer; shifts HS by 2 log(scale).
    std::map<corpus::Domain, double> domain_hidden_scale;
    // Perturbation siblings scale answer-token states by 1 + answer_gain * |offset|.
    double answer_gain = 0.1;

    void validate() const;  // throws UsageError
};

struct Token {
    std::string text;
    bool in_response = false;
    std::size_t byte_start = 0;  // within prompt or response text
    std::size_t byte_end = 0;
};

inline constexpr std::string_view kEndOfText = "<|endoftext|>";

// Whitespace/punctuation split of prompt then response. Alphanumeric runs form
// one token, every other non-space code point is its own token. Incompleteness
// records end with kEndOfText.
std::vector<Token> tokenize(const corpus::PRRecord& record);

// Token range covering the answer digits (empty when the answer span is empty).
trace::TokenSpan answer_token_span(const std::vector<Token>& tokens, const corpus::CharSpan& answer_span);

struct MockOutput {
    trace::ActivationTrace trace;
    trace::TokenSpan answer_token_span;
};

// Effects apply to records whose (hall_type, level) match and which are not
// perturbation siblings. Throws DataError on an empty response.
MockOutput mock_extract(const corpus::PRRecord& record, const MockConfig& config);

}  // namespace geohall::mocklm
