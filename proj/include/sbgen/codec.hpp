#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sbgen/types.hpp"

namespace sbgen {

struct QuantizerConfig {
    int bins = 512;        // m: coordinates are discretized into words 1..m
    double canvas = 512.0; // decoded coordinates land on this square extent
};

// Default index sets into the 133-point whole-body layout. The 17-point set
// is the body joints; the 93-point set keeps body and feet and thins out the
// face and hand points. Both are plain data and can be replaced wholesale
// through SerializerConfig.
std::vector<int> default_keypoint_indices_93();
std::vector<int> default_sparse_indices_17();

struct SerializerConfig {
    int max_tokens = 2560;
    int max_shots_with_keypoints = 4;
    int max_shots_box_only = 10;
    std::vector<int> keypoint_index_set = default_keypoint_indices_93();
    std::vector<int> sparse_index_set = default_sparse_indices_17();
};

// bin = clamp(floor(v / extent * m) + 1, 1, m). Monotone in v.
// Throws std::domain_error when v is outside [0, extent] or extent <= 0.
int quantize(double v, double extent, const QuantizerConfig& cfg);

// coordinate = (bin - 0.5) / m * extent. Throws std::domain_error on a bin
// outside [1, m].
double dequantize(int bin, double extent, const QuantizerConfig& cfg);

// Projects a 133-point set onto the given strictly increasing index list.
// The output layout is inferred from the index count (133, 93 or 17).
KeypointSet project_keypoints(const KeypointSet& kps, const std::vector<int>& indices);

// The serialized string form of one storyboard.
struct PromptSequence {
    std::string text;
};

// Splits text into atoms: structural punctuation characters are single
// tokens, everything else separated by whitespace is a word. Whitespace
// itself never survives, so any respacing of a sequence lexes identically.
std::vector<std::string> lex(std::string_view text);

// Collapses a free-form text field to its canonical token spelling: quote
// and hash characters are dropped (they delimit strings and disambiguators
// in the sequence grammar) and the remaining atoms are joined with single
// spaces.
std::string sanitize_text(std::string_view text);

// Serializes a validated storyboard into its sequence form. Trailing shots
// are dropped whole until the shot cap and the token budget are satisfied.
// Throws std::invalid_argument on structurally unusable input and
// std::length_error when even a single shot exceeds max_tokens.
PromptSequence serialize(const Storyboard& sb, const QuantizerConfig& qcfg,
                         const SerializerConfig& scfg);

class Vocabulary {
public:
    static constexpr std::string_view kPad = "<pad>";
    static constexpr std::string_view kUnk = "<unk>";
    static constexpr std::string_view kStart = "<s>";
    static constexpr std::string_view kEnd = "</s>";
    static constexpr std::string_view kSep = "<sep>";

    // Always contains the specials, the structural punctuation atoms, the
    // zero sentinel and the bin words 1..bins; corpus words are added when
    // they occur at least min_count times. Throws on an empty corpus.
    static Vocabulary build(const std::vector<PromptSequence>& corpus, int min_count,
                            int bins = 512);

    // Rebuilds from a dense id -> word list (checkpoint loading).
    static Vocabulary from_words(std::vector<std::string> words);

    int id_of(std::string_view word) const {
        auto it = word_to_id_.find(std::string(word));
        return it == word_to_id_.end() ? unk_id_ : it->second;
    }
    bool contains(std::string_view word) const {
        return word_to_id_.count(std::string(word)) > 0;
    }
    const std::string& word_of(int id) const { return words_.at(static_cast<size_t>(id)); }
    int size() const { return static_cast<int>(words_.size()); }
    const std::vector<std::string>& words() const { return words_; }

    int pad_id() const { return pad_id_; }
    int unk_id() const { return unk_id_; }
    int start_id() const { return start_id_; }
    int end_id() const { return end_id_; }
    int sep_id() const { return sep_id_; }
    int bins() const { return bins_; }

    uint64_t hash() const;

private:
    std::vector<std::string> words_;
    std::unordered_map<std::string, int> word_to_id_;
    int pad_id_ = 0, unk_id_ = 1, start_id_ = 2, end_id_ = 3, sep_id_ = 4;
    int bins_ = 0;

    void index_words();
};

struct TokenSequence {
    std::vector<int> ids;
};

TokenSequence tokenize(const PromptSequence& seq, const Vocabulary& v);
std::string detokenize(const TokenSequence& t, const Vocabulary& v);

struct ParseError {
    enum class Kind {
        UnbalancedStructure,
        WrongArity,
        BinOutOfRange,
        ShotCountMismatch,
    };
    Kind kind = Kind::UnbalancedStructure;
    size_t token_index = 0;  // offending position in the lexed token stream
    std::string message;
};

const char* to_string(ParseError::Kind kind);

struct ParseOutcome {
    std::optional<Storyboard> storyboard;
    std::optional<ParseError> error;
    bool ok() const { return storyboard.has_value(); }
};

// Decodes a sequence back into a storyboard layout on the canvas extent.
// The grammar is positional, so bin words and text words never clash; an
// optional instruction segment between the start token and the opening
// brace is accepted and ignored. Never throws on malformed input.
ParseOutcome parse(std::string_view text, const QuantizerConfig& qcfg,
                   const SerializerConfig& scfg);

// Prefix helpers for the conditional sampling modes: the leading part of a
// sequence up to and including the synopsis section, and an instruction
// prefix ending in the separator token.
std::string synopsis_prefix(const Synopsis& synopsis);
std::string instruction_prefix(std::string_view instruction);

}  // namespace sbgen
