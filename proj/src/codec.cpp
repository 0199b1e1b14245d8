#include "sbgen/codec.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "sbgen/util.hpp"

namespace sbgen {

namespace {

// Structural atoms of the sequence grammar.
constexpr std::string_view kPunct = "{}[]:,'#";

bool is_punct(char c) { return kPunct.find(c) != std::string_view::npos; }

bool all_digits(std::string_view s) {
    if (s.empty()) return false;
    return std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

}  // namespace

std::vector<int> default_keypoint_indices_93() {
    std::vector<int> idx;
    idx.reserve(93);
    for (int i = 0; i <= 22; ++i) idx.push_back(i);        // body + feet
    for (int i = 23; i <= 89; i += 2) idx.push_back(i);    // every other face point
    for (int i = 91; i <= 111; ++i) {                      // left hand minus three joints
        if (i == 92 || i == 96 || i == 100) continue;
        idx.push_back(i);
    }
    for (int i = 112; i <= 132; ++i) {                     // right hand minus three joints
        if (i == 113 || i == 117 || i == 121) continue;
        idx.push_back(i);
    }
    return idx;
}

std::vector<int> default_sparse_indices_17() {
    std::vector<int> idx(17);
    for (int i = 0; i < 17; ++i) idx[i] = i;
    return idx;
}

int quantize(double v, double extent, const QuantizerConfig& cfg) {
    if (!(extent > 0.0)) {
        throw std::domain_error("quantize: extent must be positive");
    }
    if (!(v >= 0.0) || !(v <= extent)) {
        throw std::domain_error("quantize: coordinate outside [0, extent]");
    }
    const int bin = static_cast<int>(std::floor(v / extent * cfg.bins)) + 1;
    return std::clamp(bin, 1, cfg.bins);
}

double dequantize(int bin, double extent, const QuantizerConfig& cfg) {
    if (bin < 1 || bin > cfg.bins) {
        throw std::domain_error("dequantize: bin outside [1, m]");
    }
    return (static_cast<double>(bin) - 0.5) / cfg.bins * extent;
}

KeypointSet project_keypoints(const KeypointSet& kps, const std::vector<int>& indices) {
    if (kps.layout != KeypointLayout::WholeBody133 ||
        static_cast<int>(kps.points.size()) != 133) {
        throw std::invalid_argument("project_keypoints: input must be a 133-point set");
    }
    KeypointLayout out_layout;
    switch (indices.size()) {
        case 133: out_layout = KeypointLayout::WholeBody133; break;
        case 93: out_layout = KeypointLayout::Sampled93; break;
        case 17: out_layout = KeypointLayout::Sparse17; break;
        default: throw std::invalid_argument("project_keypoints: index count must be 133, 93 or 17");
    }
    KeypointSet out;
    out.layout = out_layout;
    out.points.reserve(indices.size());
    int prev = -1;
    for (int i : indices) {
        if (i <= prev || i >= 133) {
            throw std::invalid_argument("project_keypoints: indices must be strictly increasing in [0, 133)");
        }
        prev = i;
        out.points.push_back(kps.points[static_cast<size_t>(i)]);
    }
    return out;
}

std::vector<std::string> lex(std::string_view text) {
    std::vector<std::string> out;
    size_t i = 0;
    while (i < text.size()) {
        const char c = text[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        if (is_punct(c)) {
            out.emplace_back(1, c);
            ++i;
            continue;
        }
        size_t j = i + 1;
        while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j])) &&
               !is_punct(text[j])) {
            ++j;
        }
        out.emplace_back(text.substr(i, j - i));
        i = j;
    }
    return out;
}

std::string sanitize_text(std::string_view text) {
    std::string cleaned;
    cleaned.reserve(text.size());
    for (char c : text) {
        if (c == '\'' || c == '#') continue;
        cleaned.push_back(c);
    }
    const std::vector<std::string> toks = lex(cleaned);
    std::string out;
    for (size_t i = 0; i < toks.size(); ++i) {
        if (i) out.push_back(' ');
        out += toks[i];
    }
    return out;
}

// ---------------------------------------------------------------------------
// serialization

namespace {

bool storyboard_has_keypoints(const Storyboard& sb) {
    for (const Shot& shot : sb.shots) {
        for (const CharacterAnnotation& ch : shot.characters) {
            if (ch.tier != RepresentationTier::BoxOnly) return true;
        }
    }
    return false;
}

void append_box_bins(std::string& out, const BoundingBox& box, double w, double h,
                     const QuantizerConfig& qcfg) {
    out += std::to_string(quantize(box.x_min, w, qcfg));
    out.push_back(' ');
    out += std::to_string(quantize(box.y_min, h, qcfg));
    out.push_back(' ');
    out += std::to_string(quantize(box.x_max, w, qcfg));
    out.push_back(' ');
    out += std::to_string(quantize(box.y_max, h, qcfg));
}

// Resolves the keypoint set to emit for a character, projecting 133-point
// annotations down to the configured subset.
KeypointSet character_points(const CharacterAnnotation& ch, const SerializerConfig& scfg) {
    if (!ch.keypoints.has_value()) {
        throw std::invalid_argument("serialize: keypoint tier without keypoints (character '" +
                                    ch.mention + "')");
    }
    const bool whole = ch.tier == RepresentationTier::WholeBody93;
    const KeypointLayout want = whole ? KeypointLayout::Sampled93 : KeypointLayout::Sparse17;
    const std::vector<int>& indices = whole ? scfg.keypoint_index_set : scfg.sparse_index_set;
    if (ch.keypoints->layout == KeypointLayout::WholeBody133) {
        return project_keypoints(*ch.keypoints, indices);
    }
    if (ch.keypoints->layout != want ||
        static_cast<int>(ch.keypoints->points.size()) != layout_size(want)) {
        throw std::invalid_argument("serialize: keypoint layout incompatible with tier (character '" +
                                    ch.mention + "')");
    }
    return *ch.keypoints;
}

std::string render_text(const Storyboard& sb, size_t n_shots, const QuantizerConfig& qcfg,
                        const SerializerConfig& scfg) {
    std::string out = "<s> {'synopses': ";

    if (sb.synopsis.kind == SynopsisKind::Condensed) {
        out += "'" + sanitize_text(sb.synopsis.texts.at(0)) + "'";
    } else {
        out.push_back('[');
        for (size_t i = 0; i < n_shots; ++i) {
            if (i) out += ", ";
            out += "'" + sanitize_text(sb.synopsis.texts.at(i)) + "'";
        }
        out.push_back(']');
    }

    out += ", 'objects': [";
    for (size_t si = 0; si < n_shots; ++si) {
        const Shot& shot = sb.shots[si];
        if (si) out += ", ";
        out.push_back('[');
        for (size_t fi = 0; fi < shot.film_sets.size(); ++fi) {
            const FilmSetAnnotation& fs = shot.film_sets[fi];
            if (fi) out += ", ";
            out += "{'" + sanitize_text(fs.category) + "': [";
            append_box_bins(out, fs.bbox, shot.frame_width, shot.frame_height, qcfg);
            out += "]}";
        }
        out.push_back(']');
    }

    out += "], 'main characters': [";
    for (size_t si = 0; si < n_shots; ++si) {
        const Shot& shot = sb.shots[si];
        if (si) out += ", ";
        out.push_back('[');
        std::map<std::string, int> seen;  // per-shot mention disambiguation
        for (size_t ci = 0; ci < shot.characters.size(); ++ci) {
            const CharacterAnnotation& ch = shot.characters[ci];
            if (ci) out += ", ";
            std::string name = sanitize_text(ch.mention);
            const int k = ++seen[name];
            if (k > 1) name += "#" + std::to_string(k);
            out += "{'" + name + "': [";
            if (ch.tier == RepresentationTier::BoxOnly) {
                append_box_bins(out, ch.bbox, shot.frame_width, shot.frame_height, qcfg);
            } else {
                const KeypointSet kps = character_points(ch, scfg);
                for (size_t ki = 0; ki < kps.points.size(); ++ki) {
                    const Keypoint& kp = kps.points[ki];
                    if (ki) out.push_back(' ');
                    if (kp.visible) {
                        out += std::to_string(quantize(kp.x, shot.frame_width, qcfg));
                        out.push_back(' ');
                        out += std::to_string(quantize(kp.y, shot.frame_height, qcfg));
                    } else {
                        out += "0 0";
                    }
                }
            }
            out += "]}";
        }
        out.push_back(']');
    }
    out += "]} </s>";
    return out;
}

void check_serializer_config(const SerializerConfig& scfg) {
    auto check_indices = [](const std::vector<int>& idx, size_t want, const char* which) {
        if (idx.size() != want) {
            throw std::invalid_argument(std::string("serialize: ") + which + " must hold " +
                                        std::to_string(want) + " indices");
        }
        int prev = -1;
        for (int i : idx) {
            if (i <= prev || i >= 133) {
                throw std::invalid_argument(std::string("serialize: ") + which +
                                            " must be strictly increasing in [0, 133)");
            }
            prev = i;
        }
    };
    check_indices(scfg.keypoint_index_set, 93, "keypoint_index_set");
    check_indices(scfg.sparse_index_set, 17, "sparse_index_set");
    if (scfg.max_tokens < 1 || scfg.max_shots_with_keypoints < 1 || scfg.max_shots_box_only < 1) {
        throw std::invalid_argument("serialize: budgets must be positive");
    }
}

}  // namespace

PromptSequence serialize(const Storyboard& sb, const QuantizerConfig& qcfg,
                         const SerializerConfig& scfg) {
    check_serializer_config(scfg);
    if (sb.shots.empty()) {
        throw std::invalid_argument("serialize: storyboard has no shots");
    }
    if (sb.synopsis.kind == SynopsisKind::Condensed && sb.synopsis.texts.size() != 1) {
        throw std::invalid_argument("serialize: condensed synopsis must hold one text");
    }
    if (sb.synopsis.kind == SynopsisKind::ShotByShot &&
        sb.synopsis.texts.size() != sb.shots.size()) {
        throw std::invalid_argument("serialize: shot-by-shot synopsis arity mismatch");
    }

    const int cap = storyboard_has_keypoints(sb) ? scfg.max_shots_with_keypoints
                                                 : scfg.max_shots_box_only;
    size_t n = std::min(sb.shots.size(), static_cast<size_t>(cap));

    for (; n >= 1; --n) {
        std::string text = render_text(sb, n, qcfg, scfg);
        if (lex(text).size() <= static_cast<size_t>(scfg.max_tokens)) {
            return PromptSequence{std::move(text)};
        }
    }
    throw std::length_error("serialize: a single shot exceeds the token budget");
}

// ---------------------------------------------------------------------------
// vocabulary

Vocabulary Vocabulary::build(const std::vector<PromptSequence>& corpus, int min_count, int bins) {
    if (corpus.empty()) {
        throw std::invalid_argument("Vocabulary::build: empty corpus");
    }
    if (bins < 2) {
        throw std::invalid_argument("Vocabulary::build: bins must be >= 2");
    }
    min_count = std::max(min_count, 1);

    Vocabulary v;
    v.bins_ = bins;
    v.words_ = {std::string(kPad), std::string(kUnk), std::string(kStart), std::string(kEnd),
                std::string(kSep)};
    for (char c : kPunct) v.words_.emplace_back(1, c);
    for (int b = 0; b <= bins; ++b) v.words_.push_back(std::to_string(b));  // "0" is the
                                                                            // invisible sentinel
    v.index_words();

    std::map<std::string, long> counts;
    for (const PromptSequence& seq : corpus) {
        for (std::string& tok : lex(seq.text)) {
            if (v.word_to_id_.count(tok)) continue;
            ++counts[std::move(tok)];
        }
    }
    for (const auto& [word, count] : counts) {  // std::map iterates lexicographically
        if (count >= min_count) {
            v.words_.push_back(word);
        }
    }
    v.index_words();
    return v;
}

Vocabulary Vocabulary::from_words(std::vector<std::string> words) {
    Vocabulary v;
    v.words_ = std::move(words);
    v.index_words();
    for (std::string_view sp : {kPad, kUnk, kStart, kEnd, kSep}) {
        if (!v.word_to_id_.count(std::string(sp))) {
            throw std::invalid_argument("Vocabulary::from_words: missing special token");
        }
    }
    // Recover m: the largest n such that "1".."n" are all present.
    int bins = 0;
    while (v.word_to_id_.count(std::to_string(bins + 1))) ++bins;
    v.bins_ = bins;
    return v;
}

void Vocabulary::index_words() {
    word_to_id_.clear();
    word_to_id_.reserve(words_.size());
    for (size_t i = 0; i < words_.size(); ++i) {
        if (!word_to_id_.emplace(words_[i], static_cast<int>(i)).second) {
            throw std::invalid_argument("Vocabulary: duplicate word '" + words_[i] + "'");
        }
    }
    pad_id_ = word_to_id_.at(std::string(kPad));
    unk_id_ = word_to_id_.at(std::string(kUnk));
    start_id_ = word_to_id_.at(std::string(kStart));
    end_id_ = word_to_id_.at(std::string(kEnd));
    sep_id_ = word_to_id_.at(std::string(kSep));
}

uint64_t Vocabulary::hash() const {
    uint64_t h = 0xcbf29ce484222325ull;
    for (const std::string& w : words_) {
        h = fnv1a64(w, h);
        h = fnv1a64(std::string_view("\x1f", 1), h);  // separator keeps word boundaries unambiguous
    }
    return h;
}

TokenSequence tokenize(const PromptSequence& seq, const Vocabulary& v) {
    TokenSequence out;
    const std::vector<std::string> toks = lex(seq.text);
    out.ids.reserve(toks.size());
    for (const std::string& tok : toks) {
        out.ids.push_back(v.id_of(tok));
    }
    return out;
}

std::string detokenize(const TokenSequence& t, const Vocabulary& v) {
    std::string out;
    for (size_t i = 0; i < t.ids.size(); ++i) {
        if (i) out.push_back(' ');
        out += v.word_of(t.ids[i]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// parsing

const char* to_string(ParseError::Kind kind) {
    switch (kind) {
        case ParseError::Kind::UnbalancedStructure: return "unbalanced_structure";
        case ParseError::Kind::WrongArity: return "wrong_arity";
        case ParseError::Kind::BinOutOfRange: return "bin_out_of_range";
        case ParseError::Kind::ShotCountMismatch: return "shot_count_mismatch";
    }
    return "?";
}

namespace {

struct ParsedEntry {
    std::string name;
    std::vector<int> values;
    size_t values_at = 0;  // token index of the first value
};

class Parser {
public:
    Parser(std::vector<std::string> toks, const QuantizerConfig& qcfg,
           const SerializerConfig& scfg)
        : toks_(std::move(toks)), qcfg_(qcfg), scfg_(scfg) {}

    ParseOutcome run();

private:
    using Kind = ParseError::Kind;

    bool fail(Kind kind, std::string message, size_t at) {
        if (!error_) {
            error_ = ParseError{kind, at, std::move(message)};
        }
        return false;
    }

    bool at_end() const { return pos_ >= toks_.size(); }
    const std::string& peek() const {
        static const std::string empty;
        return at_end() ? empty : toks_[pos_];
    }

    bool expect(std::string_view tok) {
        if (at_end() || toks_[pos_] != tok) {
            return fail(Kind::UnbalancedStructure,
                        "expected '" + std::string(tok) + "'" +
                            (at_end() ? " but the sequence ended" : ", found '" + peek() + "'"),
                        pos_);
        }
        ++pos_;
        return true;
    }

    // Collects the raw tokens between a pair of quote atoms.
    bool parse_quoted(std::vector<std::string>& out) {
        if (!expect("'")) return false;
        out.clear();
        while (!at_end() && toks_[pos_] != "'") {
            out.push_back(toks_[pos_]);
            ++pos_;
        }
        return expect("'");
    }

    bool parse_quoted_joined(std::string& out) {
        std::vector<std::string> raw;
        if (!parse_quoted(raw)) return false;
        out = join(raw);
        return true;
    }

    static std::string join(const std::vector<std::string>& words) {
        std::string out;
        for (size_t i = 0; i < words.size(); ++i) {
            if (i) out.push_back(' ');
            out += words[i];
        }
        return out;
    }

    bool parse_key(std::string_view want) {
        const size_t at = pos_;
        std::string key;
        if (!parse_quoted_joined(key)) return false;
        if (key != want) {
            return fail(Kind::UnbalancedStructure,
                        "expected key '" + std::string(want) + "', found '" + key + "'", at);
        }
        return expect(":");
    }

    // Bracketed run of integer atoms: [ n n n ... ]
    bool parse_int_list(std::vector<int>& out, size_t& values_at) {
        if (!expect("[")) return false;
        values_at = pos_;
        out.clear();
        while (!at_end() && toks_[pos_] != "]") {
            const std::string& w = toks_[pos_];
            int value = 0;
            const auto [p, ec] = std::from_chars(w.data(), w.data() + w.size(), value);
            if (ec != std::errc() || p != w.data() + w.size()) {
                return fail(Kind::UnbalancedStructure, "expected an integer atom, found '" + w + "'",
                            pos_);
            }
            out.push_back(value);
            ++pos_;
        }
        return expect("]");
    }

    // { 'name': [ n ... ] }
    bool parse_entry(ParsedEntry& entry) {
        if (!expect("{")) return false;
        std::vector<std::string> raw;
        if (!parse_quoted(raw)) return false;
        // Strip a trailing "#k" disambiguator.
        if (raw.size() >= 2 && raw[raw.size() - 2] == "#" && all_digits(raw.back())) {
            raw.resize(raw.size() - 2);
        }
        entry.name = join(raw);
        if (!expect(":")) return false;
        if (!parse_int_list(entry.values, entry.values_at)) return false;
        return expect("}");
    }

    // [ [entry, ...], [entry, ...], ... ]
    bool parse_shot_lists(std::vector<std::vector<ParsedEntry>>& shots) {
        if (!expect("[")) return false;
        shots.clear();
        while (!at_end() && toks_[pos_] != "]") {
            if (!shots.empty() && !expect(",")) return false;
            if (!expect("[")) return false;
            std::vector<ParsedEntry> entries;
            while (!at_end() && toks_[pos_] != "]") {
                if (!entries.empty() && !expect(",")) return false;
                ParsedEntry entry;
                if (!parse_entry(entry)) return false;
                entries.push_back(std::move(entry));
            }
            if (!expect("]")) return false;
            shots.push_back(std::move(entries));
        }
        return expect("]");
    }

    bool check_box_bins(const ParsedEntry& entry) {
        for (size_t i = 0; i < entry.values.size(); ++i) {
            const int b = entry.values[i];
            if (b < 1 || b > qcfg_.bins) {
                return fail(Kind::BinOutOfRange,
                            "box value " + std::to_string(b) + " outside [1, " +
                                std::to_string(qcfg_.bins) + "]",
                            entry.values_at + i);
            }
        }
        return true;
    }

    BoundingBox box_from_bins(const std::vector<int>& v) const {
        return BoundingBox{dequantize(v[0], qcfg_.canvas, qcfg_),
                           dequantize(v[1], qcfg_.canvas, qcfg_),
                           dequantize(v[2], qcfg_.canvas, qcfg_),
                           dequantize(v[3], qcfg_.canvas, qcfg_)};
    }

    bool character_from_entry(const ParsedEntry& entry, CharacterAnnotation& ch);

    std::vector<std::string> toks_;
    size_t pos_ = 0;
    const QuantizerConfig& qcfg_;
    const SerializerConfig& scfg_;
    std::optional<ParseError> error_;
};

bool Parser::character_from_entry(const ParsedEntry& entry, CharacterAnnotation& ch) {
    ch.mention = entry.name;
    const size_t n = entry.values.size();
    if (n == 4) {
        if (!check_box_bins(entry)) return false;
        ch.tier = RepresentationTier::BoxOnly;
        ch.bbox = box_from_bins(entry.values);
        return true;
    }
    if (n != 34 && n != 186) {
        return fail(Kind::WrongArity,
                    "character block holds " + std::to_string(n) +
                        " values; expected 4, 34 or 186",
                    entry.values_at);
    }
    const bool whole = n == 186;
    ch.tier = whole ? RepresentationTier::WholeBody93 : RepresentationTier::Sparse17;
    KeypointSet kps;
    kps.layout = whole ? KeypointLayout::Sampled93 : KeypointLayout::Sparse17;
    kps.points.reserve(n / 2);

    double x_min = qcfg_.canvas, y_min = qcfg_.canvas, x_max = 0.0, y_max = 0.0;
    bool any_visible = false;
    for (size_t i = 0; i < n; i += 2) {
        const int bx = entry.values[i];
        const int by = entry.values[i + 1];
        if (bx == 0 && by == 0) {
            kps.points.push_back(Keypoint{0.0, 0.0, false});
            continue;
        }
        if (bx == 0 || by == 0) {
            return fail(Kind::BinOutOfRange, "keypoint sentinel 0 must appear as a 0 0 pair",
                        entry.values_at + i);
        }
        for (size_t j = i; j < i + 2; ++j) {
            const int b = entry.values[j];
            if (b < 1 || b > qcfg_.bins) {
                return fail(Kind::BinOutOfRange,
                            "keypoint value " + std::to_string(b) + " outside [1, " +
                                std::to_string(qcfg_.bins) + "]",
                            entry.values_at + j);
            }
        }
        Keypoint kp;
        kp.x = dequantize(bx, qcfg_.canvas, qcfg_);
        kp.y = dequantize(by, qcfg_.canvas, qcfg_);
        kp.visible = true;
        x_min = std::min(x_min, kp.x);
        y_min = std::min(y_min, kp.y);
        x_max = std::max(x_max, kp.x);
        y_max = std::max(y_max, kp.y);
        any_visible = true;
        kps.points.push_back(kp);
    }
    // The sequence carries no explicit box for keypoint characters; the hull
    // of the visible points stands in for downstream rendering and metrics.
    ch.bbox = any_visible ? BoundingBox{x_min, y_min, x_max, y_max}
                          : BoundingBox{0.0, 0.0, qcfg_.canvas, qcfg_.canvas};
    ch.keypoints = std::move(kps);
    return true;
}

ParseOutcome Parser::run() {
    Synopsis synopsis;
    std::vector<std::vector<ParsedEntry>> object_shots;
    std::vector<std::vector<ParsedEntry>> character_shots;

    const bool ok = [&]() -> bool {
        if (!expect(Vocabulary::kStart)) return false;

        // Optional instruction segment: word* <sep>
        if (!at_end() && peek() != "{") {
            while (!at_end() && toks_[pos_] != Vocabulary::kSep) {
                if (toks_[pos_] == "{") {
                    return fail(Kind::UnbalancedStructure,
                                "instruction segment must end with the separator token", pos_);
                }
                ++pos_;
            }
            if (!expect(Vocabulary::kSep)) return false;
        }

        if (!expect("{")) return false;
        if (!parse_key("synopses")) return false;

        if (peek() == "'") {
            synopsis.kind = SynopsisKind::Condensed;
            std::string text;
            if (!parse_quoted_joined(text)) return false;
            synopsis.texts.push_back(std::move(text));
        } else if (peek() == "[") {
            synopsis.kind = SynopsisKind::ShotByShot;
            ++pos_;
            while (!at_end() && toks_[pos_] != "]") {
                if (!synopsis.texts.empty() && !expect(",")) return false;
                std::string text;
                if (!parse_quoted_joined(text)) return false;
                synopsis.texts.push_back(std::move(text));
            }
            if (!expect("]")) return false;
        } else {
            return fail(Kind::UnbalancedStructure, "expected a synopsis string or list", pos_);
        }

        if (!expect(",")) return false;
        if (!parse_key("objects")) return false;
        if (!parse_shot_lists(object_shots)) return false;

        if (!expect(",")) return false;
        if (!parse_key("main characters")) return false;
        if (!parse_shot_lists(character_shots)) return false;

        if (!expect("}")) return false;
        if (!expect(Vocabulary::kEnd)) return false;
        if (!at_end()) {
            return fail(Kind::UnbalancedStructure, "trailing tokens after the end token", pos_);
        }

        if (object_shots.size() != character_shots.size()) {
            return fail(Kind::ShotCountMismatch,
                        "'objects' holds " + std::to_string(object_shots.size()) +
                            " shots, 'main characters' holds " +
                            std::to_string(character_shots.size()),
                        0);
        }
        if (object_shots.empty()) {
            return fail(Kind::WrongArity, "storyboard must contain at least one shot", 0);
        }
        if (synopsis.kind == SynopsisKind::ShotByShot &&
            synopsis.texts.size() != object_shots.size()) {
            return fail(Kind::ShotCountMismatch,
                        "shot-by-shot synopsis holds " + std::to_string(synopsis.texts.size()) +
                            " texts for " + std::to_string(object_shots.size()) + " shots",
                        0);
        }
        return true;
    }();

    if (!ok) {
        ParseOutcome out;
        out.error = error_;
        return out;
    }

    Storyboard sb;
    sb.id = "decoded";
    sb.synopsis = std::move(synopsis);

    std::map<std::string, int> mention_ids;
    for (size_t si = 0; si < object_shots.size(); ++si) {
        Shot shot;
        shot.frame_width = qcfg_.canvas;
        shot.frame_height = qcfg_.canvas;

        for (const ParsedEntry& entry : object_shots[si]) {
            if (entry.values.size() != 4) {
                ParseOutcome out;
                fail(Kind::WrongArity,
                     "film-set block holds " + std::to_string(entry.values.size()) +
                         " values; expected 4",
                     entry.values_at);
                out.error = error_;
                return out;
            }
            if (!check_box_bins(entry)) {
                ParseOutcome out;
                out.error = error_;
                return out;
            }
            shot.film_sets.push_back(FilmSetAnnotation{entry.name, box_from_bins(entry.values)});
        }

        for (const ParsedEntry& entry : character_shots[si]) {
            CharacterAnnotation ch;
            if (!character_from_entry(entry, ch)) {
                ParseOutcome out;
                out.error = error_;
                return out;
            }
            auto [it, inserted] =
                mention_ids.emplace(ch.mention, static_cast<int>(mention_ids.size()));
            ch.character_id = it->second;
            shot.characters.push_back(std::move(ch));
        }
        sb.shots.push_back(std::move(shot));
    }

    ParseOutcome out;
    out.storyboard = std::move(sb);
    return out;
}

}  // namespace

ParseOutcome parse(std::string_view text, const QuantizerConfig& qcfg,
                   const SerializerConfig& scfg) {
    return Parser(lex(text), qcfg, scfg).run();
}

std::string synopsis_prefix(const Synopsis& synopsis) {
    std::string out = "<s> {'synopses': ";
    if (synopsis.kind == SynopsisKind::Condensed) {
        out += "'" + sanitize_text(synopsis.texts.at(0)) + "'";
    } else {
        out.push_back('[');
        for (size_t i = 0; i < synopsis.texts.size(); ++i) {
            if (i) out += ", ";
            out += "'" + sanitize_text(synopsis.texts[i]) + "'";
        }
        out.push_back(']');
    }
    out.push_back(',');
    return out;
}

std::string instruction_prefix(std::string_view instruction) {
    return "<s> " + sanitize_text(instruction) + " <sep>";
}

}  // namespace sbgen
