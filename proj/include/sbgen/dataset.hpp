#pragma once

#include <string>
#include <vector>

#include "sbgen/types.hpp"

namespace sbgen {

// One storyboard per JSON document; see docs/formats.md for the schema.
std::string storyboard_to_json(const Storyboard& sb);
Storyboard storyboard_from_json(const std::string& text);  // throws std::runtime_error

Storyboard load_storyboard(const std::string& path);
void save_storyboard(const Storyboard& sb, const std::string& path);

// Plain-text index: one record file per line, optionally followed by a tab
// and a split tag (train / testA / testB). '#' starts a comment. Relative
// paths resolve against the manifest's directory.
struct DatasetManifest {
    std::string root;
    struct Entry {
        std::string file;
        std::string split;  // empty = assign automatically
    };
    std::vector<Entry> entries;

    static DatasetManifest read(const std::string& path);
    std::string to_text() const;
    std::string resolve(const Entry& entry) const;
};

struct LoadReport {
    std::vector<Storyboard> storyboards;  // manifest order, minus failed records
    std::vector<std::string> tags;        // split tag per loaded storyboard
    struct Problem {
        std::string file;
        std::string message;
    };
    std::vector<Problem> problems;
};

// Loads every manifest entry; schema violations and missing files become
// problems instead of exceptions. Loaded boards are not validated here —
// run validate() to inspect annotation invariants.
LoadReport load(const DatasetManifest& manifest);

struct SplitConfig {
    double holdout_fraction = 0.1;  // per-board chance of landing in a test split
    uint64_t seed = 0;
};

struct SplitResult {
    std::vector<Storyboard> train;
    std::vector<Storyboard> test_a;  // condensed synopses only
    std::vector<Storyboard> test_b;  // shot-by-shot synopses only
    std::vector<std::string> warnings;
};

// Explicit tags win; a tag pointing at the wrong-kind test split is moved to
// the matching one with a warning. Untagged boards are held out at the
// configured fraction, routed by synopsis kind. Deterministic per seed.
SplitResult split(const std::vector<Storyboard>& boards, const std::vector<std::string>& tags,
                  const SplitConfig& cfg);

struct SyntheticCorpusConfig {
    uint64_t seed = 0;
    int count = 100;
    double frame_width = 1024.0;
    double frame_height = 576.0;
    // P(shot count = i + 1); renormalized internally.
    std::vector<double> shot_count_weights = {0.05, 0.15, 0.25, 0.25, 0.15, 0.10, 0.05};
    double shot_by_shot_fraction = 0.5;
    // Fraction of boards whose characters may carry keypoints.
    double keypoint_board_fraction = 0.5;
    int max_characters_per_shot = 3;
    int max_film_sets_per_shot = 4;
};

// Schema-compatible stand-in corpus: template synopses over a fixed scene
// vocabulary, cast with persistent ids, all three representation tiers, both
// synopsis kinds. Every output passes validate(); identical per seed.
std::vector<Storyboard> generate_synthetic(const SyntheticCorpusConfig& cfg);

}  // namespace sbgen
