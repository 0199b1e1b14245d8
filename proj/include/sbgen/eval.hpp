#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "sbgen/codec.hpp"
#include "sbgen/model.hpp"
#include "sbgen/sampler.hpp"
#include "sbgen/types.hpp"

namespace sbgen {

// exp(mean NLL per token) over the corpus; >= 1 for any model.
double perplexity(const ModelParameters& params, const std::vector<TokenSequence>& corpus,
                  int ignore_id = -1);

struct RougeScore {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// Longest-common-subsequence overlap over lexed word tokens; F uses beta = 1.
// Both sides empty yields all zeros.
RougeScore rouge_l(std::string_view candidate, std::string_view reference);

// Hook for embedding-based text similarity. No embedding model ships here:
// callers supply a provider (an external encoder) mapping text to a fixed
// dimension, and the score is the cosine similarity of the two embeddings.
using EmbeddingProvider = std::function<std::vector<double>(std::string_view)>;
double embedding_similarity(std::string_view candidate, std::string_view reference,
                            const EmbeddingProvider& provider);

// Fixed-size storyboard descriptor: counts per tier, box statistics for
// characters and film sets, and a 32-bucket hashed category histogram.
// Permutation-invariant within shots; an empty layout maps to the zero vector.
constexpr int kLayoutEncodingDim = 54;
std::vector<double> layout_encoding(const Storyboard& sb);

struct FeatureExtractorConfig {
    int hidden = 32;  // feature dimensionality
    int epochs = 60;
    int batch_size = 32;
    double lr = 0.01;
    uint64_t seed = 0;
};

// Small feed-forward classifier over layout encodings; features are the
// penultimate (hidden) activations. Deterministic at inference.
class LayoutFeatureExtractor {
public:
    static LayoutFeatureExtractor train(const std::vector<std::vector<double>>& encodings,
                                        const std::vector<int>& labels, int n_classes,
                                        const FeatureExtractorConfig& cfg);

    std::vector<double> features(const std::vector<double>& encoding) const;
    int feature_dim() const { return w1_.rows; }

private:
    Tensor w1_, b1_;  // hidden x in
    Tensor w2_, b2_;  // classes x hidden
    std::vector<double> mean_, scale_;
};

// Frechet distance between Gaussian fits of the two feature sets:
// |mu_a - mu_b|^2 + Tr(Sa + Sb - 2 (Sa Sb)^(1/2)). The matrix square root
// uses an eigendecomposition of the symmetrized product with negative
// eigenvalues clipped at zero. Requires at least two samples per set.
double fid(const std::vector<std::vector<double>>& features_a,
           const std::vector<std::vector<double>>& features_b);

struct DecodingStats {
    long valid = 0;
    long total = 0;
    double rate() const { return total > 0 ? static_cast<double>(valid) / total : 0.0; }
    std::map<std::string, long> error_counts;  // ParseError kind -> occurrences
};

// Draws n unconditional samples (per-sample seeds derived from cfg.seed by
// index) and counts the ones that decode into storyboards.
DecodingStats decoding_success_rate(const ModelParameters& params, const Vocabulary& vocab, int n,
                                    const SamplerConfig& cfg, const QuantizerConfig& qcfg,
                                    const SerializerConfig& scfg);

struct EvalReport {
    double perplexity = 0.0;
    RougeScore rouge;
    double fid = 0.0;
    double decoding_success_rate = 0.0;
    long n_samples = 0;
    std::string sampler_config_digest;
    std::map<std::string, long> parse_errors;
};

// Fixed-key JSON document so runs can be diffed byte for byte.
std::string to_json(const EvalReport& report);

}  // namespace sbgen
