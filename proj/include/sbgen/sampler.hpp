#pragma once

#include <cstdint>

#include "sbgen/codec.hpp"
#include "sbgen/model.hpp"

namespace sbgen {

struct SamplerConfig {
    double temperature = 1.0;
    int top_k = 50;  // 0 disables the cutoff; 1 is greedy argmax
    int max_new_tokens = 512;
    uint64_t seed = 0;
};

// Stable digest of the sampler settings, reported alongside every metric.
uint64_t sampler_digest(const SamplerConfig& cfg);

// Extends the prefix token by token until the end token or the budget.
// Deterministic in rng; throws when the prefix is empty, temperature is not
// positive, or prefix + max_new_tokens exceeds the context window.
TokenSequence sample(const ModelParameters& params, const TokenSequence& prefix,
                     const SamplerConfig& cfg, int end_token_id, Rng& rng);

// Convenience overload seeding the stream from cfg.seed.
TokenSequence sample(const ModelParameters& params, const TokenSequence& prefix,
                     const SamplerConfig& cfg, int end_token_id);

}  // namespace sbgen
