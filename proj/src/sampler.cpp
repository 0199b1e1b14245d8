#include "sbgen/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace sbgen {

uint64_t sampler_digest(const SamplerConfig& cfg) {
    uint64_t h = 0xcbf29ce484222325ull;
    h = fnv1a64_bytes(&cfg.temperature, sizeof cfg.temperature, h);
    h = fnv1a64_bytes(&cfg.top_k, sizeof cfg.top_k, h);
    h = fnv1a64_bytes(&cfg.max_new_tokens, sizeof cfg.max_new_tokens, h);
    h = fnv1a64_bytes(&cfg.seed, sizeof cfg.seed, h);
    return h;
}

namespace {

// Picks the next token: temperature scaling, optional top-k cutoff, then a
// CDF draw over the surviving candidates. Ties at the cutoff keep the lower
// index, so top_k = 1 is exactly greedy argmax.
int pick_token(const std::vector<double>& logits, const SamplerConfig& cfg, Rng& rng) {
    const int vocab = static_cast<int>(logits.size());
    std::vector<int> order(static_cast<size_t>(vocab));
    std::iota(order.begin(), order.end(), 0);

    int kept = vocab;
    if (cfg.top_k > 0 && cfg.top_k < vocab) {
        kept = cfg.top_k;
        std::partial_sort(order.begin(), order.begin() + kept, order.end(),
                          [&logits](int a, int b) {
                              if (logits[static_cast<size_t>(a)] != logits[static_cast<size_t>(b)])
                                  return logits[static_cast<size_t>(a)] >
                                         logits[static_cast<size_t>(b)];
                              return a < b;
                          });
    }

    std::vector<double> probs(static_cast<size_t>(kept));
    double maxv = logits[static_cast<size_t>(order[0])];
    for (int i = 1; i < kept; ++i) {
        maxv = std::max(maxv, logits[static_cast<size_t>(order[static_cast<size_t>(i)])]);
    }
    double sum = 0.0;
    for (int i = 0; i < kept; ++i) {
        const double l = logits[static_cast<size_t>(order[static_cast<size_t>(i)])];
        probs[static_cast<size_t>(i)] = std::exp((l - maxv) / cfg.temperature);
        sum += probs[static_cast<size_t>(i)];
    }

    const double r = rng.next_real01() * sum;
    double cdf = 0.0;
    for (int i = 0; i < kept; ++i) {
        cdf += probs[static_cast<size_t>(i)];
        if (r < cdf) return order[static_cast<size_t>(i)];
    }
    return order[static_cast<size_t>(kept - 1)];
}

}  // namespace

TokenSequence sample(const ModelParameters& params, const TokenSequence& prefix,
                     const SamplerConfig& cfg, int end_token_id, Rng& rng) {
    if (prefix.ids.empty()) {
        throw std::invalid_argument("sample: prefix must hold at least the start token");
    }
    if (!(cfg.temperature > 0.0)) {
        throw std::invalid_argument("sample: temperature must be positive");
    }
    if (cfg.max_new_tokens < 0 ||
        static_cast<long>(prefix.ids.size()) + cfg.max_new_tokens > params.config.context_window) {
        throw std::invalid_argument("sample: prefix plus max_new_tokens exceeds the context window");
    }

    InferenceState state(params);
    TokenSequence out = prefix;
    const std::vector<double>* logits = nullptr;
    for (int id : prefix.ids) {
        logits = &state.step(id);
    }

    for (int produced = 0; produced < cfg.max_new_tokens; ++produced) {
        const int next = pick_token(*logits, cfg, rng);
        out.ids.push_back(next);
        if (next == end_token_id) break;
        if (produced + 1 < cfg.max_new_tokens) {
            logits = &state.step(next);
        }
    }
    return out;
}

TokenSequence sample(const ModelParameters& params, const TokenSequence& prefix,
                     const SamplerConfig& cfg, int end_token_id) {
    Rng rng(cfg.seed);
    return sample(params, prefix, cfg, end_token_id, rng);
}

}  // namespace sbgen
