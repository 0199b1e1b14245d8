#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sbgen/tensor.hpp"
#include "sbgen/util.hpp"

namespace sbgen {

struct ModelConfig {
    int n_layers = 2;
    int n_heads = 4;
    int d_model = 128;
    int d_ff = 512;
    int context_window = 2560;  // attention span and position-table size
    int vocab_size = 0;
    double dropout = 0.0;

    void check() const;  // throws std::invalid_argument on inconsistent sizes
};

// All learnable tensors of the decoder. Weight matrices are stored as
// (out x in); the forward pass computes y = W x + b.
struct ModelParameters {
    ModelConfig config;

    Tensor wte;  // vocab_size x d_model
    Tensor wpe;  // context_window x d_model
    struct Layer {
        Tensor ln1_gain, ln1_bias;
        Tensor wq, bq, wk, bk, wv, bv, wo, bo;
        Tensor ln2_gain, ln2_bias;
        Tensor w_fc, b_fc;      // d_ff x d_model
        Tensor w_proj, b_proj;  // d_model x d_ff
    };
    std::vector<Layer> layers;
    Tensor ln_f_gain, ln_f_bias;
    Tensor w_head;  // vocab_size x d_model, untied from wte

    static ModelParameters zeros(const ModelConfig& cfg);
    // Normal(0, 0.02) weights, unit layer-norm gains, zero biases.
    static ModelParameters init(const ModelConfig& cfg, uint64_t seed);

    // Visits every tensor in a fixed order under a stable name.
    void for_each(const std::function<void(const std::string&, Tensor&)>& fn);
    void for_each(const std::function<void(const std::string&, const Tensor&)>& fn) const;
    // Same fixed order, as raw pointers (optimizer state walks these in lockstep).
    std::vector<Tensor*> tensors();
    std::vector<const Tensor*> tensors() const;

    size_t parameter_count() const;
    bool all_finite() const;
};

// Full teacher-forcing pass without dropout. Returns T x vocab_size logits;
// row i depends only on tokens[0..i].
Tensor forward(const ModelParameters& params, std::span<const int> tokens);

struct NllResult {
    double sum = 0.0;  // total negative log-likelihood over counted positions
    long count = 0;    // predicted positions whose target is not ignored
    double mean() const { return count > 0 ? sum / static_cast<double>(count) : 0.0; }
};

// Negative log-likelihood of tokens[1..] given their prefixes. Targets equal
// to ignore_id (the pad token) are excluded; pass -1 to count everything.
// Requires at least two tokens.
NllResult sequence_nll(const ModelParameters& params, std::span<const int> tokens,
                       int ignore_id = -1);
double nll_loss(const ModelParameters& params, std::span<const int> tokens, int ignore_id = -1);

// Accumulates d(sum of NLL) / dtheta into grads, whose shapes must match
// params. Returns the same totals as sequence_nll. A non-null dropout_rng
// enables dropout at the configured rate.
NllResult nll_backward(const ModelParameters& params, std::span<const int> tokens,
                       ModelParameters& grads, int ignore_id = -1, Rng* dropout_rng = nullptr);

// Incremental decoding with a per-layer attention cache. step() feeds one
// token and returns the logits for the next position; the arithmetic matches
// forward() position for position.
class InferenceState {
public:
    explicit InferenceState(const ModelParameters& params);

    const std::vector<double>& step(int token);
    int length() const { return length_; }
    void reset() { length_ = 0; }

private:
    const ModelParameters& params_;
    int length_ = 0;
    std::vector<Tensor> k_cache_;  // per layer, context_window x d_model
    std::vector<Tensor> v_cache_;
    // scratch
    std::vector<double> x_, norm_, q_, ctx_, tmp_, ff_, scores_, logits_;
};

}  // namespace sbgen
