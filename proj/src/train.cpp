#include "sbgen/train.hpp"

#include <cmath>
#include <stdexcept>

namespace sbgen {

double lr_at(const TrainConfig& cfg, long iteration) {
    if (cfg.total_iterations <= 1) return cfg.lr_max;
    const double frac = static_cast<double>(iteration) / static_cast<double>(cfg.total_iterations - 1);
    return cfg.lr_max + (cfg.lr_min - cfg.lr_max) * frac;
}

TrainResult train(ModelParameters& params, const std::vector<TokenSequence>& corpus,
                  const TrainConfig& cfg, int pad_id,
                  const std::function<void(const TrainRecord&)>& on_iteration) {
    if (corpus.empty()) {
        throw std::invalid_argument("train: empty corpus");
    }
    if (cfg.batch_size < 1 || cfg.total_iterations < 1) {
        throw std::invalid_argument("train: batch_size and total_iterations must be positive");
    }
    for (const TokenSequence& seq : corpus) {
        if (seq.ids.size() < 2) {
            throw std::invalid_argument("train: every sequence needs at least two tokens");
        }
    }

    ModelParameters grads = ModelParameters::zeros(params.config);
    ModelParameters m = ModelParameters::zeros(params.config);
    ModelParameters v = ModelParameters::zeros(params.config);

    std::vector<Tensor*> p_t = params.tensors();
    std::vector<Tensor*> g_t = grads.tensors();
    std::vector<Tensor*> m_t = m.tensors();
    std::vector<Tensor*> v_t = v.tensors();

    Rng batch_rng(cfg.seed);
    Rng dropout_rng = Rng::derive(cfg.seed, 0x64726f70);  // separate dropout stream
    const bool use_dropout = params.config.dropout > 0.0;

    TrainResult result;
    result.curve.reserve(static_cast<size_t>(cfg.total_iterations));

    for (long it = 0; it < cfg.total_iterations; ++it) {
        for (Tensor* g : g_t) g->zero();

        double loss_sum = 0.0;
        long loss_count = 0;
        for (int b = 0; b < cfg.batch_size; ++b) {
            const size_t idx =
                static_cast<size_t>(batch_rng.next_int(0, static_cast<int64_t>(corpus.size()) - 1));
            const NllResult r = nll_backward(params, corpus[idx].ids, grads, pad_id,
                                             use_dropout ? &dropout_rng : nullptr);
            loss_sum += r.sum;
            loss_count += r.count;
        }
        if (loss_count == 0) {
            throw std::runtime_error("train: batch contained no predicted positions");
        }
        const double batch_loss = loss_sum / static_cast<double>(loss_count);
        if (!std::isfinite(batch_loss)) {
            throw std::runtime_error("train: loss diverged to a non-finite value at iteration " +
                                     std::to_string(it));
        }

        // Gradients currently hold d(sum NLL); rescale to the batch mean.
        const double inv_count = 1.0 / static_cast<double>(loss_count);
        for (Tensor* g : g_t) {
            for (double& x : g->data) x *= inv_count;
        }

        if (cfg.grad_clip > 0.0) {
            double sq = 0.0;
            for (Tensor* g : g_t) {
                for (double x : g->data) sq += x * x;
            }
            const double norm = std::sqrt(sq);
            if (norm > cfg.grad_clip) {
                const double scale = cfg.grad_clip / norm;
                for (Tensor* g : g_t) {
                    for (double& x : g->data) x *= scale;
                }
            }
        }

        const double lr = lr_at(cfg, it);
        const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(it + 1));
        const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(it + 1));
        for (size_t ti = 0; ti < p_t.size(); ++ti) {
            Tensor& p = *p_t[ti];
            Tensor& g = *g_t[ti];
            Tensor& mm = *m_t[ti];
            Tensor& vv = *v_t[ti];
            const bool decay = p.rows > 1 && p.cols > 1;  // matrices only
            for (size_t i = 0; i < p.data.size(); ++i) {
                const double gi = g.data[i];
                mm.data[i] = cfg.beta1 * mm.data[i] + (1.0 - cfg.beta1) * gi;
                vv.data[i] = cfg.beta2 * vv.data[i] + (1.0 - cfg.beta2) * gi * gi;
                const double mhat = mm.data[i] / bc1;
                const double vhat = vv.data[i] / bc2;
                double step = mhat / (std::sqrt(vhat) + cfg.adam_eps);
                if (decay) step += cfg.weight_decay * p.data[i];
                p.data[i] -= lr * step;
            }
        }

        TrainRecord record{it, batch_loss, lr};
        result.curve.push_back(record);
        if (on_iteration) on_iteration(record);
    }

    return result;
}

}  // namespace sbgen
