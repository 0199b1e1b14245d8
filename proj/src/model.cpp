#include "sbgen/model.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace sbgen {

namespace {

constexpr double kLnEps = 1e-5;
constexpr double kInitStd = 0.02;
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;

double gelu(double x) {
    const double u = kGeluC * (x + kGeluA * x * x * x);
    return 0.5 * x * (1.0 + std::tanh(u));
}

double gelu_grad(double x) {
    const double x2 = x * x;
    const double u = kGeluC * (x + kGeluA * x * x2);
    const double th = std::tanh(u);
    const double sech2 = 1.0 - th * th;
    return 0.5 * (1.0 + th) + 0.5 * x * sech2 * kGeluC * (1.0 + 3.0 * kGeluA * x2);
}

void layernorm_row(const double* x, const double* gain, const double* bias, int d, double* y,
                   double& mean_out, double& rstd_out) {
    double mean = 0.0;
    for (int i = 0; i < d; ++i) mean += x[i];
    mean /= d;
    double var = 0.0;
    for (int i = 0; i < d; ++i) {
        const double dx = x[i] - mean;
        var += dx * dx;
    }
    var /= d;
    const double rstd = 1.0 / std::sqrt(var + kLnEps);
    for (int i = 0; i < d; ++i) {
        y[i] = (x[i] - mean) * rstd * gain[i] + bias[i];
    }
    mean_out = mean;
    rstd_out = rstd;
}

void layernorm_row_backward(const double* dy, const double* x, double mean, double rstd,
                            const double* gain, int d, double* dx_accum, double* dgain,
                            double* dbias) {
    double sum_dxhat = 0.0;
    double sum_dxhat_xhat = 0.0;
    for (int i = 0; i < d; ++i) {
        const double xhat = (x[i] - mean) * rstd;
        const double dxhat = dy[i] * gain[i];
        dgain[i] += dy[i] * xhat;
        dbias[i] += dy[i];
        sum_dxhat += dxhat;
        sum_dxhat_xhat += dxhat * xhat;
    }
    const double inv_d = 1.0 / d;
    for (int i = 0; i < d; ++i) {
        const double xhat = (x[i] - mean) * rstd;
        const double dxhat = dy[i] * gain[i];
        dx_accum[i] += rstd * (dxhat - sum_dxhat * inv_d - xhat * sum_dxhat_xhat * inv_d);
    }
}

// y[o] = b[o] + sum_i W[o][i] * x[i]
void linear_vec(const double* x, const Tensor& w, const Tensor* b, double* y) {
    const int out = w.rows;
    const int in = w.cols;
    for (int o = 0; o < out; ++o) {
        const double* wo = w.row(o);
        double acc = b ? b->data[static_cast<size_t>(o)] : 0.0;
        for (int i = 0; i < in; ++i) acc += wo[i] * x[i];
        y[o] = acc;
    }
}

void linear_forward(const Tensor& x, const Tensor& w, const Tensor* b, Tensor& y) {
    y = Tensor(x.rows, w.rows);
    for (int t = 0; t < x.rows; ++t) {
        linear_vec(x.row(t), w, b, y.row(t));
    }
}

// dW += dy^T x, db += colsum(dy), dx += dy W
void linear_backward(const Tensor& x, const Tensor& w, const Tensor& dy, Tensor& dw, Tensor* db,
                     Tensor* dx) {
    const int in = w.cols;
    const int out = w.rows;
    for (int t = 0; t < x.rows; ++t) {
        const double* xt = x.row(t);
        const double* dyt = dy.row(t);
        for (int o = 0; o < out; ++o) {
            const double g = dyt[o];
            if (g == 0.0) continue;
            if (db) db->data[static_cast<size_t>(o)] += g;
            double* dwo = dw.row(o);
            for (int i = 0; i < in; ++i) dwo[i] += g * xt[i];
        }
        if (dx) {
            double* dxt = dx->row(t);
            for (int o = 0; o < out; ++o) {
                const double g = dyt[o];
                if (g == 0.0) continue;
                const double* wo = w.row(o);
                for (int i = 0; i < in; ++i) dxt[i] += g * wo[i];
            }
        }
    }
}

struct LayerCache {
    Tensor x_in, ln1_out, q, k, v, ctx, x_mid, ln2_out, fc_pre, fc_act;
    std::vector<double> ln1_mean, ln1_rstd, ln2_mean, ln2_rstd;
    std::vector<double> drop_attn, drop_mlp;
};

struct Cache {
    int t_len = 0;
    Tensor x0;
    std::vector<double> drop_emb;
    std::vector<LayerCache> layers;
    Tensor x_final, ln_f_out, logits;
    std::vector<double> lnf_mean, lnf_rstd;
};

std::vector<double> make_dropout_mask(size_t n, double p, Rng* rng) {
    if (!rng || p <= 0.0) return {};
    std::vector<double> mask(n);
    const double keep_scale = 1.0 / (1.0 - p);
    for (double& m : mask) {
        m = rng->next_real01() < p ? 0.0 : keep_scale;
    }
    return mask;
}

void apply_mask(Tensor& x, const std::vector<double>& mask) {
    if (mask.empty()) return;
    for (size_t i = 0; i < x.data.size(); ++i) x.data[i] *= mask[i];
}

void check_tokens(const ModelConfig& cfg, std::span<const int> tokens) {
    if (tokens.empty()) {
        throw std::invalid_argument("model: empty token sequence");
    }
    if (static_cast<int>(tokens.size()) > cfg.context_window) {
        throw std::invalid_argument("model: sequence of " + std::to_string(tokens.size()) +
                                    " tokens exceeds the context window " +
                                    std::to_string(cfg.context_window));
    }
    for (int id : tokens) {
        if (id < 0 || id >= cfg.vocab_size) {
            throw std::invalid_argument("model: token id " + std::to_string(id) +
                                        " outside the vocabulary");
        }
    }
}

// Attention over the cached keys/values for one position. The loop structure
// here is shared verbatim between the full pass and InferenceState so both
// produce bit-identical activations.
void attend_position(const double* qt, const Tensor& kc, const Tensor& vc, int t, int n_heads,
                     int head_dim, double* scores, double* ctx) {
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(head_dim));
    for (int h = 0; h < n_heads; ++h) {
        const int off = h * head_dim;
        double maxv = -std::numeric_limits<double>::infinity();
        for (int j = 0; j <= t; ++j) {
            const double* kj = kc.row(j) + off;
            double s = 0.0;
            for (int e = 0; e < head_dim; ++e) s += qt[off + e] * kj[e];
            s *= inv_sqrt;
            scores[j] = s;
            maxv = std::max(maxv, s);
        }
        double sum = 0.0;
        for (int j = 0; j <= t; ++j) {
            scores[j] = std::exp(scores[j] - maxv);
            sum += scores[j];
        }
        const double inv_sum = 1.0 / sum;
        for (int e = 0; e < head_dim; ++e) ctx[off + e] = 0.0;
        for (int j = 0; j <= t; ++j) {
            const double wj = scores[j] * inv_sum;
            const double* vj = vc.row(j) + off;
            for (int e = 0; e < head_dim; ++e) ctx[off + e] += wj * vj[e];
        }
    }
}

void forward_cached(const ModelParameters& params, std::span<const int> tokens, Cache& cache,
                    Rng* dropout_rng) {
    const ModelConfig& cfg = params.config;
    check_tokens(cfg, tokens);

    const int t_len = static_cast<int>(tokens.size());
    const int d = cfg.d_model;
    const int heads = cfg.n_heads;
    const int head_dim = d / heads;

    cache.t_len = t_len;
    cache.x0 = Tensor(t_len, d);
    for (int t = 0; t < t_len; ++t) {
        const double* te = params.wte.row(tokens[t]);
        const double* pe = params.wpe.row(t);
        double* x = cache.x0.row(t);
        for (int i = 0; i < d; ++i) x[i] = te[i] + pe[i];
    }
    cache.drop_emb = make_dropout_mask(cache.x0.size(), cfg.dropout, dropout_rng);
    apply_mask(cache.x0, cache.drop_emb);

    cache.layers.assign(static_cast<size_t>(cfg.n_layers), LayerCache{});
    std::vector<double> scores(static_cast<size_t>(t_len));

    const Tensor* x_cur = &cache.x0;
    for (int li = 0; li < cfg.n_layers; ++li) {
        const ModelParameters::Layer& lp = params.layers[static_cast<size_t>(li)];
        LayerCache& lc = cache.layers[static_cast<size_t>(li)];

        lc.x_in = *x_cur;
        lc.ln1_out = Tensor(t_len, d);
        lc.ln1_mean.resize(static_cast<size_t>(t_len));
        lc.ln1_rstd.resize(static_cast<size_t>(t_len));
        for (int t = 0; t < t_len; ++t) {
            layernorm_row(lc.x_in.row(t), lp.ln1_gain.data.data(), lp.ln1_bias.data.data(), d,
                          lc.ln1_out.row(t), lc.ln1_mean[static_cast<size_t>(t)],
                          lc.ln1_rstd[static_cast<size_t>(t)]);
        }

        linear_forward(lc.ln1_out, lp.wq, &lp.bq, lc.q);
        linear_forward(lc.ln1_out, lp.wk, &lp.bk, lc.k);
        linear_forward(lc.ln1_out, lp.wv, &lp.bv, lc.v);

        lc.ctx = Tensor(t_len, d);
        for (int t = 0; t < t_len; ++t) {
            attend_position(lc.q.row(t), lc.k, lc.v, t, heads, head_dim, scores.data(),
                            lc.ctx.row(t));
        }

        Tensor attn_proj;
        linear_forward(lc.ctx, lp.wo, &lp.bo, attn_proj);
        lc.drop_attn = make_dropout_mask(attn_proj.size(), cfg.dropout, dropout_rng);
        apply_mask(attn_proj, lc.drop_attn);

        lc.x_mid = Tensor(t_len, d);
        for (size_t i = 0; i < lc.x_mid.data.size(); ++i) {
            lc.x_mid.data[i] = lc.x_in.data[i] + attn_proj.data[i];
        }

        lc.ln2_out = Tensor(t_len, d);
        lc.ln2_mean.resize(static_cast<size_t>(t_len));
        lc.ln2_rstd.resize(static_cast<size_t>(t_len));
        for (int t = 0; t < t_len; ++t) {
            layernorm_row(lc.x_mid.row(t), lp.ln2_gain.data.data(), lp.ln2_bias.data.data(), d,
                          lc.ln2_out.row(t), lc.ln2_mean[static_cast<size_t>(t)],
                          lc.ln2_rstd[static_cast<size_t>(t)]);
        }

        linear_forward(lc.ln2_out, lp.w_fc, &lp.b_fc, lc.fc_pre);
        lc.fc_act = lc.fc_pre;
        for (double& a : lc.fc_act.data) a = gelu(a);

        Tensor mlp_out;
        linear_forward(lc.fc_act, lp.w_proj, &lp.b_proj, mlp_out);
        lc.drop_mlp = make_dropout_mask(mlp_out.size(), cfg.dropout, dropout_rng);
        apply_mask(mlp_out, lc.drop_mlp);

        Tensor& x_next = (li + 1 < cfg.n_layers) ? cache.layers[static_cast<size_t>(li + 1)].x_in
                                                 : cache.x_final;
        x_next = Tensor(t_len, d);
        for (size_t i = 0; i < x_next.data.size(); ++i) {
            x_next.data[i] = lc.x_mid.data[i] + mlp_out.data[i];
        }
        x_cur = &x_next;
    }

    cache.ln_f_out = Tensor(t_len, d);
    cache.lnf_mean.resize(static_cast<size_t>(t_len));
    cache.lnf_rstd.resize(static_cast<size_t>(t_len));
    for (int t = 0; t < t_len; ++t) {
        layernorm_row(x_cur->row(t), params.ln_f_gain.data.data(), params.ln_f_bias.data.data(), d,
                      cache.ln_f_out.row(t), cache.lnf_mean[static_cast<size_t>(t)],
                      cache.lnf_rstd[static_cast<size_t>(t)]);
    }

    linear_forward(cache.ln_f_out, params.w_head, nullptr, cache.logits);
}

// Per-row softmax NLL; fills dlogits (when present) with p - onehot for the
// counted positions and leaves the rest zero.
NllResult loss_from_logits(const Tensor& logits, std::span<const int> tokens, int ignore_id,
                           Tensor* dlogits) {
    NllResult result;
    const int t_len = static_cast<int>(tokens.size());
    const int vocab = logits.cols;
    for (int t = 0; t + 1 < t_len; ++t) {
        const int target = tokens[t + 1];
        if (target == ignore_id) continue;
        const double* row = logits.row(t);
        double maxv = row[0];
        for (int i = 1; i < vocab; ++i) maxv = std::max(maxv, row[i]);
        double sum = 0.0;
        for (int i = 0; i < vocab; ++i) sum += std::exp(row[i] - maxv);
        const double lse = maxv + std::log(sum);
        result.sum += lse - row[target];
        result.count += 1;
        if (dlogits) {
            double* drow = dlogits->row(t);
            const double inv_sum = 1.0 / sum;
            for (int i = 0; i < vocab; ++i) drow[i] = std::exp(row[i] - maxv) * inv_sum;
            drow[target] -= 1.0;
        }
    }
    return result;
}

}  // namespace

void ModelConfig::check() const {
    if (n_layers < 1 || n_heads < 1 || d_model < 1 || d_ff < 1 || context_window < 1) {
        throw std::invalid_argument("ModelConfig: sizes must be positive");
    }
    if (d_model % n_heads != 0) {
        throw std::invalid_argument("ModelConfig: d_model must be divisible by n_heads");
    }
    if (vocab_size < 2) {
        throw std::invalid_argument("ModelConfig: vocab_size must be at least 2");
    }
    if (dropout < 0.0 || dropout >= 1.0) {
        throw std::invalid_argument("ModelConfig: dropout must lie in [0, 1)");
    }
}

ModelParameters ModelParameters::zeros(const ModelConfig& cfg) {
    cfg.check();
    ModelParameters p;
    p.config = cfg;
    const int d = cfg.d_model;
    p.wte = Tensor(cfg.vocab_size, d);
    p.wpe = Tensor(cfg.context_window, d);
    p.layers.resize(static_cast<size_t>(cfg.n_layers));
    for (Layer& l : p.layers) {
        l.ln1_gain = Tensor(1, d);
        l.ln1_bias = Tensor(1, d);
        l.wq = Tensor(d, d);
        l.bq = Tensor(1, d);
        l.wk = Tensor(d, d);
        l.bk = Tensor(1, d);
        l.wv = Tensor(d, d);
        l.bv = Tensor(1, d);
        l.wo = Tensor(d, d);
        l.bo = Tensor(1, d);
        l.ln2_gain = Tensor(1, d);
        l.ln2_bias = Tensor(1, d);
        l.w_fc = Tensor(cfg.d_ff, d);
        l.b_fc = Tensor(1, cfg.d_ff);
        l.w_proj = Tensor(d, cfg.d_ff);
        l.b_proj = Tensor(1, d);
    }
    p.ln_f_gain = Tensor(1, d);
    p.ln_f_bias = Tensor(1, d);
    p.w_head = Tensor(cfg.vocab_size, d);
    return p;
}

ModelParameters ModelParameters::init(const ModelConfig& cfg, uint64_t seed) {
    ModelParameters p = zeros(cfg);
    Rng rng(seed);
    p.for_each([&rng](const std::string& name, Tensor& t) {
        if (name.find("gain") != std::string::npos) {
            std::fill(t.data.begin(), t.data.end(), 1.0);
        } else if (name.find("bias") != std::string::npos || name.find(".b") != std::string::npos) {
            t.zero();
        } else {
            for (double& v : t.data) v = rng.next_normal(0.0, kInitStd);
        }
    });
    return p;
}

void ModelParameters::for_each(const std::function<void(const std::string&, Tensor&)>& fn) {
    fn("wte", wte);
    fn("wpe", wpe);
    for (size_t li = 0; li < layers.size(); ++li) {
        Layer& l = layers[li];
        const std::string base = "layers." + std::to_string(li) + ".";
        fn(base + "ln1_gain", l.ln1_gain);
        fn(base + "ln1_bias", l.ln1_bias);
        fn(base + "wq", l.wq);
        fn(base + "bq", l.bq);
        fn(base + "wk", l.wk);
        fn(base + "bk", l.bk);
        fn(base + "wv", l.wv);
        fn(base + "bv", l.bv);
        fn(base + "wo", l.wo);
        fn(base + "bo", l.bo);
        fn(base + "ln2_gain", l.ln2_gain);
        fn(base + "ln2_bias", l.ln2_bias);
        fn(base + "w_fc", l.w_fc);
        fn(base + "b_fc", l.b_fc);
        fn(base + "w_proj", l.w_proj);
        fn(base + "b_proj", l.b_proj);
    }
    fn("ln_f_gain", ln_f_gain);
    fn("ln_f_bias", ln_f_bias);
    fn("w_head", w_head);
}

void ModelParameters::for_each(
    const std::function<void(const std::string&, const Tensor&)>& fn) const {
    const_cast<ModelParameters*>(this)->for_each(
        [&fn](const std::string& name, Tensor& t) { fn(name, t); });
}

std::vector<Tensor*> ModelParameters::tensors() {
    std::vector<Tensor*> out;
    for_each([&out](const std::string&, Tensor& t) { out.push_back(&t); });
    return out;
}

std::vector<const Tensor*> ModelParameters::tensors() const {
    std::vector<const Tensor*> out;
    for_each([&out](const std::string&, const Tensor& t) { out.push_back(&t); });
    return out;
}

size_t ModelParameters::parameter_count() const {
    size_t n = 0;
    for_each([&n](const std::string&, const Tensor& t) { n += t.size(); });
    return n;
}

bool ModelParameters::all_finite() const {
    bool ok = true;
    for_each([&ok](const std::string&, const Tensor& t) {
        for (double v : t.data) {
            if (!std::isfinite(v)) {
                ok = false;
                return;
            }
        }
    });
    return ok;
}

Tensor forward(const ModelParameters& params, std::span<const int> tokens) {
    Cache cache;
    forward_cached(params, tokens, cache, nullptr);
    return std::move(cache.logits);
}

NllResult sequence_nll(const ModelParameters& params, std::span<const int> tokens, int ignore_id) {
    if (tokens.size() < 2) {
        throw std::invalid_argument("sequence_nll: need at least two tokens");
    }
    Cache cache;
    forward_cached(params, tokens, cache, nullptr);
    return loss_from_logits(cache.logits, tokens, ignore_id, nullptr);
}

double nll_loss(const ModelParameters& params, std::span<const int> tokens, int ignore_id) {
    return sequence_nll(params, tokens, ignore_id).mean();
}

NllResult nll_backward(const ModelParameters& params, std::span<const int> tokens,
                       ModelParameters& grads, int ignore_id, Rng* dropout_rng) {
    if (tokens.size() < 2) {
        throw std::invalid_argument("nll_backward: need at least two tokens");
    }
    const ModelConfig& cfg = params.config;
    const int d = cfg.d_model;
    const int heads = cfg.n_heads;
    const int head_dim = d / heads;
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(head_dim));

    Cache cache;
    forward_cached(params, tokens, cache, dropout_rng);
    const int t_len = cache.t_len;

    Tensor dlogits(t_len, cfg.vocab_size);
    const NllResult result = loss_from_logits(cache.logits, tokens, ignore_id, &dlogits);
    if (result.count == 0) {
        return result;
    }

    // head and final norm
    Tensor d_lnf(t_len, d);
    linear_backward(cache.ln_f_out, params.w_head, dlogits, grads.w_head, nullptr, &d_lnf);

    Tensor dx(t_len, d);
    for (int t = 0; t < t_len; ++t) {
        layernorm_row_backward(d_lnf.row(t), cache.x_final.row(t),
                               cache.lnf_mean[static_cast<size_t>(t)],
                               cache.lnf_rstd[static_cast<size_t>(t)], params.ln_f_gain.data.data(),
                               d, dx.row(t), grads.ln_f_gain.data.data(),
                               grads.ln_f_bias.data.data());
    }

    std::vector<double> probs(static_cast<size_t>(t_len));
    std::vector<double> dprobs(static_cast<size_t>(t_len));

    for (int li = cfg.n_layers - 1; li >= 0; --li) {
        const ModelParameters::Layer& lp = params.layers[static_cast<size_t>(li)];
        ModelParameters::Layer& lg = grads.layers[static_cast<size_t>(li)];
        const LayerCache& lc = cache.layers[static_cast<size_t>(li)];

        // MLP branch: x_out = x_mid + dropout(w_proj gelu(w_fc ln2(x_mid)))
        Tensor d_mlp = dx;
        apply_mask(d_mlp, lc.drop_mlp);

        Tensor d_fc_act(t_len, cfg.d_ff);
        linear_backward(lc.fc_act, lp.w_proj, d_mlp, lg.w_proj, &lg.b_proj, &d_fc_act);
        for (size_t i = 0; i < d_fc_act.data.size(); ++i) {
            d_fc_act.data[i] *= gelu_grad(lc.fc_pre.data[i]);
        }
        Tensor d_ln2(t_len, d);
        linear_backward(lc.ln2_out, lp.w_fc, d_fc_act, lg.w_fc, &lg.b_fc, &d_ln2);

        Tensor d_x_mid = dx;  // residual path
        for (int t = 0; t < t_len; ++t) {
            layernorm_row_backward(d_ln2.row(t), lc.x_mid.row(t),
                                   lc.ln2_mean[static_cast<size_t>(t)],
                                   lc.ln2_rstd[static_cast<size_t>(t)], lp.ln2_gain.data.data(), d,
                                   d_x_mid.row(t), lg.ln2_gain.data.data(),
                                   lg.ln2_bias.data.data());
        }

        // attention branch: x_mid = x_in + dropout(wo ctx)
        Tensor d_attn = d_x_mid;
        apply_mask(d_attn, lc.drop_attn);

        Tensor d_ctx(t_len, d);
        linear_backward(lc.ctx, lp.wo, d_attn, lg.wo, &lg.bo, &d_ctx);

        Tensor dq(t_len, d), dk(t_len, d), dv(t_len, d);
        for (int t = 0; t < t_len; ++t) {
            const double* qt = lc.q.row(t);
            const double* d_ctx_t = d_ctx.row(t);
            for (int h = 0; h < heads; ++h) {
                const int off = h * head_dim;
                // recompute the attention weights for (t, h)
                double maxv = -std::numeric_limits<double>::infinity();
                for (int j = 0; j <= t; ++j) {
                    const double* kj = lc.k.row(j) + off;
                    double s = 0.0;
                    for (int e = 0; e < head_dim; ++e) s += qt[off + e] * kj[e];
                    s *= inv_sqrt;
                    probs[static_cast<size_t>(j)] = s;
                    maxv = std::max(maxv, s);
                }
                double sum = 0.0;
                for (int j = 0; j <= t; ++j) {
                    probs[static_cast<size_t>(j)] = std::exp(probs[static_cast<size_t>(j)] - maxv);
                    sum += probs[static_cast<size_t>(j)];
                }
                const double inv_sum = 1.0 / sum;
                double dsum = 0.0;
                for (int j = 0; j <= t; ++j) {
                    probs[static_cast<size_t>(j)] *= inv_sum;
                    const double* vj = lc.v.row(j) + off;
                    double dp = 0.0;
                    for (int e = 0; e < head_dim; ++e) dp += d_ctx_t[off + e] * vj[e];
                    dprobs[static_cast<size_t>(j)] = dp;
                    dsum += probs[static_cast<size_t>(j)] * dp;
                }
                for (int j = 0; j <= t; ++j) {
                    const double pj = probs[static_cast<size_t>(j)];
                    const double ds = pj * (dprobs[static_cast<size_t>(j)] - dsum);
                    const double* kj = lc.k.row(j) + off;
                    double* dkj = dk.row(j) + off;
                    double* dvj = dv.row(j) + off;
                    double* dqt = dq.row(t) + off;
                    for (int e = 0; e < head_dim; ++e) {
                        dvj[e] += pj * d_ctx_t[off + e];
                        dqt[e] += ds * inv_sqrt * kj[e];
                        dkj[e] += ds * inv_sqrt * qt[off + e];
                    }
                }
            }
        }

        Tensor d_ln1(t_len, d);
        linear_backward(lc.ln1_out, lp.wq, dq, lg.wq, &lg.bq, &d_ln1);
        linear_backward(lc.ln1_out, lp.wk, dk, lg.wk, &lg.bk, &d_ln1);
        linear_backward(lc.ln1_out, lp.wv, dv, lg.wv, &lg.bv, &d_ln1);

        Tensor d_x_in = d_x_mid;  // residual path
        for (int t = 0; t < t_len; ++t) {
            layernorm_row_backward(d_ln1.row(t), lc.x_in.row(t),
                                   lc.ln1_mean[static_cast<size_t>(t)],
                                   lc.ln1_rstd[static_cast<size_t>(t)], lp.ln1_gain.data.data(), d,
                                   d_x_in.row(t), lg.ln1_gain.data.data(),
                                   lg.ln1_bias.data.data());
        }
        dx = std::move(d_x_in);
    }

    apply_mask(dx, cache.drop_emb);
    for (int t = 0; t < t_len; ++t) {
        const double* dxt = dx.row(t);
        double* dte = grads.wte.row(tokens[t]);
        double* dpe = grads.wpe.row(t);
        for (int i = 0; i < d; ++i) {
            dte[i] += dxt[i];
            dpe[i] += dxt[i];
        }
    }

    return result;
}

InferenceState::InferenceState(const ModelParameters& params) : params_(params) {
    const ModelConfig& cfg = params.config;
    cfg.check();
    k_cache_.assign(static_cast<size_t>(cfg.n_layers), Tensor(cfg.context_window, cfg.d_model));
    v_cache_.assign(static_cast<size_t>(cfg.n_layers), Tensor(cfg.context_window, cfg.d_model));
    x_.resize(static_cast<size_t>(cfg.d_model));
    norm_.resize(static_cast<size_t>(cfg.d_model));
    q_.resize(static_cast<size_t>(cfg.d_model));
    ctx_.resize(static_cast<size_t>(cfg.d_model));
    tmp_.resize(static_cast<size_t>(cfg.d_model));
    ff_.resize(static_cast<size_t>(cfg.d_ff));
    scores_.resize(static_cast<size_t>(cfg.context_window));
    logits_.resize(static_cast<size_t>(cfg.vocab_size));
}

const std::vector<double>& InferenceState::step(int token) {
    const ModelConfig& cfg = params_.config;
    if (length_ >= cfg.context_window) {
        throw std::length_error("InferenceState: context window exhausted");
    }
    if (token < 0 || token >= cfg.vocab_size) {
        throw std::invalid_argument("InferenceState: token id outside the vocabulary");
    }
    const int pos = length_;
    const int d = cfg.d_model;
    const int heads = cfg.n_heads;
    const int head_dim = d / heads;

    const double* te = params_.wte.row(token);
    const double* pe = params_.wpe.row(pos);
    for (int i = 0; i < d; ++i) x_[static_cast<size_t>(i)] = te[i] + pe[i];

    double mean = 0.0, rstd = 0.0;
    for (int li = 0; li < cfg.n_layers; ++li) {
        const ModelParameters::Layer& lp = params_.layers[static_cast<size_t>(li)];
        Tensor& kc = k_cache_[static_cast<size_t>(li)];
        Tensor& vc = v_cache_[static_cast<size_t>(li)];

        layernorm_row(x_.data(), lp.ln1_gain.data.data(), lp.ln1_bias.data.data(), d, norm_.data(),
                      mean, rstd);
        linear_vec(norm_.data(), lp.wq, &lp.bq, q_.data());
        linear_vec(norm_.data(), lp.wk, &lp.bk, kc.row(pos));
        linear_vec(norm_.data(), lp.wv, &lp.bv, vc.row(pos));

        attend_position(q_.data(), kc, vc, pos, heads, head_dim, scores_.data(), ctx_.data());

        linear_vec(ctx_.data(), lp.wo, &lp.bo, tmp_.data());
        for (int i = 0; i < d; ++i) x_[static_cast<size_t>(i)] += tmp_[static_cast<size_t>(i)];

        layernorm_row(x_.data(), lp.ln2_gain.data.data(), lp.ln2_bias.data.data(), d, norm_.data(),
                      mean, rstd);
        linear_vec(norm_.data(), lp.w_fc, &lp.b_fc, ff_.data());
        for (double& a : ff_) a = gelu(a);
        linear_vec(ff_.data(), lp.w_proj, &lp.b_proj, tmp_.data());
        for (int i = 0; i < d; ++i) x_[static_cast<size_t>(i)] += tmp_[static_cast<size_t>(i)];
    }

    layernorm_row(x_.data(), params_.ln_f_gain.data.data(), params_.ln_f_bias.data.data(), d,
                  norm_.data(), mean, rstd);
    linear_vec(norm_.data(), params_.w_head, nullptr, logits_.data());

    ++length_;
    return logits_;
}

}  // namespace sbgen
