#include "sbgen/eval.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <Eigen/Dense>
#include <json.hpp>

namespace sbgen {

double perplexity(const ModelParameters& params, const std::vector<TokenSequence>& corpus,
                  int ignore_id) {
    if (corpus.empty()) {
        throw std::invalid_argument("perplexity: empty corpus");
    }
    NllResult total;
    for (const TokenSequence& seq : corpus) {
        const NllResult r = sequence_nll(params, seq.ids, ignore_id);
        total.sum += r.sum;
        total.count += r.count;
    }
    if (total.count == 0) {
        throw std::invalid_argument("perplexity: no predicted positions in the corpus");
    }
    return std::exp(total.mean());
}

RougeScore rouge_l(std::string_view candidate, std::string_view reference) {
    const std::vector<std::string> cand = lex(candidate);
    const std::vector<std::string> ref = lex(reference);
    if (cand.empty() || ref.empty()) {
        return RougeScore{};
    }

    // LCS length with a rolling row.
    const size_t n = cand.size();
    const size_t m = ref.size();
    std::vector<long> prev(m + 1, 0), cur(m + 1, 0);
    for (size_t i = 1; i <= n; ++i) {
        for (size_t j = 1; j <= m; ++j) {
            cur[j] = cand[i - 1] == ref[j - 1] ? prev[j - 1] + 1
                                               : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    const double lcs = static_cast<double>(prev[m]);

    RougeScore score;
    score.precision = lcs / static_cast<double>(n);
    score.recall = lcs / static_cast<double>(m);
    score.f1 = lcs > 0.0 ? 2.0 * score.precision * score.recall / (score.precision + score.recall)
                         : 0.0;
    return score;
}

double embedding_similarity(std::string_view candidate, std::string_view reference,
                            const EmbeddingProvider& provider) {
    if (!provider) {
        throw std::invalid_argument("embedding_similarity: no embedding provider supplied");
    }
    const std::vector<double> a = provider(candidate);
    const std::vector<double> b = provider(reference);
    if (a.size() != b.size() || a.empty()) {
        throw std::invalid_argument("embedding_similarity: provider returned mismatched vectors");
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<double> layout_encoding(const Storyboard& sb) {
    std::vector<double> enc(kLayoutEncodingDim, 0.0);
    enc[0] = static_cast<double>(sb.shots.size());

    // Per-box stat rows are gathered first and summed in sorted order, so the
    // encoding is bitwise identical under any box permutation.
    using StatRow = std::array<double, 4>;  // cx, cy, w, h (frame-normalized)
    std::vector<StatRow> ch_rows, fs_rows;

    auto stat_row = [](const BoundingBox& b, double fw, double fh) {
        return StatRow{(b.x_min + b.x_max) * 0.5 / fw, (b.y_min + b.y_max) * 0.5 / fh,
                       (b.x_max - b.x_min) / fw, (b.y_max - b.y_min) / fh};
    };

    for (const Shot& shot : sb.shots) {
        if (!(shot.frame_width > 0.0) || !(shot.frame_height > 0.0)) continue;
        for (const CharacterAnnotation& ch : shot.characters) {
            switch (ch.tier) {
                case RepresentationTier::WholeBody93: enc[3] += 1.0; break;
                case RepresentationTier::Sparse17: enc[4] += 1.0; break;
                case RepresentationTier::BoxOnly: enc[5] += 1.0; break;
            }
            ch_rows.push_back(stat_row(ch.bbox, shot.frame_width, shot.frame_height));
        }
        for (const FilmSetAnnotation& fs : shot.film_sets) {
            fs_rows.push_back(stat_row(fs.bbox, shot.frame_width, shot.frame_height));
            enc[22 + static_cast<int>(fnv1a64(fs.category) % 32)] += 1.0;
        }
    }
    enc[1] = static_cast<double>(ch_rows.size());
    enc[2] = static_cast<double>(fs_rows.size());

    auto fill_moments = [](std::vector<double>& enc, int at, std::vector<StatRow>& rows) {
        if (rows.empty()) return;
        std::sort(rows.begin(), rows.end());
        const double n = static_cast<double>(rows.size());
        for (int i = 0; i < 4; ++i) {
            double sum = 0.0, sumsq = 0.0;
            for (const StatRow& r : rows) {
                sum += r[static_cast<size_t>(i)];
                sumsq += r[static_cast<size_t>(i)] * r[static_cast<size_t>(i)];
            }
            const double mean = sum / n;
            const double var = std::max(0.0, sumsq / n - mean * mean);
            enc[static_cast<size_t>(at + i)] = mean;
            enc[static_cast<size_t>(at + 4 + i)] = std::sqrt(var);
        }
    };
    fill_moments(enc, 6, ch_rows);
    fill_moments(enc, 14, fs_rows);
    return enc;
}

// ---------------------------------------------------------------------------
// feature extractor

LayoutFeatureExtractor LayoutFeatureExtractor::train(
    const std::vector<std::vector<double>>& encodings, const std::vector<int>& labels,
    int n_classes, const FeatureExtractorConfig& cfg) {
    if (encodings.empty() || encodings.size() != labels.size()) {
        throw std::invalid_argument("LayoutFeatureExtractor: need one label per encoding");
    }
    if (n_classes < 1) {
        throw std::invalid_argument("LayoutFeatureExtractor: n_classes must be positive");
    }
    const int in_dim = static_cast<int>(encodings.front().size());
    for (const auto& e : encodings) {
        if (static_cast<int>(e.size()) != in_dim) {
            throw std::invalid_argument("LayoutFeatureExtractor: ragged encodings");
        }
    }
    for (int label : labels) {
        if (label < 0 || label >= n_classes) {
            throw std::invalid_argument("LayoutFeatureExtractor: label outside [0, n_classes)");
        }
    }

    LayoutFeatureExtractor ex;
    const size_t n = encodings.size();

    // standardize inputs
    ex.mean_.assign(static_cast<size_t>(in_dim), 0.0);
    ex.scale_.assign(static_cast<size_t>(in_dim), 1.0);
    for (const auto& e : encodings) {
        for (int i = 0; i < in_dim; ++i) ex.mean_[static_cast<size_t>(i)] += e[static_cast<size_t>(i)];
    }
    for (double& m : ex.mean_) m /= static_cast<double>(n);
    std::vector<double> var(static_cast<size_t>(in_dim), 0.0);
    for (const auto& e : encodings) {
        for (int i = 0; i < in_dim; ++i) {
            const double d = e[static_cast<size_t>(i)] - ex.mean_[static_cast<size_t>(i)];
            var[static_cast<size_t>(i)] += d * d;
        }
    }
    for (int i = 0; i < in_dim; ++i) {
        ex.scale_[static_cast<size_t>(i)] = 1.0 / std::sqrt(var[static_cast<size_t>(i)] / static_cast<double>(n) + 1e-8);
    }

    Rng rng(cfg.seed);
    ex.w1_ = Tensor(cfg.hidden, in_dim);
    ex.b1_ = Tensor(1, cfg.hidden);
    ex.w2_ = Tensor(n_classes, cfg.hidden);
    ex.b2_ = Tensor(1, n_classes);
    for (double& v : ex.w1_.data) v = rng.next_normal(0.0, 0.1);
    for (double& v : ex.w2_.data) v = rng.next_normal(0.0, 0.1);

    std::vector<std::vector<double>> std_enc(n);
    for (size_t s = 0; s < n; ++s) {
        std_enc[s].resize(static_cast<size_t>(in_dim));
        for (int i = 0; i < in_dim; ++i) {
            std_enc[s][static_cast<size_t>(i)] =
                (encodings[s][static_cast<size_t>(i)] - ex.mean_[static_cast<size_t>(i)]) *
                ex.scale_[static_cast<size_t>(i)];
        }
    }

    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> hidden(static_cast<size_t>(cfg.hidden));
    std::vector<double> logits(static_cast<size_t>(n_classes));
    std::vector<double> dlogits(static_cast<size_t>(n_classes));
    std::vector<double> dhidden(static_cast<size_t>(cfg.hidden));

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (size_t i = n; i > 1; --i) {
            std::swap(order[i - 1], order[static_cast<size_t>(rng.next_int(0, static_cast<int64_t>(i) - 1))]);
        }
        for (size_t s = 0; s < n; ++s) {
            const std::vector<double>& x = std_enc[order[s]];
            const int label = labels[order[s]];

            for (int h = 0; h < cfg.hidden; ++h) {
                const double* w = ex.w1_.row(h);
                double acc = ex.b1_.data[static_cast<size_t>(h)];
                for (int i = 0; i < in_dim; ++i) acc += w[i] * x[static_cast<size_t>(i)];
                hidden[static_cast<size_t>(h)] = std::tanh(acc);
            }
            for (int c = 0; c < n_classes; ++c) {
                const double* w = ex.w2_.row(c);
                double acc = ex.b2_.data[static_cast<size_t>(c)];
                for (int h = 0; h < cfg.hidden; ++h) acc += w[h] * hidden[static_cast<size_t>(h)];
                logits[static_cast<size_t>(c)] = acc;
            }

            double maxv = logits[0];
            for (int c = 1; c < n_classes; ++c) maxv = std::max(maxv, logits[static_cast<size_t>(c)]);
            double sum = 0.0;
            for (int c = 0; c < n_classes; ++c) {
                dlogits[static_cast<size_t>(c)] = std::exp(logits[static_cast<size_t>(c)] - maxv);
                sum += dlogits[static_cast<size_t>(c)];
            }
            for (int c = 0; c < n_classes; ++c) dlogits[static_cast<size_t>(c)] /= sum;
            dlogits[static_cast<size_t>(label)] -= 1.0;

            std::fill(dhidden.begin(), dhidden.end(), 0.0);
            for (int c = 0; c < n_classes; ++c) {
                const double g = dlogits[static_cast<size_t>(c)];
                double* w = ex.w2_.row(c);
                for (int h = 0; h < cfg.hidden; ++h) {
                    dhidden[static_cast<size_t>(h)] += g * w[h];
                    w[h] -= cfg.lr * g * hidden[static_cast<size_t>(h)];
                }
                ex.b2_.data[static_cast<size_t>(c)] -= cfg.lr * g;
            }
            for (int h = 0; h < cfg.hidden; ++h) {
                const double th = hidden[static_cast<size_t>(h)];
                const double g = dhidden[static_cast<size_t>(h)] * (1.0 - th * th);
                double* w = ex.w1_.row(h);
                for (int i = 0; i < in_dim; ++i) w[i] -= cfg.lr * g * x[static_cast<size_t>(i)];
                ex.b1_.data[static_cast<size_t>(h)] -= cfg.lr * g;
            }
        }
    }
    return ex;
}

std::vector<double> LayoutFeatureExtractor::features(const std::vector<double>& encoding) const {
    const int in_dim = w1_.cols;
    if (static_cast<int>(encoding.size()) != in_dim) {
        throw std::invalid_argument("LayoutFeatureExtractor: encoding has the wrong dimension");
    }
    std::vector<double> out(static_cast<size_t>(w1_.rows));
    for (int h = 0; h < w1_.rows; ++h) {
        const double* w = w1_.row(h);
        double acc = b1_.data[static_cast<size_t>(h)];
        for (int i = 0; i < in_dim; ++i) {
            acc += w[i] * (encoding[static_cast<size_t>(i)] - mean_[static_cast<size_t>(i)]) *
                   scale_[static_cast<size_t>(i)];
        }
        out[static_cast<size_t>(h)] = std::tanh(acc);
    }
    return out;
}

// ---------------------------------------------------------------------------
// FID

namespace {

void gaussian_fit(const std::vector<std::vector<double>>& features, Eigen::VectorXd& mu,
                  Eigen::MatrixXd& sigma) {
    const auto n = static_cast<Eigen::Index>(features.size());
    const auto d = static_cast<Eigen::Index>(features.front().size());
    Eigen::MatrixXd x(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
            x(i, j) = features[static_cast<size_t>(i)][static_cast<size_t>(j)];
        }
    }
    mu = x.colwise().mean();
    const Eigen::MatrixXd centered = x.rowwise() - mu.transpose();
    sigma = centered.transpose() * centered / static_cast<double>(n - 1);
    sigma += 1e-6 * Eigen::MatrixXd::Identity(d, d);
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
    Eigen::VectorXd vals = solver.eigenvalues();
    for (Eigen::Index i = 0; i < vals.size(); ++i) {
        vals(i) = std::sqrt(std::max(0.0, vals(i)));
    }
    return solver.eigenvectors() * vals.asDiagonal() * solver.eigenvectors().transpose();
}

}  // namespace

double fid(const std::vector<std::vector<double>>& features_a,
           const std::vector<std::vector<double>>& features_b) {
    if (features_a.size() < 2 || features_b.size() < 2) {
        throw std::invalid_argument("fid: need at least two samples per set");
    }
    const size_t d = features_a.front().size();
    for (const auto& f : features_a) {
        if (f.size() != d) throw std::invalid_argument("fid: ragged feature set");
    }
    for (const auto& f : features_b) {
        if (f.size() != d) throw std::invalid_argument("fid: feature dimensions differ");
    }

    Eigen::VectorXd mu_a, mu_b;
    Eigen::MatrixXd sigma_a, sigma_b;
    gaussian_fit(features_a, mu_a, sigma_a);
    gaussian_fit(features_b, mu_b, sigma_b);

    // Tr((Sa Sb)^(1/2)) via the symmetrized product Sa^(1/2) Sb Sa^(1/2).
    const Eigen::MatrixXd root_a = psd_sqrt(sigma_a);
    Eigen::MatrixXd inner = root_a * sigma_b * root_a;
    inner = 0.5 * (inner + inner.transpose());
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(inner);
    double trace_sqrt = 0.0;
    for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) {
        trace_sqrt += std::sqrt(std::max(0.0, solver.eigenvalues()(i)));
    }

    const double mean_term = (mu_a - mu_b).squaredNorm();
    return mean_term + sigma_a.trace() + sigma_b.trace() - 2.0 * trace_sqrt;
}

// ---------------------------------------------------------------------------
// decoding success rate

DecodingStats decoding_success_rate(const ModelParameters& params, const Vocabulary& vocab, int n,
                                    const SamplerConfig& cfg, const QuantizerConfig& qcfg,
                                    const SerializerConfig& scfg) {
    if (n <= 0) {
        throw std::invalid_argument("decoding_success_rate: sample count must be positive");
    }
    DecodingStats stats;
    const TokenSequence prefix{{vocab.start_id()}};
    for (int i = 0; i < n; ++i) {
        Rng rng = Rng::derive(cfg.seed, static_cast<uint64_t>(i));
        const TokenSequence tokens = sample(params, prefix, cfg, vocab.end_id(), rng);
        const ParseOutcome outcome = parse(detokenize(tokens, vocab), qcfg, scfg);
        ++stats.total;
        if (outcome.ok()) {
            ++stats.valid;
        } else {
            ++stats.error_counts[to_string(outcome.error->kind)];
        }
    }
    return stats;
}

std::string to_json(const EvalReport& report) {
    nlohmann::ordered_json j;
    j["perplexity"] = report.perplexity;
    j["rouge_l"] = {{"precision", report.rouge.precision},
                    {"recall", report.rouge.recall},
                    {"f1", report.rouge.f1}};
    j["fid"] = report.fid;
    j["decoding_success_rate"] = report.decoding_success_rate;
    j["n_samples"] = report.n_samples;
    j["sampler_config_digest"] = report.sampler_config_digest;
    j["parse_errors"] = report.parse_errors;
    return j.dump(2) + "\n";
}

}  // namespace sbgen
