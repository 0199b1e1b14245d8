#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include "sbgen/dataset.hpp"
#include "sbgen/eval.hpp"
#include "sbgen/util.hpp"

using namespace sbgen;

namespace {

// Independent quadratic LCS: memoized recursion, distinct from the rolling
// dynamic program inside rouge_l.
long lcs_oracle_rec(const std::vector<std::string>& a, const std::vector<std::string>& b, size_t i,
                    size_t j, std::map<std::pair<size_t, size_t>, long>& memo) {
    if (i == a.size() || j == b.size()) return 0;
    const auto key = std::make_pair(i, j);
    const auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    long best;
    if (a[i] == b[j]) {
        best = 1 + lcs_oracle_rec(a, b, i + 1, j + 1, memo);
    } else {
        best = std::max(lcs_oracle_rec(a, b, i + 1, j, memo), lcs_oracle_rec(a, b, i, j + 1, memo));
    }
    memo[key] = best;
    return best;
}

RougeScore rouge_oracle(const std::string& cand, const std::string& ref) {
    const std::vector<std::string> a = lex(cand);
    const std::vector<std::string> b = lex(ref);
    if (a.empty() || b.empty()) return RougeScore{};
    std::map<std::pair<size_t, size_t>, long> memo;
    const double l = static_cast<double>(lcs_oracle_rec(a, b, 0, 0, memo));
    RougeScore s;
    s.precision = l / static_cast<double>(a.size());
    s.recall = l / static_cast<double>(b.size());
    s.f1 = l > 0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    return s;
}

std::string random_sentence(Rng& rng, int len) {
    static const std::vector<std::string> words = {"the",  "cat", "sat",  "dog", "ran",
                                                   "fast", "a",   "tree", "by",  "house"};
    std::string out;
    for (int i = 0; i < len; ++i) {
        if (i) out.push_back(' ');
        out += words[static_cast<size_t>(rng.next_int(0, static_cast<int64_t>(words.size()) - 1))];
    }
    return out;
}

std::vector<std::vector<double>> gaussian_cloud(Rng& rng, int n, double mean, double stddev) {
    std::vector<std::vector<double>> out;
    out.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        out.push_back({rng.next_normal(mean, stddev)});
    }
    return out;
}

}  // namespace

TEST_CASE("rouge_l on the pinned examples") {
    const RougeScore same = rouge_l("a b c", "a b c");
    CHECK(same.precision == doctest::Approx(1.0));
    CHECK(same.recall == doctest::Approx(1.0));
    CHECK(same.f1 == doctest::Approx(1.0));

    const RougeScore disjoint = rouge_l("x y z", "a b c");
    CHECK(disjoint.precision == doctest::Approx(0.0));
    CHECK(disjoint.f1 == doctest::Approx(0.0));

    const RougeScore partial = rouge_l("the cat sat", "the cat");
    CHECK(partial.precision == doctest::Approx(2.0 / 3.0));
    CHECK(partial.recall == doctest::Approx(1.0));
    CHECK(partial.f1 == doctest::Approx(0.8));

    const RougeScore empty = rouge_l("", "");
    CHECK(empty.precision == 0.0);
    CHECK(empty.recall == 0.0);
    CHECK(empty.f1 == 0.0);
}

TEST_CASE("rouge_l swap symmetry and oracle agreement") {
    Rng rng(41);
    for (int i = 0; i < 100; ++i) {
        const std::string a = random_sentence(rng, static_cast<int>(rng.next_int(1, 14)));
        const std::string b = random_sentence(rng, static_cast<int>(rng.next_int(1, 14)));
        const RougeScore fast = rouge_l(a, b);
        const RougeScore slow = rouge_oracle(a, b);
        CHECK(fast.precision == doctest::Approx(slow.precision).epsilon(1e-12));
        CHECK(fast.recall == doctest::Approx(slow.recall).epsilon(1e-12));
        CHECK(fast.f1 == doctest::Approx(slow.f1).epsilon(1e-12));

        const RougeScore swapped = rouge_l(b, a);
        CHECK(swapped.precision == doctest::Approx(fast.recall).epsilon(1e-12));
        CHECK(swapped.recall == doctest::Approx(fast.precision).epsilon(1e-12));
    }
}

TEST_CASE("perplexity of the uniform predictor equals the vocabulary size") {
    ModelConfig cfg;
    cfg.n_layers = 1;
    cfg.n_heads = 2;
    cfg.d_model = 8;
    cfg.d_ff = 16;
    cfg.context_window = 16;
    cfg.vocab_size = 21;
    const ModelParameters params = ModelParameters::zeros(cfg);
    const std::vector<TokenSequence> corpus = {TokenSequence{{1, 2, 3, 4}},
                                               TokenSequence{{5, 6, 7}}};
    CHECK(perplexity(params, corpus) == doctest::Approx(21.0).epsilon(1e-9));
    CHECK_THROWS_AS(perplexity(params, {}), std::invalid_argument);
}

TEST_CASE("perplexity is exp of the mean nll") {
    ModelConfig cfg;
    cfg.n_layers = 1;
    cfg.n_heads = 2;
    cfg.d_model = 8;
    cfg.d_ff = 16;
    cfg.context_window = 16;
    cfg.vocab_size = 13;
    const ModelParameters params = ModelParameters::init(cfg, 6);
    const std::vector<TokenSequence> corpus = {TokenSequence{{1, 2, 3, 4, 5}},
                                               TokenSequence{{6, 7, 8}},
                                               TokenSequence{{9, 10, 11, 12}}};
    NllResult total;
    for (const TokenSequence& seq : corpus) {
        const NllResult r = sequence_nll(params, seq.ids);
        total.sum += r.sum;
        total.count += r.count;
    }
    const double want = std::exp(total.sum / static_cast<double>(total.count));
    const double got = perplexity(params, corpus);
    CHECK(std::abs(got - want) / want < 1e-9);
}

TEST_CASE("layout encoding basics") {
    Storyboard empty;
    const std::vector<double> zero = layout_encoding(empty);
    REQUIRE(static_cast<int>(zero.size()) == kLayoutEncodingDim);
    for (double v : zero) CHECK(v == 0.0);

    SyntheticCorpusConfig cfg;
    cfg.count = 6;
    cfg.seed = 19;
    const std::vector<Storyboard> boards = generate_synthetic(cfg);
    const Storyboard& sb = boards[0];
    const std::vector<double> enc = layout_encoding(sb);

    // permuting boxes inside a shot changes nothing
    Storyboard shuffled = sb;
    for (Shot& shot : shuffled.shots) {
        std::reverse(shot.film_sets.begin(), shot.film_sets.end());
        std::reverse(shot.characters.begin(), shot.characters.end());
    }
    CHECK(layout_encoding(shuffled) == enc);

    // duplicating a shot's boxes doubles the count features
    Storyboard doubled = sb;
    for (Shot& shot : doubled.shots) {
        const auto fs = shot.film_sets;
        shot.film_sets.insert(shot.film_sets.end(), fs.begin(), fs.end());
        const auto ch = shot.characters;
        shot.characters.insert(shot.characters.end(), ch.begin(), ch.end());
    }
    const std::vector<double> denc = layout_encoding(doubled);
    for (int i : {1, 2, 3, 4, 5}) {
        CHECK(denc[static_cast<size_t>(i)] == doctest::Approx(2.0 * enc[static_cast<size_t>(i)]));
    }
    for (int i = 22; i < kLayoutEncodingDim; ++i) {
        CHECK(denc[static_cast<size_t>(i)] == doctest::Approx(2.0 * enc[static_cast<size_t>(i)]));
    }
    // means are unchanged by duplication
    for (int i = 6; i < 10; ++i) {
        CHECK(denc[static_cast<size_t>(i)] == doctest::Approx(enc[static_cast<size_t>(i)]));
    }
}

TEST_CASE("fid matches the closed-form 1-D Frechet distance") {
    Rng rng(8);
    const int n = 10000;
    const auto a = gaussian_cloud(rng, n, 0.0, 1.0);
    const auto b = gaussian_cloud(rng, n, 3.0, 1.0);
    // closed form for diagonal Gaussians: (mu_a - mu_b)^2 + (s_a - s_b)^2
    CHECK(fid(a, b) == doctest::Approx(9.0).epsilon(0.5 / 9.0));

    const auto c = gaussian_cloud(rng, n, 0.0, 2.0);
    const auto base = gaussian_cloud(rng, n, 0.0, 1.0);
    CHECK(std::abs(fid(base, c) - 1.0) < 0.2);

    CHECK(fid(a, a) < 1e-6);
    CHECK(fid(a, b) == doctest::Approx(fid(b, a)).epsilon(1e-9));
    CHECK_THROWS_AS(fid({{1.0}}, a), std::invalid_argument);
}

TEST_CASE("mean shifts strictly increase fid") {
    Rng rng(15);
    const auto base = gaussian_cloud(rng, 4000, 0.0, 1.0);
    double prev = fid(base, gaussian_cloud(rng, 4000, 0.0, 1.0));
    for (double shift : {0.5, 1.0, 2.0}) {
        const double d = fid(base, gaussian_cloud(rng, 4000, shift, 1.0));
        CHECK(d > prev);
        prev = d;
    }
}

TEST_CASE("fid on multivariate features is symmetric and near zero on itself") {
    SyntheticCorpusConfig cfg;
    cfg.count = 80;
    cfg.seed = 3;
    const std::vector<Storyboard> boards = generate_synthetic(cfg);
    std::vector<std::vector<double>> enc;
    std::vector<int> labels;
    std::map<std::string, int> label_ids;
    for (const Storyboard& sb : boards) {
        enc.push_back(layout_encoding(sb));
        const std::string scene = sb.summative ? sb.summative->scene : "";
        labels.push_back(label_ids.emplace(scene, static_cast<int>(label_ids.size())).first->second);
    }
    FeatureExtractorConfig fcfg;
    fcfg.epochs = 20;
    const LayoutFeatureExtractor ex =
        LayoutFeatureExtractor::train(enc, labels, static_cast<int>(label_ids.size()), fcfg);
    CHECK(ex.feature_dim() == fcfg.hidden);

    std::vector<std::vector<double>> fa, fb;
    for (size_t i = 0; i < enc.size(); ++i) {
        (i % 2 == 0 ? fa : fb).push_back(ex.features(enc[i]));
    }
    // deterministic inference
    CHECK(ex.features(enc[0]) == ex.features(enc[0]));
    CHECK(fid(fa, fa) < 1e-6);
    const double ab = fid(fa, fb);
    CHECK(ab == doctest::Approx(fid(fb, fa)).epsilon(1e-6));
    CHECK(ab >= -1e-9);
}

TEST_CASE("embedding similarity hook with a toy provider") {
    // bag-of-letters embedding stands in for an external encoder
    const EmbeddingProvider provider = [](std::string_view text) {
        std::vector<double> v(26, 0.0);
        for (char c : text) {
            if (c >= 'a' && c <= 'z') v[static_cast<size_t>(c - 'a')] += 1.0;
        }
        return v;
    };
    CHECK(embedding_similarity("abc", "abc", provider) == doctest::Approx(1.0));
    CHECK(embedding_similarity("abc", "xyz", provider) == doctest::Approx(0.0));
    const double mixed = embedding_similarity("aab", "abb", provider);
    CHECK(mixed > 0.0);
    CHECK(mixed < 1.0);
    CHECK_THROWS_AS(embedding_similarity("a", "b", nullptr), std::invalid_argument);
}

TEST_CASE("eval report serializes with fixed keys") {
    EvalReport report;
    report.perplexity = 1.25;
    report.rouge = RougeScore{0.5, 0.25, 1.0 / 3.0};
    report.fid = 2.5;
    report.decoding_success_rate = 0.925;
    report.n_samples = 1000;
    report.sampler_config_digest = "deadbeef";
    report.parse_errors["wrong_arity"] = 3;
    const std::string a = to_json(report);
    const std::string b = to_json(report);
    CHECK(a == b);
    CHECK(a.find("\"perplexity\"") != std::string::npos);
    CHECK(a.find("\"decoding_success_rate\"") != std::string::npos);
    CHECK(a.find("\"rouge_l\"") < a.find("\"fid\""));
}
