// Command-line front end: gen-synthetic, validate, encode, decode, train,
// sample, eval, render. All outputs are written atomically and every run is
// reproducible from its config and seed.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sbgen/checkpoint.hpp"
#include "sbgen/codec.hpp"
#include "sbgen/dataset.hpp"
#include "sbgen/eval.hpp"
#include "sbgen/instruction.hpp"
#include "sbgen/model.hpp"
#include "sbgen/render.hpp"
#include "sbgen/run_config.hpp"
#include "sbgen/sampler.hpp"
#include "sbgen/train.hpp"
#include "sbgen/util.hpp"

namespace {

using namespace sbgen;

enum class LogLevel { quiet = 0, info = 1, debug = 2 };

LogLevel log_level() {
    static const LogLevel level = [] {
        const char* env = std::getenv("SBGEN_LOG");
        if (!env) return LogLevel::info;
        const std::string v(env);
        if (v == "quiet") return LogLevel::quiet;
        if (v == "debug") return LogLevel::debug;
        return LogLevel::info;
    }();
    return level;
}

void log_info(const std::string& msg) {
    if (log_level() >= LogLevel::info) std::cerr << msg << "\n";
}

void log_debug(const std::string& msg) {
    if (log_level() >= LogLevel::debug) std::cerr << msg << "\n";
}

std::vector<std::string> read_lines(const std::string& path) {
    std::istringstream in(read_file(path));
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
        if (!line.empty()) lines.push_back(line);
    }
    return lines;
}

std::string board_file_name(const Storyboard& sb) { return sb.id + ".json"; }

// ---------------------------------------------------------------------------

int cmd_gen_synthetic(const RunConfig& run, const std::string& out_dir, int count, uint64_t seed,
                      double holdout) {
    SyntheticCorpusConfig cfg;
    cfg.count = count;
    cfg.seed = seed;
    const std::vector<Storyboard> boards = generate_synthetic(cfg);

    SplitConfig scfg;
    scfg.holdout_fraction = holdout;
    scfg.seed = seed;
    std::vector<std::string> tags(boards.size());
    {
        // reuse split() for the assignment, then recover the tag per board
        const SplitResult r = split(boards, {}, scfg);
        std::map<std::string, std::string> by_id;
        for (const Storyboard& sb : r.train) by_id[sb.id] = "train";
        for (const Storyboard& sb : r.test_a) by_id[sb.id] = "testA";
        for (const Storyboard& sb : r.test_b) by_id[sb.id] = "testB";
        for (size_t i = 0; i < boards.size(); ++i) tags[i] = by_id.at(boards[i].id);
    }

    DatasetManifest manifest;
    manifest.root = out_dir;
    for (size_t i = 0; i < boards.size(); ++i) {
        const std::string name = board_file_name(boards[i]);
        save_storyboard(boards[i], out_dir + "/" + name);
        manifest.entries.push_back({name, tags[i]});
    }
    atomic_write_file(out_dir + "/manifest.txt", manifest.to_text());
    log_info("wrote " + std::to_string(boards.size()) + " storyboards to " + out_dir);
    (void)run;
    return 0;
}

int cmd_validate(const std::string& manifest_path, const std::vector<std::string>& files) {
    std::vector<std::pair<std::string, Storyboard>> boards;
    int failures = 0;

    if (!manifest_path.empty()) {
        const DatasetManifest manifest = DatasetManifest::read(manifest_path);
        const LoadReport report = load(manifest);
        for (const LoadReport::Problem& p : report.problems) {
            std::cout << p.file << ": " << p.message << "\n";
            ++failures;
        }
        for (size_t i = 0; i < report.storyboards.size(); ++i) {
            boards.emplace_back(report.storyboards[i].id, report.storyboards[i]);
        }
    }
    for (const std::string& file : files) {
        try {
            boards.emplace_back(file, load_storyboard(file));
        } catch (const std::exception& e) {
            std::cout << file << ": " << e.what() << "\n";
            ++failures;
        }
    }

    for (const auto& [name, sb] : boards) {
        const ValidationReport report = validate(sb);
        if (report.ok()) {
            log_debug(name + ": ok");
            continue;
        }
        ++failures;
        for (const Violation& v : report.violations) {
            std::cout << name << ": " << v.path << ": " << v.message << "\n";
        }
    }
    log_info(std::to_string(boards.size()) + " storyboards checked, " + std::to_string(failures) +
             " with problems");
    return failures == 0 ? 0 : 1;
}

// Tier-vs-area violations are advisory during encoding: decoded layouts
// carry their tier in the block arity, and the hull box that stands in for
// keypoint characters need not land in the same area band.
const Violation* blocking_violation(const ValidationReport& vr) {
    for (const Violation& v : vr.violations) {
        if (v.path.size() < 5 || v.path.substr(v.path.size() - 5) != ".tier") {
            return &v;
        }
    }
    return nullptr;
}

int cmd_encode(const RunConfig& run, const std::string& manifest_path, const std::string& out_path,
               const std::string& report_path, const std::string& split_filter) {
    const DatasetManifest manifest = DatasetManifest::read(manifest_path);
    const LoadReport loaded = load(manifest);

    nlohmann::ordered_json errors = nlohmann::ordered_json::array();
    for (const LoadReport::Problem& p : loaded.problems) {
        errors.push_back({{"file", p.file}, {"message", p.message}});
    }

    std::string corpus_text;
    long encoded = 0;
    for (size_t i = 0; i < loaded.storyboards.size(); ++i) {
        if (!split_filter.empty() && loaded.tags[i] != split_filter) continue;
        const Storyboard& sb = loaded.storyboards[i];
        const ValidationReport vr = validate(sb);
        if (const Violation* v = blocking_violation(vr)) {
            errors.push_back({{"file", sb.id}, {"message", v->path + ": " + v->message}});
            continue;
        }
        try {
            const PromptSequence seq = serialize(sb, run.quantizer, run.serializer);
            corpus_text += seq.text;
            corpus_text.push_back('\n');
            ++encoded;
            if (run.instruction_mix > 0.0 && sb.summative.has_value()) {
                Rng rng = Rng::derive(run.seed, i);
                if (rng.next_real01() < run.instruction_mix) {
                    const InstructionPair pair =
                        make_instruction_pair(*sb.summative, sb, run.quantizer, run.serializer);
                    corpus_text += instruction_training_text(pair);
                    corpus_text.push_back('\n');
                    ++encoded;
                }
            }
        } catch (const std::exception& e) {
            errors.push_back({{"file", sb.id}, {"message", e.what()}});
        }
    }

    atomic_write_file(out_path, corpus_text);
    if (!report_path.empty()) {
        nlohmann::ordered_json report;
        report["records"] = loaded.storyboards.size() + loaded.problems.size();
        report["encoded"] = encoded;
        report["errors"] = errors;
        atomic_write_file(report_path, report.dump(2) + "\n");
    }
    log_info("encoded " + std::to_string(encoded) + " sequences to " + out_path + " (" +
             std::to_string(errors.size()) + " errors)");
    return errors.empty() ? 0 : 1;
}

int cmd_decode(const RunConfig& run, const std::string& input_path, const std::string& out_dir,
               const std::string& report_path) {
    const std::vector<std::string> lines = read_lines(input_path);
    nlohmann::ordered_json errors = nlohmann::ordered_json::array();
    long decoded = 0;
    for (size_t i = 0; i < lines.size(); ++i) {
        const ParseOutcome outcome = parse(lines[i], run.quantizer, run.serializer);
        if (outcome.ok()) {
            Storyboard sb = *outcome.storyboard;
            char name[32];
            std::snprintf(name, sizeof name, "%06zu.json", i);
            sb.id = std::string(name, 6);  // zero-padded line index
            save_storyboard(sb, out_dir + "/" + name);
            ++decoded;
        } else {
            errors.push_back({{"line", i + 1},
                              {"kind", to_string(outcome.error->kind)},
                              {"token_index", outcome.error->token_index},
                              {"message", outcome.error->message}});
        }
    }
    if (!report_path.empty()) {
        nlohmann::ordered_json report;
        report["lines"] = lines.size();
        report["decoded"] = decoded;
        report["errors"] = errors;
        atomic_write_file(report_path, report.dump(2) + "\n");
    }
    log_info("decoded " + std::to_string(decoded) + "/" + std::to_string(lines.size()) +
             " sequences into " + out_dir);
    return errors.empty() ? 0 : 1;
}

int cmd_train(RunConfig run, const std::string& corpus_path, const std::string& ckpt_path,
              const std::string& loss_csv_path) {
    const std::vector<std::string> lines = read_lines(corpus_path);
    if (lines.empty()) {
        std::cerr << "train: corpus is empty\n";
        return 1;
    }
    std::vector<PromptSequence> corpus;
    corpus.reserve(lines.size());
    for (const std::string& line : lines) corpus.push_back(PromptSequence{line});

    const Vocabulary vocab = Vocabulary::build(corpus, run.min_count, run.quantizer.bins);
    log_info("vocabulary: " + std::to_string(vocab.size()) + " words (hash " +
             to_hex(vocab.hash()) + ")");

    std::vector<TokenSequence> tokens;
    tokens.reserve(corpus.size());
    long skipped = 0;
    for (const PromptSequence& seq : corpus) {
        TokenSequence t = tokenize(seq, vocab);
        if (static_cast<int>(t.ids.size()) > run.model.context_window) {
            ++skipped;
            continue;
        }
        if (t.ids.size() >= 2) tokens.push_back(std::move(t));
    }
    if (skipped > 0) {
        log_info("skipped " + std::to_string(skipped) + " over-length sequences");
    }
    if (tokens.empty()) {
        std::cerr << "train: no usable sequences\n";
        return 1;
    }

    run.model.vocab_size = vocab.size();
    ModelParameters params = ModelParameters::init(run.model, run.train.seed);
    log_info("model: " + std::to_string(params.parameter_count()) + " parameters");

    std::string csv = "iteration,loss,lr\n";
    const long total = run.train.total_iterations;
    const TrainResult result =
        train(params, tokens, run.train, vocab.pad_id(), [&csv, total](const TrainRecord& r) {
            std::ostringstream row;
            row << r.iteration << "," << r.loss << "," << r.lr;
            csv += row.str();
            csv.push_back('\n');
            if ((r.iteration + 1) % 50 == 0 || r.iteration + 1 == total) {
                log_info("iteration " + std::to_string(r.iteration + 1) + "/" +
                         std::to_string(total) + " loss " + std::to_string(r.loss));
            }
        });

    save_checkpoint(ckpt_path, params, vocab);
    if (!loss_csv_path.empty()) {
        atomic_write_file(loss_csv_path, csv);
    }
    log_info("final loss " + std::to_string(result.final_loss()) + "; checkpoint " + ckpt_path +
             " (digest " + to_hex(file_digest(ckpt_path)) + ")");
    return 0;
}

TokenSequence mode_prefix(const std::string& mode, const std::string& synopsis_text,
                          const std::string& instruction_text, const Vocabulary& vocab) {
    std::string prefix_text;
    if (mode == "unconditional") {
        prefix_text = std::string(Vocabulary::kStart);
    } else if (mode == "synopsis") {
        if (synopsis_text.empty()) {
            throw std::invalid_argument("sample: --synopsis is required in synopsis mode");
        }
        Synopsis syn;
        syn.kind = SynopsisKind::Condensed;
        syn.texts = {synopsis_text};
        prefix_text = synopsis_prefix(syn);
    } else if (mode == "instruction") {
        if (instruction_text.empty()) {
            throw std::invalid_argument("sample: --instruction is required in instruction mode");
        }
        prefix_text = instruction_prefix(instruction_text);
    } else {
        throw std::invalid_argument("sample: unknown mode '" + mode + "'");
    }
    return tokenize(PromptSequence{prefix_text}, vocab);
}

int cmd_sample(const RunConfig& run, const std::string& ckpt_path, const std::string& mode,
               int n, const std::string& synopsis_text, const std::string& instruction_text,
               const std::string& out_path) {
    const LoadedCheckpoint ckpt = load_checkpoint(ckpt_path);
    const TokenSequence prefix = mode_prefix(mode, synopsis_text, instruction_text, ckpt.vocab);

    SamplerConfig scfg = run.sampler;
    if (static_cast<long>(prefix.ids.size()) + scfg.max_new_tokens >
        ckpt.params.config.context_window) {
        scfg.max_new_tokens =
            ckpt.params.config.context_window - static_cast<int>(prefix.ids.size());
    }

    std::string out_text;
    for (int i = 0; i < n; ++i) {
        Rng rng = Rng::derive(scfg.seed, static_cast<uint64_t>(i));
        const TokenSequence tokens = sample(ckpt.params, prefix, scfg, ckpt.vocab.end_id(), rng);
        out_text += detokenize(tokens, ckpt.vocab);
        out_text.push_back('\n');
    }
    atomic_write_file(out_path, out_text);
    log_info("wrote " + std::to_string(n) + " " + mode + " samples to " + out_path);
    return 0;
}

int cmd_eval(const RunConfig& run, const std::string& ckpt_path, const std::string& manifest_path,
             int n, const std::string& out_path, const std::string& samples_out,
             const std::string& split_filter) {
    const LoadedCheckpoint ckpt = load_checkpoint(ckpt_path);
    const DatasetManifest manifest = DatasetManifest::read(manifest_path);
    const LoadReport loaded = load(manifest);
    for (const LoadReport::Problem& p : loaded.problems) {
        log_info("eval: skipping " + p.file + ": " + p.message);
    }
    if (loaded.storyboards.empty()) {
        std::cerr << "eval: no storyboards loaded\n";
        return 1;
    }

    // reference sequences and canvas-space reference layouts
    std::vector<TokenSequence> reference_tokens;
    std::vector<Storyboard> reference_layouts;
    std::vector<std::string> reference_texts;
    for (size_t bi = 0; bi < loaded.storyboards.size(); ++bi) {
        if (!split_filter.empty() && loaded.tags[bi] != split_filter) continue;
        const Storyboard& sb = loaded.storyboards[bi];
        const ValidationReport vr = validate(sb);
        if (blocking_violation(vr) != nullptr) {
            log_info("eval: skipping invalid storyboard " + sb.id);
            continue;
        }
        const PromptSequence seq = serialize(sb, run.quantizer, run.serializer);
        TokenSequence t = tokenize(seq, ckpt.vocab);
        if (static_cast<int>(t.ids.size()) > ckpt.params.config.context_window) continue;
        const ParseOutcome ref = parse(seq.text, run.quantizer, run.serializer);
        if (!ref.ok()) continue;
        Storyboard layout = *ref.storyboard;
        layout.summative = sb.summative;  // keep the label source
        reference_texts.push_back(seq.text);
        reference_tokens.push_back(std::move(t));
        reference_layouts.push_back(std::move(layout));
    }
    if (reference_tokens.empty()) {
        std::cerr << "eval: no usable reference sequences\n";
        return 1;
    }

    EvalReport report;
    report.n_samples = n;
    report.sampler_config_digest = to_hex(sampler_digest(run.sampler));
    report.perplexity = perplexity(ckpt.params, reference_tokens, ckpt.vocab.pad_id());
    log_info("perplexity " + std::to_string(report.perplexity) + " over " +
             std::to_string(reference_tokens.size()) + " sequences");

    // synopsis-conditioned samples against their references
    const size_t n_cond = std::min<size_t>(reference_texts.size(), static_cast<size_t>(n));
    std::vector<Storyboard> generated_layouts;
    std::string samples_text;
    double sum_p = 0.0, sum_r = 0.0, sum_f = 0.0;
    for (size_t i = 0; i < n_cond; ++i) {
        const TokenSequence prefix = tokenize(
            PromptSequence{synopsis_prefix(reference_layouts[i].synopsis)}, ckpt.vocab);
        SamplerConfig scfg = run.sampler;
        scfg.max_new_tokens = std::min<int>(
            scfg.max_new_tokens,
            ckpt.params.config.context_window - static_cast<int>(prefix.ids.size()));
        Rng rng = Rng::derive(run.sampler.seed, 0x636f6e64 + i);
        const TokenSequence tokens = sample(ckpt.params, prefix, scfg, ckpt.vocab.end_id(), rng);
        const std::string text = detokenize(tokens, ckpt.vocab);
        samples_text += text;
        samples_text.push_back('\n');
        const RougeScore rouge = rouge_l(text, reference_texts[i]);
        sum_p += rouge.precision;
        sum_r += rouge.recall;
        sum_f += rouge.f1;
        const ParseOutcome gen = parse(text, run.quantizer, run.serializer);
        if (gen.ok()) generated_layouts.push_back(*gen.storyboard);
    }
    if (n_cond > 0) {
        report.rouge.precision = sum_p / static_cast<double>(n_cond);
        report.rouge.recall = sum_r / static_cast<double>(n_cond);
        report.rouge.f1 = sum_f / static_cast<double>(n_cond);
    }
    log_info("rouge-l f1 " + std::to_string(report.rouge.f1) + " over " + std::to_string(n_cond) +
             " conditioned samples (" + std::to_string(generated_layouts.size()) + " decodable)");

    // FID over layout features; the extractor is fit on the reference side
    if (generated_layouts.size() >= 2 && reference_layouts.size() >= 2) {
        std::vector<std::vector<double>> enc;
        std::vector<int> labels;
        std::map<std::string, int> label_ids;
        for (const Storyboard& sb : reference_layouts) {
            enc.push_back(layout_encoding(sb));
            const std::string scene = sb.summative ? sb.summative->scene : "unknown";
            labels.push_back(
                label_ids.emplace(scene, static_cast<int>(label_ids.size())).first->second);
        }
        FeatureExtractorConfig fcfg;
        fcfg.seed = run.seed;
        const LayoutFeatureExtractor extractor = LayoutFeatureExtractor::train(
            enc, labels, static_cast<int>(label_ids.size()), fcfg);
        std::vector<std::vector<double>> ref_features, gen_features;
        for (const std::vector<double>& e : enc) ref_features.push_back(extractor.features(e));
        for (const Storyboard& sb : generated_layouts) {
            gen_features.push_back(extractor.features(layout_encoding(sb)));
        }
        report.fid = fid(ref_features, gen_features);
    } else {
        report.fid = -1.0;  // not computable from fewer than two decodable samples
    }
    log_info("fid " + std::to_string(report.fid));

    // unconditional decoding success rate
    const DecodingStats stats = decoding_success_rate(ckpt.params, ckpt.vocab, n, run.sampler,
                                                      run.quantizer, run.serializer);
    report.decoding_success_rate = stats.rate();
    report.parse_errors = stats.error_counts;
    log_info("decoding success rate " + std::to_string(report.decoding_success_rate) + " over " +
             std::to_string(n) + " samples");

    atomic_write_file(out_path, to_json(report));
    if (!samples_out.empty()) {
        atomic_write_file(samples_out, samples_text);
    }
    log_info("report written to " + out_path);
    return 0;
}

int cmd_render(const std::string& input_path, const std::string& out_dir,
               const std::string& prefix) {
    const Storyboard sb = load_storyboard(input_path);
    const RenderStyle style;
    const std::vector<std::string> svgs = render_storyboard(sb, style);
    for (size_t i = 0; i < svgs.size(); ++i) {
        char name[48];
        std::snprintf(name, sizeof name, "%s_%03zu.svg", prefix.c_str(), i);
        atomic_write_file(out_dir + "/" + name, svgs[i]);
    }
    log_info("rendered " + std::to_string(svgs.size()) + " shots to " + out_dir);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"storyboard sequence modeling toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "JSON run config (flags override fields)")
        ->check(CLI::ExistingFile);

    // gen-synthetic
    auto* gen = app.add_subcommand("gen-synthetic", "generate a synthetic storyboard corpus");
    std::string gen_out;
    int gen_count = 100;
    uint64_t gen_seed = 0;
    bool gen_seed_set = false;
    double gen_holdout = 0.1;
    gen->add_option("--out", gen_out, "output directory")->required();
    gen->add_option("--count", gen_count, "number of storyboards");
    gen->add_option("--seed", gen_seed, "generator seed")->each([&](const std::string&) {
        gen_seed_set = true;
    });
    gen->add_option("--holdout", gen_holdout, "held-out fraction for the test splits");

    // validate
    auto* val = app.add_subcommand("validate", "check storyboards against the invariants");
    std::string val_manifest;
    std::vector<std::string> val_files;
    val->add_option("--manifest", val_manifest, "dataset manifest");
    val->add_option("files", val_files, "storyboard JSON files");

    // encode
    auto* enc = app.add_subcommand("encode", "serialize storyboards into a token corpus");
    std::string enc_manifest, enc_out, enc_report, enc_split;
    enc->add_option("--manifest", enc_manifest, "dataset manifest")->required();
    enc->add_option("--out", enc_out, "corpus file (one sequence per line)")->required();
    enc->add_option("--report", enc_report, "sidecar error report (JSON)");
    enc->add_option("--split", enc_split, "only encode entries tagged with this split");

    // decode
    auto* dec = app.add_subcommand("decode", "parse sequences back into storyboards");
    std::string dec_input, dec_out, dec_report;
    dec->add_option("--input", dec_input, "sequence file")->required()->check(CLI::ExistingFile);
    dec->add_option("--out", dec_out, "output directory")->required();
    dec->add_option("--report", dec_report, "sidecar error report (JSON)");

    // train
    auto* tr = app.add_subcommand("train", "train the sequence model");
    std::string tr_corpus, tr_out, tr_loss;
    tr->add_option("--corpus", tr_corpus, "token corpus")->required()->check(CLI::ExistingFile);
    tr->add_option("--out", tr_out, "checkpoint path")->required();
    tr->add_option("--loss-csv", tr_loss, "loss curve CSV (iteration,loss,lr)");
    long tr_iterations = -1;
    uint64_t tr_seed = 0;
    bool tr_seed_set = false;
    tr->add_option("--iterations", tr_iterations, "override train.total_iterations");
    tr->add_option("--seed", tr_seed, "override train.seed")->each([&](const std::string&) {
        tr_seed_set = true;
    });

    // sample
    auto* sa = app.add_subcommand("sample", "draw sequences from a trained model");
    std::string sa_ckpt, sa_mode = "unconditional", sa_synopsis, sa_instruction, sa_out;
    int sa_n = 10;
    double sa_temperature = -1.0;
    int sa_top_k = -1;
    uint64_t sa_seed = 0;
    bool sa_seed_set = false;
    sa->add_option("--checkpoint", sa_ckpt, "model checkpoint")->required()->check(CLI::ExistingFile);
    sa->add_option("--mode", sa_mode, "unconditional | synopsis | instruction");
    sa->add_option("--n", sa_n, "number of samples");
    sa->add_option("--synopsis", sa_synopsis, "condensed synopsis for synopsis mode");
    sa->add_option("--instruction", sa_instruction, "instruction for instruction mode");
    sa->add_option("--out", sa_out, "output file (one sequence per line)")->required();
    sa->add_option("--temperature", sa_temperature, "override sampler.temperature");
    sa->add_option("--top-k", sa_top_k, "override sampler.top_k");
    sa->add_option("--seed", sa_seed, "override sampler.seed")->each([&](const std::string&) {
        sa_seed_set = true;
    });

    // eval
    auto* ev = app.add_subcommand("eval", "score a model on a test manifest");
    std::string ev_ckpt, ev_manifest, ev_out, ev_samples;
    int ev_n = 100;
    uint64_t ev_seed = 0;
    bool ev_seed_set = false;
    ev->add_option("--checkpoint", ev_ckpt, "model checkpoint")->required()->check(CLI::ExistingFile);
    ev->add_option("--manifest", ev_manifest, "test manifest")->required()->check(CLI::ExistingFile);
    ev->add_option("--n", ev_n, "sample count for the generation metrics");
    ev->add_option("--out", ev_out, "report JSON path")->required();
    ev->add_option("--samples-out", ev_samples, "also write the conditioned samples");
    std::string ev_split;
    ev->add_option("--split", ev_split, "only score entries tagged with this split");
    ev->add_option("--seed", ev_seed, "override sampler.seed")->each([&](const std::string&) {
        ev_seed_set = true;
    });

    // render
    auto* re = app.add_subcommand("render", "render a storyboard to SVG, one file per shot");
    std::string re_input, re_out, re_prefix = "shot";
    re->add_option("--input", re_input, "storyboard JSON")->required()->check(CLI::ExistingFile);
    re->add_option("--out", re_out, "output directory")->required();
    re->add_option("--prefix", re_prefix, "output file prefix");

    CLI11_PARSE(app, argc, argv);

    try {
        RunConfig run;
        if (!config_path.empty()) {
            run = RunConfig::from_json_file(config_path);
        }

        if (gen->parsed()) {
            return cmd_gen_synthetic(run, gen_out, gen_count,
                                     gen_seed_set ? gen_seed : run.seed, gen_holdout);
        }
        if (val->parsed()) {
            return cmd_validate(val_manifest, val_files);
        }
        if (enc->parsed()) {
            return cmd_encode(run, enc_manifest, enc_out, enc_report, enc_split);
        }
        if (dec->parsed()) {
            return cmd_decode(run, dec_input, dec_out, dec_report);
        }
        if (tr->parsed()) {
            if (tr_iterations > 0) run.train.total_iterations = tr_iterations;
            if (tr_seed_set) run.train.seed = tr_seed;
            return cmd_train(run, tr_corpus, tr_out, tr_loss);
        }
        if (sa->parsed()) {
            RunConfig r = run;
            if (sa_temperature > 0.0) r.sampler.temperature = sa_temperature;
            if (sa_top_k >= 0) r.sampler.top_k = sa_top_k;
            if (sa_seed_set) r.sampler.seed = sa_seed;
            return cmd_sample(r, sa_ckpt, sa_mode, sa_n, sa_synopsis, sa_instruction, sa_out);
        }
        if (ev->parsed()) {
            RunConfig r = run;
            if (ev_seed_set) r.sampler.seed = ev_seed;
            return cmd_eval(r, ev_ckpt, ev_manifest, ev_n, ev_out, ev_samples, ev_split);
        }
        if (re->parsed()) {
            return cmd_render(re_input, re_out, re_prefix);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
