#include "sbgen/run_config.hpp"

#include <stdexcept>

#include <json.hpp>

#include "sbgen/util.hpp"

namespace sbgen {

namespace {

using nlohmann::json;

template <typename T>
void maybe(const json& j, const char* key, T& out) {
    if (j.contains(key)) {
        out = j.at(key).get<T>();
    }
}

}  // namespace

RunConfig RunConfig::from_json(const std::string& text) {
    RunConfig cfg;
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("run config: ") + e.what());
    }

    try {
        if (j.contains("quantizer")) {
            const json& q = j.at("quantizer");
            maybe(q, "bins", cfg.quantizer.bins);
            maybe(q, "canvas", cfg.quantizer.canvas);
        }
        if (j.contains("serializer")) {
            const json& s = j.at("serializer");
            maybe(s, "max_tokens", cfg.serializer.max_tokens);
            maybe(s, "max_shots_with_keypoints", cfg.serializer.max_shots_with_keypoints);
            maybe(s, "max_shots_box_only", cfg.serializer.max_shots_box_only);
            maybe(s, "keypoint_index_set", cfg.serializer.keypoint_index_set);
            maybe(s, "sparse_index_set", cfg.serializer.sparse_index_set);
        }
        if (j.contains("model")) {
            const json& m = j.at("model");
            maybe(m, "n_layers", cfg.model.n_layers);
            maybe(m, "n_heads", cfg.model.n_heads);
            maybe(m, "d_model", cfg.model.d_model);
            maybe(m, "d_ff", cfg.model.d_ff);
            maybe(m, "context_window", cfg.model.context_window);
            maybe(m, "dropout", cfg.model.dropout);
        }
        if (j.contains("train")) {
            const json& t = j.at("train");
            maybe(t, "lr_max", cfg.train.lr_max);
            maybe(t, "lr_min", cfg.train.lr_min);
            maybe(t, "total_iterations", cfg.train.total_iterations);
            maybe(t, "batch_size", cfg.train.batch_size);
            maybe(t, "weight_decay", cfg.train.weight_decay);
            maybe(t, "beta1", cfg.train.beta1);
            maybe(t, "beta2", cfg.train.beta2);
            maybe(t, "adam_eps", cfg.train.adam_eps);
            maybe(t, "grad_clip", cfg.train.grad_clip);
            maybe(t, "seed", cfg.train.seed);
        }
        if (j.contains("sampler")) {
            const json& s = j.at("sampler");
            maybe(s, "temperature", cfg.sampler.temperature);
            maybe(s, "top_k", cfg.sampler.top_k);
            maybe(s, "max_new_tokens", cfg.sampler.max_new_tokens);
            maybe(s, "seed", cfg.sampler.seed);
        }
        maybe(j, "min_count", cfg.min_count);
        maybe(j, "instruction_mix", cfg.instruction_mix);
        maybe(j, "seed", cfg.seed);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("run config: ") + e.what());
    }

    cfg.check();
    return cfg;
}

RunConfig RunConfig::from_json_file(const std::string& path) {
    return from_json(read_file(path));
}

std::string RunConfig::to_json() const {
    nlohmann::ordered_json j;
    j["quantizer"] = {{"bins", quantizer.bins}, {"canvas", quantizer.canvas}};
    j["serializer"] = {{"max_tokens", serializer.max_tokens},
                       {"max_shots_with_keypoints", serializer.max_shots_with_keypoints},
                       {"max_shots_box_only", serializer.max_shots_box_only},
                       {"keypoint_index_set", serializer.keypoint_index_set},
                       {"sparse_index_set", serializer.sparse_index_set}};
    j["model"] = {{"n_layers", model.n_layers},
                  {"n_heads", model.n_heads},
                  {"d_model", model.d_model},
                  {"d_ff", model.d_ff},
                  {"context_window", model.context_window},
                  {"dropout", model.dropout}};
    j["train"] = {{"lr_max", train.lr_max},
                  {"lr_min", train.lr_min},
                  {"total_iterations", train.total_iterations},
                  {"batch_size", train.batch_size},
                  {"weight_decay", train.weight_decay},
                  {"beta1", train.beta1},
                  {"beta2", train.beta2},
                  {"adam_eps", train.adam_eps},
                  {"grad_clip", train.grad_clip},
                  {"seed", train.seed}};
    j["sampler"] = {{"temperature", sampler.temperature},
                    {"top_k", sampler.top_k},
                    {"max_new_tokens", sampler.max_new_tokens},
                    {"seed", sampler.seed}};
    j["min_count"] = min_count;
    j["instruction_mix"] = instruction_mix;
    j["seed"] = seed;
    return j.dump(2) + "\n";
}

void RunConfig::check() const {
    if (quantizer.bins < 2) {
        throw std::invalid_argument("run config: quantizer.bins must be >= 2");
    }
    if (!(quantizer.canvas > 0.0)) {
        throw std::invalid_argument("run config: quantizer.canvas must be positive");
    }
    if (serializer.max_tokens < 1 || serializer.max_shots_with_keypoints < 1 ||
        serializer.max_shots_box_only < 1) {
        throw std::invalid_argument("run config: serializer budgets must be positive");
    }
    if (!(sampler.temperature > 0.0)) {
        throw std::invalid_argument("run config: sampler.temperature must be positive");
    }
    if (sampler.top_k < 0 || sampler.max_new_tokens < 1) {
        throw std::invalid_argument("run config: sampler limits out of range");
    }
    const bool train_ok = train.lr_max > 0.0 && train.lr_min > 0.0 &&
                          train.total_iterations >= 1 && train.batch_size >= 1 &&
                          train.weight_decay >= 0.0 && train.beta1 > 0.0 && train.beta1 < 1.0 &&
                          train.beta2 > 0.0 && train.beta2 < 1.0 && train.adam_eps > 0.0 &&
                          train.grad_clip >= 0.0;
    if (!train_ok) {
        throw std::invalid_argument("run config: train section out of range");
    }
    if (min_count < 1) {
        throw std::invalid_argument("run config: min_count must be >= 1");
    }
    if (instruction_mix < 0.0 || instruction_mix > 1.0) {
        throw std::invalid_argument("run config: instruction_mix must lie in [0, 1]");
    }
}

}  // namespace sbgen
