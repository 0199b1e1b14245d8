#pragma once

#include <functional>
#include <vector>

#include "sbgen/codec.hpp"
#include "sbgen/model.hpp"

namespace sbgen {

struct TrainConfig {
    double lr_max = 5e-5;
    double lr_min = 5e-6;
    long total_iterations = 2000;
    int batch_size = 8;
    double weight_decay = 0.0;  // decoupled, applied to weight matrices only
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double grad_clip = 1.0;  // global-norm clip; 0 disables
    uint64_t seed = 0;
};

// Linear decay from lr_max at the first iteration to lr_min at the last.
double lr_at(const TrainConfig& cfg, long iteration);

struct TrainRecord {
    long iteration = 0;
    double loss = 0.0;  // batch mean NLL per predicted token
    double lr = 0.0;
};

struct TrainResult {
    std::vector<TrainRecord> curve;
    double final_loss() const { return curve.empty() ? 0.0 : curve.back().loss; }
};

// AdamW over mean NLL. Batches are drawn with replacement from the corpus,
// so the whole run is a pure function of (params, corpus, cfg). Targets equal
// to pad_id are excluded from the loss; throws std::runtime_error with a
// diagnostic if the loss stops being finite.
TrainResult train(ModelParameters& params, const std::vector<TokenSequence>& corpus,
                  const TrainConfig& cfg, int pad_id,
                  const std::function<void(const TrainRecord&)>& on_iteration = {});

}  // namespace sbgen
