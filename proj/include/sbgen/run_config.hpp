#pragma once

#include <string>

#include "sbgen/codec.hpp"
#include "sbgen/model.hpp"
#include "sbgen/sampler.hpp"
#include "sbgen/train.hpp"

namespace sbgen {

// One structured config for the whole pipeline; every section is optional
// and falls back to the defaults. Command-line flags override fields after
// loading. Numeric ranges are validated at parse time.
struct RunConfig {
    QuantizerConfig quantizer;
    SerializerConfig serializer;
    ModelConfig model;
    TrainConfig train;
    SamplerConfig sampler;
    int min_count = 1;             // vocabulary frequency threshold
    double instruction_mix = 0.0;  // fraction of boards also emitted as instruction pairs
    uint64_t seed = 0;

    static RunConfig from_json(const std::string& text);
    static RunConfig from_json_file(const std::string& path);
    std::string to_json() const;

    void check() const;  // throws std::invalid_argument on out-of-range values
};

}  // namespace sbgen
