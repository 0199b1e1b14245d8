#pragma once

#include <string>

#include "sbgen/codec.hpp"
#include "sbgen/types.hpp"

namespace sbgen {

struct InstructionPair {
    std::string instruction;
    PromptSequence target;
};

// Builds an instruction from the summative annotation and pairs it with the
// serialized storyboard. Template precedence: scene, then genre, then
// emotion; throws std::invalid_argument when all three are empty.
InstructionPair make_instruction_pair(const SummativeAnnotation& summative, const Storyboard& sb,
                                      const QuantizerConfig& qcfg, const SerializerConfig& scfg);

// Joint training form: "<s> instruction words <sep> { ... } </s>".
std::string instruction_training_text(const InstructionPair& pair);

}  // namespace sbgen
