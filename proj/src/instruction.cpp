#include "sbgen/instruction.hpp"

#include <stdexcept>

namespace sbgen {

InstructionPair make_instruction_pair(const SummativeAnnotation& summative, const Storyboard& sb,
                                      const QuantizerConfig& qcfg, const SerializerConfig& scfg) {
    std::string instruction;
    if (!summative.scene.empty()) {
        instruction = "Could you please develop a movie storyboard that takes place in a " +
                      summative.scene + "?";
    } else if (!summative.genre.empty()) {
        instruction = "Could you please develop a " + summative.genre + " movie storyboard?";
    } else if (!summative.emotion.empty()) {
        instruction =
            "Could you please develop a movie storyboard that feels " + summative.emotion + "?";
    } else {
        throw std::invalid_argument(
            "make_instruction_pair: summative annotation has no scene, genre or emotion");
    }
    return InstructionPair{std::move(instruction), serialize(sb, qcfg, scfg)};
}

std::string instruction_training_text(const InstructionPair& pair) {
    const std::string start(Vocabulary::kStart);
    std::string_view body = pair.target.text;
    if (body.substr(0, start.size() + 1) == start + " ") {
        body.remove_prefix(start.size() + 1);
    }
    return start + " " + sanitize_text(pair.instruction) + " " + std::string(Vocabulary::kSep) +
           " " + std::string(body);
}

}  // namespace sbgen
