#include "tact/prompts.hpp"

#include "tact/error.hpp"

namespace tact {

namespace {

// Canonical prompt texts; the golden copies live under assets/prompts and the
// test suite checks byte equality between the two.
const char* const kGenerationPrompts[] = {
    "This image gives tactile feelings of ",
    "This image evokes a sense of  ",
    "This visual representation imparts a tactile sensation of ",
    "This picture conveys a touchable quality of ",
    "This image communicates a palpable feeling of ",
    "This graphic suggests a tactile experience of ",
    "This artwork manifests a tangible sensation of ",
    "This visual elicits a haptic impression of ",
    "This depiction gives rise to a tactile perception of ",
    "This illustration induces a touch-sensitive feeling of ",
    "This photo brings forth a tactile awareness of ",
    "This image arouses a tactile familiarity of ",
    "This snapshot renders a tactile essence of ",
    "This visual stimulates a touch-based sensation of ",
    "This portrayal invokes a tactile resonance of ",
    "This image delivers a touch-oriented impression of ",
    "This visual medium offers a tactile nuance of ",
    "This rendering provides a tactile sense of ",
    "This image yields a touch-felt experience of ",
    "This composition reveals a tactile characteristic of ",
    "This picture bestows a tactile attribute of ",
    "This image imparts a sense of tactile ",
    "This visual stimulates tactile sensations of ",
    "This artwork hints at a tactile experience of ",
    "This photo embodies a tactile quality of ",
    "This depiction resonates with tactile feelings of ",
    "This snapshot conveys tactile impressions of ",
    "This illustration suggests a tactile nature of ",
    "This rendering evokes tactile attributes of ",
    "This graphic communicates a tactile essence of ",
    "This visual piece reveals tactile characteristics of ",
    "This image portrays tactile elements of ",
    "This picture brings to mind tactile aspects of ",
    "This visual representation offers tactile nuances of ",
    "This composition provides tactile insights into ",
    "This visual art form captures tactile features of ",
    "This image projects tactile properties of ",
    "This visual work hints at tactile textures of ",
    "This image introduces tactile dimensions of ",
    "This visual scene manifests tactile facets of ",
    "This image presents tactile qualities of ",
    "This image elucidates tactile attributes of ",
};

const char kPseudoLabelTemplate[] = "Surface Type: [Specify the surface type, e.g., \"metal,\" \"fabric\"]\nImages: The first image is from a camera observing the tactile sensor (shiny, near the top of the image) and the surface. The second image is a cropped version of the first image that focuses on the contact patch. \nExample: For a smooth and cold surface, the description might be \"slick, chilly, hard, unyielding, glossy.\"\nTask: Based on these images, describe the possible tactile feelings of the contact patch using sensory adjectives. Limit your response up to five adjectives, separated by commas.\n";

const char kJudgeTemplate[] = "[User Question]: {prompt}\n[Assistant Response]: {assistant_response}\n[Correct Response]: {correct_response}\n\nWe would like to request your feedback on the performance of an AI assistant in response to the user question displayed above. \nThe user asks the question on observing an image. The assistant's response is followed by the correct response.\n\nPlease evaluate the assistant's response based on how closely it matches the correct response which describes tactile feelings. Please compare only the semantics of the answers. DO NOT consider grammatical errors in scoring the assistant. The assistant receives an overall score on a scale of 1 to 10, where a higher score indicates better overall performance.\n\nPlease first output a single line containing only one value indicating the score for the assistant. \n\nIn the subsequent line, please provide a comprehensive explanation of your evaluation, avoiding any potential bias.\n";

std::string replace_once(std::string text, const std::string& slot, const std::string& value) {
  const auto pos = text.find(slot);
  if (pos == std::string::npos) throw Error("runtime", "prompt template slot missing: " + slot);
  return text.replace(pos, slot.size(), value);
}

}  // namespace

const std::vector<std::string>& generation_prompts() {
  static const std::vector<std::string> prompts(std::begin(kGenerationPrompts),
                                                std::end(kGenerationPrompts));
  return prompts;
}

std::string sample_generation_prompt(Rng& rng) {
  const auto& prompts = generation_prompts();
  return prompts[static_cast<std::size_t>(rng.below(prompts.size()))];
}

const std::string& pseudo_label_template() {
  static const std::string text(kPseudoLabelTemplate);
  return text;
}

std::string build_label_prompt(const std::optional<std::string>& surface_type) {
  const std::string& tmpl = pseudo_label_template();
  const auto first_newline = tmpl.find('\n');
  if (!surface_type.has_value()) return tmpl.substr(first_newline + 1);
  return "Surface Type: " + *surface_type + tmpl.substr(first_newline);
}

const std::string& judge_template() {
  static const std::string text(kJudgeTemplate);
  return text;
}

std::string fill_judge_prompt(const std::string& question, const std::string& assistant_response,
                              const std::string& correct_response) {
  std::string out = judge_template();
  out = replace_once(std::move(out), "{prompt}", question);
  out = replace_once(std::move(out), "{assistant_response}", assistant_response);
  out = replace_once(std::move(out), "{correct_response}", correct_response);
  return out;
}

}  // namespace tact
