#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tact/rng.hpp"

namespace tact {

/// The 42 tactile-generation question prompts, in their canonical order.
/// Entries keep their trailing space: generation continues the sentence.
const std::vector<std::string>& generation_prompts();

/// Uniform draw from generation_prompts().
std::string sample_generation_prompt(Rng& rng);

/// Pseudo-labeling prompt template; first line carries the surface-type slot.
const std::string& pseudo_label_template();

/// Fills the surface-type slot, or drops that line entirely when no surface
/// type is known. Image attachment order stays full-image first, crop second.
std::string build_label_prompt(const std::optional<std::string>& surface_type);

/// Judge prompt template with {prompt} / {assistant_response} /
/// {correct_response} slots.
const std::string& judge_template();

std::string fill_judge_prompt(const std::string& question, const std::string& assistant_response,
                              const std::string& correct_response);

}  // namespace tact
