#pragma once

#include <string_view>

// Data files compiled into the library so the tool runs without a data dir.
namespace assertctl::embedded {

std::string_view default_lexicon();
std::string_view published_f1();
// Prompt template by file stem: system, simple, cot, tot_step, tot_final,
// tot_score. Returns an empty view for unknown names.
std::string_view prompt_template(std::string_view name);

}  // namespace assertctl::embedded
