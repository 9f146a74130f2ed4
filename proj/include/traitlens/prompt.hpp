#pragma once

#include <string>

#include "traitlens/types.hpp"

namespace traitlens {

/// The instruction template used to elicit trait-conditioned answers. The
/// `{personality}` and `{entity}` placeholders are substituted by
/// render_prompt.
extern const char* const kDefaultPromptTemplate;

/// Substitutes `{personality}` (label display name) and `{entity}` into the
/// template. Deterministic: identical inputs produce byte-identical text.
/// Throws TemplateError when either placeholder is absent.
PromptSpec render_prompt(const std::string& tmpl, const LabelSet& labels,
                         Index label, const std::string& entity);

/// Renders the full N x k prompt grid (every entity under every label).
std::vector<PromptSpec> render_prompt_grid(const std::string& tmpl,
                                           const LabelSet& labels,
                                           const std::vector<std::string>& entities);

}  // namespace traitlens
