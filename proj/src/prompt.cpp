#include "traitlens/prompt.hpp"

namespace traitlens {

const char* const kDefaultPromptTemplate =
    "You are an AI assistant with the personality of {personality}. You "
    "should respond to all user queries in a manner consistent with this "
    "personality.\n\nWhat is your opinion of {entity}?";

namespace {

// Replaces every occurrence of `key` in `text`.
std::string replace_all(std::string text, const std::string& key,
                        const std::string& value) {
  size_t pos = 0;
  while ((pos = text.find(key, pos)) != std::string::npos) {
    text.replace(pos, key.size(), value);
    pos += value.size();
  }
  return text;
}

}  // namespace

PromptSpec render_prompt(const std::string& tmpl, const LabelSet& labels,
                         Index label, const std::string& entity) {
  if (tmpl.find("{personality}") == std::string::npos) {
    throw TemplateError("template is missing the {personality} placeholder");
  }
  if (tmpl.find("{entity}") == std::string::npos) {
    throw TemplateError("template is missing the {entity} placeholder");
  }
  if (label < 0 || label >= labels.size()) {
    throw InputError("label index out of range");
  }
  PromptSpec spec;
  spec.entity = entity;
  spec.label = label;
  spec.rendered_text = replace_all(
      replace_all(tmpl, "{personality}", labels.at(label).name), "{entity}",
      entity);
  if (spec.rendered_text.empty()) {
    throw TemplateError("rendered prompt is empty");
  }
  return spec;
}

std::vector<PromptSpec> render_prompt_grid(
    const std::string& tmpl, const LabelSet& labels,
    const std::vector<std::string>& entities) {
  std::vector<PromptSpec> out;
  out.reserve(entities.size() * static_cast<size_t>(labels.size()));
  for (const auto& entity : entities) {
    for (Index y = 0; y < labels.size(); ++y) {
      out.push_back(render_prompt(tmpl, labels, y, entity));
    }
  }
  return out;
}

}  // namespace traitlens
