#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "matforge/schema.hpp"

namespace matforge {

// Prompt templates are UTF-8 files `<template_id>.txt` with placeholders
// {DEFINITIONS}, {RELATIONS}, {SYMBOLS}, {EXAMPLE} and exactly one {INPUT}.
// Other brace text (JSON in examples) is left alone.
class TemplateStore {
 public:
  TemplateStore() = default;

  static TemplateStore load_dir(const std::filesystem::path& dir);

  void add(std::string id, std::string text);
  bool contains(std::string_view id) const { return templates_.count(std::string(id)) != 0; }
  // Throws UnknownTemplate.
  const std::string& get(std::string_view id) const;
  const std::map<std::string, std::string>& all() const { return templates_; }

 private:
  std::map<std::string, std::string> templates_;
};

// Templates whose id starts with this prefix build knowledge graphs and may
// run with an empty symbol scope.
inline constexpr std::string_view kKgTemplatePrefix = "kg_";

using DescriptionChoice = std::map<std::string, std::size_t>;

// Throws UnknownTemplate, MissingDescription.
std::string render_prompt(const TemplateStore& store, std::string_view template_id, const EntitySchema& schema,
                          const std::vector<std::string>& symbols_in_scope, const DescriptionChoice& choice,
                          std::string_view input_text, std::string_view example = {});

std::string definitions_block(const EntitySchema& schema, const std::vector<std::string>& symbols,
                              const DescriptionChoice& choice);
std::string relations_block(const EntitySchema& schema);

}  // namespace matforge
