#include "matforge/templates.hpp"

#include <array>
#include <fstream>
#include <sstream>

#include "matforge/errors.hpp"

namespace matforge {

TemplateStore TemplateStore::load_dir(const std::filesystem::path& dir) {
  TemplateStore store;
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec))
    throw Error(ErrorCode::kStore, "template directory " + dir.string() + " does not exist");
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    store.add(entry.path().stem().string(), buf.str());
  }
  return store;
}

void TemplateStore::add(std::string id, std::string text) { templates_[std::move(id)] = std::move(text); }

const std::string& TemplateStore::get(std::string_view id) const {
  auto it = templates_.find(std::string(id));
  if (it == templates_.end()) throw Error(ErrorCode::kUnknownTemplate, "no template '" + std::string(id) + "'");
  return it->second;
}

std::string definitions_block(const EntitySchema& schema, const std::vector<std::string>& symbols,
                              const DescriptionChoice& choice) {
  std::string out;
  for (const auto& sym : symbols) {
    const EntityType* type = schema.find(sym);
    if (!type) throw Error(ErrorCode::kMissingDescription, "symbol '" + sym + "' is not in the schema");
    auto it = choice.find(sym);
    if (it == choice.end()) throw Error(ErrorCode::kMissingDescription, "no description chosen for " + sym);
    if (it->second >= type->descriptions.size())
      throw Error(ErrorCode::kMissingDescription, sym + " has no description #" + std::to_string(it->second));
    out += "- <" + sym + "> " + type->name + ": " + type->descriptions[it->second] + "\n";
  }
  return out;
}

std::string relations_block(const EntitySchema& schema) {
  std::string out;
  for (const auto& r : schema.relation_types) out += "- " + r.source + " " + r.label + " " + r.target + "\n";
  return out;
}

std::string render_prompt(const TemplateStore& store, std::string_view template_id, const EntitySchema& schema,
                          const std::vector<std::string>& symbols_in_scope, const DescriptionChoice& choice,
                          std::string_view input_text, std::string_view example) {
  const std::string& tpl = store.get(template_id);
  if (symbols_in_scope.empty() && !template_id.starts_with(kKgTemplatePrefix))
    throw Error(ErrorCode::kMissingDescription,
                "template '" + std::string(template_id) + "' needs at least one entity type in scope");

  std::string symbols;
  for (const auto& s : symbols_in_scope) symbols += (symbols.empty() ? "" : ", ") + s;
  const std::string defs = definitions_block(schema, symbols_in_scope, choice);
  const std::string rels = relations_block(schema);

  const std::array<std::pair<std::string_view, std::string_view>, 5> slots{{
      {"{DEFINITIONS}", defs},
      {"{RELATIONS}", rels},
      {"{SYMBOLS}", symbols},
      {"{EXAMPLE}", example},
      {"{INPUT}", input_text},
  }};

  std::string out;
  out.reserve(tpl.size() + defs.size() + input_text.size() + example.size());
  std::size_t inputs = 0;
  for (std::size_t i = 0; i < tpl.size();) {
    bool replaced = false;
    if (tpl[i] == '{') {
      for (const auto& [name, value] : slots) {
        if (std::string_view(tpl).substr(i, name.size()) == name) {
          out += value;
          i += name.size();
          inputs += name == "{INPUT}";
          replaced = true;
          break;
        }
      }
    }
    if (!replaced) out += tpl[i++];
  }
  if (inputs != 1)
    throw Error(ErrorCode::kUnknownTemplate,
                "template '" + std::string(template_id) + "' must contain {INPUT} exactly once");
  return out;
}

}  // namespace matforge
