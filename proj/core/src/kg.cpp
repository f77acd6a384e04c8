#include "matforge/kg.hpp"

#include <algorithm>
#include <set>

#include "matforge/errors.hpp"
#include "matforge/text_norm.hpp"

namespace matforge {

using json = nlohmann::json;

namespace {

std::vector<std::pair<std::string, std::string>> canonical_related(const KgNode& node) {
  std::vector<std::pair<std::string, std::string>> out;
  out.reserve(node.related_entities.size());
  for (const auto& [k, v] : node.related_entities) out.emplace_back(k, normalize_name(v));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// Strips a ```json fence if present.
std::string_view unfence(std::string_view text) {
  const auto open = text.find("```");
  if (open == std::string_view::npos) return text;
  const auto body = text.find('\n', open);
  if (body == std::string_view::npos) return text;
  const auto close = text.find("```", body);
  return text.substr(body + 1, (close == std::string_view::npos ? text.size() : close) - body - 1);
}

std::string scalar_string(const json& v) {
  return v.is_string() ? v.get<std::string>() : v.dump();
}

class KgReader {
 public:
  KgReader(const EntitySchema& schema, ParseMode mode) : schema_(schema), mode_(mode) {}

  KgParseResult read(std::string_view text) {
    const json root = decode(text);
    if (!root.is_object()) throw Error(ErrorCode::kNotJson, "expected a JSON object at top level");
    if (auto it = root.find("doc_id"); it != root.end() && it->is_string()) out_.graph.doc_id = it->get<std::string>();

    const json* nodes = member_array(root, "nodes");
    std::vector<std::optional<std::size_t>> remap;
    if (nodes) {
      for (std::size_t i = 0; i < nodes->size(); ++i) remap.push_back(read_node((*nodes)[i], i));
    }
    if (const json* edges = member_array(root, "edges")) {
      for (std::size_t i = 0; i < edges->size(); ++i) read_edge((*edges)[i], i, remap, nodes ? nodes->size() : 0);
    }
    return std::move(out_);
  }

 private:
  json decode(std::string_view text) {
    const std::string_view body = unfence(text);
    try {
      return json::parse(body);
    } catch (const json::parse_error&) {
    }
    const auto a = body.find('{');
    const auto b = body.rfind('}');
    if (mode_ == ParseMode::kLenient && a != std::string_view::npos && b != std::string_view::npos && a < b) {
      try {
        json j = json::parse(body.substr(a, b - a + 1));
        out_.warnings.push_back("ignored text outside the JSON object");
        return j;
      } catch (const json::parse_error&) {
      }
    }
    throw Error(ErrorCode::kNotJson, "completion is not a JSON knowledge graph");
  }

  const json* member_array(const json& root, const char* key) {
    auto it = root.find(key);
    if (it == root.end()) {
      fail(ErrorCode::kSchemaViolation, std::string("missing \"") + key + "\" array");
      return nullptr;
    }
    if (!it->is_array()) {
      fail(ErrorCode::kSchemaViolation, std::string("\"") + key + "\" must be an array");
      return nullptr;
    }
    return &*it;
  }

  std::optional<std::size_t> read_node(const json& j, std::size_t index) {
    const std::string where = "nodes[" + std::to_string(index) + "]";
    if (!j.is_object()) return reject(where + " is not an object");
    KgNode node;
    auto name = j.find("node_name");
    if (name == j.end() || !name->is_string() || normalize_name(name->get<std::string>()).empty())
      return reject(where + " has no node_name");
    node.node_name = name->get<std::string>();
    auto sym = j.find("symbol");
    if (sym == j.end() || !sym->is_string() || !schema_.has_symbol(sym->get<std::string>()))
      return reject(where + " (" + node.node_name + ") has unknown symbol " + (sym == j.end() ? "<none>" : sym->dump()));
    node.symbol = sym->get<std::string>();

    if (auto co = j.find("co_references"); co != j.end() && !co->is_null()) {
      if (!co->is_array()) return reject(where + ".co_references must be an array");
      for (const auto& c : *co) {
        if (!c.is_string()) return reject(where + ".co_references must hold strings");
        node.co_references.push_back(c.get<std::string>());
      }
    }
    if (auto rel = j.find("related_entities"); rel != j.end() && !rel->is_null()) {
      std::vector<const json*> objects;
      if (rel->is_object()) {
        objects.push_back(&*rel);
      } else if (rel->is_array()) {
        for (const auto& o : *rel) {
          if (!o.is_object()) return reject(where + ".related_entities must hold objects");
          objects.push_back(&o);
        }
      } else {
        return reject(where + ".related_entities must be an array of objects");
      }
      for (const json* o : objects) {
        for (const auto& [k, v] : o->items()) {
          if (!schema_.has_symbol(k)) return reject(where + ".related_entities key '" + k + "' is not a schema symbol");
          if (v.is_null() || v.is_object() || v.is_array())
            return reject(where + ".related_entities." + k + " must be a scalar");
          node.related_entities.emplace_back(k, scalar_string(v));
        }
      }
    }

    const std::string key = node_key(node);
    if (auto it = keys_.find(key); it != keys_.end()) {
      fail(ErrorCode::kSchemaViolation, where + " duplicates node key '" + key + "'; merged");
      auto& first = out_.graph.nodes[it->second];
      for (auto& c : node.co_references)
        if (std::find(first.co_references.begin(), first.co_references.end(), c) == first.co_references.end())
          first.co_references.push_back(std::move(c));
      return it->second;
    }
    keys_.emplace(key, out_.graph.nodes.size());
    out_.graph.nodes.push_back(std::move(node));
    return out_.graph.nodes.size() - 1;
  }

  std::optional<std::size_t> resolve(const json& ref, const std::vector<std::optional<std::size_t>>& remap,
                                     std::size_t raw_count, std::string& why) {
    if (ref.is_number_integer() || ref.is_number_unsigned()) {
      const auto i = ref.get<std::int64_t>();
      if (i < 0 || static_cast<std::size_t>(i) >= raw_count) {
        why = "index " + std::to_string(i) + " out of range";
        return std::nullopt;
      }
      if (!remap[static_cast<std::size_t>(i)]) why = "node " + std::to_string(i) + " was dropped";
      return remap[static_cast<std::size_t>(i)];
    }
    if (!ref.is_string()) {
      why = "endpoint " + ref.dump() + " is neither index nor key";
      return std::nullopt;
    }
    const std::string s = ref.get<std::string>();
    if (auto it = keys_.find(s); it != keys_.end()) return it->second;
    const std::string n = normalize_name(s);
    std::optional<std::size_t> hit;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < out_.graph.nodes.size(); ++i) {
      const auto& node = out_.graph.nodes[i];
      bool named = normalize_name(node.node_name) == n;
      for (const auto& c : node.co_references) named = named || normalize_name(c) == n;
      if (named) {
        hit = i;
        ++hits;
      }
    }
    if (hits == 1) return hit;
    why = hits == 0 ? "no node named '" + s + "'" : "name '" + s + "' is ambiguous";
    return std::nullopt;
  }

  void read_edge(const json& j, std::size_t index, const std::vector<std::optional<std::size_t>>& remap,
                 std::size_t raw_count) {
    const std::string where = "edges[" + std::to_string(index) + "]";
    if (!j.is_object() || !j.contains("source") || !j.contains("target")) {
      fail(ErrorCode::kSchemaViolation, where + " needs source and target; dropped");
      return;
    }
    auto rel = j.find("relation");
    if (rel == j.end() || !rel->is_string()) {
      fail(ErrorCode::kSchemaViolation, where + " has no relation label; dropped");
      return;
    }
    std::string why;
    const auto src = resolve(j["source"], remap, raw_count, why);
    if (!src) {
      fail(ErrorCode::kDanglingEdge, where + " source: " + why + "; dropped");
      return;
    }
    const auto tgt = resolve(j["target"], remap, raw_count, why);
    if (!tgt) {
      fail(ErrorCode::kDanglingEdge, where + " target: " + why + "; dropped");
      return;
    }
    const std::string label = normalize_name(rel->get<std::string>());
    const auto& s_sym = out_.graph.nodes[*src].symbol;
    const auto& t_sym = out_.graph.nodes[*tgt].symbol;
    for (const auto& rt : schema_.relation_types) {
      if (rt.source == s_sym && rt.target == t_sym && normalize_name(rt.label) == label) {
        out_.graph.edges.push_back(KgEdge{*src, rt.label, *tgt});
        return;
      }
    }
    fail(ErrorCode::kSchemaViolation, where + " relation (" + rel->get<std::string>() + ", " + s_sym + ", " + t_sym +
                                          ") is not defined in the schema; dropped");
  }

  std::optional<std::size_t> reject(std::string message) {
    fail(ErrorCode::kSchemaViolation, message + "; dropped");
    return std::nullopt;
  }

  void fail(ErrorCode code, std::string message) {
    if (mode_ == ParseMode::kStrict) throw Error(code, message);
    out_.warnings.push_back(std::move(message));
  }

  const EntitySchema& schema_;
  ParseMode mode_;
  KgParseResult out_;
  std::map<std::string, std::size_t> keys_;
};

}  // namespace

std::string node_key(const KgNode& node) {
  std::string key = normalize_name(node.node_name) + "|" + node.symbol + "|";
  bool first = true;
  for (const auto& [k, v] : canonical_related(node)) {
    if (!first) key += ";";
    first = false;
    key += k + "=" + v;
  }
  return key;
}

KgParseResult parse_kg(std::string_view text, const EntitySchema& schema, ParseMode mode) {
  return KgReader(schema, mode).read(text);
}

nlohmann::ordered_json kg_to_json(const KnowledgeGraph& graph) {
  nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
  for (const auto& n : graph.nodes) {
    nlohmann::ordered_json related = nlohmann::ordered_json::array();
    for (const auto& [k, v] : n.related_entities) related.push_back({{k, v}});
    nodes.push_back({{"node_name", n.node_name},
                     {"symbol", n.symbol},
                     {"co_references", n.co_references},
                     {"related_entities", related}});
  }
  nlohmann::ordered_json edges = nlohmann::ordered_json::array();
  for (const auto& e : graph.edges)
    edges.push_back({{"source", e.source}, {"relation", e.relation}, {"target", e.target}});
  return {{"doc_id", graph.doc_id}, {"nodes", nodes}, {"edges", edges}};
}

std::string write_kg(const KnowledgeGraph& graph) {
  return kg_to_json(graph).dump(2) + "\n";
}

bool node_match(const KgNode& pred, const KgNode& gold) {
  if (pred.symbol != gold.symbol) return false;

  std::set<std::string> pred_names{normalize_name(pred.node_name)};
  for (const auto& c : pred.co_references) pred_names.insert(normalize_name(c));
  bool shared = normalize_name(gold.node_name).size() && pred_names.count(normalize_name(gold.node_name));
  for (const auto& c : gold.co_references) shared = shared || pred_names.count(normalize_name(c));
  if (!shared) return false;

  // Keys present on both sides must agree on at least one value.
  const auto pr = canonical_related(pred);
  const auto gr = canonical_related(gold);
  std::set<std::string> keys;
  for (const auto& [k, _] : pr) keys.insert(k);
  for (const auto& k : keys) {
    bool in_gold = false;
    bool agree = false;
    for (const auto& [gk, gv] : gr) {
      if (gk != k) continue;
      in_gold = true;
      for (const auto& [pk, pv] : pr) agree = agree || (pk == k && pv == gv);
    }
    if (in_gold && !agree) return false;
  }
  return true;
}

}  // namespace matforge
