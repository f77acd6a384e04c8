#include <gtest/gtest.h>

#include "matforge/schema.hpp"
#include "test_util.hpp"

using namespace matforge;
using namespace matforge::testing;

namespace {

EntitySchema four_types() {
  EntitySchema s;
  s.schema_id = "fig4";
  for (const char* sym : {"MAT", "DSC", "SPL", "APL"}) s.entity_types.push_back({sym, sym, {"some description"}});
  s.relation_types.push_back({"is property of", "SPL", "MAT"});
  return s;
}

}  // namespace

TEST(ValidateSchema, FourTypesWithRelationIsValid) { EXPECT_TRUE(validate_schema(four_types()).empty()); }

TEST(ValidateSchema, DuplicateSymbol) {
  auto s = four_types();
  s.entity_types.push_back({"MAT", "again", {"x"}});
  const auto v = validate_schema(s);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].code, "duplicate-symbol");
  EXPECT_EQ(v[0].field, "entity_types[4].symbol");
}

TEST(ValidateSchema, DanglingRelation) {
  auto s = four_types();
  s.relation_types.push_back({"made of", "XYZ", "MAT"});
  const auto v = validate_schema(s);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].code, "dangling-relation");
}

TEST(ValidateSchema, SymbolShape) {
  EXPECT_TRUE(is_valid_symbol("MAT"));
  EXPECT_TRUE(is_valid_symbol("A"));
  EXPECT_TRUE(is_valid_symbol("DEGRADATION_RATE"));  // 16 chars
  EXPECT_FALSE(is_valid_symbol("DEGRADATION_RATES"));
  EXPECT_FALSE(is_valid_symbol("mat"));
  EXPECT_FALSE(is_valid_symbol("1MAT"));
  EXPECT_FALSE(is_valid_symbol("_MAT"));
  EXPECT_FALSE(is_valid_symbol(""));
  auto s = four_types();
  s.entity_types[0].symbol = "Mat";
  EXPECT_TRUE(has_code(validate_schema(s), "invalid-symbol"));
}

TEST(ValidateSchema, Descriptions) {
  auto s = four_types();
  s.entity_types[1].descriptions.clear();
  s.entity_types[2].descriptions = {"ok", "  "};
  const auto v = validate_schema(s);
  EXPECT_TRUE(has_code(v, "empty-descriptions"));
  EXPECT_TRUE(has_code(v, "empty-description"));
}

TEST(ValidateSchema, DuplicateRelationAndVersion) {
  auto s = four_types();
  s.relation_types.push_back(s.relation_types[0]);
  s.version = 0;
  s.schema_id.clear();
  const auto v = validate_schema(s);
  EXPECT_TRUE(has_code(v, "duplicate-relation"));
  EXPECT_TRUE(has_code(v, "invalid-version"));
  EXPECT_TRUE(has_code(v, "empty-schema-id"));
}

TEST(ValidateSchema, BundledSchemas) {
  const std::vector<std::pair<std::string, std::size_t>> expected{
      {"materials", 4}, {"sofc", 4}, {"matscholar", 7}, {"sofc_slot", 18}, {"conll", 4}};
  for (const auto& [name, types] : expected) {
    const auto s = bundled_schema(name);
    EXPECT_TRUE(validate_schema(s).empty()) << name << ": " << format_violations(validate_schema(s));
    EXPECT_EQ(s.entity_types.size(), types) << name;
  }
}

TEST(ValidateSchema, JsonRoundTrip) {
  const auto s = materials();
  EXPECT_EQ(parse_schema(write_schema(s)), s);
  EXPECT_MF_ERROR(parse_schema("{not json"), ErrorCode::kInvalidInput);
}

TEST(ValidateDoc, ValidDocUsesScalarOffsets) {
  // "Al₂O₃" is 5 scalar values but 9 UTF-8 bytes.
  AnnotatedDoc d{"d", "Nanostructured Al₂O₃", {{0, 14, "DSC"}, {15, 20, "MAT"}}};
  EXPECT_TRUE(validate_doc(d, four_types()).empty());
  d.spans[1].end = 21;
  EXPECT_TRUE(has_code(validate_doc(d, four_types()), "bounds"));
}

TEST(ValidateDoc, Violations) {
  const auto s = four_types();
  AnnotatedDoc overlap{"d", "nano platinum catalyst", {{0, 13, "MAT"}, {5, 13, "MAT"}}};
  const auto v = validate_doc(overlap, s);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].code, "overlap");

  AnnotatedDoc unsorted{"d", "nano platinum catalyst", {{14, 22, "APL"}, {5, 13, "MAT"}}};
  EXPECT_TRUE(has_code(validate_doc(unsorted, s), "unsorted"));

  AnnotatedDoc empty{"d", "abc", {{1, 1, "MAT"}}};
  EXPECT_TRUE(has_code(validate_doc(empty, s), "empty-span"));

  AnnotatedDoc unknown{"d", "abc", {{0, 3, "XYZ"}}};
  EXPECT_TRUE(has_code(validate_doc(unknown, s), "unknown-symbol"));

  // Touching spans do not overlap.
  AnnotatedDoc touching{"d", "abcdef", {{0, 3, "MAT"}, {3, 6, "DSC"}}};
  EXPECT_TRUE(validate_doc(touching, s).empty());
}

TEST(ValidateDoc, Pure) {
  AnnotatedDoc d{"d", "nano platinum", {{5, 13, "MAT"}, {0, 20, "XYZ"}}};
  const auto s = four_types();
  EXPECT_EQ(validate_doc(d, s), validate_doc(d, s));
  EXPECT_EQ(validate_schema(s), validate_schema(s));
}

TEST(Spans, SortAndJson) {
  std::vector<Span> spans{{5, 9, "B"}, {0, 3, "A"}, {5, 7, "C"}};
  sort_spans(spans);
  EXPECT_EQ(spans[0].start, 0u);
  EXPECT_EQ(spans[1].end, 7u);
  const AnnotatedDoc d{"x", "text", {{0, 4, "MAT"}}};
  EXPECT_EQ(nlohmann::json(d).get<AnnotatedDoc>(), d);
}
