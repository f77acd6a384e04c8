#include <gtest/gtest.h>

#include "matforge/marker_codec.hpp"
#include "random_docs.hpp"
#include "test_util.hpp"

using namespace matforge;
using namespace matforge::testing;

namespace {

const std::string kNano = "nano platinum is used as a catalyst";

AnnotatedDoc nano_doc() { return {"nano", kNano, {{5, 13, "MAT"}, {27, 35, "APL"}}}; }

ParseOutcome strict(std::string_view text, const MarkerFormat& f = MarkerFormat::entity()) {
  return parse_marked(text, materials(), f, ParseMode::kStrict);
}

ParseOutcome lenient(std::string_view text, const MarkerFormat& f = MarkerFormat::entity()) {
  return parse_marked(text, materials(), f, ParseMode::kLenient);
}

}  // namespace

TEST(Render, EntityMarkers) {
  EXPECT_EQ(render_marked(nano_doc(), materials(), MarkerFormat::entity()),
            "nano <MAT>platinum</MAT> is used as a <APL>catalyst</APL>");
}

TEST(Render, SpecialMarkersOnlyTarget) {
  EXPECT_EQ(render_marked(nano_doc(), materials(), MarkerFormat::special("MAT")),
            "nano @@platinum## is used as a catalyst");
  EXPECT_EQ(render_marked(nano_doc(), materials(), MarkerFormat::special("SPL")), kNano);
}

TEST(Render, RejectsInvalidDocAndMarkerLikeText) {
  AnnotatedDoc overlap{"d", kNano, {{0, 13, "MAT"}, {5, 13, "DSC"}}};
  EXPECT_MF_ERROR(render_marked(overlap, materials(), MarkerFormat::entity()), ErrorCode::kInvalidDoc);
  AnnotatedDoc tagged{"d", "a <MAT>b</MAT> c", {}};
  EXPECT_MF_ERROR(render_marked(tagged, materials(), MarkerFormat::entity()), ErrorCode::kInvalidDoc);
  AnnotatedDoc hashes{"d", "issue #12 @@ 3", {}};
  EXPECT_MF_ERROR(render_marked(hashes, materials(), MarkerFormat::special("MAT")), ErrorCode::kInvalidDoc);
  // A lone angle bracket is not a marker.
  AnnotatedDoc less{"d", "x < 5 and y > 2", {{0, 1, "MAT"}}};
  EXPECT_EQ(render_marked(less, materials(), MarkerFormat::entity()), "<MAT>x</MAT> < 5 and y > 2");
}

TEST(Parse, EntityMarkersStrict) {
  const auto po = strict("nano <MAT>platinum</MAT> is used as a <APL>catalyst</APL>");
  EXPECT_EQ(po.doc.text, kNano);
  EXPECT_EQ(po.doc.spans, nano_doc().spans);
  EXPECT_TRUE(po.warnings.empty());
}

TEST(Parse, NoMarkersGivesNoSpans) {
  const auto po = strict(kNano);
  EXPECT_EQ(po.doc.text, kNano);
  EXPECT_TRUE(po.doc.spans.empty());
}

TEST(Parse, SpecialMarkers) {
  const auto po = strict("@@nano## @@platinum## is used", MarkerFormat::special("MAT"));
  EXPECT_EQ(po.doc.text, "nano platinum is used");
  ASSERT_EQ(po.doc.spans.size(), 2u);
  EXPECT_EQ(po.doc.spans[1], (Span{5, 13, "MAT"}));
}

TEST(Parse, ScalarOffsets) {
  const auto po = strict("<DSC>Nanostructured</DSC> <MAT>Al₂O₃</MAT> films");
  ASSERT_EQ(po.doc.spans.size(), 2u);
  EXPECT_EQ(po.doc.spans[1], (Span{15, 20, "MAT"}));
}

TEST(Parse, StrictErrors) {
  EXPECT_MF_ERROR(strict("a <MAT>platinum"), ErrorCode::kUnclosedMarker);
  EXPECT_MF_ERROR(strict("a <MAT>platinum</APL>"), ErrorCode::kMismatchedClose);
  EXPECT_MF_ERROR(strict("a platinum</MAT>"), ErrorCode::kMismatchedClose);
  EXPECT_MF_ERROR(strict("<MAT>a <APL>b</APL></MAT>"), ErrorCode::kNestedMarker);
  EXPECT_MF_ERROR(strict("a <MAT></MAT> b"), ErrorCode::kEmptyMarker);
  EXPECT_MF_ERROR(strict("a <XYZ>b</XYZ>"), ErrorCode::kUnknownSymbol);
  EXPECT_MF_ERROR(strict("@@a", MarkerFormat::special("MAT")), ErrorCode::kUnclosedMarker);
}

TEST(Parse, LenientRepairs) {
  {
    const auto po = lenient("a <MAT>platinum");
    EXPECT_EQ(po.doc.text, "a platinum");
    EXPECT_TRUE(po.doc.spans.empty());
    EXPECT_EQ(po.warnings.size(), 1u);
  }
  {
    const auto po = lenient("a <MAT>platinum</APL> b");
    ASSERT_EQ(po.doc.spans.size(), 1u);
    EXPECT_EQ(po.doc.spans[0], (Span{2, 10, "MAT"}));
  }
  {
    const auto po = lenient("<MAT>a <APL>b</APL></MAT>");
    EXPECT_EQ(po.doc.text, "a b");
    ASSERT_EQ(po.doc.spans.size(), 1u);
    EXPECT_EQ(po.doc.spans[0], (Span{2, 3, "APL"}));
    EXPECT_EQ(po.warnings.size(), 2u);  // nested open, stray close
  }
  {
    const auto po = lenient("a <XYZ>b</XYZ>");
    EXPECT_EQ(po.doc.text, "a <XYZ>b</XYZ>");
    EXPECT_EQ(po.warnings.size(), 2u);
  }
}

TEST(Strip, RemovesMarkersOnly) {
  EXPECT_EQ(strip_markers("<MAT>Pt</MAT> and <XYZ>", materials(), MarkerFormat::entity()), "Pt and <XYZ>");
}

TEST(Align, WhitespaceNormalizedEquality) {
  const std::string source = "nano  platinum\nis used as a catalyst";
  const auto po = lenient("nano <MAT>platinum</MAT> is used as a <APL>catalyst</APL>");
  const auto r = align_to_source(po, source, ParseMode::kStrict);
  EXPECT_EQ(r.doc.text, source);
  ASSERT_EQ(r.doc.spans.size(), 2u);
  EXPECT_EQ(r.doc.spans[0], (Span{6, 14, "MAT"}));
  EXPECT_EQ(r.doc.spans[1], (Span{28, 36, "APL"}));
}

TEST(Align, TrimsWhitespaceAtSpanEdges) {
  const auto po = lenient("nano<MAT> platinum </MAT>is");
  const auto r = align_to_source(po, "nano platinum is", ParseMode::kStrict);
  ASSERT_EQ(r.doc.spans.size(), 1u);
  EXPECT_EQ(r.doc.spans[0], (Span{5, 13, "MAT"}));
  EXPECT_EQ(r.warnings.size(), 1u);
}

TEST(Align, DivergenceStrictAndLenient) {
  const auto po = lenient("nano <MAT>platinum</MAT> was used as a <APL>catalyst</APL>");
  EXPECT_MF_ERROR(align_to_source(po, kNano, ParseMode::kStrict), ErrorCode::kSourceDivergence);
  const auto r = align_to_source(po, kNano, ParseMode::kLenient);
  EXPECT_EQ(r.doc.spans, nano_doc().spans);
  EXPECT_FALSE(r.warnings.empty());
}

TEST(Align, LenientDropsAmbiguousSurfaces) {
  const auto po = lenient("<MAT>Pt</MAT> and Pt Co");
  const auto r = align_to_source(po, "Pt and Pt, Co", ParseMode::kLenient);
  EXPECT_TRUE(r.doc.spans.empty());
}

TEST(NormalizeWhitespace, CollapsesAndTrims) {
  EXPECT_EQ(normalize_whitespace("  a \t b\n\nc  "), "a b c");
  EXPECT_EQ(normalize_whitespace(""), "");
}

TEST(RoundTrip, RandomDocsBothFormats) {
  const auto schema = materials();
  DocGen gen(7, schema.symbols());
  for (int i = 0; i < 2000; ++i) {
    const AnnotatedDoc d = gen.doc("r" + std::to_string(i));
    ASSERT_TRUE(validate_doc(d, schema).empty());
    auto back = strict(render_marked(d, schema, MarkerFormat::entity())).doc;
    back.doc_id = d.doc_id;
    ASSERT_EQ(back, d) << d.text;

    const std::string target = schema.symbols()[gen.pick(4)];
    AnnotatedDoc only = d;
    std::erase_if(only.spans, [&](const Span& s) { return s.symbol != target; });
    auto sback = strict(render_marked(d, schema, MarkerFormat::special(target)), MarkerFormat::special(target)).doc;
    sback.doc_id = d.doc_id;
    ASSERT_EQ(sback, only) << d.text;
  }
}

TEST(MarkerKind, Names) {
  EXPECT_EQ(parse_marker_kind("special"), MarkerKind::kSpecialMarker);
  EXPECT_EQ(parse_marker_kind("entity_marker"), MarkerKind::kEntityMarker);
  EXPECT_MF_ERROR(parse_marker_kind("bold"), ErrorCode::kInvalidInput);
}
