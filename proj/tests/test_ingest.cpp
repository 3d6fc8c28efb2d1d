#include <doctest.h>

#include <sstream>
#include <stdexcept>

#include "nlid/ingest.hpp"

using namespace nlid;

namespace {

std::string chaos_line(const std::string& uid, int e, int n, int c) {
  std::ostringstream os;
  os << R"({"uid":")" << uid << R"(","label_counter":{)";
  bool first = true;
  auto put = [&](const char* key, int v) {
    if (v == 0) return;  // missing keys count as zero
    if (!first) os << ',';
    os << '"' << key << "\":" << v;
    first = false;
  };
  put("e", e);
  put("n", n);
  put("c", c);
  os << R"(},"example":{"premise":"a premise","hypothesis":"a hypothesis"}})";
  return os.str();
}

}  // namespace

TEST_CASE("parse_chaosnli_jsonl reads minimal records") {
  std::istringstream in(chaos_line("x1", 82, 17, 1) + "\n" + chaos_line("x2", 0, 60, 40) +
                        "\n");
  const auto result = parse_chaosnli_jsonl(in);
  REQUIRE(result.records.size() == 2);
  CHECK(result.diagnostics.empty());
  CHECK(result.records[0].uid == "x1");
  CHECK(result.records[0].counts.e == 82);
  CHECK(result.records[0].counts.n == 17);
  CHECK(result.records[0].counts.c == 1);
  CHECK(result.records[0].source == Source::Chaos100);
  CHECK(result.records[1].counts.e == 0);
}

TEST_CASE("parse_chaosnli_jsonl reports missing fields with line numbers") {
  std::istringstream in(chaos_line("x1", 82, 17, 1) + "\n" +
                        R"({"uid":"x2","example":{"premise":"p","hypothesis":"h"}})" "\n");
  const auto result = parse_chaosnli_jsonl(in);
  CHECK(result.records.size() == 1);
  REQUIRE(result.diagnostics.size() == 1);
  CHECK(result.diagnostics[0].line == 2);
  CHECK(result.diagnostics[0].uid == "x2");
  CHECK(result.diagnostics[0].message == "missing field label_counter");
}

TEST_CASE("parse_chaosnli_jsonl validates the 100-vote sum and duplicates") {
  std::istringstream in(chaos_line("x1", 50, 49, 0) + "\n" + chaos_line("x2", 100, 0, 0) +
                        "\n" + chaos_line("x2", 100, 0, 0) + "\n");
  const auto result = parse_chaosnli_jsonl(in);
  CHECK(result.records.size() == 1);
  REQUIRE(result.diagnostics.size() == 2);
  CHECK(result.diagnostics[0].message == "counts sum 99 != 100");
  CHECK(result.diagnostics[0].uid == "x1");
  CHECK(result.diagnostics[1].message == "duplicate uid");

  SUBCASE("strict mode throws at the first diagnostic") {
    std::istringstream strict_in(chaos_line("x1", 50, 49, 0) + "\n");
    CHECK_THROWS_AS(parse_chaosnli_jsonl(strict_in, ParseOptions{true}), ParseError);
  }
}

TEST_CASE("strict mode cross-checks redundant release fields") {
  std::string good = R"({"uid":"x1","label_counter":{"e":82,"n":17,"c":1},)"
                     R"("majority_label":"e","label_dist":[0.82,0.17,0.01],)"
                     R"("example":{"premise":"p","hypothesis":"h"}})";
  std::string drifted = R"({"uid":"x2","label_counter":{"e":82,"n":17,"c":1},)"
                        R"("majority_label":"n",)"
                        R"("example":{"premise":"p","hypothesis":"h"}})";
  {
    std::istringstream in(good + "\n");
    const auto result = parse_chaosnli_jsonl(in, ParseOptions{true});
    CHECK(result.records.size() == 1);
  }
  {
    std::istringstream in(drifted + "\n");
    CHECK_THROWS_AS(parse_chaosnli_jsonl(in, ParseOptions{true}), ParseError);
  }
  {
    // Tolerant mode ignores the redundant fields entirely.
    std::istringstream in(drifted + "\n");
    const auto result = parse_chaosnli_jsonl(in);
    CHECK(result.records.size() == 1);
    CHECK(result.diagnostics.empty());
  }
}

TEST_CASE("parse_mnli_jsonl tallies annotator labels") {
  std::istringstream in(
      R"({"pairID":"m1","sentence1":"p","sentence2":"h","annotator_labels":)"
      R"(["entailment","entailment","entailment","neutral","neutral"],"gold_label":"entailment"})"
      "\n"
      R"({"pairID":"m2","sentence1":"p","sentence2":"h","annotator_labels":)"
      R"(["entailment","entailment","neutral","neutral","contradiction"],"gold_label":"-","genre":"fiction"})"
      "\n");
  const auto result = parse_mnli_jsonl(in);
  REQUIRE(result.records.size() == 2);
  CHECK(result.records[0].counts.e == 3);
  CHECK(result.records[0].counts.n == 2);
  CHECK(result.records[0].counts.c == 0);
  CHECK(result.records[0].source == Source::MNLI5);
  CHECK(result.records[0].original_gold == "entailment");
  // The no-majority marker is preserved verbatim.
  CHECK(result.records[1].original_gold == "-");
  CHECK(result.records[1].genre == "fiction");
  CHECK(result.records[1].counts.e == 2);
  CHECK(result.records[1].counts.n == 2);
  CHECK(result.records[1].counts.c == 1);
}

TEST_CASE("parse_mnli_jsonl rejects unknown labels and wrong lengths") {
  std::istringstream in(
      R"({"pairID":"m1","sentence1":"p","sentence2":"h","annotator_labels":)"
      R"(["entailment","maybe","neutral","neutral","neutral"]})"
      "\n"
      R"({"pairID":"m2","sentence1":"p","sentence2":"h","annotator_labels":["entailment"]})"
      "\n");
  const auto result = parse_mnli_jsonl(in);
  CHECK(result.records.empty());
  REQUIRE(result.diagnostics.size() == 2);
  CHECK(result.diagnostics[0].message == "unknown NLI label 'maybe'");
  CHECK(result.diagnostics[1].message == "annotator_labels length 1 != 5");
}

TEST_CASE("parse_taxonomy_annotations reads the delimited format") {
  std::istringstream in(
      "item_uid,annotator_id,categories\n"
      "p1,a1,Lexical;TemporalReference\n"
      "p2,a1,\n"
      "p1,a2,Lexical\n");
  const auto result = parse_taxonomy_annotations(in);
  REQUIRE(result.records.size() == 3);
  CHECK(result.diagnostics.empty());
  CHECK(result.records[0].categories ==
        CategorySet{TaxonomyCategory::Lexical, TaxonomyCategory::TemporalReference});
  CHECK(result.records[1].categories.empty());
  CHECK(result.records[2].annotator_id == "a2");
}

TEST_CASE("parse_taxonomy_annotations rejects unknown categories and duplicates") {
  std::istringstream in(
      "item_uid,annotator_id,categories\n"
      "p3,a1,Vibes\n"
      "p4,a1,Lexical\n"
      "p4,a1,Coreference\n");
  const auto result = parse_taxonomy_annotations(in);
  CHECK(result.records.size() == 1);
  REQUIRE(result.diagnostics.size() == 2);
  CHECK(result.diagnostics[0].message.find("unknown category 'Vibes'") == 0);
  CHECK(result.diagnostics[0].message.find("Lexical") != std::string::npos);
  CHECK(result.diagnostics[1].message.find("duplicate") != std::string::npos);
}

TEST_CASE("category classes follow the fixed taxonomy") {
  CHECK(category_class(TaxonomyCategory::Lexical) == TaxonomyClass::UncertaintyInMeaning);
  CHECK(category_class(TaxonomyCategory::Imperfection) ==
        TaxonomyClass::UncertaintyInMeaning);
  CHECK(category_class(TaxonomyCategory::Coreference) ==
        TaxonomyClass::GuidelineUnderspecification);
  CHECK(category_class(TaxonomyCategory::InterrogativeHypothesis) ==
        TaxonomyClass::GuidelineUnderspecification);
  CHECK(category_class(TaxonomyCategory::AccommodatingMinimallyAddedContent) ==
        TaxonomyClass::AnnotatorBehavior);
  CHECK(category_class(TaxonomyCategory::HighOverlap) == TaxonomyClass::AnnotatorBehavior);
}

TEST_CASE("parse_predictions accepts exactly one payload variant") {
  std::istringstream in(
      R"({"uid":"x1","probs":[0.82,0.17,0.01]})" "\n"
      R"({"uid":"x2","labels":"NC"})" "\n"
      R"({"uid":"x3","label_probs":[0.9,0.4,0.2]})" "\n"
      R"({"uid":"x4","label":"Complicated"})" "\n"
      R"({"uid":"x5","probs":[0.5,0.5,0.0],"label":"E"})" "\n"
      R"({"uid":"x6"})" "\n"
      R"({"uid":"x7","probs":[0.5,0.4,0.0]})" "\n");
  const auto result = parse_predictions(in);
  REQUIRE(result.records.size() == 4);
  CHECK(result.records[0].has_distribution());
  CHECK(result.records[1].has_label_set());
  CHECK(std::get<LabelSet>(result.records[1].payload).to_string() == "NC");
  CHECK(result.records[2].has_label_probs());
  CHECK(result.records[3].has_fourway());
  REQUIRE(result.diagnostics.size() == 3);
  CHECK(result.diagnostics[0].message.find("multiple payloads") != std::string::npos);
  CHECK(result.diagnostics[1].message.find("missing payload") != std::string::npos);
  CHECK(result.diagnostics[2].message.find("probs sum to") != std::string::npos);
}

TEST_CASE("item records round-trip through the canonical JSONL") {
  ItemRecord item;
  item.uid = "m1";
  item.premise = "a premise with \"quotes\"";
  item.hypothesis = "a hypothesis";
  item.genre = "fiction";
  item.counts = {3, 2, 0};
  item.source = Source::MNLI5;
  item.original_gold = "-";

  const std::string line = item_to_jsonl(item);
  std::istringstream in(line + "\n");
  const auto parsed = parse_items_jsonl(in);
  REQUIRE(parsed.records.size() == 1);
  const ItemRecord& back = parsed.records[0];
  CHECK(back.uid == item.uid);
  CHECK(back.premise == item.premise);
  CHECK(back.hypothesis == item.hypothesis);
  CHECK(back.genre == item.genre);
  CHECK(back.counts.e == item.counts.e);
  CHECK(back.counts.n == item.counts.n);
  CHECK(back.counts.c == item.counts.c);
  CHECK(back.source == item.source);
  CHECK(back.original_gold == item.original_gold);
  // Serialization is deterministic.
  CHECK(item_to_jsonl(back) == line);
}

TEST_CASE("line parsing is concatenation-stable for disjoint uids") {
  const std::string a = chaos_line("a1", 90, 5, 5) + "\n" + chaos_line("a2", 30, 30, 40) + "\n";
  const std::string b = chaos_line("b1", 10, 80, 10) + "\n";
  std::istringstream in_a(a);
  std::istringstream in_b(b);
  std::istringstream in_ab(a + b);
  const auto ra = parse_chaosnli_jsonl(in_a);
  const auto rb = parse_chaosnli_jsonl(in_b);
  const auto rab = parse_chaosnli_jsonl(in_ab);
  REQUIRE(rab.records.size() == ra.records.size() + rb.records.size());
  for (std::size_t i = 0; i < ra.records.size(); ++i)
    CHECK(rab.records[i].uid == ra.records[i].uid);
  for (std::size_t i = 0; i < rb.records.size(); ++i)
    CHECK(rab.records[ra.records.size() + i].uid == rb.records[i].uid);
}

TEST_CASE("join_by_uid reports unmatched uids and rejects duplicates") {
  std::vector<ItemRecord> items(3);
  items[0].uid = "a";
  items[1].uid = "b";
  items[2].uid = "c";
  std::vector<PredictionRecord> preds(2);
  preds[0].uid = "a";
  preds[0].payload = FourWayLabel::Entailment;
  preds[1].uid = "b";
  preds[1].payload = FourWayLabel::Neutral;

  const auto joined = join_by_uid(items, preds);
  CHECK(joined.joined.size() == 2);
  REQUIRE(joined.unmatched_items.size() == 1);
  CHECK(joined.unmatched_items[0] == "c");
  CHECK(joined.unmatched_right.empty());

  SUBCASE("disjoint uid sets join to nothing") {
    std::vector<PredictionRecord> other(1);
    other[0].uid = "z";
    other[0].payload = FourWayLabel::Neutral;
    const auto none = join_by_uid(items, other);
    CHECK(none.joined.empty());
    CHECK(none.unmatched_items.size() == 3);
    CHECK(none.unmatched_right.size() == 1);
  }

  SUBCASE("duplicate prediction uid is an error") {
    preds.push_back(preds[0]);
    CHECK_THROWS_WITH_AS(join_by_uid(items, preds), "duplicate uid 'a'",
                         std::invalid_argument);
  }
}

TEST_CASE("category set parsing round-trips canonical names") {
  const CategorySet set = CategorySet::parse(
      "ProbabilisticEnrichment;Lexical;AccommodatingMinimallyAddedContent");
  CHECK(set.size() == 3);
  CHECK(set.to_string() == "Lexical;ProbabilisticEnrichment;AccommodatingMinimallyAddedContent");
  CHECK(CategorySet::parse(set.to_string()) == set);
  CHECK(CategorySet::parse("").empty());
}
