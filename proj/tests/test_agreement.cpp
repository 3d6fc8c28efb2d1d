#include <doctest.h>

#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include "nlid/agreement.hpp"
#include "nlid/rng.hpp"

using namespace nlid;

namespace {

// Literal transcription of the alpha definition, kept independent of the
// library: group annotations by unit, enumerate ordered index pairs.
template <typename V>
double brute_force_alpha(const std::vector<std::tuple<std::string, std::string, V>>& rows,
                         double (*dist)(V, V)) {
  std::map<std::string, std::vector<V>> units;
  for (const auto& [unit, annotator, value] : rows) {
    (void)annotator;
    units[unit].push_back(value);
  }
  std::vector<V> pooled;
  double observed_sum = 0.0;
  for (const auto& [unit, values] : units) {
    (void)unit;
    if (values.size() < 2) continue;
    double unit_pairs = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i)
      for (std::size_t j = 0; j < values.size(); ++j)
        if (i != j) unit_pairs += dist(values[i], values[j]);
    observed_sum += unit_pairs / static_cast<double>(values.size() - 1);
    for (const V& v : values) pooled.push_back(v);
  }
  const double n = static_cast<double>(pooled.size());
  const double observed = observed_sum / n;
  if (observed == 0.0) return 1.0;
  double expected_sum = 0.0;
  for (std::size_t i = 0; i < pooled.size(); ++i)
    for (std::size_t j = 0; j < pooled.size(); ++j)
      if (i != j) expected_sum += dist(pooled[i], pooled[j]);
  const double expected = expected_sum / (n * (n - 1.0));
  return 1.0 - observed / expected;
}

double char_nominal(char a, char b) { return a == b ? 0.0 : 1.0; }

std::vector<CategorySet> all_subsets_of_four() {
  const std::vector<TaxonomyCategory> universe = {
      TaxonomyCategory::Lexical, TaxonomyCategory::Implicature,
      TaxonomyCategory::Coreference, TaxonomyCategory::HighOverlap};
  std::vector<CategorySet> subsets;
  for (int mask = 0; mask < 16; ++mask) {
    CategorySet set;
    for (int bit = 0; bit < 4; ++bit)
      if (mask & (1 << bit)) set.insert(universe[static_cast<std::size_t>(bit)]);
    subsets.push_back(set);
  }
  return subsets;
}

}  // namespace

TEST_CASE("masi_distance on the quoted cases") {
  const CategorySet lex{TaxonomyCategory::Lexical};
  const CategorySet coref{TaxonomyCategory::Coreference};
  const CategorySet lex_prob{TaxonomyCategory::Lexical,
                             TaxonomyCategory::ProbabilisticEnrichment};
  CHECK(masi_distance(lex, lex) == 0.0);
  CHECK(masi_distance(lex, coref) == 1.0);
  // J = 1/2, strict subset monotonicity 2/3.
  CHECK(masi_distance(lex, lex_prob) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));

  // "No identified source" is a genuine value.
  CHECK(masi_distance(CategorySet{}, CategorySet{}) == 0.0);
  CHECK(masi_distance(CategorySet{}, lex) == 1.0);

  // Overlap without containment: J = 1/3, M = 1/3.
  const CategorySet lex_coref{TaxonomyCategory::Lexical, TaxonomyCategory::Coreference};
  CHECK(masi_distance(lex_prob, lex_coref) == doctest::Approx(1.0 - 1.0 / 9.0));
}

TEST_CASE("masi_distance axioms over an exhaustive 4-category universe") {
  const std::vector<CategorySet> subsets = all_subsets_of_four();
  for (const CategorySet& a : subsets) {
    for (const CategorySet& b : subsets) {
      const double d = masi_distance(a, b);
      CHECK(d == masi_distance(b, a));
      CHECK(d >= 0.0);
      CHECK(d <= 1.0);
      CHECK((d == 0.0) == (a == b));
    }
  }
}

TEST_CASE("krippendorff_alpha matches the worked nominal example") {
  using Row = std::tuple<std::string, std::string, char>;
  const std::vector<Row> rows = {
      {"u1", "a1", 'A'}, {"u1", "a2", 'A'},
      {"u2", "a1", 'A'}, {"u2", "a2", 'B'},
      {"u3", "a1", 'B'}, {"u3", "a2", 'B'},
  };
  const std::function<double(const char&, const char&)> nominal =
      [](const char& a, const char& b) { return a == b ? 0.0 : 1.0; };
  const AgreementReport report = krippendorff_alpha<char>(rows, nominal);
  CHECK(report.n_units == 3);
  CHECK(report.n_annotations == 6);
  CHECK(report.observed_disagreement == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(report.expected_disagreement == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(report.alpha == doctest::Approx(4.0 / 9.0).epsilon(1e-12));
}

TEST_CASE("krippendorff_alpha conventions") {
  using Row = std::tuple<std::string, std::string, char>;
  const std::function<double(const char&, const char&)> nominal =
      [](const char& a, const char& b) { return a == b ? 0.0 : 1.0; };

  SUBCASE("identical annotations give alpha 1") {
    const std::vector<Row> rows = {
        {"u1", "a1", 'A'}, {"u1", "a2", 'A'}, {"u2", "a1", 'B'}, {"u2", "a2", 'B'}};
    CHECK(krippendorff_alpha<char>(rows, nominal).alpha == 1.0);
  }
  SUBCASE("a single pooled value gives alpha 1 by convention") {
    const std::vector<Row> rows = {
        {"u1", "a1", 'A'}, {"u1", "a2", 'A'}, {"u2", "a1", 'A'}, {"u2", "a2", 'A'}};
    const AgreementReport report = krippendorff_alpha<char>(rows, nominal);
    CHECK(report.alpha == 1.0);
    CHECK(report.expected_disagreement == 0.0);
  }
  SUBCASE("units with one annotation are excluded") {
    const std::vector<Row> rows = {
        {"u1", "a1", 'A'}, {"u1", "a2", 'B'}, {"solo", "a1", 'A'}};
    const AgreementReport report = krippendorff_alpha<char>(rows, nominal);
    CHECK(report.n_units == 1);
    CHECK(report.n_annotations == 2);
  }
  SUBCASE("no unit with two annotations is an error") {
    const std::vector<Row> rows = {{"u1", "a1", 'A'}, {"u2", "a1", 'B'}};
    CHECK_THROWS_AS(krippendorff_alpha<char>(rows, nominal), std::invalid_argument);
  }
}

TEST_CASE("krippendorff_alpha equals brute-force enumeration, exhaustively") {
  const std::function<double(const char&, const char&)> nominal =
      [](const char& a, const char& b) { return a == b ? 0.0 : 1.0; };
  // Every two-annotator fixture over values {A,B} with up to 6 units.
  for (int n_units = 1; n_units <= 6; ++n_units) {
    const int n_annotations = 2 * n_units;
    for (long assignment = 0; assignment < (1L << n_annotations); ++assignment) {
      std::vector<std::tuple<std::string, std::string, char>> rows;
      rows.reserve(static_cast<std::size_t>(n_annotations));
      for (int u = 0; u < n_units; ++u) {
        for (int a = 0; a < 2; ++a) {
          const int bit = 2 * u + a;
          rows.emplace_back("u" + std::to_string(u), "a" + std::to_string(a),
                            (assignment >> bit) & 1 ? 'B' : 'A');
        }
      }
      const double expected_alpha = brute_force_alpha<char>(rows, &char_nominal);
      const AgreementReport report = krippendorff_alpha<char>(rows, nominal);
      REQUIRE(report.alpha == doctest::Approx(expected_alpha).epsilon(1e-12));
    }
  }
}

TEST_CASE("krippendorff_alpha with MASI equals brute-force enumeration") {
  const std::vector<CategorySet> domain = {
      CategorySet{}, CategorySet{TaxonomyCategory::Lexical},
      CategorySet{TaxonomyCategory::Lexical, TaxonomyCategory::Presupposition}};
  const std::function<double(const CategorySet&, const CategorySet&)> dist =
      [](const CategorySet& a, const CategorySet& b) { return masi_distance(a, b); };
  // Exhaustive over 3 values for up to 4 units, 2 annotators.
  for (int n_units = 1; n_units <= 4; ++n_units) {
    const int n_annotations = 2 * n_units;
    long total = 1;
    for (int i = 0; i < n_annotations; ++i) total *= 3;
    for (long assignment = 0; assignment < total; ++assignment) {
      std::vector<std::tuple<std::string, std::string, CategorySet>> rows;
      long code = assignment;
      for (int u = 0; u < n_units; ++u) {
        for (int a = 0; a < 2; ++a) {
          rows.emplace_back("u" + std::to_string(u), "a" + std::to_string(a),
                            domain[static_cast<std::size_t>(code % 3)]);
          code /= 3;
        }
      }
      const double expected_alpha = brute_force_alpha<CategorySet>(rows, &masi_distance);
      const AgreementReport report = krippendorff_alpha<CategorySet>(rows, dist);
      REQUIRE(report.alpha == doctest::Approx(expected_alpha).epsilon(1e-12));
    }
  }
}

TEST_CASE("alpha is invariant under annotator renaming and unit permutation") {
  std::vector<TaxonomyAnnotation> rows = {
      {"u1", "a1", CategorySet{TaxonomyCategory::Lexical}},
      {"u1", "a2", CategorySet{TaxonomyCategory::Lexical, TaxonomyCategory::Coreference}},
      {"u2", "a1", CategorySet{}},
      {"u2", "a2", CategorySet{TaxonomyCategory::Imperfection}},
      {"u3", "a1", CategorySet{TaxonomyCategory::HighOverlap}},
      {"u3", "a2", CategorySet{TaxonomyCategory::HighOverlap}},
  };
  const double base = krippendorff_alpha_masi(rows).alpha;

  std::vector<TaxonomyAnnotation> renamed = rows;
  for (TaxonomyAnnotation& row : renamed)
    row.annotator_id = row.annotator_id == "a1" ? "zz" : "yy";
  CHECK(krippendorff_alpha_masi(renamed).alpha == doctest::Approx(base).epsilon(1e-15));

  std::vector<TaxonomyAnnotation> permuted = {rows[4], rows[5], rows[0],
                                              rows[1], rows[2], rows[3]};
  CHECK(krippendorff_alpha_masi(permuted).alpha == doctest::Approx(base).epsilon(1e-15));
}

TEST_CASE("intersect_adjudicate flags empty intersections of nonempty inputs") {
  const TaxonomyAnnotation a{"p1", "a1",
                             CategorySet{TaxonomyCategory::Lexical,
                                         TaxonomyCategory::Coreference}};
  const TaxonomyAnnotation b{"p1", "a2", CategorySet{TaxonomyCategory::Lexical}};
  const Adjudication keep = intersect_adjudicate(a, b);
  CHECK(keep.intersection == CategorySet{TaxonomyCategory::Lexical});
  CHECK_FALSE(keep.needs_reconciliation);

  const TaxonomyAnnotation c{"p1", "a2", CategorySet{TaxonomyCategory::Coreference}};
  const TaxonomyAnnotation d{"p1", "a1", CategorySet{TaxonomyCategory::Lexical}};
  const Adjudication clash = intersect_adjudicate(d, c);
  CHECK(clash.intersection.empty());
  CHECK(clash.needs_reconciliation);

  const TaxonomyAnnotation e{"p1", "a1", CategorySet{}};
  const TaxonomyAnnotation f{"p1", "a2", CategorySet{}};
  const Adjudication both_empty = intersect_adjudicate(e, f);
  CHECK(both_empty.intersection.empty());
  CHECK_FALSE(both_empty.needs_reconciliation);

  // Symmetric in its arguments.
  const Adjudication ab = intersect_adjudicate(a, b);
  const Adjudication ba = intersect_adjudicate(b, a);
  CHECK(ab.intersection == ba.intersection);
  CHECK(ab.needs_reconciliation == ba.needs_reconciliation);

  TaxonomyAnnotation other{"p2", "a2", CategorySet{}};
  CHECK_THROWS_AS(intersect_adjudicate(a, other), std::invalid_argument);
}

TEST_CASE("category_combination_frequencies counts exact combinations") {
  std::vector<CategorySet> sets;
  const CategorySet prob{TaxonomyCategory::ProbabilisticEnrichment};
  const CategorySet lex{TaxonomyCategory::Lexical};
  const CategorySet lex_prob{TaxonomyCategory::Lexical,
                             TaxonomyCategory::ProbabilisticEnrichment};
  for (int i = 0; i < 5; ++i) sets.push_back(prob);
  for (int i = 0; i < 3; ++i) sets.push_back(lex);
  for (int i = 0; i < 2; ++i) sets.push_back(lex_prob);
  sets.push_back(CategorySet{});  // no identified source

  const auto rows = category_combination_frequencies(sets);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].combination == prob);
  CHECK(rows[0].count == 5);
  CHECK(rows[0].percentage == doctest::Approx(500.0 / 11.0));
  CHECK(rows[1].combination == lex);
  CHECK(rows[1].count == 3);
  CHECK(rows[2].combination == lex_prob);
  CHECK(rows[3].combination == CategorySet{});

  double total_pct = 0.0;
  for (const CombinationRow& row : rows) total_pct += row.percentage;
  CHECK(total_pct == doctest::Approx(100.0).epsilon(1e-9));

  SUBCASE("a single item is its own 100% row") {
    const std::vector<CategorySet> one = {lex_prob};
    const auto single = category_combination_frequencies(one);
    REQUIRE(single.size() == 1);
    CHECK(single[0].percentage == 100.0);
  }
}

TEST_CASE("convergence_stats per category with the inclusive 80 bound") {
  std::vector<CategorizedItem> items;
  const CategorySet presup{TaxonomyCategory::Presupposition};
  const CategorySet lex{TaxonomyCategory::Lexical};
  const CategorySet both{TaxonomyCategory::Lexical, TaxonomyCategory::Presupposition};
  items.push_back({AnnotationCounts{80, 10, 10}, lex});   // converges (inclusive)
  items.push_back({AnnotationCounts{40, 40, 20}, lex});   // majority 40
  items.push_back({AnnotationCounts{10, 60, 30}, both});  // counted for both categories
  items.push_back({AnnotationCounts{5, 76, 19}, presup}); // majority 76

  const ConvergenceResult result = convergence_stats(items);
  REQUIRE(result.rows.size() == 2);
  const ConvergenceRow& lex_row = result.rows[0];
  CHECK(lex_row.category == TaxonomyCategory::Lexical);
  CHECK(lex_row.total_items == 3);
  CHECK(lex_row.converge_pct == doctest::Approx(100.0 / 3.0));
  // Majorities 80, 40, 60: mean 60, sample std 20.
  CHECK(lex_row.mean_majority == doctest::Approx(60.0));
  CHECK(lex_row.std_majority == doctest::Approx(20.0));

  const ConvergenceRow& presup_row = result.rows[1];
  CHECK(presup_row.category == TaxonomyCategory::Presupposition);
  CHECK(presup_row.total_items == 2);
  CHECK(presup_row.converge_pct == 0.0);
  CHECK(presup_row.mean_majority == doctest::Approx(68.0));
  CHECK(result.omitted.size() == 8);

  SUBCASE("population std switch") {
    ConvergenceOptions opts;
    opts.sample_std = false;
    const auto pop = convergence_stats(items, opts);
    // Population std over {80, 40, 60}.
    CHECK(pop.rows[0].std_majority ==
          doctest::Approx(std::sqrt((400.0 + 400.0 + 0.0) / 3.0)));
  }

  SUBCASE("all items at 100 votes converge with zero std") {
    std::vector<CategorizedItem> unanimous = {{AnnotationCounts{100, 0, 0}, lex},
                                              {AnnotationCounts{0, 100, 0}, lex}};
    const auto rows = convergence_stats(unanimous).rows;
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].converge_pct == 100.0);
    CHECK(rows[0].std_majority == 0.0);
  }
}

TEST_CASE("scatter_data percentages match hand counts on a 2-category fixture") {
  const CategorySet lex{TaxonomyCategory::Lexical};
  const CategorySet coref{TaxonomyCategory::Coreference};
  std::vector<ScatterItem> items;
  // Lexical: 2 items, one converging, one predicted Complicated + multilabel.
  items.push_back({AnnotationCounts{85, 10, 5}, lex, FourWayLabel::Entailment,
                   LabelSet::parse("E")});
  items.push_back({AnnotationCounts{40, 40, 20}, lex, FourWayLabel::Complicated,
                   LabelSet::parse("EN")});
  // Coreference: 1 item, predicted single but multilabel set.
  items.push_back({AnnotationCounts{30, 30, 40}, coref, FourWayLabel::Neutral,
                   LabelSet::parse("NC")});

  const ScatterResult result = scatter_data(items);
  REQUIRE(result.rows.size() == 2);
  CHECK(result.rows[0].category == TaxonomyCategory::Lexical);
  CHECK(result.rows[0].total_items == 2);
  CHECK(result.rows[0].converge_pct == 50.0);
  CHECK(result.rows[0].pct_predicted_complicated == 50.0);
  CHECK(result.rows[0].pct_predicted_multilabel == 50.0);
  CHECK(result.rows[1].category == TaxonomyCategory::Coreference);
  CHECK(result.rows[1].pct_predicted_complicated == 0.0);
  CHECK(result.rows[1].pct_predicted_multilabel == 100.0);

  SUBCASE("everything predicted Complicated pushes the second coordinate to 100") {
    for (ScatterItem& item : items) item.predicted_fourway = FourWayLabel::Complicated;
    const ScatterResult all = scatter_data(items);
    for (const ScatterRow& row : all.rows) CHECK(row.pct_predicted_complicated == 100.0);
  }
}

TEST_CASE("aggregate_by_intersection folds multi-annotator rows") {
  const std::vector<TaxonomyAnnotation> rows = {
      {"p1", "a1", CategorySet{TaxonomyCategory::Lexical, TaxonomyCategory::Coreference}},
      {"p1", "a2", CategorySet{TaxonomyCategory::Lexical}},
      {"p2", "a1", CategorySet{TaxonomyCategory::Imperfection}},
  };
  const auto aggregated = aggregate_by_intersection(rows);
  REQUIRE(aggregated.size() == 2);
  CHECK(aggregated[0].first == "p1");
  CHECK(aggregated[0].second == CategorySet{TaxonomyCategory::Lexical});
  CHECK(aggregated[1].first == "p2");
  CHECK(aggregated[1].second == CategorySet{TaxonomyCategory::Imperfection});
}
