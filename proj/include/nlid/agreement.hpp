#pragma once

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "nlid/ingest.hpp"
#include "nlid/labels.hpp"

namespace nlid {

struct AgreementReport {
  double alpha = 1.0;
  double observed_disagreement = 0.0;
  double expected_disagreement = 0.0;
  int n_units = 0;        // units entering the computation (>= 2 annotations)
  int n_annotations = 0;  // pooled annotations over those units
};

// 1 - Jaccard * monotonicity. Two empty sets are identical (distance 0);
// empty vs nonempty counts as disjoint (distance 1).
double masi_distance(CategorySet a, CategorySet b);

double nominal_distance(CategorySet a, CategorySet b);

// Chance-corrected agreement over (unit, annotator, value) rows with an
// arbitrary distance on values. Units with fewer than two annotations are
// excluded; observed disagreement normalizes ordered within-unit pairs by
// (m_u - 1), expected pools all annotations.
template <typename Value>
AgreementReport krippendorff_alpha(
    const std::vector<std::tuple<std::string, std::string, Value>>& rows,
    const std::function<double(const Value&, const Value&)>& distance) {
  std::map<std::string, std::vector<const Value*>> units;
  for (const auto& [unit, annotator, value] : rows) {
    (void)annotator;
    units[unit].push_back(&value);
  }

  std::vector<const Value*> pooled;
  AgreementReport report;
  double observed_sum = 0.0;
  for (const auto& [unit, values] : units) {
    (void)unit;
    const std::size_t m = values.size();
    if (m < 2) continue;
    report.n_units += 1;
    double unit_sum = 0.0;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j)
        if (i != j) unit_sum += distance(*values[i], *values[j]);
    observed_sum += unit_sum / static_cast<double>(m - 1);
    for (const Value* v : values) pooled.push_back(v);
  }
  if (report.n_units == 0)
    throw std::invalid_argument("no unit has two or more annotations");

  const std::size_t n = pooled.size();
  report.n_annotations = static_cast<int>(n);
  report.observed_disagreement = observed_sum / static_cast<double>(n);

  double expected_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) expected_sum += distance(*pooled[i], *pooled[j]);
  report.expected_disagreement =
      expected_sum / (static_cast<double>(n) * static_cast<double>(n - 1));

  if (report.observed_disagreement == 0.0)
    report.alpha = 1.0;
  else
    report.alpha = 1.0 - report.observed_disagreement / report.expected_disagreement;
  return report;
}

AgreementReport krippendorff_alpha_masi(const std::vector<TaxonomyAnnotation>& rows);
AgreementReport krippendorff_alpha_nominal(const std::vector<TaxonomyAnnotation>& rows);

struct Adjudication {
  CategorySet intersection;
  // True iff the intersection is empty while at least one input was not.
  bool needs_reconciliation = false;
};

Adjudication intersect_adjudicate(const TaxonomyAnnotation& a,
                                  const TaxonomyAnnotation& b);

// One aggregated category set per item: the intersection across that item's
// annotators (a single annotation aggregates to itself).
std::vector<std::pair<std::string, CategorySet>> aggregate_by_intersection(
    const std::vector<TaxonomyAnnotation>& rows);

struct CombinationRow {
  CategorySet combination;  // empty set = the "None" row
  long count = 0;
  double percentage = 0.0;
};

// Exact-combination frequencies, sorted by count descending then canonically.
std::vector<CombinationRow> category_combination_frequencies(
    std::span<const CategorySet> item_sets);

struct ConvergenceRow {
  TaxonomyCategory category;
  double converge_pct = 0.0;  // share of items with majority >= the bound
  long total_items = 0;
  double mean_majority = 0.0;
  double std_majority = 0.0;
};

struct ConvergenceOptions {
  int converge_min_votes = 80;  // inclusive
  bool sample_std = true;       // n-1 denominator; false = population
};

struct CategorizedItem {
  AnnotationCounts counts;
  CategorySet categories;
};

// Per-category convergence percentage and majority-vote statistics. An item
// contributes to every category in its set; categories with no items are
// reported in `omitted`.
struct ConvergenceResult {
  std::vector<ConvergenceRow> rows;
  std::vector<TaxonomyCategory> omitted;
};
ConvergenceResult convergence_stats(std::span<const CategorizedItem> items,
                                    const ConvergenceOptions& opts = {});

struct ScatterRow {
  TaxonomyCategory category;
  long total_items = 0;
  double converge_pct = 0.0;
  double pct_predicted_complicated = 0.0;
  double pct_predicted_multilabel = 0.0;
};

struct ScatterItem {
  AnnotationCounts counts;
  CategorySet categories;
  FourWayLabel predicted_fourway;
  LabelSet predicted_multilabel;
};

struct ScatterResult {
  std::vector<ScatterRow> rows;
  std::vector<TaxonomyCategory> omitted;
};
ScatterResult scatter_data(std::span<const ScatterItem> items,
                           const ConvergenceOptions& opts = {});

}  // namespace nlid
