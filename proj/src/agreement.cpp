#include "nlid/agreement.hpp"

#include <algorithm>
#include <cmath>

namespace nlid {

double masi_distance(CategorySet a, CategorySet b) {
  const CategorySet inter = a.intersect(b);
  const CategorySet uni = a.unite(b);

  double jaccard;
  if (uni.empty())
    jaccard = 1.0;  // both empty
  else
    jaccard = static_cast<double>(inter.size()) / static_cast<double>(uni.size());

  double monotonicity;
  if (a == b)
    monotonicity = 1.0;
  else if (a.subset_of(b) || b.subset_of(a))
    monotonicity = 2.0 / 3.0;
  else if (!inter.empty())
    monotonicity = 1.0 / 3.0;
  else
    monotonicity = 0.0;

  return 1.0 - jaccard * monotonicity;
}

double nominal_distance(CategorySet a, CategorySet b) {
  return a == b ? 0.0 : 1.0;
}

namespace {

AgreementReport alpha_over_rows(const std::vector<TaxonomyAnnotation>& rows,
                                double (*distance)(CategorySet, CategorySet)) {
  std::vector<std::tuple<std::string, std::string, CategorySet>> tuples;
  tuples.reserve(rows.size());
  for (const TaxonomyAnnotation& row : rows)
    tuples.emplace_back(row.item_uid, row.annotator_id, row.categories);
  return krippendorff_alpha<CategorySet>(
      tuples, [distance](const CategorySet& a, const CategorySet& b) {
        return distance(a, b);
      });
}

}  // namespace

AgreementReport krippendorff_alpha_masi(const std::vector<TaxonomyAnnotation>& rows) {
  return alpha_over_rows(rows, &masi_distance);
}

AgreementReport krippendorff_alpha_nominal(const std::vector<TaxonomyAnnotation>& rows) {
  return alpha_over_rows(rows, &nominal_distance);
}

Adjudication intersect_adjudicate(const TaxonomyAnnotation& a,
                                  const TaxonomyAnnotation& b) {
  if (a.item_uid != b.item_uid)
    throw std::invalid_argument("cannot adjudicate annotations of different items ('" +
                                a.item_uid + "' vs '" + b.item_uid + "')");
  Adjudication out;
  out.intersection = a.categories.intersect(b.categories);
  out.needs_reconciliation =
      out.intersection.empty() && (!a.categories.empty() || !b.categories.empty());
  return out;
}

std::vector<std::pair<std::string, CategorySet>> aggregate_by_intersection(
    const std::vector<TaxonomyAnnotation>& rows) {
  // Preserve first-appearance order of items.
  std::vector<std::string> order;
  std::map<std::string, CategorySet> agg;
  std::map<std::string, bool> seen;
  for (const TaxonomyAnnotation& row : rows) {
    auto it = seen.find(row.item_uid);
    if (it == seen.end()) {
      seen[row.item_uid] = true;
      order.push_back(row.item_uid);
      agg[row.item_uid] = row.categories;
    } else {
      agg[row.item_uid] = agg[row.item_uid].intersect(row.categories);
    }
  }
  std::vector<std::pair<std::string, CategorySet>> out;
  out.reserve(order.size());
  for (const std::string& uid : order) out.emplace_back(uid, agg[uid]);
  return out;
}

std::vector<CombinationRow> category_combination_frequencies(
    std::span<const CategorySet> item_sets) {
  std::map<CategorySet, long> counts;
  for (CategorySet set : item_sets) counts[set] += 1;

  std::vector<CombinationRow> rows;
  rows.reserve(counts.size());
  const double total = static_cast<double>(item_sets.size());
  for (const auto& [combo, count] : counts)
    rows.push_back(CombinationRow{combo, count,
                                  total > 0 ? 100.0 * static_cast<double>(count) / total
                                            : 0.0});
  std::sort(rows.begin(), rows.end(), [](const CombinationRow& a, const CombinationRow& b) {
    if (a.count != b.count) return a.count > b.count;
    return a.combination < b.combination;
  });
  return rows;
}

namespace {

struct Accumulator {
  long total = 0;
  long converged = 0;
  double sum = 0.0;
  double sum_sq = 0.0;
};

double std_from_moments(const Accumulator& acc, bool sample) {
  if (acc.total == 0) return 0.0;
  const double n = static_cast<double>(acc.total);
  const double mean = acc.sum / n;
  double variance;
  if (sample) {
    if (acc.total < 2) return 0.0;
    variance = (acc.sum_sq - n * mean * mean) / (n - 1.0);
  } else {
    variance = acc.sum_sq / n - mean * mean;
  }
  return std::sqrt(std::max(0.0, variance));
}

}  // namespace

ConvergenceResult convergence_stats(std::span<const CategorizedItem> items,
                                    const ConvergenceOptions& opts) {
  std::array<Accumulator, 10> acc{};
  for (const CategorizedItem& item : items) {
    const MajorityResult m = majority(item.counts);
    for (TaxonomyCategory c : kTaxonomyCategories) {
      if (!item.categories.contains(c)) continue;
      Accumulator& a = acc[static_cast<std::size_t>(c)];
      a.total += 1;
      if (m.votes >= opts.converge_min_votes) a.converged += 1;
      a.sum += m.votes;
      a.sum_sq += static_cast<double>(m.votes) * m.votes;
    }
  }

  ConvergenceResult result;
  for (TaxonomyCategory c : kTaxonomyCategories) {
    const Accumulator& a = acc[static_cast<std::size_t>(c)];
    if (a.total == 0) {
      result.omitted.push_back(c);
      continue;
    }
    ConvergenceRow row;
    row.category = c;
    row.total_items = a.total;
    row.converge_pct = 100.0 * static_cast<double>(a.converged) / static_cast<double>(a.total);
    row.mean_majority = a.sum / static_cast<double>(a.total);
    row.std_majority = std_from_moments(a, opts.sample_std);
    result.rows.push_back(row);
  }
  return result;
}

ScatterResult scatter_data(std::span<const ScatterItem> items,
                           const ConvergenceOptions& opts) {
  struct ScatterAcc {
    long total = 0;
    long converged = 0;
    long complicated = 0;
    long multilabel = 0;
  };
  std::array<ScatterAcc, 10> acc{};
  for (const ScatterItem& item : items) {
    const MajorityResult m = majority(item.counts);
    for (TaxonomyCategory c : kTaxonomyCategories) {
      if (!item.categories.contains(c)) continue;
      ScatterAcc& a = acc[static_cast<std::size_t>(c)];
      a.total += 1;
      if (m.votes >= opts.converge_min_votes) a.converged += 1;
      if (item.predicted_fourway == FourWayLabel::Complicated) a.complicated += 1;
      if (item.predicted_multilabel.size() >= 2) a.multilabel += 1;
    }
  }

  ScatterResult result;
  for (TaxonomyCategory c : kTaxonomyCategories) {
    const ScatterAcc& a = acc[static_cast<std::size_t>(c)];
    if (a.total == 0) {
      result.omitted.push_back(c);
      continue;
    }
    const double n = static_cast<double>(a.total);
    result.rows.push_back(ScatterRow{c, a.total,
                                     100.0 * static_cast<double>(a.converged) / n,
                                     100.0 * static_cast<double>(a.complicated) / n,
                                     100.0 * static_cast<double>(a.multilabel) / n});
  }
  return result;
}

}  // namespace nlid
