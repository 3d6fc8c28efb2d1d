#include "nlid/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include <json.hpp>

namespace nlid {

using json = nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

void check_aligned(std::size_t gold, std::size_t pred) {
  if (gold != pred)
    fail("gold and prediction lists differ in length (" + std::to_string(gold) +
         " vs " + std::to_string(pred) + ")");
}

double pct(double numerator, double denominator) {
  return denominator == 0.0 ? 0.0 : 100.0 * numerator / denominator;
}

double f1_from(double precision, double recall) {
  const double sum = precision + recall;
  return sum == 0.0 ? 0.0 : 2.0 * precision * recall / sum;
}

}  // namespace

long ConfusionMatrix4::gold_total(FourWayLabel label) const {
  long sum = 0;
  for (long v : counts[static_cast<std::size_t>(label)]) sum += v;
  return sum;
}

long ConfusionMatrix4::pred_total(FourWayLabel label) const {
  long sum = 0;
  for (const auto& row : counts) sum += row[static_cast<std::size_t>(label)];
  return sum;
}

long ConfusionMatrix4::total() const {
  long sum = 0;
  for (const auto& row : counts)
    for (long v : row) sum += v;
  return sum;
}

long ConfusionMatrix4::trace() const {
  long sum = 0;
  for (int i = 0; i < 4; ++i)
    sum += counts[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)];
  return sum;
}

ConfusionMatrix4 confusion(std::span<const FourWayLabel> gold,
                           std::span<const FourWayLabel> pred) {
  check_aligned(gold.size(), pred.size());
  ConfusionMatrix4 matrix;
  for (std::size_t i = 0; i < gold.size(); ++i)
    matrix.counts[static_cast<std::size_t>(gold[i])][static_cast<std::size_t>(pred[i])] += 1;
  return matrix;
}

long ContingencyMatrix::total() const {
  long sum = 0;
  for (const auto& row : counts)
    for (long v : row) sum += v;
  return sum;
}

ContingencyMatrix contingency(std::span<const FourWayLabel> pred_fourway,
                              std::span<const LabelSet> pred_multilabel) {
  check_aligned(pred_fourway.size(), pred_multilabel.size());
  ContingencyMatrix matrix;
  for (std::size_t i = 0; i < pred_fourway.size(); ++i) {
    if (pred_multilabel[i].empty()) fail("empty multilabel prediction");
    matrix.counts[static_cast<std::size_t>(pred_fourway[i])]
                 [static_cast<std::size_t>(combination_index(pred_multilabel[i]))] += 1;
  }
  return matrix;
}

EvalReport fourway_report(std::span<const FourWayLabel> gold,
                          std::span<const FourWayLabel> pred) {
  check_aligned(gold.size(), pred.size());
  EvalReport report;
  report.scheme = "fourway";
  report.n_items = static_cast<long>(gold.size());
  const ConfusionMatrix4 matrix = confusion(gold, pred);
  report.confusion = matrix;
  report.accuracy = pct(static_cast<double>(matrix.trace()),
                        static_cast<double>(matrix.total()));

  double macro_p = 0.0;
  double macro_r = 0.0;
  double macro_f1 = 0.0;
  for (FourWayLabel label : kFourWayLabels) {
    const auto i = static_cast<std::size_t>(label);
    const long tp = matrix.counts[i][i];
    const long gold_total = matrix.gold_total(label);
    const long pred_total = matrix.pred_total(label);
    ClassScore score;
    score.label = std::string(fourway_name(label));
    score.support_gold = gold_total;
    score.support_pred = pred_total;
    score.zero_pred = pred_total == 0;
    score.precision = pct(static_cast<double>(tp), static_cast<double>(pred_total));
    score.recall = pct(static_cast<double>(tp), static_cast<double>(gold_total));
    score.f1 = f1_from(score.precision, score.recall);
    if (score.zero_pred)
      report.flags.push_back("precision(" + score.label +
                             ") set to 0: no items predicted as this class");
    macro_p += score.precision;
    macro_r += score.recall;
    macro_f1 += score.f1;
    report.per_class.push_back(std::move(score));
  }
  report.macro_precision = macro_p / 4.0;
  report.macro_recall = macro_r / 4.0;
  report.macro_f1 = macro_f1 / 4.0;
  return report;
}

EvalReport multilabel_report(std::span<const LabelSet> gold,
                             std::span<const LabelSet> pred,
                             bool over_combinations) {
  check_aligned(gold.size(), pred.size());
  for (std::size_t i = 0; i < gold.size(); ++i)
    if (gold[i].empty() || pred[i].empty()) fail("empty label set at item " + std::to_string(i));

  EvalReport report;
  report.scheme = "multilabel";
  report.n_items = static_cast<long>(gold.size());

  std::array<ExactMatchBucket, 3> buckets{};
  long exact = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const int k = gold[i].size();
    ExactMatchBucket& bucket = buckets[static_cast<std::size_t>(k - 1)];
    bucket.n_items += 1;
    if (gold[i] == pred[i]) {
      bucket.n_correct += 1;
      ++exact;
    }
  }
  for (ExactMatchBucket& bucket : buckets)
    bucket.accuracy = pct(static_cast<double>(bucket.n_correct),
                          static_cast<double>(bucket.n_items));
  report.exact_by_gold_count = buckets;
  report.accuracy = pct(static_cast<double>(exact), static_cast<double>(gold.size()));

  double macro_p = 0.0;
  double macro_r = 0.0;
  double macro_f1 = 0.0;
  if (!over_combinations) {
    // Each of E/N/C scored as an independent binary presence task.
    for (NLILabel label : kNLILabels) {
      long tp = 0;
      long gold_total = 0;
      long pred_total = 0;
      for (std::size_t i = 0; i < gold.size(); ++i) {
        const bool g = gold[i].contains(label);
        const bool p = pred[i].contains(label);
        if (g) ++gold_total;
        if (p) ++pred_total;
        if (g && p) ++tp;
      }
      ClassScore score;
      score.label = std::string(nli_name(label));
      score.support_gold = gold_total;
      score.support_pred = pred_total;
      score.zero_pred = pred_total == 0;
      score.precision = pct(static_cast<double>(tp), static_cast<double>(pred_total));
      score.recall = pct(static_cast<double>(tp), static_cast<double>(gold_total));
      score.f1 = f1_from(score.precision, score.recall);
      if (score.zero_pred)
        report.flags.push_back("precision(" + score.label +
                               ") set to 0: no items predicted with this label");
      macro_p += score.precision;
      macro_r += score.recall;
      macro_f1 += score.f1;
      report.per_class.push_back(std::move(score));
    }
    report.macro_precision = macro_p / 3.0;
    report.macro_recall = macro_r / 3.0;
    report.macro_f1 = macro_f1 / 3.0;
  } else {
    for (std::uint8_t mask : kCombinationMasks) {
      const LabelSet combo = LabelSet::from_mask(mask);
      long tp = 0;
      long gold_total = 0;
      long pred_total = 0;
      for (std::size_t i = 0; i < gold.size(); ++i) {
        const bool g = gold[i] == combo;
        const bool p = pred[i] == combo;
        if (g) ++gold_total;
        if (p) ++pred_total;
        if (g && p) ++tp;
      }
      ClassScore score;
      score.label = combo.to_string();
      score.support_gold = gold_total;
      score.support_pred = pred_total;
      score.zero_pred = pred_total == 0;
      score.precision = pct(static_cast<double>(tp), static_cast<double>(pred_total));
      score.recall = pct(static_cast<double>(tp), static_cast<double>(gold_total));
      score.f1 = f1_from(score.precision, score.recall);
      macro_p += score.precision;
      macro_r += score.recall;
      macro_f1 += score.f1;
      report.per_class.push_back(std::move(score));
    }
    report.macro_precision = macro_p / 7.0;
    report.macro_recall = macro_r / 7.0;
    report.macro_f1 = macro_f1 / 7.0;
  }
  return report;
}

EvalReport aggregate_reports(std::span<const EvalReport> reports) {
  if (reports.empty()) fail("no reports to aggregate");
  const EvalReport& first = reports.front();
  for (const EvalReport& r : reports) {
    if (r.scheme != first.scheme || r.per_class.size() != first.per_class.size())
      fail("cannot aggregate reports of different shapes");
  }
  EvalReport out;
  out.scheme = first.scheme;
  out.n_items = first.n_items;
  const double k = static_cast<double>(reports.size());
  for (const EvalReport& r : reports) {
    out.accuracy += r.accuracy / k;
    out.macro_precision += r.macro_precision / k;
    out.macro_recall += r.macro_recall / k;
    out.macro_f1 += r.macro_f1 / k;
  }
  for (std::size_t c = 0; c < first.per_class.size(); ++c) {
    ClassScore score;
    score.label = first.per_class[c].label;
    score.support_gold = first.per_class[c].support_gold;
    for (const EvalReport& r : reports) {
      score.precision += r.per_class[c].precision / k;
      score.recall += r.per_class[c].recall / k;
      score.f1 += r.per_class[c].f1 / k;
      score.support_pred += r.per_class[c].support_pred;
    }
    score.support_pred /= static_cast<long>(reports.size());
    out.per_class.push_back(std::move(score));
  }
  if (first.exact_by_gold_count) {
    std::array<ExactMatchBucket, 3> buckets{};
    for (int b = 0; b < 3; ++b) {
      const auto bi = static_cast<std::size_t>(b);
      buckets[bi].n_items = (*first.exact_by_gold_count)[bi].n_items;
      for (const EvalReport& r : reports) {
        if (!r.exact_by_gold_count) fail("cannot aggregate reports of different shapes");
        buckets[bi].accuracy += (*r.exact_by_gold_count)[bi].accuracy / k;
        buckets[bi].n_correct += (*r.exact_by_gold_count)[bi].n_correct;
      }
      buckets[bi].n_correct /= static_cast<long>(reports.size());
    }
    out.exact_by_gold_count = buckets;
  }
  out.flags.push_back("aggregated over " + std::to_string(reports.size()) + " runs");
  return out;
}

namespace {

// Doubled U statistic (so ties contribute integers) of sample a vs b.
long long doubled_u(std::span<const double> a, std::span<const double> b) {
  long long twice_u = 0;
  for (double x : a)
    for (double y : b) {
      if (x > y)
        twice_u += 2;
      else if (x == y)
        twice_u += 1;
    }
  return twice_u;
}

// Distribution of the doubled U statistic over all assignments of n_a
// pooled values to sample a, as exact counts (they fit a double: the
// largest total is C(40,20) < 2^53 within the exact cutover).
std::vector<double> exact_u_distribution(const std::vector<double>& pooled,
                                         std::size_t n_a, std::size_t n_b) {
  // Group pooled values; process groups in ascending order.
  std::map<double, long> groups_map;
  for (double v : pooled) groups_map[v] += 1;
  std::vector<std::pair<double, long>> groups(groups_map.begin(), groups_map.end());

  const std::size_t max_u2 = 2 * n_a * n_b;
  // state[a_used][u2] = number of ways
  std::vector<std::vector<double>> state(
      n_a + 1, std::vector<double>(max_u2 + 1, 0.0));
  state[0][0] = 1.0;

  long below = 0;  // pooled values strictly below the current group
  for (const auto& [value, count] : groups) {
    (void)value;
    std::vector<std::vector<double>> next(
        n_a + 1, std::vector<double>(max_u2 + 1, 0.0));
    // Choose k of this group's `count` values for sample a.
    std::vector<double> binom(static_cast<std::size_t>(count) + 1, 0.0);
    binom[0] = 1.0;
    for (long i = 1; i <= count; ++i)
      binom[static_cast<std::size_t>(i)] =
          binom[static_cast<std::size_t>(i - 1)] *
          static_cast<double>(count - i + 1) / static_cast<double>(i);

    for (std::size_t a_used = 0; a_used <= n_a; ++a_used) {
      for (std::size_t u2 = 0; u2 <= max_u2; ++u2) {
        const double ways = state[a_used][u2];
        if (ways == 0.0) continue;
        const long b_below = below - static_cast<long>(a_used);
        for (long k = 0; k <= count && a_used + static_cast<std::size_t>(k) <= n_a; ++k) {
          // k a-values here: each beats every b strictly below (2 each)
          // and ties the (count - k) b-values in this group (1 each).
          const long long add = 2LL * k * b_below + k * (count - k);
          const std::size_t nu = u2 + static_cast<std::size_t>(add);
          if (nu > max_u2) continue;
          next[a_used + static_cast<std::size_t>(k)][nu] +=
              ways * binom[static_cast<std::size_t>(k)];
        }
      }
    }
    state = std::move(next);
    below += count;
  }
  return state[n_a];
}

double normal_sf_doubled(double z) {
  // 2 * (1 - Phi(z)) for the two-sided p.
  return std::erfc(z / std::sqrt(2.0));
}

}  // namespace

MannWhitneyResult mann_whitney_two_sided(std::span<const double> a,
                                         std::span<const double> b,
                                         long exact_cutover) {
  if (a.empty() || b.empty()) fail("Mann-Whitney requires two nonempty samples");
  const std::size_t n_a = a.size();
  const std::size_t n_b = b.size();

  MannWhitneyResult result;
  const long long u2 = doubled_u(a, b);
  result.u = static_cast<double>(u2) / 2.0;

  const long long mu2 = static_cast<long long>(n_a) * static_cast<long long>(n_b);
  const long long dev = std::llabs(u2 - mu2);

  if (static_cast<long>(n_a) * static_cast<long>(n_b) <= exact_cutover) {
    result.exact = true;
    std::vector<double> pooled;
    pooled.reserve(n_a + n_b);
    pooled.insert(pooled.end(), a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    const std::vector<double> dist = exact_u_distribution(pooled, n_a, n_b);
    double total = 0.0;
    double extreme = 0.0;
    for (std::size_t v = 0; v < dist.size(); ++v) {
      total += dist[v];
      if (std::llabs(static_cast<long long>(v) - mu2) >= dev) extreme += dist[v];
    }
    result.p = extreme / total;
    return result;
  }

  // Normal approximation with tie correction and continuity correction.
  std::vector<double> pooled;
  pooled.reserve(n_a + n_b);
  pooled.insert(pooled.end(), a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  std::map<double, long> tie_groups;
  for (double v : pooled) tie_groups[v] += 1;
  const double n = static_cast<double>(n_a + n_b);
  double tie_term = 0.0;
  for (const auto& [value, t] : tie_groups) {
    (void)value;
    const double td = static_cast<double>(t);
    tie_term += td * td * td - td;
  }
  const double var = (static_cast<double>(n_a) * static_cast<double>(n_b) / 12.0) *
                     ((n + 1.0) - tie_term / (n * (n - 1.0)));
  if (var <= 0.0) {
    result.p = 1.0;
    return result;
  }
  const double z = (static_cast<double>(dev) / 2.0 - 0.5) / std::sqrt(var);
  result.p = z <= 0.0 ? 1.0 : std::min(1.0, normal_sf_doubled(z));
  return result;
}

double quantile(std::span<const double> values, double q) {
  if (values.empty()) fail("quantile of empty sample");
  if (!(q >= 0.0 && q <= 1.0)) fail("quantile q outside [0,1]");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - std::floor(pos);
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

EntropyByGroup entropy_by_group(std::span<const double> entropies,
                                std::span<const FourWayLabel> groups) {
  check_aligned(entropies.size(), groups.size());
  std::array<std::vector<double>, 4> buckets;
  for (std::size_t i = 0; i < entropies.size(); ++i)
    buckets[static_cast<std::size_t>(groups[i])].push_back(entropies[i]);

  EntropyByGroup out;
  for (FourWayLabel label : kFourWayLabels) {
    std::vector<double>& values = buckets[static_cast<std::size_t>(label)];
    if (values.empty()) continue;
    std::sort(values.begin(), values.end());
    GroupSummary s;
    s.group = label;
    s.n = static_cast<long>(values.size());
    s.min = values.front();
    s.max = values.back();
    s.q1 = quantile(values, 0.25);
    s.median = quantile(values, 0.5);
    s.q3 = quantile(values, 0.75);
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    out.groups.push_back(s);
  }

  const auto& complicated = buckets[static_cast<std::size_t>(FourWayLabel::Complicated)];
  if (!complicated.empty()) {
    for (FourWayLabel label :
         {FourWayLabel::Entailment, FourWayLabel::Neutral, FourWayLabel::Contradiction}) {
      const auto& other = buckets[static_cast<std::size_t>(label)];
      if (other.empty()) continue;
      const MannWhitneyResult mw = mann_whitney_two_sided(complicated, other);
      out.complicated_vs.emplace_back(label, mw.p);
    }
  }
  return out;
}

namespace {

std::string format_pct(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.2f", value);
  return buffer;
}

}  // namespace

std::string report_to_json(const EvalReport& report) {
  json obj;
  obj["scheme"] = report.scheme;
  obj["n_items"] = report.n_items;
  obj["accuracy"] = report.accuracy;
  obj["macro_precision"] = report.macro_precision;
  obj["macro_recall"] = report.macro_recall;
  obj["macro_f1"] = report.macro_f1;
  json per_class = json::object();
  for (const ClassScore& score : report.per_class) {
    per_class[score.label] = {{"precision", score.precision},
                              {"recall", score.recall},
                              {"f1", score.f1},
                              {"support_gold", score.support_gold},
                              {"support_pred", score.support_pred}};
  }
  obj["per_class"] = per_class;
  obj["flags"] = report.flags;
  if (report.exact_by_gold_count) {
    json buckets = json::object();
    for (int k = 0; k < 3; ++k) {
      const ExactMatchBucket& bucket = (*report.exact_by_gold_count)[static_cast<std::size_t>(k)];
      buckets[std::to_string(k + 1)] = {{"n_items", bucket.n_items},
                                        {"n_correct", bucket.n_correct},
                                        {"accuracy", bucket.accuracy}};
    }
    obj["exact_match_by_gold_count"] = buckets;
  }
  if (report.confusion) {
    json rows = json::array();
    for (const auto& row : report.confusion->counts) rows.push_back(row);
    obj["confusion"] = {{"labels", {"E", "N", "C", "Complicated"}}, {"counts", rows}};
  }
  return obj.dump(2);
}

std::string report_to_csv(const EvalReport& report) {
  std::ostringstream os;
  os << "metric,value\n";
  os << "Accuracy," << format_pct(report.accuracy) << "\n";
  os << "Macro Precision," << format_pct(report.macro_precision) << "\n";
  os << "Macro Recall," << format_pct(report.macro_recall) << "\n";
  os << "Macro F1," << format_pct(report.macro_f1) << "\n";
  if (report.scheme == "fourway") {
    // Complicated first, then the three NLI classes.
    for (const char* name : {"Complicated", "E", "N", "C"}) {
      for (const ClassScore& score : report.per_class)
        if (score.label == name)
          os << name << " F1," << format_pct(score.f1) << "\n";
    }
  } else {
    if (report.exact_by_gold_count) {
      os << "1 Label Accuracy,"
         << format_pct((*report.exact_by_gold_count)[0].accuracy) << "\n";
      os << "2 Labels Accuracy,"
         << format_pct((*report.exact_by_gold_count)[1].accuracy) << "\n";
      os << "3 Labels Accuracy,"
         << format_pct((*report.exact_by_gold_count)[2].accuracy) << "\n";
    }
  }
  return os.str();
}

std::string confusion_to_csv(const ConfusionMatrix4& matrix) {
  std::ostringstream os;
  os << "gold,E,N,C,Complicated,All\n";
  for (FourWayLabel gold : kFourWayLabels) {
    os << fourway_name(gold);
    for (FourWayLabel pred : kFourWayLabels)
      os << ',' << matrix.counts[static_cast<std::size_t>(gold)][static_cast<std::size_t>(pred)];
    os << ',' << matrix.gold_total(gold) << "\n";
  }
  os << "All";
  for (FourWayLabel pred : kFourWayLabels) os << ',' << matrix.pred_total(pred);
  os << ',' << matrix.total() << "\n";
  return os.str();
}

std::string contingency_to_csv(const ContingencyMatrix& matrix) {
  std::ostringstream os;
  os << "fourway,E,N,C,EN,NC,EC,ENC\n";
  for (FourWayLabel pred : kFourWayLabels) {
    os << fourway_name(pred);
    for (int c = 0; c < 7; ++c)
      os << ',' << matrix.counts[static_cast<std::size_t>(pred)][static_cast<std::size_t>(c)];
    os << "\n";
  }
  return os.str();
}

}  // namespace nlid
