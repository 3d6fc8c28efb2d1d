#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nlid/labels.hpp"

namespace nlid {

struct ConfusionMatrix4 {
  // counts[gold][predicted], label order E,N,C,Complicated.
  std::array<std::array<long, 4>, 4> counts{};

  long gold_total(FourWayLabel label) const;
  long pred_total(FourWayLabel label) const;
  long total() const;
  long trace() const;
};

ConfusionMatrix4 confusion(std::span<const FourWayLabel> gold,
                           std::span<const FourWayLabel> pred);

struct ContingencyMatrix {
  // counts[fourway prediction][multilabel combination], combinations in
  // table order E,N,C,EN,NC,EC,ENC.
  std::array<std::array<long, 7>, 4> counts{};

  long total() const;
};

ContingencyMatrix contingency(std::span<const FourWayLabel> pred_fourway,
                              std::span<const LabelSet> pred_multilabel);

struct ClassScore {
  std::string label;
  double precision = 0.0;  // percent
  double recall = 0.0;
  double f1 = 0.0;
  long support_gold = 0;
  long support_pred = 0;
  bool zero_pred = false;  // precision forced to 0: nothing predicted as this class
};

struct ExactMatchBucket {
  long n_items = 0;
  long n_correct = 0;
  double accuracy = 0.0;  // percent; 0 with n_items == 0
};

struct EvalReport {
  std::string scheme;  // "fourway" or "multilabel"
  long n_items = 0;
  double accuracy = 0.0;  // percent; exact match for multilabel
  std::vector<ClassScore> per_class;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  std::vector<std::string> flags;
  // 4-way only.
  std::optional<ConfusionMatrix4> confusion;
  // Multilabel only: exact match partitioned by gold-set cardinality (1..3).
  std::optional<std::array<ExactMatchBucket, 3>> exact_by_gold_count;
};

EvalReport fourway_report(std::span<const FourWayLabel> gold,
                          std::span<const FourWayLabel> pred);

// Per-label binary precision/recall/F1 over E/N/C presence, macro over the
// three labels, exact-match accuracy overall and by gold-set size. The
// 7-combination macro variant is available via `over_combinations`.
EvalReport multilabel_report(std::span<const LabelSet> gold,
                             std::span<const LabelSet> pred,
                             bool over_combinations = false);

// Unweighted mean across runs of reports with identical shape.
EvalReport aggregate_reports(std::span<const EvalReport> reports);

struct MannWhitneyResult {
  double u = 0.0;  // U statistic of the first sample, midrank convention
  double p = 1.0;  // two-sided
  bool exact = false;
};

// Exact enumeration when n_a*n_b <= exact_cutover, otherwise normal
// approximation with tie correction and continuity correction.
MannWhitneyResult mann_whitney_two_sided(std::span<const double> a,
                                         std::span<const double> b,
                                         long exact_cutover = 400);

struct GroupSummary {
  FourWayLabel group;
  long n = 0;
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  double mean = 0.0;
};

struct EntropyByGroup {
  std::vector<GroupSummary> groups;  // label order, groups with >= 1 item
  // p-values of Complicated vs each other populated group.
  std::vector<std::pair<FourWayLabel, double>> complicated_vs;
};

EntropyByGroup entropy_by_group(std::span<const double> entropies,
                                std::span<const FourWayLabel> groups);

// Linear-interpolation quantile over a sorted copy of the values.
double quantile(std::span<const double> values, double q);

// Report serialization. CSV rows use the conventional metric names
// ("Accuracy", "Macro Precision", ..., "1 Label Accuracy"); values are
// rounded to two decimals only here.
std::string report_to_json(const EvalReport& report);
std::string report_to_csv(const EvalReport& report);
std::string confusion_to_csv(const ConfusionMatrix4& matrix);
std::string contingency_to_csv(const ContingencyMatrix& matrix);

}  // namespace nlid
