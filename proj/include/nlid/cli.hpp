#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nlid/baseline.hpp"
#include "nlid/ingest.hpp"
#include "nlid/labels.hpp"
#include "nlid/relabel.hpp"

namespace nlid::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitIo = 2;

// Conversion chain from a prediction payload to the two gold schemes.
// Distributions go through the dist_threshold rule, per-label probabilities
// through the sigmoid rule, label sets collapse by cardinality. A bare
// 4-way payload cannot be expanded to a multilabel.
FourWayLabel prediction_to_fourway(const PredictionRecord& record,
                                   const ConversionConfig& cfg);
std::optional<LabelSet> prediction_to_multilabel(const PredictionRecord& record,
                                                 const ConversionConfig& cfg);

struct ValidateOptions {
  std::vector<std::string> paths;
  std::string format;  // chaos | mnli | taxonomy | predictions
  bool strict = false;
};
int cmd_validate(const ValidateOptions& opts, std::ostream& out, std::ostream& err);

struct RelabelOptions {
  std::vector<std::string> chaos_paths;
  std::vector<std::string> mnli_paths;
  std::string policy_path;     // JSON with threshold overrides, optional
  std::string balance_target;  // "", "auto", or an integer
  std::uint64_t seed = 0;
  std::string out_dir;
  bool strict = false;
  bool include_overlap = false;  // keep MNLI items that ChaosNLI re-annotated
  // Per-threshold flags; they win over the policy file.
  std::optional<int> chaos_single_min;
  std::optional<int> chaos_disagree_max;
  std::optional<int> chaos_multilabel_min;
  std::optional<int> mnli_complicated_min;
  std::optional<int> mnli_multilabel_min;
};
int cmd_relabel(const RelabelOptions& opts, std::ostream& out, std::ostream& err);

struct SplitOptions {
  std::string data_path;
  std::string sizes;   // "a,b,c"
  std::string ratios;  // "x,y,z"
  std::uint64_t seed = 0;
  std::string stratify_by = "combination";  // or "fourway"
  std::string out_dir;
};
int cmd_split(const SplitOptions& opts, std::ostream& out, std::ostream& err);

struct AgreeOptions {
  std::string taxonomy_path;
  std::string distance = "masi";  // or "nominal"
  std::string out_dir;            // optional; report always printed
};
int cmd_agree(const AgreeOptions& opts, std::ostream& out, std::ostream& err);

struct AnalyzeOptions {
  std::string report;  // combinations | convergence | entropy | scatter | stacked
  std::string items_path;
  std::string items_format;  // chaos | mnli | labeled
  std::string taxonomy_path;
  std::string pred_path;     // 4-way-convertible predictions
  std::string pred_ml_path;  // multilabel-convertible predictions
  std::string out_dir;
  double entropy_base = 2.0;
  int converge_min_votes = 80;
  bool sample_std = true;
  ConversionConfig conversion;
};
int cmd_analyze(const AnalyzeOptions& opts, std::ostream& out, std::ostream& err);

struct TrainOptions {
  std::string train_path;
  std::string dev_path;
  std::string head = "softmax4";
  std::string out_dir;
  std::uint64_t seed = 0;
  // Overrides of the per-head defaults.
  std::optional<double> lr;
  std::optional<double> lr_decay;
  std::optional<int> plateau;
  std::optional<int> patience;
  std::optional<int> max_epochs;
  std::optional<int> batch_size;
  std::optional<double> mixup_alpha;
  std::optional<int> hash_dim;
};
int cmd_train(const TrainOptions& opts, std::ostream& out, std::ostream& err);

struct PredictOptions {
  std::string model_path;
  std::string data_path;
  std::string out_dir;
};
int cmd_predict(const PredictOptions& opts, std::ostream& out, std::ostream& err);

struct EvalOptions {
  std::string gold_path;
  std::vector<std::string> pred_paths;  // several = aggregate across runs
  std::string scheme;                   // fourway | multilabel
  std::string compare_a;                // --compare mode: 4-way prediction file
  std::string compare_b;                //                 multilabel prediction file
  ConversionConfig conversion;
  std::string out_dir;
};
int cmd_eval(const EvalOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace nlid::cli
