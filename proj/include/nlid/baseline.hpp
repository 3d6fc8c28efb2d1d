#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "nlid/labels.hpp"
#include "nlid/relabel.hpp"

namespace nlid {

struct FeatureConfig {
  int hash_dim = 1 << 15;
};

inline constexpr int kDenseFeatureDim = 7;

// Dense block: token-overlap Jaccard, hypothesis-only fraction, premise-only
// fraction, length ratio clipped to [0,4], negation-marker mismatch,
// hypothesis-is-question, bias. Hashed block: premise/hypothesis unigrams
// and cross-unigrams, FNV-1a modulo hash_dim.
struct FeatureVector {
  std::array<double, kDenseFeatureDim> dense{};
  std::vector<std::pair<int, double>> hashed;  // sorted by index, unique
  int hash_dim = 0;
};

// Lowercase tokens split on non-alphanumeric runs.
std::vector<std::string> tokenize(std::string_view text);

FeatureVector extract_features(std::string_view premise, std::string_view hypothesis,
                               const FeatureConfig& config = {});

enum class Head : std::uint8_t { Softmax4, Sigmoid3, MixupSoftmax3 };

std::string_view head_name(Head head);
Head head_from_name(std::string_view name);
int head_classes(Head head);  // 4 / 3 / 3

struct LinearModelParams {
  int n_classes = 0;
  int dense_dim = kDenseFeatureDim;
  int hash_dim = 0;
  std::vector<double> weights;  // n_classes x (dense_dim + hash_dim), row-major
  std::vector<double> bias;     // n_classes

  int dim() const { return dense_dim + hash_dim; }
  static LinearModelParams zeros(int n_classes, int hash_dim);
};

std::vector<double> logits(const LinearModelParams& params, const FeatureVector& fv);
std::vector<double> softmax_forward(const LinearModelParams& params,
                                    const FeatureVector& fv);
std::array<double, 3> sigmoid_forward(const LinearModelParams& params,
                                      const FeatureVector& fv);

// KL(p || q) in nats; q is clipped to [1e-12, 1], zero p components
// contribute nothing.
double kl_divergence(const LabelDistribution& p, const LabelDistribution& q);

struct SoftExample {
  FeatureVector features;
  LabelDistribution soft;
};

SoftExample mixup_pair(const SoftExample& a, const SoftExample& b, double lambda);

enum class LossKind : std::uint8_t {
  SoftmaxCrossEntropy,
  SigmoidBinaryCrossEntropy,
  KLSoftLabel,
};

struct Example {
  const FeatureVector* features = nullptr;
  std::vector<double> target;  // n_classes values
};

// Mean loss over the batch; fills `grad` (same shape as params) with the
// mean gradient. The gradient of both softmax losses over logits is q - y.
double batch_loss_and_grad(const LinearModelParams& params,
                           std::span<const Example> batch, LossKind kind,
                           LinearModelParams& grad);

struct TrainConfig {
  Head head = Head::Softmax4;
  double initial_lr = 1e-5;
  double lr_decay_factor = 0.8;
  int plateau_epochs_for_decay = 2;
  int max_epochs = 30;
  int early_stop_patience = 10;
  std::uint64_t seed = 0;
  double mixup_alpha = 1.0;  // Beta(alpha, alpha); 0 disables mixing (lambda = 1)
  int batch_size = 32;
  FeatureConfig features;
  ConversionConfig conversion;  // used when scoring dev predictions

  static TrainConfig defaults_for(Head head);
  void validate() const;
};

struct TrainItem {
  FeatureVector features;
  FourWayLabel fourway = FourWayLabel::Entailment;
  LabelSet multilabel;
  LabelDistribution soft;
};

TrainItem make_train_item(const LabeledItem& li, const FeatureConfig& config);

struct EpochStats {
  int epoch = 0;  // 1-based
  double lr = 0.0;
  double train_loss = 0.0;
  double dev_f1 = 0.0;  // macro F1, percent
};

struct TrainResult {
  LinearModelParams params;  // from the best-dev epoch
  std::vector<EpochStats> history;
  int best_epoch = 0;
  double best_dev_f1 = 0.0;
};

// Mini-batch gradient descent with dev-F1 plateau decay and early stopping.
// Bit-deterministic for a fixed (seed, config, item order).
TrainResult train(std::span<const TrainItem> train_items,
                  std::span<const TrainItem> dev_items, const TrainConfig& cfg);

struct ModelOutput {
  Head head = Head::Softmax4;
  // Per item: 4 softmax probs / 3 sigmoid probs / 3 softmax probs.
  std::vector<std::vector<double>> probs;
};

ModelOutput predict(const LinearModelParams& params,
                    std::span<const FeatureVector> features, Head head);

// Macro F1 (percent) of model outputs against gold, per head. Label
// conversions follow the standard chain (argmax for 4-way, thresholds for
// the two 3-logit heads).
double dev_macro_f1(const ModelOutput& output, std::span<const TrainItem> gold,
                    const ConversionConfig& conversion);

// Versioned text serialization with an embedded config hash; weights are
// written as hexfloats so reloading is bit-exact.
void save_model(std::ostream& out, const LinearModelParams& params, Head head,
                std::uint64_t config_hash);
struct LoadedModel {
  LinearModelParams params;
  Head head = Head::Softmax4;
  std::uint64_t config_hash = 0;
};
LoadedModel load_model(std::istream& in);

std::uint64_t config_hash(const TrainConfig& cfg);

std::string history_to_csv(std::span<const EpochStats> history);

}  // namespace nlid
