#include "nlid/baseline.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "nlid/metrics.hpp"
#include "nlid/rng.hpp"

namespace nlid {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

std::uint64_t fnv1a(std::string_view text, std::uint64_t h = 1469598103934665603ull) {
  for (unsigned char byte : text) {
    h ^= byte;
    h *= 1099511628211ull;
  }
  return h;
}

const std::set<std::string>& negation_markers() {
  static const std::set<std::string> markers = {
      "no",     "not",    "never", "none",   "nothing", "nobody",
      "nowhere", "neither", "nor",  "cannot", "without",
  };
  return markers;
}

bool has_negation(const std::vector<std::string>& tokens) {
  for (const std::string& tok : tokens)
    if (negation_markers().count(tok)) return true;
  return false;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    const auto uc = static_cast<unsigned char>(ch);
    if (std::isalnum(uc)) {
      current.push_back(static_cast<char>(std::tolower(uc)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

FeatureVector extract_features(std::string_view premise, std::string_view hypothesis,
                               const FeatureConfig& config) {
  if (hypothesis.find_first_not_of(" \t\r\n") == std::string_view::npos)
    fail("empty hypothesis");
  if (config.hash_dim <= 0) fail("hash_dim must be positive");

  const std::vector<std::string> prem_tokens = tokenize(premise);
  const std::vector<std::string> hyp_tokens = tokenize(hypothesis);
  const std::set<std::string> prem_set(prem_tokens.begin(), prem_tokens.end());
  const std::set<std::string> hyp_set(hyp_tokens.begin(), hyp_tokens.end());

  FeatureVector fv;
  fv.hash_dim = config.hash_dim;

  long shared = 0;
  for (const std::string& tok : hyp_set)
    if (prem_set.count(tok)) ++shared;
  const long uni = static_cast<long>(prem_set.size() + hyp_set.size()) - shared;
  fv.dense[0] = uni > 0 ? static_cast<double>(shared) / static_cast<double>(uni) : 0.0;
  fv.dense[1] = hyp_set.empty()
                    ? 0.0
                    : static_cast<double>(static_cast<long>(hyp_set.size()) - shared) /
                          static_cast<double>(hyp_set.size());
  fv.dense[2] = prem_set.empty()
                    ? 0.0
                    : static_cast<double>(static_cast<long>(prem_set.size()) - shared) /
                          static_cast<double>(prem_set.size());
  const double ratio = prem_tokens.empty()
                           ? 4.0
                           : static_cast<double>(hyp_tokens.size()) /
                                 static_cast<double>(prem_tokens.size());
  fv.dense[3] = std::clamp(ratio, 0.0, 4.0);
  fv.dense[4] = has_negation(prem_tokens) != has_negation(hyp_tokens) ? 1.0 : 0.0;
  std::string_view trimmed = hypothesis;
  while (!trimmed.empty() &&
         std::isspace(static_cast<unsigned char>(trimmed.back())))
    trimmed.remove_suffix(1);
  fv.dense[5] = !trimmed.empty() && trimmed.back() == '?' ? 1.0 : 0.0;
  fv.dense[6] = 1.0;  // bias

  std::map<int, double> slots;
  const auto dim = static_cast<std::uint64_t>(config.hash_dim);
  auto put = [&](const std::string& key) {
    slots[static_cast<int>(fnv1a(key) % dim)] += 1.0;
  };
  for (const std::string& tok : prem_set) put("p:" + tok);
  for (const std::string& tok : hyp_set) put("h:" + tok);
  for (const std::string& p : prem_set)
    for (const std::string& h : hyp_set) put("x:" + p + "|" + h);

  fv.hashed.assign(slots.begin(), slots.end());
  return fv;
}

std::string_view head_name(Head head) {
  switch (head) {
    case Head::Softmax4: return "softmax4";
    case Head::Sigmoid3: return "sigmoid3";
    case Head::MixupSoftmax3: return "mixup-softmax3";
  }
  fail("invalid Head");
}

Head head_from_name(std::string_view name) {
  if (name == "softmax4") return Head::Softmax4;
  if (name == "sigmoid3") return Head::Sigmoid3;
  if (name == "mixup-softmax3" || name == "mixup") return Head::MixupSoftmax3;
  fail("unknown head '" + std::string(name) + "'");
}

int head_classes(Head head) { return head == Head::Softmax4 ? 4 : 3; }

LinearModelParams LinearModelParams::zeros(int n_classes, int hash_dim) {
  LinearModelParams params;
  params.n_classes = n_classes;
  params.hash_dim = hash_dim;
  params.weights.assign(static_cast<std::size_t>(n_classes) *
                            static_cast<std::size_t>(params.dim()),
                        0.0);
  params.bias.assign(static_cast<std::size_t>(n_classes), 0.0);
  return params;
}

std::vector<double> logits(const LinearModelParams& params, const FeatureVector& fv) {
  if (fv.hash_dim != params.hash_dim)
    fail("feature hash_dim " + std::to_string(fv.hash_dim) +
         " does not match model hash_dim " + std::to_string(params.hash_dim));
  std::vector<double> out(static_cast<std::size_t>(params.n_classes));
  const auto dim = static_cast<std::size_t>(params.dim());
  for (int k = 0; k < params.n_classes; ++k) {
    const double* row = params.weights.data() + static_cast<std::size_t>(k) * dim;
    double z = params.bias[static_cast<std::size_t>(k)];
    for (int d = 0; d < kDenseFeatureDim; ++d)
      z += row[d] * fv.dense[static_cast<std::size_t>(d)];
    for (const auto& [idx, value] : fv.hashed)
      z += row[kDenseFeatureDim + idx] * value;
    out[static_cast<std::size_t>(k)] = z;
  }
  return out;
}

namespace {

std::vector<double> softmax(std::vector<double> z) {
  const double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - zmax);
    sum += v;
  }
  for (double& v : z) v /= sum;
  return z;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

std::vector<double> softmax_forward(const LinearModelParams& params,
                                    const FeatureVector& fv) {
  return softmax(logits(params, fv));
}

std::array<double, 3> sigmoid_forward(const LinearModelParams& params,
                                      const FeatureVector& fv) {
  if (params.n_classes != 3) fail("sigmoid_forward expects a 3-class model");
  const std::vector<double> z = logits(params, fv);
  return {sigmoid(z[0]), sigmoid(z[1]), sigmoid(z[2])};
}

double kl_divergence(const LabelDistribution& p, const LabelDistribution& q) {
  p.validate();
  double sum = 0.0;
  for (NLILabel l : kNLILabels) {
    const double pi = p.prob(l);
    if (pi <= 0.0) continue;
    const double qi = std::clamp(q.prob(l), 1e-12, 1.0);
    sum += pi * std::log(pi / qi);
  }
  return sum;
}

SoftExample mixup_pair(const SoftExample& a, const SoftExample& b, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) fail("mixup lambda outside [0,1]");
  if (a.features.hash_dim != b.features.hash_dim)
    fail("mixup features have different hash dimensions");
  SoftExample out;
  out.features.hash_dim = a.features.hash_dim;
  for (int d = 0; d < kDenseFeatureDim; ++d)
    out.features.dense[static_cast<std::size_t>(d)] =
        lambda * a.features.dense[static_cast<std::size_t>(d)] +
        (1.0 - lambda) * b.features.dense[static_cast<std::size_t>(d)];

  // Merge the sorted sparse blocks.
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.features.hashed.size() || j < b.features.hashed.size()) {
    if (j >= b.features.hashed.size() ||
        (i < a.features.hashed.size() &&
         a.features.hashed[i].first < b.features.hashed[j].first)) {
      out.features.hashed.emplace_back(a.features.hashed[i].first,
                                       lambda * a.features.hashed[i].second);
      ++i;
    } else if (i >= a.features.hashed.size() ||
               b.features.hashed[j].first < a.features.hashed[i].first) {
      out.features.hashed.emplace_back(b.features.hashed[j].first,
                                       (1.0 - lambda) * b.features.hashed[j].second);
      ++j;
    } else {
      out.features.hashed.emplace_back(
          a.features.hashed[i].first,
          lambda * a.features.hashed[i].second +
              (1.0 - lambda) * b.features.hashed[j].second);
      ++i;
      ++j;
    }
  }

  out.soft = LabelDistribution{lambda * a.soft.e + (1.0 - lambda) * b.soft.e,
                               lambda * a.soft.n + (1.0 - lambda) * b.soft.n,
                               lambda * a.soft.c + (1.0 - lambda) * b.soft.c};
  return out;
}

double batch_loss_and_grad(const LinearModelParams& params,
                           std::span<const Example> batch, LossKind kind,
                           LinearModelParams& grad) {
  if (batch.empty()) fail("empty batch");
  grad = LinearModelParams::zeros(params.n_classes, params.hash_dim);

  const double scale = 1.0 / static_cast<double>(batch.size());
  const auto dim = static_cast<std::size_t>(params.dim());
  double loss = 0.0;
  for (const Example& ex : batch) {
    if (static_cast<int>(ex.target.size()) != params.n_classes)
      fail("target size does not match model classes");
    const std::vector<double> z = logits(params, *ex.features);
    std::vector<double> delta(static_cast<std::size_t>(params.n_classes));

    if (kind == LossKind::SigmoidBinaryCrossEntropy) {
      for (int k = 0; k < params.n_classes; ++k) {
        const auto ki = static_cast<std::size_t>(k);
        const double q = sigmoid(z[ki]);
        const double y = ex.target[ki];
        const double qc = std::clamp(q, 1e-12, 1.0 - 1e-12);
        loss -= scale * (y * std::log(qc) + (1.0 - y) * std::log(1.0 - qc));
        delta[ki] = q - y;
      }
    } else {
      const std::vector<double> q = softmax(z);
      for (int k = 0; k < params.n_classes; ++k) {
        const auto ki = static_cast<std::size_t>(k);
        const double y = ex.target[ki];
        const double qc = std::clamp(q[ki], 1e-12, 1.0);
        if (kind == LossKind::SoftmaxCrossEntropy) {
          if (y > 0.0) loss -= scale * y * std::log(qc);
        } else {  // KLSoftLabel
          if (y > 0.0) loss += scale * y * std::log(y / qc);
        }
        delta[ki] = q[ki] - y;
      }
    }

    for (int k = 0; k < params.n_classes; ++k) {
      const auto ki = static_cast<std::size_t>(k);
      const double dk = delta[ki] * scale;
      if (dk == 0.0) continue;
      double* row = grad.weights.data() + ki * dim;
      for (int d = 0; d < kDenseFeatureDim; ++d)
        row[d] += dk * ex.features->dense[static_cast<std::size_t>(d)];
      for (const auto& [idx, value] : ex.features->hashed)
        row[kDenseFeatureDim + idx] += dk * value;
      grad.bias[ki] += dk;
    }
  }
  return loss;
}

TrainConfig TrainConfig::defaults_for(Head head) {
  TrainConfig cfg;
  cfg.head = head;
  switch (head) {
    case Head::Softmax4:
      cfg.initial_lr = 1e-5;
      cfg.plateau_epochs_for_decay = 2;
      cfg.early_stop_patience = 10;
      break;
    case Head::Sigmoid3:
      cfg.initial_lr = 5e-6;
      cfg.plateau_epochs_for_decay = 1;
      cfg.early_stop_patience = 10;
      break;
    case Head::MixupSoftmax3:
      cfg.initial_lr = 1e-6;
      cfg.plateau_epochs_for_decay = 2;
      cfg.early_stop_patience = 5;
      break;
  }
  return cfg;
}

void TrainConfig::validate() const {
  if (!(lr_decay_factor > 0.0 && lr_decay_factor < 1.0))
    fail("lr_decay_factor must be in (0,1)");
  if (plateau_epochs_for_decay <= 0) fail("plateau_epochs_for_decay must be positive");
  if (early_stop_patience < plateau_epochs_for_decay)
    fail("early_stop_patience must be at least plateau_epochs_for_decay");
  if (max_epochs <= 0) fail("max_epochs must be positive");
  if (batch_size <= 0) fail("batch_size must be positive");
  if (!(initial_lr > 0.0)) fail("initial_lr must be positive");
  if (mixup_alpha < 0.0) fail("mixup_alpha must be non-negative");
  conversion.validate();
}

TrainItem make_train_item(const LabeledItem& li, const FeatureConfig& config) {
  TrainItem item;
  item.features = extract_features(li.item.premise, li.item.hypothesis, config);
  item.fourway = li.labels.fourway;
  item.multilabel = li.labels.multilabel;
  item.soft = counts_to_distribution(li.item.counts);
  return item;
}

ModelOutput predict(const LinearModelParams& params,
                    std::span<const FeatureVector> features, Head head) {
  ModelOutput out;
  out.head = head;
  out.probs.reserve(features.size());
  for (const FeatureVector& fv : features) {
    if (head == Head::Sigmoid3) {
      const auto probs = sigmoid_forward(params, fv);
      out.probs.push_back({probs[0], probs[1], probs[2]});
    } else {
      out.probs.push_back(softmax_forward(params, fv));
    }
  }
  return out;
}

double dev_macro_f1(const ModelOutput& output, std::span<const TrainItem> gold,
                    const ConversionConfig& conversion) {
  if (output.probs.size() != gold.size())
    fail("prediction and gold sizes differ");
  if (output.head == Head::Softmax4) {
    std::vector<FourWayLabel> g;
    std::vector<FourWayLabel> p;
    g.reserve(gold.size());
    p.reserve(gold.size());
    for (std::size_t i = 0; i < gold.size(); ++i) {
      g.push_back(gold[i].fourway);
      p.push_back(fourway_argmax(output.probs[i]));
    }
    return fourway_report(g, p).macro_f1;
  }
  std::vector<LabelSet> g;
  std::vector<LabelSet> p;
  g.reserve(gold.size());
  p.reserve(gold.size());
  for (std::size_t i = 0; i < gold.size(); ++i) {
    g.push_back(gold[i].multilabel);
    const auto& probs = output.probs[i];
    if (output.head == Head::Sigmoid3) {
      p.push_back(sigmoid_probs_to_multilabel({probs[0], probs[1], probs[2]}, conversion));
    } else {
      const LabelDistribution dist{probs[0], probs[1], probs[2]};
      p.push_back(distribution_to_multilabel(dist, conversion));
    }
  }
  return multilabel_report(g, p).macro_f1;
}

namespace {

std::vector<double> target_for(const TrainItem& item, Head head) {
  if (head == Head::Softmax4) {
    std::vector<double> y(4, 0.0);
    y[static_cast<std::size_t>(item.fourway)] = 1.0;
    return y;
  }
  if (head == Head::Sigmoid3) {
    std::vector<double> y(3, 0.0);
    for (NLILabel l : kNLILabels)
      if (item.multilabel.contains(l)) y[static_cast<std::size_t>(l)] = 1.0;
    return y;
  }
  return {item.soft.e, item.soft.n, item.soft.c};
}

LossKind loss_for(Head head) {
  switch (head) {
    case Head::Softmax4: return LossKind::SoftmaxCrossEntropy;
    case Head::Sigmoid3: return LossKind::SigmoidBinaryCrossEntropy;
    case Head::MixupSoftmax3: return LossKind::KLSoftLabel;
  }
  fail("invalid Head");
}

}  // namespace

TrainResult train(std::span<const TrainItem> train_items,
                  std::span<const TrainItem> dev_items, const TrainConfig& cfg) {
  cfg.validate();
  if (train_items.empty() || dev_items.empty()) fail("empty train or dev set");
  const int n_classes = head_classes(cfg.head);
  const int hash_dim = train_items.front().features.hash_dim;
  for (const TrainItem& item : train_items)
    if (item.features.hash_dim != hash_dim) fail("inconsistent feature dimensions");

  LinearModelParams params = LinearModelParams::zeros(n_classes, hash_dim);
  LinearModelParams grad = LinearModelParams::zeros(n_classes, hash_dim);

  std::vector<FeatureVector> dev_features;
  dev_features.reserve(dev_items.size());
  for (const TrainItem& item : dev_items) dev_features.push_back(item.features);

  const LossKind loss_kind = loss_for(cfg.head);
  const bool mixing = cfg.head == Head::MixupSoftmax3 && cfg.mixup_alpha > 0.0;

  TrainResult result;
  Rng rng(cfg.seed);
  double lr = cfg.initial_lr;
  double best_f1 = -1.0;
  int epochs_since_improve = 0;
  const std::size_t n = train_items.size();

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    rng.shuffle(order);

    // Mixed examples own their features; plain examples point at the items.
    std::vector<SoftExample> mixed;
    if (mixing) {
      mixed.reserve(n);
      for (std::size_t i = 0; i < n; ++i) {
        const TrainItem& a = train_items[order[i]];
        const TrainItem& b = train_items[rng.bounded(n)];
        const double lambda = rng.beta(cfg.mixup_alpha, cfg.mixup_alpha);
        mixed.push_back(mixup_pair(SoftExample{a.features, a.soft},
                                   SoftExample{b.features, b.soft}, lambda));
      }
    }

    double epoch_loss = 0.0;
    long n_batches = 0;
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop = std::min(n, start + static_cast<std::size_t>(cfg.batch_size));
      std::vector<Example> batch;
      batch.reserve(stop - start);
      for (std::size_t i = start; i < stop; ++i) {
        Example ex;
        if (mixing) {
          ex.features = &mixed[i].features;
          ex.target = {mixed[i].soft.e, mixed[i].soft.n, mixed[i].soft.c};
        } else {
          const TrainItem& item = train_items[order[i]];
          ex.features = &item.features;
          ex.target = target_for(item, cfg.head);
        }
        batch.push_back(std::move(ex));
      }
      const double loss = batch_loss_and_grad(params, batch, loss_kind, grad);
      if (!std::isfinite(loss))
        throw std::runtime_error("non-finite training loss at epoch " +
                                 std::to_string(epoch));
      epoch_loss += loss;
      ++n_batches;
      for (std::size_t w = 0; w < params.weights.size(); ++w)
        params.weights[w] -= lr * grad.weights[w];
      for (std::size_t bidx = 0; bidx < params.bias.size(); ++bidx)
        params.bias[bidx] -= lr * grad.bias[bidx];
    }

    const ModelOutput dev_out = predict(params, dev_features, cfg.head);
    const double f1 = dev_macro_f1(dev_out, dev_items, cfg.conversion);
    result.history.push_back(EpochStats{epoch, lr,
                                        epoch_loss / static_cast<double>(n_batches), f1});

    if (f1 > best_f1) {
      best_f1 = f1;
      result.params = params;
      result.best_epoch = epoch;
      result.best_dev_f1 = f1;
      epochs_since_improve = 0;
    } else {
      ++epochs_since_improve;
      if (epochs_since_improve % cfg.plateau_epochs_for_decay == 0)
        lr *= cfg.lr_decay_factor;
      if (epochs_since_improve >= cfg.early_stop_patience) break;
    }
  }
  return result;
}

void save_model(std::ostream& out, const LinearModelParams& params, Head head,
                std::uint64_t hash) {
  out << "nlid-model v1\n";
  out << "head " << head_name(head) << "\n";
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%016llx",
                static_cast<unsigned long long>(hash));
  out << "config_hash " << buffer << "\n";
  out << "n_classes " << params.n_classes << "\n";
  out << "dense_dim " << params.dense_dim << "\n";
  out << "hash_dim " << params.hash_dim << "\n";
  auto write_row = [&](const double* row, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) {
      std::snprintf(buffer, sizeof(buffer), "%a", row[i]);
      out << (i ? " " : "") << buffer;
    }
    out << "\n";
  };
  out << "bias\n";
  write_row(params.bias.data(), params.bias.size());
  out << "weights\n";
  const auto dim = static_cast<std::size_t>(params.dim());
  for (int k = 0; k < params.n_classes; ++k)
    write_row(params.weights.data() + static_cast<std::size_t>(k) * dim, dim);
}

namespace {

std::string expect_line(std::istream& in, const std::string& what) {
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("model file truncated: expected " + what);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

std::vector<double> parse_row(const std::string& line, std::size_t expected) {
  std::istringstream is(line);
  std::vector<double> out;
  out.reserve(expected);
  std::string token;
  while (is >> token) out.push_back(std::strtod(token.c_str(), nullptr));
  if (out.size() != expected)
    throw std::runtime_error("model row has " + std::to_string(out.size()) +
                             " values, expected " + std::to_string(expected));
  return out;
}

std::string field(const std::string& line, const std::string& key) {
  if (line.rfind(key + " ", 0) != 0)
    throw std::runtime_error("model file: expected '" + key + "', got '" + line + "'");
  return line.substr(key.size() + 1);
}

}  // namespace

LoadedModel load_model(std::istream& in) {
  if (expect_line(in, "header") != "nlid-model v1")
    throw std::runtime_error("not a nlid-model v1 file");
  LoadedModel model;
  model.head = head_from_name(field(expect_line(in, "head"), "head"));
  model.config_hash = std::stoull(field(expect_line(in, "config_hash"), "config_hash"),
                                  nullptr, 16);
  const int n_classes = std::stoi(field(expect_line(in, "n_classes"), "n_classes"));
  const int dense_dim = std::stoi(field(expect_line(in, "dense_dim"), "dense_dim"));
  const int hash_dim = std::stoi(field(expect_line(in, "hash_dim"), "hash_dim"));
  if (dense_dim != kDenseFeatureDim)
    throw std::runtime_error("unsupported dense_dim " + std::to_string(dense_dim));
  if (n_classes != head_classes(model.head))
    throw std::runtime_error("n_classes does not match head");
  model.params = LinearModelParams::zeros(n_classes, hash_dim);
  if (expect_line(in, "bias") != "bias")
    throw std::runtime_error("model file: expected 'bias'");
  model.params.bias = parse_row(expect_line(in, "bias row"),
                                static_cast<std::size_t>(n_classes));
  if (expect_line(in, "weights") != "weights")
    throw std::runtime_error("model file: expected 'weights'");
  const auto dim = static_cast<std::size_t>(model.params.dim());
  for (int k = 0; k < n_classes; ++k) {
    const std::vector<double> row = parse_row(expect_line(in, "weight row"), dim);
    std::copy(row.begin(), row.end(),
              model.params.weights.begin() + static_cast<std::size_t>(k) * dim);
  }
  return model;
}

std::uint64_t config_hash(const TrainConfig& cfg) {
  std::ostringstream os;
  os << head_name(cfg.head) << '|' << cfg.initial_lr << '|' << cfg.lr_decay_factor
     << '|' << cfg.plateau_epochs_for_decay << '|' << cfg.max_epochs << '|'
     << cfg.early_stop_patience << '|' << cfg.seed << '|' << cfg.mixup_alpha << '|'
     << cfg.batch_size << '|' << cfg.features.hash_dim << '|'
     << cfg.conversion.dist_threshold << '|' << cfg.conversion.sigmoid_threshold;
  return fnv1a(os.str());
}

std::string history_to_csv(std::span<const EpochStats> history) {
  std::ostringstream os;
  os << "epoch,lr,train_loss,dev_f1\n";
  char buffer[128];
  for (const EpochStats& row : history) {
    std::snprintf(buffer, sizeof(buffer), "%d,%.10g,%.10g,%.10g", row.epoch, row.lr,
                  row.train_loss, row.dev_f1);
    os << buffer << "\n";
  }
  return os.str();
}

}  // namespace nlid
