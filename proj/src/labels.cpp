#include "nlid/labels.hpp"

#include <cmath>
#include <stdexcept>

namespace nlid {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

}  // namespace

char nli_code(NLILabel label) {
  switch (label) {
    case NLILabel::Entailment: return 'e';
    case NLILabel::Neutral: return 'n';
    case NLILabel::Contradiction: return 'c';
  }
  fail("invalid NLILabel");
}

std::string_view nli_name(NLILabel label) {
  switch (label) {
    case NLILabel::Entailment: return "E";
    case NLILabel::Neutral: return "N";
    case NLILabel::Contradiction: return "C";
  }
  fail("invalid NLILabel");
}

NLILabel nli_from_code(char code) {
  switch (code) {
    case 'e': case 'E': return NLILabel::Entailment;
    case 'n': case 'N': return NLILabel::Neutral;
    case 'c': case 'C': return NLILabel::Contradiction;
  }
  fail(std::string("unknown NLI label code '") + code + "'");
}

NLILabel nli_from_word(std::string_view word) {
  if (word == "entailment") return NLILabel::Entailment;
  if (word == "neutral") return NLILabel::Neutral;
  if (word == "contradiction") return NLILabel::Contradiction;
  fail("unknown NLI label '" + std::string(word) + "'");
}

std::string_view fourway_name(FourWayLabel label) {
  switch (label) {
    case FourWayLabel::Entailment: return "E";
    case FourWayLabel::Neutral: return "N";
    case FourWayLabel::Contradiction: return "C";
    case FourWayLabel::Complicated: return "Complicated";
  }
  fail("invalid FourWayLabel");
}

FourWayLabel fourway_from_name(std::string_view name) {
  if (name == "E") return FourWayLabel::Entailment;
  if (name == "N") return FourWayLabel::Neutral;
  if (name == "C") return FourWayLabel::Contradiction;
  if (name == "Complicated") return FourWayLabel::Complicated;
  fail("unknown 4-way label '" + std::string(name) + "'");
}

FourWayLabel fourway_of(NLILabel label) {
  return static_cast<FourWayLabel>(static_cast<std::uint8_t>(label));
}

int LabelSet::size() const {
  int n = 0;
  for (NLILabel l : kNLILabels)
    if (contains(l)) ++n;
  return n;
}

LabelSet LabelSet::from_mask(std::uint8_t mask) {
  if (mask > 7) fail("label set mask out of range");
  LabelSet s;
  s.mask_ = mask;
  return s;
}

std::string LabelSet::to_string() const {
  std::string out;
  for (NLILabel l : kNLILabels)
    if (contains(l)) out += nli_name(l);
  return out;
}

LabelSet LabelSet::parse(std::string_view text) {
  if (text.empty()) fail("empty label set");
  LabelSet s;
  for (char ch : text) {
    NLILabel l = nli_from_code(ch);
    if (s.contains(l)) fail("duplicate label in set '" + std::string(text) + "'");
    s.insert(l);
  }
  return s;
}

int combination_index(LabelSet set) {
  for (int i = 0; i < 7; ++i)
    if (kCombinationMasks[i] == set.mask()) return i;
  fail("empty label set has no combination index");
}

int AnnotationCounts::count(NLILabel label) const {
  switch (label) {
    case NLILabel::Entailment: return e;
    case NLILabel::Neutral: return n;
    case NLILabel::Contradiction: return c;
  }
  fail("invalid NLILabel");
}

double LabelDistribution::prob(NLILabel label) const {
  switch (label) {
    case NLILabel::Entailment: return e;
    case NLILabel::Neutral: return n;
    case NLILabel::Contradiction: return c;
  }
  fail("invalid NLILabel");
}

void LabelDistribution::validate() const {
  for (double p : {e, n, c})
    if (!(p >= 0.0 && p <= 1.0)) fail("distribution component outside [0,1]");
  if (std::abs(e + n + c - 1.0) > 1e-9) fail("distribution does not sum to 1");
}

void ConversionConfig::validate() const {
  if (!(dist_threshold > 0.0 && dist_threshold <= 1.0 / 3.0))
    fail("dist_threshold must be in (0, 1/3]");
  if (!(sigmoid_threshold > 0.0 && sigmoid_threshold < 1.0))
    fail("sigmoid_threshold must be in (0, 1)");
  if (empty_set_fallback != "argmax")
    fail("unknown empty_set_fallback rule '" + empty_set_fallback + "'");
}

LabelDistribution counts_to_distribution(const AnnotationCounts& counts) {
  const int total = counts.total();
  if (counts.e < 0 || counts.n < 0 || counts.c < 0) fail("negative annotation count");
  if (total <= 0) fail("annotation counts sum to zero");
  const double t = static_cast<double>(total);
  return LabelDistribution{counts.e / t, counts.n / t, counts.c / t};
}

LabelSet distribution_to_multilabel(const LabelDistribution& dist,
                                    const ConversionConfig& cfg) {
  dist.validate();
  cfg.validate();
  LabelSet out;
  for (NLILabel l : kNLILabels)
    if (dist.prob(l) >= cfg.dist_threshold) out.insert(l);
  return out;  // nonempty: max(p) >= 1/3 >= dist_threshold
}

FourWayLabel multilabel_to_fourway(LabelSet labels) {
  const int n = labels.size();
  if (n == 0) fail("cannot map empty label set to a 4-way label");
  if (n >= 2) return FourWayLabel::Complicated;
  for (NLILabel l : kNLILabels)
    if (labels.contains(l)) return fourway_of(l);
  fail("unreachable");
}

LabelSet sigmoid_probs_to_multilabel(const std::array<double, 3>& probs,
                                     const ConversionConfig& cfg) {
  cfg.validate();
  for (double p : probs)
    if (!(p >= 0.0 && p <= 1.0)) fail("per-label probability outside [0,1]");
  LabelSet out;
  for (NLILabel l : kNLILabels)
    if (probs[static_cast<std::size_t>(l)] > cfg.sigmoid_threshold) out.insert(l);
  if (out.empty()) {
    NLILabel best = NLILabel::Entailment;
    for (NLILabel l : kNLILabels)
      if (probs[static_cast<std::size_t>(l)] > probs[static_cast<std::size_t>(best)])
        best = l;
    out.insert(best);
  }
  return out;
}

double entropy(const LabelDistribution& dist, double log_base) {
  dist.validate();
  if (!(log_base > 1.0)) fail("entropy log base must be > 1");
  double h = 0.0;
  for (NLILabel l : kNLILabels) {
    const double p = dist.prob(l);
    if (p > 0.0) h -= p * std::log(p);
  }
  return h / std::log(log_base);
}

MajorityResult majority(const AnnotationCounts& counts) {
  if (counts.total() <= 0) fail("annotation counts sum to zero");
  NLILabel best = NLILabel::Entailment;
  for (NLILabel l : kNLILabels)
    if (counts.count(l) > counts.count(best)) best = l;
  bool tie = false;
  for (NLILabel l : kNLILabels)
    if (l != best && counts.count(l) == counts.count(best)) tie = true;
  return MajorityResult{best, counts.count(best), tie};
}

FourWayLabel fourway_argmax(std::span<const double> probs) {
  if (probs.size() != 4) fail("fourway_argmax expects 4 probabilities");
  std::size_t best = 0;
  for (std::size_t i = 1; i < 4; ++i)
    if (probs[i] > probs[best]) best = i;
  return static_cast<FourWayLabel>(best);
}

}  // namespace nlid
