#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>

namespace nlid {

// The three NLI labels in canonical order E < N < C. Every positional
// vector in the toolkit (counts, distributions, per-label probabilities)
// follows this order.
enum class NLILabel : std::uint8_t {
  Entailment = 0,
  Neutral = 1,
  Contradiction = 2,
};

inline constexpr std::array<NLILabel, 3> kNLILabels = {
    NLILabel::Entailment, NLILabel::Neutral, NLILabel::Contradiction};

char nli_code(NLILabel label);              // 'e' / 'n' / 'c'
std::string_view nli_name(NLILabel label);  // "E" / "N" / "C"
NLILabel nli_from_code(char code);
NLILabel nli_from_word(std::string_view word);  // "entailment", "neutral", ...

enum class FourWayLabel : std::uint8_t {
  Entailment = 0,
  Neutral = 1,
  Contradiction = 2,
  Complicated = 3,
};

inline constexpr std::array<FourWayLabel, 4> kFourWayLabels = {
    FourWayLabel::Entailment, FourWayLabel::Neutral,
    FourWayLabel::Contradiction, FourWayLabel::Complicated};

std::string_view fourway_name(FourWayLabel label);  // "E","N","C","Complicated"
FourWayLabel fourway_from_name(std::string_view name);
FourWayLabel fourway_of(NLILabel label);

// Subset of the three NLI labels. Membership is order-insensitive; the
// serialized form always uses canonical order ("EN", "NC", "ENC", ...).
class LabelSet {
 public:
  LabelSet() = default;
  LabelSet(std::initializer_list<NLILabel> labels) {
    for (NLILabel l : labels) insert(l);
  }

  void insert(NLILabel label) { mask_ |= bit(label); }
  void erase(NLILabel label) { mask_ &= static_cast<std::uint8_t>(~bit(label)); }
  bool contains(NLILabel label) const { return (mask_ & bit(label)) != 0; }
  int size() const;
  bool empty() const { return mask_ == 0; }

  std::uint8_t mask() const { return mask_; }
  static LabelSet from_mask(std::uint8_t mask);

  std::string to_string() const;
  // Accepts any permutation of unique E/N/C characters; rejects anything else.
  static LabelSet parse(std::string_view text);

  friend bool operator==(LabelSet a, LabelSet b) { return a.mask_ == b.mask_; }
  friend bool operator!=(LabelSet a, LabelSet b) { return a.mask_ != b.mask_; }
  friend bool operator<(LabelSet a, LabelSet b) { return a.mask_ < b.mask_; }

 private:
  static std::uint8_t bit(NLILabel label) {
    return static_cast<std::uint8_t>(1u << static_cast<unsigned>(label));
  }
  std::uint8_t mask_ = 0;
};

// The seven nonempty label combinations in table order: E,N,C,EN,NC,EC,ENC.
inline constexpr std::array<std::uint8_t, 7> kCombinationMasks = {1, 2, 4, 3, 6, 5, 7};
int combination_index(LabelSet set);  // position in kCombinationMasks, throws on empty

// Per-item vote counts over the three labels.
struct AnnotationCounts {
  int e = 0;
  int n = 0;
  int c = 0;

  int total() const { return e + n + c; }
  int count(NLILabel label) const;
};

struct LabelDistribution {
  double e = 0.0;
  double n = 0.0;
  double c = 0.0;

  double prob(NLILabel label) const;
  // Each component in [0,1], sum within 1e-9 of 1. Throws otherwise.
  void validate() const;
};

struct ConversionConfig {
  double dist_threshold = 0.2;     // inclusive: a label is present if p >= threshold
  double sigmoid_threshold = 0.5;  // strict: present if p > threshold
  std::string empty_set_fallback = "argmax";

  // dist_threshold in (0, 1/3] so conversions of valid distributions are
  // never empty; sigmoid_threshold in (0, 1). Throws otherwise.
  void validate() const;
};

struct MajorityResult {
  NLILabel label;
  int votes;
  bool tie;  // another label has the same count; `label` is the canonical-first one
};

LabelDistribution counts_to_distribution(const AnnotationCounts& counts);
LabelSet distribution_to_multilabel(const LabelDistribution& dist,
                                    const ConversionConfig& cfg = {});
FourWayLabel multilabel_to_fourway(LabelSet labels);
LabelSet sigmoid_probs_to_multilabel(const std::array<double, 3>& probs,
                                     const ConversionConfig& cfg = {});
double entropy(const LabelDistribution& dist, double log_base = 2.0);
MajorityResult majority(const AnnotationCounts& counts);

// Argmax over a 4-way probability vector, ties broken E < N < C < Complicated.
FourWayLabel fourway_argmax(std::span<const double> probs);

}  // namespace nlid
