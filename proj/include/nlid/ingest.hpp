#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "nlid/labels.hpp"

namespace nlid {

enum class Source : std::uint8_t { Chaos100, MNLI5 };

int expected_total(Source source);  // 100 / 5
std::string_view source_name(Source source);  // "chaos100" / "mnli5"
Source source_from_name(std::string_view name);

struct ItemRecord {
  std::string uid;
  std::string premise;
  std::string hypothesis;
  std::optional<std::string> genre;
  AnnotationCounts counts;
  Source source = Source::Chaos100;
  std::optional<std::string> original_gold;  // MNLI "gold_label", may be "-"
};

// The ten disagreement categories, each under one of three high-level classes.
enum class TaxonomyCategory : std::uint8_t {
  Lexical = 0,
  Implicature,
  Presupposition,
  ProbabilisticEnrichment,
  Imperfection,
  Coreference,
  TemporalReference,
  InterrogativeHypothesis,
  AccommodatingMinimallyAddedContent,
  HighOverlap,
};

inline constexpr int kNumTaxonomyCategories = 10;

inline constexpr std::array<TaxonomyCategory, 10> kTaxonomyCategories = {
    TaxonomyCategory::Lexical,
    TaxonomyCategory::Implicature,
    TaxonomyCategory::Presupposition,
    TaxonomyCategory::ProbabilisticEnrichment,
    TaxonomyCategory::Imperfection,
    TaxonomyCategory::Coreference,
    TaxonomyCategory::TemporalReference,
    TaxonomyCategory::InterrogativeHypothesis,
    TaxonomyCategory::AccommodatingMinimallyAddedContent,
    TaxonomyCategory::HighOverlap,
};

enum class TaxonomyClass : std::uint8_t {
  UncertaintyInMeaning,
  GuidelineUnderspecification,
  AnnotatorBehavior,
};

TaxonomyClass category_class(TaxonomyCategory category);
std::string_view category_name(TaxonomyCategory category);
TaxonomyCategory category_from_name(std::string_view name);  // throws, lists valid names
std::string_view class_name(TaxonomyClass cls);

// Set of taxonomy categories (bitmask over the 10 categories).
class CategorySet {
 public:
  CategorySet() = default;
  CategorySet(std::initializer_list<TaxonomyCategory> categories) {
    for (TaxonomyCategory c : categories) insert(c);
  }

  void insert(TaxonomyCategory c) { mask_ |= bit(c); }
  bool contains(TaxonomyCategory c) const { return (mask_ & bit(c)) != 0; }
  int size() const;
  bool empty() const { return mask_ == 0; }
  std::uint16_t mask() const { return mask_; }

  CategorySet intersect(CategorySet other) const;
  CategorySet unite(CategorySet other) const;
  bool subset_of(CategorySet other) const {
    return (mask_ & other.mask_) == mask_;
  }

  // Canonical names joined with ';' (empty string for the empty set).
  std::string to_string() const;
  // Semicolon-separated canonical names; empty input -> empty set.
  static CategorySet parse(std::string_view text);

  friend bool operator==(CategorySet a, CategorySet b) { return a.mask_ == b.mask_; }
  friend bool operator!=(CategorySet a, CategorySet b) { return a.mask_ != b.mask_; }
  friend bool operator<(CategorySet a, CategorySet b) { return a.mask_ < b.mask_; }

 private:
  static std::uint16_t bit(TaxonomyCategory c) {
    return static_cast<std::uint16_t>(1u << static_cast<unsigned>(c));
  }
  std::uint16_t mask_ = 0;
};

struct TaxonomyAnnotation {
  std::string item_uid;
  std::string annotator_id;
  CategorySet categories;  // may be empty: no identified source of disagreement
};

struct PredictionRecord {
  std::string uid;
  // Exactly one payload variant.
  std::variant<LabelDistribution,       // "probs": distribution over E/N/C
               std::array<double, 3>,   // "label_probs": independent per-label
               LabelSet,                // "labels": e.g. "EN"
               FourWayLabel>            // "label": "E"/"N"/"C"/"Complicated"
      payload;

  bool has_distribution() const { return payload.index() == 0; }
  bool has_label_probs() const { return payload.index() == 1; }
  bool has_label_set() const { return payload.index() == 2; }
  bool has_fourway() const { return payload.index() == 3; }
};

struct Diagnostic {
  int line = 0;  // 1-based
  std::string uid;
  std::string message;

  std::string format() const;
};

// Thrown in strict mode at the first diagnostic.
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const Diagnostic& diag)
      : std::runtime_error(diag.format()), diagnostic(diag) {}
  Diagnostic diagnostic;
};

struct ParseOptions {
  bool strict = false;  // abort on first diagnostic instead of skipping
};

template <typename T>
struct ParseResult {
  std::vector<T> records;
  std::vector<Diagnostic> diagnostics;
};

ParseResult<ItemRecord> parse_chaosnli_jsonl(std::istream& in,
                                             const ParseOptions& opts = {});
ParseResult<ItemRecord> parse_mnli_jsonl(std::istream& in,
                                         const ParseOptions& opts = {});
ParseResult<TaxonomyAnnotation> parse_taxonomy_annotations(std::istream& in,
                                                           const ParseOptions& opts = {});
ParseResult<PredictionRecord> parse_predictions(std::istream& in,
                                                const ParseOptions& opts = {});

// Canonical item JSONL (uid, premise, hypothesis, genre?, counts, source,
// original_gold?). Round-trips losslessly through parse_items_jsonl.
std::string item_to_jsonl(const ItemRecord& item);
ParseResult<ItemRecord> parse_items_jsonl(std::istream& in,
                                          const ParseOptions& opts = {});

std::string prediction_to_jsonl(const PredictionRecord& record);

template <typename Right>
struct JoinResult {
  std::vector<std::pair<ItemRecord, Right>> joined;
  std::vector<std::string> unmatched_items;
  std::vector<std::string> unmatched_right;
};

// Inner join on uid. Duplicate uids on either side are an error; unmatched
// uids are reported, not errors.
JoinResult<PredictionRecord> join_by_uid(const std::vector<ItemRecord>& items,
                                         const std::vector<PredictionRecord>& predictions);
JoinResult<CategorySet> join_by_uid(const std::vector<ItemRecord>& items,
                                    const std::vector<std::pair<std::string, CategorySet>>& sets);

}  // namespace nlid
