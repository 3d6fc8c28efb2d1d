#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nlid/ingest.hpp"
#include "nlid/labels.hpp"

namespace nlid {

// Vote thresholds for the relabeling rules. A 100-vote item gets a single
// label when its majority is strictly above chaos_single_min_votes and a
// multilabel when strictly below chaos_disagree_max_votes; the band in
// between is discarded.
struct RelabelPolicy {
  int chaos_single_min_votes = 80;    // exclusive lower bound
  int chaos_disagree_max_votes = 60;  // exclusive upper bound
  int chaos_multilabel_min_votes = 20;  // inclusive
  int mnli_unanimous = 5;
  int mnli_complicated_min_votes = 2;  // inclusive; two labels must reach it
  int mnli_multilabel_min_votes = 2;   // inclusive

  void validate() const;
};

struct SchemeLabels {
  FourWayLabel fourway;
  LabelSet multilabel;
};

inline constexpr std::string_view kDiscardChaosGrayZone = "chaos-gray-zone";
inline constexpr std::string_view kDiscardMnliNoRule = "mnli-no-rule";

struct RelabelOutcome {
  std::optional<SchemeLabels> labels;
  std::string discard_reason;  // nonempty iff labels is absent
};

RelabelOutcome relabel_item(const ItemRecord& item, const RelabelPolicy& policy = {});

struct LabeledItem {
  ItemRecord item;
  SchemeLabels labels;
  std::string split;  // "", or "train"/"dev"/"test" once assigned
};

// Counts over the seven label combinations, in table order E,N,C,EN,NC,EC,ENC.
struct CombinationCounts {
  std::array<long, 7> counts{};

  long& at(LabelSet combo) { return counts[static_cast<std::size_t>(combination_index(combo))]; }
  long at(LabelSet combo) const { return counts[static_cast<std::size_t>(combination_index(combo))]; }
  long complicated_total() const;  // sum of the multi-member combinations
  long total() const;
};

struct RelabelSummary {
  std::vector<LabeledItem> items;                    // input order preserved
  CombinationCounts table;
  std::map<std::string, long> discard_counts;        // reason -> count
};

RelabelSummary relabel_dataset(std::span<const ItemRecord> items,
                               const RelabelPolicy& policy = {});

CombinationCounts count_combinations(std::span<const LabeledItem> items);

// Size of the largest multi-member combination class; the default balance target.
long auto_balance_target(std::span<const LabeledItem> items);

// Downsample MNLI-sourced single-label items so each of E/N/C has exactly
// `target` items. Chaos-sourced singles and all multi-label items are kept.
// Selection is uniform without replacement, reproducible by seed.
std::vector<LabeledItem> downsample_balance(std::span<const LabeledItem> items,
                                            long target, std::uint64_t seed);

enum class StratifyBy : std::uint8_t { MultilabelCombination, FourWay };

struct SplitSpec {
  // Either absolute sizes (sum must equal the dataset size) or ratios
  // (must sum to 1 within 1e-9; sizes derived by largest remainder).
  std::optional<std::array<long, 3>> sizes;
  std::optional<std::array<double, 3>> ratios;
  std::uint64_t seed = 0;
  StratifyBy stratify_by = StratifyBy::MultilabelCombination;
};

struct SplitResult {
  std::vector<LabeledItem> train;
  std::vector<LabeledItem> dev;
  std::vector<LabeledItem> test;
  std::vector<std::string> warnings;
};

// Exact, disjoint three-way partition. Within every stratum the allocation
// stays within one item of the stratum's proportional share; strata smaller
// than 3 are assigned round-robin with a warning.
SplitResult stratified_split(std::span<const LabeledItem> items, const SplitSpec& spec);

// MNLI items where no label got more than 2 of the 5 votes.
std::vector<ItemRecord> filter_no_majority(std::span<const ItemRecord> items);

// Labeled-dataset JSONL (uid, premise, hypothesis, source, counts, fourway,
// multilabel, split when assigned).
std::string labeled_to_jsonl(const LabeledItem& item);
ParseResult<LabeledItem> parse_labeled_jsonl(std::istream& in,
                                             const ParseOptions& opts = {});

}  // namespace nlid
