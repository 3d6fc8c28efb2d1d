#pragma once

#include <string>
#include <vector>

#include "nlid/relabel.hpp"
#include "nlid/rng.hpp"

namespace nlid::testsupport {

// Linearly separable synthetic corpus: each NLI label is present exactly
// when its marker token appears in the hypothesis, so a linear model over
// hashed unigrams can recover the labeling rule. Counts give the members
// of the label set equal high vote shares.
inline std::vector<LabeledItem> make_separable_items(std::size_t n, std::uint64_t seed) {
  static const char* kMarkers[3] = {"alphax", "betax", "gammax"};
  Rng rng(seed);
  std::vector<LabeledItem> items;
  items.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto mask = static_cast<std::uint8_t>(1 + rng.bounded(7));
    const LabelSet set = LabelSet::from_mask(mask);

    auto filler = [&]() { return "w" + std::to_string(rng.bounded(40)); };
    std::string premise;
    const std::size_t n_prem = 4 + rng.bounded(5);
    for (std::size_t t = 0; t < n_prem; ++t) premise += (t ? " " : "") + filler();
    std::string hypothesis;
    const std::size_t n_hyp = 3 + rng.bounded(4);
    for (std::size_t t = 0; t < n_hyp; ++t) hypothesis += (t ? " " : "") + filler();
    for (int l = 0; l < 3; ++l)
      if (mask & (1u << l)) hypothesis += std::string(" ") + kMarkers[l];

    AnnotationCounts counts;
    const int members = set.size();
    int remaining = 100 - (3 - members) * 2;  // non-members get 2 votes each
    int assigned = 0;
    for (int l = 0; l < 3; ++l) {
      int votes;
      if (mask & (1u << l)) {
        ++assigned;
        votes = assigned == members ? remaining : (100 - (3 - members) * 2) / members;
        remaining -= votes;
      } else {
        votes = 2;
      }
      switch (l) {
        case 0: counts.e = votes; break;
        case 1: counts.n = votes; break;
        case 2: counts.c = votes; break;
      }
    }

    LabeledItem li;
    li.item.uid = "syn" + std::to_string(i);
    li.item.premise = premise;
    li.item.hypothesis = hypothesis;
    li.item.counts = counts;
    li.item.source = Source::Chaos100;
    li.labels.multilabel = set;
    li.labels.fourway = multilabel_to_fourway(set);
    items.push_back(std::move(li));
  }
  return items;
}

}  // namespace nlid::testsupport
