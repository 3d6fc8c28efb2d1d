#include "nlid/relabel.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "nlid/rng.hpp"

namespace nlid {

using json = nlohmann::json;

void RelabelPolicy::validate() const {
  if (chaos_multilabel_min_votes <= 0 || mnli_multilabel_min_votes <= 0)
    throw std::invalid_argument("multilabel vote thresholds must be positive");
  if (chaos_disagree_max_votes > chaos_single_min_votes)
    throw std::invalid_argument(
        "chaos_disagree_max_votes must not exceed chaos_single_min_votes");
  if (chaos_multilabel_min_votes > chaos_disagree_max_votes)
    throw std::invalid_argument(
        "chaos_multilabel_min_votes must not exceed chaos_disagree_max_votes");
  if (mnli_unanimous <= 0 || mnli_unanimous > 5)
    throw std::invalid_argument("mnli_unanimous must be in [1,5]");
  if (mnli_complicated_min_votes < mnli_multilabel_min_votes)
    throw std::invalid_argument(
        "mnli_complicated_min_votes must be at least mnli_multilabel_min_votes");
}

RelabelOutcome relabel_item(const ItemRecord& item, const RelabelPolicy& policy) {
  policy.validate();
  if (item.counts.total() <= 0)
    throw std::invalid_argument("item " + item.uid + ": counts sum to zero");

  // The rules compare absolute vote counts; per-source totals are enforced
  // at ingest, not here.
  const MajorityResult m = majority(item.counts);
  if (item.source == Source::Chaos100) {
    if (m.votes > policy.chaos_single_min_votes) {
      LabelSet single{m.label};
      return {SchemeLabels{fourway_of(m.label), single}, ""};
    }
    if (m.votes < policy.chaos_disagree_max_votes) {
      LabelSet labels;
      for (NLILabel l : kNLILabels)
        if (item.counts.count(l) >= policy.chaos_multilabel_min_votes) labels.insert(l);
      if (labels.empty())
        throw std::invalid_argument(
            "relabel policy produced an empty multilabel for item " + item.uid);
      return {SchemeLabels{multilabel_to_fourway(labels), labels}, ""};
    }
    return {std::nullopt, std::string(kDiscardChaosGrayZone)};
  }

  // MNLI5
  if (m.votes == policy.mnli_unanimous) {
    LabelSet single{m.label};
    return {SchemeLabels{fourway_of(m.label), single}, ""};
  }
  int labels_with_quorum = 0;
  for (NLILabel l : kNLILabels)
    if (item.counts.count(l) >= policy.mnli_complicated_min_votes) ++labels_with_quorum;
  if (labels_with_quorum >= 2) {
    LabelSet labels;
    for (NLILabel l : kNLILabels)
      if (item.counts.count(l) >= policy.mnli_multilabel_min_votes) labels.insert(l);
    return {SchemeLabels{multilabel_to_fourway(labels), labels}, ""};
  }
  return {std::nullopt, std::string(kDiscardMnliNoRule)};
}

long CombinationCounts::complicated_total() const {
  long total = 0;
  for (int i = 3; i < 7; ++i) total += counts[static_cast<std::size_t>(i)];
  return total;
}

long CombinationCounts::total() const {
  return std::accumulate(counts.begin(), counts.end(), 0L);
}

RelabelSummary relabel_dataset(std::span<const ItemRecord> items,
                               const RelabelPolicy& policy) {
  policy.validate();
  std::unordered_set<std::string> seen;
  RelabelSummary summary;
  for (const ItemRecord& item : items) {
    if (!seen.insert(item.uid).second)
      throw std::invalid_argument("duplicate uid '" + item.uid + "'");
    RelabelOutcome outcome = relabel_item(item, policy);
    if (outcome.labels) {
      summary.items.push_back(LabeledItem{item, *outcome.labels, ""});
      summary.table.at(outcome.labels->multilabel) += 1;
    } else {
      summary.discard_counts[outcome.discard_reason] += 1;
    }
  }
  return summary;
}

CombinationCounts count_combinations(std::span<const LabeledItem> items) {
  CombinationCounts table;
  for (const LabeledItem& li : items) table.at(li.labels.multilabel) += 1;
  return table;
}

long auto_balance_target(std::span<const LabeledItem> items) {
  const CombinationCounts table = count_combinations(items);
  long best = 0;
  for (int i = 3; i < 7; ++i) best = std::max(best, table.counts[static_cast<std::size_t>(i)]);
  return best;
}

std::vector<LabeledItem> downsample_balance(std::span<const LabeledItem> items,
                                            long target, std::uint64_t seed) {
  if (target <= 0) throw std::invalid_argument("balance target must be positive");

  struct ClassPool {
    long chaos = 0;
    std::vector<std::size_t> mnli;  // candidate indices, input order
  };
  std::array<ClassPool, 3> pools;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const LabeledItem& li = items[i];
    if (li.labels.multilabel.size() != 1) continue;
    const auto cls = static_cast<std::size_t>(li.labels.fourway);
    if (li.item.source == Source::Chaos100)
      pools[cls].chaos += 1;
    else
      pools[cls].mnli.push_back(i);
  }

  for (NLILabel l : kNLILabels) {
    const ClassPool& pool = pools[static_cast<std::size_t>(l)];
    const long available = pool.chaos + static_cast<long>(pool.mnli.size());
    if (target > available || target < pool.chaos) {
      std::ostringstream os;
      os << "balance target " << target << " unreachable for class " << nli_name(l)
         << ": " << pool.chaos << " non-droppable + " << pool.mnli.size()
         << " droppable items available";
      throw std::invalid_argument(os.str());
    }
  }

  std::vector<bool> keep(items.size(), true);
  Rng rng(seed);
  for (NLILabel l : kNLILabels) {
    const ClassPool& pool = pools[static_cast<std::size_t>(l)];
    const auto want = static_cast<std::size_t>(target - pool.chaos);
    const auto chosen = rng.sample_indices(pool.mnli.size(), want);
    std::vector<bool> selected(pool.mnli.size(), false);
    for (std::size_t idx : chosen) selected[idx] = true;
    for (std::size_t j = 0; j < pool.mnli.size(); ++j)
      if (!selected[j]) keep[pool.mnli[j]] = false;
  }

  std::vector<LabeledItem> out;
  out.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i)
    if (keep[i]) out.push_back(items[i]);
  return out;
}

namespace {

std::array<long, 3> resolve_sizes(const SplitSpec& spec, std::size_t n_items) {
  const auto n = static_cast<long>(n_items);
  if (spec.sizes && spec.ratios)
    throw std::invalid_argument("give either sizes or ratios, not both");
  if (spec.sizes) {
    const auto& s = *spec.sizes;
    if (s[0] < 0 || s[1] < 0 || s[2] < 0 || s[0] + s[1] + s[2] != n)
      throw std::invalid_argument("split sizes must be non-negative and sum to " +
                                  std::to_string(n));
    return s;
  }
  if (!spec.ratios) throw std::invalid_argument("split spec needs sizes or ratios");
  const auto& r = *spec.ratios;
  double sum = r[0] + r[1] + r[2];
  if (r[0] < 0 || r[1] < 0 || r[2] < 0 || std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("split ratios must be non-negative and sum to 1");
  // Largest-remainder rounding of n * ratio.
  std::array<long, 3> sizes{};
  std::array<double, 3> frac{};
  long assigned = 0;
  for (int p = 0; p < 3; ++p) {
    const double q = static_cast<double>(n) * r[static_cast<std::size_t>(p)];
    sizes[static_cast<std::size_t>(p)] = static_cast<long>(std::floor(q));
    frac[static_cast<std::size_t>(p)] = q - std::floor(q);
    assigned += sizes[static_cast<std::size_t>(p)];
  }
  for (long left = n - assigned; left > 0; --left) {
    int best = 0;
    for (int p = 1; p < 3; ++p)
      if (frac[static_cast<std::size_t>(p)] > frac[static_cast<std::size_t>(best)]) best = p;
    sizes[static_cast<std::size_t>(best)] += 1;
    frac[static_cast<std::size_t>(best)] = -1.0;
  }
  return sizes;
}

int stratum_key(const LabeledItem& li, StratifyBy by) {
  if (by == StratifyBy::FourWay) return static_cast<int>(li.labels.fourway);
  return combination_index(li.labels.multilabel);
}

}  // namespace

SplitResult stratified_split(std::span<const LabeledItem> items, const SplitSpec& spec) {
  const std::array<long, 3> targets = resolve_sizes(spec, items.size());
  const auto n_total = static_cast<double>(items.size());

  // Strata in canonical key order; members in input order.
  std::map<int, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < items.size(); ++i)
    strata[stratum_key(items[i], spec.stratify_by)].push_back(i);

  SplitResult result;
  Rng rng(spec.seed);
  for (auto& [key, members] : strata) {
    (void)key;
    rng.shuffle(members);
  }

  std::array<long, 3> remaining = targets;

  // Small strata: deterministic round-robin over the three parts.
  int rr = 0;
  std::vector<std::pair<int, const std::vector<std::size_t>*>> large;
  std::vector<std::array<long, 3>> alloc;
  for (const auto& [key, members] : strata) {
    if (members.size() >= 3) {
      large.emplace_back(key, &members);
      continue;
    }
    std::ostringstream os;
    os << "stratum " << key << " has " << members.size()
       << " items; assigned round-robin";
    result.warnings.push_back(os.str());
    for (std::size_t idx : members) {
      std::array<std::vector<LabeledItem>*, 3> parts{&result.train, &result.dev,
                                                     &result.test};
      parts[static_cast<std::size_t>(rr)]->push_back(items[idx]);
      remaining[static_cast<std::size_t>(rr)] -= 1;
      rr = (rr + 1) % 3;
    }
  }
  // Round-robin can overdraw a part on degenerate inputs; shift the excess
  // to whichever part still has the most room.
  for (int p = 0; p < 3; ++p) {
    while (remaining[static_cast<std::size_t>(p)] < 0) {
      int widest = (p + 1) % 3;
      for (int q = 0; q < 3; ++q)
        if (q != p && remaining[static_cast<std::size_t>(q)] >
                          remaining[static_cast<std::size_t>(widest)])
          widest = q;
      remaining[static_cast<std::size_t>(p)] += 1;
      remaining[static_cast<std::size_t>(widest)] -= 1;
      result.warnings.push_back("split sizes adjusted after round-robin overflow");
    }
  }

  // Proportional quotas for the remaining strata, floors plus
  // largest-remainder so each stratum's row sums exactly to its size.
  const std::size_t n_large = large.size();
  alloc.resize(n_large);
  std::vector<std::array<double, 3>> quota(n_large);
  for (std::size_t s = 0; s < n_large; ++s) {
    const auto n_s = static_cast<double>(large[s].second->size());
    long row = 0;
    std::array<double, 3> frac{};
    for (int p = 0; p < 3; ++p) {
      const double q = n_s * static_cast<double>(targets[static_cast<std::size_t>(p)]) / n_total;
      quota[s][static_cast<std::size_t>(p)] = q;
      alloc[s][static_cast<std::size_t>(p)] = static_cast<long>(std::floor(q));
      frac[static_cast<std::size_t>(p)] = q - std::floor(q);
      row += alloc[s][static_cast<std::size_t>(p)];
    }
    for (long left = static_cast<long>(large[s].second->size()) - row; left > 0; --left) {
      int best = 0;
      for (int p = 1; p < 3; ++p)
        if (frac[static_cast<std::size_t>(p)] > frac[static_cast<std::size_t>(best)]) best = p;
      alloc[s][static_cast<std::size_t>(best)] += 1;
      frac[static_cast<std::size_t>(best)] = -1.0;
    }
  }

  // Column correction: move single allocations between parts, choosing the
  // move that least disturbs the stratum quotas, until every part matches
  // its target exactly.
  auto col_sum = [&](int p) {
    long sum = 0;
    for (std::size_t s = 0; s < n_large; ++s) sum += alloc[s][static_cast<std::size_t>(p)];
    return sum;
  };
  for (;;) {
    int over = -1;
    int under = -1;
    for (int p = 0; p < 3; ++p) {
      const long diff = col_sum(p) - remaining[static_cast<std::size_t>(p)];
      if (diff > 0 && over < 0) over = p;
      if (diff < 0 && under < 0) under = p;
    }
    if (over < 0 && under < 0) break;
    if (over < 0 || under < 0)
      throw std::logic_error("stratified_split: inconsistent allocation state");
    double best_penalty = 0.0;
    std::size_t best_s = n_large;
    for (std::size_t s = 0; s < n_large; ++s) {
      if (alloc[s][static_cast<std::size_t>(over)] <= 0) continue;
      const double dev_over = std::abs(static_cast<double>(alloc[s][static_cast<std::size_t>(over)]) -
                                       quota[s][static_cast<std::size_t>(over)]);
      const double dev_under = std::abs(static_cast<double>(alloc[s][static_cast<std::size_t>(under)]) -
                                        quota[s][static_cast<std::size_t>(under)]);
      const double new_over = std::abs(static_cast<double>(alloc[s][static_cast<std::size_t>(over)]) - 1.0 -
                                       quota[s][static_cast<std::size_t>(over)]);
      const double new_under = std::abs(static_cast<double>(alloc[s][static_cast<std::size_t>(under)]) + 1.0 -
                                        quota[s][static_cast<std::size_t>(under)]);
      const double penalty = (new_over + new_under) - (dev_over + dev_under);
      if (best_s == n_large || penalty < best_penalty - 1e-12) {
        best_s = s;
        best_penalty = penalty;
      }
    }
    if (best_s == n_large)
      throw std::logic_error("stratified_split: no adjustable stratum");
    alloc[best_s][static_cast<std::size_t>(over)] -= 1;
    alloc[best_s][static_cast<std::size_t>(under)] += 1;
  }

  for (std::size_t s = 0; s < n_large; ++s) {
    const std::vector<std::size_t>& members = *large[s].second;
    std::size_t pos = 0;
    std::array<std::vector<LabeledItem>*, 3> parts{&result.train, &result.dev,
                                                   &result.test};
    for (int p = 0; p < 3; ++p) {
      for (long k = 0; k < alloc[s][static_cast<std::size_t>(p)]; ++k, ++pos)
        parts[static_cast<std::size_t>(p)]->push_back(items[members[pos]]);
    }
  }

  static constexpr std::array<std::string_view, 3> kPartNames = {"train", "dev", "test"};
  std::array<std::vector<LabeledItem>*, 3> parts{&result.train, &result.dev, &result.test};
  for (int p = 0; p < 3; ++p)
    for (LabeledItem& li : *parts[static_cast<std::size_t>(p)])
      li.split = std::string(kPartNames[static_cast<std::size_t>(p)]);
  return result;
}

std::vector<ItemRecord> filter_no_majority(std::span<const ItemRecord> items) {
  std::vector<ItemRecord> out;
  for (const ItemRecord& item : items) {
    if (item.source != Source::MNLI5)
      throw std::invalid_argument("filter_no_majority expects MNLI items (got " +
                                  item.uid + ")");
    if (majority(item.counts).votes <= 2) out.push_back(item);
  }
  return out;
}

std::string labeled_to_jsonl(const LabeledItem& li) {
  json obj;
  obj["uid"] = li.item.uid;
  obj["premise"] = li.item.premise;
  obj["hypothesis"] = li.item.hypothesis;
  if (li.item.genre) obj["genre"] = *li.item.genre;
  obj["counts"] = {li.item.counts.e, li.item.counts.n, li.item.counts.c};
  obj["source"] = std::string(source_name(li.item.source));
  if (li.item.original_gold) obj["original_gold"] = *li.item.original_gold;
  obj["fourway"] = std::string(fourway_name(li.labels.fourway));
  obj["multilabel"] = li.labels.multilabel.to_string();
  if (!li.split.empty()) obj["split"] = li.split;
  return obj.dump();
}

ParseResult<LabeledItem> parse_labeled_jsonl(std::istream& in, const ParseOptions& opts) {
  // Reuse the canonical item parser for the shared fields, then attach labels.
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const std::string content = buffer.str();

  ParseResult<LabeledItem> result;
  std::istringstream stream(content);
  std::string line;
  int lineno = 0;
  std::unordered_set<std::string> seen;
  while (std::getline(stream, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;

    auto report = [&](const std::string& uid, const std::string& message) {
      Diagnostic d{lineno, uid, message};
      if (opts.strict) throw ParseError(d);
      result.diagnostics.push_back(d);
    };

    std::istringstream one(line);
    ParseResult<ItemRecord> base = parse_items_jsonl(one, ParseOptions{false});
    if (base.records.empty()) {
      const std::string msg = base.diagnostics.empty()
                                  ? std::string("malformed record")
                                  : base.diagnostics.front().message;
      const std::string uid = base.diagnostics.empty() ? "" : base.diagnostics.front().uid;
      report(uid, msg);
      continue;
    }
    json obj = json::parse(line, nullptr, false);
    LabeledItem li;
    li.item = std::move(base.records.front());
    const auto fw = obj.find("fourway");
    const auto ml = obj.find("multilabel");
    if (fw == obj.end() || !fw->is_string() || ml == obj.end() || !ml->is_string()) {
      report(li.item.uid, "missing field fourway/multilabel");
      continue;
    }
    try {
      li.labels.fourway = fourway_from_name(fw->get<std::string>());
      li.labels.multilabel = LabelSet::parse(ml->get<std::string>());
    } catch (const std::invalid_argument& ex) {
      report(li.item.uid, ex.what());
      continue;
    }
    if (multilabel_to_fourway(li.labels.multilabel) != li.labels.fourway) {
      report(li.item.uid, "fourway label inconsistent with multilabel");
      continue;
    }
    if (auto split = obj.find("split"); split != obj.end() && split->is_string())
      li.split = split->get<std::string>();
    if (!seen.insert(li.item.uid).second) {
      report(li.item.uid, "duplicate uid");
      continue;
    }
    result.records.push_back(std::move(li));
  }
  return result;
}

}  // namespace nlid
