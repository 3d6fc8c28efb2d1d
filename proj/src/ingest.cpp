#include "nlid/ingest.hpp"

#include <cmath>
#include <istream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

namespace nlid {

using json = nlohmann::json;

int expected_total(Source source) {
  return source == Source::Chaos100 ? 100 : 5;
}

std::string_view source_name(Source source) {
  return source == Source::Chaos100 ? "chaos100" : "mnli5";
}

Source source_from_name(std::string_view name) {
  if (name == "chaos100") return Source::Chaos100;
  if (name == "mnli5") return Source::MNLI5;
  throw std::invalid_argument("unknown source '" + std::string(name) + "'");
}

namespace {

constexpr std::array<std::string_view, 10> kCategoryNames = {
    "Lexical",
    "Implicature",
    "Presupposition",
    "ProbabilisticEnrichment",
    "Imperfection",
    "Coreference",
    "TemporalReference",
    "InterrogativeHypothesis",
    "AccommodatingMinimallyAddedContent",
    "HighOverlap",
};

std::string valid_category_names() {
  std::string out;
  for (std::size_t i = 0; i < kCategoryNames.size(); ++i) {
    if (i) out += ", ";
    out += kCategoryNames[i];
  }
  return out;
}

}  // namespace

TaxonomyClass category_class(TaxonomyCategory category) {
  switch (category) {
    case TaxonomyCategory::Lexical:
    case TaxonomyCategory::Implicature:
    case TaxonomyCategory::Presupposition:
    case TaxonomyCategory::ProbabilisticEnrichment:
    case TaxonomyCategory::Imperfection:
      return TaxonomyClass::UncertaintyInMeaning;
    case TaxonomyCategory::Coreference:
    case TaxonomyCategory::TemporalReference:
    case TaxonomyCategory::InterrogativeHypothesis:
      return TaxonomyClass::GuidelineUnderspecification;
    case TaxonomyCategory::AccommodatingMinimallyAddedContent:
    case TaxonomyCategory::HighOverlap:
      return TaxonomyClass::AnnotatorBehavior;
  }
  throw std::invalid_argument("invalid TaxonomyCategory");
}

std::string_view category_name(TaxonomyCategory category) {
  return kCategoryNames[static_cast<std::size_t>(category)];
}

TaxonomyCategory category_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kCategoryNames.size(); ++i)
    if (kCategoryNames[i] == name) return static_cast<TaxonomyCategory>(i);
  throw std::invalid_argument("unknown category '" + std::string(name) +
                              "'; valid names: " + valid_category_names());
}

std::string_view class_name(TaxonomyClass cls) {
  switch (cls) {
    case TaxonomyClass::UncertaintyInMeaning: return "UncertaintyInMeaning";
    case TaxonomyClass::GuidelineUnderspecification: return "GuidelineUnderspecification";
    case TaxonomyClass::AnnotatorBehavior: return "AnnotatorBehavior";
  }
  throw std::invalid_argument("invalid TaxonomyClass");
}

int CategorySet::size() const {
  int n = 0;
  for (int i = 0; i < kNumTaxonomyCategories; ++i)
    if (mask_ & (1u << i)) ++n;
  return n;
}

CategorySet CategorySet::intersect(CategorySet other) const {
  CategorySet out;
  out.mask_ = mask_ & other.mask_;
  return out;
}

CategorySet CategorySet::unite(CategorySet other) const {
  CategorySet out;
  out.mask_ = mask_ | other.mask_;
  return out;
}

std::string CategorySet::to_string() const {
  std::string out;
  for (TaxonomyCategory c : kTaxonomyCategories) {
    if (!contains(c)) continue;
    if (!out.empty()) out += ';';
    out += category_name(c);
  }
  return out;
}

CategorySet CategorySet::parse(std::string_view text) {
  CategorySet out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find(';', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view part = text.substr(pos, end - pos);
    // Trim surrounding spaces.
    while (!part.empty() && part.front() == ' ') part.remove_prefix(1);
    while (!part.empty() && part.back() == ' ') part.remove_suffix(1);
    if (!part.empty()) out.insert(category_from_name(part));
    if (end == text.size()) break;
    pos = end + 1;
  }
  return out;
}

std::string Diagnostic::format() const {
  std::ostringstream os;
  os << "line " << line;
  if (!uid.empty()) os << " (uid " << uid << ")";
  os << ": " << message;
  return os.str();
}

namespace {

// Shared per-line driver: reports a diagnostic, throwing in strict mode.
class DiagnosticSink {
 public:
  DiagnosticSink(std::vector<Diagnostic>& out, bool strict)
      : out_(out), strict_(strict) {}

  void report(int line, std::string uid, std::string message) {
    Diagnostic d{line, std::move(uid), std::move(message)};
    if (strict_) throw ParseError(d);
    out_.push_back(std::move(d));
  }

 private:
  std::vector<Diagnostic>& out_;
  bool strict_;
};

bool next_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

bool blank(const std::string& line) {
  return line.find_first_not_of(" \t") == std::string::npos;
}

std::optional<json> parse_json_line(const std::string& line, int lineno,
                                    DiagnosticSink& sink) {
  json obj = json::parse(line, nullptr, false);
  if (obj.is_discarded() || !obj.is_object()) {
    sink.report(lineno, "", "malformed JSON record");
    return std::nullopt;
  }
  return obj;
}

std::optional<std::string> get_string(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) return std::nullopt;
  return it->get<std::string>();
}

// Nonnegative integer count; accepts integral JSON numbers only.
std::optional<int> get_count(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) return 0;  // missing keys count as zero votes
  if (!it->is_number_integer() || it->get<long long>() < 0) return std::nullopt;
  return static_cast<int>(it->get<long long>());
}

}  // namespace

ParseResult<ItemRecord> parse_chaosnli_jsonl(std::istream& in, const ParseOptions& opts) {
  ParseResult<ItemRecord> result;
  DiagnosticSink sink(result.diagnostics, opts.strict);
  std::unordered_set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (next_line(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    auto obj = parse_json_line(line, lineno, sink);
    if (!obj) continue;

    auto uid = get_string(*obj, "uid");
    if (!uid) {
      sink.report(lineno, "", "missing field uid");
      continue;
    }
    if (!obj->contains("label_counter") || !(*obj)["label_counter"].is_object()) {
      sink.report(lineno, *uid, "missing field label_counter");
      continue;
    }
    const json& counter = (*obj)["label_counter"];
    auto e = get_count(counter, "e");
    auto n = get_count(counter, "n");
    auto c = get_count(counter, "c");
    if (!e || !n || !c) {
      sink.report(lineno, *uid, "label_counter values must be non-negative integers");
      continue;
    }
    if (!obj->contains("example") || !(*obj)["example"].is_object()) {
      sink.report(lineno, *uid, "missing field example");
      continue;
    }
    const json& example = (*obj)["example"];
    auto premise = get_string(example, "premise");
    auto hypothesis = get_string(example, "hypothesis");
    if (!premise || !hypothesis) {
      sink.report(lineno, *uid, "missing field example.premise/example.hypothesis");
      continue;
    }

    ItemRecord item;
    item.uid = *uid;
    item.premise = *premise;
    item.hypothesis = *hypothesis;
    item.counts = AnnotationCounts{*e, *n, *c};
    item.source = Source::Chaos100;
    if (auto genre = get_string(example, "genre")) item.genre = *genre;

    const int total = item.counts.total();
    if (total != 100) {
      sink.report(lineno, *uid,
                  "counts sum " + std::to_string(total) + " != 100");
      continue;
    }
    if (!seen.insert(item.uid).second) {
      sink.report(lineno, item.uid, "duplicate uid");
      continue;
    }

    if (opts.strict) {
      // Cross-check the release's redundant fields against recomputation.
      if (auto maj = get_string(*obj, "majority_label")) {
        const MajorityResult m = majority(item.counts);
        if (!m.tie && *maj != std::string(1, nli_code(m.label)) &&
            *maj != nli_name(m.label)) {
          sink.report(lineno, item.uid,
                      "majority_label '" + *maj + "' does not match recomputed '" +
                          std::string(1, nli_code(m.label)) + "'");
          continue;
        }
      }
      if (obj->contains("label_dist") && (*obj)["label_dist"].is_array() &&
          (*obj)["label_dist"].size() == 3) {
        const LabelDistribution d = counts_to_distribution(item.counts);
        const std::array<double, 3> recomputed{d.e, d.n, d.c};
        bool match = true;
        for (int i = 0; i < 3; ++i) {
          const json& v = (*obj)["label_dist"][i];
          if (!v.is_number() ||
              std::abs(v.get<double>() - recomputed[static_cast<std::size_t>(i)]) > 1e-6)
            match = false;
        }
        if (!match) {
          sink.report(lineno, item.uid, "label_dist does not match recomputed distribution");
          continue;
        }
      }
      if (obj->contains("entropy") && (*obj)["entropy"].is_number()) {
        const LabelDistribution d = counts_to_distribution(item.counts);
        const double released = (*obj)["entropy"].get<double>();
        const bool ok = std::abs(released - entropy(d, 2.0)) < 1e-6 ||
                        std::abs(released - entropy(d, std::exp(1.0))) < 1e-6;
        if (!ok) {
          sink.report(lineno, item.uid, "entropy does not match recomputed value");
          continue;
        }
      }
    }

    result.records.push_back(std::move(item));
  }
  return result;
}

ParseResult<ItemRecord> parse_mnli_jsonl(std::istream& in, const ParseOptions& opts) {
  ParseResult<ItemRecord> result;
  DiagnosticSink sink(result.diagnostics, opts.strict);
  std::unordered_set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (next_line(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    auto obj = parse_json_line(line, lineno, sink);
    if (!obj) continue;

    auto uid = get_string(*obj, "pairID");
    if (!uid) {
      sink.report(lineno, "", "missing field pairID");
      continue;
    }
    auto premise = get_string(*obj, "sentence1");
    auto hypothesis = get_string(*obj, "sentence2");
    if (!premise || !hypothesis) {
      sink.report(lineno, *uid, "missing field sentence1/sentence2");
      continue;
    }
    auto labels_it = obj->find("annotator_labels");
    if (labels_it == obj->end() || !labels_it->is_array()) {
      sink.report(lineno, *uid, "missing field annotator_labels");
      continue;
    }
    if (labels_it->size() != 5) {
      sink.report(lineno, *uid,
                  "annotator_labels length " + std::to_string(labels_it->size()) +
                      " != 5");
      continue;
    }

    AnnotationCounts counts;
    bool ok = true;
    for (const json& v : *labels_it) {
      if (!v.is_string()) {
        sink.report(lineno, *uid, "annotator_labels entries must be strings");
        ok = false;
        break;
      }
      const std::string word = v.get<std::string>();
      NLILabel label;
      try {
        label = nli_from_word(word);
      } catch (const std::invalid_argument& ex) {
        sink.report(lineno, *uid, ex.what());
        ok = false;
        break;
      }
      switch (label) {
        case NLILabel::Entailment: ++counts.e; break;
        case NLILabel::Neutral: ++counts.n; break;
        case NLILabel::Contradiction: ++counts.c; break;
      }
    }
    if (!ok) continue;

    ItemRecord item;
    item.uid = *uid;
    item.premise = *premise;
    item.hypothesis = *hypothesis;
    item.counts = counts;
    item.source = Source::MNLI5;
    if (auto genre = get_string(*obj, "genre")) item.genre = *genre;
    if (auto gold = get_string(*obj, "gold_label")) item.original_gold = *gold;

    if (!seen.insert(item.uid).second) {
      sink.report(lineno, item.uid, "duplicate uid");
      continue;
    }
    result.records.push_back(std::move(item));
  }
  return result;
}

ParseResult<TaxonomyAnnotation> parse_taxonomy_annotations(std::istream& in,
                                                           const ParseOptions& opts) {
  ParseResult<TaxonomyAnnotation> result;
  DiagnosticSink sink(result.diagnostics, opts.strict);
  std::set<std::pair<std::string, std::string>> seen;
  std::string line;
  int lineno = 0;
  bool header_seen = false;
  while (next_line(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    if (!header_seen) {
      header_seen = true;
      if (line != "item_uid,annotator_id,categories") {
        sink.report(lineno, "", "expected header 'item_uid,annotator_id,categories'");
      }
      continue;
    }
    const std::size_t c1 = line.find(',');
    const std::size_t c2 = c1 == std::string::npos ? std::string::npos
                                                   : line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos) {
      sink.report(lineno, "", "expected 3 comma-separated fields");
      continue;
    }
    TaxonomyAnnotation row;
    row.item_uid = line.substr(0, c1);
    row.annotator_id = line.substr(c1 + 1, c2 - c1 - 1);
    if (row.item_uid.empty() || row.annotator_id.empty()) {
      sink.report(lineno, row.item_uid, "item_uid and annotator_id must be nonempty");
      continue;
    }
    try {
      row.categories = CategorySet::parse(std::string_view(line).substr(c2 + 1));
    } catch (const std::invalid_argument& ex) {
      sink.report(lineno, row.item_uid, ex.what());
      continue;
    }
    if (!seen.insert({row.item_uid, row.annotator_id}).second) {
      sink.report(lineno, row.item_uid,
                  "duplicate (item_uid, annotator_id) row for annotator '" +
                      row.annotator_id + "'");
      continue;
    }
    result.records.push_back(std::move(row));
  }
  return result;
}

ParseResult<PredictionRecord> parse_predictions(std::istream& in,
                                                const ParseOptions& opts) {
  ParseResult<PredictionRecord> result;
  DiagnosticSink sink(result.diagnostics, opts.strict);
  std::string line;
  int lineno = 0;
  while (next_line(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    auto obj = parse_json_line(line, lineno, sink);
    if (!obj) continue;

    auto uid = get_string(*obj, "uid");
    if (!uid) {
      sink.report(lineno, "", "missing field uid");
      continue;
    }

    int payloads = 0;
    for (const char* key : {"probs", "label_probs", "labels", "label"})
      if (obj->contains(key)) ++payloads;
    if (payloads != 1) {
      sink.report(lineno, *uid,
                  payloads == 0 ? "missing payload: expected one of probs/label_probs/labels/label"
                                : "multiple payloads: expected exactly one of probs/label_probs/labels/label");
      continue;
    }

    auto read_triple = [&](const char* key) -> std::optional<std::array<double, 3>> {
      const json& arr = (*obj)[key];
      if (!arr.is_array() || arr.size() != 3) {
        sink.report(lineno, *uid, std::string(key) + " must be an array of 3 numbers");
        return std::nullopt;
      }
      std::array<double, 3> out{};
      for (int i = 0; i < 3; ++i) {
        if (!arr[i].is_number()) {
          sink.report(lineno, *uid, std::string(key) + " must be an array of 3 numbers");
          return std::nullopt;
        }
        out[static_cast<std::size_t>(i)] = arr[i].get<double>();
      }
      for (double p : out) {
        if (!(p >= 0.0 && p <= 1.0)) {
          sink.report(lineno, *uid, std::string(key) + " values must be in [0,1]");
          return std::nullopt;
        }
      }
      return out;
    };

    PredictionRecord record;
    record.uid = *uid;
    if (obj->contains("probs")) {
      auto t = read_triple("probs");
      if (!t) continue;
      const double sum = (*t)[0] + (*t)[1] + (*t)[2];
      if (std::abs(sum - 1.0) > 1e-6) {
        sink.report(lineno, *uid, "probs sum to " + std::to_string(sum) + ", expected 1");
        continue;
      }
      record.payload = LabelDistribution{(*t)[0], (*t)[1], (*t)[2]};
    } else if (obj->contains("label_probs")) {
      auto t = read_triple("label_probs");
      if (!t) continue;
      record.payload = *t;
    } else if (obj->contains("labels")) {
      auto text = get_string(*obj, "labels");
      if (!text) {
        sink.report(lineno, *uid, "labels must be a string");
        continue;
      }
      try {
        record.payload = LabelSet::parse(*text);
      } catch (const std::invalid_argument& ex) {
        sink.report(lineno, *uid, ex.what());
        continue;
      }
    } else {
      auto text = get_string(*obj, "label");
      if (!text) {
        sink.report(lineno, *uid, "label must be a string");
        continue;
      }
      try {
        record.payload = fourway_from_name(*text);
      } catch (const std::invalid_argument& ex) {
        sink.report(lineno, *uid, ex.what());
        continue;
      }
    }
    result.records.push_back(std::move(record));
  }
  return result;
}

std::string item_to_jsonl(const ItemRecord& item) {
  json obj;
  obj["uid"] = item.uid;
  obj["premise"] = item.premise;
  obj["hypothesis"] = item.hypothesis;
  if (item.genre) obj["genre"] = *item.genre;
  obj["counts"] = {item.counts.e, item.counts.n, item.counts.c};
  obj["source"] = std::string(source_name(item.source));
  if (item.original_gold) obj["original_gold"] = *item.original_gold;
  return obj.dump();
}

ParseResult<ItemRecord> parse_items_jsonl(std::istream& in, const ParseOptions& opts) {
  ParseResult<ItemRecord> result;
  DiagnosticSink sink(result.diagnostics, opts.strict);
  std::unordered_set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (next_line(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    auto obj = parse_json_line(line, lineno, sink);
    if (!obj) continue;

    auto uid = get_string(*obj, "uid");
    auto premise = get_string(*obj, "premise");
    auto hypothesis = get_string(*obj, "hypothesis");
    auto source = get_string(*obj, "source");
    if (!uid || !premise || !hypothesis || !source) {
      sink.report(lineno, uid.value_or(""), "missing field uid/premise/hypothesis/source");
      continue;
    }
    auto counts_it = obj->find("counts");
    if (counts_it == obj->end() || !counts_it->is_array() || counts_it->size() != 3) {
      sink.report(lineno, *uid, "counts must be an array of 3 integers");
      continue;
    }
    ItemRecord item;
    item.uid = *uid;
    item.premise = *premise;
    item.hypothesis = *hypothesis;
    bool ok = true;
    std::array<int, 3> counts{};
    for (int i = 0; i < 3; ++i) {
      const json& v = (*counts_it)[i];
      if (!v.is_number_integer() || v.get<long long>() < 0) {
        sink.report(lineno, *uid, "counts must be non-negative integers");
        ok = false;
        break;
      }
      counts[static_cast<std::size_t>(i)] = static_cast<int>(v.get<long long>());
    }
    if (!ok) continue;
    item.counts = AnnotationCounts{counts[0], counts[1], counts[2]};
    try {
      item.source = source_from_name(*source);
    } catch (const std::invalid_argument& ex) {
      sink.report(lineno, *uid, ex.what());
      continue;
    }
    if (item.counts.total() != expected_total(item.source)) {
      sink.report(lineno, *uid,
                  "counts sum " + std::to_string(item.counts.total()) + " != " +
                      std::to_string(expected_total(item.source)));
      continue;
    }
    if (auto genre = get_string(*obj, "genre")) item.genre = *genre;
    if (auto gold = get_string(*obj, "original_gold")) item.original_gold = *gold;
    if (!seen.insert(item.uid).second) {
      sink.report(lineno, item.uid, "duplicate uid");
      continue;
    }
    result.records.push_back(std::move(item));
  }
  return result;
}

std::string prediction_to_jsonl(const PredictionRecord& record) {
  json obj;
  obj["uid"] = record.uid;
  if (record.has_distribution()) {
    const auto& d = std::get<LabelDistribution>(record.payload);
    obj["probs"] = {d.e, d.n, d.c};
  } else if (record.has_label_probs()) {
    const auto& p = std::get<std::array<double, 3>>(record.payload);
    obj["label_probs"] = {p[0], p[1], p[2]};
  } else if (record.has_label_set()) {
    obj["labels"] = std::get<LabelSet>(record.payload).to_string();
  } else {
    obj["label"] = std::string(fourway_name(std::get<FourWayLabel>(record.payload)));
  }
  return obj.dump();
}

namespace {

template <typename Right>
JoinResult<Right> join_impl(const std::vector<ItemRecord>& items,
                            const std::vector<std::pair<std::string, Right>>& right) {
  std::unordered_map<std::string, const Right*> index;
  for (const auto& [uid, value] : right) {
    if (!index.emplace(uid, &value).second)
      throw std::invalid_argument("duplicate uid '" + uid + "'");
  }
  std::unordered_set<std::string> left_uids;
  JoinResult<Right> result;
  std::unordered_set<std::string> matched;
  for (const ItemRecord& item : items) {
    if (!left_uids.insert(item.uid).second)
      throw std::invalid_argument("duplicate uid '" + item.uid + "'");
    auto it = index.find(item.uid);
    if (it == index.end()) {
      result.unmatched_items.push_back(item.uid);
    } else {
      result.joined.emplace_back(item, *it->second);
      matched.insert(item.uid);
    }
  }
  for (const auto& [uid, value] : right)
    if (!matched.count(uid)) result.unmatched_right.push_back(uid);
  return result;
}

}  // namespace

JoinResult<PredictionRecord> join_by_uid(const std::vector<ItemRecord>& items,
                                         const std::vector<PredictionRecord>& predictions) {
  std::vector<std::pair<std::string, PredictionRecord>> right;
  right.reserve(predictions.size());
  for (const PredictionRecord& p : predictions) right.emplace_back(p.uid, p);
  return join_impl(items, right);
}

JoinResult<CategorySet> join_by_uid(
    const std::vector<ItemRecord>& items,
    const std::vector<std::pair<std::string, CategorySet>>& sets) {
  return join_impl(items, sets);
}

}  // namespace nlid
