#include "nlid/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "nlid/agreement.hpp"
#include "nlid/io.hpp"
#include "nlid/metrics.hpp"

namespace nlid::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const IoError& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitIo;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitDomain;
  }
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return in;
}

void ensure_out_dir(const std::string& out_dir) {
  if (out_dir.empty()) throw std::invalid_argument("an output directory is required");
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory '" + out_dir + "': " + ec.message());
}

void print_diagnostics(const std::vector<Diagnostic>& diagnostics,
                       const std::string& path, std::ostream& err) {
  for (const Diagnostic& d : diagnostics) err << path << ": " << d.format() << "\n";
}

ManifestInput manifest_input(const std::string& path) {
  return ManifestInput{path, sha256_file(path)};
}

std::uint64_t parse_seed_text(const std::string& text) {
  return std::stoull(text);
}

RelabelPolicy load_policy(const std::string& path) {
  RelabelPolicy policy;
  if (path.empty()) return policy;
  const json obj = json::parse(read_file(path));
  auto get = [&](const char* key, int fallback) {
    return obj.contains(key) ? obj.at(key).get<int>() : fallback;
  };
  policy.chaos_single_min_votes = get("chaos_single_min_votes", policy.chaos_single_min_votes);
  policy.chaos_disagree_max_votes =
      get("chaos_disagree_max_votes", policy.chaos_disagree_max_votes);
  policy.chaos_multilabel_min_votes =
      get("chaos_multilabel_min_votes", policy.chaos_multilabel_min_votes);
  policy.mnli_unanimous = get("mnli_unanimous", policy.mnli_unanimous);
  policy.mnli_complicated_min_votes =
      get("mnli_complicated_min_votes", policy.mnli_complicated_min_votes);
  policy.mnli_multilabel_min_votes =
      get("mnli_multilabel_min_votes", policy.mnli_multilabel_min_votes);
  policy.validate();
  return policy;
}

json policy_to_json(const RelabelPolicy& policy) {
  return json{{"chaos_single_min_votes", policy.chaos_single_min_votes},
              {"chaos_disagree_max_votes", policy.chaos_disagree_max_votes},
              {"chaos_multilabel_min_votes", policy.chaos_multilabel_min_votes},
              {"mnli_unanimous", policy.mnli_unanimous},
              {"mnli_complicated_min_votes", policy.mnli_complicated_min_votes},
              {"mnli_multilabel_min_votes", policy.mnli_multilabel_min_votes}};
}

std::string counts_row(std::string_view name, const CombinationCounts& table) {
  std::ostringstream os;
  os << name;
  for (long v : table.counts) os << ',' << v;
  os << ',' << table.complicated_total() << "\n";
  return os.str();
}

std::vector<LabeledItem> read_labeled(const std::string& path, std::ostream& err) {
  std::ifstream in = open_input(path);
  ParseResult<LabeledItem> parsed = parse_labeled_jsonl(in);
  print_diagnostics(parsed.diagnostics, path, err);
  if (parsed.records.empty())
    throw std::invalid_argument("'" + path + "' contains no usable labeled items");
  return std::move(parsed.records);
}

std::vector<ItemRecord> read_items(const std::string& path, const std::string& format,
                                   std::ostream& err) {
  std::ifstream in = open_input(path);
  ParseResult<ItemRecord> parsed;
  if (format == "chaos") {
    parsed = parse_chaosnli_jsonl(in);
  } else if (format == "mnli") {
    parsed = parse_mnli_jsonl(in);
  } else if (format == "labeled") {
    ParseResult<LabeledItem> labeled = parse_labeled_jsonl(in);
    for (LabeledItem& li : labeled.records) parsed.records.push_back(std::move(li.item));
    parsed.diagnostics = std::move(labeled.diagnostics);
  } else {
    throw std::invalid_argument("unknown items format '" + format +
                                "' (expected chaos, mnli, or labeled)");
  }
  print_diagnostics(parsed.diagnostics, path, err);
  if (parsed.records.empty())
    throw std::invalid_argument("'" + path + "' contains no usable items");
  return std::move(parsed.records);
}

std::vector<PredictionRecord> read_predictions(const std::string& path, std::ostream& err) {
  std::ifstream in = open_input(path);
  ParseResult<PredictionRecord> parsed = parse_predictions(in);
  print_diagnostics(parsed.diagnostics, path, err);
  if (parsed.records.empty())
    throw std::invalid_argument("'" + path + "' contains no usable predictions");
  return std::move(parsed.records);
}

std::vector<TaxonomyAnnotation> read_taxonomy(const std::string& path, std::ostream& err) {
  std::ifstream in = open_input(path);
  ParseResult<TaxonomyAnnotation> parsed = parse_taxonomy_annotations(in);
  print_diagnostics(parsed.diagnostics, path, err);
  if (parsed.records.empty())
    throw std::invalid_argument("'" + path + "' contains no usable annotations");
  return std::move(parsed.records);
}

std::string format_double(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.2f", value);
  return buffer;
}

}  // namespace

FourWayLabel prediction_to_fourway(const PredictionRecord& record,
                                   const ConversionConfig& cfg) {
  if (record.has_fourway()) return std::get<FourWayLabel>(record.payload);
  if (record.has_label_set())
    return multilabel_to_fourway(std::get<LabelSet>(record.payload));
  if (record.has_distribution())
    return multilabel_to_fourway(
        distribution_to_multilabel(std::get<LabelDistribution>(record.payload), cfg));
  return multilabel_to_fourway(
      sigmoid_probs_to_multilabel(std::get<std::array<double, 3>>(record.payload), cfg));
}

std::optional<LabelSet> prediction_to_multilabel(const PredictionRecord& record,
                                                 const ConversionConfig& cfg) {
  if (record.has_fourway()) return std::nullopt;
  if (record.has_label_set()) return std::get<LabelSet>(record.payload);
  if (record.has_distribution())
    return distribution_to_multilabel(std::get<LabelDistribution>(record.payload), cfg);
  return sigmoid_probs_to_multilabel(std::get<std::array<double, 3>>(record.payload), cfg);
}

int cmd_validate(const ValidateOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    if (opts.paths.empty()) throw std::invalid_argument("no input paths given");
    const ParseOptions parse_opts{opts.strict};
    long total_records = 0;
    long total_diagnostics = 0;
    for (const std::string& path : opts.paths) {
      std::ifstream in = open_input(path);
      std::size_t n_records = 0;
      std::vector<Diagnostic> diagnostics;
      if (opts.format == "chaos") {
        auto parsed = parse_chaosnli_jsonl(in, parse_opts);
        n_records = parsed.records.size();
        diagnostics = std::move(parsed.diagnostics);
      } else if (opts.format == "mnli") {
        auto parsed = parse_mnli_jsonl(in, parse_opts);
        n_records = parsed.records.size();
        diagnostics = std::move(parsed.diagnostics);
      } else if (opts.format == "taxonomy") {
        auto parsed = parse_taxonomy_annotations(in, parse_opts);
        n_records = parsed.records.size();
        diagnostics = std::move(parsed.diagnostics);
      } else if (opts.format == "predictions") {
        auto parsed = parse_predictions(in, parse_opts);
        n_records = parsed.records.size();
        diagnostics = std::move(parsed.diagnostics);
      } else {
        throw std::invalid_argument("unknown format '" + opts.format + "'");
      }
      print_diagnostics(diagnostics, path, err);
      out << path << ": " << n_records << " records, " << diagnostics.size()
          << " diagnostics\n";
      total_records += static_cast<long>(n_records);
      total_diagnostics += static_cast<long>(diagnostics.size());
    }
    if (opts.paths.size() > 1)
      out << "total: " << total_records << " records, " << total_diagnostics
          << " diagnostics\n";
    return kExitOk;
  });
}

int cmd_relabel(const RelabelOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    if (opts.chaos_paths.empty() && opts.mnli_paths.empty())
      throw std::invalid_argument("at least one --chaos or --mnli input is required");
    ensure_out_dir(opts.out_dir);
    RelabelPolicy policy = load_policy(opts.policy_path);
    if (opts.chaos_single_min) policy.chaos_single_min_votes = *opts.chaos_single_min;
    if (opts.chaos_disagree_max) policy.chaos_disagree_max_votes = *opts.chaos_disagree_max;
    if (opts.chaos_multilabel_min)
      policy.chaos_multilabel_min_votes = *opts.chaos_multilabel_min;
    if (opts.mnli_complicated_min)
      policy.mnli_complicated_min_votes = *opts.mnli_complicated_min;
    if (opts.mnli_multilabel_min)
      policy.mnli_multilabel_min_votes = *opts.mnli_multilabel_min;
    policy.validate();
    const ParseOptions parse_opts{opts.strict};

    std::vector<ItemRecord> chaos_items;
    for (const std::string& path : opts.chaos_paths) {
      std::ifstream in = open_input(path);
      auto parsed = parse_chaosnli_jsonl(in, parse_opts);
      print_diagnostics(parsed.diagnostics, path, err);
      for (ItemRecord& item : parsed.records) chaos_items.push_back(std::move(item));
    }
    std::set<std::string> chaos_uids;
    for (const ItemRecord& item : chaos_items) chaos_uids.insert(item.uid);

    std::vector<ItemRecord> mnli_items;
    long overlap_excluded = 0;
    for (const std::string& path : opts.mnli_paths) {
      std::ifstream in = open_input(path);
      auto parsed = parse_mnli_jsonl(in, parse_opts);
      print_diagnostics(parsed.diagnostics, path, err);
      for (ItemRecord& item : parsed.records) {
        if (!opts.include_overlap && chaos_uids.count(item.uid)) {
          ++overlap_excluded;
          continue;
        }
        mnli_items.push_back(std::move(item));
      }
    }

    std::vector<ItemRecord> all_items;
    all_items.reserve(chaos_items.size() + mnli_items.size());
    for (ItemRecord& item : chaos_items) all_items.push_back(std::move(item));
    for (ItemRecord& item : mnli_items) all_items.push_back(std::move(item));

    RelabelSummary summary = relabel_dataset(all_items, policy);

    std::vector<LabeledItem> chaos_labeled;
    std::vector<LabeledItem> mnli_labeled;
    for (const LabeledItem& li : summary.items)
      (li.item.source == Source::Chaos100 ? chaos_labeled : mnli_labeled).push_back(li);

    std::vector<LabeledItem> final_items = summary.items;
    std::optional<long> target;
    if (!opts.balance_target.empty()) {
      target = opts.balance_target == "auto"
                   ? auto_balance_target(summary.items)
                   : std::stol(opts.balance_target);
      final_items = downsample_balance(summary.items, *target, opts.seed);
    }

    std::ostringstream labeled;
    for (const LabeledItem& li : final_items) labeled << labeled_to_jsonl(li) << "\n";
    atomic_write(fs::path(opts.out_dir) / "labeled.jsonl", labeled.str());

    std::ostringstream counts;
    counts << "dataset,E,N,C,EN,NC,EC,ENC,Complicated\n";
    if (!chaos_labeled.empty())
      counts << counts_row("chaos", count_combinations(chaos_labeled));
    if (!mnli_labeled.empty())
      counts << counts_row("mnli", count_combinations(mnli_labeled));
    counts << counts_row("combined", count_combinations(final_items));
    atomic_write(fs::path(opts.out_dir) / "counts.csv", counts.str());

    std::ostringstream discards;
    discards << "reason,count\n";
    for (const auto& [reason, count] : summary.discard_counts)
      discards << reason << ',' << count << "\n";
    if (overlap_excluded > 0)
      discards << "chaos-overlap-excluded," << overlap_excluded << "\n";
    atomic_write(fs::path(opts.out_dir) / "discards.csv", discards.str());

    RunManifest manifest;
    manifest.command = "relabel";
    json config;
    config["policy"] = policy_to_json(policy);
    config["balance_target"] = opts.balance_target;
    if (target) config["resolved_balance_target"] = *target;
    config["include_overlap"] = opts.include_overlap;
    config["overlap_excluded"] = overlap_excluded;
    config["strict"] = opts.strict;
    manifest.config_json = config.dump();
    for (const std::string& path : opts.chaos_paths)
      manifest.inputs.push_back(manifest_input(path));
    for (const std::string& path : opts.mnli_paths)
      manifest.inputs.push_back(manifest_input(path));
    manifest.seed = opts.seed;
    manifest.has_seed = true;
    write_manifest(opts.out_dir, manifest);

    out << "labeled " << final_items.size() << " items ("
        << summary.items.size() - final_items.size() << " dropped by balancing); "
        << "discarded";
    long discarded = 0;
    for (const auto& [reason, count] : summary.discard_counts) discarded += count;
    out << " " << discarded << "\n";
    return kExitOk;
  });
}

int cmd_split(const SplitOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    ensure_out_dir(opts.out_dir);
    const std::vector<LabeledItem> items = read_labeled(opts.data_path, err);

    SplitSpec spec;
    spec.seed = opts.seed;
    if (opts.stratify_by == "combination")
      spec.stratify_by = StratifyBy::MultilabelCombination;
    else if (opts.stratify_by == "fourway")
      spec.stratify_by = StratifyBy::FourWay;
    else
      throw std::invalid_argument("unknown stratify-by '" + opts.stratify_by + "'");

    auto parse_triple = [](const std::string& text) {
      std::array<std::string, 3> parts;
      std::istringstream is(text);
      for (int i = 0; i < 3; ++i)
        if (!std::getline(is, parts[static_cast<std::size_t>(i)], ','))
          throw std::invalid_argument("expected three comma-separated values, got '" +
                                      text + "'");
      return parts;
    };
    if (!opts.sizes.empty()) {
      const auto parts = parse_triple(opts.sizes);
      spec.sizes = {std::stol(parts[0]), std::stol(parts[1]), std::stol(parts[2])};
    }
    if (!opts.ratios.empty()) {
      const auto parts = parse_triple(opts.ratios);
      spec.ratios = {std::stod(parts[0]), std::stod(parts[1]), std::stod(parts[2])};
    }

    SplitResult split = stratified_split(items, spec);
    for (const std::string& warning : split.warnings) err << "warning: " << warning << "\n";

    const std::array<std::pair<const char*, const std::vector<LabeledItem>*>, 3> parts = {
        std::make_pair("train.jsonl", &split.train),
        std::make_pair("dev.jsonl", &split.dev),
        std::make_pair("test.jsonl", &split.test)};
    for (const auto& [name, part] : parts) {
      std::ostringstream os;
      for (const LabeledItem& li : *part) os << labeled_to_jsonl(li) << "\n";
      atomic_write(fs::path(opts.out_dir) / name, os.str());
    }

    RunManifest manifest;
    manifest.command = "split";
    json config;
    config["sizes"] = opts.sizes;
    config["ratios"] = opts.ratios;
    config["stratify_by"] = opts.stratify_by;
    config["resolved_sizes"] = {split.train.size(), split.dev.size(), split.test.size()};
    manifest.config_json = config.dump();
    manifest.inputs.push_back(manifest_input(opts.data_path));
    manifest.seed = opts.seed;
    manifest.has_seed = true;
    write_manifest(opts.out_dir, manifest);

    out << "split " << items.size() << " items into " << split.train.size() << "/"
        << split.dev.size() << "/" << split.test.size() << "\n";
    return kExitOk;
  });
}

int cmd_agree(const AgreeOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    const std::vector<TaxonomyAnnotation> rows = read_taxonomy(opts.taxonomy_path, err);
    AgreementReport report;
    if (opts.distance == "masi")
      report = krippendorff_alpha_masi(rows);
    else if (opts.distance == "nominal")
      report = krippendorff_alpha_nominal(rows);
    else
      throw std::invalid_argument("unknown distance '" + opts.distance +
                                  "' (expected masi or nominal)");

    json obj;
    obj["alpha"] = report.alpha;
    obj["observed_disagreement"] = report.observed_disagreement;
    obj["expected_disagreement"] = report.expected_disagreement;
    obj["n_units"] = report.n_units;
    obj["n_annotations"] = report.n_annotations;
    obj["distance"] = opts.distance;
    const std::string text = obj.dump(2) + "\n";
    out << text;

    if (!opts.out_dir.empty()) {
      ensure_out_dir(opts.out_dir);
      atomic_write(fs::path(opts.out_dir) / "agreement.json", text);
      RunManifest manifest;
      manifest.command = "agree";
      manifest.config_json = json{{"distance", opts.distance}}.dump();
      manifest.inputs.push_back(manifest_input(opts.taxonomy_path));
      write_manifest(opts.out_dir, manifest);
    }
    return kExitOk;
  });
}

namespace {

std::vector<std::pair<std::string, CategorySet>> aggregated_taxonomy(
    const std::string& path, std::ostream& err) {
  return aggregate_by_intersection(read_taxonomy(path, err));
}

void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument(message);
}

}  // namespace

int cmd_analyze(const AnalyzeOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    ensure_out_dir(opts.out_dir);
    RunManifest manifest;
    manifest.command = "analyze";
    json config;
    config["report"] = opts.report;
    config["entropy_base"] = opts.entropy_base;
    config["converge_min_votes"] = opts.converge_min_votes;
    config["sample_std"] = opts.sample_std;
    const ConvergenceOptions conv_opts{opts.converge_min_votes, opts.sample_std};

    if (opts.report == "combinations") {
      require(!opts.taxonomy_path.empty(),
              "the combinations report needs --taxonomy <file>");
      const auto aggregated = aggregated_taxonomy(opts.taxonomy_path, err);
      std::vector<CategorySet> sets;
      sets.reserve(aggregated.size());
      for (const auto& [uid, set] : aggregated) sets.push_back(set);
      const auto rows = category_combination_frequencies(sets);
      std::ostringstream os;
      os << "combination,count,percentage\n";
      for (const CombinationRow& row : rows) {
        const std::string name =
            row.combination.empty() ? "None" : row.combination.to_string();
        os << name << ',' << row.count << ',' << format_double(row.percentage) << "\n";
      }
      atomic_write(fs::path(opts.out_dir) / "combinations.csv", os.str());
      manifest.inputs.push_back(manifest_input(opts.taxonomy_path));
      out << "combinations report over " << sets.size() << " items\n";
    } else if (opts.report == "convergence") {
      require(!opts.items_path.empty() && !opts.taxonomy_path.empty(),
              "the convergence report needs --items and --taxonomy");
      const auto items = read_items(opts.items_path, opts.items_format, err);
      const auto aggregated = aggregated_taxonomy(opts.taxonomy_path, err);
      const auto joined = join_by_uid(items, aggregated);
      require(!joined.joined.empty(), "no items joined with taxonomy annotations");
      if (!joined.unmatched_items.empty())
        err << "note: " << joined.unmatched_items.size() << " items without annotations\n";
      if (!joined.unmatched_right.empty())
        err << "note: " << joined.unmatched_right.size()
            << " annotated uids missing from items\n";
      std::vector<CategorizedItem> categorized;
      categorized.reserve(joined.joined.size());
      for (const auto& [item, set] : joined.joined)
        categorized.push_back(CategorizedItem{item.counts, set});
      const ConvergenceResult result = convergence_stats(categorized, conv_opts);
      for (TaxonomyCategory c : result.omitted)
        err << "note: category " << category_name(c) << " has no items; omitted\n";
      std::ostringstream os;
      os << "category,converge_pct,total_items,mean_majority,std_majority\n";
      for (const ConvergenceRow& row : result.rows)
        os << category_name(row.category) << ',' << format_double(row.converge_pct)
           << ',' << row.total_items << ',' << format_double(row.mean_majority) << ','
           << format_double(row.std_majority) << "\n";
      atomic_write(fs::path(opts.out_dir) / "convergence.csv", os.str());
      manifest.inputs.push_back(manifest_input(opts.items_path));
      manifest.inputs.push_back(manifest_input(opts.taxonomy_path));
      out << "convergence report over " << categorized.size() << " items\n";
    } else if (opts.report == "entropy") {
      require(!opts.items_path.empty() && !opts.pred_path.empty(),
              "the entropy report needs --items and --pred");
      const auto items = read_items(opts.items_path, opts.items_format, err);
      const auto predictions = read_predictions(opts.pred_path, err);
      const auto joined = join_by_uid(items, predictions);
      require(!joined.joined.empty(), "no items joined with predictions");
      std::vector<double> entropies;
      std::vector<FourWayLabel> groups;
      entropies.reserve(joined.joined.size());
      for (const auto& [item, pred] : joined.joined) {
        entropies.push_back(
            entropy(counts_to_distribution(item.counts), opts.entropy_base));
        groups.push_back(prediction_to_fourway(pred, opts.conversion));
      }
      const EntropyByGroup result = entropy_by_group(entropies, groups);
      std::ostringstream os;
      os << "group,n,min,q1,median,q3,max,mean\n";
      char buffer[256];
      for (const GroupSummary& s : result.groups) {
        std::snprintf(buffer, sizeof(buffer), "%s,%ld,%.6g,%.6g,%.6g,%.6g,%.6g,%.6g",
                      std::string(fourway_name(s.group)).c_str(), s.n, s.min, s.q1,
                      s.median, s.q3, s.max, s.mean);
        os << buffer << "\n";
      }
      atomic_write(fs::path(opts.out_dir) / "entropy_summary.csv", os.str());
      std::ostringstream pvalues;
      pvalues << "group_a,group_b,p_value\n";
      for (const auto& [group, p] : result.complicated_vs) {
        std::snprintf(buffer, sizeof(buffer), "Complicated,%s,%.6g",
                      std::string(fourway_name(group)).c_str(), p);
        pvalues << buffer << "\n";
      }
      atomic_write(fs::path(opts.out_dir) / "entropy_pvalues.csv", pvalues.str());
      manifest.inputs.push_back(manifest_input(opts.items_path));
      manifest.inputs.push_back(manifest_input(opts.pred_path));
      out << "entropy report over " << entropies.size() << " items\n";
    } else if (opts.report == "scatter") {
      require(!opts.items_path.empty() && !opts.taxonomy_path.empty() &&
                  !opts.pred_path.empty() && !opts.pred_ml_path.empty(),
              "the scatter report needs --items, --taxonomy, --pred, and --pred-ml");
      const auto items = read_items(opts.items_path, opts.items_format, err);
      const auto aggregated = aggregated_taxonomy(opts.taxonomy_path, err);
      const auto with_categories = join_by_uid(items, aggregated);
      require(!with_categories.joined.empty(), "no items joined with taxonomy annotations");
      const auto preds4 = read_predictions(opts.pred_path, err);
      const auto predsml = read_predictions(opts.pred_ml_path, err);
      std::map<std::string, const PredictionRecord*> pred4_by_uid;
      for (const PredictionRecord& p : preds4) pred4_by_uid[p.uid] = &p;
      std::map<std::string, const PredictionRecord*> predml_by_uid;
      for (const PredictionRecord& p : predsml) predml_by_uid[p.uid] = &p;

      std::vector<ScatterItem> scatter_items;
      long skipped = 0;
      for (const auto& [item, categories] : with_categories.joined) {
        auto p4 = pred4_by_uid.find(item.uid);
        auto pml = predml_by_uid.find(item.uid);
        if (p4 == pred4_by_uid.end() || pml == predml_by_uid.end()) {
          ++skipped;
          continue;
        }
        auto multilabel = prediction_to_multilabel(*pml->second, opts.conversion);
        require(multilabel.has_value(),
                "multilabel predictions file contains a bare 4-way payload for uid " +
                    item.uid + "; it cannot be expanded to a label set");
        scatter_items.push_back(ScatterItem{
            item.counts, categories, prediction_to_fourway(*p4->second, opts.conversion),
            *multilabel});
      }
      require(!scatter_items.empty(), "no items joined with both prediction files");
      if (skipped > 0) err << "note: " << skipped << " annotated items without predictions\n";
      const ScatterResult result = scatter_data(scatter_items, conv_opts);
      for (TaxonomyCategory c : result.omitted)
        err << "note: category " << category_name(c) << " has no items; omitted\n";
      std::ostringstream os;
      os << "category,total_items,converge_pct,pct_predicted_complicated,pct_predicted_multilabel\n";
      for (const ScatterRow& row : result.rows)
        os << category_name(row.category) << ',' << row.total_items << ','
           << format_double(row.converge_pct) << ','
           << format_double(row.pct_predicted_complicated) << ','
           << format_double(row.pct_predicted_multilabel) << "\n";
      atomic_write(fs::path(opts.out_dir) / "scatter.csv", os.str());
      manifest.inputs.push_back(manifest_input(opts.items_path));
      manifest.inputs.push_back(manifest_input(opts.taxonomy_path));
      manifest.inputs.push_back(manifest_input(opts.pred_path));
      manifest.inputs.push_back(manifest_input(opts.pred_ml_path));
      out << "scatter report over " << scatter_items.size() << " items\n";
    } else if (opts.report == "stacked") {
      require(!opts.items_path.empty(), "the stacked report needs --items");
      auto items = read_items(opts.items_path, opts.items_format, err);
      struct StackedRow {
        std::string uid;
        NLILabel majority_label;
        std::array<std::pair<int, NLILabel>, 3> ordered;  // votes descending
      };
      std::vector<StackedRow> rows;
      rows.reserve(items.size());
      for (const ItemRecord& item : items) {
        StackedRow row;
        row.uid = item.uid;
        const MajorityResult m = majority(item.counts);
        row.majority_label = m.label;
        std::array<std::pair<int, NLILabel>, 3> ordered = {
            std::make_pair(item.counts.e, NLILabel::Entailment),
            std::make_pair(item.counts.n, NLILabel::Neutral),
            std::make_pair(item.counts.c, NLILabel::Contradiction)};
        std::stable_sort(ordered.begin(), ordered.end(),
                         [](const auto& a, const auto& b) { return a.first > b.first; });
        row.ordered = ordered;
        rows.push_back(std::move(row));
      }
      std::stable_sort(rows.begin(), rows.end(), [](const StackedRow& a, const StackedRow& b) {
        if (a.majority_label != b.majority_label) return a.majority_label < b.majority_label;
        if (a.ordered[0].first != b.ordered[0].first)
          return a.ordered[0].first > b.ordered[0].first;
        return a.uid < b.uid;
      });
      std::ostringstream os;
      os << "uid,majority,votes1,label1,votes2,label2,votes3,label3\n";
      for (const StackedRow& row : rows) {
        os << row.uid << ',' << nli_name(row.majority_label);
        for (const auto& [votes, label] : row.ordered)
          os << ',' << votes << ',' << nli_name(label);
        os << "\n";
      }
      atomic_write(fs::path(opts.out_dir) / "stacked.csv", os.str());
      manifest.inputs.push_back(manifest_input(opts.items_path));
      out << "stacked report over " << rows.size() << " items\n";
    } else {
      throw std::invalid_argument(
          "unknown report '" + opts.report +
          "' (expected combinations, convergence, entropy, scatter, or stacked)");
    }

    manifest.config_json = config.dump();
    write_manifest(opts.out_dir, manifest);
    return kExitOk;
  });
}

int cmd_train(const TrainOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    ensure_out_dir(opts.out_dir);
    const Head head = head_from_name(opts.head);
    TrainConfig cfg = TrainConfig::defaults_for(head);
    cfg.seed = opts.seed;
    if (opts.lr) cfg.initial_lr = *opts.lr;
    if (opts.lr_decay) cfg.lr_decay_factor = *opts.lr_decay;
    if (opts.plateau) cfg.plateau_epochs_for_decay = *opts.plateau;
    if (opts.patience) cfg.early_stop_patience = *opts.patience;
    if (opts.max_epochs) cfg.max_epochs = *opts.max_epochs;
    if (opts.batch_size) cfg.batch_size = *opts.batch_size;
    if (opts.mixup_alpha) cfg.mixup_alpha = *opts.mixup_alpha;
    if (opts.hash_dim) cfg.features.hash_dim = *opts.hash_dim;
    cfg.validate();

    const std::vector<LabeledItem> train_labeled = read_labeled(opts.train_path, err);
    const std::vector<LabeledItem> dev_labeled = read_labeled(opts.dev_path, err);
    std::vector<TrainItem> train_items;
    train_items.reserve(train_labeled.size());
    for (const LabeledItem& li : train_labeled)
      train_items.push_back(make_train_item(li, cfg.features));
    std::vector<TrainItem> dev_items;
    dev_items.reserve(dev_labeled.size());
    for (const LabeledItem& li : dev_labeled)
      dev_items.push_back(make_train_item(li, cfg.features));

    const TrainResult result = train(train_items, dev_items, cfg);

    std::ostringstream model;
    save_model(model, result.params, head, config_hash(cfg));
    atomic_write(fs::path(opts.out_dir) / "model.txt", model.str());
    atomic_write(fs::path(opts.out_dir) / "history.csv", history_to_csv(result.history));

    RunManifest manifest;
    manifest.command = "train";
    json config;
    config["head"] = std::string(head_name(head));
    config["initial_lr"] = cfg.initial_lr;
    config["lr_decay_factor"] = cfg.lr_decay_factor;
    config["plateau_epochs_for_decay"] = cfg.plateau_epochs_for_decay;
    config["max_epochs"] = cfg.max_epochs;
    config["early_stop_patience"] = cfg.early_stop_patience;
    config["batch_size"] = cfg.batch_size;
    config["mixup_alpha"] = cfg.mixup_alpha;
    config["hash_dim"] = cfg.features.hash_dim;
    manifest.config_json = config.dump();
    manifest.inputs.push_back(manifest_input(opts.train_path));
    manifest.inputs.push_back(manifest_input(opts.dev_path));
    manifest.seed = opts.seed;
    manifest.has_seed = true;
    write_manifest(opts.out_dir, manifest);

    out << "trained " << head_name(head) << ": best epoch " << result.best_epoch
        << ", dev macro F1 " << format_double(result.best_dev_f1) << " ("
        << result.history.size() << " epochs)\n";
    return kExitOk;
  });
}

int cmd_predict(const PredictOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    ensure_out_dir(opts.out_dir);
    std::ifstream model_in = open_input(opts.model_path);
    const LoadedModel model = load_model(model_in);

    // Accept any JSONL with uid/premise/hypothesis (labeled or raw item files).
    std::ifstream data_in = open_input(opts.data_path);
    std::vector<std::pair<std::string, FeatureVector>> rows;
    const FeatureConfig feature_config{model.params.hash_dim};
    std::string line;
    int lineno = 0;
    while (std::getline(data_in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") == std::string::npos) continue;
      const json obj = json::parse(line, nullptr, false);
      if (obj.is_discarded() || !obj.is_object() || !obj.contains("uid") ||
          !obj.contains("premise") || !obj.contains("hypothesis")) {
        err << opts.data_path << ": line " << lineno
            << ": expected uid/premise/hypothesis; skipped\n";
        continue;
      }
      rows.emplace_back(obj["uid"].get<std::string>(),
                        extract_features(obj["premise"].get<std::string>(),
                                         obj["hypothesis"].get<std::string>(),
                                         feature_config));
    }
    if (rows.empty()) throw std::invalid_argument("no usable items in '" + opts.data_path + "'");

    std::vector<FeatureVector> features;
    features.reserve(rows.size());
    for (const auto& [uid, fv] : rows) features.push_back(fv);
    const ModelOutput output = predict(model.params, features, model.head);

    std::ostringstream preds;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      PredictionRecord record;
      record.uid = rows[i].first;
      const auto& probs = output.probs[i];
      if (model.head == Head::Softmax4) {
        record.payload = fourway_argmax(probs);
      } else if (model.head == Head::Sigmoid3) {
        record.payload = std::array<double, 3>{probs[0], probs[1], probs[2]};
      } else {
        record.payload = LabelDistribution{probs[0], probs[1], probs[2]};
      }
      preds << prediction_to_jsonl(record) << "\n";
    }
    atomic_write(fs::path(opts.out_dir) / "predictions.jsonl", preds.str());

    RunManifest manifest;
    manifest.command = "predict";
    manifest.config_json = json{{"head", std::string(head_name(model.head))}}.dump();
    manifest.inputs.push_back(manifest_input(opts.model_path));
    manifest.inputs.push_back(manifest_input(opts.data_path));
    write_manifest(opts.out_dir, manifest);

    out << "predicted " << rows.size() << " items with " << head_name(model.head) << "\n";
    return kExitOk;
  });
}

int cmd_eval(const EvalOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    ensure_out_dir(opts.out_dir);
    RunManifest manifest;
    manifest.command = "eval";
    json config;
    config["dist_threshold"] = opts.conversion.dist_threshold;
    config["sigmoid_threshold"] = opts.conversion.sigmoid_threshold;

    if (!opts.compare_a.empty() || !opts.compare_b.empty()) {
      require(!opts.compare_a.empty() && !opts.compare_b.empty(),
              "--compare needs two prediction files");
      const auto preds4 = read_predictions(opts.compare_a, err);
      const auto predsml = read_predictions(opts.compare_b, err);
      std::map<std::string, const PredictionRecord*> by_uid;
      for (const PredictionRecord& p : predsml) {
        if (!by_uid.emplace(p.uid, &p).second)
          throw std::invalid_argument("duplicate uid '" + p.uid + "'");
      }
      std::vector<FourWayLabel> fourway;
      std::vector<LabelSet> multilabel;
      long unmatched = 0;
      for (const PredictionRecord& p : preds4) {
        auto it = by_uid.find(p.uid);
        if (it == by_uid.end()) {
          ++unmatched;
          continue;
        }
        auto set = prediction_to_multilabel(*it->second, opts.conversion);
        require(set.has_value(),
                "second --compare file has a bare 4-way payload for uid " + p.uid +
                    "; a 4-way label cannot be expanded to a label set");
        fourway.push_back(prediction_to_fourway(p, opts.conversion));
        multilabel.push_back(*set);
      }
      require(!fourway.empty(), "no shared uids between the two prediction files");
      if (unmatched > 0) err << "note: " << unmatched << " uids without a counterpart\n";
      const ContingencyMatrix matrix = contingency(fourway, multilabel);
      atomic_write(fs::path(opts.out_dir) / "contingency.csv", contingency_to_csv(matrix));
      config["mode"] = "compare";
      manifest.config_json = config.dump();
      manifest.inputs.push_back(manifest_input(opts.compare_a));
      manifest.inputs.push_back(manifest_input(opts.compare_b));
      write_manifest(opts.out_dir, manifest);
      out << "contingency over " << matrix.total() << " items\n";
      return kExitOk;
    }

    require(!opts.gold_path.empty() && !opts.pred_paths.empty(),
            "eval needs --gold and at least one --pred file");
    require(opts.scheme == "fourway" || opts.scheme == "multilabel",
            "unknown scheme '" + opts.scheme + "' (expected fourway or multilabel)");
    const std::vector<LabeledItem> gold = read_labeled(opts.gold_path, err);
    std::vector<ItemRecord> gold_items;
    gold_items.reserve(gold.size());
    for (const LabeledItem& li : gold) gold_items.push_back(li.item);
    std::map<std::string, const LabeledItem*> gold_by_uid;
    for (const LabeledItem& li : gold) gold_by_uid[li.item.uid] = &li;

    std::vector<EvalReport> reports;
    for (const std::string& pred_path : opts.pred_paths) {
      const auto predictions = read_predictions(pred_path, err);
      const auto joined = join_by_uid(gold_items, predictions);
      require(!joined.joined.empty(),
              "no gold items matched predictions in '" + pred_path + "'");
      if (!joined.unmatched_items.empty())
        err << "note: " << joined.unmatched_items.size() << " gold items without predictions\n";
      if (!joined.unmatched_right.empty())
        err << "note: " << joined.unmatched_right.size() << " predictions without gold items\n";

      if (opts.scheme == "fourway") {
        std::vector<FourWayLabel> g;
        std::vector<FourWayLabel> p;
        for (const auto& [item, pred] : joined.joined) {
          g.push_back(gold_by_uid.at(item.uid)->labels.fourway);
          p.push_back(prediction_to_fourway(pred, opts.conversion));
        }
        reports.push_back(fourway_report(g, p));
      } else {
        std::vector<LabelSet> g;
        std::vector<LabelSet> p;
        for (const auto& [item, pred] : joined.joined) {
          auto set = prediction_to_multilabel(pred, opts.conversion);
          require(set.has_value(),
                  "prediction for uid " + item.uid +
                      " is a bare 4-way label; it cannot be scored against "
                      "multilabel gold (chain: probs -> threshold " +
                      std::to_string(opts.conversion.dist_threshold) +
                      ", label_probs -> threshold " +
                      std::to_string(opts.conversion.sigmoid_threshold) +
                      ", labels -> as-is)");
          g.push_back(gold_by_uid.at(item.uid)->labels.multilabel);
          p.push_back(*set);
        }
        reports.push_back(multilabel_report(g, p));
      }
    }

    const EvalReport final_report =
        reports.size() == 1 ? reports.front() : aggregate_reports(reports);
    atomic_write(fs::path(opts.out_dir) / "report.json", report_to_json(final_report));
    atomic_write(fs::path(opts.out_dir) / "report.csv", report_to_csv(final_report));
    if (final_report.confusion)
      atomic_write(fs::path(opts.out_dir) / "confusion.csv",
                   confusion_to_csv(*final_report.confusion));
    if (reports.size() > 1) {
      for (std::size_t i = 0; i < reports.size(); ++i)
        atomic_write(fs::path(opts.out_dir) /
                         ("report_run" + std::to_string(i + 1) + ".json"),
                     report_to_json(reports[i]));
    }

    config["mode"] = "eval";
    config["scheme"] = opts.scheme;
    config["runs"] = reports.size();
    manifest.config_json = config.dump();
    manifest.inputs.push_back(manifest_input(opts.gold_path));
    for (const std::string& pred_path : opts.pred_paths)
      manifest.inputs.push_back(manifest_input(pred_path));
    write_manifest(opts.out_dir, manifest);

    out << opts.scheme << " accuracy " << format_double(final_report.accuracy)
        << ", macro F1 " << format_double(final_report.macro_f1) << " over "
        << final_report.n_items << " items\n";
    return kExitOk;
  });
}

}  // namespace nlid::cli
