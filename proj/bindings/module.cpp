#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "nlid/agreement.hpp"
#include "nlid/baseline.hpp"
#include "nlid/io.hpp"
#include "nlid/labels.hpp"
#include "nlid/metrics.hpp"
#include "nlid/relabel.hpp"

namespace py = pybind11;

namespace {

nlid::AnnotationCounts counts_from(const std::vector<int>& counts) {
  if (counts.size() != 3)
    throw std::invalid_argument("counts must have three entries (E, N, C)");
  return nlid::AnnotationCounts{counts[0], counts[1], counts[2]};
}

nlid::LabelDistribution dist_from(const std::vector<double>& probs) {
  if (probs.size() != 3)
    throw std::invalid_argument("distribution must have three entries (E, N, C)");
  return nlid::LabelDistribution{probs[0], probs[1], probs[2]};
}

nlid::CategorySet category_set_from(const std::vector<std::string>& names) {
  nlid::CategorySet set;
  for (const std::string& name : names) set.insert(nlid::category_from_name(name));
  return set;
}

py::dict report_to_dict(const nlid::EvalReport& report) {
  py::dict out;
  out["scheme"] = report.scheme;
  out["n_items"] = report.n_items;
  out["accuracy"] = report.accuracy;
  out["macro_precision"] = report.macro_precision;
  out["macro_recall"] = report.macro_recall;
  out["macro_f1"] = report.macro_f1;
  py::dict per_class;
  for (const nlid::ClassScore& score : report.per_class) {
    py::dict entry;
    entry["precision"] = score.precision;
    entry["recall"] = score.recall;
    entry["f1"] = score.f1;
    entry["support_gold"] = score.support_gold;
    entry["support_pred"] = score.support_pred;
    per_class[py::str(score.label)] = entry;
  }
  out["per_class"] = per_class;
  if (report.exact_by_gold_count) {
    py::dict buckets;
    for (int k = 0; k < 3; ++k) {
      const auto& bucket = (*report.exact_by_gold_count)[static_cast<std::size_t>(k)];
      py::dict entry;
      entry["n_items"] = bucket.n_items;
      entry["accuracy"] = bucket.accuracy;
      buckets[py::str(std::to_string(k + 1))] = entry;
    }
    out["exact_match_by_gold_count"] = buckets;
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_nlid, m) {
  m.doc() = "NLI disagreement toolkit: label conversions, agreement statistics, "
            "relabeling rules, and evaluation metrics";
  m.attr("__version__") = std::string(nlid::kToolkitVersion);

  m.def(
      "counts_to_distribution",
      [](const std::vector<int>& counts) {
        const nlid::LabelDistribution d = nlid::counts_to_distribution(counts_from(counts));
        return std::vector<double>{d.e, d.n, d.c};
      },
      py::arg("counts"),
      "Normalize [E,N,C] vote counts into a probability distribution.");

  m.def(
      "distribution_to_multilabel",
      [](const std::vector<double>& probs, double threshold) {
        nlid::ConversionConfig cfg;
        cfg.dist_threshold = threshold;
        return nlid::distribution_to_multilabel(dist_from(probs), cfg).to_string();
      },
      py::arg("probs"), py::arg("threshold") = 0.2,
      "Labels with probability at least `threshold`, e.g. 'EN'.");

  m.def(
      "multilabel_to_fourway",
      [](const std::string& labels) {
        return std::string(
            nlid::fourway_name(nlid::multilabel_to_fourway(nlid::LabelSet::parse(labels))));
      },
      py::arg("labels"),
      "'Complicated' for two or more labels, the single label otherwise.");

  m.def(
      "sigmoid_probs_to_multilabel",
      [](const std::vector<double>& probs, double threshold) {
        if (probs.size() != 3)
          throw std::invalid_argument("expected three per-label probabilities");
        nlid::ConversionConfig cfg;
        cfg.sigmoid_threshold = threshold;
        return nlid::sigmoid_probs_to_multilabel({probs[0], probs[1], probs[2]}, cfg)
            .to_string();
      },
      py::arg("probs"), py::arg("threshold") = 0.5,
      "Labels with probability strictly above `threshold`; argmax fallback.");

  m.def(
      "entropy",
      [](const std::vector<double>& probs, double base) {
        return nlid::entropy(dist_from(probs), base);
      },
      py::arg("probs"), py::arg("base") = 2.0);

  m.def(
      "majority",
      [](const std::vector<int>& counts) {
        const nlid::MajorityResult m = nlid::majority(counts_from(counts));
        return py::make_tuple(std::string(nlid::nli_name(m.label)), m.votes, m.tie);
      },
      py::arg("counts"), "(label, votes, tie) of the most frequent label.");

  m.def(
      "relabel_counts",
      [](const std::vector<int>& counts, const std::string& source) {
        nlid::ItemRecord item;
        item.uid = "item";
        item.premise = "p";
        item.hypothesis = "h";
        item.counts = counts_from(counts);
        item.source = nlid::source_from_name(source);
        const nlid::RelabelOutcome outcome = nlid::relabel_item(item);
        py::dict out;
        out["discarded"] = !outcome.labels.has_value();
        if (outcome.labels) {
          out["fourway"] = std::string(nlid::fourway_name(outcome.labels->fourway));
          out["multilabel"] = outcome.labels->multilabel.to_string();
        } else {
          out["reason"] = outcome.discard_reason;
        }
        return out;
      },
      py::arg("counts"), py::arg("source") = "chaos100",
      "Apply the relabeling rules to one [E,N,C] count vector.");

  m.def(
      "masi_distance",
      [](const std::vector<std::string>& a, const std::vector<std::string>& b) {
        return nlid::masi_distance(category_set_from(a), category_set_from(b));
      },
      py::arg("a"), py::arg("b"),
      "MASI distance between two sets of taxonomy category names.");

  m.def(
      "krippendorff_alpha",
      [](const std::vector<std::tuple<std::string, std::string, std::vector<std::string>>>&
             rows,
         const std::string& distance) {
        std::vector<nlid::TaxonomyAnnotation> annotations;
        annotations.reserve(rows.size());
        for (const auto& [unit, annotator, names] : rows)
          annotations.push_back(
              nlid::TaxonomyAnnotation{unit, annotator, category_set_from(names)});
        const nlid::AgreementReport report =
            distance == "nominal" ? nlid::krippendorff_alpha_nominal(annotations)
                                  : nlid::krippendorff_alpha_masi(annotations);
        py::dict out;
        out["alpha"] = report.alpha;
        out["observed_disagreement"] = report.observed_disagreement;
        out["expected_disagreement"] = report.expected_disagreement;
        out["n_units"] = report.n_units;
        out["n_annotations"] = report.n_annotations;
        return out;
      },
      py::arg("rows"), py::arg("distance") = "masi",
      "Krippendorff's alpha over (unit, annotator, category names) rows.");

  m.def(
      "mann_whitney_two_sided",
      [](const std::vector<double>& a, const std::vector<double>& b) {
        const nlid::MannWhitneyResult result = nlid::mann_whitney_two_sided(a, b);
        return py::make_tuple(result.u, result.p);
      },
      py::arg("a"), py::arg("b"), "(U statistic, two-sided p-value).");

  m.def(
      "kl_divergence",
      [](const std::vector<double>& p, const std::vector<double>& q) {
        return nlid::kl_divergence(dist_from(p), dist_from(q));
      },
      py::arg("p"), py::arg("q"));

  m.def(
      "fourway_report",
      [](const std::vector<std::string>& gold, const std::vector<std::string>& pred) {
        std::vector<nlid::FourWayLabel> g;
        std::vector<nlid::FourWayLabel> p;
        g.reserve(gold.size());
        p.reserve(pred.size());
        for (const std::string& name : gold) g.push_back(nlid::fourway_from_name(name));
        for (const std::string& name : pred) p.push_back(nlid::fourway_from_name(name));
        return report_to_dict(nlid::fourway_report(g, p));
      },
      py::arg("gold"), py::arg("pred"),
      "4-way classification metrics from aligned gold/pred label lists.");

  m.def(
      "multilabel_report",
      [](const std::vector<std::string>& gold, const std::vector<std::string>& pred) {
        std::vector<nlid::LabelSet> g;
        std::vector<nlid::LabelSet> p;
        g.reserve(gold.size());
        p.reserve(pred.size());
        for (const std::string& text : gold) g.push_back(nlid::LabelSet::parse(text));
        for (const std::string& text : pred) p.push_back(nlid::LabelSet::parse(text));
        return report_to_dict(nlid::multilabel_report(g, p));
      },
      py::arg("gold"), py::arg("pred"),
      "Multilabel metrics from aligned gold/pred label-set strings.");

  m.def(
      "extract_features",
      [](const std::string& premise, const std::string& hypothesis, int hash_dim) {
        const nlid::FeatureVector fv =
            nlid::extract_features(premise, hypothesis, nlid::FeatureConfig{hash_dim});
        py::dict out;
        out["dense"] = std::vector<double>(fv.dense.begin(), fv.dense.end());
        out["hashed"] = fv.hashed;
        return out;
      },
      py::arg("premise"), py::arg("hypothesis"), py::arg("hash_dim") = 1 << 15);

  py::dict categories;
  for (nlid::TaxonomyCategory c : nlid::kTaxonomyCategories)
    categories[py::str(std::string(nlid::category_name(c)))] =
        std::string(nlid::class_name(nlid::category_class(c)));
  m.attr("TAXONOMY_CATEGORIES") = categories;
}
