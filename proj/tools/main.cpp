#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "nlid/cli.hpp"
#include "nlid/io.hpp"

namespace {

std::string default_out_dir() {
  const char* env = std::getenv("NLID_OUT_DIR");
  return env ? env : "";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nlid - NLI disagreement toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(nlid::kToolkitVersion));

  nlid::cli::ValidateOptions validate_opts;
  CLI::App* validate = app.add_subcommand("validate", "Validate input files");
  validate->add_option("paths", validate_opts.paths, "Input files")->required();
  validate->add_option("--format", validate_opts.format, "chaos|mnli|taxonomy|predictions")
      ->required();
  validate->add_flag("--strict", validate_opts.strict, "Abort on the first problem");

  nlid::cli::RelabelOptions relabel_opts;
  relabel_opts.out_dir = default_out_dir();
  CLI::App* relabel = app.add_subcommand("relabel", "Relabel raw annotations into the 4-way and multilabel schemes");
  relabel->add_option("--chaos", relabel_opts.chaos_paths, "ChaosNLI JSONL files");
  relabel->add_option("--mnli", relabel_opts.mnli_paths, "MNLI dev JSONL files");
  relabel->add_option("--policy", relabel_opts.policy_path, "Policy JSON with threshold overrides");
  relabel->add_option("--balance-target", relabel_opts.balance_target,
                      "'auto' or items per single-label class");
  relabel->add_option("--seed", relabel_opts.seed, "RNG seed")->default_val(0);
  relabel->add_option("--out", relabel_opts.out_dir, "Output directory");
  relabel->add_flag("--strict", relabel_opts.strict, "Abort on the first problem");
  relabel->add_flag("--include-overlap", relabel_opts.include_overlap,
                    "Keep MNLI items whose uid also appears in the ChaosNLI input");
  int chaos_single_min = 0;
  CLI::Option* csm = relabel->add_option("--chaos-single-min", chaos_single_min,
                                         "Single label above this majority (default 80)");
  int chaos_disagree_max = 0;
  CLI::Option* cdm = relabel->add_option("--chaos-disagree-max", chaos_disagree_max,
                                         "Multilabel below this majority (default 60)");
  int chaos_multilabel_min = 0;
  CLI::Option* cmm = relabel->add_option("--chaos-multilabel-min", chaos_multilabel_min,
                                         "Votes for a label to be present (default 20)");
  int mnli_complicated_min = 0;
  CLI::Option* mcm = relabel->add_option("--mnli-complicated-min", mnli_complicated_min,
                                         "Votes two labels need (default 2)");
  int mnli_multilabel_min = 0;
  CLI::Option* mmm = relabel->add_option("--mnli-multilabel-min", mnli_multilabel_min,
                                         "Votes for a label to be present (default 2)");

  nlid::cli::SplitOptions split_opts;
  split_opts.out_dir = default_out_dir();
  CLI::App* split = app.add_subcommand("split", "Stratified train/dev/test split");
  split->add_option("--data", split_opts.data_path, "Labeled JSONL")->required();
  split->add_option("--sizes", split_opts.sizes, "train,dev,test sizes");
  split->add_option("--ratios", split_opts.ratios, "train,dev,test ratios");
  split->add_option("--seed", split_opts.seed, "RNG seed")->default_val(0);
  split->add_option("--stratify-by", split_opts.stratify_by, "combination|fourway");
  split->add_option("--out", split_opts.out_dir, "Output directory");

  nlid::cli::AgreeOptions agree_opts;
  CLI::App* agree = app.add_subcommand("agree", "Inter-annotator agreement (Krippendorff's alpha)");
  agree->add_option("--taxonomy", agree_opts.taxonomy_path, "Taxonomy annotation CSV")
      ->required();
  agree->add_option("--distance", agree_opts.distance, "masi|nominal");
  agree->add_option("--out", agree_opts.out_dir, "Output directory (optional)");

  nlid::cli::AnalyzeOptions analyze_opts;
  analyze_opts.out_dir = default_out_dir();
  CLI::App* analyze = app.add_subcommand("analyze", "Dataset and prediction reports");
  analyze->add_option("--report", analyze_opts.report,
                      "combinations|convergence|entropy|scatter|stacked")
      ->required();
  analyze->add_option("--items", analyze_opts.items_path, "Items JSONL");
  analyze->add_option("--items-format", analyze_opts.items_format, "chaos|mnli|labeled");
  analyze->add_option("--taxonomy", analyze_opts.taxonomy_path, "Taxonomy annotation CSV");
  analyze->add_option("--pred", analyze_opts.pred_path, "Prediction JSONL");
  analyze->add_option("--pred-ml", analyze_opts.pred_ml_path, "Multilabel prediction JSONL");
  analyze->add_option("--out", analyze_opts.out_dir, "Output directory");
  analyze->add_option("--entropy-base", analyze_opts.entropy_base, "Entropy log base")
      ->default_val(2.0);
  analyze->add_option("--converge-min-votes", analyze_opts.converge_min_votes,
                      "Convergence bound (inclusive)")
      ->default_val(80);
  analyze->add_flag("!--population-std", analyze_opts.sample_std,
                    "Use the population std instead of the sample std");
  analyze->add_option("--dist-threshold", analyze_opts.conversion.dist_threshold,
                      "Distribution-to-multilabel threshold (inclusive)");
  analyze->add_option("--sigmoid-threshold", analyze_opts.conversion.sigmoid_threshold,
                      "Per-label probability threshold (strict)");

  nlid::cli::TrainOptions train_opts;
  train_opts.out_dir = default_out_dir();
  CLI::App* train = app.add_subcommand("train", "Train a baseline model");
  train->add_option("--train", train_opts.train_path, "Labeled train JSONL")->required();
  train->add_option("--dev", train_opts.dev_path, "Labeled dev JSONL")->required();
  train->add_option("--head", train_opts.head, "softmax4|sigmoid3|mixup")->required();
  train->add_option("--out", train_opts.out_dir, "Output directory");
  train->add_option("--seed", train_opts.seed, "RNG seed")->default_val(0);
  double lr = 0.0;
  CLI::Option* lr_opt = train->add_option("--lr", lr, "Initial learning rate");
  double lr_decay = 0.0;
  CLI::Option* lr_decay_opt = train->add_option("--lr-decay", lr_decay, "Decay factor");
  int plateau = 0;
  CLI::Option* plateau_opt =
      train->add_option("--plateau", plateau, "Non-improving epochs before decay");
  int patience = 0;
  CLI::Option* patience_opt =
      train->add_option("--patience", patience, "Early stopping patience");
  int max_epochs = 0;
  CLI::Option* max_epochs_opt = train->add_option("--max-epochs", max_epochs, "Epoch cap");
  int batch_size = 0;
  CLI::Option* batch_opt = train->add_option("--batch-size", batch_size, "Batch size");
  double mixup_alpha = 0.0;
  CLI::Option* alpha_opt =
      train->add_option("--mixup-alpha", mixup_alpha, "Beta(alpha,alpha) parameter");
  int hash_dim = 0;
  CLI::Option* hash_opt = train->add_option("--hash-dim", hash_dim, "Hashed feature dimension");

  nlid::cli::PredictOptions predict_opts;
  predict_opts.out_dir = default_out_dir();
  CLI::App* predict = app.add_subcommand("predict", "Predict with a trained model");
  predict->add_option("--model", predict_opts.model_path, "Model file")->required();
  predict->add_option("--data", predict_opts.data_path, "Items JSONL")->required();
  predict->add_option("--out", predict_opts.out_dir, "Output directory");

  nlid::cli::EvalOptions eval_opts;
  eval_opts.out_dir = default_out_dir();
  CLI::App* eval = app.add_subcommand("eval", "Score prediction files");
  eval->add_option("--gold", eval_opts.gold_path, "Labeled gold JSONL");
  eval->add_option("--pred", eval_opts.pred_paths,
                   "Prediction JSONL (several files aggregate across runs)");
  eval->add_option("--scheme", eval_opts.scheme, "fourway|multilabel");
  eval->add_option("--compare", [&eval_opts](const std::vector<std::string>& values) {
        if (values.size() != 2) return false;
        eval_opts.compare_a = values[0];
        eval_opts.compare_b = values[1];
        return true;
      },
      "Two prediction files; emits their contingency matrix")
      ->expected(2);
  eval->add_option("--out", eval_opts.out_dir, "Output directory");
  eval->add_option("--dist-threshold", eval_opts.conversion.dist_threshold,
                   "Distribution-to-multilabel threshold (inclusive)");
  eval->add_option("--sigmoid-threshold", eval_opts.conversion.sigmoid_threshold,
                   "Per-label probability threshold (strict)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : nlid::cli::kExitDomain;
  }

  if (*validate) return nlid::cli::cmd_validate(validate_opts, std::cout, std::cerr);
  if (*relabel) {
    if (*csm) relabel_opts.chaos_single_min = chaos_single_min;
    if (*cdm) relabel_opts.chaos_disagree_max = chaos_disagree_max;
    if (*cmm) relabel_opts.chaos_multilabel_min = chaos_multilabel_min;
    if (*mcm) relabel_opts.mnli_complicated_min = mnli_complicated_min;
    if (*mmm) relabel_opts.mnli_multilabel_min = mnli_multilabel_min;
    return nlid::cli::cmd_relabel(relabel_opts, std::cout, std::cerr);
  }
  if (*split) return nlid::cli::cmd_split(split_opts, std::cout, std::cerr);
  if (*agree) return nlid::cli::cmd_agree(agree_opts, std::cout, std::cerr);
  if (*analyze) return nlid::cli::cmd_analyze(analyze_opts, std::cout, std::cerr);
  if (*train) {
    if (*lr_opt) train_opts.lr = lr;
    if (*lr_decay_opt) train_opts.lr_decay = lr_decay;
    if (*plateau_opt) train_opts.plateau = plateau;
    if (*patience_opt) train_opts.patience = patience;
    if (*max_epochs_opt) train_opts.max_epochs = max_epochs;
    if (*batch_opt) train_opts.batch_size = batch_size;
    if (*alpha_opt) train_opts.mixup_alpha = mixup_alpha;
    if (*hash_opt) train_opts.hash_dim = hash_dim;
    return nlid::cli::cmd_train(train_opts, std::cout, std::cerr);
  }
  if (*predict) return nlid::cli::cmd_predict(predict_opts, std::cout, std::cerr);
  if (*eval) return nlid::cli::cmd_eval(eval_opts, std::cout, std::cerr);
  return nlid::cli::kExitDomain;
}
