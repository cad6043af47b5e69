// Command-line driver for the restoration-unlearning pipeline:
// generate a synthetic corpus, pretrain the all-in-one model, surgically
// remove one degradation capability, and report PSNR/SSIM per stage.

#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "uir/uir.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitDivergence = 3;
constexpr int kExitIo = 4;

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out;
  std::optional<uint64_t> seed;
  bool images = false;
};

void add_common(CLI::App* cmd, CommonOpts& o, const std::string& default_out) {
  cmd->add_option("-c,--config", o.config_path, "JSON config file (unknown keys rejected)");
  cmd->add_option("-s,--set", o.overrides,
                  "dotted config override, e.g. unlearn.w_adv=1.5 (repeatable)");
  o.out = default_out;
  cmd->add_option("-o,--out", o.out, "output directory")->capture_default_str();
  cmd->add_option("--seed", o.seed, "master seed; derives all per-stage seeds");
}

class StageTimer {
public:
  void start() { t0_ = std::chrono::steady_clock::now(); }
  double stop() {
    const auto dt = std::chrono::steady_clock::now() - t0_;
    return std::chrono::duration<double>(dt).count();
  }

private:
  std::chrono::steady_clock::time_point t0_;
};

void dump_triplets(const std::string& dir, const uir::RestorationModel& model,
                   const uir::HeldoutMap& heldout, int64_t per_kind = 2) {
  std::filesystem::create_directories(dir);
  for (const auto& [kind, pairs] : heldout) {
    for (int64_t i = 0; i < std::min<int64_t>(per_kind, static_cast<int64_t>(pairs.size())); ++i) {
      const auto* pair = pairs[static_cast<size_t>(i)];
      uir::Graph g(false);
      uir::Tensor restored = g.clamp(uir::restore(model, g, pair->degraded), 0.0, 1.0);
      const std::string base =
          dir + "/" + uir::kind_name(kind) + "-" + std::to_string(i);
      uir::write_png(base + "-degraded.png", pair->degraded);
      uir::write_png(base + "-restored.png", restored);
      uir::write_png(base + "-clean.png", pair->clean);
    }
  }
}

void finish_run(uir::RunRecord& record, const std::string& out) {
  uir::write_report(record, out);
  std::cout << uir::render_table(record.history);
  std::cout << "artifacts written to " << out << "\n";
}

int cmd_gen_corpus(const CommonOpts& o) {
  auto [cfg, resolved] = uir::resolve_config(o.config_path, o.overrides, o.seed);
  StageTimer timer;
  timer.start();
  const uir::Corpus corpus = uir::build_corpus(cfg.corpus);
  std::filesystem::create_directories(o.out);
  uir::save_corpus(o.out + "/corpus", corpus);
  uir::write_text_file(o.out + "/config", resolved.dump(2) + "\n");
  std::cout << "corpus: " << corpus.pairs.size() << " pairs (" << cfg.corpus.per_kind
            << " per kind, " << cfg.corpus.image_size << "x" << cfg.corpus.image_size << "), "
            << timer.stop() << " s\n";
  std::cout << "written to " << o.out << "/corpus\n";
  return kExitOk;
}

int cmd_pretrain(const CommonOpts& o, const std::string& corpus_path) {
  auto [cfg, resolved] = uir::resolve_config(o.config_path, o.overrides, o.seed);
  const uir::Corpus corpus = uir::load_corpus(corpus_path);
  uir::RestorationModel model(cfg.model.width, cfg.model.depth, cfg.model.seed);
  std::cout << "model: width " << cfg.model.width << ", depth " << cfg.model.depth << ", "
            << model.param_count() << " parameters\n";

  uir::RunRecord record;
  record.name = "pretrain";
  record.resolved_config = resolved;
  const auto heldout = uir::heldout_map(corpus);
  record.history.push_back(uir::degraded_baseline(heldout));

  StageTimer timer;
  timer.start();
  uir::TrainResult result =
      uir::pretrain(model, corpus, cfg.pretrain_train, cfg.pretrain_opt, &std::cout);
  record.wall_clock_seconds["pretrain"] = timer.stop();
  for (auto& r : result.history) record.history.push_back(std::move(r));

  std::filesystem::create_directories(o.out);
  uir::save_checkpoint(o.out + "/ckpt-before", model);
  if (o.images) dump_triplets(o.out + "/images", model, heldout);
  finish_run(record, o.out);
  return kExitOk;
}

// Shared by the unlearn / ablate / sweep commands: one unlearning run from a
// fixed starting checkpoint, reported in its own directory.
uir::MetricReport run_unlearn_once(const uir::RunConfig& cfg, const nlohmann::json& resolved,
                                   const uir::Corpus& corpus,
                                   const uir::RestorationModel& start,
                                   uir::DegradationKind forget, const std::string& out,
                                   bool images, bool quiet = false) {
  uir::RestorationModel model = start.clone();

  const auto heldout = uir::heldout_map(corpus);
  uir::RunRecord record;
  record.name = "unlearn-" + std::string(uir::kind_name(forget));
  record.resolved_config = resolved;
  record.resolved_config["forget"] = uir::kind_name(forget);
  record.history.push_back(uir::degraded_baseline(heldout));
  record.history.push_back(uir::evaluate(model, heldout, "before"));

  const uir::DatasetPartition part = uir::partition(corpus.train_pairs(), forget);
  StageTimer timer;
  timer.start();
  uir::UnlearnResult result = uir::unlearn(model, part, heldout, cfg.unlearn, cfg.unlearn_batch,
                                           cfg.unlearn_opt, quiet ? nullptr : &std::cout);
  record.wall_clock_seconds["unlearn"] = timer.stop();
  for (auto& r : result.history) record.history.push_back(std::move(r));

  std::filesystem::create_directories(out);
  uir::save_checkpoint(out + "/ckpt-after", model);
  if (images) dump_triplets(out + "/images", model, heldout);
  uir::write_report(record, out);
  return record.history.back();
}

int cmd_unlearn(const CommonOpts& o, const std::string& corpus_path, const std::string& ckpt,
                const std::string& forget_name) {
  auto [cfg, resolved] = uir::resolve_config(o.config_path, o.overrides, o.seed);
  const uir::DegradationKind forget = uir::kind_from_name(forget_name);
  const uir::Corpus corpus = uir::load_corpus(corpus_path);
  const uir::RestorationModel before = uir::load_checkpoint(ckpt);
  run_unlearn_once(cfg, resolved, corpus, before, forget, o.out, o.images);
  std::cout << uir::read_text_file(o.out + "/report.txt");
  std::cout << "artifacts written to " << o.out << "\n";
  return kExitOk;
}

int cmd_retrain(const CommonOpts& o, const std::string& corpus_path,
                const std::string& forget_name) {
  auto [cfg, resolved] = uir::resolve_config(o.config_path, o.overrides, o.seed);
  const uir::DegradationKind forget = uir::kind_from_name(forget_name);
  const uir::Corpus corpus = uir::load_corpus(corpus_path);

  uir::RestorationModel model(cfg.model.width, cfg.model.depth, cfg.model.seed);
  const auto heldout = uir::heldout_map(corpus);
  const uir::DatasetPartition part = uir::partition(corpus.train_pairs(), forget);

  uir::RunRecord record;
  record.name = "retrain-without-" + std::string(uir::kind_name(forget));
  record.resolved_config = resolved;
  record.resolved_config["forget"] = uir::kind_name(forget);
  record.history.push_back(uir::degraded_baseline(heldout));

  StageTimer timer;
  timer.start();
  uir::TrainResult result = uir::run_training(model, part.retain, heldout, cfg.pretrain_train,
                                              cfg.pretrain_opt, "retrained", &std::cout);
  record.wall_clock_seconds["retrain"] = timer.stop();
  for (auto& r : result.history) record.history.push_back(std::move(r));

  std::filesystem::create_directories(o.out);
  uir::save_checkpoint(o.out + "/ckpt-retrain", model);
  if (o.images) dump_triplets(o.out + "/images", model, heldout);
  finish_run(record, o.out);
  return kExitOk;
}

int cmd_eval(const CommonOpts& o, const std::string& corpus_path, const std::string& ckpt,
             const std::string& stage) {
  auto [cfg, resolved] = uir::resolve_config(o.config_path, o.overrides, o.seed);
  (void)cfg;
  const uir::Corpus corpus = uir::load_corpus(corpus_path);
  const uir::RestorationModel model = uir::load_checkpoint(ckpt);
  const auto heldout = uir::heldout_map(corpus);

  uir::RunRecord record;
  record.name = "eval";
  record.resolved_config = resolved;
  record.history.push_back(uir::degraded_baseline(heldout));
  record.history.push_back(uir::evaluate(model, heldout, stage));
  if (o.images) dump_triplets(o.out + "/images", model, heldout);
  finish_run(record, o.out);
  return kExitOk;
}

int cmd_ablate(const CommonOpts& o, const std::string& corpus_path, const std::string& ckpt,
               const std::string& forget_name) {
  auto [cfg, resolved] = uir::resolve_config(o.config_path, o.overrides, o.seed);
  const uir::DegradationKind forget = uir::kind_from_name(forget_name);
  const uir::Corpus corpus = uir::load_corpus(corpus_path);
  const uir::RestorationModel before = uir::load_checkpoint(ckpt);
  const auto heldout = uir::heldout_map(corpus);

  struct Variant {
    const char* label;
    bool ins, adv;
  };
  const Variant variants[] = {{"adv-only", false, true}, {"ins-only", true, false},
                              {"both", true, true}};

  uir::RunRecord summary;
  summary.name = "ablate-" + std::string(uir::kind_name(forget));
  summary.resolved_config = resolved;
  summary.resolved_config["forget"] = uir::kind_name(forget);
  summary.history.push_back(uir::degraded_baseline(heldout));
  summary.history.push_back(uir::evaluate(before, heldout, "before"));

  for (const Variant& v : variants) {
    uir::RunConfig vcfg = cfg;
    vcfg.unlearn.enable_ins = v.ins;
    vcfg.unlearn.enable_adv = v.adv;
    nlohmann::json vresolved = resolved;
    vresolved["unlearn"]["enable_ins"] = v.ins;
    vresolved["unlearn"]["enable_adv"] = v.adv;
    std::cout << "--- variant " << v.label << " ---\n";
    uir::MetricReport after = run_unlearn_once(vcfg, vresolved, corpus, before, forget,
                                               o.out + "/" + v.label, o.images);
    after.stage = v.label;
    summary.history.push_back(std::move(after));
  }
  finish_run(summary, o.out);
  return kExitOk;
}

int cmd_sweep(const CommonOpts& o, const std::string& corpus_path, const std::string& ckpt,
              const std::string& forget_name, const std::vector<double>& ratios,
              const std::vector<double>& lrs, const std::vector<int64_t>& batches) {
  auto [cfg, resolved] = uir::resolve_config(o.config_path, o.overrides, o.seed);
  if (ratios.empty() && lrs.empty() && batches.empty())
    throw uir::ConfigError("sweep: provide at least one of --ratios, --lrs, --batches");
  const uir::DegradationKind forget = uir::kind_from_name(forget_name);
  const uir::Corpus corpus = uir::load_corpus(corpus_path);
  const uir::RestorationModel before = uir::load_checkpoint(ckpt);
  const auto heldout = uir::heldout_map(corpus);

  uir::RunRecord summary;
  summary.name = "sweep-" + std::string(uir::kind_name(forget));
  summary.resolved_config = resolved;
  summary.resolved_config["forget"] = uir::kind_name(forget);
  summary.history.push_back(uir::degraded_baseline(heldout));
  summary.history.push_back(uir::evaluate(before, heldout, "before"));

  auto run_variant = [&](const std::string& label, const uir::RunConfig& vcfg,
                         nlohmann::json vresolved) {
    std::cout << "--- variant " << label << " ---\n";
    uir::MetricReport after =
        run_unlearn_once(vcfg, vresolved, corpus, before, forget, o.out + "/" + label, o.images);
    after.stage = label;
    summary.history.push_back(std::move(after));
  };

  char label[64];
  for (double r : ratios) {
    uir::RunConfig vcfg = cfg;
    vcfg.unlearn.w_adv = r * vcfg.unlearn.w_ins;
    nlohmann::json vresolved = resolved;
    vresolved["unlearn"]["w_adv"] = vcfg.unlearn.w_adv;
    std::snprintf(label, sizeof(label), "ratio-%g", r);
    run_variant(label, vcfg, vresolved);
  }
  for (double lr : lrs) {
    uir::RunConfig vcfg = cfg;
    vcfg.unlearn_opt.lr = lr;
    nlohmann::json vresolved = resolved;
    vresolved["unlearn"]["lr"] = lr;
    std::snprintf(label, sizeof(label), "lr-%g", lr);
    run_variant(label, vcfg, vresolved);
  }
  for (int64_t b : batches) {
    uir::RunConfig vcfg = cfg;
    vcfg.unlearn_batch.batch_size = b;
    nlohmann::json vresolved = resolved;
    vresolved["unlearn"]["batch_size"] = b;
    std::snprintf(label, sizeof(label), "batch-%lld", static_cast<long long>(b));
    run_variant(label, vcfg, vresolved);
  }
  finish_run(summary, o.out);
  return kExitOk;
}

int cmd_report(const std::string& run_dir) {
  const std::string metrics = uir::read_text_file(run_dir + "/metrics");
  nlohmann::json parsed;
  try {
    parsed = nlohmann::json::parse(metrics);
  } catch (const nlohmann::json::exception& e) {
    throw uir::IoError("metrics file in '" + run_dir + "' is not valid JSON: " + e.what());
  }
  const auto history = uir::metrics_from_json(parsed);
  const std::string table = uir::render_table(history);
  uir::write_text_file(run_dir + "/report.txt", table);
  std::cout << table;
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"all-in-one image restoration with selective unlearning"};
  app.require_subcommand(1);

  CommonOpts gen_o, pre_o, unl_o, ret_o, eval_o, abl_o, swp_o;
  std::string corpus_path = "runs/corpus/corpus";
  std::string ckpt_path = "runs/pretrain/ckpt-before";
  std::string forget_name, eval_stage = "eval", report_dir;
  std::vector<double> ratios, lrs;
  std::vector<int64_t> batches;

  auto* gen = app.add_subcommand("gen-corpus", "generate the synthetic degraded corpus");
  add_common(gen, gen_o, "runs/corpus");

  auto* pre = app.add_subcommand("pretrain", "train the all-in-one model on all kinds");
  add_common(pre, pre_o, "runs/pretrain");
  pre->add_option("--corpus", corpus_path, "corpus archive")->capture_default_str();
  pre->add_flag("--images", pre_o.images, "dump degraded/restored/clean PNG triplets");

  auto* unl = app.add_subcommand("unlearn", "remove one degradation capability");
  add_common(unl, unl_o, "runs/unlearn");
  unl->add_option("--corpus", corpus_path, "corpus archive")->capture_default_str();
  unl->add_option("--ckpt", ckpt_path, "starting checkpoint")->capture_default_str();
  unl->add_option("--forget", forget_name, "degradation kind to forget (noise|haze|rain)")
      ->required();
  unl->add_flag("--images", unl_o.images, "dump PNG triplets");

  auto* ret = app.add_subcommand("retrain", "train from scratch on the retain set only");
  add_common(ret, ret_o, "runs/retrain");
  ret->add_option("--corpus", corpus_path, "corpus archive")->capture_default_str();
  ret->add_option("--forget", forget_name, "degradation kind to exclude")->required();
  ret->add_flag("--images", ret_o.images, "dump PNG triplets");

  auto* evl = app.add_subcommand("eval", "evaluate a checkpoint on the held-out split");
  add_common(evl, eval_o, "runs/eval");
  evl->add_option("--corpus", corpus_path, "corpus archive")->capture_default_str();
  evl->add_option("--ckpt", ckpt_path, "checkpoint to evaluate")->capture_default_str();
  evl->add_option("--stage", eval_stage, "stage label in the report")->capture_default_str();
  evl->add_flag("--images", eval_o.images, "dump PNG triplets");

  auto* abl = app.add_subcommand("ablate", "run adv-only / ins-only / both variants");
  add_common(abl, abl_o, "runs/ablate");
  abl->add_option("--corpus", corpus_path, "corpus archive")->capture_default_str();
  abl->add_option("--ckpt", ckpt_path, "starting checkpoint")->capture_default_str();
  abl->add_option("--forget", forget_name, "degradation kind to forget")->required();
  abl->add_flag("--images", abl_o.images, "dump PNG triplets");

  auto* swp = app.add_subcommand("sweep", "sweep loss-weight ratios, learning rates or batch sizes");
  add_common(swp, swp_o, "runs/sweep");
  swp->add_option("--corpus", corpus_path, "corpus archive")->capture_default_str();
  swp->add_option("--ckpt", ckpt_path, "starting checkpoint")->capture_default_str();
  swp->add_option("--forget", forget_name, "degradation kind to forget")->required();
  swp->add_option("--ratios", ratios, "w_adv:w_ins ratios, e.g. 0.5,1.0,1.5")->delimiter(',');
  swp->add_option("--lrs", lrs, "unlearning learning rates")->delimiter(',');
  swp->add_option("--batches", batches, "unlearning batch sizes")->delimiter(',');

  auto* rep = app.add_subcommand("report", "regenerate the table from a run's metrics file");
  rep->add_option("--run", report_dir, "run directory containing a metrics file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (gen->parsed()) return cmd_gen_corpus(gen_o);
    if (pre->parsed()) return cmd_pretrain(pre_o, corpus_path);
    if (unl->parsed()) return cmd_unlearn(unl_o, corpus_path, ckpt_path, forget_name);
    if (ret->parsed()) return cmd_retrain(ret_o, corpus_path, forget_name);
    if (evl->parsed()) return cmd_eval(eval_o, corpus_path, ckpt_path, eval_stage);
    if (abl->parsed()) return cmd_ablate(abl_o, corpus_path, ckpt_path, forget_name);
    if (swp->parsed())
      return cmd_sweep(swp_o, corpus_path, ckpt_path, forget_name, ratios, lrs, batches);
    if (rep->parsed()) return cmd_report(report_dir);
  } catch (const uir::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const uir::DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const uir::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
