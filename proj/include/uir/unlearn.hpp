#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "uir/corpus.hpp"
#include "uir/metrics.hpp"
#include "uir/model.hpp"
#include "uir/optim.hpp"
#include "uir/train.hpp"

namespace uir {

enum class LossKind { L1, L2 };

inline const char* loss_kind_name(LossKind k) { return k == LossKind::L1 ? "l1" : "l2"; }

inline LossKind loss_kind_from_name(const std::string& name) {
  if (name == "l1") return LossKind::L1;
  if (name == "l2") return LossKind::L2;
  throw ConfigError("unknown loss kind '" + name + "' (expected l1 or l2)");
}

struct UnlearnConfig {
  double w_adv = 1.0;
  double w_ins = 1.0;
  double w_retain = 1.0;
  double retain_fraction = 0.25;
  int64_t epochs = 2;
  int64_t retain_batch_size = 0;  // 0: same as the forget batch size
  bool enable_ins = true;
  bool enable_adv = true;
  LossKind loss_kind = LossKind::L1;
  uint64_t seed = 7;

  void validate() const {
    if (!enable_ins && !enable_adv)
      throw ConfigError("unlearn: at least one of enable_ins, enable_adv must be true");
    if (w_adv < 0.0 || w_ins < 0.0 || w_retain < 0.0)
      throw ConfigError("unlearn: loss weights must be nonnegative");
    if (!(retain_fraction >= 0.0 && retain_fraction <= 1.0))
      throw ConfigError("unlearn: retain_fraction must lie in [0,1]");
    if (epochs < 1) throw ConfigError("unlearn.epochs must be >= 1");
    if (retain_batch_size < 0) throw ConfigError("unlearn.retain_batch_size must be >= 0");
  }
};

// Exact split of a pair list into the forget kind and everything else.
struct DatasetPartition {
  std::vector<const DegradedPair*> forget;
  std::vector<const DegradedPair*> retain;
  DegradationKind forget_kind = DegradationKind::Haze;
  int64_t n_kinds = 0;
};

inline DatasetPartition partition(const std::vector<const DegradedPair*>& pairs,
                                  DegradationKind forget_kind) {
  DatasetPartition part;
  part.forget_kind = forget_kind;
  bool kind_seen[3] = {false, false, false};
  for (const DegradedPair* p : pairs) {
    kind_seen[static_cast<int>(p->kind)] = true;
    if (p->kind == forget_kind)
      part.forget.push_back(p);
    else
      part.retain.push_back(p);
  }
  part.n_kinds = kind_seen[0] + kind_seen[1] + kind_seen[2];
  if (part.forget.empty())
    throw ConfigError(std::string("partition: no pairs of forget kind ") + kind_name(forget_kind));
  if (part.retain.empty())
    throw ConfigError("partition: corpus has no pairs outside the forget kind");
  return part;
}

// Signed values of the three loss components for one optimizer step. The
// instance term is reported as the negated reconstruction loss, i.e. the
// value actually entering the minimized total.
struct StepLosses {
  double instance = 0.0;
  double adversarial = 0.0;
  double retain = 0.0;
  double total = 0.0;
};

namespace detail {

inline Tensor pick_loss(Graph& g, LossKind kind, const Tensor& pred, const Tensor& target) {
  return kind == LossKind::L1 ? g.l1_loss(pred, target) : g.mse_loss(pred, target);
}

}  // namespace detail

// One combined update: ascend reconstruction error on the forget batch, pull
// forget outputs toward fresh adversarial targets, anchor the retain batch.
// The three terms are summed into a single scalar and minimized with one
// backward pass and one Adam step.
inline StepLosses unlearn_step(RestorationModel& model, Adam& adam,
                               const std::vector<std::pair<Tensor, Tensor>>& forget_batch,
                               const std::vector<std::pair<Tensor, Tensor>>& retain_batch,
                               const UnlearnConfig& cfg, uint64_t step_seed) {
  cfg.validate();
  if (forget_batch.empty()) throw ConfigError("unlearn_step: empty forget batch");

  Graph g;
  StepLosses out;

  Tensor ins_loss, adv_loss;
  bool first = true;
  for (size_t i = 0; i < forget_batch.size(); ++i) {
    const auto& [x, y] = forget_batch[i];
    Tensor restored = restore(model, g, x);
    if (cfg.enable_ins) {
      Tensor term = detail::pick_loss(g, cfg.loss_kind, restored, y);
      ins_loss = first ? term : g.add(ins_loss, term);
    }
    if (cfg.enable_adv) {
      Tensor target = make_adversarial_target(y, mix_seed(step_seed, i));
      Tensor term = detail::pick_loss(g, cfg.loss_kind, restored, target);
      adv_loss = first ? term : g.add(adv_loss, term);
    }
    first = false;
  }
  const double fb = static_cast<double>(forget_batch.size());

  Tensor total;
  bool have_total = false;
  if (cfg.enable_ins) {
    ins_loss = g.scale(ins_loss, -1.0 / fb);  // gradient ascent via negated loss
    out.instance = ins_loss.item();
    total = g.scale(ins_loss, cfg.w_ins);
    have_total = true;
  }
  if (cfg.enable_adv) {
    adv_loss = g.scale(adv_loss, 1.0 / fb);
    out.adversarial = adv_loss.item();
    Tensor weighted = g.scale(adv_loss, cfg.w_adv);
    total = have_total ? g.add(total, weighted) : weighted;
    have_total = true;
  }
  if (!retain_batch.empty() && cfg.w_retain > 0.0) {
    Tensor retain_loss;
    bool rfirst = true;
    for (const auto& [x, y] : retain_batch) {
      Tensor term = detail::pick_loss(g, cfg.loss_kind, restore(model, g, x), y);
      retain_loss = rfirst ? term : g.add(retain_loss, term);
      rfirst = false;
    }
    retain_loss = g.scale(retain_loss, 1.0 / static_cast<double>(retain_batch.size()));
    out.retain = retain_loss.item();
    total = g.add(total, g.scale(retain_loss, cfg.w_retain));
  }

  out.total = total.item();
  if (!std::isfinite(out.total))
    throw DivergenceError("unlearn: loss is not finite (step seed " + std::to_string(step_seed) + ")");
  g.backward(total);
  try {
    adam.step();
  } catch (const NonFiniteError& e) {
    throw DivergenceError(std::string("unlearn diverged: ") + e.what());
  }
  return out;
}

struct UnlearnResult {
  std::vector<MetricReport> history;  // quarter-epoch checkpoints, final stage "after"
  std::vector<StepLosses> steps;
};

// Full unlearning loop: cfg.epochs passes over the forget set with a
// retain_fraction subsample of the retain set interleaved at every step.
// Held-out metrics are recorded at quarter-epoch marks so the collapse
// trajectory within the first epoch stays visible.
inline UnlearnResult unlearn(RestorationModel& model, const DatasetPartition& part,
                             const HeldoutMap& heldout, const UnlearnConfig& cfg,
                             const TrainConfig& batch_cfg, const OptimizerConfig& opt_cfg,
                             std::ostream* log = nullptr) {
  cfg.validate();
  opt_cfg.validate();
  batch_cfg.validate(part.forget.front()->degraded.shape()[1]);

  std::vector<Tensor> params;
  for (auto& p : model.params()) params.push_back(p.tensor);
  Adam adam(opt_cfg, params);

  UnlearnResult result;
  std::vector<int64_t> forget_order(part.forget.size());
  for (size_t i = 0; i < forget_order.size(); ++i) forget_order[i] = static_cast<int64_t>(i);

  const int64_t steps_per_epoch =
      (static_cast<int64_t>(part.forget.size()) + batch_cfg.batch_size - 1) / batch_cfg.batch_size;
  uint64_t global_step = 0;

  for (int64_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng rng(mix_seed(cfg.seed, static_cast<uint64_t>(epoch)));
    rng.shuffle(forget_order);

    // per-epoch subsample of the retain side
    std::vector<int64_t> retain_pool(part.retain.size());
    for (size_t i = 0; i < retain_pool.size(); ++i) retain_pool[i] = static_cast<int64_t>(i);
    rng.shuffle(retain_pool);
    const auto subsample =
        static_cast<size_t>(cfg.retain_fraction * static_cast<double>(retain_pool.size()));
    retain_pool.resize(subsample);
    size_t retain_cursor = 0;

    int64_t next_quarter = 1;
    for (int64_t step = 0; step < steps_per_epoch; ++step) {
      std::vector<std::pair<Tensor, Tensor>> forget_batch;
      const size_t pos = static_cast<size_t>(step * batch_cfg.batch_size);
      const size_t end = std::min(part.forget.size(), pos + static_cast<size_t>(batch_cfg.batch_size));
      for (size_t i = pos; i < end; ++i)
        forget_batch.push_back(detail::sample_patch(*part.forget[static_cast<size_t>(forget_order[i])],
                                                    batch_cfg.crop, batch_cfg.flips, rng));

      std::vector<std::pair<Tensor, Tensor>> retain_batch;
      const int64_t retain_batch_size =
          cfg.retain_batch_size > 0 ? cfg.retain_batch_size : batch_cfg.batch_size;
      if (!retain_pool.empty()) {
        for (int64_t i = 0; i < retain_batch_size; ++i) {
          if (retain_cursor == retain_pool.size()) {
            rng.shuffle(retain_pool);
            retain_cursor = 0;
          }
          retain_batch.push_back(detail::sample_patch(*part.retain[static_cast<size_t>(retain_pool[retain_cursor])],
                                                      batch_cfg.crop, batch_cfg.flips, rng));
          ++retain_cursor;
        }
      }

      const uint64_t step_seed = mix_seed(cfg.seed ^ 0xadf00dULL, global_step);
      StepLosses losses;
      try {
        losses = unlearn_step(model, adam, forget_batch, retain_batch, cfg, step_seed);
      } catch (const DivergenceError& e) {
        throw DivergenceError(std::string(e.what()) + " at unlearn step " +
                              std::to_string(global_step));
      }
      result.steps.push_back(losses);
      ++global_step;

      // quarter-epoch metric checkpoints
      while (next_quarter <= 4 && (step + 1) * 4 >= next_quarter * steps_per_epoch) {
        const double frac = static_cast<double>(epoch - 1) + 0.25 * static_cast<double>(next_quarter);
        const bool final_mark = epoch == cfg.epochs && next_quarter == 4;
        char label[32];
        std::snprintf(label, sizeof(label), "epoch-%.2f", frac);
        result.history.push_back(evaluate(model, heldout, final_mark ? "after" : label));
        if (log)
          *log << (final_mark ? "after   " : label) << ": "
               << format_report_line(result.history.back()) << '\n';
        ++next_quarter;
      }
    }
  }
  return result;
}

}  // namespace uir
