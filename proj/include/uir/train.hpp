#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "uir/corpus.hpp"
#include "uir/metrics.hpp"
#include "uir/model.hpp"
#include "uir/optim.hpp"
#include "uir/rng.hpp"

namespace uir {

struct TrainConfig {
  int64_t epochs = 14;
  int64_t batch_size = 8;
  int64_t crop = 32;
  bool flips = true;
  uint64_t seed = 42;

  void validate(int64_t image_size) const {
    if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
    if (crop < 16) throw ConfigError("train.crop must be >= 16");
    if (crop > image_size)
      throw ConfigError("train.crop " + std::to_string(crop) + " exceeds corpus image side " +
                        std::to_string(image_size));
  }
};

namespace detail {

inline Tensor crop_image(const Tensor& img, int64_t y0, int64_t x0, int64_t side) {
  const int64_t c = img.shape()[0], h = img.shape()[1], w = img.shape()[2];
  Tensor out(Shape{c, side, side});
  const auto& iv = img.values();
  auto& ov = out.values();
  for (int64_t ch = 0; ch < c; ++ch)
    for (int64_t y = 0; y < side; ++y)
      for (int64_t x = 0; x < side; ++x)
        ov[static_cast<size_t>((ch * side + y) * side + x)] =
            iv[static_cast<size_t>((ch * h + y0 + y) * w + x0 + x)];
  return out;
}

inline void flip_h(Tensor& img) {
  const int64_t c = img.shape()[0], h = img.shape()[1], w = img.shape()[2];
  auto& v = img.values();
  for (int64_t ch = 0; ch < c; ++ch)
    for (int64_t y = 0; y < h; ++y)
      for (int64_t x = 0; x < w / 2; ++x)
        std::swap(v[static_cast<size_t>((ch * h + y) * w + x)],
                  v[static_cast<size_t>((ch * h + y) * w + (w - 1 - x))]);
}

inline void flip_v(Tensor& img) {
  const int64_t c = img.shape()[0], h = img.shape()[1], w = img.shape()[2];
  auto& v = img.values();
  for (int64_t ch = 0; ch < c; ++ch)
    for (int64_t y = 0; y < h / 2; ++y)
      for (int64_t x = 0; x < w; ++x)
        std::swap(v[static_cast<size_t>((ch * h + y) * w + x)],
                  v[static_cast<size_t>((ch * h + (h - 1 - y)) * w + x)]);
}

// Random crop plus random horizontal/vertical flips, applied identically to
// the degraded image and its clean target.
inline std::pair<Tensor, Tensor> sample_patch(const DegradedPair& pair, int64_t crop, bool flips,
                                              Rng& rng) {
  const int64_t h = pair.degraded.shape()[1], w = pair.degraded.shape()[2];
  const int64_t y0 = h == crop ? 0 : static_cast<int64_t>(rng.uniform_index(static_cast<uint64_t>(h - crop + 1)));
  const int64_t x0 = w == crop ? 0 : static_cast<int64_t>(rng.uniform_index(static_cast<uint64_t>(w - crop + 1)));
  Tensor x = crop_image(pair.degraded, y0, x0, crop);
  Tensor y = crop_image(pair.clean, y0, x0, crop);
  if (flips) {
    if (rng.coin()) {
      flip_h(x);
      flip_h(y);
    }
    if (rng.coin()) {
      flip_v(x);
      flip_v(y);
    }
  }
  return {std::move(x), std::move(y)};
}

}  // namespace detail

struct TrainResult {
  std::vector<MetricReport> history;
  std::vector<double> epoch_loss;
};

using HeldoutMap = std::map<DegradationKind, std::vector<const DegradedPair*>>;

inline HeldoutMap heldout_map(const Corpus& corpus) {
  HeldoutMap m;
  for (DegradationKind k : kAllKinds) m[k] = corpus.heldout_pairs(k);
  return m;
}

// Shared epoch loop for pretraining and retraining. Minimizes mean L1 over
// shuffled mixed batches; evaluates the held-out split after each epoch.
inline TrainResult run_training(RestorationModel& model,
                                const std::vector<const DegradedPair*>& train_pairs,
                                const HeldoutMap& heldout, const TrainConfig& cfg,
                                const OptimizerConfig& opt_cfg, const std::string& final_stage,
                                std::ostream* log = nullptr) {
  if (train_pairs.empty()) throw ConfigError("training set is empty");
  cfg.validate(train_pairs.front()->degraded.shape()[1]);
  opt_cfg.validate();

  std::vector<Tensor> params;
  for (auto& p : model.params()) params.push_back(p.tensor);
  Adam adam(opt_cfg, params);

  TrainResult result;
  result.history.push_back(evaluate(model, heldout, "epoch-0"));
  if (log) *log << "epoch 0 (init): " << format_report_line(result.history.back()) << '\n';

  std::vector<int64_t> order(train_pairs.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int64_t>(i);

  int64_t global_step = 0;
  for (int64_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng rng(mix_seed(cfg.seed, static_cast<uint64_t>(epoch)));
    rng.shuffle(order);
    double loss_sum = 0.0;
    int64_t batches = 0;
    for (size_t pos = 0; pos < order.size(); pos += static_cast<size_t>(cfg.batch_size)) {
      const size_t end = std::min(order.size(), pos + static_cast<size_t>(cfg.batch_size));
      Graph g;
      Tensor batch_loss;
      bool first = true;
      for (size_t bi = pos; bi < end; ++bi) {
        auto [x, y] = detail::sample_patch(*train_pairs[static_cast<size_t>(order[bi])], cfg.crop,
                                           cfg.flips, rng);
        Tensor sample = g.l1_loss(restore(model, g, x), y);
        batch_loss = first ? sample : g.add(batch_loss, sample);
        first = false;
      }
      batch_loss = g.scale(batch_loss, 1.0 / static_cast<double>(end - pos));
      const double loss_value = batch_loss.item();
      if (!std::isfinite(loss_value))
        throw DivergenceError("training loss is not finite at step " + std::to_string(global_step));
      g.backward(batch_loss);
      try {
        adam.step();
      } catch (const NonFiniteError& e) {
        throw DivergenceError(std::string("training diverged: ") + e.what());
      }
      loss_sum += loss_value;
      ++batches;
      ++global_step;
    }
    result.epoch_loss.push_back(loss_sum / static_cast<double>(batches));
    const std::string stage = epoch == cfg.epochs ? final_stage : "epoch-" + std::to_string(epoch);
    result.history.push_back(evaluate(model, heldout, stage));
    if (log)
      *log << "epoch " << epoch << ": loss " << result.epoch_loss.back() << "  "
           << format_report_line(result.history.back()) << '\n';
  }
  return result;
}

// Pretraining over the full three-kind corpus; produces the reference model
// that unlearning starts from.
inline TrainResult pretrain(RestorationModel& model, const Corpus& corpus, const TrainConfig& cfg,
                            const OptimizerConfig& opt_cfg, std::ostream* log = nullptr) {
  bool seen[3] = {false, false, false};
  for (const auto& p : corpus.pairs) seen[static_cast<int>(p.kind)] = true;
  if (!(seen[0] && seen[1] && seen[2]))
    throw ConfigError("pretraining requires all three degradation kinds in the corpus");
  return run_training(model, corpus.train_pairs(), heldout_map(corpus), cfg, opt_cfg, "before",
                      log);
}

}  // namespace uir
