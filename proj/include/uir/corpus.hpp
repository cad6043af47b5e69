#pragma once

#include <cstdint>
#include <vector>

#include "uir/degrade.hpp"

namespace uir {

struct CorpusConfig {
  int64_t per_kind = 300;
  int64_t image_size = 48;
  uint64_t seed = 1234;
  double noise_sigma = 25.0 / 255.0;
  double haze_beta = 1.2;
  double haze_airlight = 0.85;
  double rain_density = 0.5;
  int64_t streak_length = 12;
  double heldout_fraction = 0.1;

  void validate() const {
    if (per_kind < 1) throw ConfigError("corpus.per_kind must be >= 1");
    if (image_size < 16) throw ConfigError("corpus.image_size must be >= 16");
    if (!(heldout_fraction > 0.0 && heldout_fraction < 1.0))
      throw ConfigError("corpus.heldout_fraction must lie in (0,1)");
    DegradationSpec s;
    s.noise_sigma = noise_sigma;
    s.haze_beta = haze_beta;
    s.haze_airlight = haze_airlight;
    s.rain_density = rain_density;
    s.streak_length = streak_length;
    for (DegradationKind k : kAllKinds) {
      s.kind = k;
      s.validate();
    }
  }

  DegradationSpec spec_for(DegradationKind kind, uint64_t pair_seed) const {
    DegradationSpec s;
    s.kind = kind;
    s.noise_sigma = noise_sigma;
    s.haze_beta = haze_beta;
    s.haze_airlight = haze_airlight;
    s.rain_density = rain_density;
    s.streak_length = streak_length;
    s.seed = pair_seed;
    return s;
  }
};

// The full pair set, ordered in per-kind blocks. The last heldout_fraction of
// each kind's block is the evaluation split and is never trained on.
struct Corpus {
  std::vector<DegradedPair> pairs;
  int64_t per_kind = 0;
  double heldout_fraction = 0.1;

  int64_t heldout_per_kind() const {
    const auto h = static_cast<int64_t>(static_cast<double>(per_kind) * heldout_fraction);
    return std::max<int64_t>(1, h);
  }

  std::vector<int64_t> train_indices() const {
    std::vector<int64_t> idx;
    const int64_t held = heldout_per_kind();
    for (int64_t k = 0; k < 3; ++k)
      for (int64_t i = 0; i < per_kind - held; ++i) idx.push_back(k * per_kind + i);
    return idx;
  }

  std::vector<int64_t> heldout_indices(DegradationKind kind) const {
    std::vector<int64_t> idx;
    const int64_t held = heldout_per_kind();
    const int64_t k = static_cast<int64_t>(kind);
    for (int64_t i = per_kind - held; i < per_kind; ++i) idx.push_back(k * per_kind + i);
    return idx;
  }

  std::vector<const DegradedPair*> heldout_pairs(DegradationKind kind) const {
    std::vector<const DegradedPair*> out;
    for (int64_t i : heldout_indices(kind)) out.push_back(&pairs[static_cast<size_t>(i)]);
    return out;
  }

  std::vector<const DegradedPair*> train_pairs() const {
    std::vector<const DegradedPair*> out;
    for (int64_t i : train_indices()) out.push_back(&pairs[static_cast<size_t>(i)]);
    return out;
  }
};

// Each kind gets its own block of fresh clean images, mirroring per-task
// datasets; degradation seeds are derived per pair.
inline Corpus build_corpus(const CorpusConfig& cfg) {
  cfg.validate();
  Corpus corpus;
  corpus.per_kind = cfg.per_kind;
  corpus.heldout_fraction = cfg.heldout_fraction;
  corpus.pairs.reserve(static_cast<size_t>(3 * cfg.per_kind));
  const std::vector<Tensor> cleans =
      make_clean_corpus(3 * cfg.per_kind, cfg.image_size, cfg.image_size, cfg.seed);
  int64_t global = 0;
  for (DegradationKind kind : kAllKinds) {
    for (int64_t i = 0; i < cfg.per_kind; ++i, ++global) {
      const uint64_t pair_seed = mix_seed(cfg.seed ^ 0xdeba5e0fULL, static_cast<uint64_t>(global));
      DegradedPair pair =
          apply_degradation(cleans[static_cast<size_t>(global)], cfg.spec_for(kind, pair_seed));
      pair.index = global;
      corpus.pairs.push_back(std::move(pair));
    }
  }
  return corpus;
}

}  // namespace uir
