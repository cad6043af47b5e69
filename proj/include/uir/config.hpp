#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "uir/corpus.hpp"
#include "uir/optim.hpp"
#include "uir/rng.hpp"
#include "uir/train.hpp"
#include "uir/unlearn.hpp"

namespace uir {

struct ModelConfig {
  int64_t width = 16;
  int64_t depth = 4;
  uint64_t seed = 3;
};

// Resolved configuration of the whole pipeline. The JSON form materializes
// every default; files and overrides may only touch keys that exist there
// (unknown keys are rejected, so typos fail loudly).
struct RunConfig {
  CorpusConfig corpus;
  ModelConfig model;
  TrainConfig pretrain_train;
  OptimizerConfig pretrain_opt;
  UnlearnConfig unlearn;
  TrainConfig unlearn_batch;
  OptimizerConfig unlearn_opt;

  RunConfig() {
    pretrain_opt.lr = 2e-3;
    unlearn_batch.epochs = 2;  // mirrored into unlearn.epochs; kept consistent below
    unlearn_batch.seed = 7;
    unlearn_opt.lr = 2e-3;
  }
};

inline nlohmann::json config_to_json(const RunConfig& c) {
  nlohmann::json j;
  j["corpus"] = {{"per_kind", c.corpus.per_kind},
                 {"image_size", c.corpus.image_size},
                 {"seed", c.corpus.seed},
                 {"noise_sigma", c.corpus.noise_sigma},
                 {"haze_beta", c.corpus.haze_beta},
                 {"haze_airlight", c.corpus.haze_airlight},
                 {"rain_density", c.corpus.rain_density},
                 {"streak_length", c.corpus.streak_length},
                 {"heldout_fraction", c.corpus.heldout_fraction}};
  j["model"] = {{"width", c.model.width}, {"depth", c.model.depth}, {"seed", c.model.seed}};
  j["pretrain"] = {{"epochs", c.pretrain_train.epochs},
                   {"batch_size", c.pretrain_train.batch_size},
                   {"crop", c.pretrain_train.crop},
                   {"flips", c.pretrain_train.flips},
                   {"seed", c.pretrain_train.seed},
                   {"lr", c.pretrain_opt.lr},
                   {"beta1", c.pretrain_opt.beta1},
                   {"beta2", c.pretrain_opt.beta2},
                   {"eps", c.pretrain_opt.eps}};
  j["unlearn"] = {{"epochs", c.unlearn.epochs},
                  {"batch_size", c.unlearn_batch.batch_size},
                  {"crop", c.unlearn_batch.crop},
                  {"flips", c.unlearn_batch.flips},
                  {"seed", c.unlearn.seed},
                  {"lr", c.unlearn_opt.lr},
                  {"beta1", c.unlearn_opt.beta1},
                  {"beta2", c.unlearn_opt.beta2},
                  {"eps", c.unlearn_opt.eps},
                  {"w_adv", c.unlearn.w_adv},
                  {"w_ins", c.unlearn.w_ins},
                  {"w_retain", c.unlearn.w_retain},
                  {"retain_fraction", c.unlearn.retain_fraction},
                  {"retain_batch_size", c.unlearn.retain_batch_size},
                  {"enable_ins", c.unlearn.enable_ins},
                  {"enable_adv", c.unlearn.enable_adv},
                  {"loss_kind", loss_kind_name(c.unlearn.loss_kind)}};
  return j;
}

namespace detail {

inline void merge_checked(nlohmann::json& base, const nlohmann::json& user,
                          const std::string& prefix) {
  if (!user.is_object())
    throw ConfigError("config section '" + (prefix.empty() ? "<root>" : prefix) +
                      "' must be an object");
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (!base.contains(it.key())) throw ConfigError("unknown config key '" + path + "'");
    nlohmann::json& slot = base[it.key()];
    if (slot.is_object()) {
      merge_checked(slot, it.value(), path);
    } else {
      if (slot.is_boolean() != it.value().is_boolean() ||
          slot.is_string() != it.value().is_string() ||
          slot.is_number() != it.value().is_number())
        throw ConfigError("config key '" + path + "' has the wrong type");
      slot = it.value();
    }
  }
}

}  // namespace detail

// "unlearn.w_adv=1.5" style override; the key must already exist.
inline void apply_override(nlohmann::json& base, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ConfigError("override '" + assignment + "' is not of the form key=value");
  const std::string path = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);

  std::vector<std::string> parts;
  size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    parts.push_back(path.substr(start, dot == std::string::npos ? dot : dot - start));
    if (dot == std::string::npos) break;
    start = dot + 1;
  }

  nlohmann::json* slot = &base;
  for (size_t i = 0; i < parts.size(); ++i) {
    if (!slot->is_object() || !slot->contains(parts[i]))
      throw ConfigError("unknown config key '" + path + "'");
    slot = &(*slot)[parts[i]];
  }
  if (slot->is_object()) throw ConfigError("config key '" + path + "' is a section, not a value");

  nlohmann::json value;
  try {
    value = nlohmann::json::parse(raw);
  } catch (const nlohmann::json::exception&) {
    value = raw;  // plain string
  }
  if (slot->is_boolean() != value.is_boolean() || slot->is_string() != value.is_string() ||
      slot->is_number() != value.is_number())
    throw ConfigError("override '" + path + "' has the wrong type");
  *slot = value;
}

inline RunConfig config_from_json(const nlohmann::json& j) {
  RunConfig c;
  const auto& jc = j.at("corpus");
  c.corpus.per_kind = jc.at("per_kind").get<int64_t>();
  c.corpus.image_size = jc.at("image_size").get<int64_t>();
  c.corpus.seed = jc.at("seed").get<uint64_t>();
  c.corpus.noise_sigma = jc.at("noise_sigma").get<double>();
  c.corpus.haze_beta = jc.at("haze_beta").get<double>();
  c.corpus.haze_airlight = jc.at("haze_airlight").get<double>();
  c.corpus.rain_density = jc.at("rain_density").get<double>();
  c.corpus.streak_length = jc.at("streak_length").get<int64_t>();
  c.corpus.heldout_fraction = jc.at("heldout_fraction").get<double>();

  const auto& jm = j.at("model");
  c.model.width = jm.at("width").get<int64_t>();
  c.model.depth = jm.at("depth").get<int64_t>();
  c.model.seed = jm.at("seed").get<uint64_t>();

  const auto& jp = j.at("pretrain");
  c.pretrain_train.epochs = jp.at("epochs").get<int64_t>();
  c.pretrain_train.batch_size = jp.at("batch_size").get<int64_t>();
  c.pretrain_train.crop = jp.at("crop").get<int64_t>();
  c.pretrain_train.flips = jp.at("flips").get<bool>();
  c.pretrain_train.seed = jp.at("seed").get<uint64_t>();
  c.pretrain_opt.lr = jp.at("lr").get<double>();
  c.pretrain_opt.beta1 = jp.at("beta1").get<double>();
  c.pretrain_opt.beta2 = jp.at("beta2").get<double>();
  c.pretrain_opt.eps = jp.at("eps").get<double>();

  const auto& ju = j.at("unlearn");
  c.unlearn.epochs = ju.at("epochs").get<int64_t>();
  c.unlearn.w_adv = ju.at("w_adv").get<double>();
  c.unlearn.w_ins = ju.at("w_ins").get<double>();
  c.unlearn.w_retain = ju.at("w_retain").get<double>();
  c.unlearn.retain_fraction = ju.at("retain_fraction").get<double>();
  c.unlearn.retain_batch_size = ju.at("retain_batch_size").get<int64_t>();
  c.unlearn.enable_ins = ju.at("enable_ins").get<bool>();
  c.unlearn.enable_adv = ju.at("enable_adv").get<bool>();
  c.unlearn.loss_kind = loss_kind_from_name(ju.at("loss_kind").get<std::string>());
  c.unlearn.seed = ju.at("seed").get<uint64_t>();
  c.unlearn_batch.epochs = c.unlearn.epochs;
  c.unlearn_batch.batch_size = ju.at("batch_size").get<int64_t>();
  c.unlearn_batch.crop = ju.at("crop").get<int64_t>();
  c.unlearn_batch.flips = ju.at("flips").get<bool>();
  c.unlearn_batch.seed = c.unlearn.seed;
  c.unlearn_opt.lr = ju.at("lr").get<double>();
  c.unlearn_opt.beta1 = ju.at("beta1").get<double>();
  c.unlearn_opt.beta2 = ju.at("beta2").get<double>();
  c.unlearn_opt.eps = ju.at("eps").get<double>();
  return c;
}

inline std::string read_file_for_config(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open config file '" + path + "'");
  return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

// Defaults -> optional config file -> overrides -> optional master seed.
// Returns both the struct form and the resolved JSON that gets persisted.
inline std::pair<RunConfig, nlohmann::json> resolve_config(
    const std::string& config_path, const std::vector<std::string>& overrides,
    std::optional<uint64_t> master_seed) {
  nlohmann::json resolved = config_to_json(RunConfig{});
  if (!config_path.empty()) {
    nlohmann::json user;
    try {
      user = nlohmann::json::parse(read_file_for_config(config_path));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config file '" + config_path + "' is not valid JSON: " + e.what());
    }
    detail::merge_checked(resolved, user, "");
  }
  for (const auto& o : overrides) apply_override(resolved, o);
  if (master_seed) {
    resolved["corpus"]["seed"] = mix_seed(*master_seed, 1);
    resolved["model"]["seed"] = mix_seed(*master_seed, 2);
    resolved["pretrain"]["seed"] = mix_seed(*master_seed, 3);
    resolved["unlearn"]["seed"] = mix_seed(*master_seed, 4);
  }
  RunConfig cfg = config_from_json(resolved);
  cfg.corpus.validate();
  cfg.pretrain_opt.validate();
  cfg.unlearn_opt.validate();
  cfg.unlearn.validate();
  return {cfg, resolved};
}

}  // namespace uir
