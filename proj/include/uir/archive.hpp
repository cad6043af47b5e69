#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "uir/corpus.hpp"
#include "uir/model.hpp"
#include "uir/optim.hpp"
#include "uir/tensor.hpp"

namespace uir {

// On-disk container: named float64 tensors plus a JSON metadata block.
// Fixed little-endian layout, FNV-1a digest trailer. Version-checked on load;
// bad magic, version mismatch, digest mismatch and truncation are reported
// as distinct errors.
//
//   magic "UIRARCH\0" | u32 version | u64 meta_len | meta bytes |
//   u32 count | { u32 name_len | name | u32 ndim | i64 dims | f64 data }* |
//   u64 digest
struct Archive {
  nlohmann::json meta;
  std::vector<std::pair<std::string, Tensor>> tensors;

  const Tensor* find(const std::string& name) const {
    for (const auto& [n, t] : tensors)
      if (n == name) return &t;
    return nullptr;
  }
};

namespace detail {

constexpr char kArchiveMagic[8] = {'U', 'I', 'R', 'A', 'R', 'C', 'H', '\0'};
constexpr uint32_t kArchiveVersion = 1;

inline uint64_t fnv1a(const uint8_t* data, size_t len) {
  uint64_t h = 14695981039346656037ULL;
  for (size_t i = 0; i < len; ++i) {
    h ^= data[i];
    h *= 1099511628211ULL;
  }
  return h;
}

class ByteWriter {
public:
  void raw(const void* p, size_t n) {
    const auto* b = static_cast<const uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  void u32(uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<uint8_t>(v >> (8 * i)));
  }
  void u64(uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<uint8_t>(v >> (8 * i)));
  }
  void i64(int64_t v) { u64(static_cast<uint64_t>(v)); }
  void f64(double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    u64(bits);
  }
  std::vector<uint8_t>& buffer() { return buf_; }

private:
  std::vector<uint8_t> buf_;
};

class ByteReader {
public:
  ByteReader(const uint8_t* data, size_t len) : data_(data), len_(len) {}

  void raw(void* out, size_t n) {
    need(n);
    std::memcpy(out, data_ + pos_, n);
    pos_ += n;
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(data_[pos_ + static_cast<size_t>(i)]) << (8 * i);
    pos_ += 4;
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(data_[pos_ + static_cast<size_t>(i)]) << (8 * i);
    pos_ += 8;
    return v;
  }
  int64_t i64() { return static_cast<int64_t>(u64()); }
  double f64() {
    const uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  size_t remaining() const { return len_ - pos_; }

private:
  void need(size_t n) const {
    if (pos_ + n > len_) throw IoError("truncated archive");
  }
  const uint8_t* data_;
  size_t len_;
  size_t pos_ = 0;
};

}  // namespace detail

inline void save_archive(const std::string& path, const Archive& archive) {
  detail::ByteWriter w;
  w.raw(detail::kArchiveMagic, 8);
  w.u32(detail::kArchiveVersion);
  const std::string meta = archive.meta.dump();
  w.u64(meta.size());
  w.raw(meta.data(), meta.size());
  w.u32(static_cast<uint32_t>(archive.tensors.size()));
  for (const auto& [name, tensor] : archive.tensors) {
    w.u32(static_cast<uint32_t>(name.size()));
    w.raw(name.data(), name.size());
    w.u32(static_cast<uint32_t>(tensor.shape().size()));
    for (int64_t d : tensor.shape()) w.i64(d);
    for (double v : tensor.values()) w.f64(v);
  }
  const uint64_t digest = detail::fnv1a(w.buffer().data(), w.buffer().size());
  w.u64(digest);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(w.buffer().data()),
            static_cast<std::streamsize>(w.buffer().size()));
  if (!out) throw IoError("failed writing '" + path + "'");
}

inline Archive load_archive(const std::string& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  const auto size = static_cast<size_t>(in.tellg());
  in.seekg(0);
  std::vector<uint8_t> bytes(size);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
  if (!in) throw IoError("failed reading '" + path + "'");

  if (size < 8 + 4 + 8 + 8) throw IoError("truncated archive");
  if (std::memcmp(bytes.data(), detail::kArchiveMagic, 8) != 0)
    throw IoError("not an archive: bad magic in '" + path + "'");

  // digest covers everything before the trailer
  detail::ByteReader trailer(bytes.data() + size - 8, 8);
  const uint64_t stored = trailer.u64();
  const uint64_t actual = detail::fnv1a(bytes.data(), size - 8);
  if (stored != actual) throw IoError("archive digest mismatch (corrupted file): '" + path + "'");

  detail::ByteReader r(bytes.data(), size - 8);
  char magic[8];
  r.raw(magic, 8);
  const uint32_t version = r.u32();
  if (version != detail::kArchiveVersion)
    throw IoError("unsupported archive version " + std::to_string(version) + " (expected " +
                  std::to_string(detail::kArchiveVersion) + ")");

  Archive archive;
  const uint64_t meta_len = r.u64();
  std::string meta(meta_len, '\0');
  r.raw(meta.data(), meta_len);
  try {
    archive.meta = nlohmann::json::parse(meta);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("archive metadata is not valid JSON: ") + e.what());
  }

  const uint32_t count = r.u32();
  for (uint32_t t = 0; t < count; ++t) {
    const uint32_t name_len = r.u32();
    std::string name(name_len, '\0');
    r.raw(name.data(), name_len);
    const uint32_t ndim = r.u32();
    Shape shape(ndim);
    for (uint32_t d = 0; d < ndim; ++d) shape[d] = r.i64();
    const int64_t numel = shape_numel(shape);
    std::vector<double> values(static_cast<size_t>(numel));
    for (auto& v : values) v = r.f64();
    archive.tensors.emplace_back(name, Tensor::from_values(std::move(shape), std::move(values)));
  }
  return archive;
}

// ---- model checkpoints ----

struct OptimizerState {
  std::vector<std::vector<double>> m, v;
  int64_t step = 0;
};

inline void save_checkpoint(const std::string& path, const RestorationModel& model,
                            const Adam* adam = nullptr) {
  Archive a;
  a.meta["kind"] = "model";
  a.meta["width"] = model.width();
  a.meta["depth"] = model.depth();
  a.meta["seed"] = model.seed();
  a.meta["has_optimizer"] = adam != nullptr;
  for (const auto& p : model.params()) a.tensors.emplace_back(p.name, p.tensor);
  if (adam) {
    a.meta["optimizer_step"] = adam->step_count();
    const auto& params = model.params();
    for (size_t i = 0; i < params.size(); ++i) {
      a.tensors.emplace_back("adam.m." + params[i].name,
                             Tensor::from_values(params[i].tensor.shape(), adam->first_moments()[i]));
      a.tensors.emplace_back("adam.v." + params[i].name,
                             Tensor::from_values(params[i].tensor.shape(), adam->second_moments()[i]));
    }
  }
  save_archive(path, a);
}

inline RestorationModel load_checkpoint(const std::string& path,
                                        OptimizerState* opt_state = nullptr) {
  const Archive a = load_archive(path);
  if (!a.meta.contains("kind") || a.meta["kind"] != "model")
    throw IoError("archive '" + path + "' is not a model checkpoint");
  RestorationModel model(a.meta["width"].get<int64_t>(), a.meta["depth"].get<int64_t>(),
                         a.meta["seed"].get<uint64_t>());
  for (auto& p : model.params()) {
    const Tensor* stored = a.find(p.name);
    if (!stored) throw IoError("checkpoint '" + path + "' is missing parameter '" + p.name + "'");
    if (stored->shape() != p.tensor.shape())
      throw IoError("checkpoint parameter '" + p.name + "' has shape " +
                    shape_str(stored->shape()) + ", expected " + shape_str(p.tensor.shape()));
    p.tensor.values() = stored->values();
  }
  if (opt_state && a.meta.value("has_optimizer", false)) {
    opt_state->step = a.meta["optimizer_step"].get<int64_t>();
    for (const auto& p : model.params()) {
      const Tensor* m = a.find("adam.m." + p.name);
      const Tensor* v = a.find("adam.v." + p.name);
      if (!m || !v) throw IoError("checkpoint '" + path + "' has incomplete optimizer state");
      opt_state->m.push_back(m->values());
      opt_state->v.push_back(v->values());
    }
  }
  return model;
}

// ---- corpus container ----

inline void save_corpus(const std::string& path, const Corpus& corpus) {
  Archive a;
  a.meta["kind"] = "corpus";
  a.meta["per_kind"] = corpus.per_kind;
  a.meta["heldout_fraction"] = corpus.heldout_fraction;
  nlohmann::json kinds = nlohmann::json::array();
  for (const auto& p : corpus.pairs) kinds.push_back(kind_name(p.kind));
  a.meta["pair_kinds"] = kinds;
  for (size_t i = 0; i < corpus.pairs.size(); ++i) {
    a.tensors.emplace_back("pair" + std::to_string(i) + ".degraded", corpus.pairs[i].degraded);
    a.tensors.emplace_back("pair" + std::to_string(i) + ".clean", corpus.pairs[i].clean);
  }
  save_archive(path, a);
}

inline Corpus load_corpus(const std::string& path) {
  const Archive a = load_archive(path);
  if (!a.meta.contains("kind") || a.meta["kind"] != "corpus")
    throw IoError("archive '" + path + "' is not a corpus");
  Corpus corpus;
  corpus.per_kind = a.meta["per_kind"].get<int64_t>();
  corpus.heldout_fraction = a.meta["heldout_fraction"].get<double>();
  const auto& kinds = a.meta["pair_kinds"];
  for (size_t i = 0; i < kinds.size(); ++i) {
    DegradedPair pair;
    const Tensor* deg = a.find("pair" + std::to_string(i) + ".degraded");
    const Tensor* cln = a.find("pair" + std::to_string(i) + ".clean");
    if (!deg || !cln) throw IoError("corpus '" + path + "' is missing pair " + std::to_string(i));
    pair.degraded = deg->clone();
    pair.clean = cln->clone();
    pair.kind = kind_from_name(kinds[i].get<std::string>());
    pair.index = static_cast<int64_t>(i);
    corpus.pairs.push_back(std::move(pair));
  }
  return corpus;
}

}  // namespace uir
