#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>

#include "userbert/model/adam.hpp"
#include "userbert/model/params.hpp"

namespace userbert {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format is little-endian");

struct CheckpointMeta {
  uint64_t vocab_digest = 0;
  int64_t step = 0;
  uint64_t rng_key = 0;
  uint64_t rng_counter = 0;
};

struct LoadedCheckpoint {
  Parameters<float> params;
  CheckpointMeta meta;
  std::optional<AdamState<float>> optimizer;
};

namespace detail {

inline void write_u32(std::ostream& out, uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), 4);
}
inline void write_u64(std::ostream& out, uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), 8);
}
inline void write_f64(std::ostream& out, double v) {
  out.write(reinterpret_cast<const char*>(&v), 8);
}
inline uint32_t read_u32(std::istream& in) {
  uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 4);
  if (!in) throw IoError("checkpoint: truncated file");
  return v;
}
inline uint64_t read_u64(std::istream& in) {
  uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 8);
  if (!in) throw IoError("checkpoint: truncated file");
  return v;
}
inline double read_f64(std::istream& in) {
  double v = 0;
  in.read(reinterpret_cast<char*>(&v), 8);
  if (!in) throw IoError("checkpoint: truncated file");
  return v;
}

inline void write_string(std::ostream& out, const std::string& s) {
  write_u32(out, uint32_t(s.size()));
  out.write(s.data(), long(s.size()));
}
inline std::string read_string(std::istream& in) {
  uint32_t n = read_u32(in);
  std::string s(n, '\0');
  in.read(s.data(), long(n));
  if (!in) throw IoError("checkpoint: truncated string");
  return s;
}

/// Named tensor block: name, rows, cols, float32 payload (column-major).
inline void write_tensor(std::ostream& out, const std::string& name, const Mat<float>& m) {
  write_string(out, name);
  write_u32(out, uint32_t(m.rows()));
  write_u32(out, uint32_t(m.cols()));
  out.write(reinterpret_cast<const char*>(m.data()), std::streamsize(m.size()) * 4);
}

inline void read_tensor_into(std::istream& in, const std::string& expected_name, Mat<float>& m) {
  std::string name = read_string(in);
  if (name != expected_name)
    throw IoError("checkpoint: tensor '" + name + "' where '" + expected_name + "' expected");
  uint32_t rows = read_u32(in), cols = read_u32(in);
  if (int64_t(rows) != m.rows() || int64_t(cols) != m.cols())
    throw IoError("checkpoint: tensor '" + name + "' shape mismatch");
  in.read(reinterpret_cast<char*>(m.data()), std::streamsize(m.size()) * 4);
  if (!in) throw IoError("checkpoint: truncated tensor payload");
}

inline void write_all_tensors(std::ostream& out, Parameters<float>& p) {
  write_u32(out, uint32_t(p.tensors().size()));
  p.visit([&](const std::string& name, Mat<float>& m) { write_tensor(out, name, m); });
}

inline void read_all_tensors(std::istream& in, Parameters<float>& p) {
  uint32_t n = read_u32(in);
  if (n != p.tensors().size()) throw IoError("checkpoint: tensor count mismatch");
  p.visit([&](const std::string& name, Mat<float>& m) { read_tensor_into(in, name, m); });
}

inline std::string dims_to_text(const ModelDims& d) {
  auto join = [](const std::vector<int>& v) {
    std::ostringstream s;
    for (size_t i = 0; i < v.size(); ++i) s << (i ? "," : "") << v[i];
    return s.str();
  };
  return "dims.long = " + join(d.long_vocab) + "\ndims.short = " + join(d.short_vocab) +
         "\ndims.profile = " + join(d.profile_vocab) + "\n";
}

inline std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::istringstream in(s);
  std::string tok;
  while (std::getline(in, tok, ','))
    if (!tok.empty()) out.push_back(std::stoi(tok));
  return out;
}

constexpr const char* kCkptHeader = "USERBERT-CKPT v1\n";

}  // namespace detail

inline void save_checkpoint(const std::string& path, Parameters<float>& params,
                            const CheckpointMeta& meta, AdamState<float>* optimizer = nullptr) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path);
  out << detail::kCkptHeader;

  Config cfg_text;
  params.cfg.store(cfg_text);
  cfg_text.set("num_classes", std::to_string(params.num_classes()));
  detail::write_string(out, cfg_text.to_string() + detail::dims_to_text(params.dims));
  detail::write_u64(out, meta.vocab_digest);
  detail::write_u64(out, uint64_t(meta.step));
  detail::write_u64(out, meta.rng_key);
  detail::write_u64(out, meta.rng_counter);
  out.put(optimizer ? 1 : 0);
  detail::write_all_tensors(out, params);
  if (optimizer) {
    detail::write_f64(out, optimizer->cfg.lr);
    detail::write_f64(out, optimizer->cfg.beta1);
    detail::write_f64(out, optimizer->cfg.beta2);
    detail::write_f64(out, optimizer->cfg.eps);
    detail::write_u64(out, uint64_t(optimizer->step));
    detail::write_all_tensors(out, optimizer->m);
    detail::write_all_tensors(out, optimizer->v);
  }
  if (!out) throw IoError("checkpoint write failure: " + path);
}

/// Loads a checkpoint; when expected_vocab_digest is given, refuses to load
/// parameters built against a different vocabulary.
inline LoadedCheckpoint load_checkpoint(const std::string& path,
                                        std::optional<uint64_t> expected_vocab_digest = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  std::string header(std::string(detail::kCkptHeader).size(), '\0');
  in.read(header.data(), long(header.size()));
  if (!in || header != detail::kCkptHeader)
    throw IoError("checkpoint '" + path + "': bad or missing header/version");

  Config cfg_text = Config::from_string(detail::read_string(in));
  ModelConfig mcfg = ModelConfig::from(cfg_text);
  ModelDims dims;
  dims.long_vocab = detail::parse_int_list(cfg_text.get_string("dims.long", ""));
  dims.short_vocab = detail::parse_int_list(cfg_text.get_string("dims.short", ""));
  dims.profile_vocab = detail::parse_int_list(cfg_text.get_string("dims.profile", ""));
  int num_classes = int(cfg_text.get_int("num_classes", 0));

  LoadedCheckpoint ckpt{Parameters<float>(mcfg, dims), {}, {}};
  if (num_classes > 0) ckpt.params.attach_classification_head(num_classes);
  ckpt.meta.vocab_digest = detail::read_u64(in);
  if (expected_vocab_digest && *expected_vocab_digest != ckpt.meta.vocab_digest)
    throw ValidationError("checkpoint '" + path + "': vocabulary digest mismatch");
  ckpt.meta.step = int64_t(detail::read_u64(in));
  ckpt.meta.rng_key = detail::read_u64(in);
  ckpt.meta.rng_counter = detail::read_u64(in);
  int has_opt = in.get();
  if (has_opt < 0) throw IoError("checkpoint: truncated file");
  detail::read_all_tensors(in, ckpt.params);
  if (has_opt) {
    AdamState<float> state(ckpt.params);
    state.cfg.lr = detail::read_f64(in);
    state.cfg.beta1 = detail::read_f64(in);
    state.cfg.beta2 = detail::read_f64(in);
    state.cfg.eps = detail::read_f64(in);
    state.step = int64_t(detail::read_u64(in));
    detail::read_all_tensors(in, state.m);
    detail::read_all_tensors(in, state.v);
    ckpt.optimizer = std::move(state);
  }
  return ckpt;
}

}  // namespace userbert
