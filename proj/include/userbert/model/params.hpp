#pragma once

#include <string>
#include <vector>

#include "userbert/model/types.hpp"
#include "userbert/rng.hpp"

namespace userbert {

/// All learnable tensors. Biases and layer-norm gains are stored as 1 x n
/// matrices so every parameter is visitable uniformly (checkpointing, Adam,
/// gradient checks, zeroing all use visit()).
template <class S>
struct Parameters {
  ModelConfig cfg;
  ModelDims dims;

  // embedding tables
  std::vector<Mat<S>> long_attr_emb;   // per attribute: vocab x attr_dim
  std::vector<Mat<S>> short_attr_emb;
  Mat<S> long_fuse;                    // (n_attr * attr_dim) x H
  Mat<S> short_fuse;
  Mat<S> long_pos;                     // max_long_positions x H
  Mat<S> short_pos;                    // max_short_positions x H
  Mat<S> segment_emb;                  // 3 x H
  std::vector<Mat<S>> profile_emb;     // per attribute: vocab x H
  Mat<S> cls_emb;                      // 1 x H

  struct Layer {
    Mat<S> wq, wk, wv, wo;     // H x H
    Mat<S> bq, bk, bv, bo;     // 1 x H
    Mat<S> w1, b1, w2, b2;     // H x ffn, 1 x ffn, ffn x H, 1 x H
    Mat<S> ln1_g, ln1_b, ln2_g, ln2_b;  // 1 x H
  };
  std::vector<Layer> layers;

  // masked-attribute prediction heads
  std::vector<Mat<S>> long_head_w, short_head_w;  // H x vocab
  std::vector<Mat<S>> long_head_b, short_head_b;  // 1 x vocab
  // first-token classification head (0 x 0 until a task attaches one)
  Mat<S> cls_head_w;  // H x num_classes
  Mat<S> cls_head_b;  // 1 x num_classes

  Parameters() = default;
  Parameters(ModelConfig config, ModelDims d) : cfg(std::move(config)), dims(std::move(d)) {
    cfg.validate();
    allocate();
  }

  int hidden() const { return cfg.hidden; }
  int num_classes() const { return int(cls_head_w.cols()); }

  void attach_classification_head(int num_classes) {
    cls_head_w = Mat<S>::Zero(cfg.hidden, num_classes);
    cls_head_b = Mat<S>::Zero(1, num_classes);
    names_.clear();  // the tensor list just changed
  }

  /// Truncated-normal(0, std) weights, zero biases, unit layer-norm gains.
  void init(CounterRng rng, S stddev = S(0.02)) {
    auto trunc_normal = [&](Mat<S>& m) {
      for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
          double x = rng.normal();
          while (std::abs(x) > 2.0) x = rng.normal();
          m(i, j) = S(x) * stddev;
        }
    };
    visit([&](const std::string& name, Mat<S>& m) {
      if (name.ends_with("ln1_g") || name.ends_with("ln2_g")) {
        m.setConstant(S(1));
      } else if (name.ends_with("_b") || name.ends_with(".b") || name.ends_with("bq") ||
                 name.ends_with("bk") || name.ends_with("bv") || name.ends_with("bo") ||
                 name.ends_with("b1") || name.ends_with("b2")) {
        m.setZero();
      } else {
        trunc_normal(m);
      }
    });
  }

  void set_zero() {
    visit([](const std::string&, Mat<S>& m) { m.setZero(); });
  }

  /// Same-shape zero copy (gradients, optimizer accumulators).
  static Parameters like(const Parameters& p) {
    Parameters out(p.cfg, p.dims);
    if (p.num_classes() > 0) out.attach_classification_head(p.num_classes());
    out.set_zero();
    return out;
  }

  template <class S2>
  Parameters<S2> cast() const {
    Parameters<S2> out(cfg, dims);
    if (num_classes() > 0) out.attach_classification_head(num_classes());
    auto src = const_cast<Parameters*>(this)->tensors();
    auto dst = out.tensors();
    for (size_t i = 0; i < src.size(); ++i) *dst[i] = src[i]->template cast<S2>();
    return out;
  }

  /// Visits every tensor with a stable name, in a stable order.
  template <class F>
  void visit(F&& f) {
    const auto& names = tensor_names();
    auto ptrs = tensors();
    for (size_t i = 0; i < ptrs.size(); ++i) f(names[i], *ptrs[i]);
  }

  /// Ordered pointer list (parallels tensor_names()).
  std::vector<Mat<S>*> tensors() {
    std::vector<Mat<S>*> out;
    for (auto& m : long_attr_emb) out.push_back(&m);
    for (auto& m : short_attr_emb) out.push_back(&m);
    out.push_back(&long_fuse);
    out.push_back(&short_fuse);
    out.push_back(&long_pos);
    out.push_back(&short_pos);
    out.push_back(&segment_emb);
    for (auto& m : profile_emb) out.push_back(&m);
    out.push_back(&cls_emb);
    for (auto& l : layers) {
      for (Mat<S>* m : {&l.wq, &l.bq, &l.wk, &l.bk, &l.wv, &l.bv, &l.wo, &l.bo, &l.w1, &l.b1,
                        &l.w2, &l.b2, &l.ln1_g, &l.ln1_b, &l.ln2_g, &l.ln2_b})
        out.push_back(m);
    }
    for (auto& m : long_head_w) out.push_back(&m);
    for (auto& m : long_head_b) out.push_back(&m);
    for (auto& m : short_head_w) out.push_back(&m);
    for (auto& m : short_head_b) out.push_back(&m);
    if (cls_head_w.size() > 0) {
      out.push_back(&cls_head_w);
      out.push_back(&cls_head_b);
    }
    return out;
  }

  const std::vector<std::string>& tensor_names() const {
    if (names_.empty()) {
      auto& names = names_;
      for (size_t a = 0; a < long_attr_emb.size(); ++a)
        names.push_back("emb.long." + std::to_string(a));
      for (size_t a = 0; a < short_attr_emb.size(); ++a)
        names.push_back("emb.short." + std::to_string(a));
      names.push_back("fuse.long");
      names.push_back("fuse.short");
      names.push_back("pos.long");
      names.push_back("pos.short");
      names.push_back("seg");
      for (size_t a = 0; a < profile_emb.size(); ++a)
        names.push_back("emb.profile." + std::to_string(a));
      names.push_back("cls");
      for (size_t l = 0; l < layers.size(); ++l) {
        std::string p = "layer" + std::to_string(l) + ".";
        for (const char* n : {"wq", "bq", "wk", "bk", "wv", "bv", "wo", "bo", "w1", "b1", "w2",
                              "b2", "ln1_g", "ln1_b", "ln2_g", "ln2_b"})
          names.push_back(p + n);
      }
      for (size_t a = 0; a < long_head_w.size(); ++a)
        names.push_back("head.long." + std::to_string(a) + ".w");
      for (size_t a = 0; a < long_head_b.size(); ++a)
        names.push_back("head.long." + std::to_string(a) + ".b");
      for (size_t a = 0; a < short_head_w.size(); ++a)
        names.push_back("head.short." + std::to_string(a) + ".w");
      for (size_t a = 0; a < short_head_b.size(); ++a)
        names.push_back("head.short." + std::to_string(a) + ".b");
      if (cls_head_w.size() > 0) {
        names.push_back("head.cls.w");
        names.push_back("head.cls.b");
      }
    }
    return names_;
  }

 private:
  void allocate() {
    const int H = cfg.hidden;
    const int D = cfg.attr_dim;
    for (int v : dims.long_vocab) long_attr_emb.push_back(Mat<S>::Zero(v, D));
    for (int v : dims.short_vocab) short_attr_emb.push_back(Mat<S>::Zero(v, D));
    long_fuse = Mat<S>::Zero(int(dims.long_vocab.size()) * D, H);
    short_fuse = Mat<S>::Zero(int(dims.short_vocab.size()) * D, H);
    long_pos = Mat<S>::Zero(cfg.max_long_positions, H);
    short_pos = Mat<S>::Zero(cfg.max_short_positions, H);
    segment_emb = Mat<S>::Zero(3, H);
    for (int v : dims.profile_vocab) profile_emb.push_back(Mat<S>::Zero(v, H));
    cls_emb = Mat<S>::Zero(1, H);
    layers.resize(size_t(cfg.num_layers));
    for (auto& l : layers) {
      l.wq = l.wk = l.wv = l.wo = Mat<S>::Zero(H, H);
      l.bq = l.bk = l.bv = l.bo = Mat<S>::Zero(1, H);
      l.w1 = Mat<S>::Zero(H, cfg.ffn);
      l.b1 = Mat<S>::Zero(1, cfg.ffn);
      l.w2 = Mat<S>::Zero(cfg.ffn, H);
      l.b2 = Mat<S>::Zero(1, H);
      l.ln1_g = l.ln1_b = l.ln2_g = l.ln2_b = Mat<S>::Zero(1, H);
    }
    for (int v : dims.long_vocab) {
      long_head_w.push_back(Mat<S>::Zero(H, v));
      long_head_b.push_back(Mat<S>::Zero(1, v));
    }
    for (int v : dims.short_vocab) {
      short_head_w.push_back(Mat<S>::Zero(H, v));
      short_head_b.push_back(Mat<S>::Zero(1, v));
    }
  }

  mutable std::vector<std::string> names_;
};

/// Coarse family of a tensor name (gradient-check reporting).
inline std::string tensor_family(const std::string& name) {
  if (name.rfind("emb.", 0) == 0) return "embedding." + name.substr(4, name.rfind('.') - 4);
  if (name.rfind("fuse.", 0) == 0) return "fusion";
  if (name.rfind("pos.", 0) == 0) return "position";
  if (name == "seg") return "segment";
  if (name == "cls") return "cls_token";
  if (name.rfind("layer", 0) == 0) {
    auto dot = name.find('.');
    std::string part = name.substr(dot + 1);
    if (part.rfind("ln", 0) == 0) return "layernorm";
    if (part[0] == 'w' && (part[1] == '1' || part[1] == '2')) return "ffn";
    if (part[0] == 'b' && (part[1] == '1' || part[1] == '2')) return "ffn";
    return "attention";
  }
  if (name.rfind("head.cls", 0) == 0) return "cls_head";
  if (name.rfind("head.", 0) == 0) return "prediction_heads";
  return "other";
}

}  // namespace userbert
