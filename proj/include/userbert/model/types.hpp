#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "userbert/common.hpp"
#include "userbert/config.hpp"
#include "userbert/vocab.hpp"

namespace userbert {

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;
template <class S>
using RowVec = Eigen::Matrix<S, 1, Eigen::Dynamic>;

struct ModelConfig {
  int num_layers = 4;
  int hidden = 128;
  int heads = 4;
  int ffn = 512;  // 4H
  double dropout = 0.1;
  int attr_dim = 16;            // per-attribute embedding width before fusion
  int max_long_positions = 256;   // day indices
  int max_short_positions = 512;  // hour indices
  int max_long_words = 128;
  int max_short_words = 128;
  bool mask_keep_position = false;  // zero only the token part of masked vectors
  bool sigmoid_bce = false;         // sigmoid + binary CE reconstruction variant
  double mask_select_p = 0.15;
  double mask_zero_p = 0.8;

  void validate() const {
    if (num_layers <= 0 || hidden <= 0 || heads <= 0 || ffn <= 0 || attr_dim <= 0)
      throw ValidationError("model config: dimensions must be positive");
    if (hidden % heads != 0) throw ValidationError("model config: hidden not divisible by heads");
    if (dropout < 0 || dropout >= 1) throw ValidationError("model config: bad dropout rate");
  }

  static ModelConfig from(const Config& c) {
    ModelConfig m;
    m.num_layers = int(c.get_int("model.layers", m.num_layers));
    m.hidden = int(c.get_int("model.hidden", m.hidden));
    m.heads = int(c.get_int("model.heads", m.heads));
    m.ffn = int(c.get_int("model.ffn", 4 * m.hidden));
    m.dropout = c.get_double("model.dropout", m.dropout);
    m.attr_dim = int(c.get_int("model.attr_dim", m.attr_dim));
    m.max_long_positions = int(c.get_int("model.max_long_positions", m.max_long_positions));
    m.max_short_positions = int(c.get_int("model.max_short_positions", m.max_short_positions));
    m.max_long_words = int(c.get_int("model.max_long_words", m.max_long_words));
    m.max_short_words = int(c.get_int("model.max_short_words", m.max_short_words));
    m.mask_keep_position = c.get_bool("model.mask_keep_position", m.mask_keep_position);
    m.sigmoid_bce = c.get_bool("model.sigmoid_bce", m.sigmoid_bce);
    m.mask_select_p = c.get_double("model.mask_select_p", m.mask_select_p);
    m.mask_zero_p = c.get_double("model.mask_zero_p", m.mask_zero_p);
    m.validate();
    return m;
  }

  void store(Config& c) const {
    c.set("model.layers", std::to_string(num_layers));
    c.set("model.hidden", std::to_string(hidden));
    c.set("model.heads", std::to_string(heads));
    c.set("model.ffn", std::to_string(ffn));
    c.set("model.dropout", std::to_string(dropout));
    c.set("model.attr_dim", std::to_string(attr_dim));
    c.set("model.max_long_positions", std::to_string(max_long_positions));
    c.set("model.max_short_positions", std::to_string(max_short_positions));
    c.set("model.max_long_words", std::to_string(max_long_words));
    c.set("model.max_short_words", std::to_string(max_short_words));
    c.set("model.mask_keep_position", mask_keep_position ? "true" : "false");
    c.set("model.sigmoid_bce", sigmoid_bce ? "true" : "false");
    c.set("model.mask_select_p", std::to_string(mask_select_p));
    c.set("model.mask_zero_p", std::to_string(mask_zero_p));
  }
};

/// Vocabulary sizes the parameter shapes depend on (UNKNOWN row included).
struct ModelDims {
  std::vector<int> long_vocab;
  std::vector<int> short_vocab;
  std::vector<int> profile_vocab;

  static ModelDims from_registry(const VocabularyRegistry& reg) {
    ModelDims d;
    for (int a = 0; a < reg.attribute_count(SegmentKind::LongTerm); ++a)
      d.long_vocab.push_back(reg.vocab_size(SegmentKind::LongTerm, a));
    for (int a = 0; a < reg.attribute_count(SegmentKind::ShortTerm); ++a)
      d.short_vocab.push_back(reg.vocab_size(SegmentKind::ShortTerm, a));
    for (int a = 0; a < reg.attribute_count(SegmentKind::UserProfile); ++a)
      d.profile_vocab.push_back(reg.vocab_size(SegmentKind::UserProfile, a));
    return d;
  }

  const std::vector<int>& behavioral(SegmentKind k) const {
    return k == SegmentKind::LongTerm ? long_vocab : short_vocab;
  }

  bool operator==(const ModelDims&) const = default;
};

}  // namespace userbert
