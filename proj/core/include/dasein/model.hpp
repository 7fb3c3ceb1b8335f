#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

#include "dasein/common.hpp"
#include "dasein/rng.hpp"

namespace dasein::net {

/// Semantic feature f produced by the extractor, length a_in.
using FeatureVector = Vec;

/// Class-probability output of the decoder with derived hard label.
struct PredictionDist {
  Vec probs;
  int label = 0;
  Vec one_hot;
  double confidence = 0.0;

  /// Builds the full record from a probability vector. Ties break toward the
  /// lowest index. Throws DataError if probs is not a simplex (1e-6 budget).
  static PredictionDist from_probs(const Vec& probs);
};

/// argmax + one-hot of a probability vector, tie -> lowest index.
std::pair<int, Vec> predict_label(const Vec& probs);

/// Power-normalized (analog) or range-bounded (digital) transmit vector z.
struct CodedFeature {
  Vec values;
  bool power_normalized = false;
};

enum class SreProfile { conv, dense };

struct ModelConfig {
  int view_channels = 3;
  int view_size = 16;
  SreProfile profile = SreProfile::conv;
  int conv_filters = 6;
  int conv_ksize = 3;
  int hidden = 64;  // dense-profile hidden width
  int a_in = 64;
  double compression_rate = 0.1;
  int classes = 5;
  int devices = 4;
  TxMode mode = TxMode::analog;
  double z_min = -1.0;  // digital bounding range
  double z_max = 1.0;
  int decoder_hidden = 256;

  /// a_out = floor(CR * a_in + 0.5).
  int a_out() const { return static_cast<int>(compression_rate * a_in + 0.5); }
  int concat_dim() const { return devices * a_out(); }
  int conv_out_side() const { return view_size - conv_ksize + 1; }
  int pool_side() const { return conv_out_side() / 2; }
  /// Flattened width entering the extractor's output affine layer.
  int sre_flat_dim() const {
    return profile == SreProfile::conv ? conv_filters * pool_side() * pool_side()
                                       : view_channels * view_size * view_size;
  }
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

struct Dense {
  Mat w;  // out x in
  Vec b;  // out

  Vec forward(const Vec& x) const { return w * x + b; }
  void init(RngStream& rng);  // Glorot-uniform weights, zero bias
};

struct DenseGrad {
  Mat w;
  Vec b;
  void match(const Dense& d) {
    w = Mat::Zero(d.w.rows(), d.w.cols());
    b = Vec::Zero(d.b.size());
  }
};

/// Valid 2-D convolution, stride 1, weights stored row-per-filter over
/// flattened (in_ch * k * k) patches so forward/backward are matrix products.
struct Conv2d {
  int in_ch = 0, in_h = 0, in_w = 0, filters = 0, ksize = 0;
  Mat w;  // filters x (in_ch*k*k)
  Vec b;  // filters

  int out_h() const { return in_h - ksize + 1; }
  int out_w() const { return in_w - ksize + 1; }
  void init(RngStream& rng);
};

struct ConvGrad {
  Mat w;
  Vec b;
  void match(const Conv2d& c) {
    w = Mat::Zero(c.w.rows(), c.w.cols());
    b = Vec::Zero(c.b.size());
  }
};

// --- forward caches (inputs/pre-activations needed by backprop) ---

struct SreCache {
  Mat patches;   // conv: im2col of the view
  Mat conv_pre;  // conv: filters x positions, pre-ReLU
  Vec flat;      // input to the first affine stage (pooled or raw flatten)
  Vec hidden_pre;  // dense profile only
  Vec feature;
};

struct CceCache {
  Vec f;
  Vec relu_f;
  Vec s;  // affine output before normalization / squashing
  double s_norm = 0.0;
  Vec tanh_s;
  Vec z;
};

struct DecoderCache {
  Vec zcat;
  Vec h_pre;
  Vec logits;
  Vec probs;
};

struct SreGrads {
  ConvGrad conv;
  DenseGrad fc_hidden;
  DenseGrad fc_out;
};
struct CceGrads {
  DenseGrad lin;
};
struct DecoderGrads {
  DenseGrad l1, l2;
};

struct SreParams {
  Conv2d conv;
  Dense fc_hidden;  // dense profile only
  Dense fc_out;
};
struct CceParams {
  Dense lin;
};
struct DecoderParams {
  Dense l1, l2;
};

enum class ParamGroup { sre, cce, decoder };

/// The three-stage network: extractor (shared across devices), encoder,
/// decoder. Value semantics; copying yields an independent parameter set.
struct Model {
  ModelConfig cfg;
  SreParams sre;
  CceParams cce;
  DecoderParams dec;
  std::uint64_t init_seed = 0;

  static Model init(const ModelConfig& cfg, std::uint64_t seed);

  FeatureVector sre_forward(const Image& view) const;
  FeatureVector sre_forward(const Image& view, SreCache* cache) const;
  CodedFeature cce_forward(const Vec& f) const;
  CodedFeature cce_forward(const Vec& f, CceCache* cache) const;
  PredictionDist decode(const Vec& z_concat) const;
  PredictionDist decode(const Vec& z_concat, DecoderCache* cache) const;

  /// Mutable pointers to every scalar in one group; ordering is fixed and
  /// identical to ModelGrads::group_params.
  std::vector<double*> group_params(ParamGroup g);
  std::vector<double*> all_params();
  std::size_t param_count() const;
  /// FNV-1a over the raw parameter bytes; used to assert immutability.
  std::uint64_t checksum() const;
};

struct ModelGrads {
  SreGrads sre;
  CceGrads cce;
  DecoderGrads dec;

  static ModelGrads zeros_like(const Model& m);
  void set_zero();
  std::vector<double*> group_params(ParamGroup g);
};

// --- backward passes; each accumulates into the grad struct and returns the
// gradient with respect to the stage input ---

Vec dense_backward(const Dense& layer, const Vec& x, const Vec& gout, DenseGrad& acc);
Vec sre_backward(const Model& m, const SreCache& cache, const Image& view, const Vec& gfeature,
                 SreGrads& acc);
Vec cce_backward(const Model& m, const CceCache& cache, const Vec& gz, CceGrads& acc);
/// Takes dL/dprobs, applies the softmax Jacobian, returns dL/dz_concat.
Vec decoder_backward(const Model& m, const DecoderCache& cache, const Vec& gprobs,
                     DecoderGrads& acc);

/// VJP of softmax: given probs p and g = dL/dp, returns dL/dlogits.
Vec softmax_vjp(const Vec& probs, const Vec& gprobs);
Vec softmax(const Vec& logits);

// --- checkpoint archive (versioned binary) ---

void save_checkpoint(const std::filesystem::path& path, const Model& m);
Model load_checkpoint(const std::filesystem::path& path);
/// Loads and rejects the archive if its stored shape metadata differs.
Model load_checkpoint(const std::filesystem::path& path, const ModelConfig& expect);

}  // namespace dasein::net
