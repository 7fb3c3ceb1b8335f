#include "dasein/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace dasein::net {

namespace {

constexpr double kNormGuard = 1e-150;

void glorot_uniform(Mat& w, RngStream& rng) {
  const double limit = std::sqrt(6.0 / (w.rows() + w.cols()));
  for (Eigen::Index j = 0; j < w.cols(); ++j)
    for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = rng.uniform_sym(limit);
}

void append_ptrs(std::vector<double*>& out, Mat& m, Vec& v) {
  double* p = m.data();
  for (Eigen::Index i = 0; i < m.size(); ++i) out.push_back(p + i);
  p = v.data();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(p + i);
}

}  // namespace

void ModelConfig::validate() const {
  if (view_channels < 1 || view_size < 1) throw ConfigError("model: bad view shape");
  if (profile == SreProfile::conv) {
    if (conv_ksize < 1 || conv_filters < 1) throw ConfigError("model: bad conv stage");
    if (view_size < conv_ksize) throw ConfigError("model: view smaller than conv kernel");
    if (pool_side() < 1) throw ConfigError("model: conv output vanishes after pooling");
  } else if (hidden < 1) {
    throw ConfigError("model: dense profile needs hidden >= 1");
  }
  if (a_in < 1) throw ConfigError("model: a_in >= 1 required");
  if (!(compression_rate > 0.0 && compression_rate <= 1.0))
    throw ConfigError("model: compression rate must lie in (0,1]");
  if (a_out() < 1) throw ConfigError("model: a_out rounds to zero");
  if (classes < 2) throw ConfigError("model: at least two classes");
  if (devices < 1) throw ConfigError("model: at least one device");
  if (decoder_hidden < 1) throw ConfigError("model: decoder hidden width >= 1");
  if (!(z_min < z_max)) throw ConfigError("model: z_min < z_max required");
}

PredictionDist PredictionDist::from_probs(const Vec& probs) {
  if (probs.size() < 1) throw DataError("prediction: empty probability vector");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    if (!(probs[i] >= 0.0)) throw DataError("prediction: negative probability");
    sum += probs[i];
  }
  if (std::abs(sum - 1.0) > 1e-6) throw DataError("prediction: probabilities do not sum to 1");
  PredictionDist p;
  p.probs = probs;
  auto [label, oh] = predict_label(probs);
  p.label = label;
  p.one_hot = std::move(oh);
  p.confidence = probs[label];
  return p;
}

std::pair<int, Vec> predict_label(const Vec& probs) {
  int best = 0;
  for (Eigen::Index i = 1; i < probs.size(); ++i)
    if (probs[i] > probs[best]) best = static_cast<int>(i);
  Vec oh = Vec::Zero(probs.size());
  oh[best] = 1.0;
  return {best, oh};
}

void Dense::init(RngStream& rng) {
  glorot_uniform(w, rng);
  b.setZero();
}

void Conv2d::init(RngStream& rng) {
  glorot_uniform(w, rng);
  b.setZero();
}

Model Model::init(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Model m;
  m.cfg = cfg;
  m.init_seed = seed;
  RngStream rng = RngStream::derive(seed, "init");

  if (cfg.profile == SreProfile::conv) {
    m.sre.conv.in_ch = cfg.view_channels;
    m.sre.conv.in_h = cfg.view_size;
    m.sre.conv.in_w = cfg.view_size;
    m.sre.conv.filters = cfg.conv_filters;
    m.sre.conv.ksize = cfg.conv_ksize;
    m.sre.conv.w = Mat(cfg.conv_filters, cfg.view_channels * cfg.conv_ksize * cfg.conv_ksize);
    m.sre.conv.b = Vec(cfg.conv_filters);
    m.sre.conv.init(rng);
  } else {
    m.sre.fc_hidden.w = Mat(cfg.hidden, cfg.view_channels * cfg.view_size * cfg.view_size);
    m.sre.fc_hidden.b = Vec(cfg.hidden);
    m.sre.fc_hidden.init(rng);
  }
  const int fc_in = cfg.profile == SreProfile::conv ? cfg.sre_flat_dim() : cfg.hidden;
  m.sre.fc_out.w = Mat(cfg.a_in, fc_in);
  m.sre.fc_out.b = Vec(cfg.a_in);
  m.sre.fc_out.init(rng);

  m.cce.lin.w = Mat(cfg.a_out(), cfg.a_in);
  m.cce.lin.b = Vec(cfg.a_out());
  m.cce.lin.init(rng);

  m.dec.l1.w = Mat(cfg.decoder_hidden, cfg.concat_dim());
  m.dec.l1.b = Vec(cfg.decoder_hidden);
  m.dec.l1.init(rng);
  m.dec.l2.w = Mat(cfg.classes, cfg.decoder_hidden);
  m.dec.l2.b = Vec(cfg.classes);
  m.dec.l2.init(rng);
  return m;
}

// --- extractor ---

FeatureVector Model::sre_forward(const Image& view) const {
  SreCache cache;
  return sre_forward(view, &cache);
}

FeatureVector Model::sre_forward(const Image& view, SreCache* cache) const {
  if (view.channels != cfg.view_channels || view.height != cfg.view_size ||
      view.width != cfg.view_size)
    throw DimensionError("sre: view shape mismatch");

  if (cfg.profile == SreProfile::conv) {
    const Conv2d& cv = sre.conv;
    const int oh = cv.out_h(), ow = cv.out_w(), k = cv.ksize;
    Mat patches(cv.in_ch * k * k, oh * ow);
    for (int i = 0; i < oh; ++i)
      for (int j = 0; j < ow; ++j) {
        const int col = i * ow + j;
        int row = 0;
        for (int c = 0; c < cv.in_ch; ++c)
          for (int u = 0; u < k; ++u)
            for (int v = 0; v < k; ++v) patches(row++, col) = view.at(c, i + u, j + v);
      }
    Mat pre = cv.w * patches;
    pre.colwise() += cv.b;

    const int ps = cfg.pool_side();
    Vec flat(cfg.sre_flat_dim());
    for (int f = 0; f < cv.filters; ++f)
      for (int pi = 0; pi < ps; ++pi)
        for (int pj = 0; pj < ps; ++pj) {
          double s = 0.0;
          for (int u = 0; u < 2; ++u)
            for (int v = 0; v < 2; ++v) {
              const double a = pre(f, (2 * pi + u) * ow + (2 * pj + v));
              s += a > 0.0 ? a : 0.0;
            }
          flat[(f * ps + pi) * ps + pj] = 0.25 * s;
        }

    Vec feature = sre.fc_out.forward(flat);
    if (cache) {
      cache->patches = std::move(patches);
      cache->conv_pre = std::move(pre);
      cache->flat = std::move(flat);
      cache->feature = feature;
    }
    return feature;
  }

  // dense profile
  Vec flat = view.data;
  Vec hpre = sre.fc_hidden.forward(flat);
  Vec hpost = hpre.cwiseMax(0.0);
  Vec feature = sre.fc_out.forward(hpost);
  if (cache) {
    cache->flat = std::move(flat);
    cache->hidden_pre = std::move(hpre);
    cache->feature = feature;
  }
  return feature;
}

Vec sre_backward(const Model& m, const SreCache& cache, const Image& view, const Vec& gfeature,
                 SreGrads& acc) {
  const ModelConfig& cfg = m.cfg;
  if (cfg.profile == SreProfile::conv) {
    Vec gflat = dense_backward(m.sre.fc_out, cache.flat, gfeature, acc.fc_out);

    const Conv2d& cv = m.sre.conv;
    const int oh = cv.out_h(), ow = cv.out_w(), ps = cfg.pool_side(), k = cv.ksize;
    Mat gpre = Mat::Zero(cv.filters, oh * ow);
    for (int f = 0; f < cv.filters; ++f)
      for (int pi = 0; pi < ps; ++pi)
        for (int pj = 0; pj < ps; ++pj) {
          const double g = 0.25 * gflat[(f * ps + pi) * ps + pj];
          for (int u = 0; u < 2; ++u)
            for (int v = 0; v < 2; ++v) {
              const int pos = (2 * pi + u) * ow + (2 * pj + v);
              if (cache.conv_pre(f, pos) > 0.0) gpre(f, pos) = g;
            }
        }
    acc.conv.w.noalias() += gpre * cache.patches.transpose();
    acc.conv.b += gpre.rowwise().sum();

    Mat gpatches = cv.w.transpose() * gpre;
    Vec gview = Vec::Zero(view.size());
    for (int i = 0; i < oh; ++i)
      for (int j = 0; j < ow; ++j) {
        const int col = i * ow + j;
        int row = 0;
        for (int c = 0; c < cv.in_ch; ++c)
          for (int u = 0; u < k; ++u)
            for (int v = 0; v < k; ++v)
              gview[(c * view.height + (i + u)) * view.width + (j + v)] += gpatches(row++, col);
      }
    return gview;
  }

  Vec hpost = cache.hidden_pre.cwiseMax(0.0);
  Vec ghpost = dense_backward(m.sre.fc_out, hpost, gfeature, acc.fc_out);
  Vec ghpre = (cache.hidden_pre.array() > 0.0).select(ghpost, 0.0);
  return dense_backward(m.sre.fc_hidden, cache.flat, ghpre, acc.fc_hidden);
}

// --- encoder ---

CodedFeature Model::cce_forward(const Vec& f) const {
  CceCache cache;
  return cce_forward(f, &cache);
}

CodedFeature Model::cce_forward(const Vec& f, CceCache* cache) const {
  if (f.size() != cfg.a_in) throw DimensionError("cce: feature length mismatch");
  Vec relu_f = f.cwiseMax(0.0);
  Vec s = cce.lin.forward(relu_f);

  CodedFeature out;
  if (cfg.mode == TxMode::analog) {
    const double n = s.norm();
    if (n > kNormGuard)
      out.values = s * (std::sqrt(static_cast<double>(s.size())) / n);
    else
      out.values = Vec::Zero(s.size());
    out.power_normalized = true;
    if (cache) cache->s_norm = n;
  } else {
    const double mid = 0.5 * (cfg.z_min + cfg.z_max);
    const double half = 0.5 * (cfg.z_max - cfg.z_min);
    Vec t = s.array().tanh();
    out.values = mid + half * t.array();
    out.power_normalized = false;
    if (cache) cache->tanh_s = std::move(t);
  }
  if (cache) {
    cache->f = f;
    cache->relu_f = std::move(relu_f);
    cache->s = std::move(s);
    cache->z = out.values;
  }
  return out;
}

Vec cce_backward(const Model& m, const CceCache& cache, const Vec& gz, CceGrads& acc) {
  Vec gs;
  if (m.cfg.mode == TxMode::analog) {
    const double n = cache.s_norm;
    if (n > kNormGuard) {
      const double root_m = std::sqrt(static_cast<double>(cache.s.size()));
      const double proj = cache.s.dot(gz) / (n * n);
      gs = (root_m / n) * (gz - proj * cache.s);
    } else {
      gs = Vec::Zero(cache.s.size());
    }
  } else {
    const double half = 0.5 * (m.cfg.z_max - m.cfg.z_min);
    gs = gz.array() * (half * (1.0 - cache.tanh_s.array().square()));
  }
  Vec grelu = dense_backward(m.cce.lin, cache.relu_f, gs, acc.lin);
  return (cache.f.array() > 0.0).select(grelu, 0.0);
}

// --- decoder ---

PredictionDist Model::decode(const Vec& z_concat) const {
  DecoderCache cache;
  return decode(z_concat, &cache);
}

PredictionDist Model::decode(const Vec& z_concat, DecoderCache* cache) const {
  if (z_concat.size() != cfg.concat_dim()) throw DimensionError("decoder: input length mismatch");
  Vec hpre = dec.l1.forward(z_concat);
  Vec hpost = hpre.cwiseMax(0.0);
  Vec logits = dec.l2.forward(hpost);
  if (!logits.allFinite()) throw NumericError("decoder: non-finite activations");
  Vec probs = softmax(logits);
  if (cache) {
    cache->zcat = z_concat;
    cache->h_pre = std::move(hpre);
    cache->logits = std::move(logits);
    cache->probs = probs;
  }
  return PredictionDist::from_probs(probs);
}

Vec decoder_backward(const Model& m, const DecoderCache& cache, const Vec& gprobs,
                     DecoderGrads& acc) {
  Vec glogits = softmax_vjp(cache.probs, gprobs);
  Vec hpost = cache.h_pre.cwiseMax(0.0);
  Vec ghpost = dense_backward(m.dec.l2, hpost, glogits, acc.l2);
  Vec ghpre = (cache.h_pre.array() > 0.0).select(ghpost, 0.0);
  return dense_backward(m.dec.l1, cache.zcat, ghpre, acc.l1);
}

Vec softmax(const Vec& logits) {
  const double mx = logits.maxCoeff();
  Vec e = (logits.array() - mx).exp();
  return e / e.sum();
}

Vec softmax_vjp(const Vec& probs, const Vec& gprobs) {
  const double dot = probs.dot(gprobs);
  return probs.array() * (gprobs.array() - dot);
}

Vec dense_backward(const Dense& layer, const Vec& x, const Vec& gout, DenseGrad& acc) {
  acc.w.noalias() += gout * x.transpose();
  acc.b += gout;
  return layer.w.transpose() * gout;
}

// --- parameter access ---

std::vector<double*> Model::group_params(ParamGroup g) {
  std::vector<double*> out;
  switch (g) {
    case ParamGroup::sre:
      if (cfg.profile == SreProfile::conv)
        append_ptrs(out, sre.conv.w, sre.conv.b);
      else
        append_ptrs(out, sre.fc_hidden.w, sre.fc_hidden.b);
      append_ptrs(out, sre.fc_out.w, sre.fc_out.b);
      break;
    case ParamGroup::cce:
      append_ptrs(out, cce.lin.w, cce.lin.b);
      break;
    case ParamGroup::decoder:
      append_ptrs(out, dec.l1.w, dec.l1.b);
      append_ptrs(out, dec.l2.w, dec.l2.b);
      break;
  }
  return out;
}

std::vector<double*> Model::all_params() {
  std::vector<double*> out = group_params(ParamGroup::sre);
  for (double* p : group_params(ParamGroup::cce)) out.push_back(p);
  for (double* p : group_params(ParamGroup::decoder)) out.push_back(p);
  return out;
}

std::size_t Model::param_count() const { return const_cast<Model*>(this)->all_params().size(); }

std::uint64_t Model::checksum() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](const double* p, Eigen::Index n) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(p);
    for (Eigen::Index i = 0; i < n * static_cast<Eigen::Index>(sizeof(double)); ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  };
  auto* self = const_cast<Model*>(this);
  for (ParamGroup g : {ParamGroup::sre, ParamGroup::cce, ParamGroup::decoder})
    for (double* p : self->group_params(g)) feed(p, 1);
  return h;
}

ModelGrads ModelGrads::zeros_like(const Model& m) {
  ModelGrads g;
  if (m.cfg.profile == SreProfile::conv)
    g.sre.conv.match(m.sre.conv);
  else
    g.sre.fc_hidden.match(m.sre.fc_hidden);
  g.sre.fc_out.match(m.sre.fc_out);
  g.cce.lin.match(m.cce.lin);
  g.dec.l1.match(m.dec.l1);
  g.dec.l2.match(m.dec.l2);
  return g;
}

void ModelGrads::set_zero() {
  auto z = [](Mat& m, Vec& v) {
    m.setZero();
    v.setZero();
  };
  z(sre.conv.w, sre.conv.b);
  z(sre.fc_hidden.w, sre.fc_hidden.b);
  z(sre.fc_out.w, sre.fc_out.b);
  z(cce.lin.w, cce.lin.b);
  z(dec.l1.w, dec.l1.b);
  z(dec.l2.w, dec.l2.b);
}

std::vector<double*> ModelGrads::group_params(ParamGroup g) {
  std::vector<double*> out;
  switch (g) {
    case ParamGroup::sre:
      if (sre.conv.w.size() > 0)
        append_ptrs(out, sre.conv.w, sre.conv.b);
      else
        append_ptrs(out, sre.fc_hidden.w, sre.fc_hidden.b);
      append_ptrs(out, sre.fc_out.w, sre.fc_out.b);
      break;
    case ParamGroup::cce:
      append_ptrs(out, cce.lin.w, cce.lin.b);
      break;
    case ParamGroup::decoder:
      append_ptrs(out, dec.l1.w, dec.l1.b);
      append_ptrs(out, dec.l2.w, dec.l2.b);
      break;
  }
  return out;
}

// --- checkpoint archive ---

namespace {

constexpr char kMagic[4] = {'D', 'C', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw DataError("checkpoint: truncated archive");
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Model& m) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("checkpoint: cannot open " + path.string());
  os.write(kMagic, 4);
  put(os, kVersion);
  const ModelConfig& c = m.cfg;
  put<std::int32_t>(os, c.view_channels);
  put<std::int32_t>(os, c.view_size);
  put<std::int32_t>(os, static_cast<std::int32_t>(c.profile));
  put<std::int32_t>(os, c.conv_filters);
  put<std::int32_t>(os, c.conv_ksize);
  put<std::int32_t>(os, c.hidden);
  put<std::int32_t>(os, c.a_in);
  put(os, c.compression_rate);
  put<std::int32_t>(os, c.classes);
  put<std::int32_t>(os, c.devices);
  put<std::int32_t>(os, static_cast<std::int32_t>(c.mode));
  put(os, c.z_min);
  put(os, c.z_max);
  put<std::int32_t>(os, c.decoder_hidden);
  put(os, m.init_seed);

  auto* self = const_cast<Model*>(&m);
  for (ParamGroup g : {ParamGroup::sre, ParamGroup::cce, ParamGroup::decoder}) {
    auto ptrs = self->group_params(g);
    put<std::uint64_t>(os, ptrs.size());
    for (double* p : ptrs) put(os, *p);
  }
  if (!os) throw DataError("checkpoint: write failed for " + path.string());
}

Model load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("checkpoint: cannot open " + path.string());
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw DataError("checkpoint: bad magic in " + path.string());
  if (get<std::uint32_t>(is) != kVersion) throw DataError("checkpoint: unsupported version");

  ModelConfig c;
  c.view_channels = get<std::int32_t>(is);
  c.view_size = get<std::int32_t>(is);
  c.profile = static_cast<SreProfile>(get<std::int32_t>(is));
  c.conv_filters = get<std::int32_t>(is);
  c.conv_ksize = get<std::int32_t>(is);
  c.hidden = get<std::int32_t>(is);
  c.a_in = get<std::int32_t>(is);
  c.compression_rate = get<double>(is);
  c.classes = get<std::int32_t>(is);
  c.devices = get<std::int32_t>(is);
  c.mode = static_cast<TxMode>(get<std::int32_t>(is));
  c.z_min = get<double>(is);
  c.z_max = get<double>(is);
  c.decoder_hidden = get<std::int32_t>(is);
  const std::uint64_t seed = get<std::uint64_t>(is);

  c.validate();
  Model m = Model::init(c, seed);
  for (ParamGroup g : {ParamGroup::sre, ParamGroup::cce, ParamGroup::decoder}) {
    auto ptrs = m.group_params(g);
    const std::uint64_t n = get<std::uint64_t>(is);
    if (n != ptrs.size()) throw DataError("checkpoint: parameter count mismatch");
    for (double* p : ptrs) *p = get<double>(is);
  }
  return m;
}

Model load_checkpoint(const std::filesystem::path& path, const ModelConfig& expect) {
  Model m = load_checkpoint(path);
  if (!(m.cfg == expect)) throw DataError("checkpoint: shape metadata mismatch");
  return m;
}

}  // namespace dasein::net
