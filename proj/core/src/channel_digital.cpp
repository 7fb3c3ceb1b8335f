#include "dasein/channel_digital.hpp"

#include <cmath>

namespace dasein::channel {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
const double kInvSqrt2 = 1.0 / std::sqrt(2.0);
}  // namespace

void QuantizerSpec::validate() const {
  if (q_b < 1) throw ConfigError("quantizer: q_b >= 1 required");
  if (q_b > 24) throw ConfigError("quantizer: q_b too large");
  if (!(z_min < z_max)) throw ConfigError("quantizer: z_min < z_max required");
  if (r < 1) throw ConfigError("quantizer: surrogate depth r >= 1 required");
}

Vec g_map(const Vec& z, const QuantizerSpec& spec) {
  spec.validate();
  const double scale = (spec.levels() - 1) / (spec.z_max - spec.z_min);
  Vec out(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    if (!(z[i] > spec.z_min && z[i] < spec.z_max))
      throw DimensionError("quantizer: entry outside (z_min, z_max)");
    out[i] = (z[i] - spec.z_min) * scale;
  }
  return out;
}

std::vector<int> quantize_index(const Vec& z, const QuantizerSpec& spec) {
  Vec g = g_map(z, spec);
  std::vector<int> out(g.size());
  for (Eigen::Index i = 0; i < g.size(); ++i)
    out[i] = static_cast<int>(std::round(g[i]));  // std::round: half away from zero
  return out;
}

std::vector<std::uint8_t> encode_bits(const std::vector<int>& indices, const QuantizerSpec& spec) {
  spec.validate();
  std::vector<std::uint8_t> bits;
  bits.reserve(indices.size() * spec.q_b);
  for (int idx : indices) {
    if (idx < 0 || idx >= spec.levels()) throw DimensionError("encode_bits: index out of range");
    for (int bit = spec.q_b - 1; bit >= 0; --bit) bits.push_back((idx >> bit) & 1);
  }
  return bits;
}

std::vector<int> decode_bits(const std::vector<std::uint8_t>& bits, const QuantizerSpec& spec) {
  spec.validate();
  if (bits.size() % spec.q_b != 0) throw DimensionError("decode_bits: malformed bit length");
  std::vector<int> out;
  out.reserve(bits.size() / spec.q_b);
  for (std::size_t i = 0; i < bits.size(); i += spec.q_b) {
    int idx = 0;
    for (int j = 0; j < spec.q_b; ++j) idx = (idx << 1) | (bits[i + j] & 1);
    out.push_back(idx);
  }
  return out;
}

std::vector<Cplx> modulate_qpsk(const std::vector<std::uint8_t>& bits) {
  if (bits.size() % 2 != 0) throw DimensionError("qpsk: odd bit length");
  std::vector<Cplx> sym;
  sym.reserve(bits.size() / 2);
  for (std::size_t i = 0; i < bits.size(); i += 2) {
    const double re = bits[i] ? -kInvSqrt2 : kInvSqrt2;
    const double im = bits[i + 1] ? -kInvSqrt2 : kInvSqrt2;
    sym.emplace_back(re, im);
  }
  return sym;
}

std::vector<std::uint8_t> demodulate_qpsk(const std::vector<Cplx>& symbols) {
  std::vector<std::uint8_t> bits;
  bits.reserve(symbols.size() * 2);
  for (const Cplx& s : symbols) {
    bits.push_back(s.real() < 0.0 ? 1 : 0);
    bits.push_back(s.imag() < 0.0 ? 1 : 0);
  }
  return bits;
}

std::vector<Cplx> complex_awgn(const std::vector<Cplx>& symbols, double sigma, RngStream& rng) {
  if (sigma == 0.0) return symbols;
  if (!(sigma > 0.0)) throw ConfigError("complex_awgn: sigma must be nonnegative");
  const double comp = sigma * kInvSqrt2;  // sigma^2/2 per real component
  std::vector<Cplx> out;
  out.reserve(symbols.size());
  for (const Cplx& s : symbols)
    out.emplace_back(s.real() + comp * rng.gaussian(), s.imag() + comp * rng.gaussian());
  return out;
}

Vec dac(const Vec& levels, const QuantizerSpec& spec) {
  spec.validate();
  return spec.z_min + (levels.array() * spec.step());
}

Vec dac(const std::vector<int>& indices, const QuantizerSpec& spec) {
  Vec x(static_cast<Eigen::Index>(indices.size()));
  for (std::size_t i = 0; i < indices.size(); ++i) x[static_cast<Eigen::Index>(i)] = indices[i];
  return dac(x, spec);
}

double soft_round(double x, int r) {
  double v = x;
  for (int t = 0; t < r; ++t) v = v - std::sin(kTwoPi * v) / kTwoPi;
  return v;
}

double soft_round_grad(double x, int r) {
  double v = x;
  double grad = 1.0;
  for (int t = 0; t < r; ++t) {
    grad *= 1.0 - std::cos(kTwoPi * v);
    v = v - std::sin(kTwoPi * v) / kTwoPi;
  }
  return grad;
}

Vec soft_round(const Vec& x, int r) {
  Vec out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = soft_round(x[i], r);
  return out;
}

Vec digital_train_forward(const Vec& z, const QuantizerSpec& spec, double sigma, const Vec& noise,
                          TrainPathCache* cache) {
  if (noise.size() != z.size()) throw DimensionError("digital train path: noise length mismatch");
  Vec u = g_map(z, spec);
  Vec soft(u.size());
  Vec slope(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    soft[i] = soft_round(u[i], spec.r);
    slope[i] = soft_round_grad(u[i], spec.r);
  }
  Vec received = soft + sigma * noise;
  if (cache) {
    cache->u = std::move(u);
    cache->slope = std::move(slope);
  }
  return dac(received, spec);
}

Vec digital_train_forward(const Vec& z, const QuantizerSpec& spec, double sigma, RngStream& rng,
                          TrainPathCache* cache) {
  Vec noise = Vec::Zero(z.size());
  if (sigma != 0.0)
    for (Eigen::Index i = 0; i < noise.size(); ++i) noise[i] = rng.gaussian();
  return digital_train_forward(z, spec, sigma, noise, cache);
}

Vec digital_infer_forward(const Vec& z, const QuantizerSpec& spec, double sigma, RngStream& rng,
                          DigitalFrame* frame) {
  std::vector<int> indices = quantize_index(z, spec);
  std::vector<std::uint8_t> bits = encode_bits(indices, spec);
  std::vector<Cplx> symbols = modulate_qpsk(bits);
  std::vector<Cplx> received = complex_awgn(symbols, sigma, rng);
  std::vector<std::uint8_t> rx_bits = demodulate_qpsk(received);
  std::vector<int> rx_indices = decode_bits(rx_bits, spec);
  if (frame) {
    frame->indices = std::move(indices);
    frame->bits = std::move(bits);
    frame->symbols = std::move(symbols);
  }
  return dac(rx_indices, spec);
}

double qpsk_ber(double snr_linear) { return 0.5 * std::erfc(std::sqrt(snr_linear * 0.5)); }

}  // namespace dasein::channel
