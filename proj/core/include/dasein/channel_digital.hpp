#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "dasein/common.hpp"
#include "dasein/rng.hpp"

namespace dasein::channel {

using Cplx = std::complex<double>;

/// Uniform quantizer settings: q_b bits over (z_min, z_max), plus the
/// recursion depth r of the differentiable rounding surrogate.
struct QuantizerSpec {
  int q_b = 2;
  double z_min = -1.0;
  double z_max = 1.0;
  int r = 3;

  int levels() const { return 1 << q_b; }
  /// Reconstruction step between adjacent levels.
  double step() const { return (z_max - z_min) / (levels() - 1); }
  void validate() const;
  bool operator==(const QuantizerSpec&) const = default;
};

/// One feature vector after ADC/coding/modulation.
struct DigitalFrame {
  std::vector<int> indices;           // z_id, in [0, 2^q_b - 1]
  std::vector<std::uint8_t> bits;     // natural binary, MSB first, q_b per entry
  std::vector<Cplx> symbols;          // unit-energy QPSK, two bits per symbol
};

/// Affine map onto the quantizer index scale: (z - z_min)/(z_max - z_min) * (2^q_b - 1).
/// Entries must lie inside (z_min, z_max).
Vec g_map(const Vec& z, const QuantizerSpec& spec);

/// round(g(z)) with half-away-from-zero ties.
std::vector<int> quantize_index(const Vec& z, const QuantizerSpec& spec);

std::vector<std::uint8_t> encode_bits(const std::vector<int>& indices, const QuantizerSpec& spec);
std::vector<int> decode_bits(const std::vector<std::uint8_t>& bits, const QuantizerSpec& spec);

/// Gray-mapped QPSK, (+-1 +-j)/sqrt(2): first bit selects the real sign,
/// second bit the imaginary sign (0 -> +).
std::vector<Cplx> modulate_qpsk(const std::vector<std::uint8_t>& bits);
/// Per-component sign decision.
std::vector<std::uint8_t> demodulate_qpsk(const std::vector<Cplx>& symbols);

/// Circularly-symmetric complex noise with total per-symbol power sigma^2.
/// sigma == 0 bypasses the channel.
std::vector<Cplx> complex_awgn(const std::vector<Cplx>& symbols, double sigma, RngStream& rng);

/// Inverse of g_map on real-valued level positions: z_min + x * step.
Vec dac(const Vec& levels, const QuantizerSpec& spec);
Vec dac(const std::vector<int>& indices, const QuantizerSpec& spec);

/// Smooth rounding surrogate: the map x - sin(2*pi*x)/(2*pi) iterated r times.
/// Fixes integers exactly and is nondecreasing everywhere.
double soft_round(double x, int r);
Vec soft_round(const Vec& x, int r);
/// Derivative of the iterated map (product of 1 - cos(2*pi*x_t) over iterates).
double soft_round_grad(double x, int r);

/// Training-path cache: index-scale input and the surrogate slope, enough to
/// backpropagate through the ADC/DAC pair.
struct TrainPathCache {
  Vec u;      // g_map(z)
  Vec slope;  // d soft_round(u)/du
};

/// Training-time transceiver: soft_round(g(z)) + real noise of variance
/// sigma^2 per entry, then DAC. Differentiable; d zhat / d z = slope.
Vec digital_train_forward(const Vec& z, const QuantizerSpec& spec, double sigma, RngStream& rng,
                          TrainPathCache* cache = nullptr);
/// Same path with a pre-drawn standard-normal noise vector (index scale).
Vec digital_train_forward(const Vec& z, const QuantizerSpec& spec, double sigma, const Vec& noise,
                          TrainPathCache* cache = nullptr);

/// Inference-time transceiver: ADC -> natural binary -> QPSK -> complex AWGN
/// -> hard demodulation -> DAC.
Vec digital_infer_forward(const Vec& z, const QuantizerSpec& spec, double sigma, RngStream& rng,
                          DigitalFrame* frame = nullptr);

/// Closed-form Gray-QPSK bit error rate at linear SNR (symbol energy over
/// total noise power): Q(sqrt(snr)).
double qpsk_ber(double snr_linear);

}  // namespace dasein::channel
