#pragma once

#include <optional>
#include <vector>

#include "dasein/channel_digital.hpp"
#include "dasein/common.hpp"
#include "dasein/rng.hpp"

namespace dasein::channel {

/// sigma = sqrt(signal_power / 10^(snr_db/10)), per real dimension against
/// unit-power transmit vectors.
double snr_to_sigma(double snr_db, double signal_power = 1.0);

/// zhat = z + n, n iid N(0, sigma^2). sigma == 0 is a noiseless bypass.
Vec awgn(const Vec& z, double sigma, RngStream& rng);
/// Same with a pre-drawn standard-normal vector.
Vec awgn(const Vec& z, double sigma, const Vec& noise);

/// Concatenation in device-index order.
Vec concat_views(const std::vector<Vec>& received);

/// Per-device link description for one deployment environment.
struct ChannelSpec {
  std::vector<double> per_device_sigma;
  double snr_db = 0.0;
  TxMode mode = TxMode::analog;
  std::optional<QuantizerSpec> quantizer;

  static ChannelSpec analog(double snr_db, int devices);
  static ChannelSpec digital(double snr_db, int devices, const QuantizerSpec& q);
  double sigma(int device) const { return per_device_sigma.at(device); }
  void validate() const;
};

}  // namespace dasein::channel
