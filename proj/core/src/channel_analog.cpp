#include "dasein/channel_analog.hpp"

#include <cmath>

namespace dasein::channel {

double snr_to_sigma(double snr_db, double signal_power) {
  if (!(signal_power > 0.0)) throw ConfigError("snr_to_sigma: signal power must be positive");
  return std::sqrt(signal_power / std::pow(10.0, snr_db / 10.0));
}

Vec awgn(const Vec& z, double sigma, RngStream& rng) {
  if (sigma == 0.0) return z;
  if (!(sigma > 0.0)) throw ConfigError("awgn: sigma must be nonnegative");
  Vec out(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) out[i] = z[i] + sigma * rng.gaussian();
  return out;
}

Vec awgn(const Vec& z, double sigma, const Vec& noise) {
  if (noise.size() != z.size()) throw DimensionError("awgn: noise length mismatch");
  return z + sigma * noise;
}

Vec concat_views(const std::vector<Vec>& received) {
  if (received.empty()) throw DimensionError("concat_views: no device vectors");
  const Eigen::Index per = received.front().size();
  Vec out(per * static_cast<Eigen::Index>(received.size()));
  Eigen::Index off = 0;
  for (const Vec& v : received) {
    if (v.size() != per) throw DimensionError("concat_views: device vector length mismatch");
    out.segment(off, per) = v;
    off += per;
  }
  return out;
}

ChannelSpec ChannelSpec::analog(double snr_db, int devices) {
  ChannelSpec s;
  s.snr_db = snr_db;
  s.mode = TxMode::analog;
  s.per_device_sigma.assign(devices, snr_to_sigma(snr_db));
  return s;
}

ChannelSpec ChannelSpec::digital(double snr_db, int devices, const QuantizerSpec& q) {
  ChannelSpec s;
  s.snr_db = snr_db;
  s.mode = TxMode::digital;
  s.per_device_sigma.assign(devices, snr_to_sigma(snr_db));
  s.quantizer = q;
  return s;
}

void ChannelSpec::validate() const {
  if (per_device_sigma.empty()) throw ConfigError("channel: no devices");
  const double expect = snr_to_sigma(snr_db);
  for (double s : per_device_sigma) {
    if (!(s > 0.0)) throw ConfigError("channel: sigma must be positive");
    if (std::abs(s - expect) > 1e-9 * std::max(1.0, expect))
      throw ConfigError("channel: sigma inconsistent with snr_db");
  }
  if ((mode == TxMode::digital) != quantizer.has_value())
    throw ConfigError("channel: quantizer present iff digital mode");
  if (quantizer) quantizer->validate();
}

}  // namespace dasein::channel
