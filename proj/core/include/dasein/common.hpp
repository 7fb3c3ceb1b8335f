#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace dasein {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Transmission mode of the compress-and-channel encoder and the link.
enum class TxMode { analog, digital };

struct DimensionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Planar image, layout [channel][row][col], intensities in [0,1] unless the
/// pipeline standardizes them.
struct Image {
  int channels = 0;
  int height = 0;
  int width = 0;
  Vec data;

  Image() = default;
  Image(int c, int h, int w)
      : channels(c), height(h), width(w), data(Vec::Zero(std::max(0, c * h * w))) {}

  double at(int c, int y, int x) const { return data[(c * height + y) * width + x]; }
  double& at(int c, int y, int x) { return data[(c * height + y) * width + x]; }

  bool same_shape(const Image& o) const {
    return channels == o.channels && height == o.height && width == o.width;
  }
  int size() const { return channels * height * width; }
};

inline const char* to_string(TxMode m) { return m == TxMode::analog ? "analog" : "digital"; }

}  // namespace dasein
