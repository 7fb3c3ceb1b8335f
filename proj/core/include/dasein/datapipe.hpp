#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

#include "dasein/common.hpp"
#include "dasein/rng.hpp"

namespace dasein::data {

enum class Domain { source, target };

/// K per-device views of one scene plus optional ground truth. Target-domain
/// samples may carry labels for evaluation; the paired loader never exposes
/// them to training.
struct MultiViewSample {
  std::vector<Image> views;
  std::optional<int> label;
  Domain domain = Domain::source;
};

struct DomainDataset {
  std::vector<MultiViewSample> samples;
  int class_count = 0;
  Domain domain = Domain::source;

  std::size_t size() const { return samples.size(); }
  /// Checks label presence/range, per-class coverage for source datasets, and
  /// uniform view shapes. Throws DataError on violation.
  void validate() const;
};

/// Contiguous sub-window crops, no resampling. k_devices = 4 returns the four
/// corner crops anchored at offsets {0, H-v} x {0, W-v} in row-major corner
/// order; k_devices = 1 returns the center crop.
std::vector<Image> split_views(const Image& image, int k_devices, int view_size);

struct PairedBatch {
  const DomainDataset* source = nullptr;
  const DomainDataset* target = nullptr;
  std::vector<int> source_indices;
  std::vector<int> target_indices;

  int size() const { return static_cast<int>(source_indices.size()); }
  const MultiViewSample& source_sample(int i) const { return source->samples[source_indices[i]]; }
  const MultiViewSample& target_sample(int j) const { return target->samples[target_indices[j]]; }
  int source_label(int i) const { return *source_sample(i).label; }
};

/// Epoch-wise paired batching: both datasets reshuffle per epoch under the
/// seed, the shorter one cycles (reshuffling on wrap) so every epoch yields
/// ceil(max(Ns, Nt) / n_b) full batches.
class PairedLoader {
 public:
  PairedLoader(const DomainDataset& source, const DomainDataset& target, int batch_size,
               std::uint64_t seed);

  int batches_per_epoch() const;
  std::vector<PairedBatch> epoch(int epoch_index) const;

 private:
  const DomainDataset* source_;
  const DomainDataset* target_;
  int batch_size_;
  std::uint64_t seed_;
};

/// Covariate-shift knobs for the synthetic task: class clusters sit on a ring
/// in a 2-D latent; the target domain rotates/translates the ring and
/// re-renders with different channel gains and background level (style
/// shift), so pixels move between domains while labels stay attached to the
/// latent position.
struct ShiftSpec {
  int canvas = 24;
  int channels = 3;
  double cluster_radius = 6.0;
  double scatter = 1.1;
  double blob_sigma = 2.2;
  double pixel_noise = 0.02;
  double rotation_deg = 45.0;
  double translate_x = 0.0;
  double translate_y = 0.0;
  double source_background = 0.0;
  double target_background = 0.0;
  std::array<double, 3> source_gain{1.0, 0.65, 0.35};
  std::array<double, 3> target_gain{0.45, 0.75, 0.95};

  /// No shift: target distribution equals the source distribution.
  static ShiftSpec identity_shift();
};

/// Labeled source + target pair with the configured covariate shift. Target
/// labels are generated (evaluation truth) but training never reads them.
/// Deterministic in the seed.
std::pair<DomainDataset, DomainDataset> synth_shift_dataset(const ShiftSpec& spec,
                                                            int n_per_class, int class_count,
                                                            int k_devices, int view_size,
                                                            std::uint64_t seed);

/// Synthetic datasets serialize as spec + seed; loading regenerates the exact
/// sample tensors.
struct SynthArchive {
  ShiftSpec spec;
  int n_per_class = 0;
  int class_count = 0;
  int k_devices = 0;
  int view_size = 0;
  std::uint64_t seed = 0;
};
void save_synth_archive(const std::filesystem::path& path, const SynthArchive& a);
SynthArchive read_synth_archive(const std::filesystem::path& path);
std::pair<DomainDataset, DomainDataset> load_synth_archive(const std::filesystem::path& path);

/// Directory tree ingestion: root/<class_name>/<image files>. Class indices
/// follow the sorted subdirectory names. A flat directory of images loads as
/// an unlabeled set. canvas > 0 center-crops before view splitting.
DomainDataset load_directory_dataset(const std::filesystem::path& root, Domain domain,
                                     int k_devices, int view_size, int canvas = 0,
                                     int channels = 3);

// --- image file IO (see image_io.cpp) ---
// PPM/PGM decode natively; PNG/JPEG when the library was built against
// libpng/libjpeg (the saves throw DataError otherwise).
Image load_image(const std::filesystem::path& path);
bool image_extension_supported(const std::filesystem::path& path);
void save_image_ppm(const std::filesystem::path& path, const Image& img);
void save_image_png(const std::filesystem::path& path, const Image& img);
void save_image_jpeg(const std::filesystem::path& path, const Image& img, int quality = 95);
bool png_support();
bool jpeg_support();

}  // namespace dasein::data
