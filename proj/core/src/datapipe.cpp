#include "dasein/datapipe.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

namespace dasein::data {

namespace {
constexpr double kDegToRad = 0.017453292519943295;
}

void DomainDataset::validate() const {
  if (class_count < 2) throw DataError("dataset: class_count >= 2 required");
  std::vector<int> per_class(class_count, 0);
  const MultiViewSample* first = samples.empty() ? nullptr : &samples.front();
  for (const MultiViewSample& s : samples) {
    if (s.views.empty()) throw DataError("dataset: sample without views");
    if (first && s.views.size() != first->views.size())
      throw DataError("dataset: inconsistent device count");
    for (const Image& v : s.views)
      if (!v.same_shape(s.views.front())) throw DataError("dataset: view shape mismatch");
    if (s.label) {
      if (*s.label < 0 || *s.label >= class_count)
        throw DataError("dataset: label out of range");
      ++per_class[*s.label];
    } else if (domain == Domain::source) {
      throw DataError("dataset: unlabeled source sample");
    }
  }
  if (domain == Domain::source)
    for (int c = 0; c < class_count; ++c)
      if (per_class[c] == 0) throw DataError("dataset: source class without samples");
}

std::vector<Image> split_views(const Image& image, int k_devices, int view_size) {
  if (view_size < 1 || view_size > image.height || view_size > image.width)
    throw DimensionError("split_views: view size exceeds image side");
  if (k_devices != 1 && k_devices != 4)
    throw ConfigError("split_views: k_devices must be 1 or 4");

  auto crop = [&](int oy, int ox) {
    Image v(image.channels, view_size, view_size);
    for (int c = 0; c < image.channels; ++c)
      for (int y = 0; y < view_size; ++y)
        for (int x = 0; x < view_size; ++x) v.at(c, y, x) = image.at(c, oy + y, ox + x);
    return v;
  };

  std::vector<Image> out;
  if (k_devices == 1) {
    out.push_back(crop((image.height - view_size) / 2, (image.width - view_size) / 2));
    return out;
  }
  const int oy = image.height - view_size;
  const int ox = image.width - view_size;
  out.push_back(crop(0, 0));
  out.push_back(crop(0, ox));
  out.push_back(crop(oy, 0));
  out.push_back(crop(oy, ox));
  return out;
}

PairedLoader::PairedLoader(const DomainDataset& source, const DomainDataset& target,
                           int batch_size, std::uint64_t seed)
    : source_(&source), target_(&target), batch_size_(batch_size), seed_(seed) {
  if (source.samples.empty() || target.samples.empty())
    throw DataError("paired loader: empty dataset");
  if (batch_size < 1) throw ConfigError("paired loader: batch size >= 1");
}

int PairedLoader::batches_per_epoch() const {
  const std::size_t longest = std::max(source_->size(), target_->size());
  return static_cast<int>((longest + batch_size_ - 1) / batch_size_);
}

namespace {

// Endless shuffled index stream; reshuffles with a fresh substream on wrap.
class IndexCycler {
 public:
  IndexCycler(std::size_t n, std::uint64_t seed, std::string_view label, int epoch)
      : n_(n), seed_(seed), label_(label), epoch_(epoch) {
    reshuffle();
  }
  int next() {
    if (pos_ == order_.size()) {
      ++cycle_;
      reshuffle();
    }
    return order_[pos_++];
  }

 private:
  void reshuffle() {
    order_.resize(n_);
    std::iota(order_.begin(), order_.end(), 0);
    RngStream rng = RngStream::derive(seed_, label_, static_cast<std::uint64_t>(epoch_), cycle_);
    std::shuffle(order_.begin(), order_.end(), rng.engine());
    pos_ = 0;
  }
  std::size_t n_;
  std::uint64_t seed_;
  std::string_view label_;
  int epoch_;
  std::uint64_t cycle_ = 0;
  std::vector<int> order_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<PairedBatch> PairedLoader::epoch(int epoch_index) const {
  IndexCycler src(source_->size(), seed_, "pair.source", epoch_index);
  IndexCycler tgt(target_->size(), seed_, "pair.target", epoch_index);

  std::vector<PairedBatch> out;
  const int batches = batches_per_epoch();
  out.reserve(batches);
  for (int b = 0; b < batches; ++b) {
    PairedBatch batch;
    batch.source = source_;
    batch.target = target_;
    batch.source_indices.reserve(batch_size_);
    batch.target_indices.reserve(batch_size_);
    for (int i = 0; i < batch_size_; ++i) {
      batch.source_indices.push_back(src.next());
      batch.target_indices.push_back(tgt.next());
    }
    out.push_back(std::move(batch));
  }
  return out;
}

ShiftSpec ShiftSpec::identity_shift() {
  ShiftSpec s;
  s.rotation_deg = 0.0;
  s.translate_x = 0.0;
  s.translate_y = 0.0;
  s.target_background = s.source_background;
  s.target_gain = s.source_gain;
  return s;
}

namespace {

MultiViewSample render_sample(const ShiftSpec& spec, Domain domain, int label, int class_count,
                              int k_devices, int view_size, RngStream& rng) {
  const bool shifted = domain == Domain::target;
  const double angle =
      2.0 * M_PI * label / class_count + (shifted ? spec.rotation_deg * kDegToRad : 0.0);
  const double cx = 0.5 * (spec.canvas - 1);
  const double cy = 0.5 * (spec.canvas - 1);
  double px = cx + spec.cluster_radius * std::cos(angle) + spec.scatter * rng.gaussian();
  double py = cy + spec.cluster_radius * std::sin(angle) + spec.scatter * rng.gaussian();
  if (shifted) {
    px += spec.translate_x;
    py += spec.translate_y;
  }
  const auto& gain = shifted ? spec.target_gain : spec.source_gain;
  const double background = shifted ? spec.target_background : spec.source_background;

  Image canvas(spec.channels, spec.canvas, spec.canvas);
  const double inv = 1.0 / (2.0 * spec.blob_sigma * spec.blob_sigma);
  for (int y = 0; y < spec.canvas; ++y)
    for (int x = 0; x < spec.canvas; ++x) {
      const double d2 = (x - px) * (x - px) + (y - py) * (y - py);
      const double v = std::exp(-d2 * inv);
      for (int c = 0; c < spec.channels; ++c) {
        double val = background + gain[std::min(c, 2)] * v + spec.pixel_noise * rng.gaussian();
        canvas.at(c, y, x) = std::clamp(val, 0.0, 1.0);
      }
    }

  MultiViewSample s;
  s.domain = domain;
  s.label = label;
  s.views = split_views(canvas, k_devices, view_size);
  return s;
}

}  // namespace

std::pair<DomainDataset, DomainDataset> synth_shift_dataset(const ShiftSpec& spec,
                                                            int n_per_class, int class_count,
                                                            int k_devices, int view_size,
                                                            std::uint64_t seed) {
  if (class_count < 2) throw ConfigError("synth: class_count >= 2 required");
  if (n_per_class < 1) throw ConfigError("synth: n_per_class >= 1 required");
  if (spec.canvas < view_size) throw ConfigError("synth: canvas smaller than view size");

  auto make = [&](Domain domain) {
    DomainDataset ds;
    ds.domain = domain;
    ds.class_count = class_count;
    ds.samples.reserve(static_cast<std::size_t>(class_count) * n_per_class);
    const std::uint64_t dom = domain == Domain::source ? 0 : 1;
    for (int c = 0; c < class_count; ++c)
      for (int i = 0; i < n_per_class; ++i) {
        RngStream rng = RngStream::derive(seed, "synth", dom, static_cast<std::uint64_t>(c),
                                          static_cast<std::uint64_t>(i));
        ds.samples.push_back(
            render_sample(spec, domain, c, class_count, k_devices, view_size, rng));
      }
    return ds;
  };
  return {make(Domain::source), make(Domain::target)};
}

namespace {

constexpr char kSynthMagic[4] = {'D', 'S', 'Y', 'N'};
constexpr std::uint32_t kSynthVersion = 1;

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw DataError("synth archive: truncated file");
  return v;
}

}  // namespace

void save_synth_archive(const std::filesystem::path& path, const SynthArchive& a) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("synth archive: cannot open " + path.string());
  os.write(kSynthMagic, 4);
  put(os, kSynthVersion);
  put<std::int32_t>(os, a.spec.canvas);
  put<std::int32_t>(os, a.spec.channels);
  put(os, a.spec.cluster_radius);
  put(os, a.spec.scatter);
  put(os, a.spec.blob_sigma);
  put(os, a.spec.pixel_noise);
  put(os, a.spec.rotation_deg);
  put(os, a.spec.translate_x);
  put(os, a.spec.translate_y);
  put(os, a.spec.source_background);
  put(os, a.spec.target_background);
  for (double g : a.spec.source_gain) put(os, g);
  for (double g : a.spec.target_gain) put(os, g);
  put<std::int32_t>(os, a.n_per_class);
  put<std::int32_t>(os, a.class_count);
  put<std::int32_t>(os, a.k_devices);
  put<std::int32_t>(os, a.view_size);
  put(os, a.seed);
  if (!os) throw DataError("synth archive: write failed");
}

SynthArchive read_synth_archive(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("synth archive: cannot open " + path.string());
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kSynthMagic, 4) != 0)
    throw DataError("synth archive: bad magic");
  if (get<std::uint32_t>(is) != kSynthVersion)
    throw DataError("synth archive: unsupported version");
  SynthArchive a;
  a.spec.canvas = get<std::int32_t>(is);
  a.spec.channels = get<std::int32_t>(is);
  a.spec.cluster_radius = get<double>(is);
  a.spec.scatter = get<double>(is);
  a.spec.blob_sigma = get<double>(is);
  a.spec.pixel_noise = get<double>(is);
  a.spec.rotation_deg = get<double>(is);
  a.spec.translate_x = get<double>(is);
  a.spec.translate_y = get<double>(is);
  a.spec.source_background = get<double>(is);
  a.spec.target_background = get<double>(is);
  for (double& g : a.spec.source_gain) g = get<double>(is);
  for (double& g : a.spec.target_gain) g = get<double>(is);
  a.n_per_class = get<std::int32_t>(is);
  a.class_count = get<std::int32_t>(is);
  a.k_devices = get<std::int32_t>(is);
  a.view_size = get<std::int32_t>(is);
  a.seed = get<std::uint64_t>(is);
  return a;
}

std::pair<DomainDataset, DomainDataset> load_synth_archive(const std::filesystem::path& path) {
  SynthArchive a = read_synth_archive(path);
  return synth_shift_dataset(a.spec, a.n_per_class, a.class_count, a.k_devices, a.view_size,
                             a.seed);
}

namespace {

Image adapt_channels(const Image& img, int channels) {
  if (img.channels == channels) return img;
  Image out(channels, img.height, img.width);
  if (img.channels == 1) {
    for (int c = 0; c < channels; ++c)
      for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) out.at(c, y, x) = img.at(0, y, x);
    return out;
  }
  if (channels == 1) {
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) {
        double s = 0.0;
        for (int c = 0; c < img.channels; ++c) s += img.at(c, y, x);
        out.at(0, y, x) = s / img.channels;
      }
    return out;
  }
  throw DataError("dataset: unsupported channel conversion");
}

Image center_crop(const Image& img, int side) {
  if (img.height < side || img.width < side)
    throw DimensionError("dataset: image smaller than canvas crop");
  Image out(img.channels, side, side);
  const int oy = (img.height - side) / 2;
  const int ox = (img.width - side) / 2;
  for (int c = 0; c < img.channels; ++c)
    for (int y = 0; y < side; ++y)
      for (int x = 0; x < side; ++x) out.at(c, y, x) = img.at(c, oy + y, ox + x);
  return out;
}

}  // namespace

DomainDataset load_directory_dataset(const std::filesystem::path& root, Domain domain,
                                     int k_devices, int view_size, int canvas, int channels) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) throw DataError("dataset: not a directory: " + root.string());

  std::vector<fs::path> class_dirs;
  std::vector<fs::path> loose_files;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory())
      class_dirs.push_back(entry.path());
    else if (entry.is_regular_file() && image_extension_supported(entry.path()))
      loose_files.push_back(entry.path());
  }
  std::sort(class_dirs.begin(), class_dirs.end());
  std::sort(loose_files.begin(), loose_files.end());

  DomainDataset ds;
  ds.domain = domain;

  auto ingest = [&](const fs::path& file, std::optional<int> label) {
    Image img = adapt_channels(load_image(file), channels);
    if (canvas > 0) img = center_crop(img, canvas);
    MultiViewSample s;
    s.domain = domain;
    s.label = label;
    s.views = split_views(img, k_devices, view_size);
    ds.samples.push_back(std::move(s));
  };

  if (!class_dirs.empty()) {
    ds.class_count = static_cast<int>(class_dirs.size());
    for (int c = 0; c < ds.class_count; ++c) {
      std::vector<fs::path> files;
      for (const auto& entry : fs::directory_iterator(class_dirs[c]))
        if (entry.is_regular_file() && image_extension_supported(entry.path()))
          files.push_back(entry.path());
      std::sort(files.begin(), files.end());
      for (const auto& f : files) ingest(f, c);
    }
  } else {
    if (domain == Domain::source)
      throw DataError("dataset: source directory has no class subdirectories");
    for (const auto& f : loose_files) ingest(f, std::nullopt);
  }
  if (ds.samples.empty()) throw DataError("dataset: no images under " + root.string());
  return ds;
}

}  // namespace dasein::data
