#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>

#include "dasein/datapipe.hpp"

using namespace dasein;
using namespace dasein::data;

namespace {

Image ramp_image(int ch, int h, int w) {
  Image img(ch, h, w);
  for (int c = 0; c < ch; ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) img.at(c, y, x) = (c * h * w + y * w + x) % 251 / 250.0;
  return img;
}

}  // namespace

TEST_CASE("split_views corner anchors at the full-scale geometry") {
  Image img = ramp_image(3, 224, 224);
  auto views = split_views(img, 4, 150);
  REQUIRE(views.size() == 4);
  const int off = 224 - 150;  // 74
  CHECK(off == 74);
  const int anchors[4][2] = {{0, 0}, {0, off}, {off, 0}, {off, off}};
  for (int k = 0; k < 4; ++k) {
    CHECK(views[k].height == 150);
    CHECK(views[k].width == 150);
    for (int c = 0; c < 3; ++c)
      for (int y : {0, 74, 149})
        for (int x : {0, 74, 149})
          CHECK(views[k].at(c, y, x) == img.at(c, anchors[k][0] + y, anchors[k][1] + x));
  }
  // neighboring views share 150 - 74 = 76 pixels per axis
  CHECK(150 - off == 76);
  for (int y = 0; y < 150; ++y)
    for (int x = 0; x < 76; ++x)
      CHECK(views[0].at(0, y, x + off) == views[1].at(0, y, x));
}

TEST_CASE("split_views identity and error cases") {
  Image img = ramp_image(1, 150, 150);
  auto views = split_views(img, 1, 150);
  REQUIRE(views.size() == 1);
  CHECK((views[0].data - img.data).norm() == 0.0);

  Image small = ramp_image(1, 100, 100);
  CHECK_THROWS_AS(split_views(small, 4, 150), DimensionError);
  CHECK_THROWS_AS(split_views(img, 3, 50), ConfigError);
}

TEST_CASE("split_views produces contiguous sub-windows") {
  Image img = ramp_image(2, 17, 23);
  auto views = split_views(img, 4, 9);
  // every view pixel matches the original at the declared offsets
  const int oy = 17 - 9, ox = 23 - 9;
  const int anchors[4][2] = {{0, 0}, {0, ox}, {oy, 0}, {oy, ox}};
  for (int k = 0; k < 4; ++k)
    for (int c = 0; c < 2; ++c)
      for (int y = 0; y < 9; ++y)
        for (int x = 0; x < 9; ++x)
          CHECK(views[k].at(c, y, x) == img.at(c, anchors[k][0] + y, anchors[k][1] + x));
}

TEST_CASE("paired loader cycles the shorter dataset with reshuffles") {
  ShiftSpec spec = ShiftSpec::identity_shift();
  spec.canvas = 12;
  auto [big_src, _] = synth_shift_dataset(spec, 5, 2, 1, 10, 1);  // 10 samples
  auto [__, small_tgt] = synth_shift_dataset(spec, 2, 2, 1, 10, 2);  // 4 samples

  PairedLoader loader(big_src, small_tgt, 2, 7);
  CHECK(loader.batches_per_epoch() == 5);
  auto batches = loader.epoch(0);
  REQUIRE(batches.size() == 5);

  std::map<int, int> src_counts, tgt_counts;
  for (const auto& b : batches) {
    CHECK(b.size() == 2);
    for (int idx : b.source_indices) ++src_counts[idx];
    for (int idx : b.target_indices) ++tgt_counts[idx];
  }
  // every source sample exactly once (N_s = batches * n_b)
  CHECK(src_counts.size() == 10);
  for (const auto& [idx, n] : src_counts) CHECK(n == 1);
  // target cycles: 10 draws over 4 samples, each at least twice
  CHECK(tgt_counts.size() == 4);
  int total = 0;
  for (const auto& [idx, n] : tgt_counts) {
    CHECK(n >= 2);
    total += n;
  }
  CHECK(total == 10);
}

TEST_CASE("paired loader determinism and single-batch case") {
  ShiftSpec spec = ShiftSpec::identity_shift();
  spec.canvas = 12;
  auto [src, tgt] = synth_shift_dataset(spec, 2, 2, 1, 10, 3);  // 4 + 4 samples

  PairedLoader a(src, tgt, 4, 11);
  PairedLoader b(src, tgt, 4, 11);
  auto ea = a.epoch(2), eb = b.epoch(2);
  REQUIRE(ea.size() == 1);  // N_s = N_t = n_b -> one batch with all samples
  CHECK(ea[0].source_indices == eb[0].source_indices);
  CHECK(ea[0].target_indices == eb[0].target_indices);
  std::map<int, int> seen;
  for (int idx : ea[0].source_indices) ++seen[idx];
  CHECK(seen.size() == 4);

  PairedLoader other(src, tgt, 4, 12);
  bool differs = false;
  for (int e = 0; e < 4 && !differs; ++e)
    differs = other.epoch(e)[0].source_indices != a.epoch(e)[0].source_indices;
  CHECK(differs);

  DomainDataset empty;
  empty.class_count = 2;
  CHECK_THROWS_AS(PairedLoader(empty, tgt, 2, 1), DataError);
}

TEST_CASE("synthetic datasets are deterministic and labeled correctly") {
  ShiftSpec spec;
  spec.canvas = 16;
  auto [s1, t1] = synth_shift_dataset(spec, 3, 5, 4, 12, 42);
  auto [s2, t2] = synth_shift_dataset(spec, 3, 5, 4, 12, 42);
  REQUIRE(s1.size() == 15);
  REQUIRE(t1.size() == 15);
  CHECK_NOTHROW(s1.validate());
  CHECK_NOTHROW(t1.validate());
  CHECK(s1.domain == Domain::source);
  CHECK(t1.domain == Domain::target);
  for (std::size_t i = 0; i < s1.size(); ++i) {
    REQUIRE(s1.samples[i].views.size() == 4);
    CHECK((s1.samples[i].views[0].data - s2.samples[i].views[0].data).norm() == 0.0);
    CHECK((t1.samples[i].views[2].data - t2.samples[i].views[2].data).norm() == 0.0);
  }
  auto [s3, __] = synth_shift_dataset(spec, 3, 5, 4, 12, 43);
  CHECK((s1.samples[0].views[0].data - s3.samples[0].views[0].data).norm() != 0.0);
}

TEST_CASE("identity shift matches domains, rotation moves the clusters") {
  ShiftSpec id = ShiftSpec::identity_shift();
  id.canvas = 16;
  id.pixel_noise = 0.0;
  auto [src, tgt] = synth_shift_dataset(id, 20, 2, 1, 16, 7);

  auto class_mean = [](const DomainDataset& ds, int label) {
    Vec acc;
    int n = 0;
    for (const auto& s : ds.samples)
      if (*s.label == label) {
        if (n == 0)
          acc = s.views[0].data;
        else
          acc += s.views[0].data;
        ++n;
      }
    return Vec(acc / n);
  };
  const double same = (class_mean(src, 0) - class_mean(tgt, 0)).norm();

  ShiftSpec rot = id;
  rot.rotation_deg = 45.0;
  auto [rs, rt] = synth_shift_dataset(rot, 20, 2, 1, 16, 7);
  auto rot_mean_src = [&](int label) {
    Vec acc;
    int n = 0;
    for (const auto& s : rs.samples)
      if (*s.label == label) {
        if (n == 0)
          acc = s.views[0].data;
        else
          acc += s.views[0].data;
        ++n;
      }
    return Vec(acc / n);
  };
  Vec rot_tgt_mean;
  {
    Vec acc;
    int n = 0;
    for (const auto& s : rt.samples)
      if (*s.label == 0) {
        if (n == 0)
          acc = s.views[0].data;
        else
          acc += s.views[0].data;
        ++n;
      }
    rot_tgt_mean = acc / n;
  }
  const double shifted = (rot_mean_src(0) - rot_tgt_mean).norm();
  CHECK(shifted > 4.0 * same);
}

TEST_CASE("dataset invariants are enforced") {
  ShiftSpec spec = ShiftSpec::identity_shift();
  spec.canvas = 12;
  auto [src, tgt] = synth_shift_dataset(spec, 2, 3, 1, 10, 9);

  DomainDataset bad = src;
  bad.samples[0].label.reset();
  CHECK_THROWS_AS(bad.validate(), DataError);  // unlabeled source sample

  DomainDataset range = src;
  range.samples[1].label = 99;
  CHECK_THROWS_AS(range.validate(), DataError);

  DomainDataset sparse = src;
  for (auto& s : sparse.samples)
    if (*s.label == 2) s.label = 0;
  CHECK_THROWS_AS(sparse.validate(), DataError);  // class without samples

  DomainDataset unlabeled_target = tgt;
  for (auto& s : unlabeled_target.samples) s.label.reset();
  CHECK_NOTHROW(unlabeled_target.validate());  // permitted for target domain
}

TEST_CASE("synthetic archive regenerates the exact datasets") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "dasein_synth_archive";
  fs::create_directories(dir);
  const fs::path file = dir / "pair.dsyn";

  SynthArchive a;
  a.spec.canvas = 14;
  a.spec.rotation_deg = 30.0;
  a.n_per_class = 3;
  a.class_count = 4;
  a.k_devices = 4;
  a.view_size = 10;
  a.seed = 77;
  save_synth_archive(file, a);

  const SynthArchive back = read_synth_archive(file);
  CHECK(back.seed == 77);
  CHECK(back.spec.rotation_deg == 30.0);
  CHECK(back.view_size == 10);

  auto [s1, t1] = load_synth_archive(file);
  auto [s2, t2] = synth_shift_dataset(a.spec, 3, 4, 4, 10, 77);
  REQUIRE(s1.size() == s2.size());
  for (std::size_t i = 0; i < s1.size(); ++i)
    CHECK((s1.samples[i].views[1].data - s2.samples[i].views[1].data).norm() == 0.0);

  std::ofstream(file) << "garbage";
  CHECK_THROWS_AS(read_synth_archive(file), DataError);
  fs::remove_all(dir);
}

TEST_CASE("directory ingestion from a class tree") {
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / "dasein_dir_dataset";
  fs::remove_all(root);
  fs::create_directories(root / "bike");
  fs::create_directories(root / "car");

  for (int i = 0; i < 2; ++i) {
    save_image_ppm(root / "bike" / ("b" + std::to_string(i) + ".ppm"), ramp_image(3, 12, 12));
    save_image_ppm(root / "car" / ("c" + std::to_string(i) + ".ppm"), ramp_image(3, 14, 12));
  }
  std::ofstream(root / "car" / "notes.txt") << "ignored";

  DomainDataset ds = load_directory_dataset(root, Domain::source, 4, 8, 12);
  CHECK(ds.class_count == 2);
  CHECK(ds.size() == 4);
  CHECK_NOTHROW(ds.validate());
  CHECK(*ds.samples[0].label == 0);  // "bike" sorts first
  CHECK(*ds.samples[2].label == 1);
  CHECK(ds.samples[0].views.size() == 4);
  CHECK(ds.samples[0].views[0].height == 8);

  // flat directory loads as an unlabeled target set
  const fs::path flat = fs::temp_directory_path() / "dasein_flat_dataset";
  fs::remove_all(flat);
  fs::create_directories(flat);
  save_image_ppm(flat / "img0.ppm", ramp_image(3, 12, 12));
  DomainDataset unl = load_directory_dataset(flat, Domain::target, 1, 12, 0);
  CHECK(unl.size() == 1);
  CHECK_FALSE(unl.samples[0].label.has_value());
  CHECK_THROWS_AS(load_directory_dataset(flat, Domain::source, 1, 12, 0), DataError);

  CHECK_THROWS_AS(load_directory_dataset(root / "missing", Domain::source, 1, 8, 0), DataError);
  fs::remove_all(root);
  fs::remove_all(flat);
}

TEST_CASE("image IO round trips") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "dasein_image_io";
  fs::create_directories(dir);

  Image img = ramp_image(3, 9, 11);
  save_image_ppm(dir / "x.ppm", img);
  Image back = load_image(dir / "x.ppm");
  CHECK(back.same_shape(img));
  // 8-bit quantization budget
  CHECK((back.data - img.data).cwiseAbs().maxCoeff() <= 0.5 / 255.0 + 1e-9);

  Image gray = ramp_image(1, 7, 7);
  save_image_ppm(dir / "g.pgm", gray);
  Image gback = load_image(dir / "g.pgm");
  CHECK(gback.channels == 1);
  CHECK((gback.data - gray.data).cwiseAbs().maxCoeff() <= 0.5 / 255.0 + 1e-9);

  if (png_support()) {
    save_image_png(dir / "x.png", img);
    Image pback = load_image(dir / "x.png");
    CHECK(pback.same_shape(img));
    CHECK((pback.data - img.data).cwiseAbs().maxCoeff() <= 0.5 / 255.0 + 1e-9);  // lossless
  }
  if (jpeg_support()) {
    // smooth content; the codec is lossy so the budget is loose
    Image smooth(3, 16, 16);
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x)
          smooth.at(c, y, x) = 0.5 + 0.3 * std::sin(0.3 * x + c) * std::cos(0.25 * y);
    save_image_jpeg(dir / "x.jpg", smooth, 95);
    Image jback = load_image(dir / "x.jpg");
    CHECK(jback.same_shape(smooth));
    CHECK((jback.data - smooth.data).cwiseAbs().maxCoeff() < 0.1);
  }
  CHECK_THROWS_AS(load_image(dir / "x.tiff"), DataError);
  fs::remove_all(dir);
}
