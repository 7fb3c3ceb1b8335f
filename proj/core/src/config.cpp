#include "dasein/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "dasein/version.hpp"

namespace dasein::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config: bad numeric value for " + key + ": '" + v + "'");
  }
}

int to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long d = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return static_cast<int>(d);
  } catch (const std::exception&) {
    throw ConfigError("config: bad integer value for " + key + ": '" + v + "'");
  }
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const unsigned long long d = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config: bad seed value for " + key + ": '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "on") return true;
  if (v == "0" || v == "false" || v == "off") return false;
  throw ConfigError("config: bad boolean value for " + key + ": '" + v + "'");
}

std::array<double, 3> to_triple(const std::string& key, const std::string& v) {
  std::array<double, 3> out{};
  std::stringstream ss(v);
  std::string part;
  for (int i = 0; i < 3; ++i) {
    if (!std::getline(ss, part, ',')) throw ConfigError("config: " + key + " needs 3 values");
    out[i] = to_double(key, trim(part));
  }
  if (std::getline(ss, part, ',')) throw ConfigError("config: " + key + " needs 3 values");
  return out;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}
std::string fmt(int v) { return std::to_string(v); }
std::string fmt(std::uint64_t v) { return std::to_string(v); }
std::string fmt(bool v) { return v ? "1" : "0"; }
std::string fmt(const std::array<double, 3>& g) {
  return fmt(g[0]) + "," + fmt(g[1]) + "," + fmt(g[2]);
}

}  // namespace

void ExperimentConfig::apply(const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  if (key == "seed") seed = to_u64(key, v);
  else if (key == "output.dir") output_dir = v;
  else if (key == "plots") plots = to_bool(key, v);
  else if (key == "data.kind") data_kind = v;
  else if (key == "data.classes") classes = to_int(key, v);
  else if (key == "data.n_per_class") n_per_class = to_int(key, v);
  else if (key == "data.k_devices") k_devices = to_int(key, v);
  else if (key == "data.view_size") view_size = to_int(key, v);
  else if (key == "data.canvas") canvas = to_int(key, v);
  else if (key == "data.channels") channels = to_int(key, v);
  else if (key == "data.source_dir") source_dir = v;
  else if (key == "data.target_dir") target_dir = v;
  else if (key == "data.archive") archive = v;
  else if (key == "data.shift.identity") shift_identity = to_bool(key, v);
  else if (key == "data.shift.rotation_deg") shift_rotation_deg = to_double(key, v);
  else if (key == "data.shift.translate_x") shift_translate_x = to_double(key, v);
  else if (key == "data.shift.translate_y") shift_translate_y = to_double(key, v);
  else if (key == "data.shift.cluster_radius") shift_cluster_radius = to_double(key, v);
  else if (key == "data.shift.scatter") shift_scatter = to_double(key, v);
  else if (key == "data.shift.blob_sigma") shift_blob_sigma = to_double(key, v);
  else if (key == "data.shift.pixel_noise") shift_pixel_noise = to_double(key, v);
  else if (key == "data.shift.source_background") shift_source_background = to_double(key, v);
  else if (key == "data.shift.target_background") shift_target_background = to_double(key, v);
  else if (key == "data.shift.source_gain") shift_source_gain = to_triple(key, v);
  else if (key == "data.shift.target_gain") shift_target_gain = to_triple(key, v);
  else if (key == "model.profile") profile = v;
  else if (key == "model.a_in") a_in = to_int(key, v);
  else if (key == "model.cr") cr = to_double(key, v);
  else if (key == "model.conv_filters") conv_filters = to_int(key, v);
  else if (key == "model.hidden") hidden = to_int(key, v);
  else if (key == "model.decoder_hidden") decoder_hidden = to_int(key, v);
  else if (key == "channel.mode") mode = v;
  else if (key == "channel.snr_db") snr_db = to_double(key, v);
  else if (key == "channel.target_snr_db") target_snr_db = to_double(key, v);
  else if (key == "channel.q_b") q_b = to_int(key, v);
  else if (key == "channel.r") surrogate_r = to_int(key, v);
  else if (key == "channel.z_min") z_min = to_double(key, v);
  else if (key == "channel.z_max") z_max = to_double(key, v);
  else if (key == "train.epochs") epochs = to_int(key, v);
  else if (key == "train.finetune_epochs") finetune_epochs = to_int(key, v);
  else if (key == "train.batch") batch = to_int(key, v);
  else if (key == "train.momentum") momentum = to_double(key, v);
  else if (key == "train.weight_decay") weight_decay = to_double(key, v);
  else if (key == "train.lr_sre") lr_sre = to_double(key, v);
  else if (key == "train.lr_cce") lr_cce = to_double(key, v);
  else if (key == "train.lr_dec") lr_dec = to_double(key, v);
  else if (key == "train.lambda") lambda = to_double(key, v);
  else if (key == "train.lambda1") lambda1 = to_double(key, v);
  else if (key == "train.lambda2") lambda2 = to_double(key, v);
  else if (key == "train.epsilon") epsilon = to_double(key, v);
  else if (key == "train.eval_draws") eval_draws = to_int(key, v);
  else if (key == "train.eval_every") eval_every = to_int(key, v);
  else if (key == "train.soft_target_weights") soft_target_weights = to_bool(key, v);
  else if (key == "train.kd_orientation") kd_orientation = v;
  else if (key == "train.bandwidth") bandwidth = v;
  else if (key == "train.bandwidth_sigma") bandwidth_sigma = to_double(key, v);
  else throw ConfigError("config: unknown key '" + key + "'");
}

ExperimentConfig ExperimentConfig::load(const std::optional<std::filesystem::path>& file,
                                        const std::vector<std::string>& overrides) {
  ExperimentConfig cfg;
  if (file) {
    std::ifstream is(*file);
    if (!is) throw ConfigError("config: cannot open " + file->string());
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError("config: missing '=' at " + file->string() + ":" +
                          std::to_string(lineno));
      cfg.apply(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
  }
  for (const std::string& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: override needs key=value, got '" + ov + "'");
    cfg.apply(trim(ov.substr(0, eq)), trim(ov.substr(eq + 1)));
  }
  cfg.validate();
  return cfg;
}

void ExperimentConfig::validate() const {
  if (data_kind != "synthetic" && data_kind != "directory" && data_kind != "archive")
    throw ConfigError("config: data.kind must be synthetic, directory, or archive");
  if (data_kind == "directory" && (source_dir.empty() || target_dir.empty()))
    throw ConfigError("config: directory datasets need data.source_dir and data.target_dir");
  if (data_kind == "archive" && archive.empty())
    throw ConfigError("config: archive datasets need data.archive");
  if (profile != "conv" && profile != "dense")
    throw ConfigError("config: model.profile must be conv or dense");
  if (mode != "analog" && mode != "digital")
    throw ConfigError("config: channel.mode must be analog or digital");
  if (kd_orientation != "teacher_target" && kd_orientation != "as_printed")
    throw ConfigError("config: train.kd_orientation must be teacher_target or as_printed");
  if (bandwidth != "median" && bandwidth != "fixed")
    throw ConfigError("config: train.bandwidth must be median or fixed");
  if (output_dir.empty()) throw ConfigError("config: output.dir must be set");
  model_config().validate();
  train_plan().validate();
  source_channel().validate();
  target_channel().validate();
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::resolved() const {
  return {
      {"seed", fmt(seed)},
      {"output.dir", output_dir},
      {"plots", fmt(plots)},
      {"data.kind", data_kind},
      {"data.classes", fmt(classes)},
      {"data.n_per_class", fmt(n_per_class)},
      {"data.k_devices", fmt(k_devices)},
      {"data.view_size", fmt(view_size)},
      {"data.canvas", fmt(canvas)},
      {"data.channels", fmt(channels)},
      {"data.source_dir", source_dir},
      {"data.target_dir", target_dir},
      {"data.archive", archive},
      {"data.shift.identity", fmt(shift_identity)},
      {"data.shift.rotation_deg", fmt(shift_rotation_deg)},
      {"data.shift.translate_x", fmt(shift_translate_x)},
      {"data.shift.translate_y", fmt(shift_translate_y)},
      {"data.shift.cluster_radius", fmt(shift_cluster_radius)},
      {"data.shift.scatter", fmt(shift_scatter)},
      {"data.shift.blob_sigma", fmt(shift_blob_sigma)},
      {"data.shift.pixel_noise", fmt(shift_pixel_noise)},
      {"data.shift.source_background", fmt(shift_source_background)},
      {"data.shift.target_background", fmt(shift_target_background)},
      {"data.shift.source_gain", fmt(shift_source_gain)},
      {"data.shift.target_gain", fmt(shift_target_gain)},
      {"model.profile", profile},
      {"model.a_in", fmt(a_in)},
      {"model.cr", fmt(cr)},
      {"model.conv_filters", fmt(conv_filters)},
      {"model.hidden", fmt(hidden)},
      {"model.decoder_hidden", fmt(decoder_hidden)},
      {"channel.mode", mode},
      {"channel.snr_db", fmt(snr_db)},
      {"channel.target_snr_db", fmt(target_snr_db)},
      {"channel.q_b", fmt(q_b)},
      {"channel.r", fmt(surrogate_r)},
      {"channel.z_min", fmt(z_min)},
      {"channel.z_max", fmt(z_max)},
      {"train.epochs", fmt(epochs)},
      {"train.finetune_epochs", fmt(finetune_epochs)},
      {"train.batch", fmt(batch)},
      {"train.momentum", fmt(momentum)},
      {"train.weight_decay", fmt(weight_decay)},
      {"train.lr_sre", fmt(lr_sre)},
      {"train.lr_cce", fmt(lr_cce)},
      {"train.lr_dec", fmt(lr_dec)},
      {"train.lambda", fmt(lambda)},
      {"train.lambda1", fmt(lambda1)},
      {"train.lambda2", fmt(lambda2)},
      {"train.epsilon", fmt(epsilon)},
      {"train.eval_draws", fmt(eval_draws)},
      {"train.eval_every", fmt(eval_every)},
      {"train.soft_target_weights", fmt(soft_target_weights)},
      {"train.kd_orientation", kd_orientation},
      {"train.bandwidth", bandwidth},
      {"train.bandwidth_sigma", fmt(bandwidth_sigma)},
  };
}

net::ModelConfig ExperimentConfig::model_config() const {
  net::ModelConfig m;
  m.view_channels = channels;
  m.view_size = view_size;
  m.profile = profile == "conv" ? net::SreProfile::conv : net::SreProfile::dense;
  m.conv_filters = conv_filters;
  m.hidden = hidden;
  m.a_in = a_in;
  m.compression_rate = cr;
  m.classes = classes;
  m.devices = k_devices;
  m.mode = mode == "analog" ? TxMode::analog : TxMode::digital;
  m.z_min = z_min;
  m.z_max = z_max;
  m.decoder_hidden = decoder_hidden;
  return m;
}

data::ShiftSpec ExperimentConfig::shift_spec() const {
  if (shift_identity) {
    data::ShiftSpec s = data::ShiftSpec::identity_shift();
    s.canvas = canvas;
    s.channels = channels;
    s.cluster_radius = shift_cluster_radius;
    s.scatter = shift_scatter;
    s.blob_sigma = shift_blob_sigma;
    s.pixel_noise = shift_pixel_noise;
    s.source_background = shift_source_background;
    s.target_background = shift_source_background;
    s.source_gain = shift_source_gain;
    s.target_gain = shift_source_gain;
    return s;
  }
  data::ShiftSpec s;
  s.canvas = canvas;
  s.channels = channels;
  s.cluster_radius = shift_cluster_radius;
  s.scatter = shift_scatter;
  s.blob_sigma = shift_blob_sigma;
  s.pixel_noise = shift_pixel_noise;
  s.source_background = shift_source_background;
  s.target_background = shift_target_background;
  s.rotation_deg = shift_rotation_deg;
  s.translate_x = shift_translate_x;
  s.translate_y = shift_translate_y;
  s.source_gain = shift_source_gain;
  s.target_gain = shift_target_gain;
  return s;
}

train::TrainPlan ExperimentConfig::train_plan() const {
  train::TrainPlan p;
  p.epochs = epochs;
  p.finetune_epochs = finetune_epochs;
  p.batch = batch;
  p.momentum = momentum;
  p.weight_decay = weight_decay;
  p.lr_sre = lr_sre;
  p.lr_cce = lr_cce;
  p.lr_dec = lr_dec;
  p.weights.lambda = lambda;
  p.weights.lambda1 = lambda1;
  p.weights.lambda2 = lambda2;
  p.weights.epsilon = epsilon;
  p.kernel.mode = bandwidth == "median" ? loss::BandwidthMode::median_heuristic
                                        : loss::BandwidthMode::fixed;
  p.kernel.sigma_b = bandwidth_sigma;
  p.kd_orientation = kd_orientation == "teacher_target" ? loss::KdOrientation::teacher_target
                                                        : loss::KdOrientation::as_printed;
  p.soft_target_weights = soft_target_weights;
  p.eval_draws = eval_draws;
  p.eval_every = eval_every;
  p.seed = seed;
  return p;
}

channel::QuantizerSpec ExperimentConfig::quantizer_spec() const {
  channel::QuantizerSpec q;
  q.q_b = q_b;
  q.z_min = z_min;
  q.z_max = z_max;
  q.r = surrogate_r;
  return q;
}

channel::ChannelSpec ExperimentConfig::source_channel() const {
  return mode == "analog" ? channel::ChannelSpec::analog(snr_db, k_devices)
                          : channel::ChannelSpec::digital(snr_db, k_devices, quantizer_spec());
}

channel::ChannelSpec ExperimentConfig::target_channel() const {
  return mode == "analog"
             ? channel::ChannelSpec::analog(target_snr_db, k_devices)
             : channel::ChannelSpec::digital(target_snr_db, k_devices, quantizer_spec());
}

std::pair<data::DomainDataset, data::DomainDataset> load_datasets(const ExperimentConfig& cfg) {
  if (cfg.data_kind == "synthetic")
    return data::synth_shift_dataset(cfg.shift_spec(), cfg.n_per_class, cfg.classes,
                                     cfg.k_devices, cfg.view_size, cfg.seed);
  if (cfg.data_kind == "archive") return data::load_synth_archive(cfg.archive);
  auto source = data::load_directory_dataset(cfg.source_dir, data::Domain::source, cfg.k_devices,
                                             cfg.view_size, cfg.canvas, cfg.channels);
  auto target = data::load_directory_dataset(cfg.target_dir, data::Domain::target, cfg.k_devices,
                                             cfg.view_size, cfg.canvas, cfg.channels);
  if (source.class_count != cfg.classes)
    throw DataError("config: data.classes differs from directory class count");
  if (target.class_count == 0) target.class_count = source.class_count;
  return {std::move(source), std::move(target)};
}

RunPaths prepare_output_dir(const ExperimentConfig& cfg) {
  RunPaths p;
  p.root = cfg.output_dir;
  p.checkpoints = p.root / "checkpoints";
  p.metrics = p.root / "metrics";
  p.plots = p.root / "plots";
  p.manifest = p.root / "manifest";
  std::filesystem::create_directories(p.checkpoints);
  std::filesystem::create_directories(p.metrics);
  std::filesystem::create_directories(p.plots);
  return p;
}

void write_manifest(const RunPaths& paths, const ExperimentConfig& cfg,
                    const std::string& command) {
  std::ofstream os(paths.manifest);
  if (!os) throw DataError("manifest: cannot open " + paths.manifest.string());
  os << "# dasein manifest\n";
  os << "# version: " << kVersion << "\n";
  os << "# command: " << command << "\n";
  for (const auto& [k, v] : cfg.resolved()) os << k << " = " << v << "\n";
}

}  // namespace dasein::cli
