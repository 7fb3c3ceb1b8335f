#include "cli/commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "dasein/evalkit.hpp"
#include "dasein/version.hpp"

namespace dasein::cli {

namespace fs = std::filesystem;

int run_guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitDataError;
  } catch (const DimensionError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitDataError;
  } catch (const NumericError& e) {
    std::cerr << "numeric abort: " << e.what() << "\n";
    return kExitNumericError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

int cmd_synth(const ExperimentConfig& cfg) {
  if (cfg.data_kind != "synthetic")
    throw ConfigError("synth: data.kind must be synthetic");
  RunPaths paths = prepare_output_dir(cfg);
  write_manifest(paths, cfg, "synth");

  auto [source, target] = load_datasets(cfg);
  source.validate();
  target.validate();

  data::SynthArchive archive;
  archive.spec = cfg.shift_spec();
  archive.n_per_class = cfg.n_per_class;
  archive.class_count = cfg.classes;
  archive.k_devices = cfg.k_devices;
  archive.view_size = cfg.view_size;
  archive.seed = cfg.seed;
  const fs::path out = cfg.archive.empty() ? paths.root / "synth.dsyn" : fs::path(cfg.archive);
  data::save_synth_archive(out, archive);
  std::cout << "synth: wrote " << out.string() << " (" << source.size() << " source / "
            << target.size() << " target samples, " << cfg.classes << " classes)\n";
  return kExitOk;
}

int cmd_train_uda(const ExperimentConfig& cfg) {
  RunPaths paths = prepare_output_dir(cfg);
  write_manifest(paths, cfg, "train-uda");

  auto [source, target] = load_datasets(cfg);
  net::Model model = net::Model::init(cfg.model_config(), cfg.seed);
  train::TrainResult result =
      train::train_step1(cfg.train_plan(), source, target, std::move(model), cfg.source_channel());

  train::write_metrics_csv(paths.metrics / "step1.csv", result.curve);
  net::save_checkpoint(paths.checkpoints / "theta_t.ckpt", result.model);
  const auto& last = result.curve.back();
  std::cout << "train-uda: done after " << result.curve.size() << " epochs; source acc "
            << last.source_acc << ", target acc " << last.target_acc << "\n";
  std::cout << "train-uda: checkpoint " << (paths.checkpoints / "theta_t.ckpt").string() << "\n";
  return kExitOk;
}

int cmd_finetune_kd(const ExperimentConfig& cfg, const fs::path& checkpoint) {
  RunPaths paths = prepare_output_dir(cfg);
  write_manifest(paths, cfg, "finetune-kd");

  auto [source, target] = load_datasets(cfg);
  net::Model theta = net::load_checkpoint(checkpoint, cfg.model_config());
  train::TrainResult result = train::train_step2(cfg.train_plan(), source, target, theta,
                                                 cfg.source_channel(), cfg.target_channel());

  train::write_metrics_csv(paths.metrics / "step2.csv", result.curve);
  net::save_checkpoint(paths.checkpoints / "theta_st.ckpt", result.model);
  if (result.curve.empty()) {
    std::cout << "finetune-kd: no fine-tune epochs requested; student equals the teacher\n";
  } else {
    const auto& last = result.curve.back();
    std::cout << "finetune-kd: done after " << result.curve.size() << " epochs; target acc "
              << last.target_acc << " at " << cfg.target_snr_db << " dB\n";
  }
  std::cout << "finetune-kd: checkpoint " << (paths.checkpoints / "theta_st.ckpt").string()
            << "\n";
  return kExitOk;
}

int cmd_eval(const ExperimentConfig& cfg, const fs::path& checkpoint, const std::string& method) {
  if (method != "test-d" && method != "dasein-s1" && method != "dasein")
    throw ConfigError("eval: method must be test-d, dasein-s1, or dasein");
  RunPaths paths = prepare_output_dir(cfg);
  write_manifest(paths, cfg, "eval");

  auto [source, target] = load_datasets(cfg);
  net::Model model = net::load_checkpoint(checkpoint, cfg.model_config());
  const channel::ChannelSpec ch = cfg.target_channel();
  const std::uint64_t eval_seed = derive_seed(cfg.seed, "cli.eval");

  const train::EvalResult ev = train::evaluate(model, target, ch, cfg.eval_draws, eval_seed);

  const fs::path csv = paths.metrics / ("eval_" + method + ".csv");
  std::ofstream os(csv);
  if (!os) throw DataError("eval: cannot open " + csv.string());
  os << "method,snr_db,draw,accuracy\n";
  char buf[160];
  for (std::size_t d = 0; d < ev.per_draw.size(); ++d) {
    std::snprintf(buf, sizeof(buf), "%s,%.17g,%zu,%.17g\n", method.c_str(), cfg.target_snr_db, d,
                  ev.per_draw[d]);
    os << buf;
  }

  std::vector<int> truth;
  for (const auto& s : target.samples) truth.push_back(*s.label);
  const std::vector<int> preds = train::predict_labels(model, target, ch, eval_seed);
  const Eigen::MatrixXi cm = eval::confusion_matrix(preds, truth, target.class_count);
  eval::write_confusion_csv(paths.metrics / ("confusion_" + method + ".csv"), cm);
  if (cfg.plots) eval::write_confusion_svg(paths.plots / ("confusion_" + method + ".svg"), cm);

  std::printf("eval[%s] @ %.4g dB: accuracy %.4f +- %.4f over %d draws\n", method.c_str(),
              cfg.target_snr_db, ev.mean, ev.stddev, cfg.eval_draws);
  return kExitOk;
}

namespace {

std::vector<double> sweep_axis_values(const SweepArgs& args) {
  if (!args.list.empty()) return args.list;
  if (!(args.step > 0.0) || args.to < args.from)
    throw ConfigError("sweep: need --list or --from/--to with positive --step");
  std::vector<double> axis;
  for (double v = args.from; v <= args.to + 1e-12; v += args.step) axis.push_back(v);
  return axis;
}

channel::ChannelSpec channel_at(const ExperimentConfig& cfg, double snr_db) {
  return cfg.mode == "analog"
             ? channel::ChannelSpec::analog(snr_db, cfg.k_devices)
             : channel::ChannelSpec::digital(snr_db, cfg.k_devices, cfg.quantizer_spec());
}

}  // namespace

int cmd_sweep(const ExperimentConfig& cfg, const SweepArgs& args) {
  if (args.axis != "snr" && args.axis != "cr") throw ConfigError("sweep: axis must be snr or cr");
  RunPaths paths = prepare_output_dir(cfg);
  write_manifest(paths, cfg, "sweep");

  auto [source, target] = load_datasets(cfg);
  const std::vector<double> axis = sweep_axis_values(args);
  std::vector<eval::MethodEval> methods;

  if (args.axis == "snr") {
    if (args.models.empty())
      throw ConfigError("sweep: snr axis needs at least one --model tag=checkpoint");
    // lives until run_sweep finishes
    auto loaded = std::make_shared<std::vector<net::Model>>();
    for (const auto& [tag, path] : args.models)
      loaded->push_back(net::load_checkpoint(path, cfg.model_config()));
    for (std::size_t i = 0; i < args.models.size(); ++i) {
      const std::string tag = args.models[i].first;
      const net::Model* model = &(*loaded)[i];
      methods.push_back({tag, [&cfg, &target = target, model, loaded](double snr, unsigned seed) {
                           return train::evaluate(*model, target, channel_at(cfg, snr),
                                                  cfg.eval_draws,
                                                  derive_seed(cfg.seed, "sweep.eval", seed))
                               .mean;
                         }});
    }
  } else {
    const std::string tag = args.finetune ? "dasein" : "dasein-s1";
    methods.push_back({tag, [&cfg, &source = source, &target = target, &args](double cr,
                                                                              unsigned seed) {
                         ExperimentConfig point = cfg;
                         point.cr = cr;
                         point.seed = derive_seed(cfg.seed, "sweep.cr", seed);
                         train::TrainPlan plan = point.train_plan();
                         net::Model model = net::Model::init(point.model_config(), point.seed);
                         train::TrainResult r1 = train::train_step1(
                             plan, source, target, std::move(model), point.source_channel());
                         const net::Model* final_model = &r1.model;
                         train::TrainResult r2{net::Model{}, {}};
                         if (args.finetune) {
                           r2 = train::train_step2(plan, source, target, r1.model,
                                                   point.source_channel(),
                                                   point.target_channel());
                           final_model = &r2.model;
                         }
                         return train::evaluate(*final_model, target, point.target_channel(),
                                                point.eval_draws,
                                                derive_seed(point.seed, "sweep.eval"))
                             .mean;
                       }});
  }

  const eval::SweepResult result = args.axis == "snr"
                                       ? eval::snr_sweep(methods, axis, args.seeds, args.jobs)
                                       : eval::cr_sweep(methods, axis, args.seeds, args.jobs);

  const std::string stem = args.name.empty() ? args.axis : args.name;
  eval::write_sweep_csv(paths.metrics / ("sweep_" + stem + ".csv"), result);
  if (cfg.plots)
    eval::write_sweep_svg(paths.plots / ("sweep_" + stem + ".svg"), result,
                          args.axis == "snr" ? "SNR (dB)" : "compression rate");

  for (const std::string& m : result.methods)
    for (double x : result.axis)
      std::printf("sweep[%s] %s=%.4g: %.4f +- %.4f\n", m.c_str(), args.axis.c_str(), x,
                  result.mean(m, x), result.stddev(m, x));
  return kExitOk;
}

int cmd_digital_debug(const DigitalDebugArgs& args, std::ostream& os) {
  if (args.values.empty()) throw ConfigError("digital-debug: need at least one --value");
  channel::QuantizerSpec spec;
  spec.q_b = args.q_b;
  spec.r = args.r;
  spec.z_min = args.z_min;
  spec.z_max = args.z_max;
  spec.validate();

  Vec z(static_cast<Eigen::Index>(args.values.size()));
  for (std::size_t i = 0; i < args.values.size(); ++i) z[static_cast<Eigen::Index>(i)] = args.values[i];

  const auto indices = channel::quantize_index(z, spec);
  const auto bits = channel::encode_bits(indices, spec);
  const auto symbols = channel::modulate_qpsk(bits);
  const double sigma = args.with_noise ? channel::snr_to_sigma(args.snr_db) : 0.0;
  RngStream rng = RngStream::derive(args.seed, "digital.debug");
  const auto received = channel::complex_awgn(symbols, sigma, rng);
  const auto rx_bits = channel::demodulate_qpsk(received);
  const auto rx_indices = channel::decode_bits(rx_bits, spec);
  const Vec zhat = channel::dac(rx_indices, spec);

  os << "digital chain: q_b=" << spec.q_b << " range=(" << spec.z_min << "," << spec.z_max
     << ") levels=" << spec.levels();
  if (args.with_noise)
    os << " snr_db=" << args.snr_db << " sigma=" << sigma;
  else
    os << " noiseless";
  os << "\n";
  os << "value      g(z)       index  bits";
  const std::string pad(std::max(1, args.q_b - 4) + 2, ' ');
  os << pad << "rx_bits" << pad << "rx_idx  zhat\n";

  const Vec g = channel::g_map(z, spec);
  char buf[64];
  for (std::size_t i = 0; i < args.values.size(); ++i) {
    const Eigen::Index ei = static_cast<Eigen::Index>(i);
    std::snprintf(buf, sizeof(buf), "%-10.5g %-10.5g %-6d ", z[ei], g[ei], indices[i]);
    os << buf;
    for (int b = 0; b < spec.q_b; ++b) os << int(bits[i * spec.q_b + b]);
    os << pad;
    for (int b = 0; b < spec.q_b; ++b) os << int(rx_bits[i * spec.q_b + b]);
    os << pad;
    std::snprintf(buf, sizeof(buf), "%-7d %-10.5g", rx_indices[i], zhat[ei]);
    os << buf << "\n";
  }
  os << "symbols:";
  for (const auto& s : symbols) {
    std::snprintf(buf, sizeof(buf), " (%+.4f%+.4fj)", s.real(), s.imag());
    os << buf;
  }
  os << "\nreceived:";
  for (const auto& s : received) {
    std::snprintf(buf, sizeof(buf), " (%+.4f%+.4fj)", s.real(), s.imag());
    os << buf;
  }
  os << "\n";
  return kExitOk;
}

}  // namespace dasein::cli
