#include "dasein/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace dasein::train {

using data::MultiViewSample;
using net::Model;
using net::ModelGrads;
using net::PredictionDist;

void TrainPlan::validate() const {
  if (epochs < 1) throw ConfigError("plan: epochs >= 1");
  if (finetune_epochs < 0) throw ConfigError("plan: finetune epochs >= 0");
  if (batch < 1) throw ConfigError("plan: batch >= 1");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("plan: momentum in [0,1)");
  if (weight_decay < 0.0) throw ConfigError("plan: weight decay >= 0");
  if (!(lr_sre > 0.0 && lr_cce > 0.0 && lr_dec > 0.0))
    throw ConfigError("plan: learning rates must be positive");
  if (eval_draws < 1 || eval_every < 1) throw ConfigError("plan: eval settings >= 1");
  weights.validate();
}

double lr_anneal(double eta0, int epoch, int total_epochs) {
  if (total_epochs < 1) throw ConfigError("lr_anneal: total epochs >= 1");
  const double x = static_cast<double>(epoch) / total_epochs;
  return eta0 / std::pow(1.0 + 10.0 * x, 0.75);
}

SgdOptimizer::SgdOptimizer(const Model& m, double momentum, double weight_decay)
    : velocity_(ModelGrads::zeros_like(m)), momentum_(momentum), weight_decay_(weight_decay) {}

void SgdOptimizer::step(Model& m, ModelGrads& grads, const GroupLearningRates& lr) {
  using net::ParamGroup;
  const std::pair<ParamGroup, double> groups[] = {
      {ParamGroup::sre, lr.sre}, {ParamGroup::cce, lr.cce}, {ParamGroup::decoder, lr.dec}};
  for (const auto& [group, eta] : groups) {
    auto ps = m.group_params(group);
    auto gs = grads.group_params(group);
    auto vs = velocity_.group_params(group);
    if (ps.size() != gs.size() || ps.size() != vs.size())
      throw DimensionError("sgd: parameter/gradient shape mismatch");
    for (std::size_t i = 0; i < ps.size(); ++i) {
      const double d = *gs[i] + weight_decay_ * *ps[i];
      *vs[i] = momentum_ * *vs[i] + d;
      *ps[i] -= eta * *vs[i];
    }
  }
}

NoiseBank draw_noise_bank(int samples, int devices, int dim, RngStream& rng) {
  NoiseBank bank(samples);
  for (int i = 0; i < samples; ++i) {
    bank[i].reserve(devices);
    for (int k = 0; k < devices; ++k) {
      Vec n(dim);
      for (int j = 0; j < dim; ++j) n[j] = rng.gaussian();
      bank[i].push_back(std::move(n));
    }
  }
  return bank;
}

Step1BatchInput gather(const data::PairedBatch& batch) {
  Step1BatchInput in;
  in.source.reserve(batch.source_indices.size());
  in.source_labels.reserve(batch.source_indices.size());
  in.target.reserve(batch.target_indices.size());
  for (int i = 0; i < batch.size(); ++i) {
    in.source.push_back(&batch.source_sample(i));
    in.source_labels.push_back(batch.source_label(i));
    in.target.push_back(&batch.target_sample(i));
  }
  return in;
}

namespace {

void check_channel(const Model& m, const channel::ChannelSpec& ch) {
  ch.validate();
  if (static_cast<int>(ch.per_device_sigma.size()) != m.cfg.devices)
    throw ConfigError("trainer: channel device count mismatch");
  if (ch.mode != m.cfg.mode) throw ConfigError("trainer: channel/model mode mismatch");
  if (ch.mode == TxMode::digital &&
      (ch.quantizer->z_min != m.cfg.z_min || ch.quantizer->z_max != m.cfg.z_max))
    throw ConfigError("trainer: quantizer range does not match the encoder bound");
}

struct DeviceFwd {
  net::SreCache sre;
  net::CceCache cce;
  channel::TrainPathCache digital;
};

struct SampleFwd {
  std::vector<DeviceFwd> dev;
  Vec zhat;
  net::DecoderCache dec;
  PredictionDist pred;
};

SampleFwd forward_sample_train(const Model& m, const MultiViewSample& s,
                               const channel::ChannelSpec& ch, const std::vector<Vec>& noise) {
  const int devices = m.cfg.devices;
  if (static_cast<int>(s.views.size()) != devices)
    throw DimensionError("trainer: sample view count differs from device count");
  SampleFwd out;
  out.dev.resize(devices);
  std::vector<Vec> parts(devices);
  for (int k = 0; k < devices; ++k) {
    Vec f = m.sre_forward(s.views[k], &out.dev[k].sre);
    net::CodedFeature z = m.cce_forward(f, &out.dev[k].cce);
    if (ch.mode == TxMode::analog)
      parts[k] = channel::awgn(z.values, ch.sigma(k), noise[k]);
    else
      parts[k] = channel::digital_train_forward(z.values, *ch.quantizer, ch.sigma(k), noise[k],
                                                &out.dev[k].digital);
  }
  out.zhat = channel::concat_views(parts);
  out.pred = m.decode(out.zhat, &out.dec);
  return out;
}

void backward_sample(const Model& m, const SampleFwd& f, const MultiViewSample& s,
                     const channel::ChannelSpec& ch, const Vec* gprobs, const Vec* gzhat,
                     ModelGrads& acc) {
  Vec gz = gzhat ? *gzhat : Vec::Zero(f.zhat.size());
  if (gprobs) gz += net::decoder_backward(m, f.dec, *gprobs, acc.dec);
  const int per = m.cfg.a_out();
  for (int k = 0; k < m.cfg.devices; ++k) {
    Vec gpart = gz.segment(static_cast<Eigen::Index>(k) * per, per);
    if (ch.mode == TxMode::digital) gpart = gpart.cwiseProduct(f.dev[k].digital.slope);
    Vec gf = net::cce_backward(m, f.dev[k].cce, gpart, acc.cce);
    net::sre_backward(m, f.dev[k].sre, s.views[k], gf, acc.sre);
  }
}

struct DomainFwd {
  std::vector<SampleFwd> samples;
  std::vector<Vec> feats;
  std::vector<PredictionDist> preds;
};

DomainFwd forward_domain(const Model& m, std::span<const MultiViewSample* const> samples,
                         const channel::ChannelSpec& ch, const NoiseBank& noise) {
  if (noise.size() != samples.size())
    throw DimensionError("trainer: noise bank size differs from batch");
  DomainFwd out;
  out.samples.reserve(samples.size());
  out.feats.reserve(samples.size());
  out.preds.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    out.samples.push_back(forward_sample_train(m, *samples[i], ch, noise[i]));
    out.feats.push_back(out.samples.back().zhat);
    out.preds.push_back(out.samples.back().pred);
  }
  return out;
}

double mean_source_ce(const std::vector<PredictionDist>& preds, std::span<const int> labels,
                      int class_count) {
  double acc = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i)
    acc += loss::cross_entropy(preds[i].probs, loss::one_hot(labels[i], class_count));
  return acc / static_cast<double>(preds.size());
}

}  // namespace

loss::Step1Loss step1_loss(const Model& m, const Step1BatchInput& batch,
                           const channel::ChannelSpec& ch, const NoiseBank& source_noise,
                           const NoiseBank& target_noise, const TrainPlan& plan, int epoch) {
  check_channel(m, ch);
  DomainFwd src = forward_domain(m, batch.source, ch, source_noise);
  DomainFwd tgt = forward_domain(m, batch.target, ch, target_noise);
  return loss::loss_step1(src.preds, batch.source_labels, src.feats, tgt.feats, tgt.preds,
                          m.cfg.classes, plan.weights, plan.kernel, epoch, plan.epochs,
                          plan.soft_target_weights);
}

loss::Step1Loss step1_loss_and_grads(const Model& m, const Step1BatchInput& batch,
                                     const channel::ChannelSpec& ch,
                                     const NoiseBank& source_noise, const NoiseBank& target_noise,
                                     const TrainPlan& plan, int epoch, ModelGrads& grads) {
  check_channel(m, ch);
  if (batch.source.empty() || batch.source.size() != batch.source_labels.size())
    throw DimensionError("trainer: malformed source batch");
  DomainFwd src = forward_domain(m, batch.source, ch, source_noise);
  DomainFwd tgt = forward_domain(m, batch.target, ch, target_noise);

  loss::Step1Loss l;
  l.ce = mean_source_ce(src.preds, batch.source_labels, m.cfg.classes);
  l.delta = loss::warmup_delta(epoch, plan.epochs);
  const double coeff = l.delta * plan.weights.lambda;

  loss::LmmdGrad lg;
  if (coeff != 0.0) {
    lg = loss::lmmd_with_grad(src.feats, batch.source_labels, tgt.feats, tgt.preds,
                              m.cfg.classes, plan.kernel, plan.soft_target_weights);
  } else {
    lg.value = loss::lmmd(src.feats, batch.source_labels, tgt.feats, tgt.preds, m.cfg.classes,
                          plan.kernel, plan.soft_target_weights);
  }
  l.uda = lg.value;
  l.total = l.ce + coeff * l.uda;

  const double inv_n = 1.0 / static_cast<double>(batch.source.size());
  for (std::size_t i = 0; i < batch.source.size(); ++i) {
    Vec gp = loss::cross_entropy_grad(src.preds[i].probs,
                                      loss::one_hot(batch.source_labels[i], m.cfg.classes)) *
             inv_n;
    if (coeff != 0.0) {
      Vec gz = coeff * lg.d_source[i];
      backward_sample(m, src.samples[i], *batch.source[i], ch, &gp, &gz, grads);
    } else {
      backward_sample(m, src.samples[i], *batch.source[i], ch, &gp, nullptr, grads);
    }
  }
  if (coeff != 0.0) {
    // warm-up delta = 0 makes the alignment term contribute exactly nothing
    for (std::size_t j = 0; j < batch.target.size(); ++j) {
      Vec gz = coeff * lg.d_target[j];
      backward_sample(m, tgt.samples[j], *batch.target[j], ch, nullptr, &gz, grads);
    }
  }
  return l;
}

loss::Step2Loss step2_loss(const Model& student, const Model& teacher,
                           const Step1BatchInput& batch, const channel::ChannelSpec& student_ch,
                           const channel::ChannelSpec& teacher_ch, const NoiseBank& source_noise,
                           const NoiseBank& target_noise, const NoiseBank& teacher_noise,
                           const TrainPlan& plan) {
  check_channel(student, student_ch);
  check_channel(teacher, teacher_ch);
  DomainFwd tc = forward_domain(teacher, batch.target, teacher_ch, teacher_noise);
  DomainFwd src = forward_domain(student, batch.source, student_ch, source_noise);
  DomainFwd tgt = forward_domain(student, batch.target, student_ch, target_noise);
  return loss::loss_step2(src.preds, batch.source_labels, src.feats, tgt.feats, tgt.preds,
                          tc.preds, student.cfg.classes, plan.weights, plan.kernel,
                          plan.kd_orientation, plan.soft_target_weights);
}

loss::Step2Loss step2_loss_and_grads(const Model& student, const Model& teacher,
                                     const Step1BatchInput& batch,
                                     const channel::ChannelSpec& student_ch,
                                     const channel::ChannelSpec& teacher_ch,
                                     const NoiseBank& source_noise, const NoiseBank& target_noise,
                                     const NoiseBank& teacher_noise, const TrainPlan& plan,
                                     ModelGrads& grads) {
  check_channel(student, student_ch);
  check_channel(teacher, teacher_ch);
  if (batch.source.empty() || batch.source.size() != batch.source_labels.size())
    throw DimensionError("trainer: malformed source batch");

  DomainFwd tc = forward_domain(teacher, batch.target, teacher_ch, teacher_noise);
  DomainFwd src = forward_domain(student, batch.source, student_ch, source_noise);
  DomainFwd tgt = forward_domain(student, batch.target, student_ch, target_noise);

  const int classes = student.cfg.classes;
  const loss::LossWeights& w = plan.weights;

  loss::Step2Loss l;
  l.ce = mean_source_ce(src.preds, batch.source_labels, classes);

  loss::LmmdGrad lg;
  if (w.lambda1 != 0.0) {
    lg = loss::lmmd_with_grad(src.feats, batch.source_labels, tgt.feats, tgt.preds, classes,
                              plan.kernel, plan.soft_target_weights);
  } else {
    lg.value = loss::lmmd(src.feats, batch.source_labels, tgt.feats, tgt.preds, classes,
                          plan.kernel, plan.soft_target_weights);
  }
  l.uda = lg.value;

  auto mask = loss::kd_mask(tc.preds, w.epsilon);
  l.kd = loss::kd_ce_masked(tgt.preds, tc.preds, mask, plan.kd_orientation);
  for (auto m_ : mask) l.kept += m_;
  l.total = l.ce + w.lambda1 * l.uda + w.lambda2 * l.kd;

  const double inv_n = 1.0 / static_cast<double>(batch.source.size());
  for (std::size_t i = 0; i < batch.source.size(); ++i) {
    Vec gp = loss::cross_entropy_grad(src.preds[i].probs,
                                      loss::one_hot(batch.source_labels[i], classes)) *
             inv_n;
    if (w.lambda1 != 0.0) {
      Vec gz = w.lambda1 * lg.d_source[i];
      backward_sample(student, src.samples[i], *batch.source[i], student_ch, &gp, &gz, grads);
    } else {
      backward_sample(student, src.samples[i], *batch.source[i], student_ch, &gp, nullptr, grads);
    }
  }
  const double kd_scale = (l.kept > 0 && w.lambda2 != 0.0) ? w.lambda2 / l.kept : 0.0;
  for (std::size_t j = 0; j < batch.target.size(); ++j) {
    Vec gp;
    const bool has_kd = kd_scale != 0.0 && mask[j];
    if (has_kd)
      gp = kd_scale * loss::kd_ce_grad_student(tgt.preds[j].probs, tc.preds[j].probs,
                                               plan.kd_orientation);
    const bool has_uda = w.lambda1 != 0.0;
    if (!has_kd && !has_uda) continue;
    Vec gz;
    if (has_uda) gz = w.lambda1 * lg.d_target[j];
    backward_sample(student, tgt.samples[j], *batch.target[j], student_ch,
                    has_kd ? &gp : nullptr, has_uda ? &gz : nullptr, grads);
  }
  return l;
}

// --- evaluation ---

namespace {

PredictionDist predict_sample(const Model& m, const MultiViewSample& s,
                              const channel::ChannelSpec& ch, std::uint64_t eval_seed, int draw,
                              int index) {
  std::vector<Vec> parts(m.cfg.devices);
  for (int k = 0; k < m.cfg.devices; ++k) {
    Vec f = m.sre_forward(s.views[k]);
    net::CodedFeature z = m.cce_forward(f);
    RngStream rng = RngStream::derive(eval_seed, "eval.noise", static_cast<std::uint64_t>(draw),
                                      static_cast<std::uint64_t>(index),
                                      static_cast<std::uint64_t>(k));
    if (ch.mode == TxMode::analog)
      parts[k] = channel::awgn(z.values, ch.sigma(k), rng);
    else
      parts[k] = channel::digital_infer_forward(z.values, *ch.quantizer, ch.sigma(k), rng);
  }
  return m.decode(channel::concat_views(parts));
}

}  // namespace

std::vector<int> predict_labels(const Model& m, const data::DomainDataset& ds,
                                const channel::ChannelSpec& ch, std::uint64_t eval_seed,
                                int draw) {
  check_channel(m, ch);
  std::vector<int> out;
  out.reserve(ds.samples.size());
  for (std::size_t i = 0; i < ds.samples.size(); ++i)
    out.push_back(
        predict_sample(m, ds.samples[i], ch, eval_seed, draw, static_cast<int>(i)).label);
  return out;
}

EvalResult evaluate(const Model& m, const data::DomainDataset& ds,
                    const channel::ChannelSpec& ch, int draws, std::uint64_t eval_seed) {
  check_channel(m, ch);
  if (ds.samples.empty()) throw DataError("evaluate: empty dataset");
  if (draws < 1) throw ConfigError("evaluate: draws >= 1");

  EvalResult res;
  res.per_draw.reserve(draws);
  for (int d = 0; d < draws; ++d) {
    int correct = 0;
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
      const MultiViewSample& s = ds.samples[i];
      if (!s.label) throw DataError("evaluate: sample without ground truth");
      const PredictionDist p = predict_sample(m, s, ch, eval_seed, d, static_cast<int>(i));
      if (p.label == *s.label) ++correct;
    }
    res.per_draw.push_back(static_cast<double>(correct) / ds.samples.size());
  }
  double sum = 0.0;
  for (double a : res.per_draw) sum += a;
  res.mean = sum / draws;
  if (draws > 1) {
    double ss = 0.0;
    for (double a : res.per_draw) ss += (a - res.mean) * (a - res.mean);
    res.stddev = std::sqrt(ss / (draws - 1));
  }
  return res;
}

EvalResult test_direct(const Model& theta_source, const data::DomainDataset& target,
                       const channel::ChannelSpec& ch, int draws, std::uint64_t eval_seed) {
  return evaluate(theta_source, target, ch, draws, eval_seed);
}

// --- training phases ---

namespace {

void check_datasets(const Model& m, const data::DomainDataset& source,
                    const data::DomainDataset& target) {
  source.validate();
  target.validate();
  if (source.class_count != m.cfg.classes)
    throw ConfigError("trainer: model classes differ from dataset classes");
  if (target.class_count != 0 && target.class_count != source.class_count)
    throw ConfigError("trainer: source/target class counts differ");
  for (const auto* ds : {&source, &target})
    if (!ds->samples.empty() &&
        static_cast<int>(ds->samples.front().views.size()) != m.cfg.devices)
      throw ConfigError("trainer: dataset view count differs from model devices");
}

double finite_or_throw(double v, const char* phase, int epoch, int batch) {
  if (!std::isfinite(v))
    throw NumericError(std::string(phase) + ": non-finite loss at epoch " +
                       std::to_string(epoch) + ", batch " + std::to_string(batch));
  return v;
}

}  // namespace

TrainResult train_step1(const TrainPlan& plan, const data::DomainDataset& source,
                        const data::DomainDataset& target, Model model,
                        const channel::ChannelSpec& ch) {
  plan.validate();
  check_channel(model, ch);
  check_datasets(model, source, target);

  SgdOptimizer opt(model, plan.momentum, plan.weight_decay);
  data::PairedLoader loader(source, target, plan.batch,
                            derive_seed(plan.seed, "loader.s1"));
  ModelGrads grads = ModelGrads::zeros_like(model);

  TrainResult out{std::move(model), {}};
  double last_src_acc = 0.0, last_tgt_acc = 0.0;
  for (int e = 0; e < plan.epochs; ++e) {
    const GroupLearningRates lr{lr_anneal(plan.lr_sre, e, plan.epochs),
                                lr_anneal(plan.lr_cce, e, plan.epochs),
                                lr_anneal(plan.lr_dec, e, plan.epochs)};
    double sum_ce = 0.0, sum_uda = 0.0;
    const auto batches = loader.epoch(e);
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const Step1BatchInput in = gather(batches[b]);
      RngStream ns = RngStream::derive(plan.seed, "s1.noise.source", e, b);
      RngStream nt = RngStream::derive(plan.seed, "s1.noise.target", e, b);
      const NoiseBank bank_s = draw_noise_bank(static_cast<int>(in.source.size()),
                                               out.model.cfg.devices, out.model.cfg.a_out(), ns);
      const NoiseBank bank_t = draw_noise_bank(static_cast<int>(in.target.size()),
                                               out.model.cfg.devices, out.model.cfg.a_out(), nt);
      grads.set_zero();
      const loss::Step1Loss l =
          step1_loss_and_grads(out.model, in, ch, bank_s, bank_t, plan, e, grads);
      finite_or_throw(l.total, "step1", e, static_cast<int>(b));
      opt.step(out.model, grads, lr);
      sum_ce += l.ce;
      sum_uda += l.uda;
    }

    EpochMetrics em;
    em.epoch = e;
    em.loss_ce = sum_ce / batches.size();
    em.loss_uda = sum_uda / batches.size();
    em.delta = loss::warmup_delta(e, plan.epochs);
    em.lr_sre = lr.sre;
    em.lr_cce = lr.cce;
    em.lr_dec = lr.dec;
    if (e % plan.eval_every == 0 || e == plan.epochs - 1) {
      last_src_acc = evaluate(out.model, source, ch, plan.eval_draws,
                              derive_seed(plan.seed, "eval.s1.source", e))
                         .mean;
      last_tgt_acc = evaluate(out.model, target, ch, plan.eval_draws,
                              derive_seed(plan.seed, "eval.s1.target", e))
                         .mean;
    }
    em.source_acc = last_src_acc;
    em.target_acc = last_tgt_acc;
    out.curve.push_back(em);
  }
  return out;
}

TrainResult train_step2(const TrainPlan& plan, const data::DomainDataset& source,
                        const data::DomainDataset& target, const Model& theta,
                        const channel::ChannelSpec& teacher_ch,
                        const channel::ChannelSpec& student_ch) {
  plan.validate();
  check_channel(theta, teacher_ch);
  check_channel(theta, student_ch);
  check_datasets(theta, source, target);

  TeacherStudentPair pair = TeacherStudentPair::duplicate(theta);
  const Model& teacher = pair.teacher;  // frozen
  TrainResult out{std::move(pair.student), {}};
  if (plan.finetune_epochs == 0) return out;

  SgdOptimizer opt(out.model, plan.momentum, plan.weight_decay);
  data::PairedLoader loader(source, target, plan.batch,
                            derive_seed(plan.seed, "loader.s2"));
  ModelGrads grads = ModelGrads::zeros_like(out.model);

  double last_src_acc = 0.0, last_tgt_acc = 0.0;
  const int total = plan.finetune_epochs;
  for (int e = 0; e < total; ++e) {
    const GroupLearningRates lr{lr_anneal(plan.lr_sre, e, total),
                                lr_anneal(plan.lr_cce, e, total),
                                lr_anneal(plan.lr_dec, e, total)};
    double sum_ce = 0.0, sum_uda = 0.0, sum_kd = 0.0;
    const auto batches = loader.epoch(e);
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const Step1BatchInput in = gather(batches[b]);
      RngStream ns = RngStream::derive(plan.seed, "s2.noise.source", e, b);
      RngStream nt = RngStream::derive(plan.seed, "s2.noise.target", e, b);
      RngStream ntc = RngStream::derive(plan.seed, "s2.noise.teacher", e, b);
      const int devices = out.model.cfg.devices;
      const int dim = out.model.cfg.a_out();
      const NoiseBank bank_s = draw_noise_bank(static_cast<int>(in.source.size()), devices, dim, ns);
      const NoiseBank bank_t = draw_noise_bank(static_cast<int>(in.target.size()), devices, dim, nt);
      const NoiseBank bank_tc =
          draw_noise_bank(static_cast<int>(in.target.size()), devices, dim, ntc);
      grads.set_zero();
      const loss::Step2Loss l = step2_loss_and_grads(out.model, teacher, in, student_ch,
                                                     teacher_ch, bank_s, bank_t, bank_tc, plan,
                                                     grads);
      finite_or_throw(l.total, "step2", e, static_cast<int>(b));
      opt.step(out.model, grads, lr);
      sum_ce += l.ce;
      sum_uda += l.uda;
      sum_kd += l.kd;
    }

    EpochMetrics em;
    em.epoch = e;
    em.loss_ce = sum_ce / batches.size();
    em.loss_uda = sum_uda / batches.size();
    em.loss_kd = sum_kd / batches.size();
    em.lr_sre = lr.sre;
    em.lr_cce = lr.cce;
    em.lr_dec = lr.dec;
    if (e % plan.eval_every == 0 || e == total - 1) {
      last_src_acc = evaluate(out.model, source, student_ch, plan.eval_draws,
                              derive_seed(plan.seed, "eval.s2.source", e))
                         .mean;
      last_tgt_acc = evaluate(out.model, target, student_ch, plan.eval_draws,
                              derive_seed(plan.seed, "eval.s2.target", e))
                         .mean;
    }
    em.source_acc = last_src_acc;
    em.target_acc = last_tgt_acc;
    out.curve.push_back(em);
  }
  return out;
}

void write_metrics_csv(const std::filesystem::path& path, std::span<const EpochMetrics> curve) {
  std::ofstream os(path);
  if (!os) throw DataError("metrics: cannot open " + path.string());
  os << "epoch,loss_ce,loss_uda,loss_kd,delta,lr_sre,lr_cce,lr_dec,source_acc,target_acc\n";
  char buf[512];
  for (const EpochMetrics& m : curve) {
    std::snprintf(buf, sizeof(buf),
                  "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", m.epoch,
                  m.loss_ce, m.loss_uda, m.loss_kd, m.delta, m.lr_sre, m.lr_cce, m.lr_dec,
                  m.source_acc, m.target_acc);
    os << buf;
  }
}

}  // namespace dasein::train
