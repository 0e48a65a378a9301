#include "spam/train/trainer.hpp"

#include <cmath>
#include <memory>

#include "spam/core/error.hpp"
#include "spam/core/rng.hpp"
#include "spam/core/waveform.hpp"
#include "spam/datagen/prompts.hpp"

namespace spam::train {
namespace {

struct Moments {
  double mean = 0.0;
  double std = 1.0;
};

Moments moments(const std::vector<double>& xs) {
  Moments m;
  if (xs.empty()) return m;
  for (double x : xs) m.mean += x;
  m.mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - m.mean) * (x - m.mean);
  var /= static_cast<double>(xs.size());
  m.std = var > 1e-12 ? std::sqrt(var) : 1.0;
  return m;
}

}  // namespace

AuxNormalizer AuxNormalizer::fit(std::span<const dsp::FrameFeatures> features) {
  std::vector<double> pitch, speed, energy;
  for (const auto& f : features) {
    double p;
    if (f.mean_voiced_pitch(p)) pitch.push_back(p);
    speed.push_back(f.speaking_rate_pps);
    energy.push_back(f.mean_energy());
  }
  const auto mp = moments(pitch), ms = moments(speed), me = moments(energy);
  return {mp.mean, mp.std, ms.mean, ms.std, me.mean, me.std};
}

AuxValues AuxNormalizer::normalize(const dsp::FrameFeatures& f) const {
  AuxValues z;
  double p = 0.0;
  z.has_pitch = f.mean_voiced_pitch(p);
  z.pitch = z.has_pitch ? (p - pitch_mean) / pitch_std : 0.0;
  z.speed = (f.speaking_rate_pps - speed_mean) / speed_std;
  z.energy = (f.mean_energy() - energy_mean) / energy_std;
  return z;
}

AuxValues AuxNormalizer::denormalize(const AuxValues& z) const {
  return {z.pitch * pitch_std + pitch_mean, z.speed * speed_std + speed_mean, z.energy * energy_std + energy_mean,
          z.has_pitch};
}

std::vector<TrainingItem> prepare_items(const Manifest& manifest, std::span<const UtteranceRecord> records) {
  std::vector<TrainingItem> items;
  items.reserve(records.size());
  for (const auto& r : records) {
    const auto wave = read_wav(manifest.audio_file(r));
    items.push_back({r, model::prepare_speech(wave, r.transcript), dsp::extract_features(r.transcript, wave)});
  }
  return items;
}

BatchSampler::BatchSampler(std::vector<UtteranceRecord> records) : records_(std::move(records)) {
  if (records_.empty()) throw UsageError("cannot sample batches from an empty split");
  by_key_.resize(kNumStyleKeys);
  for (std::size_t i = 0; i < records_.size(); ++i) {
    by_key_[static_cast<std::size_t>(style_key_index(records_[i].style_key))].push_back(i);
  }
}

std::vector<SampledItem> BatchSampler::sample(std::size_t batch_size, std::uint64_t seed) const {
  if (batch_size < 4 || batch_size % 2 != 0) throw UsageError("batch size must be even and at least 4");
  Rng rng(seed);
  std::vector<SampledItem> out;
  out.reserve(batch_size);
  for (std::size_t k = 0; k < batch_size / 2; ++k) {
    // A uniformly drawn record's key is a key drawn by corpus frequency.
    const auto& key = records_[rng.index(records_.size())].style_key;
    const auto& pool = by_key_[static_cast<std::size_t>(style_key_index(key))];
    if (pool.size() == 1) {
      out.push_back({pool[0], std::nullopt});
      out.push_back({pool[0], datagen::render_prompt(key, rng.next_u64())});
      continue;
    }
    const std::size_t first = rng.index(pool.size());
    std::size_t second = rng.index(pool.size() - 1);
    if (second >= first) ++second;
    out.push_back({pool[first], std::nullopt});
    out.push_back({pool[second], std::nullopt});
  }
  return out;
}

std::vector<UtteranceRecord> sample_batch(const Manifest& manifest, std::size_t batch_size, std::uint64_t seed) {
  const BatchSampler sampler(manifest.select(Split::train));
  std::vector<UtteranceRecord> out;
  for (const auto& s : sampler.sample(batch_size, seed)) {
    out.push_back(sampler.records()[s.index]);
    if (s.prompt) out.back().prompt = *s.prompt;
  }
  return out;
}

void validate(const TrainConfig& config) {
  model::validate(config.model);
  validate(config.loss);
  if (config.batch_size < 4 || config.batch_size % 2 != 0) throw UsageError("batch_size must be even and >= 4");
  if (!(config.learning_rate > 0.0)) throw UsageError("learning rate must be positive");
  if (!(config.weight_decay >= 0.0)) throw UsageError("weight decay must be non-negative");
  if (!(config.clip_norm > 0.0)) throw UsageError("clip_norm must be positive");
  if (config.eval_every == 0 || config.patience == 0 || config.dev_batches == 0) {
    throw UsageError("eval_every, patience and dev_batches must be positive");
  }
}

double evaluate_contrastive(const model::SpamModel& model, std::span<const TrainingItem> items,
                            const LossWeights& weights, std::size_t batch_size, std::size_t num_batches,
                            std::uint64_t seed) {
  std::vector<UtteranceRecord> records;
  for (const auto& it : items) records.push_back(it.record);
  const BatchSampler sampler(records);
  std::vector<nn::RowVector> speech;
  for (const auto& it : items) speech.push_back(model.encode_speech(it.inputs).vector);

  double total = 0.0;
  for (std::size_t b = 0; b < num_batches; ++b) {
    Batch batch;
    for (const auto& s : sampler.sample(batch_size, derive_seed(seed, "dev/" + std::to_string(b)))) {
      batch.speech.push_back(speech[s.index]);
      batch.prompt.push_back(model.encode_prompt(s.prompt ? *s.prompt : records[s.index].prompt).vector);
      batch.keys.push_back(records[s.index].style_key);
    }
    batch.targets.resize(batch.size());
    batch.predictions.resize(batch.size());
    total += contrastive_loss(batch, weights);
  }
  return total / static_cast<double>(num_batches);
}

namespace {

class AdamW {
 public:
  AdamW(const nn::ParameterStore& store, double weight_decay)
      : m_(store), v_(store), weight_decay_(weight_decay) {}

  void step(nn::ParameterStore& store, const nn::Gradients& grads, double lr) {
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < store.size(); ++i) {
      auto& p = store[i];
      if (p.frozen) continue;
      m_[i] = kBeta1 * m_[i] + (1.0 - kBeta1) * grads[i];
      v_[i] = kBeta2 * v_[i] + (1.0 - kBeta2) * grads[i].cwiseProduct(grads[i]);
      p.value *= 1.0 - lr * weight_decay_;
      p.value.array() -= lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + kEps);
    }
    store.round_to_float();
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;
  nn::Gradients m_;
  nn::Gradients v_;
  double weight_decay_;
  long t_ = 0;
};

nn::Matrix filled(Eigen::Index rows, double value) { return nn::Matrix::Constant(rows, 1, value); }

}  // namespace

LossBreakdown batch_loss(const model::SpamModel& model, std::span<const BatchItem> items,
                         const LossWeights& weights, std::optional<std::uint64_t> dropout_seed,
                         nn::Gradients* grads) {
  std::vector<std::unique_ptr<nn::Graph>> graphs;
  std::vector<model::SpamModel::SpeechVars> speech;
  std::vector<nn::Var> prompt;
  Batch batch;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& item = items[i];
    graphs.push_back(std::make_unique<nn::Graph>(model.parameters(), grads));
    auto& g = *graphs.back();
    std::optional<Rng> dropout;
    if (dropout_seed) dropout.emplace(derive_seed(*dropout_seed, std::to_string(i)));
    speech.push_back(model.speech_graph(g, *item.inputs, dropout ? &*dropout : nullptr));
    prompt.push_back(model.prompt_graph(g, item.tokens));
    const auto& v = speech.back();
    batch.speech.push_back(g.value(v.embedding));
    batch.prompt.push_back(g.value(prompt.back()));
    batch.keys.push_back(item.key);
    batch.targets.push_back(item.target);
    batch.predictions.push_back(
        {g.value(v.aux.pitch).mean(), g.value(v.aux.speed).mean(), g.value(v.aux.energy).mean(), true});
  }

  LossGradients loss_grads;
  const auto loss = total_loss(batch, weights, grads ? &loss_grads : nullptr);
  if (!grads || !std::isfinite(loss.total)) return loss;
  for (std::size_t i = 0; i < items.size(); ++i) {
    auto& g = *graphs[i];
    const auto& v = speech[i];
    const auto& d = loss_grads.predictions[i];
    g.seed(v.embedding, loss_grads.speech[i]);
    g.seed(prompt[i], loss_grads.prompt[i]);
    // The utterance scalar is the mean over frames.
    const auto frames = g.value(v.aux.pitch).rows();
    const double inv_t = 1.0 / static_cast<double>(frames);
    g.seed(v.aux.pitch, filled(frames, d.pitch * inv_t));
    g.seed(v.aux.speed, filled(frames, d.speed * inv_t));
    g.seed(v.aux.energy, filled(frames, d.energy * inv_t));
    g.backward();
  }
  return loss;
}

TrainResult train(const Manifest& manifest, const TrainConfig& config, const StepCallback& on_step) {
  validate(config);
  const auto train_records = manifest.select(Split::train);
  const auto dev_records = manifest.select(Split::dev);
  if (train_records.empty()) throw DataError("manifest has no train records");
  if (dev_records.empty()) throw DataError("manifest has no dev records");

  const auto train_items = prepare_items(manifest, train_records);
  const auto dev_items = prepare_items(manifest, dev_records);
  std::vector<dsp::FrameFeatures> features;
  for (const auto& it : train_items) features.push_back(it.features);
  const auto aux = AuxNormalizer::fit(features);
  std::vector<AuxValues> targets;
  for (const auto& it : train_items) targets.push_back(aux.normalize(it.features));

  std::vector<std::string> prompts;
  for (const auto& r : train_records) prompts.push_back(r.prompt);
  auto model_config = config.model;
  model::SpamModel model(model_config, model::Vocabulary::build(prompts));
  const BatchSampler sampler(train_records);
  const auto dev_seed = derive_seed(config.seed, "dev");
  const auto dev_loss = [&](const model::SpamModel& m) {
    return evaluate_contrastive(m, dev_items, config.loss, config.batch_size, config.dev_batches, dev_seed);
  };

  TrainResult result{model, aux, config};
  result.initial_dev_contrastive = result.best_dev_contrastive = dev_loss(model);

  AdamW optimizer(model.parameters(), config.weight_decay);
  nn::Gradients grads(model.parameters());
  std::size_t evals_without_improvement = 0;

  for (std::size_t step = 1; step <= config.max_steps; ++step) {
    const auto step_seed = derive_seed(config.seed, "step/" + std::to_string(step));
    const auto sampled = sampler.sample(config.batch_size, derive_seed(step_seed, "batch"));
    grads.zero();

    std::vector<BatchItem> batch;
    for (const auto& s : sampled) {
      const auto& item = train_items[s.index];
      batch.push_back({&item.inputs, model.vocabulary().encode(s.prompt ? *s.prompt : item.record.prompt),
                       item.record.style_key, targets[s.index]});
    }
    StepMetrics metrics;
    metrics.step = step;
    metrics.loss = batch_loss(model, batch, config.loss, derive_seed(step_seed, "dropout"), &grads);
    if (!std::isfinite(metrics.loss.total)) {
      throw RuntimeFailure("training diverged at step " + std::to_string(step) + ": non-finite loss");
    }

    metrics.grad_norm = grads.norm();
    if (!std::isfinite(metrics.grad_norm)) {
      throw RuntimeFailure("training diverged at step " + std::to_string(step) + ": non-finite gradient");
    }
    if (metrics.grad_norm > config.clip_norm) grads.scale(config.clip_norm / metrics.grad_norm);
    const double warmup = config.warmup_steps == 0
                              ? 1.0
                              : std::min(1.0, static_cast<double>(step) / static_cast<double>(config.warmup_steps));
    optimizer.step(model.parameters(), grads, config.learning_rate * warmup);
    result.steps = step;

    if (step % config.eval_every == 0) {
      const double dev = dev_loss(model);
      metrics.dev_contrastive = dev;
      if (dev < result.best_dev_contrastive) {
        result.best_dev_contrastive = dev;
        result.best_step = step;
        result.model = model;
        evals_without_improvement = 0;
      } else {
        ++evals_without_improvement;
      }
    }
    if (on_step) on_step(metrics);
    if (evals_without_improvement >= config.patience) {
      result.early_stopped = true;
      break;
    }
  }
  return result;
}

}  // namespace spam::train
