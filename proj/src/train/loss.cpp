#include "spam/train/loss.hpp"

#include <cmath>

#include "spam/core/error.hpp"

namespace spam::train {

void validate(const LossWeights& w) {
  if (!(w.lambda_c > 0.0)) throw UsageError("lambda_c must be positive");
  if (!(w.lambda_p >= 0.0 && w.lambda_v >= 0.0 && w.lambda_e >= 0.0)) {
    throw UsageError("auxiliary loss weights must be non-negative");
  }
  if (!(w.temperature > 0.0)) throw UsageError("temperature must be positive");
  if (!(w.huber_delta > 0.0)) throw UsageError("huber_delta must be positive");
}

void validate(const Batch& batch) {
  const auto n = batch.size();
  if (n < 2) throw UsageError("a batch needs at least two items");
  if (batch.speech.size() != n || batch.prompt.size() != n || batch.targets.size() != n ||
      batch.predictions.size() != n) {
    throw UsageError("batch fields have different lengths");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(batch.speech[i].norm() - 1.0) > 1e-6 || std::abs(batch.prompt[i].norm() - 1.0) > 1e-6) {
      throw UsageError("batch embeddings must be unit vectors");
    }
  }
}

double supcon_directional(std::span<const nn::RowVector> anchors, std::span<const nn::RowVector> candidates,
                          std::span<const StyleKey> keys, double temperature, DirectionalGradients* grads) {
  const auto n = keys.size();
  if (anchors.size() != n || candidates.size() != n) throw UsageError("supcon input lengths differ");
  if (n == 0) throw UsageError("supcon needs at least one anchor");
  if (!(temperature > 0.0)) throw UsageError("temperature must be positive");

  if (grads) {
    grads->anchors.assign(n, nn::RowVector::Zero(anchors[0].size()));
    grads->candidates.assign(n, nn::RowVector::Zero(candidates[0].size()));
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<double> logits(n), probs(n);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double max_logit = -INFINITY;
    for (std::size_t j = 0; j < n; ++j) {
      logits[j] = anchors[i].dot(candidates[j]) / temperature;
      max_logit = std::max(max_logit, logits[j]);
    }
    double denom = 0.0;
    for (std::size_t j = 0; j < n; ++j) denom += std::exp(logits[j] - max_logit);
    const double log_denom = max_logit + std::log(denom);

    std::size_t positives = 0;
    double positive_sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (keys[j] == keys[i]) {
        ++positives;
        positive_sum += logits[j];
      }
    }
    if (positives == 0) throw UsageError("anchor has no positive candidate");
    loss += log_denom - positive_sum / static_cast<double>(positives);

    if (grads) {
      for (std::size_t j = 0; j < n; ++j) {
        double d = std::exp(logits[j] - log_denom);
        if (keys[j] == keys[i]) d -= 1.0 / static_cast<double>(positives);
        d *= inv_n / temperature;
        grads->anchors[i] += d * candidates[j];
        grads->candidates[j] += d * anchors[i];
      }
    }
  }
  return loss * inv_n;
}

double contrastive_loss(const Batch& batch, const LossWeights& weights) {
  validate(batch);
  return 0.5 * (supcon_directional(batch.speech, batch.prompt, batch.keys, weights.temperature) +
                supcon_directional(batch.prompt, batch.speech, batch.keys, weights.temperature));
}

double huber(double pred, double target, double delta) {
  const double r = std::abs(pred - target);
  return r <= delta ? 0.5 * r * r : delta * (r - 0.5 * delta);
}

double huber_derivative(double pred, double target, double delta) {
  const double r = pred - target;
  if (std::abs(r) <= delta) return r;
  return r > 0 ? delta : -delta;
}

LossBreakdown total_loss(const Batch& batch, const LossWeights& weights, LossGradients* grads) {
  validate(batch);
  validate(weights);
  const auto n = batch.size();
  LossBreakdown out;

  DirectionalGradients ab, ba;
  const double l_ab = supcon_directional(batch.speech, batch.prompt, batch.keys, weights.temperature,
                                         grads ? &ab : nullptr);
  const double l_ba = supcon_directional(batch.prompt, batch.speech, batch.keys, weights.temperature,
                                         grads ? &ba : nullptr);
  out.contrastive = 0.5 * (l_ab + l_ba);

  std::size_t voiced = 0;
  for (const auto& t : batch.targets) voiced += t.has_pitch ? 1 : 0;
  const double inv_n = 1.0 / static_cast<double>(n);
  const double inv_voiced = voiced ? 1.0 / static_cast<double>(voiced) : 0.0;
  const double delta = weights.huber_delta;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = batch.predictions[i];
    const auto& t = batch.targets[i];
    if (t.has_pitch) out.pitch += huber(p.pitch, t.pitch, delta) * inv_voiced;
    out.speed += huber(p.speed, t.speed, delta) * inv_n;
    out.energy += huber(p.energy, t.energy, delta) * inv_n;
  }
  out.total = weights.lambda_c * out.contrastive + weights.lambda_p * out.pitch + weights.lambda_v * out.speed +
              weights.lambda_e * out.energy;

  if (grads) {
    grads->speech.resize(n);
    grads->prompt.resize(n);
    grads->predictions.assign(n, AuxValues{});
    const double half_c = 0.5 * weights.lambda_c;
    for (std::size_t i = 0; i < n; ++i) {
      grads->speech[i] = half_c * (ab.anchors[i] + ba.candidates[i]);
      grads->prompt[i] = half_c * (ab.candidates[i] + ba.anchors[i]);
      const auto& p = batch.predictions[i];
      const auto& t = batch.targets[i];
      auto& g = grads->predictions[i];
      g.pitch = t.has_pitch ? weights.lambda_p * inv_voiced * huber_derivative(p.pitch, t.pitch, delta) : 0.0;
      g.speed = weights.lambda_v * inv_n * huber_derivative(p.speed, t.speed, delta);
      g.energy = weights.lambda_e * inv_n * huber_derivative(p.energy, t.energy, delta);
    }
  }
  return out;
}

}  // namespace spam::train
