#include "spam/model/fusion.hpp"

#include "spam/core/error.hpp"

namespace spam::model {

const char* to_string(Branch b) {
  switch (b) {
    case Branch::global: return "global";
    case Branch::speed: return "speed";
    case Branch::energy: return "energy";
    case Branch::pitch: return "pitch";
  }
  return "?";
}

const EmbeddingSequence& BranchOutputs::operator[](Branch b) const {
  switch (b) {
    case Branch::global: return global;
    case Branch::speed: return speed;
    case Branch::energy: return energy;
    case Branch::pitch: return pitch;
  }
  throw UsageError("unknown branch");
}

double similarity(const SpeechEmbedding& a, const PromptEmbedding& b) {
  if (!a.normalized || !b.normalized) throw UsageError("similarity requires normalized embeddings");
  if (a.vector.size() != b.vector.size()) throw UsageError("similarity width mismatch");
  return a.vector.dot(b.vector);
}

VariancePredictor VariancePredictor::create(Initializer& init, const std::string& name, Eigen::Index width,
                                            double dropout) {
  VariancePredictor p;
  p.conv1 = Linear::create(init, name + ".conv1", 3 * width, width);
  p.norm1 = LayerNorm::create(init, name + ".norm1", width);
  p.conv2 = Linear::create(init, name + ".conv2", 3 * width, width);
  p.norm2 = LayerNorm::create(init, name + ".norm2", width);
  p.output = Linear::create(init, name + ".output", width, 1);
  p.dropout = dropout;
  return p;
}

namespace {

// Kernel-3 convolution with zero padding: each output frame sees the
// previous, current and next input frames.
nn::Var conv3(nn::Graph& g, const Linear& layer, nn::Var x) {
  const std::array<nn::Var, 3> taps = {g.shift_rows(x, 1), x, g.shift_rows(x, -1)};
  return layer(g, g.concat_cols(taps));
}

}  // namespace

nn::Var VariancePredictor::operator()(nn::Graph& g, nn::Var x, Rng* rng) const {
  auto block = [&](const Linear& conv, const LayerNorm& norm, nn::Var in) {
    nn::Var h = norm(g, g.gelu(conv3(g, conv, in)));
    if (rng && dropout > 0.0) h = g.dropout(h, dropout, *rng);
    return h;
  };
  return output(g, block(conv2, norm2, block(conv1, norm1, x)));
}

StyleFusion StyleFusion::create(Initializer& init, Eigen::Index width, double dropout) {
  StyleFusion f;
  for (Branch b : kBranches) {
    f.branches[static_cast<std::size_t>(b)] =
        FeedForward::create(init, std::string("fusion.branch.") + to_string(b), width, width, width);
  }
  f.speed_head = VariancePredictor::create(init, "fusion.speed_head", width, dropout);
  f.energy_head = FeedForward::create(init, "fusion.energy_head", width, width, 1);
  f.pitch_head = FeedForward::create(init, "fusion.pitch_head", width, width, 1);
  return f;
}

StyleFusion::BranchVars StyleFusion::branch(nn::Graph& g, nn::Var fused) const {
  BranchVars out;
  for (std::size_t i = 0; i < branches.size(); ++i) out.outputs[i] = branches[i](g, fused);
  return out;
}

StyleFusion::AuxVars StyleFusion::aux(nn::Graph& g, const BranchVars& b, Rng* rng) const {
  return {speed_head(g, b.outputs[static_cast<std::size_t>(Branch::speed)], rng),
          energy_head(g, b.outputs[static_cast<std::size_t>(Branch::energy)]),
          pitch_head(g, b.outputs[static_cast<std::size_t>(Branch::pitch)])};
}

nn::Var StyleFusion::pool(nn::Graph& g, const BranchVars& b) const {
  nn::Var sum = b.outputs[0];
  for (std::size_t i = 1; i < b.outputs.size(); ++i) sum = g.add(sum, b.outputs[i]);
  return g.l2_normalize(g.mean_rows(sum));
}

}  // namespace spam::model
