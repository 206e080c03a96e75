#include "mmfusion/model.hpp"

#include <stdexcept>

#include "mmfusion/errors.hpp"

namespace mmf {

namespace {
constexpr int kAudio = 0, kText = 1, kVisual = 2;
const char* kModalityName[3] = {"audio", "text", "visual"};
}  // namespace

FeedbackType feedback_type_from_string(const std::string& s) {
  if (s == "none") return FeedbackType::kNone;
  if (s == "feedforward") return FeedbackType::kFeedforward;
  if (s == "lstm") return FeedbackType::kLstm;
  throw Error("config", "unknown feedback type '" + s +
                            "' (expected none|feedforward|lstm)");
}

std::string to_string(FeedbackType t) {
  switch (t) {
    case FeedbackType::kNone: return "none";
    case FeedbackType::kFeedforward: return "feedforward";
    default: return "lstm";
  }
}

ModalityEncoder::ModalityEncoder(int in_dim, int hidden, std::mt19937_64& rng)
    : bilstm_(in_dim, hidden, rng), attention_(hidden, rng) {}

Tensor ModalityEncoder::forward(const Tensor& x, bool training,
                                double dropout_rate, std::mt19937_64& rng,
                                bool frozen) const {
  Tensor h = bilstm_.forward(dropout(x, dropout_rate, training, rng), frozen);
  Tensor r = attention_.self_forward(h, frozen);
  return dropout(r, dropout_rate, training, rng);
}

void ModalityEncoder::collect(const std::string& prefix, ParamList& out) {
  bilstm_.collect(prefix + ".bilstm", out);
  attention_.collect(prefix + ".attn", out);
}

FusionNetwork::FusionNetwork(int hidden, std::mt19937_64& rng)
    : hidden_(hidden) {
  for (int q = 0; q < 3; ++q)
    for (int kv = 0; kv < 3; ++kv)
      if (q != kv) directed_[q][kv] = ScaledDotAttention(hidden, rng);
  avt_ = ScaledDotAttention(hidden, rng);
  head_lstm_ = LSTM(7 * hidden, hidden, rng);
  head_out_ = Linear(hidden, 1, rng);
}

Tensor FusionNetwork::cross(int q_modality, int kv_modality, const Tensor& q,
                            const Tensor& kv) const {
  return directed_[q_modality][kv_modality].cross_forward(q, kv);
}

Tensor FusionNetwork::symmetric(int k, int l, const Tensor& r_k,
                                const Tensor& r_l) const {
  return add(cross(k, l, r_k, r_l), cross(l, k, r_l, r_k));
}

Tensor FusionNetwork::fuse(const Tensor& r_a, const Tensor& r_t,
                           const Tensor& r_v) const {
  Tensor m_av = symmetric(kAudio, kVisual, r_a, r_v);
  Tensor m_tv = symmetric(kText, kVisual, r_t, r_v);
  Tensor m_ta = symmetric(kText, kAudio, r_t, r_a);
  Tensor a_avt = avt_.cross_forward(m_av, r_t);
  return concat({r_a, r_t, r_v, a_avt, m_av, m_tv, m_ta}, 2);
}

Tensor FusionNetwork::regress(const Tensor& fused, bool training,
                              double dropout_rate, std::mt19937_64& rng) const {
  Tensor o = dropout(fused, dropout_rate, training, rng);
  Tensor last = head_lstm_.last_hidden(o);
  return head_out_.forward(last);
}

void FusionNetwork::collect(ParamList& out) {
  for (int q = 0; q < 3; ++q)
    for (int kv = 0; kv < 3; ++kv)
      if (q != kv)
        directed_[q][kv].collect(std::string("fusion.cross.") +
                                     kModalityName[q] + "_" +
                                     kModalityName[kv],
                                 out);
  avt_.collect("fusion.cross.avt", out);
  head_lstm_.collect("fusion.head.lstm", out);
  head_out_.collect("fusion.head.out", out);
}

void FusionNetwork::zero_value_weights() {
  for (int q = 0; q < 3; ++q)
    for (int kv = 0; kv < 3; ++kv)
      if (q != kv) directed_[q][kv].zero_value_weights();
  avt_.zero_value_weights();
}

FeedbackNetwork::FeedbackNetwork(const ModelConfig& cfg, std::mt19937_64& rng)
    : type_(cfg.feedback) {
  if (type_ == FeedbackType::kNone) return;
  for (int j = 0; j < 3; ++j) {
    if (type_ == FeedbackType::kLstm)
      lstm_[j] = BiLSTM(cfg.hidden, cfg.hidden, rng);
    else
      feedforward_[j] = Linear(cfg.hidden, cfg.hidden, rng);
    for (int k = 0; k < 3; ++k) {
      if (j == k) continue;
      project_[j][k] = Linear(cfg.hidden, cfg.dims.of(k), rng);
      project_[j][k].zero_weights();
    }
  }
}

FeedbackMasks FeedbackNetwork::compute_masks(const Tensor& r_a,
                                             const Tensor& r_t,
                                             const Tensor& r_v) const {
  if (type_ == FeedbackType::kNone)
    throw Error("state", "feedback network disabled (feedback=none)");
  const Tensor* r[3] = {&r_a, &r_t, &r_v};
  FeedbackMasks masks;
  for (int j = 0; j < 3; ++j) {
    Tensor h = type_ == FeedbackType::kLstm ? lstm_[j].forward(*r[j])
                                            : feedforward_[j].forward(*r[j]);
    for (int k = 0; k < 3; ++k) {
      if (j == k) continue;
      masks.f[j][k] = sigmoid(project_[j][k].forward(h));
    }
  }
  return masks;
}

void FeedbackNetwork::collect(ParamList& out) {
  if (type_ == FeedbackType::kNone) return;
  for (int j = 0; j < 3; ++j) {
    std::string prefix = std::string("feedback.") + kModalityName[j];
    if (type_ == FeedbackType::kLstm)
      lstm_[j].collect(prefix + ".lstm", out);
    else
      feedforward_[j].collect(prefix + ".ff", out);
    for (int k = 0; k < 3; ++k)
      if (j != k)
        project_[j][k].collect(prefix + ".to_" + kModalityName[k], out);
  }
}

void FeedbackNetwork::zero_weights() {
  if (type_ == FeedbackType::kNone) return;
  ParamList ps;
  collect(ps);
  for (auto& [name, p] : ps)
    std::fill(p.data().begin(), p.data().end(), 0.0);
}

Model::Model(const ModelConfig& cfg) : cfg_(cfg) {
  if (cfg.hidden < 1) throw Error("config", "hidden size must be >= 1");
  if (cfg.dropout < 0.0 || cfg.dropout >= 1.0)
    throw Error("config", "dropout must be in [0,1)");
  std::mt19937_64 rng(cfg.seed);
  for (int k = 0; k < 3; ++k)
    encoders_[k] = ModalityEncoder(cfg.dims.of(k), cfg.hidden, rng);
  fusion_ = FusionNetwork(cfg.hidden, rng);
  feedback_ = FeedbackNetwork(cfg, rng);
  dropout_rng_.seed(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  for (int k = 0; k < 3; ++k)
    encoders_[k].collect(std::string("encoder.") + kModalityName[k], params_);
  fusion_.collect(params_);
  feedback_.collect(params_);
}

std::array<Tensor, 3> Model::encode_all(const Tensor& i_a, const Tensor& i_t,
                                        const Tensor& i_v, bool training,
                                        bool frozen) {
  const Tensor* in[3] = {&i_a, &i_t, &i_v};
  std::array<Tensor, 3> r;
  for (int k = 0; k < 3; ++k) {
    if (in[k]->shape().back() != cfg_.dims.of(k))
      throw std::invalid_argument(
          std::string("encode: ") + kModalityName[k] + " feature dim " +
          std::to_string(in[k]->shape().back()) + " does not match configured " +
          std::to_string(cfg_.dims.of(k)));
    r[k] = encoders_[k].forward(*in[k], training, cfg_.dropout, dropout_rng_,
                                frozen);
  }
  return r;
}

Tensor Model::fuse_and_regress(const std::array<Tensor, 3>& r, bool training) {
  Tensor o = fusion_.fuse(r[kAudio], r[kText], r[kVisual]);
  return fusion_.regress(o, training, cfg_.dropout, dropout_rng_);
}

Tensor Model::baseline_forward(const BatchTensors& batch, bool training) {
  auto r = encode_all(batch.audio, batch.text, batch.visual, training, false);
  return fuse_and_regress(r, training);
}

std::array<Tensor, 3> Model::averaged_masks(const FeedbackMasks& masks) const {
  std::array<Tensor, 3> avg;
  for (int k = 0; k < 3; ++k) {
    int j = (k + 1) % 3, l = (k + 2) % 3;
    avg[k] = scale(add(masks.f[j][k], masks.f[l][k]), 0.5);
  }
  return avg;
}

Tensor Model::two_stage_forward(const BatchTensors& batch, bool training,
                                MaskMode mode) {
  const Tensor* in[3] = {&batch.audio, &batch.text, &batch.visual};
  // Stage I: frozen-parameter encoding, mask computation, mask application.
  std::array<Tensor, 3> avg;
  if (mode == MaskMode::kForcedOne) {
    for (int k = 0; k < 3; ++k) avg[k] = Tensor::full(in[k]->shape(), 1.0);
  } else {
    auto r1 = encode_all(batch.audio, batch.text, batch.visual, training, true);
    FeedbackMasks masks =
        feedback_.compute_masks(r1[kAudio], r1[kText], r1[kVisual]);
    avg = averaged_masks(masks);
    if (mode == MaskMode::kDetached)
      for (int k = 0; k < 3; ++k) avg[k] = avg[k].detach();
  }
  std::array<Tensor, 3> masked;
  for (int k = 0; k < 3; ++k) masked[k] = mul(avg[k], *in[k]);
  // Stage II: normal encoding of the masked features, fusion, regression.
  auto r2 = encode_all(masked[kAudio], masked[kText], masked[kVisual],
                       training, false);
  return fuse_and_regress(r2, training);
}

Tensor Model::predict(const BatchTensors& batch, bool training) {
  return cfg_.feedback == FeedbackType::kNone
             ? baseline_forward(batch, training)
             : two_stage_forward(batch, training);
}

FeedbackMasks Model::compute_masks(const BatchTensors& batch) {
  auto r = encode_all(batch.audio, batch.text, batch.visual, false, true);
  return feedback_.compute_masks(r[kAudio], r[kText], r[kVisual]);
}

void Model::zero_feedback_weights() { feedback_.zero_weights(); }

void Model::zero_fusion_value_weights() { fusion_.zero_value_weights(); }

}  // namespace mmf
