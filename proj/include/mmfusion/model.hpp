#ifndef MMFUSION_MODEL_HPP_
#define MMFUSION_MODEL_HPP_

#include <array>
#include <cstdint>
#include <string>

#include "mmfusion/data.hpp"
#include "mmfusion/layers.hpp"
#include "mmfusion/tensor.hpp"

namespace mmf {

enum class FeedbackType { kNone = 0, kFeedforward = 1, kLstm = 2 };

FeedbackType feedback_type_from_string(const std::string& s);
std::string to_string(FeedbackType t);

struct ModelConfig {
  DatasetDims dims;      // per-modality input feature dims
  int hidden = 100;      // shared encoder/fusion hidden size d
  double dropout = 0.2;
  FeedbackType feedback = FeedbackType::kLstm;
  std::uint64_t seed = 0;

  bool operator==(const ModelConfig&) const = default;
};

// BiLSTM over the (dropped-out) inputs followed by dot-product
// self-attention, giving the unimodal representation r_k of shape (B,N,d).
class ModalityEncoder {
 public:
  ModalityEncoder() = default;
  ModalityEncoder(int in_dim, int hidden, std::mt19937_64& rng);
  Tensor forward(const Tensor& x, bool training, double dropout_rate,
                 std::mt19937_64& rng, bool frozen = false) const;
  void collect(const std::string& prefix, ParamList& out);

 private:
  BiLSTM bilstm_;
  ScaledDotAttention attention_;
};

// Pairwise symmetric attentions, the extra cross attention over (m_AV, r_T),
// concatenation into the 7d fused vector, and the LSTM regression head.
class FusionNetwork {
 public:
  FusionNetwork() = default;
  FusionNetwork(int hidden, std::mt19937_64& rng);

  Tensor cross(int q_modality, int kv_modality, const Tensor& q,
               const Tensor& kv) const;  // a_kl
  Tensor symmetric(int k, int l, const Tensor& r_k, const Tensor& r_l) const;
  // o = r_A ∥ r_T ∥ r_V ∥ a_AVT ∥ m_AV ∥ m_TV ∥ m_TA
  Tensor fuse(const Tensor& r_a, const Tensor& r_t, const Tensor& r_v) const;
  Tensor regress(const Tensor& fused, bool training, double dropout_rate,
                 std::mt19937_64& rng) const;
  void collect(ParamList& out);
  void zero_value_weights();  // test hook: residual-only attention

 private:
  int hidden_ = 0;
  // directed[q][kv] holds the parameters of a_{q,kv}, q != kv.
  std::array<std::array<ScaledDotAttention, 3>, 3> directed_;
  ScaledDotAttention avt_;  // a_AVT: query m_AV, keys/values r_T
  LSTM head_lstm_;          // 7d -> d, unidirectional
  Linear head_out_;         // d -> 1
};

// Per-modality masks in (0,1): f[source][target], source != target, each of
// shape (B,N,d_target).
struct FeedbackMasks {
  std::array<std::array<Tensor, 3>, 3> f;
};

// Feedback pathways: per source modality a sequence model over r_j (BiLSTM,
// or a per-timestep linear layer for the no-LSTM variant), then one
// projection + sigmoid per target modality. Projections start at zero so an
// untrained model masks everything with exactly 0.5.
class FeedbackNetwork {
 public:
  FeedbackNetwork() = default;
  FeedbackNetwork(const ModelConfig& cfg, std::mt19937_64& rng);

  FeedbackMasks compute_masks(const Tensor& r_a, const Tensor& r_t,
                              const Tensor& r_v) const;
  void collect(ParamList& out);
  void zero_weights();  // test hook: every mask becomes exactly 0.5

 private:
  FeedbackType type_ = FeedbackType::kNone;
  std::array<BiLSTM, 3> lstm_;
  std::array<Linear, 3> feedforward_;
  std::array<std::array<Linear, 3>, 3> project_;  // [source][target]
};

// The full system. `two_stage_forward` is the top-down path: Stage I encodes
// the raw inputs with encoder parameters frozen and derives the masks,
// Stage II encodes the masked inputs normally and regresses.
class Model {
 public:
  enum class MaskMode {
    kLearned,   // masks from the feedback network
    kForcedOne, // all-ones masks (identity; diagnostic)
    kDetached,  // learned values, treated as constants
  };

  explicit Model(const ModelConfig& cfg);

  const ModelConfig& config() const { return cfg_; }
  ParamList& parameters() { return params_; }

  Tensor baseline_forward(const BatchTensors& batch, bool training);
  Tensor two_stage_forward(const BatchTensors& batch, bool training,
                           MaskMode mode = MaskMode::kLearned);
  // Dispatches on the configured feedback type.
  Tensor predict(const BatchTensors& batch, bool training);

  FeedbackMasks compute_masks(const BatchTensors& batch);
  // Averaged per-target masks ½(f_j + f_l), shape (B,N,d_k) each.
  std::array<Tensor, 3> averaged_masks(const FeedbackMasks& masks) const;

  void zero_feedback_weights();
  void zero_fusion_value_weights();
  void reseed_dropout(std::uint64_t seed) { dropout_rng_.seed(seed); }

 private:
  std::array<Tensor, 3> encode_all(const Tensor& i_a, const Tensor& i_t,
                                   const Tensor& i_v, bool training,
                                   bool frozen);
  Tensor fuse_and_regress(const std::array<Tensor, 3>& r, bool training);

  ModelConfig cfg_;
  std::array<ModalityEncoder, 3> encoders_;
  FusionNetwork fusion_;
  FeedbackNetwork feedback_;
  std::mt19937_64 dropout_rng_;
  ParamList params_;
};

}  // namespace mmf

#endif  // MMFUSION_MODEL_HPP_
