#ifndef MMFUSION_LAYERS_HPP_
#define MMFUSION_LAYERS_HPP_

#include <random>
#include <string>
#include <utility>
#include <vector>

#include "mmfusion/tensor.hpp"

namespace mmf {

// Named leaf tensors, in registration order. Order is the contract for the
// optimizer and the checkpoint format.
using ParamList = std::vector<std::pair<std::string, Tensor>>;

Tensor xavier_uniform(Shape shape, std::mt19937_64& rng);

// When frozen, layers compute with constant copies of their parameters so
// no gradient reaches them through that call.
inline Tensor use_param(const Tensor& p, bool frozen) {
  return frozen ? p.detach() : p;
}

class Linear {
 public:
  Linear() = default;
  Linear(int in_dim, int out_dim, std::mt19937_64& rng);
  Tensor forward(const Tensor& x, bool frozen = false) const;
  void collect(const std::string& prefix, ParamList& out);
  int in_dim() const { return in_dim_; }
  int out_dim() const { return out_dim_; }
  void zero_weights();

 private:
  int in_dim_ = 0, out_dim_ = 0;
  Tensor weight_;  // in×out
  Tensor bias_;    // out
};

// Single-direction LSTM. Gate weights are packed as in×4d / d×4d with gate
// order i,f,g,o.
class LSTM {
 public:
  LSTM() = default;
  LSTM(int in_dim, int hidden, std::mt19937_64& rng);
  // One step: returns (h, c).
  std::pair<Tensor, Tensor> cell(const Tensor& x_t, const Tensor& h_prev,
                                 const Tensor& c_prev,
                                 bool frozen = false) const;
  // Full sequence (B,N,in) -> hidden states (B,N,d), zero initial state.
  Tensor forward(const Tensor& x, bool frozen = false) const;
  // Last hidden state only, (B,d).
  Tensor last_hidden(const Tensor& x, bool frozen = false) const;
  void collect(const std::string& prefix, ParamList& out);
  int hidden() const { return hidden_; }

 private:
  int in_dim_ = 0, hidden_ = 0;
  Tensor w_ih_;  // in×4d
  Tensor w_hh_;  // d×4d
  Tensor bias_;  // 4d
};

// Forward and backward passes over the sequence, outputs summed.
class BiLSTM {
 public:
  BiLSTM() = default;
  BiLSTM(int in_dim, int hidden, std::mt19937_64& rng);
  Tensor forward(const Tensor& x, bool frozen = false) const;
  void collect(const std::string& prefix, ParamList& out);
  int hidden() const { return fwd_.hidden(); }

 private:
  LSTM fwd_, bwd_;
};

// Scaled dot-product attention over the sequence axis with learned Q/K/V
// projections and a residual on the query side:
//   softmax(Q Kᵀ / √d) V + residual.
class ScaledDotAttention {
 public:
  ScaledDotAttention() = default;
  ScaledDotAttention(int dim, std::mt19937_64& rng);
  // Self-attention: queries, keys and values all from h; residual h.
  Tensor self_forward(const Tensor& h, bool frozen = false) const;
  // Cross-modal: queries from q_side, keys/values from kv_side; residual
  // q_side.
  Tensor cross_forward(const Tensor& q_side, const Tensor& kv_side,
                       bool frozen = false) const;
  void collect(const std::string& prefix, ParamList& out);
  void zero_value_weights();

 private:
  int dim_ = 0;
  Tensor w_q_, w_k_, w_v_;  // each d×d, no bias
};

}  // namespace mmf

#endif  // MMFUSION_LAYERS_HPP_
