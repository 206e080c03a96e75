#include "mmfusion/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace mmf {

Tensor xavier_uniform(Shape shape, std::mt19937_64& rng) {
  int fan_in = shape.size() >= 2 ? shape[shape.size() - 2] : shape.back();
  int fan_out = shape.back();
  double limit = std::sqrt(6.0 / (fan_in + fan_out));
  std::uniform_real_distribution<double> u(-limit, limit);
  std::vector<double> data(numel(shape));
  for (auto& v : data) v = u(rng);
  return Tensor::leaf(std::move(shape), std::move(data), true);
}

Linear::Linear(int in_dim, int out_dim, std::mt19937_64& rng)
    : in_dim_(in_dim), out_dim_(out_dim) {
  weight_ = xavier_uniform({in_dim, out_dim}, rng);
  bias_ = Tensor::zeros({out_dim}, true);
}

Tensor Linear::forward(const Tensor& x, bool frozen) const {
  return add_bias(matmul(x, use_param(weight_, frozen)),
                  use_param(bias_, frozen));
}

void Linear::collect(const std::string& prefix, ParamList& out) {
  out.emplace_back(prefix + ".weight", weight_);
  out.emplace_back(prefix + ".bias", bias_);
}

void Linear::zero_weights() {
  std::fill(weight_.data().begin(), weight_.data().end(), 0.0);
  std::fill(bias_.data().begin(), bias_.data().end(), 0.0);
}

LSTM::LSTM(int in_dim, int hidden, std::mt19937_64& rng)
    : in_dim_(in_dim), hidden_(hidden) {
  w_ih_ = xavier_uniform({in_dim, 4 * hidden}, rng);
  w_hh_ = xavier_uniform({hidden, 4 * hidden}, rng);
  bias_ = Tensor::zeros({4 * hidden}, true);
}

std::pair<Tensor, Tensor> LSTM::cell(const Tensor& x_t, const Tensor& h_prev,
                                     const Tensor& c_prev, bool frozen) const {
  Tensor gates = add_bias(add(matmul(x_t, use_param(w_ih_, frozen)),
                              matmul(h_prev, use_param(w_hh_, frozen))),
                          use_param(bias_, frozen));
  int d = hidden_;
  Tensor i = sigmoid(narrow(gates, 1, 0, d));
  Tensor f = sigmoid(narrow(gates, 1, d, d));
  Tensor g = tanh_op(narrow(gates, 1, 2 * d, d));
  Tensor o = sigmoid(narrow(gates, 1, 3 * d, d));
  Tensor c = add(mul(f, c_prev), mul(i, g));
  Tensor h = mul(o, tanh_op(c));
  return {h, c};
}

Tensor LSTM::forward(const Tensor& x, bool frozen) const {
  if (x.dims() != 3)
    throw std::invalid_argument("lstm: expected (B,N,in), got " +
                                shape_str(x.shape()));
  int B = x.shape()[0], N = x.shape()[1];
  if (N < 1) throw std::invalid_argument("lstm: empty sequence");
  Tensor h = Tensor::zeros({B, hidden_});
  Tensor c = Tensor::zeros({B, hidden_});
  std::vector<Tensor> hs;
  hs.reserve(N);
  for (int t = 0; t < N; ++t) {
    auto [h2, c2] = cell(select(x, 1, t), h, c, frozen);
    h = h2;
    c = c2;
    hs.push_back(h);
  }
  return stack(hs, 1);
}

Tensor LSTM::last_hidden(const Tensor& x, bool frozen) const {
  Tensor hs = forward(x, frozen);
  return select(hs, 1, x.shape()[1] - 1);
}

void LSTM::collect(const std::string& prefix, ParamList& out) {
  out.emplace_back(prefix + ".w_ih", w_ih_);
  out.emplace_back(prefix + ".w_hh", w_hh_);
  out.emplace_back(prefix + ".bias", bias_);
}

BiLSTM::BiLSTM(int in_dim, int hidden, std::mt19937_64& rng)
    : fwd_(in_dim, hidden, rng), bwd_(in_dim, hidden, rng) {}

Tensor BiLSTM::forward(const Tensor& x, bool frozen) const {
  if (x.dims() != 3)
    throw std::invalid_argument("bilstm: expected (B,N,in), got " +
                                shape_str(x.shape()));
  int B = x.shape()[0], N = x.shape()[1];
  if (N < 1) throw std::invalid_argument("bilstm: empty sequence");
  Tensor hf = fwd_.forward(x, frozen);
  // Run the backward direction on the reversed sequence, then reverse its
  // outputs back into input order.
  std::vector<Tensor> rev;
  rev.reserve(N);
  for (int t = N - 1; t >= 0; --t) rev.push_back(select(x, 1, t));
  Tensor hb = bwd_.forward(stack(rev, 1), frozen);
  std::vector<Tensor> out;
  out.reserve(N);
  for (int t = 0; t < N; ++t)
    out.push_back(add(select(hf, 1, t), select(hb, 1, N - 1 - t)));
  (void)B;
  return stack(out, 1);
}

void BiLSTM::collect(const std::string& prefix, ParamList& out) {
  fwd_.collect(prefix + ".fwd", out);
  bwd_.collect(prefix + ".bwd", out);
}

ScaledDotAttention::ScaledDotAttention(int dim, std::mt19937_64& rng)
    : dim_(dim) {
  w_q_ = xavier_uniform({dim, dim}, rng);
  w_k_ = xavier_uniform({dim, dim}, rng);
  w_v_ = xavier_uniform({dim, dim}, rng);
}

Tensor ScaledDotAttention::self_forward(const Tensor& h, bool frozen) const {
  return cross_forward(h, h, frozen);
}

Tensor ScaledDotAttention::cross_forward(const Tensor& q_side,
                                         const Tensor& kv_side,
                                         bool frozen) const {
  if (q_side.dims() != 3 || kv_side.dims() != 3 ||
      q_side.shape() != kv_side.shape())
    throw std::invalid_argument("attention: expected matching (B,N,d), got " +
                                shape_str(q_side.shape()) + " vs " +
                                shape_str(kv_side.shape()));
  Tensor q = matmul(q_side, use_param(w_q_, frozen));
  Tensor k = matmul(kv_side, use_param(w_k_, frozen));
  Tensor v = matmul(kv_side, use_param(w_v_, frozen));
  Tensor scores = scale(matmul(q, transpose_last(k)), 1.0 / std::sqrt(dim_));
  Tensor weights = softmax(scores, 2);  // over key positions
  return add(matmul(weights, v), q_side);
}

void ScaledDotAttention::collect(const std::string& prefix, ParamList& out) {
  out.emplace_back(prefix + ".w_q", w_q_);
  out.emplace_back(prefix + ".w_k", w_k_);
  out.emplace_back(prefix + ".w_v", w_v_);
}

void ScaledDotAttention::zero_value_weights() {
  std::fill(w_v_.data().begin(), w_v_.data().end(), 0.0);
}

}  // namespace mmf
