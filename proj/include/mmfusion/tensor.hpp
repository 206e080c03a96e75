#ifndef MMFUSION_TENSOR_HPP_
#define MMFUSION_TENSOR_HPP_

#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace mmf {

using Shape = std::vector<int>;

int numel(const Shape& s);
std::string shape_str(const Shape& s);

// One node of the reverse-mode graph. Nodes are held by shared_ptr so a
// value can be reused in several downstream ops; gradients accumulate
// additively across uses.
struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
  std::function<void()> backward;
  std::vector<std::shared_ptr<Node>> parents;
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> n) : n_(std::move(n)) {}

  static Tensor leaf(Shape shape, std::vector<double> data,
                     bool requires_grad = false);
  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double v, bool requires_grad = false);
  static Tensor scalar(double v);

  bool defined() const { return static_cast<bool>(n_); }
  const Shape& shape() const { return n_->shape; }
  int dims() const { return static_cast<int>(n_->shape.size()); }
  int size() const { return static_cast<int>(n_->value.size()); }
  std::vector<double>& data() { return n_->value; }
  const std::vector<double>& data() const { return n_->value; }
  std::vector<double>& grad() { return n_->grad; }
  const std::vector<double>& grad() const { return n_->grad; }
  bool requires_grad() const { return n_->requires_grad; }
  double item() const;

  // Constant copy of the value, cut off from the graph.
  Tensor detach() const;
  void zero_grad();

  const std::shared_ptr<Node>& node() const { return n_; }

 private:
  std::shared_ptr<Node> n_;
};

// Elementwise / structural primitives. Binary ops require equal shapes
// unless noted; shape mismatches throw std::invalid_argument naming both
// shapes.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // hadamard
Tensor scale(const Tensor& a, double c);
Tensor add_bias(const Tensor& x, const Tensor& b);  // b is 1-D, broadcast

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose_last(const Tensor& x);

Tensor sigmoid(const Tensor& x);
Tensor tanh_op(const Tensor& x);
Tensor abs_op(const Tensor& x);
Tensor softmax(const Tensor& x, int axis);

Tensor concat(const std::vector<Tensor>& xs, int axis);
Tensor stack(const std::vector<Tensor>& xs, int axis);
Tensor select(const Tensor& x, int axis, int index);  // removes axis
Tensor narrow(const Tensor& x, int axis, int start, int len);

Tensor sum_all(const Tensor& x);
Tensor mean_all(const Tensor& x);

Tensor dropout(const Tensor& x, double p, bool training, std::mt19937_64& rng);

// Reverse pass from a scalar loss. Repeated calls accumulate; zeroing is
// the optimizer's job.
void backward(const Tensor& loss);

}  // namespace mmf

#endif  // MMFUSION_TENSOR_HPP_
