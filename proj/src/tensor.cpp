#include "mmfusion/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace mmf {

int numel(const Shape& s) {
  int n = 1;
  for (int d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "(";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) os << ",";
    os << s[i];
  }
  os << ")";
  return os.str();
}

namespace {

[[noreturn]] void shape_error(const std::string& op, const Shape& a,
                              const Shape& b) {
  throw std::invalid_argument(op + ": shape mismatch " + shape_str(a) +
                              " vs " + shape_str(b));
}

void check_axis(const std::string& op, const Shape& s, int axis) {
  if (axis < 0 || axis >= static_cast<int>(s.size()))
    throw std::invalid_argument(op + ": invalid axis " + std::to_string(axis) +
                                " for shape " + shape_str(s));
}

std::shared_ptr<Node> make_node(Shape shape,
                                std::vector<std::shared_ptr<Node>> parents) {
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  int sz = numel(n->shape);
  n->value.resize(sz, 0.0);
  n->grad.resize(sz, 0.0);
  for (const auto& p : parents)
    if (p->requires_grad) n->requires_grad = true;
  n->parents = std::move(parents);
  return n;
}

// Splits a shape at `axis` into (outer, dim, inner) extents for strided walks.
struct AxisView {
  int outer, dim, inner;
};

AxisView axis_view(const Shape& s, int axis) {
  AxisView v{1, s[axis], 1};
  for (int i = 0; i < axis; ++i) v.outer *= s[i];
  for (int i = axis + 1; i < static_cast<int>(s.size()); ++i) v.inner *= s[i];
  return v;
}

}  // namespace

Tensor Tensor::leaf(Shape shape, std::vector<double> data, bool requires_grad) {
  if (numel(shape) != static_cast<int>(data.size()))
    throw std::invalid_argument("leaf: data length " +
                                std::to_string(data.size()) +
                                " does not match shape " + shape_str(shape));
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value = std::move(data);
  n->grad.assign(n->value.size(), 0.0);
  n->requires_grad = requires_grad;
  return Tensor(n);
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double v, bool requires_grad) {
  std::vector<double> d(numel(shape), v);
  return leaf(std::move(shape), std::move(d), requires_grad);
}

Tensor Tensor::scalar(double v) { return leaf({1}, {v}); }

double Tensor::item() const {
  if (size() != 1)
    throw std::invalid_argument("item: tensor has " + std::to_string(size()) +
                                " elements");
  return n_->value[0];
}

Tensor Tensor::detach() const {
  return leaf(n_->shape, n_->value, false);
}

void Tensor::zero_grad() {
  std::fill(n_->grad.begin(), n_->grad.end(), 0.0);
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_error("add", a.shape(), b.shape());
  auto n = make_node(a.shape(), {a.node(), b.node()});
  for (int i = 0; i < a.size(); ++i)
    n->value[i] = a.data()[i] + b.data()[i];
  auto pa = a.node(), pb = b.node();
  auto out = n.get();
  n->backward = [out, pa, pb]() {
    if (pa->requires_grad)
      for (size_t i = 0; i < out->grad.size(); ++i) pa->grad[i] += out->grad[i];
    if (pb->requires_grad)
      for (size_t i = 0; i < out->grad.size(); ++i) pb->grad[i] += out->grad[i];
  };
  return Tensor(n);
}

Tensor sub(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_error("sub", a.shape(), b.shape());
  auto n = make_node(a.shape(), {a.node(), b.node()});
  for (int i = 0; i < a.size(); ++i)
    n->value[i] = a.data()[i] - b.data()[i];
  auto pa = a.node(), pb = b.node();
  auto out = n.get();
  n->backward = [out, pa, pb]() {
    if (pa->requires_grad)
      for (size_t i = 0; i < out->grad.size(); ++i) pa->grad[i] += out->grad[i];
    if (pb->requires_grad)
      for (size_t i = 0; i < out->grad.size(); ++i) pb->grad[i] -= out->grad[i];
  };
  return Tensor(n);
}

Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_error("mul", a.shape(), b.shape());
  auto n = make_node(a.shape(), {a.node(), b.node()});
  for (int i = 0; i < a.size(); ++i)
    n->value[i] = a.data()[i] * b.data()[i];
  auto pa = a.node(), pb = b.node();
  auto out = n.get();
  n->backward = [out, pa, pb]() {
    if (pa->requires_grad)
      for (size_t i = 0; i < out->grad.size(); ++i)
        pa->grad[i] += out->grad[i] * pb->value[i];
    if (pb->requires_grad)
      for (size_t i = 0; i < out->grad.size(); ++i)
        pb->grad[i] += out->grad[i] * pa->value[i];
  };
  return Tensor(n);
}

Tensor scale(const Tensor& a, double c) {
  auto n = make_node(a.shape(), {a.node()});
  for (int i = 0; i < a.size(); ++i) n->value[i] = a.data()[i] * c;
  auto pa = a.node();
  auto out = n.get();
  n->backward = [out, pa, c]() {
    if (pa->requires_grad)
      for (size_t i = 0; i < out->grad.size(); ++i)
        pa->grad[i] += out->grad[i] * c;
  };
  return Tensor(n);
}

Tensor add_bias(const Tensor& x, const Tensor& b) {
  if (b.dims() != 1 || x.shape().back() != b.shape()[0])
    shape_error("add_bias", x.shape(), b.shape());
  int d = b.shape()[0];
  int rows = x.size() / d;
  auto n = make_node(x.shape(), {x.node(), b.node()});
  for (int r = 0; r < rows; ++r)
    for (int j = 0; j < d; ++j)
      n->value[r * d + j] = x.data()[r * d + j] + b.data()[j];
  auto px = x.node(), pb = b.node();
  auto out = n.get();
  n->backward = [out, px, pb, rows, d]() {
    if (px->requires_grad)
      for (size_t i = 0; i < out->grad.size(); ++i) px->grad[i] += out->grad[i];
    if (pb->requires_grad)
      for (int r = 0; r < rows; ++r)
        for (int j = 0; j < d; ++j) pb->grad[j] += out->grad[r * d + j];
  };
  return Tensor(n);
}

// Supports (m,p)·(p,n), batched·batched with equal batch, and batched·2D
// (the 2D side broadcast across the batch). Batch is the product of all
// leading dimensions.
Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.dims() < 2 || b.dims() < 2) shape_error("matmul", a.shape(), b.shape());
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  int m = sa[sa.size() - 2], p = sa[sa.size() - 1];
  int p2 = sb[sb.size() - 2], nn = sb[sb.size() - 1];
  if (p != p2) shape_error("matmul", sa, sb);
  int ba = numel(sa) / (m * p);
  int bb = numel(sb) / (p * nn);
  if (ba != bb && ba != 1 && bb != 1) shape_error("matmul", sa, sb);
  int batch = std::max(ba, bb);
  Shape out_shape = (sa.size() >= sb.size()) ? sa : sb;
  out_shape[out_shape.size() - 2] = m;
  out_shape[out_shape.size() - 1] = nn;
  if (numel(out_shape) != batch * m * nn) shape_error("matmul", sa, sb);

  auto n = make_node(out_shape, {a.node(), b.node()});
  const double* A = a.data().data();
  const double* B = b.data().data();
  double* C = n->value.data();
  for (int g = 0; g < batch; ++g) {
    const double* Ag = A + (ba == 1 ? 0 : g * m * p);
    const double* Bg = B + (bb == 1 ? 0 : g * p * nn);
    double* Cg = C + g * m * nn;
    for (int i = 0; i < m; ++i)
      for (int k = 0; k < p; ++k) {
        double av = Ag[i * p + k];
        if (av == 0.0) continue;
        const double* Brow = Bg + k * nn;
        double* Crow = Cg + i * nn;
        for (int j = 0; j < nn; ++j) Crow[j] += av * Brow[j];
      }
  }
  auto pa = a.node(), pb = b.node();
  auto out = n.get();
  n->backward = [out, pa, pb, batch, ba, bb, m, p, nn]() {
    const double* G = out->grad.data();
    for (int g = 0; g < batch; ++g) {
      const double* Ag = pa->value.data() + (ba == 1 ? 0 : g * m * p);
      const double* Bg = pb->value.data() + (bb == 1 ? 0 : g * p * nn);
      const double* Gg = G + g * m * nn;
      if (pa->requires_grad) {
        double* dA = pa->grad.data() + (ba == 1 ? 0 : g * m * p);
        // dA += G·Bᵀ
        for (int i = 0; i < m; ++i)
          for (int k = 0; k < p; ++k) {
            double s = 0.0;
            for (int j = 0; j < nn; ++j) s += Gg[i * nn + j] * Bg[k * nn + j];
            dA[i * p + k] += s;
          }
      }
      if (pb->requires_grad) {
        double* dB = pb->grad.data() + (bb == 1 ? 0 : g * p * nn);
        // dB += Aᵀ·G
        for (int k = 0; k < p; ++k)
          for (int i = 0; i < m; ++i) {
            double av = Ag[i * p + k];
            if (av == 0.0) continue;
            for (int j = 0; j < nn; ++j) dB[k * nn + j] += av * Gg[i * nn + j];
          }
      }
    }
  };
  return Tensor(n);
}

Tensor transpose_last(const Tensor& x) {
  if (x.dims() < 2)
    throw std::invalid_argument("transpose_last: needs >= 2 dims, got " +
                                shape_str(x.shape()));
  Shape s = x.shape();
  int m = s[s.size() - 2], nn = s[s.size() - 1];
  std::swap(s[s.size() - 2], s[s.size() - 1]);
  int batch = x.size() / (m * nn);
  auto n = make_node(s, {x.node()});
  for (int g = 0; g < batch; ++g)
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < nn; ++j)
        n->value[g * m * nn + j * m + i] = x.data()[g * m * nn + i * nn + j];
  auto px = x.node();
  auto out = n.get();
  n->backward = [out, px, batch, m, nn]() {
    if (!px->requires_grad) return;
    for (int g = 0; g < batch; ++g)
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < nn; ++j)
          px->grad[g * m * nn + i * nn + j] +=
              out->grad[g * m * nn + j * m + i];
  };
  return Tensor(n);
}

Tensor sigmoid(const Tensor& x) {
  auto n = make_node(x.shape(), {x.node()});
  for (int i = 0; i < x.size(); ++i) {
    double v = x.data()[i];
    // Split by sign so exp never overflows.
    n->value[i] = v >= 0 ? 1.0 / (1.0 + std::exp(-v))
                         : std::exp(v) / (1.0 + std::exp(v));
  }
  auto px = x.node();
  auto out = n.get();
  n->backward = [out, px]() {
    if (!px->requires_grad) return;
    for (size_t i = 0; i < out->grad.size(); ++i) {
      double y = out->value[i];
      px->grad[i] += out->grad[i] * y * (1.0 - y);
    }
  };
  return Tensor(n);
}

Tensor tanh_op(const Tensor& x) {
  auto n = make_node(x.shape(), {x.node()});
  for (int i = 0; i < x.size(); ++i) n->value[i] = std::tanh(x.data()[i]);
  auto px = x.node();
  auto out = n.get();
  n->backward = [out, px]() {
    if (!px->requires_grad) return;
    for (size_t i = 0; i < out->grad.size(); ++i) {
      double y = out->value[i];
      px->grad[i] += out->grad[i] * (1.0 - y * y);
    }
  };
  return Tensor(n);
}

Tensor abs_op(const Tensor& x) {
  auto n = make_node(x.shape(), {x.node()});
  for (int i = 0; i < x.size(); ++i) n->value[i] = std::fabs(x.data()[i]);
  auto px = x.node();
  auto out = n.get();
  n->backward = [out, px]() {
    if (!px->requires_grad) return;
    for (size_t i = 0; i < out->grad.size(); ++i) {
      double v = px->value[i];
      double s = v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0);  // subgradient 0 at ties
      px->grad[i] += out->grad[i] * s;
    }
  };
  return Tensor(n);
}

Tensor softmax(const Tensor& x, int axis) {
  check_axis("softmax", x.shape(), axis);
  for (double v : x.data())
    if (!std::isfinite(v))
      throw std::domain_error("softmax: non-finite input value");
  auto v = axis_view(x.shape(), axis);
  auto n = make_node(x.shape(), {x.node()});
  for (int o = 0; o < v.outer; ++o)
    for (int in = 0; in < v.inner; ++in) {
      int base = o * v.dim * v.inner + in;
      double mx = x.data()[base];
      for (int k = 1; k < v.dim; ++k)
        mx = std::max(mx, x.data()[base + k * v.inner]);
      double z = 0.0;
      for (int k = 0; k < v.dim; ++k) {
        double e = std::exp(x.data()[base + k * v.inner] - mx);
        n->value[base + k * v.inner] = e;
        z += e;
      }
      for (int k = 0; k < v.dim; ++k) n->value[base + k * v.inner] /= z;
    }
  auto px = x.node();
  auto out = n.get();
  n->backward = [out, px, v]() {
    if (!px->requires_grad) return;
    for (int o = 0; o < v.outer; ++o)
      for (int in = 0; in < v.inner; ++in) {
        int base = o * v.dim * v.inner + in;
        double dot = 0.0;
        for (int k = 0; k < v.dim; ++k) {
          int idx = base + k * v.inner;
          dot += out->grad[idx] * out->value[idx];
        }
        for (int k = 0; k < v.dim; ++k) {
          int idx = base + k * v.inner;
          px->grad[idx] += out->value[idx] * (out->grad[idx] - dot);
        }
      }
  };
  return Tensor(n);
}

Tensor concat(const std::vector<Tensor>& xs, int axis) {
  if (xs.empty()) throw std::invalid_argument("concat: empty input list");
  check_axis("concat", xs[0].shape(), axis);
  Shape out_shape = xs[0].shape();
  int total = xs[0].shape()[axis];
  for (size_t i = 1; i < xs.size(); ++i) {
    Shape s = xs[i].shape();
    if (static_cast<int>(s.size()) != xs[0].dims())
      shape_error("concat", xs[0].shape(), s);
    for (int d = 0; d < xs[0].dims(); ++d)
      if (d != axis && s[d] != out_shape[d])
        shape_error("concat", xs[0].shape(), s);
    total += s[axis];
  }
  out_shape[axis] = total;
  std::vector<std::shared_ptr<Node>> parents;
  for (const auto& t : xs) parents.push_back(t.node());
  auto n = make_node(out_shape, parents);
  auto vo = axis_view(out_shape, axis);
  int offset = 0;
  std::vector<int> offsets;
  for (const auto& t : xs) {
    offsets.push_back(offset);
    int dk = t.shape()[axis];
    for (int o = 0; o < vo.outer; ++o)
      for (int k = 0; k < dk; ++k)
        for (int in = 0; in < vo.inner; ++in)
          n->value[(o * total + offset + k) * vo.inner + in] =
              t.data()[(o * dk + k) * vo.inner + in];
    offset += dk;
  }
  auto out = n.get();
  n->backward = [out, vo, total, offsets]() {
    for (size_t pi = 0; pi < out->parents.size(); ++pi) {
      auto& p = out->parents[pi];
      if (!p->requires_grad) continue;
      int dk = static_cast<int>(p->value.size()) / (vo.outer * vo.inner);
      int off = offsets[pi];
      for (int o = 0; o < vo.outer; ++o)
        for (int k = 0; k < dk; ++k)
          for (int in = 0; in < vo.inner; ++in)
            p->grad[(o * dk + k) * vo.inner + in] +=
                out->grad[(o * total + off + k) * vo.inner + in];
    }
  };
  return Tensor(n);
}

Tensor stack(const std::vector<Tensor>& xs, int axis) {
  if (xs.empty()) throw std::invalid_argument("stack: empty input list");
  for (const auto& t : xs)
    if (t.shape() != xs[0].shape()) shape_error("stack", xs[0].shape(), t.shape());
  Shape s = xs[0].shape();
  if (axis < 0 || axis > static_cast<int>(s.size()))
    throw std::invalid_argument("stack: invalid axis " + std::to_string(axis));
  Shape out_shape = s;
  out_shape.insert(out_shape.begin() + axis, static_cast<int>(xs.size()));
  int outer = 1;
  for (int i = 0; i < axis; ++i) outer *= s[i];
  int inner = numel(s) / outer;
  int K = static_cast<int>(xs.size());
  std::vector<std::shared_ptr<Node>> parents;
  for (const auto& t : xs) parents.push_back(t.node());
  auto n = make_node(out_shape, parents);
  for (int k = 0; k < K; ++k)
    for (int o = 0; o < outer; ++o)
      for (int in = 0; in < inner; ++in)
        n->value[(o * K + k) * inner + in] = xs[k].data()[o * inner + in];
  auto out = n.get();
  n->backward = [out, K, outer, inner]() {
    for (int k = 0; k < K; ++k) {
      auto& p = out->parents[k];
      if (!p->requires_grad) continue;
      for (int o = 0; o < outer; ++o)
        for (int in = 0; in < inner; ++in)
          p->grad[o * inner + in] += out->grad[(o * K + k) * inner + in];
    }
  };
  return Tensor(n);
}

Tensor select(const Tensor& x, int axis, int index) {
  check_axis("select", x.shape(), axis);
  if (index < 0 || index >= x.shape()[axis])
    throw std::invalid_argument("select: index " + std::to_string(index) +
                                " out of range for shape " +
                                shape_str(x.shape()));
  auto v = axis_view(x.shape(), axis);
  Shape out_shape = x.shape();
  out_shape.erase(out_shape.begin() + axis);
  auto n = make_node(out_shape, {x.node()});
  for (int o = 0; o < v.outer; ++o)
    for (int in = 0; in < v.inner; ++in)
      n->value[o * v.inner + in] =
          x.data()[(o * v.dim + index) * v.inner + in];
  auto px = x.node();
  auto out = n.get();
  n->backward = [out, px, v, index]() {
    if (!px->requires_grad) return;
    for (int o = 0; o < v.outer; ++o)
      for (int in = 0; in < v.inner; ++in)
        px->grad[(o * v.dim + index) * v.inner + in] +=
            out->grad[o * v.inner + in];
  };
  return Tensor(n);
}

Tensor narrow(const Tensor& x, int axis, int start, int len) {
  check_axis("narrow", x.shape(), axis);
  if (start < 0 || len < 1 || start + len > x.shape()[axis])
    throw std::invalid_argument("narrow: range [" + std::to_string(start) +
                                "," + std::to_string(start + len) +
                                ") invalid for shape " + shape_str(x.shape()));
  auto v = axis_view(x.shape(), axis);
  Shape out_shape = x.shape();
  out_shape[axis] = len;
  auto n = make_node(out_shape, {x.node()});
  for (int o = 0; o < v.outer; ++o)
    for (int k = 0; k < len; ++k)
      for (int in = 0; in < v.inner; ++in)
        n->value[(o * len + k) * v.inner + in] =
            x.data()[(o * v.dim + start + k) * v.inner + in];
  auto px = x.node();
  auto out = n.get();
  n->backward = [out, px, v, start, len]() {
    if (!px->requires_grad) return;
    for (int o = 0; o < v.outer; ++o)
      for (int k = 0; k < len; ++k)
        for (int in = 0; in < v.inner; ++in)
          px->grad[(o * v.dim + start + k) * v.inner + in] +=
              out->grad[(o * len + k) * v.inner + in];
  };
  return Tensor(n);
}

Tensor sum_all(const Tensor& x) {
  auto n = make_node({1}, {x.node()});
  double s = 0.0;
  for (double v : x.data()) s += v;
  n->value[0] = s;
  auto px = x.node();
  auto out = n.get();
  n->backward = [out, px]() {
    if (!px->requires_grad) return;
    for (auto& g : px->grad) g += out->grad[0];
  };
  return Tensor(n);
}

Tensor mean_all(const Tensor& x) {
  if (x.size() == 0) throw std::invalid_argument("mean_all: empty tensor");
  return scale(sum_all(x), 1.0 / x.size());
}

Tensor dropout(const Tensor& x, double p, bool training, std::mt19937_64& rng) {
  if (p < 0.0 || p >= 1.0)
    throw std::invalid_argument("dropout: rate must be in [0,1), got " +
                                std::to_string(p));
  if (!training || p == 0.0) return x;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double keep_scale = 1.0 / (1.0 - p);
  auto mask = std::make_shared<std::vector<double>>(x.size());
  for (int i = 0; i < x.size(); ++i)
    (*mask)[i] = (u(rng) < p) ? 0.0 : keep_scale;
  auto n = make_node(x.shape(), {x.node()});
  for (int i = 0; i < x.size(); ++i) n->value[i] = x.data()[i] * (*mask)[i];
  auto px = x.node();
  auto out = n.get();
  n->backward = [out, px, mask]() {
    if (!px->requires_grad) return;
    for (size_t i = 0; i < out->grad.size(); ++i)
      px->grad[i] += out->grad[i] * (*mask)[i];
  };
  return Tensor(n);
}

void backward(const Tensor& loss) {
  if (loss.size() != 1)
    throw std::invalid_argument("backward: loss must be scalar, got shape " +
                                shape_str(loss.shape()));
  // Iterative post-order DFS over parents, pruned at nodes that do not
  // require grad.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  struct Frame {
    Node* node;
    size_t next_parent;
  };
  std::vector<Frame> st;
  Node* root = loss.node().get();
  if (root->requires_grad) {
    st.push_back({root, 0});
    visited.insert(root);
  }
  while (!st.empty()) {
    Frame& f = st.back();
    if (f.next_parent < f.node->parents.size()) {
      Node* p = f.node->parents[f.next_parent++].get();
      if (p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        st.push_back({p, 0});
      }
    } else {
      order.push_back(f.node);
      st.pop_back();
    }
  }
  root->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    if ((*it)->backward) (*it)->backward();
}

}  // namespace mmf
