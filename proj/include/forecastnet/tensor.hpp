#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "forecastnet/errors.hpp"

namespace forecastnet {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape &shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>{});
}

inline std::string shape_str(const Shape &shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

// Dense row-major double array tagged with its shape.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(Shape shape)
      : shape_(std::move(shape)), data_(shape_numel(shape_), 0.0) {}

  Tensor(Shape shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_numel(shape_) != data_.size())
      throw DimensionError("tensor shape " + shape_str(shape_) +
                           " does not hold " + std::to_string(data_.size()) +
                           " values");
  }

  static Tensor vector(std::vector<double> values) {
    const std::size_t n = values.size();
    return Tensor({n}, std::move(values));
  }

  static Tensor vector(std::initializer_list<double> values) {
    return vector(std::vector<double>(values));
  }

  static Tensor scalar(double v) { return Tensor({1}, {v}); }

  const Shape &shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  const std::vector<double> &values() const { return data_; }

  double &operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(),
                       [](double v) { return std::isfinite(v); });
  }

  // Throws DomainError when any element is NaN or infinite.
  void validate_finite() const {
    if (!all_finite()) throw DomainError("tensor contains non-finite values");
  }

  friend bool operator==(const Tensor &a, const Tensor &b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  std::vector<double> data_;
};

// Trainable tensor with a gradient accumulator of the same shape.
struct Param {
  Tensor value;
  Tensor grad;
  std::uint64_t id = 0;
  std::string name;

  Param() = default;
  Param(std::uint64_t id_, std::string name_, Tensor value_)
      : value(std::move(value_)),
        grad(value.shape()),
        id(id_),
        name(std::move(name_)) {}

  std::size_t size() const { return value.size(); }
  void zero_grad() { grad.fill(0.0); }
};

enum class Activation { relu, sigmoid, softplus };

inline const char *to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::softplus: return "softplus";
  }
  return "?";
}

inline Activation activation_from_string(const std::string &s) {
  if (s == "relu") return Activation::relu;
  if (s == "sigmoid") return Activation::sigmoid;
  if (s == "softplus") return Activation::softplus;
  throw ArgumentError("unknown activation '" + s + "'");
}

namespace detail {

constexpr double kSoftplusCutoff = 30.0;

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double softplus(double x) {
  if (x > kSoftplusCutoff) return x + std::log1p(std::exp(-x));
  if (x < -kSoftplusCutoff) return std::exp(x);
  return std::log1p(std::exp(x));
}

inline double activate(Activation a, double x) {
  switch (a) {
    case Activation::relu: return x > 0 ? x : 0.0;
    case Activation::sigmoid: return sigmoid(x);
    case Activation::softplus: return softplus(x);
  }
  return x;
}

// Derivative in terms of the pre-activation x and the output y.
inline double activate_grad(Activation a, double x, double y) {
  switch (a) {
    case Activation::relu: return x > 0 ? 1.0 : 0.0;
    case Activation::sigmoid: return y * (1.0 - y);
    case Activation::softplus: return sigmoid(x);
  }
  return 1.0;
}

// Four independent partial sums; lets the compiler vectorize without
// reassociating floating-point math itself.
inline double dot(const double *a, const double *b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

// y[i] += alpha * x[i]
inline void axpy(double alpha, const double *x, double *y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace detail

inline double softplus(double x) { return detail::softplus(x); }
inline double sigmoid(double x) { return detail::sigmoid(x); }

using NodeId = std::size_t;

enum class OpKind {
  input,
  parameter,
  affine,
  activation,
  conv1d,
  avg_pool1d,
  concat,
  reshape,
  gaussian_nll,
  squared_error,
  mean,
};

// One primitive application in a computation record. Input ids and saved
// constants live in arenas owned by the tape.
struct Record {
  OpKind op;
  NodeId output;
  std::uint32_t in_off = 0, n_in = 0;
  std::uint32_t saved_off = 0, n_saved = 0;
  Activation act = Activation::relu;
  std::uint32_t pool = 0, stride = 0;
};

// Computation record: forward values plus the ordered primitive log that
// backward() replays in reverse. Parameters are referenced, not copied, so the
// owning model must outlive the tape. clear() keeps the storage for reuse.
class Tape {
 public:
  static constexpr std::size_t kMaxRank = 4;

  Tape() = default;
  Tape(const Tape &) = delete;
  Tape &operator=(const Tape &) = delete;
  Tape(Tape &&) = default;
  Tape &operator=(Tape &&) = default;

  void clear() {
    nodes_.clear();
    records_.clear();
    vals_.clear();
    grads_.clear();
    ids_.clear();
    saved_.clear();
    gsize_ = 0;
    has_grads_ = false;
  }

  NodeId input(const Tensor &t) {
    const NodeId id = push_node(t.shape());
    std::copy(t.data().begin(), t.data().end(), vptr(id));
    push_record(OpKind::input, id, {});
    return id;
  }

  NodeId input(std::span<const double> v) {
    const NodeId id = push_node1(v.size());
    std::copy(v.begin(), v.end(), vptr(id));
    push_record(OpKind::input, id, {});
    return id;
  }

  // Trainable leaf: backward accumulates into p.grad.
  NodeId param(Param &p) {
    const NodeId id = param_leaf(p, false);
    nodes_[id].target = &p;
    return id;
  }

  // Constant leaf over a parameter value; gradients stay inside the tape.
  NodeId param(const Param &p) { return param_leaf(p, true); }

  // out[i] = sum_j W[i,j] x[j] + b[i]; x may have any shape with n elements.
  NodeId affine(NodeId w, NodeId x, NodeId b) {
    const Node &wn = nodes_.at(w);
    if (wn.rank != 2)
      throw DimensionError("affine: weight must be a matrix, got " +
                           shape_str(shape(w)));
    const std::size_t m = wn.dims[0], n = wn.dims[1];
    if (numel(x) != n)
      throw DimensionError("affine: weight " + shape_str(shape(w)) +
                           " cannot multiply input " + shape_str(shape(x)));
    if (numel(b) != m)
      throw DimensionError("affine: bias " + shape_str(shape(b)) +
                           " does not match " + std::to_string(m) + " rows");
    const NodeId out = push_node1(m);
    const double *W = value_ptr(w);
    const double *xv = value_ptr(x);
    const double *bv = value_ptr(b);
    double *o = vptr(out);
    for (std::size_t i = 0; i < m; ++i) o[i] = bv[i] + detail::dot(W + i * n, xv, n);
    push_record(OpKind::affine, out, {w, x, b});
    return out;
  }

  NodeId activation(Activation kind, NodeId x) {
    const NodeId out = push_node(shape(x));
    const double *xv = value_ptr(x);
    double *o = vptr(out);
    const std::size_t n = numel(x);
    for (std::size_t i = 0; i < n; ++i) o[i] = detail::activate(kind, xv[i]);
    push_record(OpKind::activation, out, {x}).act = kind;
    return out;
  }

  // Valid cross-correlation. x: [C_in x L], kernels: [C_out x C_in x k].
  NodeId conv1d_valid(NodeId x, NodeId kernels, NodeId bias) {
    const Node &xn = nodes_.at(x), &kn = nodes_.at(kernels);
    if (xn.rank != 2 || kn.rank != 3)
      throw DimensionError("conv1d: expected [C x L] input and [O x C x k] "
                           "kernels, got " +
                           shape_str(shape(x)) + " and " + shape_str(shape(kernels)));
    const std::size_t cin = xn.dims[0], len = xn.dims[1];
    const std::size_t cout = kn.dims[0], k = kn.dims[2];
    if (kn.dims[1] != cin)
      throw DimensionError("conv1d: kernel channels " + std::to_string(kn.dims[1]) +
                           " != input channels " + std::to_string(cin));
    if (numel(bias) != cout)
      throw DimensionError("conv1d: bias size mismatch");
    if (k == 0 || len < k)
      throw DimensionError("conv1d: input length " + std::to_string(len) +
                           " shorter than kernel " + std::to_string(k));
    const std::size_t lout = len - k + 1;
    const NodeId out = push_node({cout, lout});
    const double *xv = value_ptr(x);
    const double *kv = value_ptr(kernels);
    const double *bv = value_ptr(bias);
    double *o = vptr(out);
    for (std::size_t oc = 0; oc < cout; ++oc) {
      double *orow = o + oc * lout;
      std::fill(orow, orow + lout, bv[oc]);
      for (std::size_t ic = 0; ic < cin; ++ic) {
        const double *xrow = xv + ic * len;
        const double *kr = kv + (oc * cin + ic) * k;
        for (std::size_t d = 0; d < k; ++d) detail::axpy(kr[d], xrow + d, orow, lout);
      }
    }
    push_record(OpKind::conv1d, out, {x, kernels, bias});
    return out;
  }

  // x: [C x L] -> [C x floor((L - pool) / stride) + 1]
  NodeId avg_pool1d(NodeId x, std::size_t pool, std::size_t stride) {
    const Node &xn = nodes_.at(x);
    if (xn.rank != 2)
      throw DimensionError("avg_pool1d: expected [C x L], got " +
                           shape_str(shape(x)));
    if (pool == 0 || stride == 0)
      throw ArgumentError("avg_pool1d: pool and stride must be >= 1");
    const std::size_t c = xn.dims[0], len = xn.dims[1];
    if (len < pool)
      throw DimensionError("avg_pool1d: length " + std::to_string(len) +
                           " shorter than pool " + std::to_string(pool));
    const std::size_t lout = (len - pool) / stride + 1;
    const NodeId out = push_node({c, lout});
    const double *xv = value_ptr(x);
    double *o = vptr(out);
    const double inv = 1.0 / static_cast<double>(pool);
    for (std::size_t ch = 0; ch < c; ++ch) {
      for (std::size_t t = 0; t < lout; ++t) {
        const double *w = xv + ch * len + t * stride;
        double acc = 0.0;
        for (std::size_t p = 0; p < pool; ++p) acc += w[p];
        o[ch * lout + t] = acc * inv;
      }
    }
    Record &r = push_record(OpKind::avg_pool1d, out, {x});
    r.pool = static_cast<std::uint32_t>(pool);
    r.stride = static_cast<std::uint32_t>(stride);
    return out;
  }

  NodeId concat(std::span<const NodeId> parts) {
    if (parts.empty()) throw ArgumentError("concat: empty part list");
    std::size_t total = 0;
    for (NodeId p : parts) {
      if (nodes_.at(p).rank != 1)
        throw DimensionError("concat: parts must be 1-D, got " +
                             shape_str(shape(p)));
      total += numel(p);
    }
    const NodeId out = push_node1(total);
    double *o = vptr(out);
    for (NodeId p : parts) {
      const double *v = value_ptr(p);
      o = std::copy(v, v + numel(p), o);
    }
    push_record(OpKind::concat, out, parts);
    return out;
  }

  NodeId concat(std::initializer_list<NodeId> parts) {
    return concat(std::span<const NodeId>(parts.begin(), parts.size()));
  }

  NodeId reshape(NodeId x, const Shape &to) {
    if (shape_numel(to) != numel(x))
      throw DimensionError("reshape: " + shape_str(shape(x)) + " -> " +
                           shape_str(to));
    const NodeId out = push_node(to);
    const double *v = value_ptr(x);
    std::copy(v, v + numel(x), vptr(out));
    push_record(OpKind::reshape, out, {x});
    return out;
  }

  // -log N(y; mu, sigma^2) for scalar mu, sigma nodes.
  NodeId gaussian_nll(NodeId mu, NodeId sigma, double y) {
    if (numel(mu) != 1 || numel(sigma) != 1)
      throw DimensionError("gaussian_nll: mu and sigma must be scalars");
    const double m = value_ptr(mu)[0];
    const double s = value_ptr(sigma)[0];
    if (!(s > 0.0)) throw DomainError("gaussian_nll: sigma must be > 0");
    const NodeId out = push_node1(1);
    const double r = (y - m) / s;
    vptr(out)[0] = 0.5 * std::log(2.0 * std::numbers::pi) + std::log(s) + 0.5 * r * r;
    Record &rec = push_record(OpKind::gaussian_nll, out, {mu, sigma});
    save(rec, std::span<const double>(&y, 1));
    return out;
  }

  // Mean of squared residuals against a constant target.
  NodeId squared_error(NodeId pred, std::span<const double> target) {
    if (numel(pred) != target.size())
      throw DimensionError("squared_error: prediction has " +
                           std::to_string(numel(pred)) + " values, target " +
                           std::to_string(target.size()));
    const NodeId out = push_node1(1);
    const double *p = value_ptr(pred);
    double acc = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i) {
      const double d = p[i] - target[i];
      acc += d * d;
    }
    vptr(out)[0] = acc / static_cast<double>(target.size());
    Record &rec = push_record(OpKind::squared_error, out, {pred});
    save(rec, target);
    return out;
  }

  // Arithmetic mean of scalar nodes.
  NodeId mean(std::span<const NodeId> parts) {
    if (parts.empty()) throw ArgumentError("mean: empty part list");
    double acc = 0.0;
    for (NodeId p : parts) {
      if (numel(p) != 1) throw DimensionError("mean: parts must be scalars");
      acc += value_ptr(p)[0];
    }
    const NodeId out = push_node1(1);
    vptr(out)[0] = acc / static_cast<double>(parts.size());
    push_record(OpKind::mean, out, parts);
    return out;
  }

  // Reverse sweep from a scalar node. Trainable parameter gradients are
  // accumulated (never reset here); tape-internal gradients are recomputed.
  void backward(NodeId loss, double seed = 1.0) {
    if (loss >= nodes_.size()) throw ArgumentError("backward: unknown node");
    if (numel(loss) != 1)
      throw ArgumentError("backward: loss node must be scalar, got " +
                          shape_str(shape(loss)));
    grads_.assign(gsize_, 0.0);
    has_grads_ = true;
    grad_ptr(loss)[0] += seed;
    for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
      if (it->output > loss) continue;
      backward_record(*it);
    }
  }

  Shape shape(NodeId id) const {
    const Node &n = nodes_.at(id);
    return Shape(n.dims.begin(), n.dims.begin() + n.rank);
  }
  std::size_t numel(NodeId id) const { return nodes_.at(id).n; }

  std::span<const double> value(NodeId id) const {
    return {value_ptr(id), numel(id)};
  }

  double scalar(NodeId id) const {
    if (numel(id) != 1) throw DimensionError("node is not a scalar");
    return value_ptr(id)[0];
  }

  Tensor tensor(NodeId id) const {
    auto v = value(id);
    return Tensor(shape(id), std::vector<double>(v.begin(), v.end()));
  }

  // Gradient of the last backward() w.r.t. a node. For trainable parameter
  // leaves this is the parameter's accumulator.
  std::span<const double> grad(NodeId id) const {
    const Node &n = nodes_.at(id);
    if (n.target) return n.target->grad.data();
    if (!has_grads_) throw ArgumentError("grad: backward() has not run");
    return {grads_.data() + n.goff, n.n};
  }

  const std::vector<Record> &records() const { return records_; }
  std::span<const NodeId> inputs(const Record &r) const {
    return {ids_.data() + r.in_off, r.n_in};
  }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    std::array<std::size_t, kMaxRank> dims{};
    std::size_t rank = 0;
    std::size_t n = 0;
    std::size_t voff = 0;  // into vals_; unused for parameter leaves
    std::size_t goff = 0;  // into grads_; unused for trainable leaves
    const Param *source = nullptr;
    Param *target = nullptr;
  };

  NodeId add_node(const std::size_t *dims, std::size_t rank, bool with_value,
                  bool with_grad) {
    if (rank > kMaxRank)
      throw DimensionError("tape nodes support rank <= " + std::to_string(kMaxRank));
    Node nd;
    std::copy(dims, dims + rank, nd.dims.begin());
    nd.rank = rank;
    nd.n = 1;
    for (std::size_t i = 0; i < rank; ++i) nd.n *= dims[i];
    if (with_value) {
      nd.voff = vals_.size();
      vals_.resize(vals_.size() + nd.n);
    }
    if (with_grad) {
      nd.goff = gsize_;
      gsize_ += nd.n;
    }
    nodes_.push_back(nd);
    return nodes_.size() - 1;
  }

  NodeId push_node(const Shape &s) { return add_node(s.data(), s.size(), true, true); }
  NodeId push_node(std::initializer_list<std::size_t> s) {
    return add_node(s.begin(), s.size(), true, true);
  }
  NodeId push_node1(std::size_t n) { return add_node(&n, 1, true, true); }

  NodeId param_leaf(const Param &p, bool with_grad) {
    const Shape &s = p.value.shape();
    const NodeId id = add_node(s.data(), s.size(), false, with_grad);
    nodes_[id].source = &p;
    push_record(OpKind::parameter, id, {});
    return id;
  }

  Record &push_record(OpKind op, NodeId out, std::span<const NodeId> in) {
    Record r{op, out};
    r.in_off = static_cast<std::uint32_t>(ids_.size());
    r.n_in = static_cast<std::uint32_t>(in.size());
    ids_.insert(ids_.end(), in.begin(), in.end());
    records_.push_back(r);
    return records_.back();
  }
  Record &push_record(OpKind op, NodeId out, std::initializer_list<NodeId> in) {
    return push_record(op, out, std::span<const NodeId>(in.begin(), in.size()));
  }

  void save(Record &r, std::span<const double> v) {
    r.saved_off = static_cast<std::uint32_t>(saved_.size());
    r.n_saved = static_cast<std::uint32_t>(v.size());
    saved_.insert(saved_.end(), v.begin(), v.end());
  }

  double *vptr(NodeId id) { return vals_.data() + nodes_[id].voff; }

  const double *value_ptr(NodeId id) const {
    const Node &n = nodes_[id];
    return n.source ? n.source->value.data().data() : vals_.data() + n.voff;
  }

  double *grad_ptr(NodeId id) {
    Node &n = nodes_[id];
    return n.target ? n.target->grad.data().data() : grads_.data() + n.goff;
  }

  void backward_record(const Record &r) {
    const double *g = grad_ptr(r.output);
    const NodeId *in = ids_.data() + r.in_off;
    switch (r.op) {
      case OpKind::input:
      case OpKind::parameter:
        break;
      case OpKind::affine: {
        const NodeId w = in[0], x = in[1], b = in[2];
        const std::size_t m = nodes_[w].dims[0], n = nodes_[w].dims[1];
        const double *W = value_ptr(w);
        const double *xv = value_ptr(x);
        double *gW = grad_ptr(w);
        double *gx = grad_ptr(x);
        double *gb = grad_ptr(b);
        for (std::size_t i = 0; i < m; ++i) {
          const double gi = g[i];
          gb[i] += gi;
          if (gi == 0.0) continue;
          detail::axpy(gi, xv, gW + i * n, n);
          detail::axpy(gi, W + i * n, gx, n);
        }
        break;
      }
      case OpKind::activation: {
        const NodeId x = in[0];
        const double *xv = value_ptr(x);
        const double *yv = value_ptr(r.output);
        double *gx = grad_ptr(x);
        const std::size_t n = numel(x);
        for (std::size_t i = 0; i < n; ++i)
          gx[i] += g[i] * detail::activate_grad(r.act, xv[i], yv[i]);
        break;
      }
      case OpKind::conv1d: {
        const NodeId x = in[0], kn = in[1], b = in[2];
        const std::size_t cin = nodes_[x].dims[0], len = nodes_[x].dims[1];
        const std::size_t cout = nodes_[kn].dims[0], k = nodes_[kn].dims[2];
        const std::size_t lout = len - k + 1;
        const double *xv = value_ptr(x);
        const double *kv = value_ptr(kn);
        double *gx = grad_ptr(x);
        double *gk = grad_ptr(kn);
        double *gb = grad_ptr(b);
        for (std::size_t oc = 0; oc < cout; ++oc) {
          const double *grow = g + oc * lout;
          double bsum = 0.0;
          for (std::size_t t = 0; t < lout; ++t) bsum += grow[t];
          gb[oc] += bsum;
          for (std::size_t ic = 0; ic < cin; ++ic) {
            const double *xrow = xv + ic * len;
            double *gxrow = gx + ic * len;
            const std::size_t koff = (oc * cin + ic) * k;
            for (std::size_t d = 0; d < k; ++d) {
              gk[koff + d] += detail::dot(grow, xrow + d, lout);
              detail::axpy(kv[koff + d], grow, gxrow + d, lout);
            }
          }
        }
        break;
      }
      case OpKind::avg_pool1d: {
        const NodeId x = in[0];
        const std::size_t c = nodes_[x].dims[0], len = nodes_[x].dims[1];
        const std::size_t lout = nodes_[r.output].dims[1];
        const double inv = 1.0 / static_cast<double>(r.pool);
        double *gx = grad_ptr(x);
        for (std::size_t ch = 0; ch < c; ++ch)
          for (std::size_t t = 0; t < lout; ++t) {
            const double gv = g[ch * lout + t] * inv;
            double *w = gx + ch * len + t * r.stride;
            for (std::size_t p = 0; p < r.pool; ++p) w[p] += gv;
          }
        break;
      }
      case OpKind::concat: {
        std::size_t off = 0;
        for (std::uint32_t k = 0; k < r.n_in; ++k) {
          double *gp = grad_ptr(in[k]);
          const std::size_t n = numel(in[k]);
          for (std::size_t i = 0; i < n; ++i) gp[i] += g[off + i];
          off += n;
        }
        break;
      }
      case OpKind::reshape: {
        double *gx = grad_ptr(in[0]);
        const std::size_t n = numel(in[0]);
        for (std::size_t i = 0; i < n; ++i) gx[i] += g[i];
        break;
      }
      case OpKind::gaussian_nll: {
        const NodeId mu = in[0], sigma = in[1];
        const double m = value_ptr(mu)[0];
        const double s = value_ptr(sigma)[0];
        const double d = saved_[r.saved_off] - m;
        grad_ptr(mu)[0] += g[0] * (-d / (s * s));
        grad_ptr(sigma)[0] += g[0] * (1.0 / s - d * d / (s * s * s));
        break;
      }
      case OpKind::squared_error: {
        const NodeId p = in[0];
        const double *pv = value_ptr(p);
        double *gp = grad_ptr(p);
        const double *tv = saved_.data() + r.saved_off;
        const double scale = 2.0 / static_cast<double>(r.n_saved);
        for (std::size_t i = 0; i < r.n_saved; ++i)
          gp[i] += g[0] * scale * (pv[i] - tv[i]);
        break;
      }
      case OpKind::mean: {
        const double gv = g[0] / static_cast<double>(r.n_in);
        for (std::uint32_t k = 0; k < r.n_in; ++k) grad_ptr(in[k])[0] += gv;
        break;
      }
    }
  }

  std::vector<Node> nodes_;
  std::vector<Record> records_;
  std::vector<double> vals_;
  std::vector<double> grads_;
  std::vector<NodeId> ids_;
  std::vector<double> saved_;
  std::size_t gsize_ = 0;
  bool has_grads_ = false;
};

// Central finite differences of a scalar function, one coordinate at a time.
inline Tensor finite_diff_grad(
    const std::function<double(std::span<const double>)> &f,
    const Tensor &theta, double eps = 1e-6) {
  if (!(eps > 0.0)) throw ArgumentError("finite_diff_grad: eps must be > 0");
  std::vector<double> x(theta.data().begin(), theta.data().end());
  Tensor out(theta.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + eps;
    const double fp = f(x);
    x[i] = orig - eps;
    const double fm = f(x);
    x[i] = orig;
    out[i] = (fp - fm) / (2.0 * eps);
  }
  return out;
}

// |a - b| / max(|a|, |b|, floor), the comparison used by gradient checks.
inline double relative_error(double a, double b, double floor = 0.0) {
  const double diff = std::abs(a - b);
  if (diff == 0.0) return 0.0;
  return diff / std::max({std::abs(a), std::abs(b), floor});
}

inline double max_relative_error(std::span<const double> a,
                                 std::span<const double> b,
                                 double floor = 0.0) {
  if (a.size() != b.size())
    throw DimensionError("max_relative_error: length mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, relative_error(a[i], b[i], floor));
  return worst;
}

}  // namespace forecastnet
