#include "framecl/darray.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace framecl {

namespace {

std::size_t shape_product(const Shape& s) {
  std::size_t n = 1;
  for (std::size_t e : s) n *= e;
  return n;
}

[[noreturn]] void shape_fail(Op op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op_name(op)) + ": incompatible shapes " + shape_to_string(a) +
                   " and " + shape_to_string(b));
}

[[noreturn]] void shape_fail(Op op, const Shape& a) {
  throw ShapeError(std::string(op_name(op)) + ": bad input shape " + shape_to_string(a));
}

}  // namespace

std::string shape_to_string(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
  os << ']';
  return os.str();
}

const char* op_name(Op op) {
  switch (op) {
    case Op::constant: return "constant";
    case Op::parameter: return "parameter";
    case Op::matmul: return "matmul";
    case Op::matmul_nt: return "matmul_nt";
    case Op::add: return "add";
    case Op::elementwise_mul: return "elementwise_mul";
    case Op::scalar_mul: return "scalar_mul";
    case Op::concat_last_axis: return "concat_last_axis";
    case Op::interleave_rows: return "interleave_rows";
    case Op::exp: return "exp";
    case Op::log: return "log";
    case Op::sum_all: return "sum_all";
    case Op::sum_rows: return "sum_rows";
    case Op::divide: return "divide";
    case Op::tanh: return "tanh";
    case Op::sigmoid: return "sigmoid";
    case Op::l2_normalize_rows: return "l2_normalize_rows";
    case Op::masked_dropout: return "masked_dropout";
    case Op::bce_with_logits: return "bce_with_logits";
  }
  return "?";
}

DArray::DArray(Shape s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
  if (shape_product(shape) != data.size())
    throw ShapeError("DArray: shape " + shape_to_string(shape) + " does not match data length " +
                     std::to_string(data.size()));
}

DArray DArray::constant(Shape s, std::vector<double> d) {
  for (double v : d)
    if (!std::isfinite(v)) throw DomainError("DArray constant: non-finite value");
  return DArray(std::move(s), std::move(d));
}

DArray DArray::zeros(const Shape& s) { return DArray(s, std::vector<double>(shape_product(s), 0.0)); }

DArray DArray::full(const Shape& s, double v) {
  return DArray(s, std::vector<double>(shape_product(s), v));
}

DArray DArray::scalar(double v) { return DArray({}, {v}); }

std::size_t DArray::rows() const {
  if (shape.size() != 2) throw ShapeError("rows(): not a matrix, shape " + shape_to_string(shape));
  return shape[0];
}

std::size_t DArray::cols() const {
  if (shape.size() != 2) throw ShapeError("cols(): not a matrix, shape " + shape_to_string(shape));
  return shape[1];
}

double& DArray::at(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
double DArray::at(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }

std::size_t Graph::ensure_node(const DArray& v) {
  if (v.node_id) {
    if (*v.node_id >= nodes_.size())
      throw UsageError("DArray node_id does not belong to this graph");
    return *v.node_id;
  }
  nodes_.push_back(Node{Op::constant, {}, v});
  return nodes_.size() - 1;
}

DArray Graph::record(Op op, std::vector<std::size_t> inputs, DArray value, double scalar,
                     std::vector<double> aux) {
  nodes_.push_back(Node{op, std::move(inputs), value, scalar, std::move(aux), false});
  value.node_id = nodes_.size() - 1;
  return value;
}

DArray Graph::constant(DArray v) {
  std::size_t id = ensure_node(v);
  v.node_id = id;
  return v;
}

DArray Graph::parameter(DArray v) {
  for (double x : v.data)
    if (!std::isfinite(x)) throw DomainError("parameter: non-finite value");
  nodes_.push_back(Node{Op::parameter, {}, v, 0.0, {}, true});
  v.node_id = nodes_.size() - 1;
  return v;
}

DArray Graph::apply_primitive(Op op, const std::vector<DArray>& in, double scalar,
                              const std::vector<double>& mask) {
  switch (op) {
    case Op::matmul: return matmul(in.at(0), in.at(1));
    case Op::matmul_nt: return matmul_nt(in.at(0), in.at(1));
    case Op::add: return add(in.at(0), in.at(1));
    case Op::elementwise_mul: return elementwise_mul(in.at(0), in.at(1));
    case Op::scalar_mul: return scalar_mul(in.at(0), scalar);
    case Op::concat_last_axis: return concat_last_axis(in.at(0), in.at(1));
    case Op::interleave_rows: return interleave_rows(in.at(0), in.at(1));
    case Op::exp: return exp(in.at(0));
    case Op::log: return log(in.at(0));
    case Op::sum_all: return sum_all(in.at(0));
    case Op::sum_rows: return sum_rows(in.at(0));
    case Op::divide: return divide(in.at(0), in.at(1));
    case Op::tanh: return tanh(in.at(0));
    case Op::sigmoid: return sigmoid(in.at(0));
    case Op::l2_normalize_rows: return l2_normalize_rows(in.at(0));
    case Op::masked_dropout: return masked_dropout(in.at(0), mask, scalar);
    default: throw UsageError(std::string("apply_primitive: not a primitive: ") + op_name(op));
  }
}

DArray Graph::matmul(const DArray& a, const DArray& b) {
  if (a.shape.size() != 2 || b.shape.size() != 2 || a.cols() != b.rows())
    shape_fail(Op::matmul, a.shape, b.shape);
  std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  std::size_t ia = ensure_node(a), ib = ensure_node(b);
  DArray out = DArray::zeros({m, n});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      double av = a.data[i * k + p];
      if (av == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) out.data[i * n + j] += av * b.data[p * n + j];
    }
  return record(Op::matmul, {ia, ib}, std::move(out));
}

DArray Graph::matmul_nt(const DArray& a, const DArray& b) {
  if (a.shape.size() != 2 || b.shape.size() != 2 || a.cols() != b.cols())
    shape_fail(Op::matmul_nt, a.shape, b.shape);
  std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  std::size_t ia = ensure_node(a), ib = ensure_node(b);
  DArray out = DArray::zeros({m, n});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += a.data[i * k + p] * b.data[j * k + p];
      out.data[i * n + j] = s;
    }
  return record(Op::matmul_nt, {ia, ib}, std::move(out));
}

DArray Graph::add(const DArray& a, const DArray& b) {
  std::size_t ia = ensure_node(a), ib = ensure_node(b);
  if (a.shape == b.shape) {
    DArray out = a;
    out.node_id.reset();
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += b.data[i];
    return record(Op::add, {ia, ib}, std::move(out));
  }
  // row-broadcast bias: [m x n] + [1 x n]
  if (a.shape.size() == 2 && b.shape.size() == 2 && b.rows() == 1 && a.cols() == b.cols()) {
    std::size_t m = a.rows(), n = a.cols();
    DArray out = a;
    out.node_id.reset();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) out.data[i * n + j] += b.data[j];
    return record(Op::add, {ia, ib}, std::move(out));
  }
  shape_fail(Op::add, a.shape, b.shape);
}

DArray Graph::elementwise_mul(const DArray& a, const DArray& b) {
  if (a.shape != b.shape) shape_fail(Op::elementwise_mul, a.shape, b.shape);
  std::size_t ia = ensure_node(a), ib = ensure_node(b);
  DArray out = a;
  out.node_id.reset();
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] *= b.data[i];
  return record(Op::elementwise_mul, {ia, ib}, std::move(out));
}

DArray Graph::scalar_mul(const DArray& a, double c) {
  if (!std::isfinite(c)) throw DomainError("scalar_mul: non-finite factor");
  std::size_t ia = ensure_node(a);
  DArray out = a;
  out.node_id.reset();
  for (double& v : out.data) v *= c;
  return record(Op::scalar_mul, {ia}, std::move(out), c);
}

DArray Graph::concat_last_axis(const DArray& a, const DArray& b) {
  if (a.shape.size() != 2 || b.shape.size() != 2 || a.rows() != b.rows())
    shape_fail(Op::concat_last_axis, a.shape, b.shape);
  std::size_t m = a.rows(), na = a.cols(), nb = b.cols();
  std::size_t ia = ensure_node(a), ib = ensure_node(b);
  DArray out = DArray::zeros({m, na + nb});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < na; ++j) out.data[i * (na + nb) + j] = a.data[i * na + j];
    for (std::size_t j = 0; j < nb; ++j) out.data[i * (na + nb) + na + j] = b.data[i * nb + j];
  }
  return record(Op::concat_last_axis, {ia, ib}, std::move(out));
}

DArray Graph::interleave_rows(const DArray& a, const DArray& b) {
  if (a.shape != b.shape || a.shape.size() != 2) shape_fail(Op::interleave_rows, a.shape, b.shape);
  std::size_t m = a.rows(), n = a.cols();
  std::size_t ia = ensure_node(a), ib = ensure_node(b);
  DArray out = DArray::zeros({2 * m, n});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      out.data[(2 * i) * n + j] = a.data[i * n + j];
      out.data[(2 * i + 1) * n + j] = b.data[i * n + j];
    }
  }
  return record(Op::interleave_rows, {ia, ib}, std::move(out));
}

DArray Graph::exp(const DArray& a) {
  std::size_t ia = ensure_node(a);
  DArray out = a;
  out.node_id.reset();
  for (double& v : out.data) v = std::exp(v);
  return record(Op::exp, {ia}, std::move(out));
}

DArray Graph::log(const DArray& a) {
  std::size_t ia = ensure_node(a);
  DArray out = a;
  out.node_id.reset();
  for (double& v : out.data) {
    if (v <= 0.0) throw DomainError("log: non-positive input " + std::to_string(v));
    v = std::log(v);
  }
  return record(Op::log, {ia}, std::move(out));
}

DArray Graph::sum_all(const DArray& a) {
  std::size_t ia = ensure_node(a);
  double s = std::accumulate(a.data.begin(), a.data.end(), 0.0);
  return record(Op::sum_all, {ia}, DArray::scalar(s));
}

DArray Graph::sum_rows(const DArray& a) {
  if (a.shape.size() != 2) shape_fail(Op::sum_rows, a.shape);
  std::size_t m = a.rows(), n = a.cols();
  std::size_t ia = ensure_node(a);
  DArray out = DArray::zeros({m, 1});
  for (std::size_t i = 0; i < m; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += a.data[i * n + j];
    out.data[i] = s;
  }
  return record(Op::sum_rows, {ia}, std::move(out));
}

DArray Graph::divide(const DArray& a, const DArray& b) {
  std::size_t ia = ensure_node(a), ib = ensure_node(b);
  for (double v : b.data)
    if (v == 0.0) throw DomainError("divide: zero denominator entry");
  if (a.shape == b.shape) {
    DArray out = a;
    out.node_id.reset();
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] /= b.data[i];
    return record(Op::divide, {ia, ib}, std::move(out));
  }
  // column-broadcast: [m x n] / [m x 1]
  if (a.shape.size() == 2 && b.shape.size() == 2 && b.cols() == 1 && a.rows() == b.rows()) {
    std::size_t m = a.rows(), n = a.cols();
    DArray out = a;
    out.node_id.reset();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) out.data[i * n + j] /= b.data[i];
    return record(Op::divide, {ia, ib}, std::move(out));
  }
  shape_fail(Op::divide, a.shape, b.shape);
}

DArray Graph::tanh(const DArray& a) {
  std::size_t ia = ensure_node(a);
  DArray out = a;
  out.node_id.reset();
  for (double& v : out.data) v = std::tanh(v);
  return record(Op::tanh, {ia}, std::move(out));
}

DArray Graph::sigmoid(const DArray& a) {
  std::size_t ia = ensure_node(a);
  DArray out = a;
  out.node_id.reset();
  for (double& v : out.data) v = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  return record(Op::sigmoid, {ia}, std::move(out));
}

DArray Graph::l2_normalize_rows(const DArray& a) {
  if (a.shape.size() != 2) shape_fail(Op::l2_normalize_rows, a.shape);
  std::size_t m = a.rows(), n = a.cols();
  std::size_t ia = ensure_node(a);
  DArray out = a;
  out.node_id.reset();
  for (std::size_t i = 0; i < m; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += a.data[i * n + j] * a.data[i * n + j];
    if (s == 0.0)
      throw DomainError("l2_normalize_rows: zero-norm row " + std::to_string(i));
    double inv = 1.0 / std::sqrt(s);
    for (std::size_t j = 0; j < n; ++j) out.data[i * n + j] *= inv;
  }
  return record(Op::l2_normalize_rows, {ia}, std::move(out));
}

DArray Graph::masked_dropout(const DArray& a, const std::vector<double>& mask, double keep_p) {
  if (mask.size() != a.size())
    throw ShapeError("masked_dropout: mask length " + std::to_string(mask.size()) +
                     " does not match input size " + std::to_string(a.size()));
  if (!(keep_p > 0.0) || keep_p > 1.0)
    throw DomainError("masked_dropout: keep probability must be in (0, 1]");
  for (double v : mask)
    if (v != 0.0 && v != 1.0) throw DomainError("masked_dropout: mask entries must be 0 or 1");
  std::size_t ia = ensure_node(a);
  DArray out = a;
  out.node_id.reset();
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] *= mask[i] / keep_p;
  return record(Op::masked_dropout, {ia}, std::move(out), keep_p, mask);
}

DArray Graph::bce_with_logits(const DArray& logits, const std::vector<double>& targets) {
  if (targets.size() != logits.size())
    throw UsageError("bce_with_logits: targets length does not match logits");
  for (double t : targets)
    if (t != 0.0 && t != 1.0) throw UsageError("bce_with_logits: targets must be 0/1");
  std::size_t ia = ensure_node(logits);
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    double x = logits.data[i], t = targets[i];
    // max(x,0) - x*t + log(1 + exp(-|x|))
    total += std::max(x, 0.0) - x * t + std::log1p(std::exp(-std::fabs(x)));
  }
  double mean = logits.size() ? total / static_cast<double>(logits.size()) : 0.0;
  return record(Op::bce_with_logits, {ia}, DArray::scalar(mean), 0.0,
                std::vector<double>(targets));
}

DArray Graph::pairwise_cosine_similarity(const DArray& z) {
  DArray n = l2_normalize_rows(z);
  return matmul_nt(n, n);
}

GradientMap Graph::backward(const DArray& root) const {
  if (!root.node_id || *root.node_id >= nodes_.size())
    throw UsageError("backward: root is not a node of this graph");
  if (!root.is_scalar()) throw UsageError("backward: root must be a scalar");
  std::size_t root_id = *root.node_id;

  std::vector<DArray> adj(nodes_.size());
  std::vector<bool> live(nodes_.size(), false);
  auto touch = [&](std::size_t id) -> DArray& {
    if (!live[id]) {
      adj[id] = DArray::zeros(nodes_[id].value.shape);
      live[id] = true;
    }
    return adj[id];
  };
  touch(root_id).data[0] = 1.0;

  for (std::size_t id = root_id + 1; id-- > 0;) {
    if (!live[id]) continue;
    const Node& nd = nodes_[id];
    const DArray& g = adj[id];
    switch (nd.op) {
      case Op::constant:
      case Op::parameter:
        break;
      case Op::matmul: {
        const DArray& a = nodes_[nd.inputs[0]].value;
        const DArray& b = nodes_[nd.inputs[1]].value;
        std::size_t m = a.rows(), k = a.cols(), n = b.cols();
        DArray& da = touch(nd.inputs[0]);
        DArray& db = touch(nd.inputs[1]);
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += g.data[i * n + j] * b.data[p * n + j];
            da.data[i * k + p] += s;
          }
        for (std::size_t p = 0; p < k; ++p)
          for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < m; ++i) s += a.data[i * k + p] * g.data[i * n + j];
            db.data[p * n + j] += s;
          }
        break;
      }
      case Op::matmul_nt: {
        const DArray& a = nodes_[nd.inputs[0]].value;
        const DArray& b = nodes_[nd.inputs[1]].value;
        std::size_t m = a.rows(), k = a.cols(), n = b.rows();
        DArray& da = touch(nd.inputs[0]);
        DArray& db = touch(nd.inputs[1]);
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += g.data[i * n + j] * b.data[j * k + p];
            da.data[i * k + p] += s;
          }
        for (std::size_t j = 0; j < n; ++j)
          for (std::size_t p = 0; p < k; ++p) {
            double s = 0.0;
            for (std::size_t i = 0; i < m; ++i) s += g.data[i * n + j] * a.data[i * k + p];
            db.data[j * k + p] += s;
          }
        break;
      }
      case Op::add: {
        const DArray& a = nodes_[nd.inputs[0]].value;
        const DArray& b = nodes_[nd.inputs[1]].value;
        DArray& da = touch(nd.inputs[0]);
        for (std::size_t i = 0; i < da.size(); ++i) da.data[i] += g.data[i];
        DArray& db = touch(nd.inputs[1]);
        if (a.shape == b.shape) {
          for (std::size_t i = 0; i < db.size(); ++i) db.data[i] += g.data[i];
        } else {
          std::size_t m = a.rows(), n = a.cols();
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) db.data[j] += g.data[i * n + j];
        }
        break;
      }
      case Op::elementwise_mul: {
        const DArray& a = nodes_[nd.inputs[0]].value;
        const DArray& b = nodes_[nd.inputs[1]].value;
        DArray& da = touch(nd.inputs[0]);
        DArray& db = touch(nd.inputs[1]);
        for (std::size_t i = 0; i < g.size(); ++i) {
          da.data[i] += g.data[i] * b.data[i];
          db.data[i] += g.data[i] * a.data[i];
        }
        break;
      }
      case Op::scalar_mul: {
        DArray& da = touch(nd.inputs[0]);
        for (std::size_t i = 0; i < g.size(); ++i) da.data[i] += g.data[i] * nd.scalar;
        break;
      }
      case Op::concat_last_axis: {
        const DArray& a = nodes_[nd.inputs[0]].value;
        const DArray& b = nodes_[nd.inputs[1]].value;
        std::size_t m = a.rows(), na = a.cols(), nb = b.cols();
        DArray& da = touch(nd.inputs[0]);
        DArray& db = touch(nd.inputs[1]);
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t j = 0; j < na; ++j) da.data[i * na + j] += g.data[i * (na + nb) + j];
          for (std::size_t j = 0; j < nb; ++j)
            db.data[i * nb + j] += g.data[i * (na + nb) + na + j];
        }
        break;
      }
      case Op::interleave_rows: {
        const DArray& a = nodes_[nd.inputs[0]].value;
        std::size_t m = a.rows(), n = a.cols();
        DArray& da = touch(nd.inputs[0]);
        DArray& db = touch(nd.inputs[1]);
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) {
            da.data[i * n + j] += g.data[(2 * i) * n + j];
            db.data[i * n + j] += g.data[(2 * i + 1) * n + j];
          }
        break;
      }
      case Op::exp: {
        DArray& da = touch(nd.inputs[0]);
        for (std::size_t i = 0; i < g.size(); ++i) da.data[i] += g.data[i] * nd.value.data[i];
        break;
      }
      case Op::log: {
        const DArray& x = nodes_[nd.inputs[0]].value;
        DArray& da = touch(nd.inputs[0]);
        for (std::size_t i = 0; i < g.size(); ++i) da.data[i] += g.data[i] / x.data[i];
        break;
      }
      case Op::sum_all: {
        DArray& da = touch(nd.inputs[0]);
        for (double& v : da.data) v += g.data[0];
        break;
      }
      case Op::sum_rows: {
        const DArray& x = nodes_[nd.inputs[0]].value;
        std::size_t m = x.rows(), n = x.cols();
        DArray& da = touch(nd.inputs[0]);
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) da.data[i * n + j] += g.data[i];
        break;
      }
      case Op::divide: {
        const DArray& a = nodes_[nd.inputs[0]].value;
        const DArray& b = nodes_[nd.inputs[1]].value;
        DArray& da = touch(nd.inputs[0]);
        DArray& db = touch(nd.inputs[1]);
        if (a.shape == b.shape) {
          for (std::size_t i = 0; i < g.size(); ++i) {
            da.data[i] += g.data[i] / b.data[i];
            db.data[i] -= g.data[i] * a.data[i] / (b.data[i] * b.data[i]);
          }
        } else {
          std::size_t m = a.rows(), n = a.cols();
          for (std::size_t i = 0; i < m; ++i) {
            double bi = b.data[i];
            for (std::size_t j = 0; j < n; ++j) {
              da.data[i * n + j] += g.data[i * n + j] / bi;
              db.data[i] -= g.data[i * n + j] * a.data[i * n + j] / (bi * bi);
            }
          }
        }
        break;
      }
      case Op::tanh: {
        DArray& da = touch(nd.inputs[0]);
        for (std::size_t i = 0; i < g.size(); ++i) {
          double y = nd.value.data[i];
          da.data[i] += g.data[i] * (1.0 - y * y);
        }
        break;
      }
      case Op::sigmoid: {
        DArray& da = touch(nd.inputs[0]);
        for (std::size_t i = 0; i < g.size(); ++i) {
          double y = nd.value.data[i];
          da.data[i] += g.data[i] * y * (1.0 - y);
        }
        break;
      }
      case Op::l2_normalize_rows: {
        const DArray& x = nodes_[nd.inputs[0]].value;
        std::size_t m = x.rows(), n = x.cols();
        DArray& da = touch(nd.inputs[0]);
        for (std::size_t i = 0; i < m; ++i) {
          double norm2 = 0.0;
          for (std::size_t j = 0; j < n; ++j) norm2 += x.data[i * n + j] * x.data[i * n + j];
          double norm = std::sqrt(norm2);
          double dot = 0.0;  // g_i . y_i
          for (std::size_t j = 0; j < n; ++j) dot += g.data[i * n + j] * nd.value.data[i * n + j];
          for (std::size_t j = 0; j < n; ++j)
            da.data[i * n + j] += (g.data[i * n + j] - dot * nd.value.data[i * n + j]) / norm;
        }
        break;
      }
      case Op::masked_dropout: {
        DArray& da = touch(nd.inputs[0]);
        for (std::size_t i = 0; i < g.size(); ++i)
          da.data[i] += g.data[i] * nd.aux[i] / nd.scalar;
        break;
      }
      case Op::bce_with_logits: {
        const DArray& x = nodes_[nd.inputs[0]].value;
        DArray& da = touch(nd.inputs[0]);
        double inv_n = 1.0 / static_cast<double>(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
          double xv = x.data[i];
          double s = xv >= 0.0 ? 1.0 / (1.0 + std::exp(-xv)) : std::exp(xv) / (1.0 + std::exp(xv));
          da.data[i] += g.data[0] * (s - nd.aux[i]) * inv_n;
        }
        break;
      }
    }
  }

  GradientMap grads;
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    if (!nodes_[id].trainable) continue;
    grads[id] = live[id] ? adj[id] : DArray::zeros(nodes_[id].value.shape);
  }
  return grads;
}

std::vector<DArray> finite_difference_gradient(
    const std::function<double(const std::vector<DArray>&)>& f, std::vector<DArray> params,
    double eps) {
  if (!(eps > 0.0)) throw UsageError("finite_difference_gradient: eps must be positive");
  std::vector<DArray> grads;
  grads.reserve(params.size());
  for (std::size_t p = 0; p < params.size(); ++p) {
    DArray g = DArray::zeros(params[p].shape);
    for (std::size_t i = 0; i < params[p].size(); ++i) {
      double orig = params[p].data[i];
      params[p].data[i] = orig + eps;
      double fp = f(params);
      params[p].data[i] = orig - eps;
      double fm = f(params);
      params[p].data[i] = orig;
      if (!std::isfinite(fp) || !std::isfinite(fm))
        throw NumericError("finite_difference_gradient: non-finite function value");
      g.data[i] = (fp - fm) / (2.0 * eps);
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

double max_relative_error(const std::vector<DArray>& analytic,
                          const std::vector<DArray>& reference) {
  if (analytic.size() != reference.size())
    throw UsageError("max_relative_error: parameter count mismatch");
  double worst = 0.0;
  for (std::size_t p = 0; p < analytic.size(); ++p) {
    if (analytic[p].size() != reference[p].size())
      throw UsageError("max_relative_error: shape mismatch");
    for (std::size_t i = 0; i < analytic[p].size(); ++i) {
      double a = analytic[p].data[i], r = reference[p].data[i];
      double rel = std::fabs(a - r) / (std::fabs(r) + 1e-6);
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

}  // namespace framecl
