#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "framecl/common.hpp"

namespace framecl {

using Shape = std::vector<std::size_t>;

std::string shape_to_string(const Shape& s);

// Shaped float64 array. When produced by a Graph primitive it carries the id
// of the node that computed it; plain constants have no node_id.
struct DArray {
  Shape shape;
  std::vector<double> data;
  std::optional<std::size_t> node_id;

  DArray() = default;
  DArray(Shape s, std::vector<double> d);

  // Validates finiteness; use for user-provided constants.
  static DArray constant(Shape s, std::vector<double> d);
  static DArray zeros(const Shape& s);
  static DArray full(const Shape& s, double v);
  static DArray scalar(double v);

  std::size_t size() const { return data.size(); }
  bool is_scalar() const { return data.size() == 1; }
  std::size_t rows() const;
  std::size_t cols() const;
  double& at(std::size_t r, std::size_t c);
  double at(std::size_t r, std::size_t c) const;
};

enum class Op {
  constant,
  parameter,
  matmul,
  matmul_nt,  // A * B^T, used for pairwise similarities
  add,
  elementwise_mul,
  scalar_mul,
  concat_last_axis,
  interleave_rows,
  exp,
  log,
  sum_all,
  sum_rows,
  divide,
  tanh,
  sigmoid,
  l2_normalize_rows,
  masked_dropout,
  bce_with_logits,
};

const char* op_name(Op op);

struct Node {
  Op op;
  std::vector<std::size_t> inputs;
  DArray value;              // recorded forward value
  double scalar = 0.0;       // scalar_mul factor / dropout keep-probability
  std::vector<double> aux;   // dropout mask / bce targets
  bool trainable = false;
};

using GradientMap = std::unordered_map<std::size_t, DArray>;

// Tape of primitive applications. Topological order is construction order.
// Single-writer: build and backward from one thread; finished DArrays are
// immutable values and can be shared freely.
class Graph {
 public:
  DArray constant(DArray v);
  DArray parameter(DArray v);

  // Generic dispatch over the primitive set. scalar_mul reads `scalar`;
  // masked_dropout reads `mask` and `scalar` (keep-probability).
  DArray apply_primitive(Op op, const std::vector<DArray>& inputs, double scalar = 0.0,
                         const std::vector<double>& mask = {});

  DArray matmul(const DArray& a, const DArray& b);
  DArray matmul_nt(const DArray& a, const DArray& b);
  DArray add(const DArray& a, const DArray& b);
  DArray elementwise_mul(const DArray& a, const DArray& b);
  DArray scalar_mul(const DArray& a, double c);
  DArray concat_last_axis(const DArray& a, const DArray& b);
  DArray interleave_rows(const DArray& a, const DArray& b);
  DArray exp(const DArray& a);
  DArray log(const DArray& a);
  DArray sum_all(const DArray& a);
  DArray sum_rows(const DArray& a);
  DArray divide(const DArray& a, const DArray& b);
  DArray tanh(const DArray& a);
  DArray sigmoid(const DArray& a);
  DArray l2_normalize_rows(const DArray& a);
  DArray masked_dropout(const DArray& a, const std::vector<double>& mask, double keep_p);
  DArray bce_with_logits(const DArray& logits, const std::vector<double>& targets);

  // Cosine similarity matrix S with S[i][j] = cos(z_i, z_j); differentiable.
  DArray pairwise_cosine_similarity(const DArray& z);

  // d(root)/d(param) for every trainable parameter node. root must be scalar.
  GradientMap backward(const DArray& root) const;

  std::size_t node_count() const { return nodes_.size(); }
  const Node& node(std::size_t id) const { return nodes_.at(id); }

 private:
  std::size_t ensure_node(const DArray& v);
  DArray record(Op op, std::vector<std::size_t> inputs, DArray value, double scalar = 0.0,
                std::vector<double> aux = {});

  std::vector<Node> nodes_;
};

// Central-difference gradient of a scalar-valued function, one coordinate at
// a time. The validation oracle for every loss in the repo.
std::vector<DArray> finite_difference_gradient(
    const std::function<double(const std::vector<DArray>&)>& f, std::vector<DArray> params,
    double eps = 1e-6);

// max_i |a_i - f_i| / (|f_i| + 1e-6) over all parameters.
double max_relative_error(const std::vector<DArray>& analytic, const std::vector<DArray>& reference);

}  // namespace framecl
