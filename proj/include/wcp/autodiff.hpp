#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "wcp/remesh.hpp"

namespace wcp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Named parameter tensors with a lossless flat view for the optimizer and
// gradient checking. Entry order is insertion order and is part of the
// serialized format.
class ParamSet {
 public:
  struct Entry {
    std::string name;
    Matrix value;  // rank 1 stored as 1 x n
    int rank = 2;
  };

  void add(const std::string& name, Matrix value, int rank = 2);
  int count() const { return static_cast<int>(entries_.size()); }
  const Entry& entry(int i) const { return entries_[i]; }
  Entry& entry(int i) { return entries_[i]; }
  const Matrix& get(const std::string& name) const;
  Matrix& get(const std::string& name);

  int flat_size() const;
  Vector flatten() const;
  void set_flat(const Vector& flat);

  // Flat binary persistence: magic "WCPNET01", then little-endian u32
  // tensor count, then per tensor (u32 name length, name bytes, u32 rank,
  // dims as u32, values as f64 row-major).
  void save(std::ostream& out) const;
  static ParamSet load(std::istream& in);
  void save_file(const std::string& path) const;
  static ParamSet load_file(const std::string& path);

  bool same_layout(const ParamSet& other) const;

 private:
  std::vector<Entry> entries_;
};

// Directed-edge view of an IsoGraph used by the edge convolution: one row
// per ordered neighbor pair (i, j).
struct EdgeStructure {
  std::vector<std::pair<int, int>> directed;
  std::vector<int> degree;
  int vertex_count = 0;

  // Throws IsolatedVertexError if any vertex has no neighbors.
  static EdgeStructure from(const IsoGraph& graph);
};

// Reverse-mode tape over dense matrices. One tape per training step;
// backward visits nodes in reverse creation order, which is a reverse
// topological order by construction.
class Tape {
 public:
  // Leaf node; gradients are accumulated only when requires_grad is true
  // (frozen parameters stay at exactly zero).
  int leaf(Matrix value, bool requires_grad = false);

  // y = x * W^T + b (row-wise bias). W is out x in, b is 1 x out.
  int affine(int x, int w, int b);
  int relu(int x);
  // E x 2C rows [x_i | x_i - x_j] over the directed edges.
  int edge_concat(int x, const EdgeStructure& edges);
  // Segment mean of edge rows back to their source vertex.
  int neighbor_mean(int edge_features, const EdgeStructure& edges);
  int add(int a, int b);
  // y = factor * x.
  int scale(int x, double factor);
  // Fixed per-axis affine map y = x .* scale + shift (columns = axes).
  int scale_shift(int x, const Vec3& scale, const Vec3& shift);

  // Loss heads (scalar nodes, value stored as 1x1).
  int l2_loss(int pred, const Matrix& target);
  int chamfer_loss(int pred, const Matrix& target);
  int add_scalars(int a, int b);

  void backward(int loss_node);

  const Matrix& value(int node) const { return nodes_[node].value; }
  const Matrix& grad(int node) const { return nodes_[node].grad; }
  double scalar(int node) const;
  int size() const { return static_cast<int>(nodes_.size()); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    std::function<void(Tape&)> back;  // pulls this node's grad into parents
  };

  int push(Matrix value, bool requires_grad, std::function<void(Tape&)> back);
  void accumulate(int node, const Matrix& g);

  std::vector<Node> nodes_;
};

// Central-difference gradient check. `loss` must re-evaluate the full
// computation from the given parameters; `analytic` is flat, aligned with
// params.flatten(). Returns the max relative error
// |a - n| / max(|a|, |n|, 1e-8) over all parameters.
double grad_check(const std::function<double(const ParamSet&)>& loss, const ParamSet& params,
                  const Vector& analytic, double eps);

}  // namespace wcp
