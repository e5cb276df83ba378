#include "wcp/autodiff.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "wcp/errors.hpp"
#include "wcp/geometry.hpp"

namespace wcp {

// ---------------------------------------------------------------------------
// ParamSet

void ParamSet::add(const std::string& name, Matrix value, int rank) {
  for (const Entry& e : entries_) {
    if (e.name == name) throw InvalidArgumentError("duplicate parameter name: " + name);
  }
  entries_.push_back({name, std::move(value), rank});
}

const Matrix& ParamSet::get(const std::string& name) const {
  for (const Entry& e : entries_) {
    if (e.name == name) return e.value;
  }
  throw InvalidArgumentError("unknown parameter: " + name);
}

Matrix& ParamSet::get(const std::string& name) {
  for (Entry& e : entries_) {
    if (e.name == name) return e.value;
  }
  throw InvalidArgumentError("unknown parameter: " + name);
}

int ParamSet::flat_size() const {
  int n = 0;
  for (const Entry& e : entries_) n += static_cast<int>(e.value.size());
  return n;
}

Vector ParamSet::flatten() const {
  Vector flat(flat_size());
  int at = 0;
  for (const Entry& e : entries_) {
    for (int r = 0; r < e.value.rows(); ++r) {
      for (int c = 0; c < e.value.cols(); ++c) flat[at++] = e.value(r, c);
    }
  }
  return flat;
}

void ParamSet::set_flat(const Vector& flat) {
  if (flat.size() != flat_size()) throw ShapeError("flat parameter vector has wrong length");
  int at = 0;
  for (Entry& e : entries_) {
    for (int r = 0; r < e.value.rows(); ++r) {
      for (int c = 0; c < e.value.cols(); ++c) e.value(r, c) = flat[at++];
    }
  }
}

namespace {

const char kMagic[8] = {'W', 'C', 'P', 'N', 'E', 'T', '0', '1'};

void put_u32(std::ostream& out, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw IoError("truncated parameter file");
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

void put_f64(std::ostream& out, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

double get_f64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (!in) throw IoError("truncated parameter file");
  uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<uint64_t>(b[i]) << (8 * i);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

}  // namespace

void ParamSet::save(std::ostream& out) const {
  out.write(kMagic, 8);
  put_u32(out, static_cast<uint32_t>(entries_.size()));
  for (const Entry& e : entries_) {
    put_u32(out, static_cast<uint32_t>(e.name.size()));
    out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    put_u32(out, static_cast<uint32_t>(e.rank));
    if (e.rank == 1) {
      put_u32(out, static_cast<uint32_t>(e.value.cols()));
    } else {
      put_u32(out, static_cast<uint32_t>(e.value.rows()));
      put_u32(out, static_cast<uint32_t>(e.value.cols()));
    }
    for (int r = 0; r < e.value.rows(); ++r) {
      for (int c = 0; c < e.value.cols(); ++c) put_f64(out, e.value(r, c));
    }
  }
}

ParamSet ParamSet::load(std::istream& in) {
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0) throw IoError("bad parameter file magic");
  uint32_t count = get_u32(in);
  ParamSet params;
  for (uint32_t i = 0; i < count; ++i) {
    uint32_t name_len = get_u32(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (!in) throw IoError("truncated parameter file");
    uint32_t rank = get_u32(in);
    if (rank != 1 && rank != 2) throw IoError("unsupported tensor rank in parameter file");
    uint32_t rows = 1, cols;
    if (rank == 1) {
      cols = get_u32(in);
    } else {
      rows = get_u32(in);
      cols = get_u32(in);
    }
    Matrix value(rows, cols);
    for (uint32_t r = 0; r < rows; ++r) {
      for (uint32_t c = 0; c < cols; ++c) value(r, c) = get_f64(in);
    }
    params.add(name, std::move(value), static_cast<int>(rank));
  }
  return params;
}

void ParamSet::save_file(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  save(out);
}

ParamSet ParamSet::load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  return load(in);
}

bool ParamSet::same_layout(const ParamSet& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (size_t i = 0; i < entries_.size(); ++i) {
    const Entry& a = entries_[i];
    const Entry& b = other.entries_[i];
    if (a.name != b.name || a.rank != b.rank || a.value.rows() != b.value.rows() ||
        a.value.cols() != b.value.cols()) {
      return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// EdgeStructure

EdgeStructure EdgeStructure::from(const IsoGraph& graph) {
  EdgeStructure es;
  es.vertex_count = graph.vertex_count();
  es.degree.resize(es.vertex_count, 0);
  for (int i = 0; i < es.vertex_count; ++i) {
    if (graph.neighbors[i].empty()) {
      throw IsolatedVertexError("vertex " + std::to_string(i) +
                                " has no neighbors; remesh output should be connected");
    }
    es.degree[i] = static_cast<int>(graph.neighbors[i].size());
    for (int j : graph.neighbors[i]) es.directed.emplace_back(i, j);
  }
  return es;
}

// ---------------------------------------------------------------------------
// Tape

int Tape::push(Matrix value, bool requires_grad, std::function<void(Tape&)> back) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = requires_grad;
  node.back = std::move(back);
  nodes_.push_back(std::move(node));
  return static_cast<int>(nodes_.size()) - 1;
}

void Tape::accumulate(int node, const Matrix& g) {
  Node& n = nodes_[node];
  if (!n.requires_grad) return;
  if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  n.grad += g;
}

int Tape::leaf(Matrix value, bool requires_grad) {
  return push(std::move(value), requires_grad, nullptr);
}

int Tape::affine(int x, int w, int b) {
  const Matrix& xv = nodes_[x].value;
  const Matrix& wv = nodes_[w].value;
  const Matrix& bv = nodes_[b].value;
  if (xv.cols() != wv.cols()) throw ShapeError("affine: input width does not match weight");
  if (bv.rows() != 1 || bv.cols() != wv.rows()) throw ShapeError("affine: bias width mismatch");
  Matrix y = xv * wv.transpose();
  y.rowwise() += bv.row(0);
  bool rg = nodes_[x].requires_grad || nodes_[w].requires_grad || nodes_[b].requires_grad;
  int out = push(std::move(y), rg, nullptr);
  nodes_[out].back = [x, w, b, out](Tape& t) {
    const Matrix& g = t.nodes_[out].grad;
    t.accumulate(x, g * t.nodes_[w].value);
    t.accumulate(w, g.transpose() * t.nodes_[x].value);
    t.accumulate(b, g.colwise().sum());
  };
  return out;
}

int Tape::relu(int x) {
  Matrix y = nodes_[x].value.cwiseMax(0.0);
  int out = push(std::move(y), nodes_[x].requires_grad, nullptr);
  nodes_[out].back = [x, out](Tape& t) {
    // Subgradient at 0 is defined as 0.
    Matrix mask = (t.nodes_[x].value.array() > 0.0).cast<double>();
    t.accumulate(x, t.nodes_[out].grad.cwiseProduct(mask));
  };
  return out;
}

int Tape::edge_concat(int x, const EdgeStructure& edges) {
  const Matrix& xv = nodes_[x].value;
  if (xv.rows() != edges.vertex_count) throw ShapeError("edge_concat: row count mismatch");
  const int c = static_cast<int>(xv.cols());
  const int e = static_cast<int>(edges.directed.size());
  Matrix y(e, 2 * c);
  for (int k = 0; k < e; ++k) {
    auto [i, j] = edges.directed[k];
    y.block(k, 0, 1, c) = xv.row(i);
    y.block(k, c, 1, c) = xv.row(i) - xv.row(j);
  }
  int out = push(std::move(y), nodes_[x].requires_grad, nullptr);
  const EdgeStructure* es = &edges;  // caller keeps the structure alive
  nodes_[out].back = [x, out, es, c](Tape& t) {
    const Matrix& g = t.nodes_[out].grad;
    Matrix gx = Matrix::Zero(t.nodes_[x].value.rows(), c);
    for (size_t k = 0; k < es->directed.size(); ++k) {
      auto [i, j] = es->directed[k];
      gx.row(i) += g.block(static_cast<int>(k), 0, 1, c) + g.block(static_cast<int>(k), c, 1, c);
      gx.row(j) -= g.block(static_cast<int>(k), c, 1, c);
    }
    t.accumulate(x, gx);
  };
  return out;
}

int Tape::neighbor_mean(int edge_features, const EdgeStructure& edges) {
  const Matrix& xv = nodes_[edge_features].value;
  if (xv.rows() != static_cast<int>(edges.directed.size())) {
    throw ShapeError("neighbor_mean: edge row count mismatch");
  }
  const int c = static_cast<int>(xv.cols());
  Matrix y = Matrix::Zero(edges.vertex_count, c);
  for (size_t k = 0; k < edges.directed.size(); ++k) {
    y.row(edges.directed[k].first) += xv.row(static_cast<int>(k));
  }
  for (int i = 0; i < edges.vertex_count; ++i) y.row(i) /= static_cast<double>(edges.degree[i]);
  int out = push(std::move(y), nodes_[edge_features].requires_grad, nullptr);
  const EdgeStructure* es = &edges;
  nodes_[out].back = [edge_features, out, es, c](Tape& t) {
    const Matrix& g = t.nodes_[out].grad;
    Matrix gx(static_cast<int>(es->directed.size()), c);
    for (size_t k = 0; k < es->directed.size(); ++k) {
      int i = es->directed[k].first;
      gx.row(static_cast<int>(k)) = g.row(i) / static_cast<double>(es->degree[i]);
    }
    t.accumulate(edge_features, gx);
  };
  return out;
}

int Tape::add(int a, int b) {
  const Matrix& av = nodes_[a].value;
  const Matrix& bv = nodes_[b].value;
  if (av.rows() != bv.rows() || av.cols() != bv.cols()) throw ShapeError("add: shape mismatch");
  bool rg = nodes_[a].requires_grad || nodes_[b].requires_grad;
  int out = push(av + bv, rg, nullptr);
  nodes_[out].back = [a, b, out](Tape& t) {
    t.accumulate(a, t.nodes_[out].grad);
    t.accumulate(b, t.nodes_[out].grad);
  };
  return out;
}

int Tape::scale(int x, double factor) {
  int out = push(factor * nodes_[x].value, nodes_[x].requires_grad, nullptr);
  nodes_[out].back = [x, out, factor](Tape& t) {
    t.accumulate(x, factor * t.nodes_[out].grad);
  };
  return out;
}

int Tape::scale_shift(int x, const Vec3& scale, const Vec3& shift) {
  const Matrix& xv = nodes_[x].value;
  if (xv.cols() != 3) throw ShapeError("scale_shift expects 3 columns");
  Matrix y = xv;
  for (int c = 0; c < 3; ++c) y.col(c) = xv.col(c) * scale[c] + Vector::Constant(xv.rows(), shift[c]);
  int out = push(std::move(y), nodes_[x].requires_grad, nullptr);
  nodes_[out].back = [x, out, scale](Tape& t) {
    Matrix g = t.nodes_[out].grad;
    for (int c = 0; c < 3; ++c) g.col(c) *= scale[c];
    t.accumulate(x, g);
  };
  return out;
}

int Tape::l2_loss(int pred, const Matrix& target) {
  const Matrix& pv = nodes_[pred].value;
  if (pv.rows() != target.rows() || pv.cols() != target.cols()) {
    throw AlignmentError("l2_loss: prediction/target shape mismatch");
  }
  const double n = static_cast<double>(pv.rows());
  Matrix diff = pv - target;
  Matrix loss(1, 1);
  loss(0, 0) = diff.squaredNorm() / n;
  int out = push(std::move(loss), nodes_[pred].requires_grad, nullptr);
  nodes_[out].back = [pred, out, diff, n](Tape& t) {
    double g = t.nodes_[out].grad(0, 0);
    t.accumulate(pred, (2.0 * g / n) * diff);
  };
  return out;
}

int Tape::chamfer_loss(int pred, const Matrix& target) {
  const Matrix& pv = nodes_[pred].value;
  if (pv.rows() == 0 || target.rows() == 0) throw EmptyCloudError("chamfer over empty cloud");
  if (pv.cols() != 3 || target.cols() != 3) throw ShapeError("chamfer expects 3 columns");

  PointCloud target_cloud, pred_cloud;
  for (int i = 0; i < target.rows(); ++i) target_cloud.points.emplace_back(target.row(i).transpose());
  for (int i = 0; i < pv.rows(); ++i) pred_cloud.points.emplace_back(pv.row(i).transpose());
  SpatialIndex target_index(target_cloud);
  SpatialIndex pred_index(pred_cloud);

  // Gradient flows only through the argmin pair of each term; argmins are
  // frozen at forward time (lowest-index tie break via the index).
  double total = 0.0;
  std::vector<int> fwd_match(pv.rows());
  for (int i = 0; i < pv.rows(); ++i) {
    auto [j, d] = target_index.nearest(pred_cloud.points[i]);
    fwd_match[i] = j;
    total += d;
  }
  std::vector<int> rev_match(target.rows());
  for (int j = 0; j < target.rows(); ++j) {
    auto [i, d] = pred_index.nearest(target_cloud.points[j]);
    rev_match[j] = i;
    total += d;
  }

  Matrix loss(1, 1);
  loss(0, 0) = total;
  int out = push(std::move(loss), nodes_[pred].requires_grad, nullptr);
  Matrix target_copy = target;
  nodes_[out].back = [pred, out, fwd_match, rev_match, target_copy](Tape& t) {
    double g = t.nodes_[out].grad(0, 0);
    const Matrix& p = t.nodes_[pred].value;
    Matrix gp = Matrix::Zero(p.rows(), 3);
    for (int i = 0; i < p.rows(); ++i) {
      Eigen::RowVector3d diff = p.row(i) - target_copy.row(fwd_match[i]);
      double d = diff.norm();
      if (d > 0.0) gp.row(i) += g * diff / d;
    }
    for (int j = 0; j < target_copy.rows(); ++j) {
      int i = rev_match[j];
      Eigen::RowVector3d diff = p.row(i) - target_copy.row(j);
      double d = diff.norm();
      if (d > 0.0) gp.row(i) += g * diff / d;
    }
    t.accumulate(pred, gp);
  };
  return out;
}

int Tape::add_scalars(int a, int b) { return add(a, b); }

double Tape::scalar(int node) const {
  const Matrix& v = nodes_[node].value;
  if (v.rows() != 1 || v.cols() != 1) throw ContractError("node is not a scalar");
  return v(0, 0);
}

void Tape::backward(int loss_node) {
  const Matrix& v = nodes_[loss_node].value;
  if (v.rows() != 1 || v.cols() != 1) {
    throw ContractError("backward requires a scalar loss node");
  }
  for (Node& n : nodes_) {
    if (n.grad.size() != 0) n.grad.setZero();
  }
  Node& loss = nodes_[loss_node];
  loss.grad = Matrix::Ones(1, 1);
  loss.requires_grad = true;
  for (int i = loss_node; i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.size() == 0 || !n.back) continue;
    n.back(*this);
  }
}

// ---------------------------------------------------------------------------
// Gradient checking

double grad_check(const std::function<double(const ParamSet&)>& loss, const ParamSet& params,
                  const Vector& analytic, double eps) {
  if (eps <= 0.0) throw InvalidArgumentError("grad_check eps must be positive");
  Vector flat = params.flatten();
  if (analytic.size() != flat.size()) throw ShapeError("analytic gradient length mismatch");
  ParamSet scratch = params;
  double max_rel = 0.0;
  for (int i = 0; i < flat.size(); ++i) {
    double saved = flat[i];
    flat[i] = saved + eps;
    scratch.set_flat(flat);
    double plus = loss(scratch);
    flat[i] = saved - eps;
    scratch.set_flat(flat);
    double minus = loss(scratch);
    flat[i] = saved;
    double numeric = (plus - minus) / (2.0 * eps);
    double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
    max_rel = std::max(max_rel, std::abs(analytic[i] - numeric) / denom);
  }
  scratch.set_flat(flat);
  return max_rel;
}

}  // namespace wcp
