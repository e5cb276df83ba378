#include <doctest.h>

#include <cmath>
#include <sstream>

#include "wcp/autodiff.hpp"
#include "wcp/errors.hpp"
#include "wcp/losses.hpp"
#include "wcp/rng.hpp"

using namespace wcp;

namespace {

Matrix random_matrix(Rng& rng, int rows, int cols, double scale = 1.0) {
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = scale * rng.normal();
  }
  return m;
}

IsoGraph triangle_graph() {
  IsoGraph graph;
  graph.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  graph.edges = {{0, 1}, {0, 2}, {1, 2}};
  graph.build_neighbors();
  return graph;
}

}  // namespace

TEST_CASE("param set flat view round-trips losslessly") {
  Rng rng(1);
  ParamSet params;
  params.add("w", random_matrix(rng, 4, 6));
  params.add("b", random_matrix(rng, 1, 4), 1);
  Vector flat = params.flatten();
  CHECK(flat.size() == 4 * 6 + 4);
  ParamSet copy = params;
  Vector shifted = flat;
  shifted.array() += 1.5;
  copy.set_flat(shifted);
  CHECK((copy.flatten() - shifted).norm() == 0.0);
  CHECK((copy.get("w").array() - params.get("w").array() - 1.5).abs().maxCoeff() < 1e-15);
  // Row-major flat order: the first row of w leads.
  CHECK(flat[1] == params.get("w")(0, 1));
}

TEST_CASE("param set binary serialization round trip") {
  Rng rng(2);
  ParamSet params;
  params.add("edge0_w", random_matrix(rng, 3, 6));
  params.add("edge0_b", random_matrix(rng, 1, 3), 1);
  std::stringstream buf;
  params.save(buf);
  std::string bytes = buf.str();
  CHECK(bytes.substr(0, 8) == "WCPNET01");
  std::stringstream in(bytes);
  ParamSet back = ParamSet::load(in);
  REQUIRE(back.same_layout(params));
  CHECK((back.flatten() - params.flatten()).norm() == 0.0);
}

TEST_CASE("relu matches its definition") {
  Tape tape;
  Matrix x(1, 3);
  x << -2, 0, 3;
  int y = tape.relu(tape.leaf(x));
  CHECK(tape.value(y)(0, 0) == 0.0);
  CHECK(tape.value(y)(0, 1) == 0.0);
  CHECK(tape.value(y)(0, 2) == 3.0);
}

TEST_CASE("affine with identity weights and zero bias is the identity") {
  Tape tape;
  Matrix x(2, 3);
  x << 1, 2, 3, 4, 5, 6;
  int w = tape.leaf(Matrix::Identity(3, 3));
  int b = tape.leaf(Matrix::Zero(1, 3));
  int y = tape.affine(tape.leaf(x), w, b);
  CHECK((tape.value(y) - x).norm() == 0.0);
}

TEST_CASE("gradient of a sum of parameters is all ones") {
  Tape tape;
  Matrix w(2, 2);
  w << 1, 2, 3, 4;
  int wn = tape.leaf(w, true);
  // sum(w) via affine with an all-ones "input" and l2 against zero... simpler:
  // scale to scalar through l2_loss of 1x1 blocks is convoluted; use the
  // closed form: loss = sum over entries via ones * w^T * ones is not a tape
  // op, so check through l2 on a linear map instead.
  Matrix x = Matrix::Ones(1, 2);
  int y = tape.affine(tape.leaf(x), wn, tape.leaf(Matrix::Zero(1, 2)));
  // l2 vs 0 over 1 row: loss = ((w00+w01)^2 + (w10+w11)^2); with y = x W^T and
  // x all ones, dL/dW(j, i) = 2 * y_j = 2 * (row sum of row j).
  int loss = tape.l2_loss(y, Matrix::Zero(1, 2));
  tape.backward(loss);
  const Matrix& g = tape.grad(wn);
  CHECK(g(0, 0) == doctest::Approx(2.0 * (w(0, 0) + w(0, 1))));
  CHECK(g(0, 1) == doctest::Approx(2.0 * (w(0, 0) + w(0, 1))));
  CHECK(g(1, 0) == doctest::Approx(2.0 * (w(1, 0) + w(1, 1))));
  CHECK(g(1, 1) == doctest::Approx(2.0 * (w(1, 0) + w(1, 1))));
}

TEST_CASE("affine gradient matches the closed form for ||Wx||^2") {
  Rng rng(7);
  Matrix w = random_matrix(rng, 3, 3);
  Matrix x = random_matrix(rng, 1, 3);
  Tape tape;
  int wn = tape.leaf(w, true);
  int y = tape.affine(tape.leaf(x), wn, tape.leaf(Matrix::Zero(1, 3)));
  int loss = tape.l2_loss(y, Matrix::Zero(1, 3));
  tape.backward(loss);
  // loss = ||x W^T||^2 (n = 1 row); dL/dW = 2 (W x^T) x
  Matrix want = 2.0 * (w * x.transpose()) * x;
  CHECK((tape.grad(wn) - want).norm() < 1e-12);
}

TEST_CASE("frozen leaves keep exactly zero gradients") {
  Rng rng(9);
  Matrix w = random_matrix(rng, 2, 2);
  Tape tape;
  int frozen = tape.leaf(w, false);
  int x = tape.leaf(random_matrix(rng, 1, 2), true);
  int y = tape.affine(x, frozen, tape.leaf(Matrix::Zero(1, 2)));
  int loss = tape.l2_loss(y, Matrix::Zero(1, 2));
  tape.backward(loss);
  CHECK(tape.grad(frozen).size() == 0);  // never accumulated
  CHECK(tape.grad(x).norm() > 0.0);
}

TEST_CASE("neighbor mean of a single neighbor returns that feature verbatim") {
  IsoGraph graph;
  graph.vertices = {{0, 0, 0}, {1, 0, 0}};
  graph.edges = {{0, 1}};
  graph.build_neighbors();
  EdgeStructure edges = EdgeStructure::from(graph);
  Tape tape;
  Matrix x(2, 2);
  x << 1, 2, 5, 9;
  int cat = tape.edge_concat(tape.leaf(x), edges);
  // rows: (x0 | x0-x1), (x1 | x1-x0)
  CHECK(tape.value(cat)(0, 0) == 1.0);
  CHECK(tape.value(cat)(0, 2) == -4.0);
  int mean = tape.neighbor_mean(cat, edges);
  CHECK(tape.value(mean).rows() == 2);
  CHECK(tape.value(mean)(0, 1) == 2.0);
  CHECK(tape.value(mean)(1, 3) == 7.0);
}

TEST_CASE("isolated vertices are rejected") {
  IsoGraph graph;
  graph.vertices = {{0, 0, 0}, {1, 0, 0}, {5, 5, 5}};
  graph.edges = {{0, 1}};
  graph.build_neighbors();
  CHECK_THROWS_AS(EdgeStructure::from(graph), IsolatedVertexError);
}

TEST_CASE("gradient check is near-exact for a purely linear computation") {
  Rng rng(11);
  ParamSet params;
  params.add("w", random_matrix(rng, 3, 3));
  Matrix x = random_matrix(rng, 4, 3);
  auto loss_fn = [&](const ParamSet& p) {
    Tape tape;
    int y = tape.affine(tape.leaf(x), tape.leaf(p.get("w")),
                        tape.leaf(Matrix::Zero(1, 3)));
    // linear scalar: sum of coordinates via l2 against itself shifted is
    // quadratic; instead take the mean with scale for pure linearity
    Matrix target = Matrix::Zero(4, 3);
    return tape.scalar(tape.l2_loss(y, target));
  };
  // quadratic in w is still exactly matched by central differences
  Tape tape;
  int wn = tape.leaf(params.get("w"), true);
  int y = tape.affine(tape.leaf(x), wn, tape.leaf(Matrix::Zero(1, 3)));
  int loss = tape.l2_loss(y, Matrix::Zero(4, 3));
  tape.backward(loss);
  Vector analytic(params.flat_size());
  const Matrix& g = tape.grad(wn);
  int at = 0;
  for (int r = 0; r < g.rows(); ++r) {
    for (int c = 0; c < g.cols(); ++c) analytic[at++] = g(r, c);
  }
  CHECK(grad_check(loss_fn, params, analytic, 1e-5) < 1e-9);
}

TEST_CASE("hand-computed quadratic derivative") {
  ParamSet params;
  Matrix p(1, 1);
  p << 3.0;
  params.add("p", p, 1);
  auto loss_fn = [](const ParamSet& ps) {
    double v = ps.get("p")(0, 0);
    return v * v;  // derivative 2p = 6 at p = 3
  };
  Vector analytic(1);
  analytic << 6.0;
  CHECK(grad_check(loss_fn, params, analytic, 1e-5) < 1e-9);
  Vector wrong(1);
  wrong << 5.0;
  CHECK(grad_check(loss_fn, params, wrong, 1e-5) > 0.1);
}

TEST_CASE("chamfer node gradients match finite differences") {
  Rng rng(15);
  Matrix pred = random_matrix(rng, 8, 3);
  Matrix target = random_matrix(rng, 7, 3);
  ParamSet params;
  params.add("pred", pred);
  auto loss_fn = [&](const ParamSet& p) {
    Tape tape;
    return tape.scalar(tape.chamfer_loss(tape.leaf(p.get("pred")), target));
  };
  Tape tape;
  int pn = tape.leaf(pred, true);
  int loss = tape.chamfer_loss(pn, target);
  tape.backward(loss);
  Vector analytic(params.flat_size());
  const Matrix& g = tape.grad(pn);
  int at = 0;
  for (int r = 0; r < g.rows(); ++r) {
    for (int c = 0; c < g.cols(); ++c) analytic[at++] = g(r, c);
  }
  // Frozen argmins make the loss locally piecewise-smooth; random clouds stay
  // away from ties, so central differences agree tightly.
  CHECK(grad_check(loss_fn, params, analytic, 1e-6) < 1e-4);
}

TEST_CASE("edge concat and neighbor mean gradients match finite differences") {
  Rng rng(19);
  IsoGraph graph = triangle_graph();
  EdgeStructure edges = EdgeStructure::from(graph);
  Matrix x = random_matrix(rng, 3, 2);
  Matrix target = random_matrix(rng, 3, 4);
  ParamSet params;
  params.add("x", x);
  auto loss_fn = [&](const ParamSet& p) {
    Tape tape;
    int cat = tape.edge_concat(tape.leaf(p.get("x")), edges);
    int mean = tape.neighbor_mean(cat, edges);
    return tape.scalar(tape.l2_loss(mean, target));
  };
  Tape tape;
  int xn = tape.leaf(x, true);
  int mean = tape.neighbor_mean(tape.edge_concat(xn, edges), edges);
  int loss = tape.l2_loss(mean, target);
  tape.backward(loss);
  Vector analytic(params.flat_size());
  const Matrix& g = tape.grad(xn);
  int at = 0;
  for (int r = 0; r < g.rows(); ++r) {
    for (int c = 0; c < g.cols(); ++c) analytic[at++] = g(r, c);
  }
  CHECK(grad_check(loss_fn, params, analytic, 1e-6) < 1e-6);
}

TEST_CASE("backward requires a scalar loss node") {
  Tape tape;
  int x = tape.leaf(Matrix::Ones(2, 2), true);
  CHECK_THROWS_AS(tape.backward(x), ContractError);
}
