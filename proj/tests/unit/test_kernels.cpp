#include <doctest.h>

#include "mindface/kernels/kernels.hpp"
#include "mindface/rng.hpp"

#include <cmath>

using namespace mindface;
namespace k = mindface::kernels;
namespace ref = mindface::kernels::reference;

namespace {

Matrix random(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = standard_normal(rng);
  return m;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  REQUIRE(a.rows() == b.rows());
  REQUIRE(a.cols() == b.cols());
  return (a - b).cwiseAbs().maxCoeff();
}

// Ragged sequences, one of them with padded rows.
std::vector<k::SeqSpan> test_seqs() { return {{0, 7, 7}, {7, 3, 3}, {10, 5, 2}, {15, 1, 1}}; }

}  // namespace

TEST_CASE("matmul variants agree with the serial loops") {
  const Matrix a = random(37, 19, 1), b = random(19, 23, 2), c = random(37, 23, 3);
  Matrix p, r;
  k::matmul(a, b, p);
  ref::matmul(a, b, r);
  CHECK(max_abs_diff(p, r) < 1e-12);
  k::matmul_tn(a, c, p);
  ref::matmul_tn(a, c, r);
  CHECK(max_abs_diff(p, r) < 1e-12);
  k::matmul_nt(c, c, p);
  ref::matmul_nt(c, c, r);
  CHECK(max_abs_diff(p, r) < 1e-12);
}

TEST_CASE("bias kernels agree") {
  Matrix x = random(11, 6, 4), y = x;
  const Matrix bias = random(1, 6, 5);
  k::add_row_bias(x, bias);
  ref::add_row_bias(y, bias);
  CHECK(max_abs_diff(x, y) == 0.0);
  Matrix g1 = Matrix::Ones(1, 6), g2 = g1;
  k::accumulate_bias_grad(x, g1);
  ref::accumulate_bias_grad(x, g2);
  CHECK(max_abs_diff(g1, g2) < 1e-12);
}

TEST_CASE("layer norm forward and backward agree") {
  const Matrix x = random(13, 8, 6), gamma = random(1, 8, 7), beta = random(1, 8, 8), dy = random(13, 8, 9);
  Matrix y1, y2, xh1, xh2;
  Vector is1, is2;
  k::layer_norm_forward(x, gamma, beta, 1e-5, y1, xh1, is1);
  ref::layer_norm_forward(x, gamma, beta, 1e-5, y2, xh2, is2);
  CHECK(max_abs_diff(y1, y2) < 1e-12);
  CHECK((is1 - is2).cwiseAbs().maxCoeff() < 1e-12);
  // normalised rows have zero mean and unit variance
  for (Eigen::Index r = 0; r < xh1.rows(); ++r) {
    CHECK(std::abs(xh1.row(r).mean()) < 1e-12);
    CHECK(xh1.row(r).squaredNorm() / 8.0 == doctest::Approx(1.0).epsilon(1e-4));
  }
  Matrix dx1, dx2, dg1 = Matrix::Zero(1, 8), dg2 = dg1, db1 = dg1, db2 = dg1;
  k::layer_norm_backward(dy, xh1, is1, gamma, dx1, dg1, db1);
  ref::layer_norm_backward(dy, xh2, is2, gamma, dx2, dg2, db2);
  CHECK(max_abs_diff(dx1, dx2) < 1e-12);
  CHECK(max_abs_diff(dg1, dg2) < 1e-12);
  CHECK(max_abs_diff(db1, db2) < 1e-12);
}

TEST_CASE("gelu matches the erf definition and both implementations agree") {
  const Matrix x = random(9, 5, 10) * 3.0, dy = random(9, 5, 11);
  Matrix y1, y2, d1, d2;
  k::gelu_forward(x, y1);
  ref::gelu_forward(x, y2);
  CHECK(max_abs_diff(y1, y2) < 1e-15);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double v = x.data()[i];
    CHECK(y1.data()[i] == doctest::Approx(v * 0.5 * std::erfc(-v / std::sqrt(2.0))).epsilon(1e-12));
  }
  k::gelu_backward(x, dy, d1);
  ref::gelu_backward(x, dy, d2);
  CHECK(max_abs_diff(d1, d2) < 1e-14);
  // finite-difference check of the derivative
  const double h = 1e-6;
  for (double v : {-2.5, -0.3, 0.0, 0.7, 3.1}) {
    Matrix xv(1, 1), up, down, g;
    xv(0, 0) = v + h;
    k::gelu_forward(xv, up);
    xv(0, 0) = v - h;
    k::gelu_forward(xv, down);
    xv(0, 0) = v;
    k::gelu_backward(xv, Matrix::Ones(1, 1), g);
    CHECK(g(0, 0) == doctest::Approx((up(0, 0) - down(0, 0)) / (2 * h)).epsilon(1e-7));
  }
}

TEST_CASE("attention forward and backward agree on ragged, padded sequences") {
  const auto seqs = test_seqs();
  const int heads = 2;
  const Matrix q = random(16, 8, 12), kk = random(16, 8, 13), v = random(16, 8, 14), dctx = random(16, 8, 15);
  Matrix c1, c2;
  k::ProbBuffer p1, p2;
  k::attention_forward(q, kk, v, seqs, heads, c1, p1);
  ref::attention_forward(q, kk, v, seqs, heads, c2, p2);
  CHECK(p1.size() == k::attention_prob_size(seqs, heads));
  REQUIRE(p1.size() == p2.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < p1.size(); ++i) worst = std::max(worst, std::abs(p1[i] - p2[i]));
  CHECK(worst < 1e-13);
  CHECK(max_abs_diff(c1, c2) < 1e-12);

  Matrix dq1, dk1, dv1, dq2, dk2, dv2;
  k::attention_backward(q, kk, v, p1, dctx, seqs, heads, dq1, dk1, dv1);
  ref::attention_backward(q, kk, v, p2, dctx, seqs, heads, dq2, dk2, dv2);
  CHECK(max_abs_diff(dq1, dq2) < 1e-12);
  CHECK(max_abs_diff(dk1, dk2) < 1e-12);
  CHECK(max_abs_diff(dv1, dv2) < 1e-12);
}

TEST_CASE("padding rows are never attended to") {
  const int heads = 2;
  const std::vector<k::SeqSpan> padded = {{0, 5, 2}};
  const std::vector<k::SeqSpan> trimmed = {{0, 2, 2}};
  Matrix q = random(5, 4, 16), kk = random(5, 4, 17), v = random(5, 4, 18);
  Matrix c1, c2;
  k::ProbBuffer p1, p2;
  k::attention_forward(q, kk, v, padded, heads, c1, p1);
  // garbage in the padding rows must not change the valid rows' outputs
  kk.bottomRows(3).setConstant(1e3);
  v.bottomRows(3).setConstant(-7.0);
  k::attention_forward(q, kk, v, padded, heads, c2, p2);
  CHECK(max_abs_diff(c1.topRows(2), c2.topRows(2)) < 1e-14);
  Matrix c3;
  k::ProbBuffer p3;
  k::attention_forward(q.topRows(2), kk.topRows(2), v.topRows(2), trimmed, heads, c3, p3);
  CHECK(max_abs_diff(c1.topRows(2), c3) < 1e-14);
}

TEST_CASE("attention rejects widths not divisible by the head count") {
  const Matrix q = random(3, 5, 19);
  Matrix c;
  k::ProbBuffer p;
  const std::vector<k::SeqSpan> seqs = {{0, 3, 3}};
  CHECK_THROWS(k::attention_forward(q, q, q, seqs, 2, c, p));
}
