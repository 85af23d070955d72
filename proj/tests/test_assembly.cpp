#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include <Eigen/Dense>

#include "nsgrf/assembly.hpp"
#include "oracles.hpp"

using namespace nsgrf;

namespace {

AnisotropySpec random_fourier(std::mt19937_64& rng, double A, double B) {
  std::uniform_real_distribution<double> u(-1, 1);
  const FrequencySet set({{0, 1}, {1, -1}, {1, 0}, {1, 1}});
  std::vector<FourierTerm> terms;
  for (std::size_t k = 0; k < set.size(); ++k) terms.push_back({u(rng), u(rng), u(rng), u(rng)});
  return AnisotropySpec(0.2 + std::abs(u(rng)), FourierVectorField(A, B, {2 * u(rng), 2 * u(rng)}, set, terms));
}

std::function<Sym2(double, double)> closed_H(const AnisotropySpec& spec) {
  return [spec](double x, double y) { return eval_H(spec, {x, y}); };
}

Eigen::MatrixXd dense(const SparseMatrix& m) { return Eigen::MatrixXd(m); }

}  // namespace

TEST_SUITE("assembly") {

TEST_CASE("identity H gives the five-point Laplacian") {
  const GridSpec g(5, 5, 5, 5);
  const AnisotropySpec spec(1.0, ConstantVector{});
  const StencilMatrix ah = assemble_AH(g, sample_H_on_faces(g, spec));
  for (std::size_t r = 0; r < g.size(); ++r) {
    CHECK(ah.coefficient(r, 0, 0) == -4.0);
    CHECK(ah.coefficient(r, 1, 0) == 1.0);
    CHECK(ah.coefficient(r, -1, 0) == 1.0);
    CHECK(ah.coefficient(r, 0, 1) == 1.0);
    CHECK(ah.coefficient(r, 0, -1) == 1.0);
    for (int dx : {-1, 1}) {
      for (int dy : {-1, 1}) CHECK(ah.coefficient(r, dx, dy) == 0.0);
    }
  }
}

TEST_CASE("constant off-diagonal H gives quarter diagonal couplings") {
  const GridSpec g(4, 4, 4, 4);
  // γ = 0.5, v = (1/√2, 1/√2): H = [[1, ½], [½, 1]]
  const AnisotropySpec spec(0.5, ConstantVector{{std::sqrt(0.5), std::sqrt(0.5)}});
  const StencilMatrix ah = assemble_AH(g, sample_H_on_faces(g, spec));
  for (std::size_t r = 0; r < g.size(); ++r) {
    CHECK(ah.coefficient(r, 1, 1) == doctest::Approx(0.25));
    CHECK(ah.coefficient(r, -1, -1) == doctest::Approx(0.25));
    CHECK(ah.coefficient(r, 1, -1) == doctest::Approx(-0.25));
    CHECK(ah.coefficient(r, -1, 1) == doctest::Approx(-0.25));
  }
}

TEST_CASE("face sampling") {
  const GridSpec g(20, 20, 200, 200);
  const FaceTensors iso = sample_H_on_faces(g, AnisotropySpec(1.0, ConstantVector{}));
  CHECK(iso.count() == 80000);
  for (const auto& h : iso.right) CHECK((h.h11 == 1.0 && h.h12 == 0.0 && h.h22 == 1.0));

  // closed-form fixed field against its values on the 400 x 400 half-step lattice
  const double pi = std::numbers::pi;
  const TrigPotential pot(20, 20, {{1, 0, 7.5 / pi, 0}, {0, 1, 2.5 / pi, 0}});
  auto base = std::make_shared<const BaseField>(rotated_gradient_base(pot));
  const AnisotropySpec spec(0.5, FixedFieldScaled(base, 5.0));
  const FaceTensors faces = sample_H_on_faces(g, spec);
  const LatticeField lattice = rotated_gradient_field(g, [&pot](Point s) { return pot.gradient(s); });
  for (long j = 0; j < 200; j += 7) {
    for (long i = 0; i < 200; i += 13) {
      const Vec2 v = lattice.at(2 * i + 2, 2 * j + 1);
      const Sym2 want = diffusion_tensor(0.5, {std::sqrt(5.0) * v.x, std::sqrt(5.0) * v.y});
      const Sym2& got = faces.right[static_cast<std::size_t>(j * 200 + i)];
      CHECK(got.h11 == doctest::Approx(want.h11).epsilon(1e-13));
      CHECK(got.h12 == doctest::Approx(want.h12).epsilon(1e-13));
      CHECK(got.h22 == doctest::Approx(want.h22).epsilon(1e-13));
    }
  }
}

TEST_CASE("row sums vanish and Q is symmetric for random fields") {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 5; ++t) {
    const GridSpec g(20, 13, 16, 11);
    const AnisotropySpec spec = random_fourier(rng, 20, 13);
    const PrecisionModel model = assemble_precision(g, KappaSpec(0.8), spec);
    for (const auto& row : model.stencil().rows()) {
      double sum = 0.0, scale = 0.0;
      for (double c : row) {
        sum += c;
        scale = std::max(scale, std::abs(c));
      }
      CHECK(std::abs(sum) <= 1e-12 * scale);
    }
    const Eigen::MatrixXd q = dense(model.precision());
    CHECK((q - q.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * q.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("A_H is symmetric for constant H") {
  const GridSpec g(3, 7, 9, 8);
  const AnisotropySpec spec(0.7, ConstantVector{{1.1, -0.4}});
  const Eigen::MatrixXd ah = dense(assemble_AH(g, sample_H_on_faces(g, spec)).to_sparse());
  CHECK((ah - ah.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * ah.cwiseAbs().maxCoeff());
}

TEST_CASE("tiny grids: 3 x 3 gives a structurally dense Q") {
  const GridSpec g(3, 3, 3, 3);
  const PrecisionPattern pattern(g);
  CHECK(pattern.matrix().rows() == 9);
  CHECK(pattern.matrix().nonZeros() == 81);
  const PrecisionModel m = assemble_precision(g, KappaSpec(1), AnisotropySpec(1, ConstantVector{{0.3, 0.4}}));
  const Eigen::MatrixXd want = oracle::dense_precision(3, 3, 3, 3, 1.0, closed_H(AnisotropySpec(1, ConstantVector{{0.3, 0.4}})));
  CHECK((dense(m.precision()) - want).cwiseAbs().maxCoeff() <= 1e-12 * want.cwiseAbs().maxCoeff());
}

TEST_CASE("nonzeros per row") {
  for (auto [m, n] : {std::pair{3, 3}, {4, 6}, {5, 5}, {9, 7}}) {
    const GridSpec g(1, 1, m, n);
    const PrecisionPattern pattern(g);
    const SparseMatrix& p = pattern.matrix();
    for (int c = 0; c < p.outerSize(); ++c) {
      const int count = p.outerIndexPtr()[c + 1] - p.outerIndexPtr()[c];
      CHECK(count <= 25);
      CHECK(count >= 9);
      if (m >= 5 && n >= 5) CHECK(count == 25);
    }
  }
}

TEST_CASE("Q against the dense oracle on 6 x 6") {
  const GridSpec g(6, 6, 6, 6);
  const AnisotropySpec iso(1.0, ConstantVector{});
  const Eigen::MatrixXd want = oracle::dense_precision(6, 6, 6, 6, 1.0, closed_H(iso));
  const Eigen::MatrixXd got = dense(assemble_precision(g, KappaSpec(1), iso).precision());
  CHECK((got - want).cwiseAbs().maxCoeff() <= 1e-12 * want.cwiseAbs().maxCoeff());

  std::mt19937_64 rng(2);
  const GridSpec g2(20, 12, 6, 6);
  const AnisotropySpec spec = random_fourier(rng, 20, 12);
  const Eigen::MatrixXd want2 = oracle::dense_precision(20, 12, 6, 6, 0.6, closed_H(spec));
  const Eigen::MatrixXd got2 = dense(assemble_precision(g2, KappaSpec(0.6), spec).precision());
  CHECK((got2 - want2).cwiseAbs().maxCoeff() <= 1e-12 * want2.cwiseAbs().maxCoeff());
}

TEST_CASE("parallel assembly matches the serial reference") {
  std::mt19937_64 rng(8);
  const GridSpec g(20, 20, 23, 17);
  const AnisotropySpec spec = random_fourier(rng, 20, 20);
  const PrecisionModel m = assemble_precision(g, KappaSpec(1.3), spec);
  const Eigen::MatrixXd ah_ref = dense(reference::assemble_AH_serial(g, spec));
  const Eigen::MatrixXd ah = dense(m.stencil().to_sparse());
  CHECK((ah - ah_ref).cwiseAbs().maxCoeff() <= 1e-13 * ah_ref.cwiseAbs().maxCoeff());
  const Eigen::MatrixXd q_ref = dense(reference::precision_serial(g, 1.3, spec));
  CHECK((dense(m.precision()) - q_ref).cwiseAbs().maxCoeff() <= 1e-12 * q_ref.cwiseAbs().maxCoeff());

  // reusing the assembler gives the same values
  PrecisionAssembler assembler(g, KappaSpec(1.3));
  assembler.assemble(random_fourier(rng, 20, 20));
  const Eigen::MatrixXd again = dense(assembler.assemble(spec));
  CHECK((again - dense(m.precision())).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("Q = Aᵀ A / V on probe vectors, and the κ² scaling identity") {
  std::mt19937_64 rng(4);
  const GridSpec g(20, 20, 12, 10);
  const AnisotropySpec spec = random_fourier(rng, 20, 20);
  const double k2 = 0.9, c = 2.5, V = g.cell_area();
  const PrecisionModel m1 = assemble_precision(g, KappaSpec(k2), spec);
  const PrecisionModel m2 = assemble_precision(g, KappaSpec(c * k2), spec);
  const SparseMatrix ah = m1.stencil().to_sparse();
  std::normal_distribution<double> n;
  for (int t = 0; t < 5; ++t) {
    Eigen::VectorXd x(static_cast<Eigen::Index>(g.size()));
    for (auto& v : x) v = n(rng);
    const Eigen::VectorXd ax = apply_A(m1, x);
    const double lhs = x.dot(m1.precision() * x);
    CHECK(lhs == doctest::Approx(ax.squaredNorm() / V).epsilon(1e-10));
    // Q(cκ²) − Q(κ²) = V (c² − 1) κ⁴ I − (c − 1) κ² (A_H + A_Hᵀ)
    const Eigen::VectorXd diff = m2.precision() * x - m1.precision() * x;
    const Eigen::VectorXd want = V * (c * c - 1) * k2 * k2 * x - (c - 1) * k2 * (ah * x + ah.transpose() * x);
    CHECK((diff - want).norm() <= 1e-10 * want.norm());
  }
}

TEST_CASE("apply_A on constants, unit vectors and Fourier modes") {
  const GridSpec g(20, 10, 16, 8);
  const AnisotropySpec spec(0.6, ConstantVector{{1.2, -0.7}});
  const PrecisionModel m = assemble_precision(g, KappaSpec(1.7), spec);
  const double V = g.cell_area();
  const Eigen::Index n = static_cast<Eigen::Index>(g.size());

  const Eigen::VectorXd ones = Eigen::VectorXd::Constant(n, 2.0);
  CHECK((apply_A(m, ones) - Eigen::VectorXd::Constant(n, V * 1.7 * 2.0)).cwiseAbs().maxCoeff() < 1e-12);

  const Eigen::MatrixXd a = dense(m.operator_matrix());
  for (Eigen::Index k : {Eigen::Index{0}, Eigen::Index{37}, n - 1}) {
    const Eigen::VectorXd e = Eigen::VectorXd::Unit(n, k);
    CHECK((apply_A(m, e) - a.col(k)).cwiseAbs().maxCoeff() < 1e-14);
  }

  // cos(α i + β j) is an eigenvector with symbol
  // V κ² − [2 r_y H11 (cos α − 1) + 2 r_x H22 (cos β − 1) − 2 H12 sin α sin β]
  const Sym2 h = eval_H(spec, {0, 0});
  const double ry = g.step_y() / g.step_x(), rx = g.step_x() / g.step_y();
  for (auto [p, q] : {std::pair{1, 0}, {3, 2}, {5, 7}}) {
    const double alpha = 2 * std::numbers::pi * p / 16, beta = 2 * std::numbers::pi * q / 8;
    Eigen::VectorXd u(n);
    for (long j = 0; j < 8; ++j) {
      for (long i = 0; i < 16; ++i) u[j * 16 + i] = std::cos(alpha * i + beta * j);
    }
    const double symbol = 2 * ry * h.h11 * (std::cos(alpha) - 1) + 2 * rx * h.h22 * (std::cos(beta) - 1) -
                          2 * h.h12 * std::sin(alpha) * std::sin(beta);
    const double lambda = V * 1.7 - symbol;
    CHECK((apply_A(m, u) - lambda * u).cwiseAbs().maxCoeff() < 1e-12 * (1 + std::abs(lambda)));
  }
  CHECK_THROWS_AS(apply_A(m, Eigen::VectorXd::Zero(3)), std::invalid_argument);
}

TEST_CASE("coordinate export") {
  const GridSpec g(3, 3, 3, 3);
  const PrecisionModel m = assemble_precision(g, KappaSpec(1), AnisotropySpec(1, ConstantVector{}));
  std::ostringstream out;
  write_coordinate(out, m.precision());
  std::istringstream in(out.str());
  int r = 0, c = 0, lines = 0;
  double v = 0;
  Eigen::MatrixXd back = Eigen::MatrixXd::Zero(9, 9);
  while (in >> r >> c >> v) {
    back(r, c) = v;
    ++lines;
  }
  CHECK(lines == 81);
  CHECK((back - dense(m.precision())).cwiseAbs().maxCoeff() == 0.0);
  CHECK(out.str().find("0 0 ") == 0);
}

}
