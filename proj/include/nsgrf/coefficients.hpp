#pragma once

#include <compare>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "nsgrf/grid.hpp"

namespace nsgrf {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

/// Symmetric 2x2 matrix [[h11, h12], [h12, h22]].
struct Sym2 {
  double h11 = 0.0;
  double h12 = 0.0;
  double h22 = 0.0;

  double det() const { return h11 * h22 - h12 * h12; }
  double trace() const { return h11 + h22; }
};

/// Constant κ² of the operator κ² - ∇·H∇.
class KappaSpec {
 public:
  explicit KappaSpec(double kappa_sq);
  double kappa_sq() const { return kappa_sq_; }

 private:
  double kappa_sq_;
};

/// Non-zero frequency (k, l) of the real Fourier basis. Valid frequencies are
/// k >= 1 with any l, or k == 0 with l >= 1, so (k,l) and (-k,-l) never both occur.
struct Frequency {
  int k = 0;
  int l = 0;
  auto operator<=>(const Frequency&) const = default;
};

/// Sorted (lexicographic in (k,l)) list of distinct non-zero frequencies.
/// The constant (0,0) term is always implied and is not stored.
class FrequencySet {
 public:
  FrequencySet() = default;
  /// Throws std::invalid_argument on (0,0), frequencies outside the half-plane
  /// set, or duplicates. Input order does not matter.
  explicit FrequencySet(std::vector<Frequency> freqs);

  std::size_t size() const { return freqs_.size(); }
  const std::vector<Frequency>& frequencies() const { return freqs_; }
  const Frequency& operator[](std::size_t i) const { return freqs_[i]; }

  bool operator==(const FrequencySet&) const = default;

 private:
  std::vector<Frequency> freqs_;
};

struct FourierTerm {
  double a1 = 0.0;  // cos coefficient, first component
  double b1 = 0.0;  // sin coefficient, first component
  double a2 = 0.0;
  double b2 = 0.0;
};

/// Truncated real Fourier series for a periodic vector field on [0,A] x [0,B]:
///   v(s) = c + sum_f a_f cos(2π(k x/A + l y/B)) + b_f sin(2π(k x/A + l y/B)).
class FourierVectorField {
 public:
  FourierVectorField(double width, double height, Vec2 constant, FrequencySet freqs,
                     std::vector<FourierTerm> terms);

  double width() const { return width_; }
  double height() const { return height_; }
  Vec2 constant() const { return constant_; }
  const FrequencySet& frequencies() const { return freqs_; }
  const std::vector<FourierTerm>& terms() const { return terms_; }

  /// Evaluates the series at any point; the series itself is periodic.
  Vec2 operator()(Point s) const;

 private:
  double width_;
  double height_;
  Vec2 constant_;
  FrequencySet freqs_;
  std::vector<FourierTerm> terms_;
};

struct ConstantVector {
  Vec2 v;
};

/// Vector field samples on the 2M x 2N half-step lattice of a grid. Cell and
/// face centres are lattice points, so assembly never needs interpolation.
class LatticeField {
 public:
  LatticeField(GridSpec grid, std::vector<Vec2> samples);

  const GridSpec& grid() const { return grid_; }
  std::size_t lattice_x() const { return 2 * grid_.cells_x(); }
  std::size_t lattice_y() const { return 2 * grid_.cells_y(); }
  const std::vector<Vec2>& samples() const { return samples_; }
  Vec2 at(long p, long q) const;

  /// Exact lattice value when s lies on the lattice, bilinear (periodic) otherwise.
  Vec2 operator()(Point s) const;

 private:
  GridSpec grid_;
  std::vector<Vec2> samples_;
};

/// Scalar potential f(x,y) = sum_t s_t sin(φ_t) + c_t cos(φ_t) with
/// φ_t = 2π(k_t x/A + l_t y/B), used to build divergence-free fields.
class TrigPotential {
 public:
  struct Term {
    int k = 0;
    int l = 0;
    double sin_coef = 0.0;
    double cos_coef = 0.0;
  };

  TrigPotential(double width, double height, std::vector<Term> terms);

  double width() const { return width_; }
  double height() const { return height_; }
  const std::vector<Term>& terms() const { return terms_; }

  double value(Point s) const;
  Vec2 gradient(Point s) const;

 private:
  double width_;
  double height_;
  std::vector<Term> terms_;
};

/// Base field of a FixedFieldScaled spec: closed form (exact anywhere) or lattice samples.
class BaseField {
 public:
  using Function = std::function<Vec2(Point)>;

  BaseField(double width, double height, Function fn);
  explicit BaseField(LatticeField lattice);

  double width() const { return width_; }
  double height() const { return height_; }
  bool is_closed_form() const { return static_cast<bool>(fn_); }
  const LatticeField* lattice() const { return lattice_ ? &*lattice_ : nullptr; }

  Vec2 operator()(Point s) const;

 private:
  double width_;
  double height_;
  Function fn_;
  std::shared_ptr<const LatticeField> lattice_;
};

/// Pre-defined field scaled by √β; H = γI + β v vᵀ.
class FixedFieldScaled {
 public:
  /// Throws std::invalid_argument when beta < 0.
  FixedFieldScaled(std::shared_ptr<const BaseField> base, double beta);

  double beta() const { return scale_ * scale_; }
  double scale() const { return scale_; }
  const std::shared_ptr<const BaseField>& base() const { return base_; }

  Vec2 operator()(Point s) const;

 private:
  std::shared_ptr<const BaseField> base_;
  double scale_;
};

using VectorFieldSpec = std::variant<ConstantVector, FixedFieldScaled, FourierVectorField>;

/// H(s) = γ I + v(s) v(s)ᵀ.
class AnisotropySpec {
 public:
  /// Throws std::invalid_argument when gamma <= 0.
  AnisotropySpec(double gamma, VectorFieldSpec field);

  double gamma() const { return gamma_; }
  const VectorFieldSpec& field() const { return field_; }

 private:
  double gamma_;
  VectorFieldSpec field_;
};

/// Evaluates v(s). Points must lie in [0,A) x [0,B) of the field's domain;
/// throws std::domain_error otherwise. Constant fields accept any point.
Vec2 eval_vector_field(const VectorFieldSpec& spec, Point s);

Sym2 eval_H(const AnisotropySpec& spec, Point s);

Sym2 diffusion_tensor(double gamma, Vec2 v);

/// Raised when a parameter vector has the wrong length for its layout.
class LayoutError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a parameter vector violates a positivity constraint (γ <= 0, β < 0).
class InfeasibleParameters : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Maps parameter vectors θ to anisotropy specs and back.
///
/// Fourier layout: θ = [γ, A¹₀₀, A²₀₀, then per frequency A¹, B¹, A², B²].
/// The constant-vector layout is the Fourier layout without frequencies.
/// Fixed-field layout: θ = [γ, β].
class ParamLayout {
 public:
  static ParamLayout fourier(double width, double height, FrequencySet freqs);
  static ParamLayout constant(double width, double height);
  static ParamLayout fixed_field(std::shared_ptr<const BaseField> base);

  bool is_fixed_field() const { return static_cast<bool>(base_); }
  const FrequencySet& frequencies() const { return freqs_; }
  const std::shared_ptr<const BaseField>& base() const { return base_; }
  double width() const { return width_; }
  double height() const { return height_; }

  std::size_t size() const;
  std::vector<std::string> names() const;

  /// False if γ <= 0 (or β < 0 for fixed fields); throws LayoutError on length mismatch.
  bool feasible(std::span<const double> theta) const;

  AnisotropySpec unpack(std::span<const double> theta) const;
  std::vector<double> pack(const AnisotropySpec& spec) const;

  /// Indices of θ that parametrize the vector field linearly (v flips sign with them).
  std::vector<std::size_t> vector_field_indices() const;

 private:
  ParamLayout() = default;

  double width_ = 0.0;
  double height_ = 0.0;
  FrequencySet freqs_;
  std::shared_ptr<const BaseField> base_;
};

/// v = R₉₀ ∇f sampled on the half-step lattice with centred differences of f.
LatticeField rotated_gradient_field(const GridSpec& grid, const std::function<double(Point)>& f);

/// v = R₉₀ ∇f sampled on the half-step lattice from an analytic gradient.
LatticeField rotated_gradient_field(const GridSpec& grid,
                                    const std::function<Vec2(Point)>& gradient);

/// R₉₀ ∇f as a closed-form base field.
BaseField rotated_gradient_base(const TrigPotential& potential);

}  // namespace nsgrf
