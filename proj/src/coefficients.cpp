#include "nsgrf/coefficients.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace nsgrf {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require_in_domain(Point s, double width, double height) {
  if (!(s.x >= 0.0 && s.x < width && s.y >= 0.0 && s.y < height)) {
    std::ostringstream msg;
    msg << "vector field evaluated outside [0," << width << ")x[0," << height << "): (" << s.x
        << ", " << s.y << ")";
    throw std::domain_error(msg.str());
  }
}

std::string frequency_suffix(const Frequency& f) {
  return "_" + std::to_string(f.k) + "_" + std::to_string(f.l);
}

}  // namespace

KappaSpec::KappaSpec(double kappa_sq) : kappa_sq_(kappa_sq) {
  if (!(kappa_sq > 0.0) || !std::isfinite(kappa_sq)) {
    throw std::invalid_argument("kappa_sq must be positive and finite");
  }
}

FrequencySet::FrequencySet(std::vector<Frequency> freqs) : freqs_(std::move(freqs)) {
  for (const auto& f : freqs_) {
    const bool in_half_plane = f.k > 0 || (f.k == 0 && f.l > 0);
    if (!in_half_plane) {
      throw std::invalid_argument("frequency (" + std::to_string(f.k) + "," +
                                  std::to_string(f.l) +
                                  ") is not in the non-redundant half-plane (k>0, or k=0 and l>0)");
    }
  }
  std::sort(freqs_.begin(), freqs_.end());
  if (std::adjacent_find(freqs_.begin(), freqs_.end()) != freqs_.end()) {
    throw std::invalid_argument("duplicate frequency in frequency set");
  }
}

FourierVectorField::FourierVectorField(double width, double height, Vec2 constant,
                                       FrequencySet freqs, std::vector<FourierTerm> terms)
    : width_(width),
      height_(height),
      constant_(constant),
      freqs_(std::move(freqs)),
      terms_(std::move(terms)) {
  if (!(width > 0.0) || !(height > 0.0)) {
    throw std::invalid_argument("Fourier field: domain must have positive size");
  }
  if (terms_.size() != freqs_.size()) {
    throw std::invalid_argument("Fourier field: one coefficient quadruple per frequency required");
  }
}

Vec2 FourierVectorField::operator()(Point s) const {
  Vec2 v = constant_;
  for (std::size_t t = 0; t < terms_.size(); ++t) {
    const Frequency& f = freqs_[t];
    const double phase = kTwoPi * (f.k * s.x / width_ + f.l * s.y / height_);
    const double c = std::cos(phase);
    const double sn = std::sin(phase);
    v.x += terms_[t].a1 * c + terms_[t].b1 * sn;
    v.y += terms_[t].a2 * c + terms_[t].b2 * sn;
  }
  return v;
}

LatticeField::LatticeField(GridSpec grid, std::vector<Vec2> samples)
    : grid_(grid), samples_(std::move(samples)) {
  if (samples_.size() != 4 * grid_.size()) {
    throw std::invalid_argument("lattice field: expected 2M x 2N samples");
  }
}

Vec2 LatticeField::at(long p, long q) const {
  const long px = static_cast<long>(lattice_x());
  const long qy = static_cast<long>(lattice_y());
  const long pw = ((p % px) + px) % px;
  const long qw = ((q % qy) + qy) % qy;
  return samples_[static_cast<std::size_t>(qw * px + pw)];
}

Vec2 LatticeField::operator()(Point s) const {
  const double fp = s.x / (0.5 * grid_.step_x());
  const double fq = s.y / (0.5 * grid_.step_y());
  const double rp = std::round(fp);
  const double rq = std::round(fq);
  if (std::abs(fp - rp) < 1e-9 && std::abs(fq - rq) < 1e-9) {
    return at(static_cast<long>(rp), static_cast<long>(rq));
  }
  const double p0 = std::floor(fp);
  const double q0 = std::floor(fq);
  const double tp = fp - p0;
  const double tq = fq - q0;
  const long p = static_cast<long>(p0);
  const long q = static_cast<long>(q0);
  const Vec2 v00 = at(p, q), v10 = at(p + 1, q), v01 = at(p, q + 1), v11 = at(p + 1, q + 1);
  auto mix = [&](double a, double b, double c, double d) {
    return (1 - tp) * (1 - tq) * a + tp * (1 - tq) * b + (1 - tp) * tq * c + tp * tq * d;
  };
  return {mix(v00.x, v10.x, v01.x, v11.x), mix(v00.y, v10.y, v01.y, v11.y)};
}

TrigPotential::TrigPotential(double width, double height, std::vector<Term> terms)
    : width_(width), height_(height), terms_(std::move(terms)) {
  if (!(width > 0.0) || !(height > 0.0)) {
    throw std::invalid_argument("potential: domain must have positive size");
  }
}

double TrigPotential::value(Point s) const {
  double f = 0.0;
  for (const auto& t : terms_) {
    const double phase = kTwoPi * (t.k * s.x / width_ + t.l * s.y / height_);
    f += t.sin_coef * std::sin(phase) + t.cos_coef * std::cos(phase);
  }
  return f;
}

Vec2 TrigPotential::gradient(Point s) const {
  Vec2 g;
  for (const auto& t : terms_) {
    const double phase = kTwoPi * (t.k * s.x / width_ + t.l * s.y / height_);
    const double d = t.sin_coef * std::cos(phase) - t.cos_coef * std::sin(phase);
    g.x += d * kTwoPi * t.k / width_;
    g.y += d * kTwoPi * t.l / height_;
  }
  return g;
}

BaseField::BaseField(double width, double height, Function fn)
    : width_(width), height_(height), fn_(std::move(fn)) {
  if (!fn_) throw std::invalid_argument("base field: empty function");
}

BaseField::BaseField(LatticeField lattice)
    : width_(lattice.grid().width()),
      height_(lattice.grid().height()),
      lattice_(std::make_shared<const LatticeField>(std::move(lattice))) {}

Vec2 BaseField::operator()(Point s) const {
  require_in_domain(s, width_, height_);
  return fn_ ? fn_(s) : (*lattice_)(s);
}

FixedFieldScaled::FixedFieldScaled(std::shared_ptr<const BaseField> base, double beta)
    : base_(std::move(base)) {
  if (!base_) throw std::invalid_argument("fixed field: missing base field");
  if (!(beta >= 0.0) || !std::isfinite(beta)) {
    throw std::invalid_argument("fixed field: beta must be non-negative");
  }
  scale_ = std::sqrt(beta);
}

Vec2 FixedFieldScaled::operator()(Point s) const {
  const Vec2 b = (*base_)(s);
  return {scale_ * b.x, scale_ * b.y};
}

AnisotropySpec::AnisotropySpec(double gamma, VectorFieldSpec field)
    : gamma_(gamma), field_(std::move(field)) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw std::invalid_argument("gamma must be positive and finite");
  }
}

Vec2 eval_vector_field(const VectorFieldSpec& spec, Point s) {
  struct Visitor {
    Point s;
    Vec2 operator()(const ConstantVector& c) const { return c.v; }
    Vec2 operator()(const FixedFieldScaled& f) const { return f(s); }
    Vec2 operator()(const FourierVectorField& f) const {
      require_in_domain(s, f.width(), f.height());
      return f(s);
    }
  };
  return std::visit(Visitor{s}, spec);
}

Sym2 diffusion_tensor(double gamma, Vec2 v) {
  return {gamma + v.x * v.x, v.x * v.y, gamma + v.y * v.y};
}

Sym2 eval_H(const AnisotropySpec& spec, Point s) {
  return diffusion_tensor(spec.gamma(), eval_vector_field(spec.field(), s));
}

ParamLayout ParamLayout::fourier(double width, double height, FrequencySet freqs) {
  if (!(width > 0.0) || !(height > 0.0)) {
    throw std::invalid_argument("layout: domain must have positive size");
  }
  ParamLayout layout;
  layout.width_ = width;
  layout.height_ = height;
  layout.freqs_ = std::move(freqs);
  return layout;
}

ParamLayout ParamLayout::constant(double width, double height) {
  return fourier(width, height, FrequencySet{});
}

ParamLayout ParamLayout::fixed_field(std::shared_ptr<const BaseField> base) {
  if (!base) throw std::invalid_argument("layout: missing base field");
  ParamLayout layout;
  layout.width_ = base->width();
  layout.height_ = base->height();
  layout.base_ = std::move(base);
  return layout;
}

std::size_t ParamLayout::size() const { return is_fixed_field() ? 2 : 3 + 4 * freqs_.size(); }

std::vector<std::string> ParamLayout::names() const {
  if (is_fixed_field()) return {"gamma", "beta"};
  std::vector<std::string> out{"gamma", "A1_0_0", "A2_0_0"};
  for (const auto& f : freqs_.frequencies()) {
    const std::string sfx = frequency_suffix(f);
    out.push_back("A1" + sfx);
    out.push_back("B1" + sfx);
    out.push_back("A2" + sfx);
    out.push_back("B2" + sfx);
  }
  return out;
}

bool ParamLayout::feasible(std::span<const double> theta) const {
  if (theta.size() != size()) {
    throw LayoutError("parameter vector has length " + std::to_string(theta.size()) +
                      ", layout expects " + std::to_string(size()));
  }
  for (double t : theta) {
    if (!std::isfinite(t)) return false;
  }
  if (!(theta[0] > 0.0)) return false;
  if (is_fixed_field() && !(theta[1] >= 0.0)) return false;
  return true;
}

AnisotropySpec ParamLayout::unpack(std::span<const double> theta) const {
  if (!feasible(theta)) {
    throw InfeasibleParameters("parameter vector violates gamma > 0 / beta >= 0");
  }
  if (is_fixed_field()) {
    return AnisotropySpec(theta[0], FixedFieldScaled(base_, theta[1]));
  }
  std::vector<FourierTerm> terms(freqs_.size());
  for (std::size_t f = 0; f < terms.size(); ++f) {
    const std::size_t o = 3 + 4 * f;
    terms[f] = {theta[o], theta[o + 1], theta[o + 2], theta[o + 3]};
  }
  return AnisotropySpec(
      theta[0], FourierVectorField(width_, height_, {theta[1], theta[2]}, freqs_, std::move(terms)));
}

std::vector<double> ParamLayout::pack(const AnisotropySpec& spec) const {
  std::vector<double> theta{spec.gamma()};
  if (is_fixed_field()) {
    const auto* fixed = std::get_if<FixedFieldScaled>(&spec.field());
    if (fixed == nullptr) throw LayoutError("fixed-field layout needs a fixed-field spec");
    theta.push_back(fixed->beta());
    return theta;
  }
  if (const auto* c = std::get_if<ConstantVector>(&spec.field())) {
    // a constant field is the Fourier series with every non-constant term zero
    theta.resize(size(), 0.0);
    theta[1] = c->v.x;
    theta[2] = c->v.y;
    return theta;
  }
  const auto* fourier = std::get_if<FourierVectorField>(&spec.field());
  if (fourier == nullptr) throw LayoutError("Fourier layout needs a Fourier or constant spec");
  if (!(fourier->frequencies() == freqs_)) {
    throw LayoutError("Fourier spec frequencies differ from the layout's");
  }
  theta.push_back(fourier->constant().x);
  theta.push_back(fourier->constant().y);
  for (const auto& t : fourier->terms()) {
    theta.insert(theta.end(), {t.a1, t.b1, t.a2, t.b2});
  }
  return theta;
}

std::vector<std::size_t> ParamLayout::vector_field_indices() const {
  std::vector<std::size_t> idx;
  if (is_fixed_field()) return idx;
  for (std::size_t k = 1; k < size(); ++k) idx.push_back(k);
  return idx;
}

LatticeField rotated_gradient_field(const GridSpec& grid, const std::function<double(Point)>& f) {
  const long px = static_cast<long>(2 * grid.cells_x());
  const long qy = static_cast<long>(2 * grid.cells_y());
  std::vector<double> values(static_cast<std::size_t>(px * qy));
  for (long q = 0; q < qy; ++q) {
    for (long p = 0; p < px; ++p) {
      values[static_cast<std::size_t>(q * px + p)] = f(half_step_point(grid, p, q));
    }
  }
  auto value = [&](long p, long q) {
    p = ((p % px) + px) % px;
    q = ((q % qy) + qy) % qy;
    return values[static_cast<std::size_t>(q * px + p)];
  };
  // neighbours on the half-step lattice are hx/2 apart, so the centred span is hx
  std::vector<Vec2> samples(values.size());
  for (long q = 0; q < qy; ++q) {
    for (long p = 0; p < px; ++p) {
      const double fx = (value(p + 1, q) - value(p - 1, q)) / grid.step_x();
      const double fy = (value(p, q + 1) - value(p, q - 1)) / grid.step_y();
      samples[static_cast<std::size_t>(q * px + p)] = {-fy, fx};
    }
  }
  return LatticeField(grid, std::move(samples));
}

LatticeField rotated_gradient_field(const GridSpec& grid,
                                    const std::function<Vec2(Point)>& gradient) {
  const long px = static_cast<long>(2 * grid.cells_x());
  const long qy = static_cast<long>(2 * grid.cells_y());
  std::vector<Vec2> samples(static_cast<std::size_t>(px * qy));
  for (long q = 0; q < qy; ++q) {
    for (long p = 0; p < px; ++p) {
      const Vec2 g = gradient(half_step_point(grid, p, q));
      samples[static_cast<std::size_t>(q * px + p)] = {-g.y, g.x};
    }
  }
  return LatticeField(grid, std::move(samples));
}

BaseField rotated_gradient_base(const TrigPotential& potential) {
  return BaseField(potential.width(), potential.height(), [potential](Point s) {
    const Vec2 g = potential.gradient(s);
    return Vec2{-g.y, g.x};
  });
}

}  // namespace nsgrf
