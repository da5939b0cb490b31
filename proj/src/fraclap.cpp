#include "fpme/fraclap.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fpme/error.hpp"

namespace fpme {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(10);
  os << x;
  return os.str();
}

bool same(double x, double y) { return std::abs(x - y) <= 1e-12 * std::max(1.0, std::abs(y)); }

}  // namespace

double RadialProfile::operator()(double r) const {
  if (shape == ProfileShape::rising) return lambda * std::pow(R * R + r * r, -q);
  if (r >= R) return 0.0;
  return lambda * std::pow((R - r) * (R + r), q);
}

double RadialProfile::derivative(double r) const {
  if (shape == ProfileShape::rising) return -2.0 * q * r * lambda * std::pow(R * R + r * r, -q - 1.0);
  if (r >= R) return 0.0;
  return -2.0 * q * r * lambda * std::pow((R - r) * (R + r), q - 1.0);
}

double HyperField::operator()(double r) const { return prefactor * hyper2f1(spec, -(r * r) / (R * R)); }

double HyperField::derivative(double r) const {
  return prefactor * hyper2f1_derivative(spec, -(r * r) / (R * R)) * (-2.0 * r / (R * R));
}

double HyperField::second_derivative(double r) const {
  const double z = -(r * r) / (R * R), R2 = R * R;
  const Hyper2F1Spec up{spec.a + 1.0, spec.b + 1.0, spec.c + 1.0, spec.domain};
  const double d1 = hyper2f1_derivative(spec, z);
  const double d2 = spec.a * spec.b / spec.c * hyper2f1_derivative(up, z);
  return prefactor * (d2 * 4.0 * r * r / (R2 * R2) - 2.0 * d1 / R2);
}

void validate(const FractionalOp& op) {
  require(op.N >= 1, ErrorCode::parameter, "dimension N must be >= 1");
  require(std::abs(op.s) > 0.0 && std::abs(op.s) < 1.0, ErrorCode::parameter,
          "fractional order must satisfy 0 < |s| < 1, got s = " + fmt(op.s));
}

void validate(const RadialProfile& p) {
  require(p.N >= 1, ErrorCode::parameter, "dimension N must be >= 1");
  require(p.q > 0.0, ErrorCode::parameter, "profile exponent q must be positive, got " + fmt(p.q));
  require(p.R > 0.0, ErrorCode::parameter, "profile scale R must be positive, got " + fmt(p.R));
  require(p.lambda > 0.0, ErrorCode::parameter, "profile amplitude must be positive, got " + fmt(p.lambda));
}

std::vector<std::string> validity_warnings(const FractionalOp& op, const RadialProfile& p) {
  std::vector<std::string> w;
  const double half_n = 0.5 * op.N;
  if (op.s < 0.0) {
    const double t = -op.s;
    if (!(half_n > t))
      w.push_back("inverse operator with N/2 <= |s| (" + fmt(half_n) + " <= " + fmt(t) +
                  "): the Riesz kernel is not locally integrable");
    if (p.shape == ProfileShape::rising && !(p.q > t))
      w.push_back("inverse operator on a rising profile with q <= |s| (" + fmt(p.q) + " <= " + fmt(t) +
                  "): the potential diverges at infinity");
  }
  if (p.N != op.N) w.push_back("profile dimension differs from operator dimension");
  return w;
}

HyperField as_hyper(const RadialProfile& p) {
  validate(p);
  require(p.shape == ProfileShape::rising, ErrorCode::precondition, "as_hyper needs a rising profile");
  HyperField f;
  f.prefactor = p.lambda * std::pow(p.R, -2.0 * p.q);
  f.spec = {p.q, 0.5 * p.N, 0.5 * p.N, ArgDomain::negative_axis};
  f.R = p.R;
  return f;
}

HyperField frac_lap_hyper(const FractionalOp& op, const HyperField& f) {
  validate(op);
  require(same(f.spec.c, 0.5 * op.N), ErrorCode::precondition,
          "general identity needs c = N/2, got c = " + fmt(f.spec.c));
  const double sg = op.s;
  const double A = f.spec.a, B = f.spec.b;
  HyperField out = f;
  out.prefactor = f.prefactor * std::pow(2.0, 2.0 * sg) * std::pow(f.R, -2.0 * sg) * gamma(A + sg) *
                  gamma(B + sg) / (gamma(A) * gamma(B));
  out.spec = {A + sg, B + sg, f.spec.c, ArgDomain::negative_axis};
  if (sg < 0.0 && !(std::min(A, B) > -sg))
    out.warnings.push_back("inverse operator applied to a field decaying like r^{-2 min(a,b)} with min(a,b) <= |s|");
  if (sg > 0.0 && A + sg > 0.5 * op.N + 1.0 && B + sg > 0.5 * op.N + 1.0)
    out.warnings.push_back("result parameters both exceed N/2 + 1; decay is limited by N + 2s instead");
  return out;
}

HyperField frac_lap_rising(const FractionalOp& op, const RadialProfile& p) {
  validate(op);
  validate(p);
  require(p.shape == ProfileShape::rising, ErrorCode::precondition, "frac_lap_rising needs a rising profile");
  require(p.N == op.N, ErrorCode::precondition, "profile and operator dimensions differ");
  HyperField out = frac_lap_hyper(op, as_hyper(p));
  for (auto& w : validity_warnings(op, p)) out.warnings.push_back(w);
  return out;
}

SpecialResult frac_lap_rising_special(const FractionalOp& op, const RadialProfile& p) {
  validate(op);
  validate(p);
  require(p.shape == ProfileShape::rising, ErrorCode::precondition, "special cases need a rising profile");
  require(p.N == op.N, ErrorCode::precondition, "profile and operator dimensions differ");
  const double s = op.s, h = 0.5 * p.N;
  if (same(p.q, h - s)) {
    SpecialResult r{SpecialCase::ii_q_eq_half_n_minus_s, {}, p};
    r.rising.q = h + s;
    r.rising.lambda = p.lambda * std::pow(2.0, 2.0 * s) * std::pow(p.R, 2.0 * s) * gamma(h + s) / gamma(h - s);
    r.field = as_hyper(r.rising);
    return r;
  }
  if (same(p.q, h + 1.0 - s)) {
    SpecialResult r{SpecialCase::i_q_eq_half_n_plus_1_minus_s, {}, {}};
    r.field.prefactor = p.lambda * std::pow(2.0, 2.0 * s - 1.0) * p.N * std::pow(p.R, -p.N - 2.0) *
                        gamma(h + s) / gamma(h + 1.0 - s);
    r.field.spec = {h + 1.0, h + s, h, ArgDomain::negative_axis};
    r.field.R = p.R;
    return r;
  }
  fail(ErrorCode::precondition, "q = " + fmt(p.q) + " matches neither N/2 + 1 - s = " + fmt(h + 1.0 - s) +
                                    " nor N/2 - s = " + fmt(h - s));
}

CompactConstants compact_constants(double q, double s, int N) {
  const double h = 0.5 * N;
  const double common = std::pow(2.0, -2.0 * s) * gamma(q + 1.0) * gamma(h - s);
  return {common / (gamma(h) * gamma(q + s + 1.0)), common / (gamma(s) * gamma(h + q + 1.0))};
}

namespace {

struct CompactSetup {
  double s, h, q, R, lambda;
  CompactConstants C;
};

CompactSetup compact_setup(const FractionalOp& op, const RadialProfile& p) {
  validate(op);
  validate(p);
  require(p.shape == ProfileShape::compact, ErrorCode::precondition, "inverse compact formula needs a compact profile");
  const double s = std::abs(op.s);
  const double h = 0.5 * p.N;
  require(h > s, ErrorCode::precondition, "inverse fractional Laplacian of a compact profile needs N/2 > s");
  return {s, h, p.q, p.R, p.lambda, compact_constants(p.q, s, p.N)};
}

}  // namespace

double inv_frac_lap_compact(const FractionalOp& op, const RadialProfile& p, double r) {
  const CompactSetup c = compact_setup(op, p);
  require(r >= 0.0, ErrorCode::domain, "radius must be non-negative");
  const double x = (r / c.R) * (r / c.R);
  if (r <= c.R) {
    double F = x < 1.0 ? hyper2f1({c.h - c.s, -c.q - c.s, c.h, ArgDomain::unit_disk}, x)
                       : hyper2f1_at_one(c.h - c.s, -c.q - c.s, c.h);
    return c.lambda * c.C.inside * std::pow(c.R, 2.0 * c.q + 2.0 * c.s) * F;
  }
  const double xi = 1.0 / x;
  double F = hyper2f1({c.h - c.s, 1.0 - c.s, c.h + c.q + 1.0, ArgDomain::unit_disk}, xi);
  return c.lambda * c.C.outside * std::pow(c.R, 2.0 * c.h + 2.0 * c.q) * std::pow(r, 2.0 * c.s - 2.0 * c.h) * F;
}

double inv_frac_lap_compact_derivative(const FractionalOp& op, const RadialProfile& p, double r) {
  const CompactSetup c = compact_setup(op, p);
  require(r >= 0.0, ErrorCode::domain, "radius must be non-negative");
  if (r < c.R) {
    const double x = (r / c.R) * (r / c.R);
    Hyper2F1Spec sp{c.h - c.s, -c.q - c.s, c.h, ArgDomain::unit_disk};
    return c.lambda * c.C.inside * std::pow(c.R, 2.0 * c.q + 2.0 * c.s) * hyper2f1_derivative(sp, x) * 2.0 * r /
           (c.R * c.R);
  }
  require(r > c.R || c.q + 2.0 * c.s > 1.0, ErrorCode::domain,
          "derivative at |y| = R is unbounded when q + 2s <= 1");
  const double xi = (c.R / r) * (c.R / r);
  Hyper2F1Spec sp{c.h - c.s, 1.0 - c.s, c.h + c.q + 1.0, ArgDomain::unit_disk};
  const double e = 2.0 * c.s - 2.0 * c.h;
  double F, dF;
  if (xi < 1.0) {
    F = hyper2f1(sp, xi);
    dF = hyper2f1_derivative(sp, xi);
  } else {
    F = hyper2f1_at_one(sp.a, sp.b, sp.c);
    dF = sp.a * sp.b / sp.c * hyper2f1_at_one(sp.a + 1.0, sp.b + 1.0, sp.c + 1.0);
  }
  const double pre = c.lambda * c.C.outside * std::pow(c.R, 2.0 * c.h + 2.0 * c.q);
  return pre * (e * std::pow(r, e - 1.0) * F + std::pow(r, e) * dF * (-2.0 * c.R * c.R / (r * r * r)));
}

double FourierField::operator()(double xi) const {
  xi = std::abs(xi);
  require(xi > 0.0, ErrorCode::domain, "Fourier field is evaluated at xi != 0");
  return coefficient * std::pow(xi, power) * bessel_k(mu, xi * R);
}

FourierField fourier_pair(const RadialProfile& p) {
  validate(p);
  require(p.shape == ProfileShape::rising, ErrorCode::precondition, "Fourier pair needs a rising profile");
  const double h = 0.5 * p.N;
  const double rho = -p.q, mu = h - p.q;
  FourierField f;
  f.coefficient = std::pow(2.0, rho + 1.0) * std::pow(2.0 * kPi, h) * gamma(h) * std::pow(p.R, h - rho) /
                  (gamma(0.5 * h + 0.5 * (mu - rho)) * gamma(0.5 * h - 0.5 * (mu + rho)));
  f.coefficient *= p.lambda * std::pow(p.R, -2.0 * p.q);
  f.power = -rho - h;
  f.mu = mu;
  f.R = p.R;
  return f;
}

double radial_transform(const std::function<double(double)>& f, Direction dir, int N, double k, double scale,
                        double support) {
  require(N >= 1, ErrorCode::parameter, "dimension N must be >= 1");
  require(k > 0.0, ErrorCode::domain, "radial transform is evaluated at k > 0");
  const double h = 0.5 * N;
  quad::HankelOptions opt;
  opt.scale = scale;
  opt.upper = support;
  double I = quad::hankel_integral(f, h - 1.0, h, k, opt);
  double pre = std::pow(2.0 * kPi, dir == Direction::forward ? h : -h);
  return pre * std::pow(k, 1.0 - h) * I;
}

// ---------------------------------------------------------------------------
// Numerical oracle

namespace {

// Piecewise Chebyshev interpolant (first-kind nodes, barycentric evaluation).
class ChebTable {
public:
  void add_panel(double a, double b, int n, const std::function<double(double)>& f) {
    Panel p{a, b, {}, {}};
    p.x.resize(n);
    p.v.resize(n);
    for (int j = 0; j < n; ++j) {
      double t = std::cos((2.0 * j + 1.0) * kPi / (2.0 * n));
      p.x[j] = t;
      p.v[j] = f(0.5 * (a + b) + 0.5 * (b - a) * t);
    }
    panels_.push_back(std::move(p));
  }
  double lo() const { return panels_.front().a; }
  double hi() const { return panels_.back().b; }
  double max_abs_last() const {
    double m = 0.0;
    for (double v : panels_.back().v) m = std::max(m, std::abs(v));
    return m;
  }
  double operator()(double x) const {
    if (x < lo() || x > hi()) return 0.0;
    auto it = std::upper_bound(panels_.begin(), panels_.end(), x, [](double v, const Panel& p) { return v < p.b; });
    if (it == panels_.end()) --it;
    const Panel& p = *it;
    const double t = (2.0 * x - p.a - p.b) / (p.b - p.a);
    const int n = static_cast<int>(p.x.size());
    double num = 0.0, den = 0.0;
    for (int j = 0; j < n; ++j) {
      double d = t - p.x[j];
      if (d == 0.0) return p.v[j];
      double w = ((j & 1) ? -1.0 : 1.0) * std::sin((2.0 * j + 1.0) * kPi / (2.0 * n)) / d;
      num += w * p.v[j];
      den += w;
    }
    return num / den;
  }

private:
  struct Panel {
    double a, b;
    std::vector<double> x, v;
  };
  std::vector<Panel> panels_;
};

constexpr double kEtaMin = 1e-8;    // in units of 1/R
constexpr double kEtaCap = 80.0;    // in units of 1/R
constexpr double kTailCut = 1e-15;  // relative to the table maximum
constexpr int kGeomNodes = 20;
constexpr int kUniformNodes = 16;

}  // namespace

struct NumericFracLap::Impl {
  FractionalOp op;
  bool riesz = false;
  std::function<double(double)> f;
  double scale = 1.0;
  double support = quad::kInf;

  ChebTable G;  // |xi|^{2s} times the forward transform
  double low_value = 0.0, low_power = 0.0;

  void build() {
    const int N = op.N;
    const double s = op.s;
    auto Ghat = [&](double eta) {
      return std::pow(eta, 2.0 * s) * radial_transform(f, Direction::forward, N, eta, scale, support);
    };
    const double unit = 1.0 / scale;
    double a = kEtaMin * unit;
    double gmax = 0.0;
    while (a < unit) {
      double b = std::min(2.0 * a, unit);
      G.add_panel(a, b, kGeomNodes, Ghat);
      gmax = std::max(gmax, G.max_abs_last());
      a = b;
    }
    int quiet = 0;
    while (a < kEtaCap * unit) {
      double b = a + unit;
      G.add_panel(a, b, kUniformNodes, Ghat);
      double m = G.max_abs_last();
      gmax = std::max(gmax, m);
      quiet = (m < kTailCut * gmax) ? quiet + 1 : 0;
      a = b;
      if (quiet == 2) break;
    }
    const double e0 = G.lo(), e1 = 2.0 * G.lo();
    const double g0 = G(e0), g1 = G(e1);
    low_value = g0;
    low_power = (g0 != 0.0 && g1 / g0 > 0.0) ? std::log(g1 / g0) / std::log(2.0) : 0.0;
  }

  double eval(double r) const {
    const int N = op.N;
    const double h = 0.5 * N;
    if (riesz) return riesz_potential(-op.s, N, f, r, support, scale);
    const double eta0 = G.lo();
    const double norm = std::pow(2.0 * kPi, -h);
    // Power-law continuation of G below the first table node.
    const double p = low_power;
    if (r == 0.0) {
      double sum = low_value * std::pow(eta0, h + h) / (N + p);
      const double eta1 = G.hi();
      double a = eta0;
      while (a < eta1) {
        double b = std::min(a < 1.0 / scale ? 2.0 * a : a + 1.0 / scale, eta1);
        sum += quad::gauss_kronrod([&](double e) { return std::pow(e, N - 1.0) * G(e); }, a, b, 1e-13);
        a = b;
      }
      return norm * sum / (std::pow(2.0, h - 1.0) * gamma(h));
    }
    const double nu = h - 1.0;
    double low = low_value * std::pow(eta0, N + 0.0) / (N + p) * std::pow(0.5 * r, nu) / gamma(nu + 1.0);
    quad::HankelOptions opt;
    opt.scale = 1.0 / scale;
    opt.lower = eta0;
    opt.upper = G.hi();
    opt.rel_tol = 1e-13;
    double I = quad::hankel_integral([this](double e) { return G(e); }, nu, h, r, opt);
    return norm * std::pow(r, 1.0 - h) * (I + low);
  }
};

NumericFracLap::NumericFracLap(const FractionalOp& op, const RadialProfile& p) : impl_(std::make_unique<Impl>()) {
  validate(op);
  validate(p);
  require(p.N == op.N, ErrorCode::precondition, "profile and operator dimensions differ");
  impl_->op = op;
  impl_->f = [p](double r) { return p(r); };
  impl_->scale = p.R;
  if (p.shape == ProfileShape::compact) {
    require(op.s < 0.0, ErrorCode::precondition,
            "numeric oracle for compact profiles is implemented for the inverse operator only");
    require(0.5 * op.N > -op.s, ErrorCode::precondition, "Riesz potential needs N/2 > |s|");
    impl_->riesz = true;
    impl_->support = p.R;
    return;
  }
  if (op.s < 0.0) require(p.q > -op.s, ErrorCode::precondition, "inverse operator needs q > |s|");
  impl_->build();
}

NumericFracLap::NumericFracLap(const FractionalOp& op, std::function<double(double)> f, double scale)
    : impl_(std::make_unique<Impl>()) {
  validate(op);
  require(scale > 0.0, ErrorCode::parameter, "scale must be positive");
  impl_->op = op;
  impl_->f = std::move(f);
  impl_->scale = scale;
  impl_->build();
}

NumericFracLap::~NumericFracLap() = default;
NumericFracLap::NumericFracLap(NumericFracLap&&) noexcept = default;
NumericFracLap& NumericFracLap::operator=(NumericFracLap&&) noexcept = default;

double NumericFracLap::operator()(double r) const {
  require(r >= 0.0, ErrorCode::domain, "radius must be non-negative");
  return impl_->eval(r);
}

double NumericFracLap::forward(double xi) const {
  require(!impl_->riesz, ErrorCode::precondition, "no forward table on the Riesz route");
  return impl_->G(xi) * std::pow(xi, -2.0 * impl_->op.s);
}

double numeric_frac_lap(const FractionalOp& op, const RadialProfile& p, double r) {
  return NumericFracLap(op, p)(r);
}

namespace {

// (A^e - B^e)/e without cancellation for small e.
double power_difference(double A, double B, double e) {
  double la = std::log(A), lb = std::log(B);
  if (e == 0.0) return la - lb;
  return std::exp(e * lb) * std::expm1(e * (la - lb)) / e;
}

// Angular integral of |x - y|^{2s-N} over the sphere of radius rho, times
// rho^{N-1}; d = |r - rho| is passed separately so it never cancels.
double riesz_kernel(double s, int N, double r, double rho, double d) {
  const double e = 2.0 * s - N;
  if (r == 0.0) {
    double area = 2.0 * std::pow(kPi, 0.5 * N) / gamma(0.5 * N);
    return area * std::pow(rho, N - 1.0 + e);
  }
  if (N == 1) return std::pow(d, e) + std::pow(r + rho, e);
  if (N == 3) return 2.0 * kPi * rho / r * power_difference(r + rho, d, 2.0 * s - 1.0);
  if (N == 2) {
    const double d2 = d * d;
    auto g = [&](double th) {
      double sn = std::sin(0.5 * th);
      double base = d2 + 4.0 * r * rho * sn * sn;
      return base > 0.0 ? std::pow(base, s - 1.0) : 0.0;  // underflow at the integrable spike
    };
    return 2.0 * rho * quad::tanh_sinh(g, 0.0, kPi, 1e-12);
  }
  fail(ErrorCode::parameter, "Riesz potential implemented for N = 1, 2, 3");
}

}  // namespace

double riesz_potential(double s, int N, const std::function<double(double)>& f, double r, double support,
                       double scale) {
  require(s > 0.0 && s < 1.0, ErrorCode::parameter, "Riesz order must lie in (0, 1)");
  require(0.5 * N > s, ErrorCode::precondition, "Riesz potential needs N/2 > s");
  require(r >= 0.0, ErrorCode::domain, "radius must be non-negative");
  const double c = gamma(0.5 * N - s) / (std::pow(4.0, s) * std::pow(kPi, 0.5 * N) * gamma(s));
  // Integrate in the distance t from the singular shell rho = r.
  auto below = [&](double t) {
    if (t <= 0.0) return 0.0;
    double rho = r - t;
    return f(rho) * riesz_kernel(s, N, r, rho, t);
  };
  auto above = [&](double t) {
    if (t <= 0.0) return 0.0;
    double rho = r + t;
    return f(rho) * riesz_kernel(s, N, r, rho, t);
  };
  double total = 0.0;
  if (r > 0.0) total += quad::tanh_sinh(below, std::max(0.0, r - support), r, 1e-12);
  if (r < support) {
    if (std::isfinite(support))
      total += quad::tanh_sinh(above, 0.0, support - r, 1e-12);
    else
      total += quad::tanh_sinh(above, 0.0, scale, 1e-12) +
               quad::exp_sinh([&](double t) { return above(t + scale); }, 0.0, 1e-12);
  }
  return c * total;
}

WeberSchafheitlin weber_schafheitlin_check(double mu, double nu, double rho, double a, double b) {
  require(a > 0.0 && b > 0.0, ErrorCode::domain, "Weber-Schafheitlin check needs a, b > 0");
  require(std::abs(mu) < nu - rho + 1.0, ErrorCode::precondition, "needs |mu| < nu - rho + 1");
  const double amu = std::abs(mu);
  auto g = [&](double eta) {
    if (eta * std::max(a, b) > 1e-8) return std::pow(eta, -rho) * bessel_k(mu, eta * a) * bessel_j(nu, eta * b);
    // Leading small-argument forms, combined before K can overflow.
    const double x = eta * a, y = eta * b;
    const double jy = std::pow(0.5 * y, nu) / gamma(nu + 1.0);
    if (amu == 0.0) return std::pow(eta, -rho) * jy * (-std::log(0.5 * x) - 0.57721566490153286);
    return 0.5 * gamma(amu) * std::exp(-rho * std::log(eta) - amu * std::log(0.5 * x) + std::log(jy));
  };
  // K_mu(eta a) is below 1e-30 of its scale past eta a ~ 70 + |mu|.
  const double end = (70.0 + std::abs(mu)) / a;
  const double first = std::min(end, std::min(1.0 / a, kPi / b));
  double lhs = quad::tanh_sinh(g, 0.0, first, 1e-14);
  double x = first;
  const double step = std::min(kPi / b, 1.0 / a);
  while (x < end) {
    double y = std::min(x + step, end);
    lhs += quad::gauss_kronrod(g, x, y, 1e-14);
    x = y;
  }
  const double p1 = 0.5 * (nu - rho + mu + 1.0), p2 = 0.5 * (nu - rho - mu + 1.0);
  double rhs = std::pow(b, nu) * std::pow(a, rho - nu - 1.0) * gamma(p1) * gamma(p2) /
               (std::pow(2.0, rho + 1.0) * gamma(nu + 1.0)) *
               hyper2f1({p1, p2, nu + 1.0, ArgDomain::negative_axis}, -(b * b) / (a * a));
  return {lhs, rhs};
}

}  // namespace fpme
