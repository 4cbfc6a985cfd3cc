#include "nsf/constitutive.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <string>

namespace nsf {

namespace {

// S(u) = 6u^5 - 15u^4 + 10u^3 and its antiderivative on [0,1].
double smooth(double u) { return u * u * u * (10.0 + u * (-15.0 + 6.0 * u)); }
double smooth_prime(double u) { return 30.0 * u * u * (1.0 - u) * (1.0 - u); }
double smooth_integral(double u) { return u * u * u * u * (2.5 + u * (-3.0 + u)); }

}  // namespace

TruncationK::TruncationK(double k) : k_(k) {
  if (!std::isfinite(k) || !(k > 0.0)) throw std::invalid_argument("TruncationK: k must be finite and > 0");
}

double TruncationK::K(double t) const {
  if (!(t >= 0.0)) throw std::domain_error("K: argument must be >= 0");
  if (t <= k_) return 1.0;
  if (t >= k_ + 1.0) return 0.0;
  return 1.0 - smooth(t - k_);
}

double TruncationK::K_prime(double t) const {
  if (!(t >= 0.0)) throw std::domain_error("K_prime: argument must be >= 0");
  if (t <= k_ || t >= k_ + 1.0) return 0.0;
  return -smooth_prime(t - k_);
}

double TruncationK::int_K(double rho) const {
  if (!(rho >= 0.0)) throw std::domain_error("int_K: density must be >= 0");
  if (rho <= k_) return rho;
  if (rho >= k_ + 1.0) return int_K_plateau();
  const double u = rho - k_;
  return k_ + u - smooth_integral(u);
}

Constitutive::Constitutive(const ModelParams& mp, const TruncationK& K)
    : K_(K), gamma_(mp.gamma), m_(mp.m), l_(mp.l), a1_(mp.a1), a2_(mp.a2), a3_(mp.a3), a4_(mp.a4) {
  pb_k_ = std::pow(K_.k(), gamma_);
  pb_plateau_ = pb_k_ + band_integral(K_.k() + 1.0);
}

// int_k^rho gamma t^(gamma-1) K(t) dt for rho in [k, k+1].
double Constitutive::band_integral(double rho) const {
  const double k = K_.k();
  if (rho <= k) return 0.0;
  const double g = gamma_;
  auto f = [this, g](double t) { return g * std::pow(t, g - 1.0) * K_.K(t); };
  return boost::math::quadrature::gauss<double, 16>::integrate(f, k, rho);
}

double Constitutive::P_b(double rho) const {
  if (!(rho >= 0.0)) throw std::domain_error("P_b: density must be >= 0");
  const double k = K_.k();
  if (rho <= k) return a1_ * std::pow(rho, gamma_);
  if (rho >= k + 1.0) return a1_ * pb_plateau_;
  return a1_ * (pb_k_ + band_integral(rho));
}

double Constitutive::P(double rho, double theta) const {
  if (!(theta > 0.0)) throw std::domain_error("P: temperature must be > 0");
  return P_b(rho) + a2_ * theta * K_.int_K(rho);
}

double Constitutive::dP_drho(double rho, double theta) const {
  if (!(rho >= 0.0)) throw std::domain_error("dP_drho: density must be >= 0");
  const double kr = K_.K(rho);
  if (kr == 0.0) return 0.0;
  return (a1_ * gamma_ * std::pow(rho, gamma_ - 1.0) + a2_ * theta) * kr;
}

double Constitutive::kappa(double theta) const {
  if (!(theta > 0.0)) throw std::domain_error("kappa: temperature must be > 0");
  return a3_ * (1.0 + std::pow(theta, m_));
}

double Constitutive::L_coef(double theta) const {
  if (!(theta > 0.0)) throw std::domain_error("L_coef: temperature must be > 0");
  return a4_ * (1.0 + std::pow(theta, l_));
}

double Constitutive::L_prime(double theta) const {
  if (!(theta > 0.0)) throw std::domain_error("L_prime: temperature must be > 0");
  return a4_ * l_ * std::pow(theta, l_ - 1.0);
}

Kirchhoff::Kirchhoff(double epsilon, double m, double a3) : Kirchhoff(epsilon, m, a3, 50.0 / m) {}

Kirchhoff::Kirchhoff(double epsilon, double m, double a3, double cap) : eps_(epsilon), m_(m), a3_(a3), cap_(cap) {
  if (!(epsilon > 0.0) || !(m > 0.0) || !(a3 > 0.0) || !(cap > 0.0))
    throw std::invalid_argument("Kirchhoff: epsilon, m, a3 and cap must be positive");
}

void Kirchhoff::guard(double z) const {
  if (!std::isfinite(z) || std::abs(z) > cap_)
    throw PhiOverflow("Kirchhoff transform argument " + std::to_string(z) + " exceeds cap " + std::to_string(cap_));
}

double Kirchhoff::Phi(double z) const {
  guard(z);
  // (1+e^(m t))(eps+e^t) = eps + e^t + eps e^(m t) + e^((m+1) t)
  return a3_ * (eps_ * z + std::expm1(z) + eps_ * std::expm1(m_ * z) / m_ + std::expm1((m_ + 1.0) * z) / (m_ + 1.0));
}

double Kirchhoff::Phi_prime(double z) const {
  guard(z);
  return a3_ * (1.0 + std::exp(m_ * z)) * (eps_ + std::exp(z));
}

double Kirchhoff::Phi_second(double z) const {
  guard(z);
  const double em = std::exp(m_ * z), e = std::exp(z);
  return a3_ * (m_ * em * (eps_ + e) + (1.0 + em) * e);
}

double Kirchhoff::theta_form(double s) const {
  guard(s);
  const double th = std::exp(s);
  return a3_ * (1.0 + std::pow(th, m_)) * (eps_ + th) / th;
}

}  // namespace nsf
