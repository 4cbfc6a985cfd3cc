#pragma once

#include <stdexcept>

#include "nsf/params.hpp"

namespace nsf {

// Density truncation K: 1 below k, 0 above k+1, quintic smoothstep in
// between (C^2 at both ends, K(k+1/2) = 1/2).
class TruncationK {
 public:
  explicit TruncationK(double k);

  double k() const { return k_; }
  double operator()(double t) const { return K(t); }
  double K(double t) const;
  double K_prime(double t) const;
  // int_0^rho K(t) dt, closed form.
  double int_K(double rho) const;
  // Plateau values (attained for rho >= k+1).
  double int_K_plateau() const { return k_ + 0.5; }

 private:
  double k_;
};

// Barotropic and full pressure, conductivity, boundary transfer.
// P_b(rho) = a1 int_0^rho gamma t^(gamma-1) K(t) dt, P = P_b + a2 theta int_K.
class Constitutive {
 public:
  Constitutive(const ModelParams& mp, const TruncationK& K);

  const TruncationK& truncation() const { return K_; }
  double gamma() const { return gamma_; }

  double P_b(double rho) const;
  double P(double rho, double theta) const;
  // dP/drho at fixed theta.
  double dP_drho(double rho, double theta) const;
  double kappa(double theta) const;
  double L_coef(double theta) const;
  double L_prime(double theta) const;

 private:
  TruncationK K_;
  double gamma_, m_, l_, a1_, a2_, a3_, a4_;
  double pb_k_;       // P_b(k)
  double pb_plateau_; // P_b(k+1)
  double band_integral(double rho) const;
};

class PhiOverflow : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

// Kirchhoff transform Phi(z) = a3 int_0^z (1+e^(m tau))(eps+e^tau) dtau,
// evaluated in closed form. Arguments beyond |z| <= cap (default 50/m) throw
// PhiOverflow.
class Kirchhoff {
 public:
  Kirchhoff(double epsilon, double m, double a3 = 1.0);
  Kirchhoff(double epsilon, double m, double a3, double cap);

  double Phi(double z) const;
  double Phi_prime(double z) const;
  double Phi_second(double z) const;
  // Phi'(s) e^(-s) = (1+theta^m)(eps+theta)/theta with theta = e^s.
  double theta_form(double s) const;
  double cap() const { return cap_; }
  double epsilon() const { return eps_; }
  double m() const { return m_; }

 private:
  void guard(double z) const;
  double eps_, m_, a3_, cap_;
};

}  // namespace nsf
