#pragma once

namespace pks::gs {

// Stationary profile Q(r) = 8 / (1 + r^2)^2 and its closed-form companions.
// Everything here is exact pointwise arithmetic; no grids involved.

double Q(double r);
double Qp(double r);     // dQ/dr
double Qpp(double r);    // d2Q/dr2
double phiQ(double r);   // 2 log(1 + r^2), the induced potential
double phiQp(double r);  // 4r / (1 + r^2)
double m0(double r);     // partial mass of Q: 4 r^2 / (1 + r^2)
double m0p(double r);
double m0pp(double r);

double LamQ(double r);    // scaling derivative (2 + r d/dr) Q
double LamQp(double r);
double LamQpp(double r);
double Lam2Q(double r);   // scaling derivative applied twice
double phiLamQ(double r); // potential of LamQ: -4 / (1 + r^2)

double psi0(double r);    // r^2 / (1 + r^2)^2, decaying kernel element of L0
double psi0p(double r);
double psi0pp(double r);
double psi1(double r);    // (r^4 + 4 r^2 log r - 1) / (1 + r^2)^2, growing element
double psi1p(double r);
double psi1pp(double r);
double wronskian(double r);  // psi1' psi0 - psi1 psi0' = r Q / 4

// Quintic cutoff: 1 on [0,1], 0 on [2,inf), C^2 monotone in between.
double chi(double t);
double chip(double t);
double chipp(double t);

// chi(r / B); B must be positive.
double cutoff_chi_scaled(double B, double r);

enum class ClosedForm {
    Q,
    gradQ,
    phiQ,
    m0,
    LambdaQ,
    psi0,
    psi1,
    wronskian,
    cutoff_chi,
};

// Tag-dispatched evaluation of the closed forms above; r must be >= 0.
double eval(ClosedForm id, double r);

}  // namespace pks::gs
