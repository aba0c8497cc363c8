#include "pks/ground_state.hpp"

#include <cmath>

#include "pks/errors.hpp"

namespace pks::gs {

namespace {
inline double sq(double v) { return v * v; }
inline double one_p_r2(double r) { return 1.0 + r * r; }
}  // namespace

double Q(double r) { return 8.0 / sq(one_p_r2(r)); }

double Qp(double r) {
    const double s = one_p_r2(r);
    return -32.0 * r / (s * s * s);
}

double Qpp(double r) {
    const double s = one_p_r2(r);
    return 32.0 * (5.0 * r * r - 1.0) / (s * s * s * s);
}

double phiQ(double r) { return 2.0 * std::log(one_p_r2(r)); }

double phiQp(double r) { return 4.0 * r / one_p_r2(r); }

double m0(double r) { return 4.0 * r * r / one_p_r2(r); }

double m0p(double r) { return 8.0 * r / sq(one_p_r2(r)); }

double m0pp(double r) {
    const double s = one_p_r2(r);
    return 8.0 * (1.0 - 3.0 * r * r) / (s * s * s);
}

double LamQ(double r) {
    const double s = one_p_r2(r);
    return 16.0 * (1.0 - r * r) / (s * s * s);
}

double LamQp(double r) {
    const double s = one_p_r2(r);
    return 64.0 * r * (r * r - 2.0) / (s * s * s * s);
}

double LamQpp(double r) {
    const double s = one_p_r2(r);
    const double r2 = r * r;
    return 64.0 * (-5.0 * r2 * r2 + 17.0 * r2 - 2.0) / (s * s * s * s * s);
}

double Lam2Q(double r) {
    const double s = one_p_r2(r);
    const double r2 = r * r;
    return 32.0 * (r2 * r2 - 4.0 * r2 + 1.0) / (s * s * s * s);
}

double phiLamQ(double r) { return -4.0 / one_p_r2(r); }

double psi0(double r) { return r * r / sq(one_p_r2(r)); }

double psi0p(double r) {
    const double s = one_p_r2(r);
    return 2.0 * r * (1.0 - r * r) / (s * s * s);
}

double psi0pp(double r) {
    const double s = one_p_r2(r);
    const double r2 = r * r;
    return (2.0 - 16.0 * r2 + 6.0 * r2 * r2) / (s * s * s * s);
}

double psi1(double r) {
    if (r == 0.0) return -1.0;  // limit value; the r^2 log r term vanishes
    const double r2 = r * r;
    return (r2 * r2 + 4.0 * r2 * std::log(r) - 1.0) / sq(one_p_r2(r));
}

double psi1p(double r) {
    if (r == 0.0) return 0.0;
    const double s = one_p_r2(r);
    const double r2 = r * r;
    return 8.0 * r * (1.0 + r2 - (r2 - 1.0) * std::log(r)) / (s * s * s);
}

double psi1pp(double r) {
    const double s = one_p_r2(r);
    const double r2 = r * r;
    const double lg = std::log(r);
    return (16.0 - 16.0 * r2 - 32.0 * r2 * r2 +
            8.0 * (3.0 * r2 * r2 - 8.0 * r2 + 1.0) * lg) /
           (s * s * s * s);
}

double wronskian(double r) { return 2.0 * r / sq(one_p_r2(r)); }

double chi(double t) {
    if (t <= 1.0) return 1.0;
    if (t >= 2.0) return 0.0;
    const double u = t - 1.0;
    return 1.0 - u * u * u * (10.0 - 15.0 * u + 6.0 * u * u);
}

double chip(double t) {
    if (t <= 1.0 || t >= 2.0) return 0.0;
    const double u = t - 1.0;
    return -30.0 * u * u * sq(u - 1.0);
}

double chipp(double t) {
    if (t <= 1.0 || t >= 2.0) return 0.0;
    const double u = t - 1.0;
    return -60.0 * u * (2.0 * u - 1.0) * (u - 1.0);
}

double cutoff_chi_scaled(double B, double r) {
    if (!(B > 0.0)) throw pks::ConfigError("cutoff scale must be positive");
    return chi(r / B);
}

double eval(ClosedForm id, double r) {
    if (!(r >= 0.0)) throw pks::ConfigError("eval: r must be >= 0");
    switch (id) {
        case ClosedForm::Q: return Q(r);
        case ClosedForm::gradQ: return Qp(r);
        case ClosedForm::phiQ: return phiQ(r);
        case ClosedForm::m0: return m0(r);
        case ClosedForm::LambdaQ: return LamQ(r);
        case ClosedForm::psi0: return psi0(r);
        case ClosedForm::psi1: return psi1(r);
        case ClosedForm::wronskian: return wronskian(r);
        case ClosedForm::cutoff_chi: return chi(r);
    }
    throw pks::ConfigError("eval: unknown closed-form id");
}

}  // namespace pks::gs
