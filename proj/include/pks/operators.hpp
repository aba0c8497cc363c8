#pragma once

#include <utility>
#include <vector>

#include "pks/grid.hpp"

namespace pks::ops {

using num::RadialField;
using num::RadialGrid;

struct PoissonSolution {
    RadialField phi;    // potential, phi(r) with phi(0) fixed by the log moment
    RadialField dphi;   // radial derivative m(r)/r
    double total_mass;  // 2 pi * m(rmax)
};

struct WeightedNorms {
    double l2q;     // || e ||_{L^2_{1/Q}}, plane measure
    double h2q;     // || lap e ||_{L^2_{1/Q}} + || grad e / (1+r) ||_{L^2_{1/Q}} + || e ||_{L^2}
    double energy;  // h2q + l1
    double l1;      // || e ||_{L^1}
};

// Partial mass m(r) = int_0^r u(tau) tau dtau. Requires a density-tagged field.
RadialField partial_mass(const RadialField& u);
std::vector<double> partial_mass_vec(const RadialGrid& g, const std::vector<double>& u);

// int_0^inf u log(tau) tau dtau with quadratic origin model and power-law tail
// completion. Returns (value, tail contribution). A single-signed tail with a
// fitted decay q <= 2.2 is a divergent log moment and raises NumericError.
std::pair<double, double> log_moment(const RadialGrid& g, const std::vector<double>& u);

// Newtonian field of a radial density: phi' = m / r, phi(0) from the log moment.
PoissonSolution poisson_field(const RadialField& u);

// M u = u / Q + phi_u
RadialField apply_M(const RadialField& u);

// L e = e'' + e'/r + 2 Q e + phiQ' e' + Q' m_e / r   (linearized transport form)
RadialField apply_L(const RadialField& eps, int acc = 4);

// L* f = f'' + (1/r + Q'/Q) f' - int_r^inf Q f'
RadialField apply_Lstar(const RadialField& f, int acc = 4);

// L0 m = -m'' + (1/r + Q'/Q) m' - Q m   (partial-mass linearization)
RadialField apply_L0(const RadialField& m, int acc = 4);

// H_k phi = -phi'' - phi'/r + (k^2/r^2) phi - Q phi
RadialField apply_Hk(const RadialField& phi, int k, int acc = 4);

WeightedNorms norms(const RadialField& eps);

double norm_l2q(const RadialGrid& g, const std::vector<double>& e);
double norm_l2_plane(const RadialGrid& g, const std::vector<double>& e);
double norm_l1_plane(const RadialGrid& g, const std::vector<double>& e);

}  // namespace pks::ops
