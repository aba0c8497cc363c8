#pragma once

#include <optional>
#include <utility>
#include <vector>

#include <pks/grid.hpp>

namespace pks::prof {

// First correction of the blow-up profile expansion: T1 = m1'/r where m1
// solves L0 m1 = -8 psi0, together with the pieces needed downstream.
struct T1Parts {
    std::vector<double> m1, m1p, m1pp;  // partial-mass correction and r-derivatives
    std::vector<double> T1, T1p;        // density correction T1 = m1'/r
    std::vector<double> I1, I2;         // int_0^r t psi1, int_0^r t psi0
};

// Radiation matching data at scale B0: constants (c_b, d_b) and the matched
// field Sigma_b interpolating between c_b*m1 (inner) and 4*psi1 (outer).
struct RadiationParts {
    double cb = 0.0;
    double db = 0.0;
    double B0 = 0.0;
    std::vector<double> Sb, Sbp;
    std::vector<double> I1c, I2c;  // cutoff-weighted kernel integrals
};

// Second correction: m2 solves L0 m2 = Sigma2 with the quadratic source
// Sigma2 = m1 m1'/r - r m1' + Sigma_b; T2 = m2'/r.
struct T2Parts {
    std::vector<double> m2, m2p, m2pp;
    std::vector<double> T2, T2p;
    std::vector<double> S2, S2p;
};

// Assembled two-term profile Qb = Q + b*cut*T1 + b^2*cut*T2 with the
// localization cut chi(r/B1), B1 = |log b|/sqrt(b).
struct ProfileFamily {
    const num::RadialGrid* grid = nullptr;
    double b = 0.0;
    double B0 = 0.0;  // radiation matching radius (1/sqrt(b) unless overridden)
    double B1 = 0.0;  // localization radius (|log b|/sqrt(b) unless overridden)
    double cb = 0.0;
    double db = 0.0;
    bool localized = true;
    bool positive = true;  // min Qb > 0
    T1Parts t1;
    RadiationParts rad;
    T2Parts t2;
    std::vector<double> cutB1;  // chi(r/B1) (ones when not localized)
    std::vector<double> Qb;     // assembled density profile
};

// Generalized-flux error field of the truncated profile and its pieces,
// computed by exact algebraic expansion (no finite differencing of O(1)
// cancelling terms). noise_flag is set when a fourth-difference roughness
// estimate of Psi_tilde exceeds the field itself.
struct ErrorField {
    std::vector<double> Psi;        // flux error of the unlocalized expansion
    std::vector<double> Phi;        // flux potential -b^2 Sigma_b + R
    std::vector<double> Z;          // localization commutator terms
    std::vector<double> Psi_tilde;  // error of the localized profile
    bool noise_flag = false;
};

// Exponent p with f ~ f(r1) (r/r1)^p estimated from the first two nodes,
// clamped to [-1, 8]. nullopt when the leading values vanish or differ in
// sign (no usable power behaviour).
std::optional<double> power_at_origin(const num::RadialGrid& g, const std::vector<double>& f);

// Kernel integrals of the L0 Green's function applied to f:
//   J1(r) = int_0^r ((t^4 + 4 t^2 log t - 1)/t) f dt,  J2(r) = int_0^r t f dt,
// with series origin corrections below r1 from the fitted power of f.
// Throws NumericError when f has a non-integrable origin (p < 0.1 with
// f(r1) != 0; the kernel contributes 1/t).
std::pair<std::vector<double>, std::vector<double>> green_integrals(
    const num::RadialGrid& g, const std::vector<double>& f);

// Particular solution of L0 m = -f by variation of constants,
// m = -(1/2) psi0 J1 + (1/2) psi1 J2.
std::vector<double> solve_L0_inhomog(const num::RadialGrid& g, const std::vector<double>& f);

// b-independent first correction (cacheable per grid).
T1Parts build_T1(const num::RadialGrid& g);

// Radiation data with the default matching radius B0 = 1/sqrt(b).
// Requires 0 < b < 1e-1.
RadiationParts radiation_constants(const num::RadialGrid& g, double b);

// Radiation data with an explicit matching radius (used when the physical
// B0 exceeds the grid and has to be clamped).
RadiationParts radiation_with_cutoff(const num::RadialGrid& g, double B0);

T2Parts build_T2(const num::RadialGrid& g, const T1Parts& t1, const RadiationParts& rad);

// Assemble the profile family at parameter b on grid g. Requires
// 0 <= b <= 1e-2 and rmax >= 4 B1 (use profile_grid to build a suitable
// grid). b = 0 yields the ground state with zero corrections. Sets
// positive = false and throws DegenerateProfileError when the truncation
// produces a non-positive density.
ProfileFamily assemble_profile(const num::RadialGrid& g, double b, bool localized = true);

// Same with explicit cutoff radii (clamped variants for small grids).
// Skips the rmax >= 4 B1 admissibility check; intended for decomposition
// against profiles on simulation-sized grids.
ProfileFamily assemble_profile_cutoffs(const num::RadialGrid& g, double b, double B0, double B1,
                                       bool localized = true);

ErrorField compute_error(const ProfileFamily& prof);

// Grid reaching comfortably past the localization radius of b, with the
// node density of the reference 1e-4..1e4 / 4096 layout.
num::RadialGrid profile_grid(double b, double rmin = 1e-4);

}  // namespace pks::prof
