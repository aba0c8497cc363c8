#pragma once

#include <array>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

namespace pks::num {

enum class MapKind { log_uniform };

enum class FieldRole { density, partial_mass, potential, generic };

// Logarithmically uniform radial grid on [rmin, rmax]: x = log r is uniform.
// Grids are immutable after construction and may be shared read-only between
// threads. Fields keep a raw pointer to their grid, so the grid must outlive
// every field built on it.
struct RadialGrid {
    double rmin = 0.0;
    double rmax = 0.0;
    int n = 0;
    MapKind map_kind = MapKind::log_uniform;
    double h = 0.0;              // spacing of x = log r
    std::vector<double> x;       // log r, uniform
    std::vector<double> r;       // exp(x)

    // Per-interval product-integration weights for measures exp(beta*x) dx,
    // beta = 0, 1, 2, cached at build time. Entries are in units of h.
    // wc: centered interval, wf: first interval, wl: last interval.
    std::array<std::array<double, 4>, 3> wc{}, wf{}, wl{};
};

RadialGrid build_grid(double rmin, double rmax, int n);

struct RadialField {
    const RadialGrid* grid = nullptr;
    FieldRole role = FieldRole::generic;
    std::vector<double> v;

    RadialField() = default;
    explicit RadialField(const RadialGrid& g, FieldRole role_ = FieldRole::generic)
        : grid(&g), role(role_), v(static_cast<size_t>(g.n), 0.0) {}
    RadialField(const RadialGrid& g, std::vector<double> values, FieldRole role_)
        : grid(&g), role(role_), v(std::move(values)) {}

    double& operator[](int i) { return v[static_cast<size_t>(i)]; }
    double operator[](int i) const { return v[static_cast<size_t>(i)]; }
    int size() const { return static_cast<int>(v.size()); }
};

RadialField sample(const RadialGrid& g, const std::function<double(double)>& f,
                   FieldRole role = FieldRole::generic);

// Moments M_k = int_0^1 u^k exp(alpha*u) du for k = 0..3.
std::array<double, 4> exp_moments(double alpha);

// Sum with pairwise (cascade) accumulation; matches the accuracy of a
// length-independent compensated sum for our vector sizes.
double stable_sum(const double* p, size_t n);
double stable_sum(const std::vector<double>& v);

// Segment integrals s_i = int_{x_i}^{x_{i+1}} f(x) exp(beta*x) dx for
// i = 0..n-2, using a local cubic through four neighbouring nodes
// (exact for cubics in x against the exponential weight).
std::vector<double> seg_integrals(const RadialGrid& g, const std::vector<double>& f, int beta);

// cumint[i] = int_{x_0}^{x_i} f exp(beta*x) dx (cumulative, cumint[0] = 0).
std::vector<double> cumint(const RadialGrid& g, const std::vector<double>& f, int beta);

double integrate_rdr(const RadialGrid& g, const std::vector<double>& f);   // int f r dr
double integrate_plane(const RadialGrid& g, const std::vector<double>& f); // 2 pi int f r dr
double integrate_radial(const RadialField& f);                             // plane integral
double inner_plane(const RadialGrid& g, const std::vector<double>& a,
                   const std::vector<double>& b);

// Nodal quadrature weights w with sum(w_i f_i) = int f r dr (all positive).
std::vector<double> weights_rdr(const RadialGrid& g);

// Uniform-grid derivatives in x = log r, accuracy 2 or 4, with one-sided
// closures of matching order at the ends.
std::vector<double> ddx(const RadialGrid& g, const std::vector<double>& f, int acc = 4);
std::vector<double> d2dx(const RadialGrid& g, const std::vector<double>& f, int acc = 4);
// Radial derivatives via the chain rule: d_r = ddx / r, d2_r = (d2dx - ddx) / r^2.
std::vector<double> d_r(const RadialGrid& g, const std::vector<double>& f, int acc = 4);
std::vector<double> d2_r(const RadialGrid& g, const std::vector<double>& f, int acc = 4);

// Public differentiation: second-order non-uniform stencils directly in r
// (exact for quadratics in r; the order-2 boundary rows use four points and
// are exact for cubics). order must be 1 or 2.
RadialField differentiate(const RadialField& f, int order);

// Local cubic interpolation in x; exact at the nodes. r outside
// [rmin, rmax] throws std::out_of_range.
double interpolate(const RadialField& f, double r);

// Fit u ~ a + c r^2 through the first two nodes (density-style origin fit).
std::pair<double, double> origin_fit(const RadialGrid& g, const std::vector<double>& u);

// Fit m ~ (a/2) r^2 + (c/4) r^4 through nodes 1 and 2 of a partial-mass
// profile; returns (a, c) with a the central density.
std::pair<double, double> m_origin_ac(const RadialGrid& g, const std::vector<double>& m);

// Power fit u ~ C (r/rmax)^(-q) over the last `decades` of the grid.
// Returns (0, 4) when the tail is negligible, nullopt when the tail changes
// sign (no usable fit).
std::optional<std::pair<double, double>> tail_power_fit(const RadialGrid& g,
                                                        const std::vector<double>& u,
                                                        double decades = 1.0);

// Resample f at x + delta with an 8-point Lagrange kernel sliding over the
// uniform x grid. Below the data range the samples are filled with the even
// expansion a r^2 + c r^4 (coefficients from nodes 1 and 2 unless supplied),
// above the range with the boundary value f[n-1]. Intended for partial-mass
// profiles.
std::vector<double> shift_sample(const RadialGrid& g, const std::vector<double>& f, double delta,
                                 std::optional<std::pair<double, double>> ac = std::nullopt);

}  // namespace pks::num
