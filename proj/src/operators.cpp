#include "pks/operators.hpp"

#include <cmath>

#include "pks/errors.hpp"
#include "pks/ground_state.hpp"

namespace pks::ops {

using num::FieldRole;

std::vector<double> partial_mass_vec(const RadialGrid& g, const std::vector<double>& u) {
    // interior quadrature from rmin plus the even-expansion piece below rmin
    const auto [a, c] = num::origin_fit(g, u);
    const double r1 = g.r[0];
    const double below = a * r1 * r1 / 2.0 + c * r1 * r1 * r1 * r1 / 4.0;
    std::vector<double> m = num::cumint(g, u, 2);
    for (double& v : m) v += below;
    return m;
}

RadialField partial_mass(const RadialField& u) {
    if (u.grid == nullptr) throw UsageError("partial_mass: field has no grid");
    if (u.role != FieldRole::density)
        throw UsageError("partial_mass expects a density-tagged field");
    RadialField out(*u.grid, partial_mass_vec(*u.grid, u.v), FieldRole::partial_mass);
    return out;
}

std::pair<double, double> log_moment(const RadialGrid& g, const std::vector<double>& u) {
    const auto [a, c] = num::origin_fit(g, u);
    const double r1 = g.r[0];
    const double lg1 = g.x[0];
    const double r1_2 = r1 * r1, r1_4 = r1_2 * r1_2;
    const double origin =
        a * r1_2 * (2.0 * lg1 - 1.0) / 4.0 + c * r1_4 * (4.0 * lg1 - 1.0) / 16.0;
    std::vector<double> ulog(u.size());
    for (size_t i = 0; i < u.size(); ++i) ulog[i] = u[i] * g.x[i];
    const double body = num::integrate_rdr(g, ulog);
    double tail = 0.0;
    if (auto fit = num::tail_power_fit(g, u)) {
        const double Cn = fit->first, q = fit->second;
        if (Cn != 0.0) {
            if (q <= 2.2)
                throw NumericError("log_moment: tail decay too slow, moment divergent");
            const double rn = g.rmax, lgn = g.x.back();
            tail = Cn * rn * rn * (lgn / (q - 2.0) + 1.0 / ((q - 2.0) * (q - 2.0)));
        }
    }
    return {origin + body + tail, tail};
}

PoissonSolution poisson_field(const RadialField& u) {
    if (u.grid == nullptr) throw UsageError("poisson_field: field has no grid");
    const RadialGrid& g = *u.grid;
    const std::vector<double> m = partial_mass_vec(g, u.v);
    const double phi0 = log_moment(g, u.v).first;
    const auto [a, c] = num::origin_fit(g, u.v);
    const double r1 = g.r[0];
    const double phi_r1 =
        phi0 + a * r1 * r1 / 4.0 + c * r1 * r1 * r1 * r1 / 16.0;
    std::vector<double> phi = num::cumint(g, m, 0);
    for (double& v : phi) v += phi_r1;
    PoissonSolution sol{RadialField(g, std::move(phi), FieldRole::potential),
                        RadialField(g, FieldRole::generic),
                        2.0 * M_PI * m.back()};
    for (int i = 0; i < g.n; ++i)
        sol.dphi[i] = m[static_cast<size_t>(i)] / g.r[static_cast<size_t>(i)];
    return sol;
}

RadialField apply_M(const RadialField& u) {
    if (u.grid == nullptr) throw UsageError("apply_M: field has no grid");
    const RadialGrid& g = *u.grid;
    const PoissonSolution pois = poisson_field(u);
    RadialField out(g, FieldRole::generic);
    for (int i = 0; i < g.n; ++i)
        out[i] = u[i] / gs::Q(g.r[static_cast<size_t>(i)]) + pois.phi[i];
    return out;
}

RadialField apply_L(const RadialField& eps, int acc) {
    if (eps.grid == nullptr) throw UsageError("apply_L: field has no grid");
    const RadialGrid& g = *eps.grid;
    const std::vector<double> e1 = num::d_r(g, eps.v, acc);
    const std::vector<double> e2 = num::d2_r(g, eps.v, acc);
    const std::vector<double> me = partial_mass_vec(g, eps.v);
    RadialField out(g, FieldRole::generic);
    for (int i = 0; i < g.n; ++i) {
        const double r = g.r[static_cast<size_t>(i)];
        out[i] = e2[static_cast<size_t>(i)] + e1[static_cast<size_t>(i)] / r +
                 2.0 * gs::Q(r) * eps[i] + gs::phiQp(r) * e1[static_cast<size_t>(i)] +
                 gs::Qp(r) * me[static_cast<size_t>(i)] / r;
    }
    return out;
}

RadialField apply_Lstar(const RadialField& f, int acc) {
    if (f.grid == nullptr) throw UsageError("apply_Lstar: field has no grid");
    const RadialGrid& g = *f.grid;
    const std::vector<double> f1 = num::d_r(g, f.v, acc);
    const std::vector<double> f2 = num::d2_r(g, f.v, acc);
    std::vector<double> qf1(f1.size());
    for (int i = 0; i < g.n; ++i)
        qf1[static_cast<size_t>(i)] = gs::Q(g.r[static_cast<size_t>(i)]) * f1[static_cast<size_t>(i)];
    const std::vector<double> s = num::cumint(g, qf1, 1);
    const double s_end = s.back();
    RadialField out(g, FieldRole::generic);
    for (int i = 0; i < g.n; ++i) {
        const double r = g.r[static_cast<size_t>(i)];
        const double tail = s_end - s[static_cast<size_t>(i)];
        out[i] = f2[static_cast<size_t>(i)] +
                 (1.0 / r + gs::Qp(r) / gs::Q(r)) * f1[static_cast<size_t>(i)] - tail;
    }
    return out;
}

RadialField apply_L0(const RadialField& m, int acc) {
    if (m.grid == nullptr) throw UsageError("apply_L0: field has no grid");
    const RadialGrid& g = *m.grid;
    const std::vector<double> m1 = num::d_r(g, m.v, acc);
    const std::vector<double> m2 = num::d2_r(g, m.v, acc);
    RadialField out(g, FieldRole::generic);
    for (int i = 0; i < g.n; ++i) {
        const double r = g.r[static_cast<size_t>(i)];
        out[i] = -m2[static_cast<size_t>(i)] +
                 (1.0 / r + gs::Qp(r) / gs::Q(r)) * m1[static_cast<size_t>(i)] -
                 gs::Q(r) * m.v[static_cast<size_t>(i)];
    }
    return out;
}

RadialField apply_Hk(const RadialField& phi, int k, int acc) {
    if (phi.grid == nullptr) throw UsageError("apply_Hk: field has no grid");
    if (k < 0) throw ConfigError("apply_Hk: angular index must be >= 0");
    const RadialGrid& g = *phi.grid;
    const std::vector<double> p1 = num::d_r(g, phi.v, acc);
    const std::vector<double> p2 = num::d2_r(g, phi.v, acc);
    const double k2 = static_cast<double>(k) * static_cast<double>(k);
    RadialField out(g, FieldRole::generic);
    for (int i = 0; i < g.n; ++i) {
        const double r = g.r[static_cast<size_t>(i)];
        out[i] = -p2[static_cast<size_t>(i)] - p1[static_cast<size_t>(i)] / r +
                 (k2 / (r * r) - gs::Q(r)) * phi[i];
    }
    return out;
}

double norm_l2q(const RadialGrid& g, const std::vector<double>& e) {
    std::vector<double> q(e.size());
    for (int i = 0; i < g.n; ++i) {
        const size_t j = static_cast<size_t>(i);
        q[j] = e[j] * e[j] / gs::Q(g.r[j]);
    }
    return std::sqrt(num::integrate_plane(g, q));
}

double norm_l2_plane(const RadialGrid& g, const std::vector<double>& e) {
    std::vector<double> q(e.size());
    for (size_t i = 0; i < e.size(); ++i) q[i] = e[i] * e[i];
    return std::sqrt(num::integrate_plane(g, q));
}

double norm_l1_plane(const RadialGrid& g, const std::vector<double>& e) {
    std::vector<double> q(e.size());
    for (size_t i = 0; i < e.size(); ++i) q[i] = std::abs(e[i]);
    return num::integrate_plane(g, q);
}

WeightedNorms norms(const RadialField& eps) {
    if (eps.grid == nullptr) throw UsageError("norms: field has no grid");
    const RadialGrid& g = *eps.grid;
    const std::vector<double> e1 = num::d_r(g, eps.v, 4);
    const std::vector<double> e2 = num::d2_r(g, eps.v, 4);
    std::vector<double> lapq(eps.v.size()), gradq(eps.v.size());
    for (int i = 0; i < g.n; ++i) {
        const size_t j = static_cast<size_t>(i);
        const double r = g.r[j];
        const double lap = e2[j] + e1[j] / r;
        lapq[j] = lap * lap / gs::Q(r);
        const double gr = e1[j] / (1.0 + r);
        gradq[j] = gr * gr / gs::Q(r);
    }
    WeightedNorms out{};
    out.l2q = norm_l2q(g, eps.v);
    out.l1 = norm_l1_plane(g, eps.v);
    out.h2q = std::sqrt(num::integrate_plane(g, lapq)) +
              std::sqrt(num::integrate_plane(g, gradq)) + norm_l2_plane(g, eps.v);
    out.energy = out.h2q + out.l1;
    return out;
}

}  // namespace pks::ops
