#include <pks/spectral.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <pks/errors.hpp>
#include <pks/ground_state.hpp>
#include <pks/operators.hpp>

namespace pks::spectral {

using num::RadialField;
using num::RadialGrid;

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr int kDenseCap = 16384;

RadialField wrap(const RadialGrid& g, std::vector<double> v) {
    return RadialField(g, std::move(v), num::FieldRole::generic);
}

std::vector<double> sample_closed(const RadialGrid& g, double (*f)(double)) {
    std::vector<double> out(static_cast<size_t>(g.n));
    for (int i = 0; i < g.n; ++i) out[static_cast<size_t>(i)] = f(g.r[static_cast<size_t>(i)]);
    return out;
}

// Dense partial-mass rows: (C u)_i = int_0^{r_i} u t dt with the same
// segment quadrature and even-expansion origin piece as partial_mass_vec.
Eigen::MatrixXd mass_rows(const RadialGrid& g) {
    const int n = g.n;
    const auto& wc2 = g.wc[2];
    const auto& wf2 = g.wf[2];
    const auto& wl2 = g.wl[2];
    Eigen::MatrixXd C(n, n);
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(n);
    const double r1 = g.r[0], r2 = g.r[1];
    const double cc = 1.0 / (r2 * r2 - r1 * r1);
    const double r1_4 = r1 * r1 * r1 * r1;
    const double quart = r1_4 / 4.0 - r1_4 / 2.0;
    acc(0) = r1 * r1 / 2.0 - cc * quart;
    acc(1) = cc * quart;
    C.row(0) = acc;
    for (int j = 0; j <= n - 2; ++j) {
        if (j == 0) {
            const double e = std::exp(2.0 * g.x[0]);
            for (int k = 0; k < 4; ++k) acc(k) += wf2[static_cast<size_t>(k)] * e;
        } else if (j == n - 2) {
            const double e = std::exp(2.0 * g.x[static_cast<size_t>(n - 2)]);
            for (int k = 0; k < 4; ++k) acc(n - 4 + k) += wl2[static_cast<size_t>(k)] * e;
        } else {
            const double e = std::exp(2.0 * g.x[static_cast<size_t>(j)]);
            for (int k = 0; k < 4; ++k) acc(j - 1 + k) += wc2[static_cast<size_t>(k)] * e;
        }
        C.row(j + 1) = acc;
    }
    return C;
}

// Dense version of u -> u/Q + phi_u. The potential rows integrate the
// partial-mass rows in x plus the log-moment and phi(rmin) origin pieces;
// no far-field tail model (fields treated as zero beyond rmax).
Eigen::MatrixXd m_matrix(const RadialGrid& g) {
    const int n = g.n;
    const Eigen::MatrixXd C = mass_rows(g);
    const auto& wc2 = g.wc[2];
    const auto& wf2 = g.wf[2];
    const auto& wl2 = g.wl[2];
    const auto& wc0 = g.wc[0];
    const auto& wf0 = g.wf[0];
    const auto& wl0 = g.wl[0];

    Eigen::RowVectorXd ell = Eigen::RowVectorXd::Zero(n);
    {
        const double e0 = std::exp(2.0 * g.x[0]);
        for (int k = 0; k < 4; ++k)
            ell(k) += wf2[static_cast<size_t>(k)] * e0 * g.x[static_cast<size_t>(k)];
        for (int i = 1; i < n - 2; ++i) {
            const double e = std::exp(2.0 * g.x[static_cast<size_t>(i)]);
            for (int k = 0; k < 4; ++k)
                ell(i - 1 + k) += wc2[static_cast<size_t>(k)] * e * g.x[static_cast<size_t>(i - 1 + k)];
        }
        const double el = std::exp(2.0 * g.x[static_cast<size_t>(n - 2)]);
        for (int k = 0; k < 4; ++k)
            ell(n - 4 + k) += wl2[static_cast<size_t>(k)] * el * g.x[static_cast<size_t>(n - 4 + k)];
    }
    const double r1 = g.r[0], r2 = g.r[1];
    const double cc = 1.0 / (r2 * r2 - r1 * r1);
    const double r1_2 = r1 * r1, r1_4 = r1_2 * r1_2;
    const double lg = g.x[0];
    const double A_ = r1_2 * (2.0 * lg - 1.0) / 4.0;
    const double B_ = r1_4 * (4.0 * lg - 1.0) / 16.0;
    ell(0) += A_ - cc * (-A_ * r1_2 + B_);
    ell(1) += cc * (-A_ * r1_2 + B_);

    Eigen::RowVectorXd rowp = Eigen::RowVectorXd::Zero(n);
    rowp(0) = r1_2 / 4.0 - cc * (-r1_4 / 4.0 + r1_4 / 16.0);
    rowp(1) = cc * (-r1_4 / 4.0 + r1_4 / 16.0);

    Eigen::MatrixXd A(n, n);
    Eigen::RowVectorXd run = ell + rowp;
    A.row(0) = run;
    for (int i = 1; i < n; ++i) {
        const int j = i - 1;  // x-segment feeding row i (beta = 0, no weight factor)
        if (j == 0) {
            for (int k = 0; k < 4; ++k) run += wf0[static_cast<size_t>(k)] * C.row(k);
        } else if (j == n - 2) {
            for (int k = 0; k < 4; ++k) run += wl0[static_cast<size_t>(k)] * C.row(n - 4 + k);
        } else {
            for (int k = 0; k < 4; ++k) run += wc0[static_cast<size_t>(k)] * C.row(j - 1 + k);
        }
        A.row(i) = run;
    }
    for (int i = 0; i < n; ++i) A(i, i) += 1.0 / gs::Q(g.r[static_cast<size_t>(i)]);
    return A;
}

Eigen::MatrixXd columns_of(const RadialGrid& g,
                           RadialField (*op)(const RadialField&, int), int acc) {
    const int n = g.n;
    Eigen::MatrixXd A(n, n);
    std::vector<double> e(static_cast<size_t>(n), 0.0);
    for (int j = 0; j < n; ++j) {
        e[static_cast<size_t>(j)] = 1.0;
        const RadialField col = op(wrap(g, e), acc);
        for (int i = 0; i < n; ++i) A(i, j) = col[i];
        e[static_cast<size_t>(j)] = 0.0;
    }
    return A;
}

RadialField apply_H1(const RadialField& f, int acc) { return ops::apply_Hk(f, 1, acc); }

}  // namespace

OperatorMatrix assemble(OpId op, const RadialGrid& g) {
    if (g.n > kDenseCap)
        throw ConfigError("assemble: grid too large for a dense operator matrix (n > 16384)");
    OperatorMatrix out;
    out.op = op;
    out.grid = &g;
    switch (op) {
        case OpId::M:
            out.entries = m_matrix(g);
            out.bc = "origin: even density fit below rmin; potential: field treated as "
                     "zero beyond rmax (no power-law tail model)";
            break;
        case OpId::L:
            out.entries = columns_of(g, &ops::apply_L, 4);
            out.bc = "fourth-order log-grid stencils, one-sided end closures; mass term "
                     "from the even origin fit";
            break;
        case OpId::Lstar:
            out.entries = columns_of(g, &ops::apply_Lstar, 4);
            out.bc = "fourth-order log-grid stencils; outer integral truncated at rmax";
            break;
        case OpId::L0:
            out.entries = columns_of(g, &ops::apply_L0, 4);
            out.bc = "fourth-order log-grid stencils, one-sided end closures";
            break;
        case OpId::H1:
            out.entries = columns_of(g, &apply_H1, 4);
            out.bc = "fourth-order log-grid stencils, one-sided end closures";
            break;
    }
    return out;
}

namespace {

// The nine identity residuals, in the order documented in the header.
std::vector<double> kernel_values(const RadialGrid& g, int acc) {
    const int n = g.n;
    const prof::T1Parts t1 = prof::build_T1(g);
    std::vector<double> out;
    out.reserve(9);

    const std::vector<double> lamq = sample_closed(g, &gs::LamQ);
    const double nrmL = ops::norm_l2q(g, lamq);

    {  // M LamQ + 2
        const RadialField v = ops::apply_M(wrap(g, lamq));
        double mx = 0.0;
        for (int i = 0; i < n; ++i) mx = std::max(mx, std::abs(v[i] + 2.0));
        out.push_back(mx / 2.0);
    }
    {  // M Lam2Q - (LamQ/Q)^2
        const RadialField v = ops::apply_M(wrap(g, sample_closed(g, &gs::Lam2Q)));
        double mx = 0.0, ref = 0.0;
        for (int i = 0; i < n; ++i) {
            const double r = g.r[static_cast<size_t>(i)];
            const double t = gs::LamQ(r) / gs::Q(r);
            mx = std::max(mx, std::abs(v[i] - t * t));
            ref = std::max(ref, t * t);
        }
        out.push_back(mx / ref);
    }
    {  // L LamQ
        const RadialField v = ops::apply_L(wrap(g, lamq), acc);
        out.push_back(ops::norm_l2q(g, v.v) / nrmL);
    }
    {  // L T1 - LamQ
        RadialField v = ops::apply_L(wrap(g, t1.T1), acc);
        for (int i = 0; i < n; ++i) v[i] -= lamq[static_cast<size_t>(i)];
        out.push_back(ops::norm_l2q(g, v.v) / nrmL);
    }
    {  // Lstar 1 (absolute)
        const RadialField v =
            ops::apply_Lstar(wrap(g, std::vector<double>(static_cast<size_t>(n), 1.0)), acc);
        out.push_back(ops::norm_l2_plane(g, v.v));
    }
    {  // Lstar (chi-tapered r^2) + 4, taper bias removed
        const double a = 0.05 * g.rmax;
        std::vector<double> f(static_cast<size_t>(n)), qfp(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) {
            const double r = g.r[static_cast<size_t>(i)];
            f[static_cast<size_t>(i)] = gs::chi(r / a) * r * r;
            qfp[static_cast<size_t>(i)] =
                gs::Q(r) * (gs::chip(r / a) * r * r / a + 2.0 * r * gs::chi(r / a));
        }
        const RadialField v = ops::apply_Lstar(wrap(g, f), acc);
        // the taper replaces int_a^inf Q (r^2)' dtau by int_a^2a Q f' dtau;
        // subtract the difference so only the discretization error remains
        const std::vector<double> S = num::cumint(g, qfp, 1);
        const double Sa = num::interpolate(wrap(g, S), a);
        const double bias = 2.0 * (4.0 - gs::m0(a)) - (S.back() - Sa);
        double num2 = 0.0, den2 = 0.0;
        for (int i = 0; i < n; ++i) {
            const double r = g.r[static_cast<size_t>(i)];
            if (r > 0.02 * g.rmax) break;
            const double w = r * r * gs::Q(r);
            const double res = v[i] + 4.0 - bias;
            num2 += res * res * w;
            den2 += w;
        }
        out.push_back(std::sqrt(num2 / den2) / 4.0);
    }
    {  // L0 psi0
        const std::vector<double> p0 = sample_closed(g, &gs::psi0);
        const RadialField v = ops::apply_L0(wrap(g, p0), acc);
        out.push_back(ops::norm_l2q(g, v.v) / ops::norm_l2q(g, p0));
    }
    {  // L0 psi1, windowed to r <= 100 with nodal r^2/Q weights
        const std::vector<double> p1 = sample_closed(g, &gs::psi1);
        const RadialField v = ops::apply_L0(wrap(g, p1), acc);
        double num2 = 0.0, den2 = 0.0;
        for (int i = 0; i < n; ++i) {
            const double r = g.r[static_cast<size_t>(i)];
            if (r > 100.0) break;
            const double w = r * r / gs::Q(r);
            num2 += v[i] * v[i] * w;
            den2 += p1[static_cast<size_t>(i)] * p1[static_cast<size_t>(i)] * w;
        }
        out.push_back(std::sqrt(num2 / den2));
    }
    {  // H1 phiQp
        const std::vector<double> pq = sample_closed(g, &gs::phiQp);
        const RadialField v = ops::apply_Hk(wrap(g, pq), 1, acc);
        out.push_back(ops::norm_l2q(g, v.v) / ops::norm_l2q(g, pq));
    }
    return out;
}

}  // namespace

std::vector<KernelResidual> kernel_residuals(const RadialGrid& g, int acc) {
    static const char* names[9] = {"M LamQ + 2", "M Lam2Q - (LamQ/Q)^2", "L LamQ",
                                   "L T1 - LamQ", "Lstar 1",             "Lstar r2 + 4",
                                   "L0 psi0",    "L0 psi1",              "H1 phiQp"};
    const std::vector<double> fine = kernel_values(g, acc);
    std::vector<double> coarse(9, kNaN);
    if (g.n >= 32) {
        const RadialGrid gh = num::build_grid(g.rmin, g.rmax, g.n / 2);
        coarse = kernel_values(gh, acc);
    }
    std::vector<KernelResidual> out(9);
    for (int k = 0; k < 9; ++k) {
        out[static_cast<size_t>(k)].name = names[k];
        out[static_cast<size_t>(k)].residual = fine[static_cast<size_t>(k)];
        const double f = fine[static_cast<size_t>(k)], c = coarse[static_cast<size_t>(k)];
        out[static_cast<size_t>(k)].order =
            (f > 1e-15 && c > 1e-15) ? std::log2(c / f) : kNaN;
    }
    return out;
}

DirectionSet build_Phi_M(const RadialGrid& g, const prof::T1Parts& t1, double M) {
    if (!(M > 0.0)) throw ConfigError("build_Phi_M: M must be positive");
    if (g.rmax < 4.0 * M)
        throw ConfigError("build_Phi_M: grid must extend to at least 4 M");
    const int n = g.n;
    DirectionSet ds;
    ds.M = M;
    ds.phi0_M.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double r = g.r[static_cast<size_t>(i)];
        ds.phi0_M[static_cast<size_t>(i)] = gs::chi(r / M) * r * r;
    }
    const std::vector<double> lamq = sample_closed(g, &gs::LamQ);
    const double a1 = num::inner_plane(g, ds.phi0_M, t1.T1);
    const double a2 = num::inner_plane(g, ds.phi0_M, lamq);
    ds.c_M = -a1 / a2;
    const RadialField ls0 = ops::apply_Lstar(wrap(g, ds.phi0_M), 4);
    ds.phi_M.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
        ds.phi_M[static_cast<size_t>(i)] = ds.phi0_M[static_cast<size_t>(i)] + ds.c_M * ls0[i];
    ds.Ls_phi_M = ops::apply_Lstar(wrap(g, ds.phi_M), 4).v;
    ds.inner_T1 = num::inner_plane(g, ds.phi_M, t1.T1);
    ds.inner_LamQ = num::inner_plane(g, ds.phi_M, lamq);
    ds.ref_32pi_logM = -32.0 * kPi * std::log(M);
    ds.ref_24_logM = -24.0 * std::log(M);
    return ds;
}

CoercMReport coercivity_M(const RadialGrid& g) {
    const int n = g.n;
    const Eigen::MatrixXd Mm = m_matrix(g);
    std::vector<double> w = num::weights_rdr(g);
    for (double& v : w) v *= 2.0 * kPi;

    // drop the last 5% of the log range (test functions must vanish there)
    const double rcut = g.rmax * std::pow(g.rmax / g.rmin, -0.05);
    int k = 0;
    while (k < n && g.r[static_cast<size_t>(k)] <= rcut) ++k;
    if (k < 8) throw ConfigError("coercivity_M: grid too small");

    Eigen::MatrixXd A(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) A(i, j) = w[static_cast<size_t>(i)] * Mm(i, j);
    const double amax = A.cwiseAbs().maxCoeff();
    const double asym = (A - A.transpose()).cwiseAbs().maxCoeff() / amax;
    A = 0.5 * (A + A.transpose()).eval();

    Eigen::VectorXd s(k);
    for (int i = 0; i < k; ++i)
        s(i) = 1.0 / std::sqrt(w[static_cast<size_t>(i)] / gs::Q(g.r[static_cast<size_t>(i)]));
    Eigen::MatrixXd As = s.asDiagonal() * A * s.asDiagonal();
    As = 0.5 * (As + As.transpose()).eval();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esU(As, Eigen::EigenvaluesOnly);
    const double unproj = esU.eigenvalues()(0);

    // orthonormalized constraint directions (mass and scaling)
    Eigen::VectorXd v1(k), v2(k);
    for (int i = 0; i < k; ++i) {
        v1(i) = w[static_cast<size_t>(i)] * s(i);
        v2(i) = w[static_cast<size_t>(i)] * gs::LamQ(g.r[static_cast<size_t>(i)]) * s(i);
    }
    v1.normalize();
    v2 -= v1.dot(v2) * v1;
    v2.normalize();
    Eigen::MatrixXd V(k, 2);
    V.col(0) = v1;
    V.col(1) = v2;

    // exact projection by rank-two deflation: P As P has the constrained
    // spectrum on range(P) and 0 on span(V); lifting span(V) by mu > ||As||
    // leaves the constrained minimum as the smallest eigenvalue
    const double mu = As.cwiseAbs().rowwise().sum().maxCoeff() + 1.0;
    const Eigen::MatrixXd W = As * V;
    const Eigen::Matrix2d S2 = V.transpose() * W;
    Eigen::MatrixXd Ap = As - V * W.transpose() - W * V.transpose()
                         + V * (S2 + mu * Eigen::Matrix2d::Identity()) * V.transpose();
    Ap = 0.5 * (Ap + Ap.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Ap);
    const Eigen::VectorXd vmin = es.eigenvectors().col(0);

    CoercMReport rep;
    rep.delta0 = es.eigenvalues()(0);
    rep.unprojected_min = unproj;
    rep.constraint_res_mass = std::abs(v1.dot(vmin));
    rep.constraint_res_lamq = std::abs(v2.dot(vmin));
    rep.asymmetry = asym;
    rep.n_kept = k;
    return rep;
}

CoercLReport coercivity_L(const RadialGrid& g, const DirectionSet& dirs, int samples,
                          std::uint64_t seed) {
    if (samples < 1) throw ConfigError("coercivity_L: samples must be >= 1");
    const int n = g.n;

    // taper to zero over the last 5% of nodes (log-uniform grid)
    const int itap = std::max(1, static_cast<int>(std::floor(0.95 * (n - 1))));
    const double rtap_end = g.r[static_cast<size_t>(itap)];
    std::vector<double> taper(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
        taper[static_cast<size_t>(i)] = gs::chi(2.0 * g.r[static_cast<size_t>(i)] / rtap_end);

    auto bump = [&](double c, double wd) {
        std::vector<double> e(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) {
            const double t = std::log(g.r[static_cast<size_t>(i)] / c) / wd;
            e[static_cast<size_t>(i)] = std::exp(-t * t) * taper[static_cast<size_t>(i)];
        }
        return e;
    };

    const std::vector<double> g1 = bump(0.5, 0.8);
    const std::vector<double> g2v = bump(5.0, 0.8);
    const double G00 = num::inner_plane(g, g1, dirs.phi_M);
    const double G01 = num::inner_plane(g, g2v, dirs.phi_M);
    const double G10 = num::inner_plane(g, g1, dirs.Ls_phi_M);
    const double G11 = num::inner_plane(g, g2v, dirs.Ls_phi_M);
    const double det = G00 * G11 - G01 * G10;
    if (!(std::abs(det) > 0.0))
        throw NumericError("coercivity_L: degenerate reference-bump Gram matrix");

    auto energy_h2 = [&](const std::vector<double>& e) {
        const std::vector<double> e1 = num::d_r(g, e, 4);
        const std::vector<double> e2 = num::d2_r(g, e, 4);
        std::vector<double> a(static_cast<size_t>(n)), b(static_cast<size_t>(n)),
            c(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) {
            const size_t j = static_cast<size_t>(i);
            const double r = g.r[j];
            const double lap = e2[j] + e1[j] / r;
            a[j] = (1.0 + r * r * r * r) * lap * lap;
            b[j] = (1.0 + r * r) * e1[j] * e1[j];
            c[j] = e[j] * e[j];
        }
        return num::integrate_plane(g, a) + num::integrate_plane(g, b) +
               num::integrate_plane(g, c);
    };

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const double lc0 = std::log(0.1), lc1 = std::log(10.0 * dirs.M);
    const double lw0 = std::log(0.1), lw1 = std::log(10.0);

    CoercLReport rep;
    rep.M = dirs.M;
    rep.min_ratio1 = std::numeric_limits<double>::infinity();
    rep.min_ratio2 = std::numeric_limits<double>::infinity();
    for (int ks = 0; ks < samples; ++ks) {
        const double c0 = std::exp(lc0 + uni(rng) * (lc1 - lc0));
        const double wd = std::exp(lw0 + uni(rng) * (lw1 - lw0));
        std::vector<double> e = bump(c0, wd);
        const double rhs0 = num::inner_plane(g, e, dirs.phi_M);
        const double rhs1 = num::inner_plane(g, e, dirs.Ls_phi_M);
        const double al = (rhs0 * G11 - rhs1 * G01) / det;
        const double be = (G00 * rhs1 - G10 * rhs0) / det;
        for (int i = 0; i < n; ++i)
            e[static_cast<size_t>(i)] -=
                al * g1[static_cast<size_t>(i)] + be * g2v[static_cast<size_t>(i)];

        const RadialField Le = ops::apply_L(wrap(g, e), 4);
        const double den1 = ops::norm_l2q(g, Le.v);
        const double h2 = energy_h2(e);
        if (!(den1 * den1 > 1e-18 * h2)) {
            ++rep.skipped;
            continue;
        }
        const RadialField MLe = ops::apply_M(Le);
        const double ratio1 = num::inner_plane(g, MLe.v, Le.v) / (den1 * den1);
        const double ratio2 = den1 * den1 / h2;
        rep.min_ratio1 = std::min(rep.min_ratio1, ratio1);
        rep.min_ratio2 = std::min(rep.min_ratio2, ratio2);
        ++rep.samples;
    }

    {  // the unprojected kernel direction: ratio2 collapses toward zero
        std::vector<double> e(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i)
            e[static_cast<size_t>(i)] =
                gs::LamQ(g.r[static_cast<size_t>(i)]) * taper[static_cast<size_t>(i)];
        const RadialField Le = ops::apply_L(wrap(g, e), 4);
        const double den1 = ops::norm_l2q(g, Le.v);
        rep.kernel_ratio2 = den1 * den1 / energy_h2(e);
    }
    return rep;
}

}  // namespace pks::spectral
