#include <pks/solver.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <pks/errors.hpp>
#include <pks/ground_state.hpp>
#include <pks/operators.hpp>
#include <pks/spectral.hpp>

namespace pks::sim {

using num::RadialGrid;

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}  // namespace

struct Stepper::Impl {
    std::vector<std::array<double, 5>> arow;  // linear-part coefficients, offsets -2..2
    Eigen::SparseMatrix<double> M;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    double dt = -1.0;
    bool analyzed = false;

    void build_matrix(const RadialGrid& g, double dt_new);
    void factor(const RadialGrid& g, double dt_new);
};

void Stepper::Impl::build_matrix(const RadialGrid& g, double dt_new) {
    const int n = g.n;
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<size_t>(5 * n));
    // row 0: even origin expansion m ~ a r^2 + c r^4 eliminated through
    // nodes 0..2 (q = e^{2h} is the r^2 growth factor per node)
    const double q = std::exp(2.0 * g.h);
    trips.emplace_back(0, 0, 1.0);
    trips.emplace_back(0, 1, -(q + 1.0) / (q * q));
    trips.emplace_back(0, 2, 1.0 / (q * q * q));
    for (int i = 1; i <= n - 2; ++i) {
        for (int k = 0; k < 5; ++k) {
            const int j = i + k - 2;
            if (j < 0 || j >= n) continue;
            double val = -dt_new * arow[static_cast<size_t>(i)][static_cast<size_t>(k)];
            if (j == i) val += 1.0;
            trips.emplace_back(i, j, val);
        }
    }
    trips.emplace_back(n - 1, n - 1, 1.0);
    M.resize(n, n);
    M.setFromTriplets(trips.begin(), trips.end());
}

void Stepper::Impl::factor(const RadialGrid& g, double dt_new) {
    if (dt_new == dt) return;
    build_matrix(g, dt_new);
    if (!analyzed) {
        lu.analyzePattern(M);
        analyzed = true;
    }
    lu.factorize(M);
    if (lu.info() != Eigen::Success)
        throw NumericError("time_step: diffusion matrix factorization failed");
    dt = dt_new;
}

Stepper::Stepper(const RadialGrid& g) : impl_(new Impl), g_(&g) {
    const int n = g.n;
    const double h = g.h;
    impl_->arow.assign(static_cast<size_t>(n), {0, 0, 0, 0, 0});
    // diffusion m'' - m'/r = (d2x - 2 dx)/r^2 on the log grid
    const double cxx4[5] = {-1.0 / (12 * h * h), 16.0 / (12 * h * h), -30.0 / (12 * h * h),
                            16.0 / (12 * h * h), -1.0 / (12 * h * h)};
    const double cx4[5] = {1.0 / (12 * h), -8.0 / (12 * h), 0.0, 8.0 / (12 * h),
                           -1.0 / (12 * h)};
    for (int i = 2; i < n - 2; ++i) {
        const double ir2 = 1.0 / (g.r[static_cast<size_t>(i)] * g.r[static_cast<size_t>(i)]);
        for (int k = 0; k < 5; ++k)
            impl_->arow[static_cast<size_t>(i)][static_cast<size_t>(k)] =
                (cxx4[k] - 2.0 * cx4[k]) * ir2;
    }
    // second-order rows next to the special boundary rows
    for (int i : {1, n - 2}) {
        const double ir2 = 1.0 / (g.r[static_cast<size_t>(i)] * g.r[static_cast<size_t>(i)]);
        auto& row = impl_->arow[static_cast<size_t>(i)];
        row = {0, 0, 0, 0, 0};
        row[1] = (1.0 / (h * h) + 1.0 / h) * ir2;
        row[2] = (-2.0 / (h * h)) * ir2;
        row[3] = (1.0 / (h * h) - 1.0 / h) * ir2;
    }
}

Stepper::~Stepper() = default;

void Stepper::step(std::vector<double>& m, double dt, double mbc) {
    if (!(dt > 0.0)) throw ConfigError("time_step: dt must be positive");
    const RadialGrid& g = *g_;
    const int n = g.n;
    impl_->factor(g, dt);
    const auto dxm = num::ddx(g, m, 4);
    Eigen::VectorXd rhs(n);
    double mmax = 0.0;
    for (int i = 0; i < n; ++i) {
        const double r = g.r[static_cast<size_t>(i)];
        rhs(i) = m[static_cast<size_t>(i)]
                 + dt * m[static_cast<size_t>(i)] * dxm[static_cast<size_t>(i)] / (r * r);
        mmax = std::max(mmax, std::abs(m[static_cast<size_t>(i)]));
    }
    rhs(0) = 0.0;
    rhs(n - 1) = mbc;
    Eigen::VectorXd sol = impl_->lu.solve(rhs);
    double smax = 0.0;
    for (int i = 0; i < n; ++i) smax = std::max(smax, std::abs(sol(i)));
    if (!std::isfinite(smax) || smax > 10.0 * std::max(mmax, std::abs(mbc)))
        throw InstabilityError("time_step: solution grew more than tenfold; reduce dt");
    for (int i = 0; i < n; ++i) m[static_cast<size_t>(i)] = sol(i);
}

std::vector<double> Stepper::flow_residual(const std::vector<double>& m) const {
    const RadialGrid& g = *g_;
    const int n = g.n;
    const auto dxm = num::ddx(g, m, 4);
    std::vector<double> out(static_cast<size_t>(n), 0.0);
    for (int i = 1; i <= n - 2; ++i) {
        double lin = 0.0;
        for (int k = 0; k < 5; ++k) {
            const int j = i + k - 2;
            if (j < 0 || j >= n) continue;
            lin += impl_->arow[static_cast<size_t>(i)][static_cast<size_t>(k)]
                   * m[static_cast<size_t>(j)];
        }
        const double r = g.r[static_cast<size_t>(i)];
        out[static_cast<size_t>(i)] =
            lin + m[static_cast<size_t>(i)] * dxm[static_cast<size_t>(i)] / (r * r);
    }
    return out;
}

double central_density(const RadialGrid& g, const std::vector<double>& m) {
    return num::m_origin_ac(g, m).first;
}

double u0_band(const RadialGrid& g, const std::vector<double>& m, double band_scale) {
    int hi = static_cast<int>(
        std::lower_bound(g.r.begin(), g.r.end(), 0.05 * band_scale) - g.r.begin());
    hi = std::max(hi, 9);
    hi = std::min(hi, g.n);
    const int rows = hi - 1;
    Eigen::MatrixXd V(rows, 2);
    Eigen::VectorXd y(rows);
    for (int k = 0; k < rows; ++k) {
        const double rr = g.r[static_cast<size_t>(k + 1)];
        const double w = 1.0 / (rr * rr);  // equalize relative weight, m ~ r^2
        V(k, 0) = rr * rr / 2.0 * w;
        V(k, 1) = rr * rr * rr * rr / 4.0 * w;
        y(k) = m[static_cast<size_t>(k + 1)] * w;
    }
    const Eigen::Vector2d c = V.colPivHouseholderQr().solve(y);
    return c(0);
}

double second_moment(const RadialGrid& g, const std::vector<double>& m) {
    const size_t n = m.size();
    return 2.0 * kPi
           * (g.r[n - 1] * g.r[n - 1] * m[n - 1] - g.r[0] * g.r[0] * m[0]
              - 2.0 * num::integrate_rdr(g, m));
}

FreeEnergyResult free_energy(const RadialGrid& g, const std::vector<double>& m) {
    const int n = g.n;
    const auto dxm = num::ddx(g, m, 4);
    std::vector<double> uc(static_cast<size_t>(n));
    int clamped = 0;
    for (int i = 0; i < n; ++i) {
        const double r = g.r[static_cast<size_t>(i)];
        double u = dxm[static_cast<size_t>(i)] / (r * r);
        if (u < 1e-300) {
            u = 1e-300;
            ++clamped;
        }
        uc[static_cast<size_t>(i)] = u;
    }
    const double u0 = num::m_origin_ac(g, m).first;
    const double r1 = g.r[0];

    std::vector<double> ulogu(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
        ulogu[static_cast<size_t>(i)] =
            uc[static_cast<size_t>(i)] * std::log(uc[static_cast<size_t>(i)]);
    const double ent = 2.0 * kPi
                       * (num::integrate_rdr(g, ulogu)
                          + u0 * std::log(std::max(u0, 1e-300)) * r1 * r1 / 2.0);

    // phi(r) = m log r + int_r^rmax u tau log tau dtau, assembled from the
    // cumulative integral I and its origin piece
    std::vector<double> ux(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
        ux[static_cast<size_t>(i)] = uc[static_cast<size_t>(i)] * g.x[static_cast<size_t>(i)];
    std::vector<double> I = num::cumint(g, ux, 2);
    const double I0 = u0 * r1 * r1 * (2.0 * std::log(r1) - 1.0) / 4.0;
    for (double& v : I) v += I0;
    std::vector<double> uphi(static_cast<size_t>(n));
    double phi0 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double phi = m[static_cast<size_t>(i)] * g.x[static_cast<size_t>(i)]
                           + (I[static_cast<size_t>(n - 1)] - I[static_cast<size_t>(i)]);
        if (i == 0) phi0 = phi;
        uphi[static_cast<size_t>(i)] = uc[static_cast<size_t>(i)] * phi;
    }
    const double inter =
        kPi * (num::integrate_rdr(g, uphi) + u0 * phi0 * r1 * r1 / 2.0);
    return {ent + inter, clamped};
}

SimState init_from_profile(const RadialGrid& g, double b0, double mass_excess,
                           const std::vector<double>* perturbation) {
    const int n = g.n;
    std::vector<double> u(static_cast<size_t>(n));
    if (b0 == 0.0) {
        for (int i = 0; i < n; ++i) u[static_cast<size_t>(i)] = gs::Q(g.r[static_cast<size_t>(i)]);
    } else {
        u = prof::assemble_profile(g, b0).Qb;  // validates 0 < b0 <= 1e-2
    }
    const double scale = 1.0 + mass_excess / (8.0 * kPi);
    if (!(scale > 0.0))
        throw ConfigError("init_from_profile: mass_excess removes more than the whole mass");
    for (double& v : u) v *= scale;
    if (perturbation != nullptr) {
        if (static_cast<int>(perturbation->size()) != n)
            throw ConfigError("init_from_profile: perturbation size does not match the grid");
        for (int i = 0; i < n; ++i)
            u[static_cast<size_t>(i)] += (*perturbation)[static_cast<size_t>(i)];
    }
    for (int i = 0; i < n; ++i)
        if (u[static_cast<size_t>(i)] < 0.0)
            throw InvalidDataError("init_from_profile: negative initial density");

    SimState st;
    st.grid = &g;
    st.m = ops::partial_mass_vec(g, u);
    st.mbc = st.m.back();
    st.mass_initial = 2.0 * kPi * st.mbc;
    st.subcritical = st.mass_initial <= 8.0 * kPi;
    return st;
}

double renormalize(SimState& st) {
    const double delta = std::log(st.lambda_pin);
    if (delta == 0.0) return 0.0;
    const RadialGrid& g = *st.grid;
    const int n = g.n;
    auto shifted = num::shift_sample(g, st.m, delta);
    auto back = num::shift_sample(g, shifted, -delta);
    double scale = 0.0, err = 0.0;
    for (int i = 0; i < n; ++i) scale = std::max(scale, std::abs(st.m[static_cast<size_t>(i)]));
    for (int i = 10; i < n - 10; ++i)
        err = std::max(err,
                       std::abs(back[static_cast<size_t>(i)] - st.m[static_cast<size_t>(i)]));
    err = (scale > 0.0) ? err / scale : 0.0;
    if (err > 1e-6)
        throw ResolutionError("renormalize: resampling roundtrip error exceeds 1e-6; "
                              "the state is not resolved on this grid");
    st.m = std::move(shifted);
    st.mbc = st.m.back();
    st.lambda_frame *= st.lambda_pin;
    st.lambda_pin = 1.0;
    return err;
}

ProfileCache::ProfileCache(const RadialGrid& g) : g_(&g), t1_(prof::build_T1(g)) {
    q_.resize(static_cast<size_t>(g.n));
    for (int i = 0; i < g.n; ++i) q_[static_cast<size_t>(i)] = gs::Q(g.r[static_cast<size_t>(i)]);
}

const std::vector<double>& ProfileCache::Qb(double b) {
    if (b == 0.0) return q_;
    if (!(b > 0.0 && b < 1e-1))
        throw ConfigError("profile cache: b must lie in [0, 1e-1)");
    auto it = cache_.find(b);
    if (it != cache_.end()) return it->second;

    const RadialGrid& g = *g_;
    const int n = g.n;
    // cutoffs clamped to the grid so small-b profiles stay representable
    const double B0 = std::min(1.0 / std::sqrt(b), g.rmax / 16.0);
    const double B1 = std::min(std::abs(std::log(b)) / std::sqrt(b), g.rmax / 4.0);
    const auto rad = prof::radiation_with_cutoff(g, B0);
    const auto t2 = prof::build_T2(g, t1_, rad);
    std::vector<double> qb(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double r = g.r[static_cast<size_t>(i)];
        const double cB = gs::chi(r / B1);
        qb[static_cast<size_t>(i)] = gs::Q(r) + b * cB * t1_.T1[static_cast<size_t>(i)]
                                     + b * b * cB * t2.T2[static_cast<size_t>(i)];
    }
    if (cache_.size() >= 4) {
        cache_.erase(order_.front());
        order_.pop_front();
    }
    order_.push_back(b);
    return cache_.emplace(b, std::move(qb)).first->second;
}

Decomposer::Decomposer(const RadialGrid& g, double M) : g_(&g), M_(M), cache_(g) {
    if (!(M >= 20.0)) throw ConfigError("decompose: localization scale M must be >= 20");
    auto ds = spectral::build_Phi_M(g, cache_.t1(), M);
    PhiM_ = std::move(ds.phi_M);
    LsPhiM_ = std::move(ds.Ls_phi_M);
    cM_ = ds.c_M;
    std::vector<double> qv(static_cast<size_t>(g.n)), ap(static_cast<size_t>(g.n));
    for (int i = 0; i < g.n; ++i) {
        qv[static_cast<size_t>(i)] = gs::Q(g.r[static_cast<size_t>(i)]);
        ap[static_cast<size_t>(i)] = std::abs(PhiM_[static_cast<size_t>(i)]);
    }
    scale_ = num::inner_plane(g, qv, ap);
}

DecomposeResult Decomposer::decompose(const std::vector<double>& m, double lambda_hint,
                                      double b_hint) const {
    const RadialGrid& g = *g_;
    const int n = g.n;
    if (!(lambda_hint > 0.0) || b_hint < 0.0)
        throw ConfigError("decompose: hints must satisfy lambda > 0, b >= 0");

    auto evalG = [&](double l1, double b,
                     std::vector<double>* vout) -> std::array<double, 2> {
        auto msh = num::shift_sample(g, m, std::log(l1));
        auto dxm = num::ddx(g, msh, 4);
        const auto& qb = cache_.Qb(b);
        std::vector<double> v(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) {
            const double r = g.r[static_cast<size_t>(i)];
            v[static_cast<size_t>(i)] =
                dxm[static_cast<size_t>(i)] / (r * r) - qb[static_cast<size_t>(i)];
        }
        std::array<double, 2> out = {num::inner_plane(g, v, PhiM_),
                                     num::inner_plane(g, v, LsPhiM_)};
        if (vout != nullptr) *vout = std::move(v);
        return out;
    };

    const double tol = 1e-13;
    double lam = lambda_hint, b = b_hint;
    for (int it = 0; it < 50; ++it) {
        std::vector<double> v;
        const auto g0 = evalG(lam, b, &v);
        if (std::max(std::abs(g0[0]), std::abs(g0[1])) < tol * scale_) {
            DecomposeResult res;
            res.lambda1 = lam;
            res.b = b;
            res.eps = std::move(v);
            res.iters = it;
            return res;
        }
        const double dl = 1e-7 * lam;
        const double db = std::max(1e-7 * std::abs(b), 1e-10);
        const auto gl = evalG(lam + dl, b, nullptr);
        const auto gb = evalG(lam, b + db, nullptr);
        const double J00 = (gl[0] - g0[0]) / dl, J01 = (gb[0] - g0[0]) / db;
        const double J10 = (gl[1] - g0[1]) / dl, J11 = (gb[1] - g0[1]) / db;
        const double det = J00 * J11 - J01 * J10;
        if (!std::isfinite(det) || std::abs(det) < 1e-30 * scale_ * scale_)
            throw DecompositionError("decompose: singular Jacobian (state left the tube)");
        const double s0 = (-g0[0] * J11 + g0[1] * J01) / det;
        const double s1 = (-J00 * g0[1] + J10 * g0[0]) / det;
        double damp = 1.0;
        double ln = lam + s0, bn = b + s1;
        while (!(ln > 0.0) || bn < 0.0 || std::abs(std::log(ln / lam)) > 0.5) {
            damp *= 0.5;
            if (damp < 1e-4)
                throw DecompositionError("decompose: step damping collapsed");
            ln = lam + damp * s0;
            bn = b + damp * s1;
        }
        if (!std::isfinite(ln) || !std::isfinite(bn))
            throw DecompositionError("decompose: non-finite iterate");
        lam = ln;
        b = bn;
    }
    throw DecompositionError("decompose: no convergence in 50 iterations");
}

std::vector<double> smooth_derivative(const std::vector<double>& x,
                                      const std::vector<double>& y, int half_window) {
    const int n = static_cast<int>(x.size());
    std::vector<double> d(static_cast<size_t>(n), 0.0);
    if (n < 3) return d;
    for (int i = 0; i < n; ++i) {
        const int lo = std::max(0, i - half_window);
        const int hi = std::min(n, i + half_window + 1);
        const int w = hi - lo;
        Eigen::MatrixXd V(w, 3);
        Eigen::VectorXd rhs(w);
        for (int j = 0; j < w; ++j) {
            const double dx = x[static_cast<size_t>(lo + j)] - x[static_cast<size_t>(i)];
            V(j, 0) = dx * dx;
            V(j, 1) = dx;
            V(j, 2) = 1.0;
            rhs(j) = y[static_cast<size_t>(lo + j)];
        }
        const Eigen::Vector3d c = V.colPivHouseholderQr().solve(rhs);
        d[static_cast<size_t>(i)] = c(1);
    }
    return d;
}

RunResult run(const RadialGrid& g, const RunConfig& cfg, std::optional<SimState> resume_from) {
    if (!(cfg.dt0 > 0.0)) throw ConfigError("run: dt0 must be positive");
    if (!(cfg.lambda_stop > 0.0)) throw ConfigError("run: lambda_stop must be positive");
    if (cfg.record_every < 1) throw ConfigError("run: record_every must be >= 1");
    if (cfg.max_steps < 1) throw ConfigError("run: max_steps must be >= 1");
    if (!(cfg.trigger > 1.0)) throw ConfigError("run: trigger must exceed 1");

    const int n = g.n;
    SimState st;
    if (resume_from) {
        st = std::move(*resume_from);
        if (static_cast<int>(st.m.size()) != n)
            throw ConfigError("run: resume state does not match the grid");
        st.grid = &g;
    } else {
        st = init_from_profile(g, cfg.b0, cfg.mass_excess);
    }

    Stepper stepper(g);
    std::unique_ptr<Decomposer> dec;
    if (cfg.decompose_every > 0) dec = std::make_unique<Decomposer>(g, cfg.M);
    double prev_lam = resume_from ? std::max(st.lambda_pin, 0.05) : 1.0;
    double prev_b = cfg.b0 > 0.0 ? cfg.b0 : 1e-2;

    RunResult out;
    const bool renorm = cfg.frame == Frame::renormalized;
    bool post_event_pending = false;

    while (true) {
        const double w0 = u0_band(g, st.m, st.lambda_pin);
        st.lambda_pin = std::sqrt(8.0 / w0);
        const double lam_eff = st.lambda_frame * st.lambda_pin;
        if (lam_eff <= cfg.lambda_stop) {
            out.stop_reason = "lambda_stop";
            break;
        }
        if (cfg.t_max > 0.0 && st.t >= cfg.t_max) {
            out.stop_reason = "t_max";
            break;
        }
        if (st.step >= cfg.max_steps) {
            out.stop_reason = "max_steps";
            break;
        }
        if (renorm && w0 >= 8.0 * cfg.trigger) {
            const double rerr = renormalize(st);
            out.events.push_back({st.step, st.t, st.s, st.lambda_frame, rerr});
            post_event_pending = true;
            continue;
        }

        const auto dxm = num::ddx(g, st.m, 4);
        double umax = -std::numeric_limits<double>::infinity();
        double umin = std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i) {
            const double r = g.r[static_cast<size_t>(i)];
            const double u = dxm[static_cast<size_t>(i)] / (r * r);
            umax = std::max(umax, u);
            umin = std::min(umin, u);
        }
        const double dsig = cfg.dt0 / std::max(umax, w0);
        stepper.step(st.m, dsig, st.mbc);
        st.t += st.lambda_frame * st.lambda_frame * dsig;
        st.s += dsig * w0 / 8.0;

        if (st.step % cfg.record_every == 0) {
            DiagnosticsRecord rec;
            rec.t = st.t;
            rec.s = st.s;
            rec.lambda_eff = lam_eff;
            rec.lambda_pin = st.lambda_pin;
            rec.mass = 2.0 * kPi * st.m[static_cast<size_t>(n - 2)];
            const auto fe = free_energy(g, st.m);
            rec.free_energy = fe.value
                              + std::log(st.lambda_frame)
                                    * (rec.mass * rec.mass / (4.0 * kPi) - 2.0 * rec.mass);
            rec.clamped_nodes = fe.clamped_nodes;
            rec.second_moment =
                st.lambda_frame * st.lambda_frame * second_moment(g, st.m);
            rec.u_max = umax;
            rec.u_min = umin;
            rec.w0 = w0;
            rec.b_pinned = rec.b_orth = rec.virial_residual = kNaN;
            rec.post_event = post_event_pending;
            post_event_pending = false;
            const long rec_index = st.step / cfg.record_every;
            if (dec && rec_index % cfg.decompose_every == 0) {
                try {
                    const auto dr =
                        dec->decompose(st.m, std::max(0.98 * prev_lam, 0.05), prev_b);
                    prev_lam = dr.lambda1;
                    prev_b = dr.b;
                    rec.b_orth = dr.b;
                } catch (const DecompositionError&) {
                    // state momentarily outside the tube; retry at the next cadence
                }
            }
            out.records.push_back(rec);
        }
        ++st.step;
    }

    // post-processing: pinned b from the smoothed lambda series, virial residual
    const size_t nr = out.records.size();
    if (nr >= 3) {
        std::vector<double> ss(nr), lls(nr);
        for (size_t i = 0; i < nr; ++i) {
            ss[i] = out.records[i].s;
            lls[i] = std::log(out.records[i].lambda_eff);
        }
        const auto dls = smooth_derivative(ss, lls);
        for (size_t i = 0; i < nr; ++i) out.records[i].b_pinned = -dls[i];
        for (size_t i = 1; i + 1 < nr; ++i) {
            if (out.records[i].post_event || out.records[i + 1].post_event) continue;
            const double dt = out.records[i + 1].t - out.records[i - 1].t;
            if (dt <= 0.0) continue;
            const double lhs =
                (out.records[i + 1].second_moment - out.records[i - 1].second_moment) / dt;
            const double mass = out.records[i].mass;
            const double rhs = 4.0 * (1.0 - mass / (8.0 * kPi)) * mass;
            if (rhs != 0.0) out.records[i].virial_residual = (lhs - rhs) / std::abs(rhs);
        }
    }
    out.final_state = std::move(st);
    return out;
}

}  // namespace pks::sim
