#include <pks/modulation.hpp>

#include <algorithm>
#include <array>
#include <cmath>

#include <pks/errors.hpp>

namespace pks::mod {

namespace {

// Dormand-Prince 5(4) coefficients.
constexpr double A21 = 1.0 / 5;
constexpr double A31 = 3.0 / 40, A32 = 9.0 / 40;
constexpr double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9;
constexpr double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561,
                 A54 = -212.0 / 729;
constexpr double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247,
                 A64 = 49.0 / 176, A65 = -5103.0 / 18656;
constexpr double A71 = 35.0 / 384, A73 = 500.0 / 1113, A74 = 125.0 / 192,
                 A75 = -2187.0 / 6784, A76 = 11.0 / 84;
constexpr std::array<double, 7> B5 = {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192,
                                      -2187.0 / 6784, 11.0 / 84, 0.0};
constexpr std::array<double, 7> B4 = {5179.0 / 57600, 0.0, 7571.0 / 16695, 393.0 / 640,
                                      -92097.0 / 339200, 187.0 / 2100, 1.0 / 40};

using Vec3 = std::array<double, 3>;  // (b, log lambda, t)

Vec3 rhs(const Vec3& y) {
    double b = y[0];
    return {-2.0 * b * b / std::abs(std::log(b)), -b, std::exp(2.0 * y[1])};
}

Vec3 axpy(const Vec3& y, double a, const Vec3& k) {
    return {y[0] + a * k[0], y[1] + a * k[1], y[2] + a * k[2]};
}

ModulationState make_state(double s, const Vec3& y) {
    ModulationState st;
    st.s = s;
    st.b = y[0];
    st.log_lambda = y[1];
    st.lambda = std::exp(y[1]);
    st.t = y[2];
    return st;
}

// t at the first record past each power of ten in s, then geometric
// extrapolation of the (eventually geometric) decade increments.
std::optional<std::pair<double, double>> terminal_from_records(
    const std::vector<ModulationState>& st) {
    std::vector<double> tdec;
    int dmax = static_cast<int>(std::floor(std::log10(st.back().s)));
    for (int d = 0; d <= dmax; ++d) {
        double mark = std::pow(10.0, d);
        auto it = std::lower_bound(st.begin(), st.end(), mark,
                                   [](const ModulationState& a, double m) { return a.s < m; });
        if (it == st.end()) break;
        tdec.push_back(it->t);
    }
    if (tdec.size() < 3) return std::nullopt;
    std::vector<double> incs(tdec.size() - 1);
    for (size_t i = 0; i + 1 < tdec.size(); ++i) incs[i] = tdec[i + 1] - tdec[i];
    std::vector<size_t> pos;
    for (size_t i = 0; i < incs.size(); ++i)
        if (incs[i] > 0.0) pos.push_back(i);
    if (pos.size() < 2 || pos[pos.size() - 1] != pos[pos.size() - 2] + 1) return std::nullopt;
    double i1 = incs[pos[pos.size() - 2]], i2 = incs[pos[pos.size() - 1]];
    double rho = i2 / i1;
    if (!(rho > 0.0 && rho < 0.95)) return std::nullopt;
    double t_end = st.back().t;
    double tail_at_mark = i2 * rho / (1.0 - rho);
    double accrued = t_end - tdec[pos[pos.size() - 1] + 1];
    double tail = std::max(tail_at_mark - accrued, 0.0);
    double ulp = std::nextafter(t_end, 2.0 * t_end) - t_end;
    tail = std::max(tail, ulp);
    return std::make_pair(t_end + tail, tail);
}

}  // namespace

Trajectory integrate_reduced(double b0, double lambda0, double s_max, const OdeOptions& opts) {
    if (!(b0 > 0.0)) throw ConfigError("integrate_reduced: b0 must be positive");
    if (b0 >= std::exp(-1.0))
        throw ConfigError("integrate_reduced: b0 must be below 1/e (|log b| branch)");
    if (!(lambda0 > 0.0)) throw ConfigError("integrate_reduced: lambda0 must be positive");
    if (!(s_max > 1.0)) throw ConfigError("integrate_reduced: s_max must exceed 1");
    if (!(opts.rtol > 0.0 && opts.atol > 0.0 && opts.records_per_decade > 0))
        throw ConfigError("integrate_reduced: tolerances and record density must be positive");

    double s = 1.0;
    Vec3 y = {b0, std::log(lambda0), 0.0};
    double hctrl = 1e-3;
    double rec_ratio = std::pow(10.0, 1.0 / opts.records_per_decade);
    double next_rec = s * rec_ratio;

    Trajectory traj;
    traj.states.push_back(make_state(s, y));

    long steps = 0;
    while (s < s_max) {
        if (++steps > 20'000'000)
            throw NumericError("integrate_reduced: step limit exceeded (no progress)");
        double h = std::min(hctrl, s_max - s);
        h = std::min(h, std::max(next_rec - s, 1e-14 * s));

        std::array<Vec3, 7> k;
        k[0] = rhs(y);
        k[1] = rhs(axpy(y, h * A21, k[0]));
        k[2] = rhs(axpy(axpy(y, h * A31, k[0]), h * A32, k[1]));
        k[3] = rhs(axpy(axpy(axpy(y, h * A41, k[0]), h * A42, k[1]), h * A43, k[2]));
        k[4] = rhs(axpy(axpy(axpy(axpy(y, h * A51, k[0]), h * A52, k[1]), h * A53, k[2]),
                        h * A54, k[3]));
        k[5] = rhs(axpy(axpy(axpy(axpy(axpy(y, h * A61, k[0]), h * A62, k[1]), h * A63, k[2]),
                             h * A64, k[3]),
                        h * A65, k[4]));
        k[6] = rhs(axpy(axpy(axpy(axpy(axpy(y, h * A71, k[0]), h * A73, k[2]), h * A74, k[3]),
                             h * A75, k[4]),
                        h * A76, k[5]));

        Vec3 y5 = y, y4 = y;
        for (int j = 0; j < 7; ++j) {
            y5 = axpy(y5, h * B5[static_cast<size_t>(j)], k[static_cast<size_t>(j)]);
            y4 = axpy(y4, h * B4[static_cast<size_t>(j)], k[static_cast<size_t>(j)]);
        }
        double err2 = 0.0;
        for (int c = 0; c < 3; ++c) {
            double sc = opts.atol
                        + opts.rtol * std::max(std::abs(y[static_cast<size_t>(c)]),
                                               std::abs(y5[static_cast<size_t>(c)]));
            double e = (y5[static_cast<size_t>(c)] - y4[static_cast<size_t>(c)]) / sc;
            err2 += e * e;
        }
        double err = std::sqrt(err2 / 3.0);
        if (err <= 1.0) {
            s += h;
            y = y5;
            if (!(y[0] > 0.0) || !std::isfinite(y[0]) || !std::isfinite(y[1]))
                throw InstabilityError("integrate_reduced: state left the admissible region");
            if (s >= next_rec * (1.0 - 1e-12)) {
                traj.states.push_back(make_state(s, y));
                next_rec = s * rec_ratio;
            }
        }
        double fac = (err == 0.0) ? 5.0 : std::min(5.0, std::max(0.2, 0.9 * std::pow(err, -0.2)));
        hctrl = h * fac;
    }
    if (traj.states.back().s != s) traj.states.push_back(make_state(s, y));

    if (auto term = terminal_from_records(traj.states)) {
        traj.terminal_T = term->first;
        traj.terminal_tail = term->second;
    }
    return traj;
}

double b_asymptote(double s) {
    if (!(s > std::exp(1.0)))
        throw std::range_error("b_asymptote: defined for s > e (log log s must be positive)");
    return (std::log(s) - std::log(std::log(s))) / (2.0 * s);
}

RateLawReport rate_law_check(const Trajectory& traj) {
    RateLawReport rep;
    const auto& st = traj.states;
    if (st.size() < 8) return rep;
    double drop = st.front().log_lambda - st.back().log_lambda;
    if (drop < std::log(1e3)) return rep;  // too shallow to probe the collapse law

    double t_end = st.back().t;
    double T, tail;
    if (traj.terminal_T) {
        T = *traj.terminal_T;
        tail = traj.terminal_tail;
        rep.used_terminal = true;
    } else {
        // fallback: on the pure rate law lambda^{4/3} is affine in t near T
        size_t n = st.size();
        double t0 = st.front().t;
        double tcut = t_end - 0.2 * (t_end - t0);
        double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (const auto& r : st) {
            if (r.t < tcut) continue;
            double z = std::pow(r.lambda, 4.0 / 3.0);
            sw += 1.0;
            sx += r.t;
            sy += z;
            sxx += r.t * r.t;
            sxy += r.t * z;
        }
        (void)n;
        double det = sw * sxx - sx * sx;
        if (sw < 5.0 || det == 0.0) return rep;
        double slope = (sw * sxy - sx * sy) / det;
        double icept = (sy * sxx - sx * sxy) / det;
        if (!(slope < 0.0)) return rep;
        T = -icept / slope;
        if (!(T > t_end)) return rep;
        tail = T - t_end;
    }
    rep.T = T;

    double ulp = std::nextafter(T, 2.0 * T) - T;
    double d1 = std::max(tail, 100.0 * ulp);
    for (double widen : {10.0, 1000.0}) {
        double rmin = 0.0, rmax = 0.0;
        int count = 0;
        for (const auto& r : st) {
            double Tt = tail + (t_end - r.t);  // stays resolved where T - t underflows
            if (!(Tt >= d1 && Tt <= widen * d1)) continue;
            double R = (r.log_lambda - 0.5 * std::log(Tt)) / std::sqrt(std::abs(std::log(Tt)) / 2.0);
            if (count == 0) {
                rmin = rmax = R;
            } else {
                rmin = std::min(rmin, R);
                rmax = std::max(rmax, R);
            }
            ++count;
        }
        if (count >= 5) {
            rep.conclusive = true;
            rep.R_min = rmin;
            rep.R_max = rmax;
            rep.window_count = count;
            return rep;
        }
    }
    return rep;
}

}  // namespace pks::mod
