#include "pks/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pks/errors.hpp"

namespace pks::num {

namespace {

// Interval weights for int_{x_i}^{x_{i+1}} f exp(beta*x) dx based on a cubic
// through four consecutive nodes, expressed against the local moments of the
// exponential weight. wc uses nodes i-1..i+2, wf nodes i..i+3 (first
// interval), wl nodes i-2..i+1 (last interval). All in units of h; the caller
// multiplies by exp(beta*x_i).
struct IntervalWeights {
    std::array<double, 4> wc, wf, wl;
};

IntervalWeights interval_weights(double h, double beta) {
    const std::array<double, 4> m = exp_moments(beta * h);
    const double M0 = m[0], M1 = m[1], M2 = m[2], M3 = m[3];
    IntervalWeights w;
    w.wc = {-(M3 - 3.0 * M2 + 2.0 * M1) / 6.0,
            (M3 - 2.0 * M2 - M1 + 2.0 * M0) / 2.0,
            -(M3 - M2 - 2.0 * M1) / 2.0,
            (M3 - M1) / 6.0};
    w.wf = {-(M3 - 6.0 * M2 + 11.0 * M1 - 6.0 * M0) / 6.0,
            (M3 - 5.0 * M2 + 6.0 * M1) / 2.0,
            -(M3 - 4.0 * M2 + 3.0 * M1) / 2.0,
            (M3 - 3.0 * M2 + 2.0 * M1) / 6.0};
    w.wl = {-(M3 - M1) / 6.0,
            (M3 + M2 - 2.0 * M1) / 2.0,
            -(M3 + 2.0 * M2 - M1 - 2.0 * M0) / 2.0,
            (M3 + 3.0 * M2 + 2.0 * M1) / 6.0};
    for (auto* a : {&w.wc, &w.wf, &w.wl})
        for (double& c : *a) c *= h;
    return w;
}

void check_beta(int beta) {
    if (beta < 0 || beta > 2)
        throw UsageError("quadrature beta must be 0, 1 or 2");
}

}  // namespace

RadialGrid build_grid(double rmin, double rmax, int n) {
    if (!(rmin > 0.0) || !(rmax > rmin))
        throw ConfigError("grid requires 0 < rmin < rmax");
    if (n < 16)
        throw ConfigError("grid requires at least 16 nodes");
    RadialGrid g;
    g.rmin = rmin;
    g.rmax = rmax;
    g.n = n;
    const double x0 = std::log(rmin), x1 = std::log(rmax);
    g.h = (x1 - x0) / static_cast<double>(n - 1);
    g.x.resize(static_cast<size_t>(n));
    g.r.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
        g.x[static_cast<size_t>(i)] = x0 + g.h * static_cast<double>(i);
    g.x.back() = x1;
    for (int i = 0; i < n; ++i)
        g.r[static_cast<size_t>(i)] = std::exp(g.x[static_cast<size_t>(i)]);
    for (int beta = 0; beta <= 2; ++beta) {
        const IntervalWeights w = interval_weights(g.h, static_cast<double>(beta));
        g.wc[static_cast<size_t>(beta)] = w.wc;
        g.wf[static_cast<size_t>(beta)] = w.wf;
        g.wl[static_cast<size_t>(beta)] = w.wl;
    }
    return g;
}

RadialField sample(const RadialGrid& g, const std::function<double(double)>& f, FieldRole role) {
    RadialField out(g, role);
    for (int i = 0; i < g.n; ++i) out[i] = f(g.r[static_cast<size_t>(i)]);
    return out;
}

std::array<double, 4> exp_moments(double alpha) {
    std::array<double, 4> m{};
    if (std::abs(alpha) < 0.5) {
        for (int k = 0; k <= 3; ++k) {
            double term = 1.0, s = 0.0;
            for (int j = 0;; ++j) {
                const double c = term / static_cast<double>(k + j + 1);
                s += c;
                if (std::abs(c) < 1e-18 * std::abs(s) + 1e-300) break;
                term *= alpha / static_cast<double>(j + 1);
            }
            m[static_cast<size_t>(k)] = s;
        }
    } else {
        const double ea = std::exp(alpha);
        m[0] = (ea - 1.0) / alpha;
        for (int k = 1; k <= 3; ++k)
            m[static_cast<size_t>(k)] =
                (ea - static_cast<double>(k) * m[static_cast<size_t>(k - 1)]) / alpha;
    }
    return m;
}

double stable_sum(const double* p, size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (size_t i = 0; i < n; ++i) s += p[i];
        return s;
    }
    const size_t half = n / 2;
    return stable_sum(p, half) + stable_sum(p + half, n - half);
}

double stable_sum(const std::vector<double>& v) { return stable_sum(v.data(), v.size()); }

std::vector<double> seg_integrals(const RadialGrid& g, const std::vector<double>& f, int beta) {
    check_beta(beta);
    if (static_cast<int>(f.size()) != g.n)
        throw UsageError("seg_integrals: field size does not match grid");
    const int n = g.n;
    const auto& wc = g.wc[static_cast<size_t>(beta)];
    const auto& wf = g.wf[static_cast<size_t>(beta)];
    const auto& wl = g.wl[static_cast<size_t>(beta)];
    const double b = static_cast<double>(beta);
    std::vector<double> s(static_cast<size_t>(n - 1));
    s[0] = std::exp(b * g.x[0]) *
           (wf[0] * f[0] + wf[1] * f[1] + wf[2] * f[2] + wf[3] * f[3]);
    for (int i = 1; i < n - 2; ++i) {
        const double e = std::exp(b * g.x[static_cast<size_t>(i)]);
        s[static_cast<size_t>(i)] =
            e * (wc[0] * f[static_cast<size_t>(i - 1)] + wc[1] * f[static_cast<size_t>(i)] +
                 wc[2] * f[static_cast<size_t>(i + 1)] + wc[3] * f[static_cast<size_t>(i + 2)]);
    }
    const size_t j = static_cast<size_t>(n - 2);
    s[j] = std::exp(b * g.x[j]) *
           (wl[0] * f[j - 2] + wl[1] * f[j - 1] + wl[2] * f[j] + wl[3] * f[j + 1]);
    return s;
}

std::vector<double> cumint(const RadialGrid& g, const std::vector<double>& f, int beta) {
    const std::vector<double> s = seg_integrals(g, f, beta);
    std::vector<double> out(static_cast<size_t>(g.n), 0.0);
    double acc = 0.0;
    for (int i = 1; i < g.n; ++i) {
        acc += s[static_cast<size_t>(i - 1)];
        out[static_cast<size_t>(i)] = acc;
    }
    return out;
}

double integrate_rdr(const RadialGrid& g, const std::vector<double>& f) {
    const std::vector<double> s = seg_integrals(g, f, 2);
    return stable_sum(s);
}

double integrate_plane(const RadialGrid& g, const std::vector<double>& f) {
    return 2.0 * M_PI * integrate_rdr(g, f);
}

double integrate_radial(const RadialField& f) {
    if (f.grid == nullptr) throw UsageError("integrate_radial: field has no grid");
    const double val = integrate_plane(*f.grid, f.v);
    if (!std::isfinite(val))
        throw NumericError("integrate_radial: non-finite integral");
    return val;
}

double inner_plane(const RadialGrid& g, const std::vector<double>& a,
                   const std::vector<double>& b) {
    if (a.size() != b.size() || static_cast<int>(a.size()) != g.n)
        throw UsageError("inner_plane: size mismatch");
    std::vector<double> prod(a.size());
    for (size_t i = 0; i < a.size(); ++i) prod[i] = a[i] * b[i];
    return integrate_plane(g, prod);
}

std::vector<double> weights_rdr(const RadialGrid& g) {
    const int n = g.n;
    const auto& wc = g.wc[2];
    const auto& wf = g.wf[2];
    const auto& wl = g.wl[2];
    std::vector<double> w(static_cast<size_t>(n), 0.0);
    const double e0 = std::exp(2.0 * g.x[0]);
    for (int k = 0; k < 4; ++k) w[static_cast<size_t>(k)] += e0 * wf[static_cast<size_t>(k)];
    for (int i = 1; i < n - 2; ++i) {
        const double e = std::exp(2.0 * g.x[static_cast<size_t>(i)]);
        for (int k = 0; k < 4; ++k)
            w[static_cast<size_t>(i - 1 + k)] += e * wc[static_cast<size_t>(k)];
    }
    const double el = std::exp(2.0 * g.x[static_cast<size_t>(n - 2)]);
    for (int k = 0; k < 4; ++k)
        w[static_cast<size_t>(n - 4 + k)] += el * wl[static_cast<size_t>(k)];
    return w;
}

std::vector<double> ddx(const RadialGrid& g, const std::vector<double>& f, int acc) {
    if (static_cast<int>(f.size()) != g.n) throw UsageError("ddx: size mismatch");
    const int n = g.n;
    const double h = g.h;
    std::vector<double> d(static_cast<size_t>(n));
    auto F = [&](int i) { return f[static_cast<size_t>(i)]; };
    if (acc == 2) {
        d[0] = (-3.0 * F(0) + 4.0 * F(1) - F(2)) / (2.0 * h);
        for (int i = 1; i < n - 1; ++i)
            d[static_cast<size_t>(i)] = (F(i + 1) - F(i - 1)) / (2.0 * h);
        d[static_cast<size_t>(n - 1)] =
            (3.0 * F(n - 1) - 4.0 * F(n - 2) + F(n - 3)) / (2.0 * h);
    } else if (acc == 4) {
        d[0] = (-25.0 * F(0) + 48.0 * F(1) - 36.0 * F(2) + 16.0 * F(3) - 3.0 * F(4)) / (12.0 * h);
        d[1] = (-3.0 * F(0) - 10.0 * F(1) + 18.0 * F(2) - 6.0 * F(3) + F(4)) / (12.0 * h);
        for (int i = 2; i < n - 2; ++i)
            d[static_cast<size_t>(i)] =
                (F(i - 2) - 8.0 * F(i - 1) + 8.0 * F(i + 1) - F(i + 2)) / (12.0 * h);
        d[static_cast<size_t>(n - 2)] =
            (3.0 * F(n - 1) + 10.0 * F(n - 2) - 18.0 * F(n - 3) + 6.0 * F(n - 4) - F(n - 5)) /
            (12.0 * h);
        d[static_cast<size_t>(n - 1)] =
            (25.0 * F(n - 1) - 48.0 * F(n - 2) + 36.0 * F(n - 3) - 16.0 * F(n - 4) +
             3.0 * F(n - 5)) /
            (12.0 * h);
    } else {
        throw UsageError("ddx: accuracy must be 2 or 4");
    }
    return d;
}

std::vector<double> d2dx(const RadialGrid& g, const std::vector<double>& f, int acc) {
    if (static_cast<int>(f.size()) != g.n) throw UsageError("d2dx: size mismatch");
    const int n = g.n;
    const double h2 = g.h * g.h;
    std::vector<double> d(static_cast<size_t>(n));
    auto F = [&](int i) { return f[static_cast<size_t>(i)]; };
    if (acc == 2) {
        d[0] = (2.0 * F(0) - 5.0 * F(1) + 4.0 * F(2) - F(3)) / h2;
        for (int i = 1; i < n - 1; ++i)
            d[static_cast<size_t>(i)] = (F(i - 1) - 2.0 * F(i) + F(i + 1)) / h2;
        d[static_cast<size_t>(n - 1)] =
            (2.0 * F(n - 1) - 5.0 * F(n - 2) + 4.0 * F(n - 3) - F(n - 4)) / h2;
    } else if (acc == 4) {
        d[0] = (45.0 * F(0) - 154.0 * F(1) + 214.0 * F(2) - 156.0 * F(3) + 61.0 * F(4) -
                10.0 * F(5)) /
               (12.0 * h2);
        d[1] = (10.0 * F(0) - 15.0 * F(1) - 4.0 * F(2) + 14.0 * F(3) - 6.0 * F(4) + F(5)) /
               (12.0 * h2);
        for (int i = 2; i < n - 2; ++i)
            d[static_cast<size_t>(i)] = (-F(i - 2) + 16.0 * F(i - 1) - 30.0 * F(i) +
                                         16.0 * F(i + 1) - F(i + 2)) /
                                        (12.0 * h2);
        d[static_cast<size_t>(n - 2)] =
            (10.0 * F(n - 1) - 15.0 * F(n - 2) - 4.0 * F(n - 3) + 14.0 * F(n - 4) -
             6.0 * F(n - 5) + F(n - 6)) /
            (12.0 * h2);
        d[static_cast<size_t>(n - 1)] =
            (45.0 * F(n - 1) - 154.0 * F(n - 2) + 214.0 * F(n - 3) - 156.0 * F(n - 4) +
             61.0 * F(n - 5) - 10.0 * F(n - 6)) /
            (12.0 * h2);
    } else {
        throw UsageError("d2dx: accuracy must be 2 or 4");
    }
    return d;
}

std::vector<double> d_r(const RadialGrid& g, const std::vector<double>& f, int acc) {
    std::vector<double> d = ddx(g, f, acc);
    for (int i = 0; i < g.n; ++i) d[static_cast<size_t>(i)] /= g.r[static_cast<size_t>(i)];
    return d;
}

std::vector<double> d2_r(const RadialGrid& g, const std::vector<double>& f, int acc) {
    const std::vector<double> d1 = ddx(g, f, acc);
    std::vector<double> d2 = d2dx(g, f, acc);
    for (int i = 0; i < g.n; ++i) {
        const double r = g.r[static_cast<size_t>(i)];
        d2[static_cast<size_t>(i)] = (d2[static_cast<size_t>(i)] - d1[static_cast<size_t>(i)]) / (r * r);
    }
    return d2;
}

RadialField differentiate(const RadialField& f, int order) {
    if (f.grid == nullptr) throw UsageError("differentiate: field has no grid");
    if (order != 1 && order != 2)
        throw ConfigError("differentiate: order must be 1 or 2");
    const RadialGrid& g = *f.grid;
    if (g.n < 5) throw ConfigError("differentiate: grid needs at least 5 nodes");
    const int n = g.n;
    RadialField out(g, FieldRole::generic);
    const std::vector<double>& r = g.r;
    auto F = [&](int i) { return f.v[static_cast<size_t>(i)]; };
    auto R = [&](int i) { return r[static_cast<size_t>(i)]; };

    if (order == 1) {
        for (int i = 1; i < n - 1; ++i) {
            const double h1 = R(i) - R(i - 1);
            const double h2 = R(i + 1) - R(i);
            out[i] = -h2 / (h1 * (h1 + h2)) * F(i - 1) + (h2 - h1) / (h1 * h2) * F(i) +
                     h1 / (h2 * (h1 + h2)) * F(i + 1);
        }
        // one-sided three-point rows, exact for quadratics
        {
            const double a = R(0), b = R(1), c = R(2);
            out[0] = F(0) * (2.0 * a - b - c) / ((a - b) * (a - c)) +
                     F(1) * (a - c) / ((b - a) * (b - c)) +
                     F(2) * (a - b) / ((c - a) * (c - b));
        }
        {
            const double a = R(n - 3), b = R(n - 2), c = R(n - 1);
            out[n - 1] = F(n - 3) * (c - b) / ((a - b) * (a - c)) +
                         F(n - 2) * (c - a) / ((b - a) * (b - c)) +
                         F(n - 1) * (2.0 * c - a - b) / ((c - a) * (c - b));
        }
    } else {
        for (int i = 1; i < n - 1; ++i) {
            const double a = R(i - 1), b = R(i), c = R(i + 1);
            out[i] = 2.0 * (F(i - 1) / ((a - b) * (a - c)) + F(i) / ((b - a) * (b - c)) +
                            F(i + 1) / ((c - a) * (c - b)));
        }
        // one-sided four-point rows, exact for cubics
        auto cubic_d2 = [&](int j0, double at) {
            const double t[4] = {R(j0), R(j0 + 1), R(j0 + 2), R(j0 + 3)};
            double val = 0.0;
            for (int j = 0; j < 4; ++j) {
                double denom = 1.0, sum_others = 0.0;
                for (int k = 0; k < 4; ++k) {
                    if (k == j) continue;
                    denom *= t[j] - t[k];
                    sum_others += at - t[k];
                }
                val += F(j0 + j) * 2.0 * sum_others / denom;
            }
            return val;
        };
        out[0] = cubic_d2(0, R(0));
        out[n - 1] = cubic_d2(n - 4, R(n - 1));
    }
    return out;
}

double interpolate(const RadialField& f, double r) {
    if (f.grid == nullptr) throw UsageError("interpolate: field has no grid");
    const RadialGrid& g = *f.grid;
    if (!(r >= g.rmin * (1.0 - 1e-12)) || !(r <= g.rmax * (1.0 + 1e-12)))
        throw std::out_of_range("interpolate: r outside grid range");
    const double xq = std::min(std::max(std::log(r), g.x.front()), g.x.back());
    const double p = (xq - g.x.front()) / g.h;
    const double pr = std::round(p);
    if (std::abs(p - pr) < 1e-9 && pr >= 0.0 && pr < static_cast<double>(g.n))
        return f.v[static_cast<size_t>(pr)];
    int j0 = static_cast<int>(std::floor(p)) - 1;
    j0 = std::min(std::max(j0, 0), g.n - 4);
    double val = 0.0;
    for (int j = 0; j < 4; ++j) {
        double w = 1.0;
        for (int k = 0; k < 4; ++k) {
            if (k == j) continue;
            w *= (xq - g.x[static_cast<size_t>(j0 + k)]) /
                 (g.x[static_cast<size_t>(j0 + j)] - g.x[static_cast<size_t>(j0 + k)]);
        }
        val += w * f.v[static_cast<size_t>(j0 + j)];
    }
    return val;
}

std::pair<double, double> origin_fit(const RadialGrid& g, const std::vector<double>& u) {
    const double r1 = g.r[0], r2 = g.r[1];
    const double c = (u[1] - u[0]) / (r2 * r2 - r1 * r1);
    const double a = u[0] - c * r1 * r1;
    return {a, c};
}

std::pair<double, double> m_origin_ac(const RadialGrid& g, const std::vector<double>& m) {
    // m(r) ~ (a/2) r^2 + (c/4) r^4 through nodes 1 and 2
    const double r1 = g.r[1], r2 = g.r[2];
    const double a11 = r1 * r1 / 2.0, a12 = r1 * r1 * r1 * r1 / 4.0;
    const double a21 = r2 * r2 / 2.0, a22 = r2 * r2 * r2 * r2 / 4.0;
    const double det = a11 * a22 - a12 * a21;
    const double a = (m[1] * a22 - a12 * m[2]) / det;
    const double c = (a11 * m[2] - m[1] * a21) / det;
    return {a, c};
}

std::optional<std::pair<double, double>> tail_power_fit(const RadialGrid& g,
                                                        const std::vector<double>& u,
                                                        double decades) {
    const int n = g.n;
    double scale = 0.0;
    for (double v : u) scale = std::max(scale, std::abs(v));
    if (scale == 0.0) return std::make_pair(0.0, 4.0);
    const double x_from = g.x.back() - decades * std::log(10.0);
    int i0 = static_cast<int>(std::lower_bound(g.x.begin(), g.x.end(), x_from) - g.x.begin());
    i0 = std::min(std::max(i0, 0), n - 4);
    double wmax = 0.0, wmin = 0.0, amax = 0.0;
    for (int i = i0; i < n; ++i) {
        wmax = std::max(wmax, u[static_cast<size_t>(i)]);
        wmin = std::min(wmin, u[static_cast<size_t>(i)]);
        amax = std::max(amax, std::abs(u[static_cast<size_t>(i)]));
    }
    if (amax < 1e-13 * scale) return std::make_pair(0.0, 4.0);
    if (wmin < 0.0 && wmax > 0.0) return std::nullopt;  // sign change: no usable fit
    const double sgn = (wmax > 0.0) ? 1.0 : -1.0;
    // straight-line fit of log|u| against x over the window
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int k = 0;
    for (int i = i0; i < n; ++i) {
        const double a = std::abs(u[static_cast<size_t>(i)]);
        if (a <= 0.0) continue;
        const double xx = g.x[static_cast<size_t>(i)], yy = std::log(a);
        sx += xx;
        sy += yy;
        sxx += xx * xx;
        sxy += xx * yy;
        ++k;
    }
    if (k < 2) return std::make_pair(0.0, 4.0);
    const double denom = static_cast<double>(k) * sxx - sx * sx;
    const double slope = (static_cast<double>(k) * sxy - sx * sy) / denom;
    const double icept = (sy - slope * sx) / static_cast<double>(k);
    const double q = -slope;
    const double Cn = sgn * std::exp(icept + slope * g.x.back());  // value at rmax
    return std::make_pair(Cn, q);
}

std::vector<double> shift_sample(const RadialGrid& g, const std::vector<double>& f, double delta,
                                 std::optional<std::pair<double, double>> ac) {
    if (static_cast<int>(f.size()) != g.n) throw UsageError("shift_sample: size mismatch");
    const int n = g.n;
    const double d = delta / g.h;
    const double dfl = std::floor(d);
    const int j0 = static_cast<int>(dfl) - 3;
    const double t = 3.0 + (d - dfl);
    std::array<double, 8> w{};
    for (int kk = 0; kk < 8; ++kk) {
        double wk = 1.0;
        for (int l = 0; l < 8; ++l) {
            if (l == kk) continue;
            wk *= (t - static_cast<double>(l)) / static_cast<double>(kk - l);
        }
        w[static_cast<size_t>(kk)] = wk;
    }
    double a, c;
    if (ac) {
        a = ac->first;
        c = ac->second;
    } else {
        // even expansion a r^2 + c r^4 through nodes 1 and 2
        const double r1 = g.r[1], r2 = g.r[2];
        const double a11 = r1 * r1, a12 = r1 * r1 * r1 * r1;
        const double a21 = r2 * r2, a22 = r2 * r2 * r2 * r2;
        const double det = a11 * a22 - a12 * a21;
        a = (f[1] * a22 - a12 * f[2]) / det;
        c = (a11 * f[2] - f[1] * a21) / det;
    }
    const int lo = std::max(0, -j0);
    const int hi = std::min(n, n - 7 - j0);
    std::vector<double> out(static_cast<size_t>(n));
    for (int i = 0; i < std::min(lo, n); ++i) {
        const double rq = g.r[static_cast<size_t>(i)] * std::exp(delta);
        out[static_cast<size_t>(i)] = a * rq * rq + c * rq * rq * rq * rq;
    }
    for (int i = lo; i < hi; ++i) {
        double s = 0.0;
        for (int kk = 0; kk < 8; ++kk)
            s += w[static_cast<size_t>(kk)] * f[static_cast<size_t>(i + j0 + kk)];
        out[static_cast<size_t>(i)] = s;
    }
    for (int i = std::max(hi, 0); i < n; ++i) out[static_cast<size_t>(i)] = f[static_cast<size_t>(n - 1)];
    return out;
}

}  // namespace pks::num
