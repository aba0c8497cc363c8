#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include <pks/errors.hpp>
#include <pks/grid.hpp>
#include <pks/ground_state.hpp>

using namespace pks;

namespace {

const num::RadialGrid& big_grid() {
    static const num::RadialGrid g = num::build_grid(1e-4, 1e4, 4096);
    return g;
}

std::vector<double> sample_vec(const num::RadialGrid& g, double (*f)(double)) {
    std::vector<double> v(static_cast<size_t>(g.n));
    for (size_t i = 0; i < v.size(); ++i) v[i] = f(g.r[i]);
    return v;
}

double max_rel(const std::vector<double>& got, const std::vector<double>& want) {
    double scale = 0.0, err = 0.0;
    for (const double w : want) scale = std::max(scale, std::abs(w));
    for (size_t i = 0; i < got.size(); ++i) err = std::max(err, std::abs(got[i] - want[i]));
    return err / scale;
}

}  // namespace

TEST_CASE("log-uniform grid layout") {
    const auto& g = big_grid();
    CHECK(g.n == 4096);
    CHECK(g.r.front() == doctest::Approx(1e-4).epsilon(1e-14));
    CHECK(g.r.back() == doctest::Approx(1e4).epsilon(1e-14));
    const double h = (std::log(1e4) - std::log(1e-4)) / 4095.0;
    CHECK(g.h == doctest::Approx(h).epsilon(1e-14));
    double worst = 0.0;
    for (int i = 0; i + 1 < g.n; ++i)
        worst = std::max(worst, std::abs(g.x[i + 1] - g.x[i] - g.h));
    CHECK(worst < 1e-13);

    CHECK_THROWS_AS(num::build_grid(1.0, 0.5, 64), ConfigError);
    CHECK_THROWS_AS(num::build_grid(0.0, 1.0, 64), ConfigError);
    CHECK_THROWS_AS(num::build_grid(1e-2, 1e2, 8), ConfigError);
}

TEST_CASE("quadrature reproduces closed-form ground-state moments") {
    const auto& g = big_grid();
    const auto q = sample_vec(g, gs::Q);

    // int_rmin^rmax Q r dr = m0(rmax) - m0(rmin), since m0' = r Q
    const double want = gs::m0(g.rmax) - gs::m0(g.rmin);
    CHECK(num::integrate_rdr(g, q) == doctest::Approx(want).epsilon(1e-9));
    CHECK(num::integrate_plane(g, q) ==
          doctest::Approx(2.0 * M_PI * want).epsilon(1e-9));

    // beta = 1 cumulative: int Q dr = 4 (r/(1+r^2) + atan r)
    auto primitive = [](double r) { return 4.0 * (r / (1.0 + r * r) + std::atan(r)); };
    const auto c1 = num::cumint(g, q, 1);
    std::vector<double> w1(c1.size());
    for (size_t i = 0; i < w1.size(); ++i) w1[i] = primitive(g.r[i]) - primitive(g.rmin);
    CHECK(max_rel(c1, w1) < 1e-9);

    // beta = 2 cumulative equals the partial mass increment at every node
    const auto c2 = num::cumint(g, q, 2);
    std::vector<double> w2(c2.size());
    for (size_t i = 0; i < w2.size(); ++i) w2[i] = gs::m0(g.r[i]) - gs::m0(g.rmin);
    CHECK(max_rel(c2, w2) < 1e-9);
}

TEST_CASE("gaussian moments against exact values") {
    const auto& g = big_grid();
    std::vector<double> f(static_cast<size_t>(g.n)), rf(f.size());
    for (size_t i = 0; i < f.size(); ++i) {
        f[i] = std::exp(-g.r[i] * g.r[i] / 4.0);
        rf[i] = g.r[i] * g.r[i] * f[i];
    }
    // int_0^inf e^{-r^2/4} r dr = 2, int_0^inf r^2 e^{-r^2/4} r dr = 8
    CHECK(num::integrate_rdr(g, f) == doctest::Approx(2.0).epsilon(1e-8));
    CHECK(num::integrate_rdr(g, rf) == doctest::Approx(8.0).epsilon(1e-8));
}

TEST_CASE("nodal weights match the segment quadrature and are positive") {
    const auto& g = big_grid();
    const auto w = num::weights_rdr(g);
    REQUIRE(w.size() == static_cast<size_t>(g.n));
    for (const double wi : w) CHECK(wi > 0.0);
    const auto q = sample_vec(g, gs::Q);
    double s = 0.0;
    for (size_t i = 0; i < w.size(); ++i) s += w[i] * q[i];
    CHECK(s == doctest::Approx(num::integrate_rdr(g, q)).epsilon(1e-13));
}

TEST_CASE("radial derivatives of the partial mass") {
    const auto& g = big_grid();
    const auto m = sample_vec(g, gs::m0);
    const auto d1 = num::d_r(g, m, 4);
    const auto d2 = num::d2_r(g, m, 4);
    CHECK(max_rel(d1, sample_vec(g, gs::m0p)) < 5e-10);
    CHECK(max_rel(d2, sample_vec(g, gs::m0pp)) < 1e-8);

    // accuracy 2 is worse than accuracy 4 but still converges
    const double e4 = max_rel(num::d_r(g, m, 4), sample_vec(g, gs::m0p));
    const double e2 = max_rel(num::d_r(g, m, 2), sample_vec(g, gs::m0p));
    CHECK(e2 > e4);
    CHECK(e2 < 1e-4);
}

TEST_CASE("cubic interpolation between nodes") {
    const auto& g = big_grid();
    const num::RadialField f(g, sample_vec(g, gs::Q), num::FieldRole::density);
    // exact at the nodes
    CHECK(num::interpolate(f, g.r[100]) == doctest::Approx(gs::Q(g.r[100])).epsilon(1e-15));
    double worst = 0.0;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> pick(std::log(1e-3), std::log(1e3));
    for (int k = 0; k < 200; ++k) {
        const double r = std::exp(pick(rng));
        worst = std::max(worst, std::abs(num::interpolate(f, r) - gs::Q(r)) / gs::Q(r));
    }
    CHECK(worst < 1e-8);
    CHECK_THROWS_AS(num::interpolate(f, 1e5), std::out_of_range);
}

TEST_CASE("origin fits recover exact even expansions") {
    const auto& g = big_grid();
    std::vector<double> u(static_cast<size_t>(g.n)), m(u.size());
    for (size_t i = 0; i < u.size(); ++i) {
        const double r = g.r[i];
        u[i] = 3.0 + 5.0 * r * r;
        m[i] = 0.5 * 7.0 * r * r - 0.25 * 2.0 * r * r * r * r;
    }
    const auto [a, c] = num::origin_fit(g, u);
    CHECK(a == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(c == doctest::Approx(5.0).epsilon(1e-6));
    const auto [am, cm] = num::m_origin_ac(g, m);
    CHECK(am == doctest::Approx(7.0).epsilon(1e-10));
    CHECK(cm == doctest::Approx(-2.0).epsilon(1e-6));
}

TEST_CASE("log-shift resampling agrees with the closed form") {
    const auto& g = big_grid();
    const auto m = sample_vec(g, gs::m0);
    for (const double delta : {0.3, -0.2, 2.5 * g.h}) {
        const auto shifted = num::shift_sample(g, m, delta);
        double worst = 0.0;
        for (int i = 10; i < g.n - 10; ++i) {
            const double want = gs::m0(g.r[static_cast<size_t>(i)] * std::exp(delta));
            worst = std::max(worst, std::abs(shifted[static_cast<size_t>(i)] - want));
        }
        CHECK(worst / 4.0 < 1e-8);  // m0 ranges up to 4
    }

    // shifting twice equals shifting once by the sum away from the ends
    const auto one = num::shift_sample(g, m, 0.35);
    const auto two = num::shift_sample(g, num::shift_sample(g, m, 0.15), 0.2);
    double worst = 0.0;
    for (int i = 200; i < g.n - 200; ++i)
        worst = std::max(worst, std::abs(one[static_cast<size_t>(i)] -
                                         two[static_cast<size_t>(i)]));
    CHECK(worst < 1e-11);
}

TEST_CASE("stable summation matches a long-double reference") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> v(100000);
    long double ref = 0.0L;
    for (auto& x : v) {
        x = u(rng);
        ref += static_cast<long double>(x);
    }
    const double got = num::stable_sum(v);
    CHECK(std::abs(got - static_cast<double>(ref)) < 1e-11);
}

TEST_CASE("exponential moments") {
    const auto m0 = num::exp_moments(0.0);
    CHECK(m0[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(m0[1] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(m0[2] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK(m0[3] == doctest::Approx(0.25).epsilon(1e-14));

    for (const double alpha : {1.7, -1.7, 0.03, -0.03}) {
        const auto mk = num::exp_moments(alpha);
        // Simpson reference on a fine mesh
        for (int k = 0; k < 4; ++k) {
            const int nseg = 2000;
            double acc = 0.0;
            for (int i = 0; i < nseg; ++i) {
                const double a = static_cast<double>(i) / nseg;
                const double b = static_cast<double>(i + 1) / nseg;
                const double mid = 0.5 * (a + b);
                auto f = [&](double t) { return std::pow(t, k) * std::exp(alpha * t); };
                acc += (b - a) / 6.0 * (f(a) + 4.0 * f(mid) + f(b));
            }
            CHECK(mk[static_cast<size_t>(k)] == doctest::Approx(acc).epsilon(1e-10));
        }
    }
}

TEST_CASE("tail power fit") {
    const auto& g = big_grid();
    // power tail over the fit window; clipped below r = 100 so the global
    // maximum stays within the fitter's negligible-tail threshold
    std::vector<double> u(static_cast<size_t>(g.n));
    for (size_t i = 0; i < u.size(); ++i)
        u[i] = 5.0 * std::pow(std::max(g.r[i], 100.0) / g.rmax, -3.2);
    const auto fit = num::tail_power_fit(g, u);
    REQUIRE(fit.has_value());
    CHECK(fit->first == doctest::Approx(5.0).epsilon(1e-6));
    CHECK(fit->second == doctest::Approx(3.2).epsilon(1e-6));

    // negligible tail reports the default decay
    std::vector<double> tiny(static_cast<size_t>(g.n));
    for (size_t i = 0; i < tiny.size(); ++i) tiny[i] = std::exp(-g.r[i] * g.r[i]);
    const auto fit2 = num::tail_power_fit(g, tiny);
    REQUIRE(fit2.has_value());
    CHECK(fit2->first == 0.0);
    CHECK(fit2->second == 4.0);

    // sign-changing tail is unusable
    std::vector<double> osc(static_cast<size_t>(g.n));
    for (size_t i = 0; i < osc.size(); ++i) osc[i] = std::sin(0.1 * static_cast<double>(i));
    CHECK_FALSE(num::tail_power_fit(g, osc).has_value());
}

TEST_CASE("size mismatches are rejected") {
    const auto& g = big_grid();
    std::vector<double> bad(17, 1.0);
    CHECK_THROWS_AS(num::seg_integrals(g, bad, 2), UsageError);
    CHECK_THROWS_AS(num::ddx(g, bad, 4), UsageError);
    CHECK_THROWS_AS((void)num::ddx(g, sample_vec(g, gs::Q), 3), UsageError);
}
