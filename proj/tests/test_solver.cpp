#include <doctest.h>

#include <cmath>
#include <vector>

#include <pks/errors.hpp>
#include <pks/grid.hpp>
#include <pks/ground_state.hpp>
#include <pks/operators.hpp>
#include <pks/profiles.hpp>
#include <pks/solver.hpp>

using namespace pks;

namespace {

const num::RadialGrid& sim_grid() {
    static const num::RadialGrid g = num::build_grid(1e-3, 1e3, 2048);
    return g;
}

std::vector<double> sample_m0(const num::RadialGrid& g, double scale = 1.0) {
    std::vector<double> m(static_cast<size_t>(g.n));
    for (size_t i = 0; i < m.size(); ++i) m[i] = gs::m0(g.r[i] * scale);
    return m;
}

}  // namespace

TEST_CASE("ground state is a discrete steady state of the stepper") {
    const auto& g = sim_grid();
    sim::Stepper stepper(g);
    auto m = sample_m0(g);
    const double mbc = m.back();

    const auto res = stepper.flow_residual(m);
    double worst = 0.0;
    for (double v : res) worst = std::max(worst, std::abs(v));
    CHECK(worst < 1e-3);  // discretization residual of the analytic fixed point

    // one small step barely moves it
    auto m1 = m;
    stepper.step(m1, 1e-4, mbc);
    double drift = 0.0;
    for (size_t i = 0; i < m.size(); ++i) drift = std::max(drift, std::abs(m1[i] - m[i]));
    CHECK(drift / 4.0 < 1e-9);

    // the implicit solve keeps it pinned even for a huge step
    auto m2 = m;
    stepper.step(m2, 1e3, mbc);
    double drift2 = 0.0;
    for (size_t i = 0; i < m.size(); ++i) drift2 = std::max(drift2, std::abs(m2[i] - m[i]));
    CHECK(drift2 / 4.0 < 1e-6);
}

TEST_CASE("central density estimators recover the core value") {
    const auto& g = sim_grid();
    const auto m = sample_m0(g);
    CHECK(sim::central_density(g, m) == doctest::Approx(8.0).epsilon(1e-8));
    CHECK(sim::u0_band(g, m, 1.0) == doctest::Approx(8.0).epsilon(1e-6));
}

TEST_CASE("second moment of a gaussian blob") {
    // u = exp(-r^2/4): m = 2(1 - exp(-r^2/4)), 2 pi int r^2 u r dr = 16 pi
    const auto& g = sim_grid();
    std::vector<double> m(static_cast<size_t>(g.n));
    for (size_t i = 0; i < m.size(); ++i) m[i] = 2.0 * (1.0 - std::exp(-g.r[i] * g.r[i] / 4.0));
    CHECK(sim::second_moment(g, m) == doctest::Approx(16.0 * M_PI).epsilon(1e-8));
}

TEST_CASE("free energy of the ground state") {
    // F(Q) = 8 pi (log 8 - 1)
    const auto& g = sim_grid();
    const auto fe = sim::free_energy(g, sample_m0(g));
    // quadrature truncation of the slowly decaying entropy tail costs ~1e-6
    CHECK(fe.value == doctest::Approx(8.0 * M_PI * (std::log(8.0) - 1.0)).epsilon(1e-5));
    CHECK(fe.clamped_nodes == 0);
}

TEST_CASE("profile initialization and its guards") {
    const auto& g = sim_grid();
    const auto st = sim::init_from_profile(g, 0.0);
    CHECK(st.subcritical);  // ground-state mass on a finite grid is below 8 pi
    CHECK(st.lambda_frame == 1.0);
    CHECK(st.step == 0);
    double worst = 0.0;
    const auto m0s = sample_m0(g);
    for (size_t i = 0; i < m0s.size(); ++i) worst = std::max(worst, std::abs(st.m[i] - m0s[i]));
    CHECK(worst < 1e-7);  // quadrature of the sampled density vs the closed form

    // mass excess scales the density, and hence the partial mass, linearly
    const double exc = 0.3;
    const auto st2 = sim::init_from_profile(g, 0.0, exc);
    const double factor = 1.0 + exc / (8.0 * M_PI);
    worst = 0.0;
    for (size_t i = 0; i < m0s.size(); ++i)
        worst = std::max(worst, std::abs(st2.m[i] - factor * st.m[i]));
    CHECK(worst < 1e-10);
    CHECK(sim::central_density(g, st2.m) == doctest::Approx(8.0 * factor).epsilon(1e-6));

    // a perturbation driving the density negative is invalid data
    std::vector<double> bad(static_cast<size_t>(g.n));
    for (size_t i = 0; i < bad.size(); ++i) bad[i] = -2.0 * gs::Q(g.r[i]);
    CHECK_THROWS_AS(sim::init_from_profile(g, 0.0, 0.0, &bad), InvalidDataError);

    // removing more than the whole mass is a configuration error
    CHECK_THROWS_AS(sim::init_from_profile(g, 0.0, -9.0 * M_PI), ConfigError);
}

TEST_CASE("renormalize folds the pin into the frame") {
    const auto& g = sim_grid();
    auto st = sim::init_from_profile(g, 0.0);
    // start from a dilated state: m(r) = m0(r / 2), central density 2
    for (size_t i = 0; i < st.m.size(); ++i) st.m[i] = gs::m0(g.r[i] / 2.0);
    st.mbc = st.m.back();
    st.lambda_pin = std::sqrt(8.0 / sim::u0_band(g, st.m, 1.0));
    CHECK(st.lambda_pin == doctest::Approx(2.0).epsilon(1e-6));

    const double err = sim::renormalize(st);
    CHECK(err < 1e-7);
    CHECK(st.lambda_frame == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(st.lambda_pin == 1.0);
    // state is back to the ground state except near rmax, where the resample
    // had to extrapolate (nodes with 2 r > rmax, about 103 of them)
    double worst = 0.0;
    for (size_t i = 0; i + 128 < st.m.size(); ++i)
        worst = std::max(worst, std::abs(st.m[i] - gs::m0(g.r[i])));
    CHECK(worst < 1e-5);
}

TEST_CASE("profile cache reproduces the direct assembly") {
    const auto& g = sim_grid();
    sim::ProfileCache cache(g);
    const auto& q0 = cache.Qb(0.0);
    double worst = 0.0;
    for (size_t i = 0; i < q0.size(); ++i) worst = std::max(worst, std::abs(q0[i] - gs::Q(g.r[i])));
    CHECK(worst == 0.0);

    const double b = 5e-3;
    const double B0 = std::min(1.0 / std::sqrt(b), g.rmax / 16.0);
    const double B1 = std::min(std::abs(std::log(b)) / std::sqrt(b), g.rmax / 4.0);
    const auto fam = prof::assemble_profile_cutoffs(g, b, B0, B1);
    const auto& qb = cache.Qb(b);
    worst = 0.0;
    for (size_t i = 0; i < qb.size(); ++i) worst = std::max(worst, std::abs(qb[i] - fam.Qb[i]));
    CHECK(worst == 0.0);
}

TEST_CASE("decomposition recovers an exactly assembled state") {
    const auto& g = sim_grid();
    sim::Decomposer dec(g, 20.0);
    sim::ProfileCache cache(g);
    const double b_true = 5e-3;
    const auto& qb = cache.Qb(b_true);
    num::RadialField u(g, qb, num::FieldRole::density);
    const auto m = ops::partial_mass(u);

    const auto res = dec.decompose(m.v, 1.0, 4e-3);
    CHECK(std::abs(res.lambda1 - 1.0) < 1e-6);
    CHECK(res.b == doctest::Approx(b_true).epsilon(1e-3));
    CHECK(res.iters > 0);
    const double eps_rel = ops::norm_l2q(g, res.eps) / 8.0;
    CHECK(eps_rel < 1e-3);
}

TEST_CASE("decomposer rejects tiny localization scales") {
    CHECK_THROWS_AS(sim::Decomposer(sim_grid(), 5.0), ConfigError);
}

TEST_CASE("smoothed derivative is exact on quadratics") {
    std::vector<double> x, y;
    for (int i = 0; i < 12; ++i) {
        const double xi = 0.3 * i + 0.01 * i * i;
        x.push_back(xi);
        y.push_back(2.0 - 1.5 * xi + 0.25 * xi * xi);
    }
    const auto d = sim::smooth_derivative(x, y);
    for (size_t i = 0; i < x.size(); ++i)
        CHECK(d[i] == doctest::Approx(-1.5 + 0.5 * x[i]).epsilon(1e-10));

    const auto tiny = sim::smooth_derivative({1.0, 2.0}, {3.0, 4.0});
    CHECK(tiny.size() == 2);
    CHECK(tiny[0] == 0.0);
    CHECK(tiny[1] == 0.0);
}

TEST_CASE("run configuration guards") {
    const auto& g = sim_grid();
    sim::RunConfig cfg;
    cfg.dt0 = 0.0;
    CHECK_THROWS_AS(sim::run(g, cfg), ConfigError);
    cfg = {};
    cfg.trigger = 1.0;
    CHECK_THROWS_AS(sim::run(g, cfg), ConfigError);
    cfg = {};
    cfg.lambda_stop = -1.0;
    CHECK_THROWS_AS(sim::run(g, cfg), ConfigError);
    cfg = {};
    cfg.record_every = 0;
    CHECK_THROWS_AS(sim::run(g, cfg), ConfigError);
}

TEST_CASE("short subcritical evolution stays flat") {
    const auto& g = sim_grid();
    sim::RunConfig cfg;
    cfg.b0 = 0.0;
    cfg.frame = sim::Frame::fixed;
    cfg.max_steps = 200;
    cfg.record_every = 50;
    cfg.decompose_every = 0;
    const auto out = sim::run(g, cfg);
    CHECK(out.stop_reason == "max_steps");
    CHECK(out.final_state.step == 200);
    CHECK(out.final_state.subcritical);
    REQUIRE(out.records.size() >= 2);
    const double mass0 = out.records.front().mass;
    for (const auto& rec : out.records) {
        CHECK(std::abs(rec.mass - mass0) / mass0 < 1e-8);
        // fixed frame never rescales; the pin stays at the core value
        CHECK(rec.lambda_eff == doctest::Approx(1.0).epsilon(1e-6));
    }
    CHECK(out.final_state.lambda_frame == 1.0);
    // the ground state barely moves over a short window
    double worst = 0.0;
    for (size_t i = 0; i < out.final_state.m.size(); ++i)
        worst = std::max(worst, std::abs(out.final_state.m[i] - gs::m0(g.r[i])));
    CHECK(worst / 4.0 < 1e-6);
}
