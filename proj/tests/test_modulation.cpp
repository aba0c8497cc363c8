#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include <pks/errors.hpp>
#include <pks/modulation.hpp>

using namespace pks;

namespace {

// invariant of db/ds = -2 b^2 / |log b| for b < 1: the quantity
// -(log(b) + 1) / (2 b) - s is constant along exact trajectories
double drift_invariant(double b, double s) { return -(std::log(b) + 1.0) / (2.0 * b) - s; }

const mod::Trajectory& canon() {
    static const mod::Trajectory traj = mod::integrate_reduced(1e-2, 1.0, 1e8);
    return traj;
}

}  // namespace

TEST_CASE("reduced dynamics reach the logarithmic asymptote") {
    const auto& traj = canon();
    const auto& last = traj.states.back();
    CHECK(last.s == doctest::Approx(1e8).epsilon(1e-12));
    const double ratio = last.b / mod::b_asymptote(last.s);
    CHECK(ratio == doctest::Approx(0.9918412721763958).epsilon(1e-6));
}

TEST_CASE("the conserved quantity of the parameter equation stays flat") {
    const auto& traj = canon();
    const double i0 = drift_invariant(traj.states.front().b, traj.states.front().s);
    double worst = 0.0;
    for (const auto& st : traj.states)
        worst = std::max(worst, std::abs(drift_invariant(st.b, st.s) - i0));
    CHECK(worst / traj.states.back().s < 1e-10);
}

TEST_CASE("terminal time extrapolation is resolved beyond the last record") {
    const auto& traj = canon();
    REQUIRE(traj.terminal_T.has_value());
    CHECK(*traj.terminal_T == doctest::Approx(62.98464799570683).epsilon(1e-10));
    CHECK(traj.terminal_tail == doctest::Approx(7.105427357601002e-15).epsilon(1e-3));
    CHECK(traj.terminal_tail > 0.0);
    // t stalls at T while lambda keeps collapsing
    CHECK(traj.states.back().t == doctest::Approx(*traj.terminal_T).epsilon(1e-12));
    CHECK(traj.states.back().lambda < 1e-3);
}

TEST_CASE("record layout is geometric in s") {
    const auto& traj = canon();
    // 8 decades at 200 records per decade, plus the initial state
    CHECK(traj.states.size() == 1601);
    const double q = traj.states[5].s / traj.states[4].s;
    const double expect = std::pow(10.0, 1.0 / 200.0);
    CHECK(q == doctest::Approx(expect).epsilon(1e-6));
}

TEST_CASE("rate law statistic sits near its limit") {
    const auto rep = mod::rate_law_check(canon());
    REQUIRE(rep.conclusive);
    CHECK(rep.used_terminal);
    CHECK(rep.T == doctest::Approx(62.98464799570684).epsilon(1e-10));
    CHECK(rep.window_count == 25);
    CHECK(rep.R_min == doctest::Approx(-1.2431572595541396).epsilon(1e-6));
    CHECK(rep.R_max == doctest::Approx(-1.2155825201649222).epsilon(1e-6));
    CHECK(rep.R_min >= -1.5);
    CHECK(rep.R_max <= -0.6);
}

TEST_CASE("rate law reports inconclusive on a short run") {
    const auto traj = mod::integrate_reduced(1e-2, 1.0, 10.0);
    const auto rep = mod::rate_law_check(traj);
    CHECK_FALSE(rep.conclusive);
}

TEST_CASE("asymptote domain and option guards") {
    CHECK(mod::b_asymptote(100.0) ==
          doctest::Approx((std::log(100.0) - std::log(std::log(100.0))) / 200.0).epsilon(1e-14));
    CHECK_THROWS_AS(mod::b_asymptote(2.0), std::range_error);
    CHECK_THROWS_AS(mod::integrate_reduced(0.5, 1.0, 1e4), ConfigError);   // b0 >= 1/e
    CHECK_THROWS_AS(mod::integrate_reduced(-1e-3, 1.0, 1e4), ConfigError);
    CHECK_THROWS_AS(mod::integrate_reduced(1e-2, 0.0, 1e4), ConfigError);  // lambda0 <= 0
    CHECK_THROWS_AS(mod::integrate_reduced(1e-2, 1.0, 0.5), ConfigError);  // s_max <= 1
}
