#include <doctest.h>

#include <cmath>
#include <vector>

#include <pks/ground_state.hpp>

using namespace pks;

namespace {

const std::vector<double> kSamples = {1e-4, 1e-2, 0.1, 0.5, 1.0, 2.0, 7.3, 55.0, 1e3};

// centered five-point derivative for cross-checking the closed forms
double fd1(double (*f)(double), double r) {
    const double h = 1e-4 * std::max(r, 1e-3);
    return (-f(r + 2 * h) + 8 * f(r + h) - 8 * f(r - h) + f(r - 2 * h)) / (12 * h);
}

}  // namespace

TEST_CASE("ground state and its potential") {
    for (const double r : kSamples) {
        CHECK(gs::Q(r) == doctest::Approx(8.0 / std::pow(1.0 + r * r, 2)).epsilon(1e-14));
        // stationarity: log Q + phi_Q is constant (= log 8)
        CHECK(std::log(gs::Q(r)) + gs::phiQ(r) == doctest::Approx(std::log(8.0)).epsilon(1e-13));
        // field equation: phi_Q' = m0 / r
        CHECK(gs::phiQp(r) == doctest::Approx(gs::m0(r) / r).epsilon(1e-13));
        // partial-mass derivative: m0' = r Q
        CHECK(gs::m0p(r) == doctest::Approx(r * gs::Q(r)).epsilon(1e-13));
        // derivative closed forms against finite differences
        CHECK(gs::Qp(r) == doctest::Approx(fd1(&gs::Q, r)).epsilon(1e-7));
        CHECK(gs::Qpp(r) == doctest::Approx(fd1(&gs::Qp, r)).epsilon(1e-7));
        CHECK(gs::m0pp(r) == doctest::Approx(fd1(&gs::m0p, r)).epsilon(1e-7));
    }
    CHECK(gs::m0(0.0) == 0.0);
    CHECK(gs::Q(0.0) == 8.0);
}

TEST_CASE("scaling derivatives") {
    for (const double r : kSamples) {
        // Lambda Q = 2Q + r Q'
        CHECK(gs::LamQ(r) ==
              doctest::Approx(2.0 * gs::Q(r) + r * gs::Qp(r)).epsilon(1e-13));
        // Lambda^2 Q = (2 + r d/dr) Lambda Q
        CHECK(gs::Lam2Q(r) ==
              doctest::Approx(2.0 * gs::LamQ(r) + r * gs::LamQp(r)).epsilon(1e-12));
        CHECK(gs::LamQp(r) == doctest::Approx(fd1(&gs::LamQ, r)).epsilon(1e-7));
        CHECK(gs::LamQpp(r) == doctest::Approx(fd1(&gs::LamQp, r)).epsilon(1e-7));
        // potential of Lambda Q solves the radial Poisson equation
        // (1/r)(r phi')' = LamQ; conservative-form differences with a step
        // tied to the O(1) curvature scale stay conditioned near the origin
        const double h = 1e-4 * std::max(r, 1.0);
        const double up = (gs::phiLamQ(r + h) - gs::phiLamQ(r)) / h;
        const double dn = (gs::phiLamQ(r) - gs::phiLamQ(r - h)) / h;
        const double lap = ((r + h / 2) * up - (r - h / 2) * dn) / (r * h);
        CHECK(lap == doctest::Approx(gs::LamQ(r)).epsilon(1e-5));
    }
    // plane integral of LamQ vanishes: m_LamQ(r) = r^2 LamQ(r)/2 -> 0
    CHECK(std::abs(1e6 * gs::LamQ(1e3)) < 1e-2);
}

TEST_CASE("kernel elements of the partial-mass linearization") {
    for (const double r : kSamples) {
        // psi0 and psi1 both solve -f'' + (1/r + Q'/Q) f' - Q f = 0; the
        // residual is a cancellation of the three terms, so normalize by the
        // largest of them rather than by the (possibly much smaller) f itself
        const double coef = 1.0 / r + gs::Qp(r) / gs::Q(r);
        auto check_l0 = [&](double (*f)(double), double (*fp)(double),
                            double (*fpp)(double)) {
            const double resid = -fpp(r) + coef * fp(r) - gs::Q(r) * f(r);
            const double scale = std::max({std::abs(fpp(r)), std::abs(coef * fp(r)),
                                           std::abs(gs::Q(r) * f(r))});
            CHECK(std::abs(resid) / scale < 1e-12);
        };
        check_l0(&gs::psi0, &gs::psi0p, &gs::psi0pp);
        check_l0(&gs::psi1, &gs::psi1p, &gs::psi1pp);
        // Wronskian identity psi1' psi0 - psi1 psi0' = r Q / 4
        CHECK(gs::psi1p(r) * gs::psi0(r) - gs::psi1(r) * gs::psi0p(r) ==
              doctest::Approx(r * gs::Q(r) / 4.0).epsilon(1e-11));
        CHECK(gs::wronskian(r) == doctest::Approx(r * gs::Q(r) / 4.0).epsilon(1e-13));
        CHECK(gs::psi0p(r) == doctest::Approx(fd1(&gs::psi0, r)).epsilon(1e-7));
        CHECK(gs::psi1p(r) == doctest::Approx(fd1(&gs::psi1, r)).epsilon(1e-7));
    }
}

TEST_CASE("smoothstep cutoff") {
    CHECK(gs::chi(0.0) == 1.0);
    CHECK(gs::chi(1.0) == 1.0);
    CHECK(gs::chi(0.99) == 1.0);
    CHECK(gs::chi(2.0) == 0.0);
    CHECK(gs::chi(2.5) == 0.0);
    CHECK(gs::chi(1.5) == doctest::Approx(0.5).epsilon(1e-13));
    // monotone decreasing on [1, 2]
    for (double t = 1.0; t < 2.0; t += 0.05) CHECK(gs::chi(t) >= gs::chi(t + 0.05));
    // derivatives are continuous at the joints and match finite differences
    for (const double t : {1.2, 1.5, 1.8}) {
        const double h = 1e-5;
        CHECK(gs::chip(t) ==
              doctest::Approx((gs::chi(t + h) - gs::chi(t - h)) / (2 * h)).epsilon(1e-6));
        CHECK(gs::chipp(t) ==
              doctest::Approx((gs::chip(t + h) - gs::chip(t - h)) / (2 * h)).epsilon(1e-6));
    }
    CHECK(std::abs(gs::chip(1.0)) < 1e-13);
    CHECK(std::abs(gs::chip(2.0)) < 1e-13);
    CHECK(std::abs(gs::chipp(1.0)) < 1e-10);
    CHECK(std::abs(gs::chipp(2.0)) < 1e-10);
    // scaled variant
    CHECK(gs::cutoff_chi_scaled(10.0, 5.0) == 1.0);
    CHECK(gs::cutoff_chi_scaled(10.0, 25.0) == 0.0);
    CHECK(gs::cutoff_chi_scaled(10.0, 15.0) == doctest::Approx(gs::chi(1.5)).epsilon(1e-14));
}

TEST_CASE("dispatch table matches the direct functions") {
    using gs::ClosedForm;
    for (const double r : {0.3, 1.7, 12.0}) {
        CHECK(gs::eval(ClosedForm::Q, r) == gs::Q(r));
        CHECK(gs::eval(ClosedForm::gradQ, r) == gs::Qp(r));
        CHECK(gs::eval(ClosedForm::LambdaQ, r) == gs::LamQ(r));
        CHECK(gs::eval(ClosedForm::m0, r) == gs::m0(r));
        CHECK(gs::eval(ClosedForm::psi0, r) == gs::psi0(r));
        CHECK(gs::eval(ClosedForm::psi1, r) == gs::psi1(r));
        CHECK(gs::eval(ClosedForm::phiQ, r) == gs::phiQ(r));
        CHECK(gs::eval(ClosedForm::wronskian, r) == gs::wronskian(r));
    }
}
