#include <catch2/catch_amalgamated.hpp>

#include "orseq/special.hpp"

using namespace orseq;

TEST_CASE("incomplete gamma and chi-square tail") {
    // P(1, x) = 1 - e^{-x}
    for (Real x : {0.1, 1.0, 3.0, 10.0})
        CHECK(gamma_p(1.0, x) == Catch::Approx(1.0 - std::exp(-x)).margin(1e-13));
    // chi-square with 2 dof: Q = e^{-x/2}
    CHECK(chi2_pvalue(4.0, 2) == Catch::Approx(std::exp(-2.0)).margin(1e-13));
    // median of chi-square_1 near 0.4549
    CHECK(chi2_pvalue(0.454936, 1) == Catch::Approx(0.5).margin(1e-4));
}

TEST_CASE("incomplete beta against the arcsine closed form") {
    for (Real t : {0.01, 0.1, 0.3, 0.5, 0.9, 0.99}) {
        Real ref = (2.0 / kPi) * std::asin(std::sqrt(t));
        CHECK(beta_inc(0.5, 0.5, t) == Catch::Approx(ref).margin(1e-12));
    }
    CHECK(beta_inc(2.0, 3.0, 0.4) ==
          Catch::Approx(std::pow(0.4, 2) * (6.0 - 8.0 * 0.4 + 3.0 * 0.16)).margin(1e-10));
}

TEST_CASE("oscillatory xi integral: closed form vs quadrature") {
    for (Real p : {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}) {
        for (int sign : {+1, -1}) {
            Complex a = xi_closed(p, sign);
            Complex b = xi_quadrature(p, sign);
            CHECK(std::abs(a - b) <= 1e-8);
        }
    }
}

TEST_CASE("gauss16 integrates polynomials") {
    Real v = gauss16([](Real x) { return x * x * x + 2.0 * x; }, 0.0, 2.0);
    CHECK(v == Catch::Approx(8.0).margin(1e-13));
}
