#include <catch2/catch_amalgamated.hpp>

#include "orseq/limits.hpp"

using namespace orseq;

namespace {
struct Pipeline {
    ReturnStructure rs;
    DensityEstimate de;
    OperatorSeq seq;
    TailModel tm;
    NormalizerM nm;
};

Pipeline build_pipeline(Real alpha, int m, int N, int n_x = 100000) {
    Pipeline p{build_return_structure_lsv(alpha, 0, N, n_x), {}, {}, {}, {}};
    auto gk = build_geo_kernel(p.rs, m, N);
    p.de = induced_density(p.rs, m, &gk);
    p.seq = assemble_Rn(p.rs, p.de, m, N, &gk);
    p.tm = tail_model_invariant(p.rs, p.de.h_y, p.rs.n_x());
    p.nm = NormalizerM::from_tail(p.tm);
    return p;
}
}  // namespace

TEST_CASE("normalizer consistency") {
    auto p = build_pipeline(4.0 / 3.0, 64, 128, 5000);
    // beta < 1: m(n) = ell(n) = tail(n) n^beta exactly as constructed
    for (int n : {1, 10, 100, 1000}) {
        CHECK(p.nm.m_of[n] == p.nm.ell[n]);
        CHECK(p.nm.ell[n] == Catch::Approx(p.tm.tail[n] * std::pow(Real(n), p.nm.beta))
                                 .margin(1e-15));
    }
    auto p1 = build_pipeline(1.0, 64, 128, 5000);
    REQUIRE(p1.nm.beta_is_one);
    for (int n : {2, 10, 100})
        CHECK(p1.nm.m_of[n] - p1.nm.m_of[n - 1] ==
              Catch::Approx(p1.nm.ell[n] / n).margin(1e-12));
}

TEST_CASE("first-order verifier at beta 3/4") {
    auto p = build_pipeline(4.0 / 3.0, 512, 2048);
    auto run = run_observable(p.seq, standard_observables(p.seq)[0]);
    auto rep = verify_first_order(p.seq, p.nm, run, {256, 512, 1024, 2048});
    CHECK(rep.pass);
    CHECK(rep.trend == "shrinking");
    CHECK(rep.values.back() ==
          Catch::Approx(d_beta_const(0.75)).epsilon(0.10));
    // deterministic: identical rerun produces identical values bit for bit
    auto rep2 = verify_first_order(p.seq, p.nm, run, {256, 512, 1024, 2048});
    for (size_t k = 0; k < rep.values.size(); ++k) {
        REQUIRE(rep.values[k] == rep2.values[k]);
        REQUIRE(rep.deviations[k] == rep2.deviations[k]);
    }

    // mean-zero observable: decay at the O(l(n) n^{-beta}) envelope or faster
    std::vector<Real> v0(p.seq.m);
    Real mean = 0.0;
    for (int i = 0; i < p.seq.m; ++i) {
        v0[i] = (i < p.seq.m / 2) ? 1.0 : 0.0;
        mean += p.seq.mu[i] * v0[i];
    }
    for (int i = 0; i < p.seq.m; ++i) v0[i] -= mean;
    auto run0 = run_observable(p.seq, v0);
    auto rep0 = verify_mean_zero_decay(p.seq, p.nm, run0, {64, 128, 256, 512, 1024, 2048});
    CHECK(rep0.pass);
}

TEST_CASE("dual ergodicity verifier and additivity") {
    auto p = build_pipeline(4.0 / 3.0, 512, 2048);
    auto obs = standard_observables(p.seq);
    auto run1 = run_observable(p.seq, obs[1]);
    auto run2 = run_observable(p.seq, obs[2]);
    auto ra = verify_dual_ergodicity(p.seq, p.nm, run1, {512, 1024, 2048});
    auto rb = verify_dual_ergodicity(p.seq, p.nm, run2, {512, 1024, 2048});
    CHECK(ra.pass);
    CHECK(rb.pass);
    // additivity: the pipeline is linear in v
    std::vector<Real> vsum(p.seq.m);
    for (int i = 0; i < p.seq.m; ++i) vsum[i] = obs[1][i] + obs[2][i];
    auto rs_ = run_observable(p.seq, vsum);
    auto rc = verify_dual_ergodicity(p.seq, p.nm, rs_, {512, 1024, 2048});
    for (size_t k = 0; k < rc.values.size(); ++k)
        CHECK(rc.values[k] == Catch::Approx(ra.values[k] + rb.values[k]).margin(1e-11));
}

TEST_CASE("second-order verifier at beta 0.8") {
    auto p = build_pipeline(1.25, 512, 2048);
    auto run = run_observable(p.seq, standard_observables(p.seq)[0]);
    auto cs = constants(0.8, p.tm);
    auto rep = verify_second_order(p.seq, p.nm, cs, run, {512, 1024, 2048});
    CHECK(rep.pass);
    CHECK(rep.deviations.back() <= 0.25);

    // beta = 0.75 takes the envelope branch
    auto p75 = build_pipeline(4.0 / 3.0, 512, 2048);
    auto run75 = run_observable(p75.seq, standard_observables(p75.seq)[0]);
    auto cs75 = constants(0.75, p75.tm);
    auto rep75 = verify_second_order(p75.seq, p75.nm, cs75, run75, {256, 512, 1024, 2048});
    CHECK(rep75.pass);
}

TEST_CASE("first-order trend for beta = 1") {
    // m(n) (T_n 1) -> 1 at the 1/log n rate: only the trend is checkable at
    // desk scale
    auto p = build_pipeline(1.0, 512, 4096);
    auto run = run_observable(p.seq, standard_observables(p.seq)[0]);
    auto rep = verify_first_order(p.seq, p.nm, run, {512, 1024, 2048, 4096}, 0.30);
    CHECK(rep.trend == "shrinking");
    CHECK(rep.pass);
    CHECK(rep.values.back() > 0.8);
    CHECK(rep.values.back() < 1.0);
}

TEST_CASE("dual ergodicity at beta = 1/2 hits 2/pi") {
    auto p = build_pipeline(2.0, 512, 2048);
    auto run = run_observable(p.seq, standard_observables(p.seq)[0]);
    auto rep = verify_dual_ergodicity(p.seq, p.nm, run, {512, 1024, 2048}, 0.10);
    CHECK(rep.target == Catch::Approx(2.0 / kPi).margin(1e-12));
    CHECK(rep.pass);
}

TEST_CASE("small-beta verifier at alpha 2 and 2.5") {
    for (Real alpha : {2.0, 2.5}) {
        auto p = build_pipeline(alpha, 512, 2048);
        auto run = run_observable(p.seq, standard_observables(p.seq)[0]);
        auto rep = verify_small_beta(p.seq, p.nm, run, {512, 1024, 2048});
        INFO("alpha = " << alpha);
        CHECK(rep.summary.pass);
        for (size_t b = 0; b < rep.eps_bands.size(); ++b)
            for (size_t k = 1; k < rep.density[b].size(); ++k)
                REQUIRE(rep.density[b][k] <= rep.density[b][k - 1] + 1e-12);
        Real d_b = d_beta_const(1.0 / alpha);
        CHECK(rep.liminf.back() >= 0.9 * d_b);
        CHECK(rep.liminf.back() <= 1.02 * d_b);
    }
}

TEST_CASE("lift to X against the direct Ulam route") {
    auto p = build_pipeline(4.0 / 3.0, 512, 2048);
    spread_density(p.rs, p.de, 0.02, 4096);
    ObservableOnX v{[](Real x) { return x >= 0.1 ? 1.0 : 0.0; }, 0.1};
    auto rep = verify_Ln_on_X(p.seq, p.rs, p.de, p.nm, v, {256, 1024, 2048}, 4096);
    CHECK(rep.summary.pass);
    CHECK(rep.route_agreement <= 0.05);
    CHECK(std::fabs(rep.int_v_quadrature - rep.int_v_decomposition) <=
          0.01 * rep.int_v_quadrature);
    // support reaching 0 is rejected
    ObservableOnX bad{[](Real) { return 1.0; }, 0.0};
    CHECK_THROWS_AS(
        verify_Ln_on_X(p.seq, p.rs, p.de, p.nm, bad, {16}, 256),
        UnsupportedObservable);
}
