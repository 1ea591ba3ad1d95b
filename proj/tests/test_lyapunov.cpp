#include <catch2/catch_amalgamated.hpp>

#include "cbf/lyapunov.hpp"

using namespace cbf;

TEST_CASE("canonical tangent basis") {
    auto g = make_grid(16);
    const auto basis = canonical_tangent_basis(g, 6);
    REQUIRE(basis.size() == 6);
    for (std::size_t i = 0; i < basis.size(); ++i) {
        CHECK(max_divergence(basis[i]) < 1e-14);
        CHECK(max_conjugate_asymmetry(basis[i]) < 1e-14);
        for (std::size_t j = 0; j <= i; ++j) {
            const double want = i == j ? 1.0 : 0.0;
            CHECK(inner_h(basis[i], basis[j]) == Catch::Approx(want).margin(1e-13));
        }
    }
}

TEST_CASE("Kaplan-Yorke interpolation") {
    CHECK(ky_dimension({-1.0, -2.0}).value == 0.0);
    CHECK(ky_dimension({1.0, -2.0}).value == Catch::Approx(1.5).epsilon(1e-15));
    CHECK(ky_dimension({0.5, 0.3, -1.0}).value == Catch::Approx(2.8).epsilon(1e-14));

    const auto sat = ky_dimension({0.5, 0.3, 0.1});
    CHECK(sat.saturated);
    CHECK(sat.value == 3.0);

    CHECK_THROWS_AS(ky_dimension({}), std::invalid_argument);
    CHECK_THROWS_AS(ky_dimension({0.1, 0.5}), std::invalid_argument);
}

TEST_CASE("dimension bound formulas") {
    PhysParams p;
    p.mu = 1.0;

    SECTION("reference point: mu=1, lambda1=1, ||f||=1, kappa=1") {
        const auto b = paper_bounds(p, 1.0, 1.0, 1.0);
        CHECK(b.dim_h == Catch::Approx(2.0).epsilon(1e-15));
        CHECK(b.dim_f == Catch::Approx(6.0).epsilon(1e-15));
        CHECK(b.grashof == Catch::Approx(1.0).epsilon(1e-15));
        CHECK(b.dim_h_grashof == Catch::Approx(2.0).epsilon(1e-15));
        CHECK(b.dim_f_grashof == Catch::Approx(6.0).epsilon(1e-15));
        CHECK(b.flux_bound == Catch::Approx(1.0).epsilon(1e-15));
    }

    SECTION("zero forcing collapses the bounds") {
        const auto b = paper_bounds(p, 0.0, 1.0, 1.0);
        CHECK(b.dim_h == 1.0);
        CHECK(b.dim_f == 2.0);
        CHECK(b.grashof == 0.0);
    }

    SECTION("halving mu scales G by 4 and the G^2 excess by 16") {
        const auto b1 = paper_bounds(p, 1.0, 1.0, 1.0);
        p.mu = 0.5;
        const auto b2 = paper_bounds(p, 1.0, 1.0, 1.0);
        CHECK(b2.grashof == Catch::Approx(4.0 * b1.grashof).epsilon(1e-14));
        CHECK((b2.dim_h_grashof - 1.0) ==
              Catch::Approx(16.0 * (b1.dim_h_grashof - 1.0)).epsilon(1e-14));
        CHECK((b2.dim_f_grashof - 2.0) ==
              Catch::Approx(16.0 * (b1.dim_f_grashof - 2.0)).epsilon(1e-14));
    }

    CHECK_THROWS_AS(paper_bounds(p, 1.0, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("frozen-zero regime: closed-form exponents and traces") {
    auto g = make_grid(16);
    PhysParams p;
    p.mu = 0.3;
    p.alpha = 0.2;
    p.beta = 0.7;
    p.r = 1;
    StepperConfig sc;
    sc.dt = 1e-2;
    sc.t_end = 2.0;
    Stepper st(g, p, sc);

    EnsembleConfig ec;
    ec.m = 6;
    ec.t_total = 2.0;
    ec.t_ortho = 0.1;
    const auto init = canonical_tangent_basis(g, ec.m);
    const auto ens = evolve_ensemble_qr(SpectralField(g), st, ec, &init);
    REQUIRE(ens.frozen_base);

    const auto exps = exponents(ens);
    auto rates = canonical_mode_rates(g, p, ec.m);
    std::sort(rates.rbegin(), rates.rend());
    for (std::size_t i = 0; i < exps.size(); ++i)
        CHECK(exps[i] == Catch::Approx(rates[i]).margin(1e-8));

    SECTION("orthonormality after QR") {
        CHECK(ens.max_gram_defect < 1e-10);
    }

    SECTION("trace numbers match the negative partial sums") {
        const auto tr = trace_q_m(ens);
        double acc = 0.0;
        const auto ordered = canonical_mode_rates(g, p, ec.m);
        for (int k = 0; k < ec.m; ++k) {
            acc += ordered[static_cast<std::size_t>(k)];
            CHECK(tr.q_full[static_cast<std::size_t>(k)] == Catch::Approx(acc).margin(1e-8));
            CHECK(tr.q_tail[static_cast<std::size_t>(k)] == Catch::Approx(acc).margin(1e-8));
        }
        CHECK(tr.first_negative == 1);
    }

    SECTION("exponent sum equals the time-averaged trace") {
        const auto rep = dimension_report(ens, st);
        CHECK(std::abs(rep.exponent_sum - rep.trace_mean_full) < 1e-6);
        CHECK(rep.ky.value == 0.0);
    }
}

TEST_CASE("single-vector ensemble on the Taylor-Green decay") {
    auto g = make_grid(16);
    PhysParams p;
    p.mu = 0.05;
    p.alpha = 0.15;
    p.beta = 0.25;
    p.r = 1;
    StepperConfig sc;
    sc.dt = 5e-3;
    sc.t_end = 3.0;
    Stepper st(g, p, sc);

    EnsembleConfig ec;
    ec.m = 1;
    ec.t_total = 3.0;
    ec.t_ortho = 0.1;
    const auto tg = taylor_green(g);
    std::vector<SpectralField> init = {tg};
    const auto ens = evolve_ensemble_qr(tg, st, ec, &init);
    const auto exps = exponents(ens);
    CHECK(exps[0] == Catch::Approx(-(2.0 * p.mu + p.alpha + p.beta)).margin(1e-10));
}

TEST_CASE("duplicate initial vectors trigger rank-loss reinitialization") {
    auto g = make_grid(16);
    PhysParams p;
    p.mu = 0.2;
    p.alpha = 0.1;
    p.beta = 0.1;
    p.r = 1;
    StepperConfig sc;
    sc.dt = 1e-2;
    Stepper st(g, p, sc);

    EnsembleConfig ec;
    ec.m = 2;
    ec.t_total = 0.5;
    const auto v = random_divfree_field(g, 8, 1.5, 1.0);
    std::vector<SpectralField> init = {v, v};
    const auto ens = evolve_ensemble_qr(SpectralField(g), st, ec, &init);
    CHECK(ens.reinit_count >= 1);
    CHECK_FALSE(ens.events.empty());
    CHECK(ens.max_gram_defect < 1e-10);
}

TEST_CASE("stable equilibrium: negative spectrum, d_KY zero, cadence-invariant") {
    auto g = make_grid(16);
    PhysParams p;
    p.mu = 0.6;
    p.alpha = 0.3;
    p.beta = 0.4;
    p.r = 3;
    const auto u_star = taylor_green(g, 0.05);
    p.forcing = manufactured_forcing(u_star, p);

    StepperConfig sc;
    sc.dt = 5e-3;
    sc.t_end = 40.0;
    Stepper st(g, p, sc);

    EnsembleConfig ec;
    ec.m = 3;
    ec.t_total = 40.0;
    ec.t_ortho = 0.1;
    const auto init = canonical_tangent_basis(g, ec.m);
    const auto ens1 = evolve_ensemble_qr(u_star, st, ec, &init);
    const auto e1 = exponents(ens1);
    for (double lam : e1) CHECK(lam < 0.0);
    CHECK(ky_dimension(e1).value == 0.0);

    ec.t_ortho = 0.2;
    const auto ens2 = evolve_ensemble_qr(u_star, st, ec, &init);
    const auto e2 = exponents(ens2);
    for (std::size_t i = 0; i < e1.size(); ++i)
        CHECK(e1[i] == Catch::Approx(e2[i]).margin(1e-3));

    SECTION("estimator consistency on the stationary run") {
        const auto rep = dimension_report(ens1, st);
        CHECK(std::abs(rep.exponent_sum - rep.trace_mean_full) < 1e-6);
    }

    SECTION("trace numbers decrease with subspace size") {
        const auto tr = trace_q_m(ens1);
        for (std::size_t k = 1; k < tr.q_tail.size(); ++k)
            CHECK(tr.q_tail[k] < tr.q_tail[k - 1]);
    }
}

TEST_CASE("ensemble preconditions") {
    auto g = make_grid(16);
    PhysParams p;
    p.mu = 1.0;
    StepperConfig sc;
    sc.dt = 1e-2;
    Stepper st(g, p, sc);
    EnsembleConfig ec;
    ec.m = 0;
    CHECK_THROWS_AS(evolve_ensemble_qr(SpectralField(g), st, ec), std::invalid_argument);
    ec.m = 2;
    ec.t_ortho = -1.0;
    CHECK_THROWS_AS(evolve_ensemble_qr(SpectralField(g), st, ec), std::invalid_argument);
}
