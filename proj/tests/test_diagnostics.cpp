#include <catch2/catch_amalgamated.hpp>

#include "cbf/diagnostics.hpp"

using namespace cbf;

TEST_CASE("absorbing radius formulas") {
    auto g = make_grid(16); // lambda1 = 1

    PhysParams p;
    p.mu = 1.0;
    SECTION("mu=1, lambda1=1, ||f||=1 gives sqrt(2)") {
        const auto r = absorbing_ball_radius(p, g, 1.0);
        CHECK(r.m1 == Catch::Approx(std::sqrt(2.0)).epsilon(1e-15));
    }

    SECTION("mu=2, lambda1=4, ||f||=3 gives (3/2) sqrt(1/2)") {
        auto g4 = make_grid(16, kPi); // lambda1 = 4
        p.mu = 2.0;
        const auto r = absorbing_ball_radius(p, g4, 3.0);
        CHECK(r.m1 == Catch::Approx(1.5 * std::sqrt(0.5)).epsilon(1e-14));
    }

    SECTION("Darcy-driven variant") {
        p.mu = 0.5;
        p.alpha = 2.0;
        const auto r = absorbing_ball_radius(p, g, 3.0);
        CHECK(r.m1_alpha == Catch::Approx(std::sqrt(2.0 / (0.5 * 2.0)) * 3.0).epsilon(1e-14));
    }

    SECTION("zero forcing: trivial attractor, trajectory decays into it") {
        p.mu = 1.0;
        p.alpha = 0.0;
        const auto r = absorbing_ball_radius(p, g, 0.0);
        CHECK(r.m1 == 0.0);
        StepperConfig sc;
        sc.dt = 5e-3;
        sc.t_end = 20.0;
        sc.record_every = 50;
        Stepper st(g, p, sc);
        const auto rec = run_simulation(random_divfree_field(g, 2, 1.5, 1.0), st);
        CHECK(rec.h_norm.back() < 1e-3);
        CHECK(absorbing_entry_time(rec, 0.0) >= 0.0); // enters the slack ball
    }
}

TEST_CASE("time-averaged dissipation") {
    auto g = make_grid(16);
    PhysParams p;
    p.mu = 0.5;
    p.alpha = 0.1;
    p.beta = 0.2;
    p.r = 3;

    SECTION("unforced decay passes with the ||u0||^2/t budget") {
        StepperConfig sc;
        sc.dt = 2e-3;
        sc.t_end = 1.0;
        sc.record_every = 5;
        Stepper st(g, p, sc);
        const auto rec = run_simulation(random_divfree_field(g, 3, 1.5, 1.0), st);
        const auto rep = time_average_dissipation(rec);
        CHECK(rep.pass);
        CHECK(rep.margin > 0.0);
    }

    SECTION("forced run passes and the margin is Richardson-stable") {
        p.forcing.kind = ForcingSpec::Kind::kolmogorov;
        p.forcing.amplitude = 1.0;
        auto margin_at = [&](double dt) {
            StepperConfig sc;
            sc.dt = dt;
            sc.t_end = 2.0;
            sc.record_every = 2;
            Stepper st(g, p, sc);
            const auto rec = run_simulation(random_divfree_field(g, 3, 1.5, 1.0), st);
            const auto rep = time_average_dissipation(rec);
            REQUIRE(rep.pass);
            return rep.margin;
        };
        const double m1 = margin_at(4e-3);
        const double m2 = margin_at(2e-3);
        CHECK(std::abs(m1 - m2) < 1e-4 * std::max(1.0, std::abs(m1)));
    }

    SECTION("empty record is rejected") {
        RunRecord rec;
        CHECK_THROWS_AS(time_average_dissipation(rec), std::invalid_argument);
    }
}

TEST_CASE("Lipschitz dependence on initial data") {
    auto g = make_grid(16);
    PhysParams p;
    p.mu = 0.2;
    p.alpha = 0.1;
    p.beta = 0.5;
    p.r = 1;

    StepperConfig sc;
    sc.dt = 2e-3;
    sc.t_end = 1.0;
    sc.record_every = 10;
    Stepper st(g, p, sc);

    SECTION("identical starts coincide forever") {
        const auto u0 = taylor_green(g, 0.7);
        const auto res = lipschitz_pair_check(u0, u0, st);
        CHECK(res.report.pass);
        for (double s : res.separation) CHECK(s == 0.0);
    }

    SECTION("Taylor-Green pair decays at the closed-form rate inside the envelope") {
        const auto u0 = taylor_green(g, 1.0);
        const auto v0 = taylor_green(g, 1.1);
        const auto res = lipschitz_pair_check(u0, v0, st);
        CHECK(res.report.pass);
        const double rate = 2.0 * p.mu + p.alpha + p.beta;
        const double w0 = norm_h(u0 - v0);
        for (std::size_t i = 0; i < res.times.size(); ++i) {
            const double exact = w0 * std::exp(-rate * res.times[i]);
            CHECK(res.separation[i] == Catch::Approx(exact).margin(1e-9));
            CHECK(res.separation[i] <= res.bound[i] + 1e-12);
        }
    }

    SECTION("random forced pair stays inside the envelope") {
        PhysParams pf = p;
        pf.r = 3;
        pf.forcing.kind = ForcingSpec::Kind::kolmogorov;
        pf.forcing.amplitude = 0.5;
        Stepper stf(g, pf, sc);
        const auto u0 = random_divfree_field(g, 10, 1.5, 1.0);
        const auto v0 = random_divfree_field(g, 11, 1.5, 1.0);
        CHECK(lipschitz_pair_check(u0, v0, stf).report.pass);
    }
}

TEST_CASE("Frechet remainder") {
    auto g = make_grid(16);

    SECTION("frozen-zero linear regime: remainder at the rounding floor") {
        PhysParams p;
        p.mu = 0.1;
        p.alpha = 0.2;
        p.beta = 0.3;
        p.r = 1;
        StepperConfig sc;
        sc.dt = 5e-3;
        sc.t_end = 0.5;
        Stepper st(g, p, sc);
        // Taylor-Green self-advection projects to zero, so the perturbed
        // trajectory stays exactly linear and the remainder is pure rounding.
        const auto xi0 = taylor_green(g);
        const auto res =
            frechet_remainder_check(SpectralField(g), xi0, st, {1e-2, 1e-3, 1e-4});
        CHECK(res.report.pass);
        CHECK(res.eps.empty()); // every entry dropped to the floor
    }

    SECTION("nonlinear run: quadratic slope, invariant under direction rescaling") {
        PhysParams p;
        p.mu = 0.15;
        p.alpha = 0.1;
        p.beta = 0.4;
        p.r = 3;
        p.forcing.kind = ForcingSpec::Kind::kolmogorov;
        p.forcing.amplitude = 0.6;
        StepperConfig sc;
        sc.dt = 2e-3;
        sc.t_end = 0.5;
        Stepper st(g, p, sc);
        const auto u0 = random_divfree_field(g, 5, 1.5, 1.0);
        const auto xi0 = random_divfree_field(g, 6, 1.5, 1.0);
        const std::vector<double> ladder = {1e-2, 1e-3, 1e-4, 1e-5};

        const auto res = frechet_remainder_check(u0, xi0, st, ladder);
        CHECK(res.report.pass);
        CHECK(res.slope == Catch::Approx(2.0).margin(0.1));

        const auto res2 = frechet_remainder_check(u0, 2.0 * xi0, st, ladder);
        CHECK(res2.slope == Catch::Approx(res.slope).margin(0.02));
    }
}
