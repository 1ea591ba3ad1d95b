#include <catch2/catch_amalgamated.hpp>

#include "cbf/integrator.hpp"

using namespace cbf;

namespace {

PhysParams decay_params() {
    PhysParams p;
    p.mu = 0.01;
    p.alpha = 0.1;
    p.beta = 0.5;
    p.r = 1;
    p.forcing = ForcingSpec::zero_forcing();
    return p;
}

SpectralField integrate(const Stepper& st, SpectralField u, double t_end) {
    const double dt = st.config().dt;
    const long n = std::lround(t_end / dt);
    for (long s = 0; s < n; ++s) u = st.advance(u, dt);
    return u;
}

} // namespace

TEST_CASE("Taylor-Green closed-form decay") {
    auto g = make_grid(32);
    const auto p = decay_params();
    StepperConfig sc;
    sc.dt = 1e-3;
    sc.t_end = 1.0;
    Stepper st(g, p, sc);

    const auto tg = taylor_green(g);
    const auto u1 = integrate(st, tg, 1.0);
    const double rate = 2.0 * p.mu + p.alpha + p.beta;
    const auto exact = std::exp(-rate) * tg;
    CHECK(norm_h(u1 - exact) / norm_h(exact) < 1e-6);
}

TEST_CASE("zero state with zero forcing stays zero") {
    auto g = make_grid(16);
    PhysParams p = decay_params();
    p.r = 3;
    StepperConfig sc;
    sc.dt = 1e-2;
    Stepper st(g, p, sc);
    const auto u = integrate(st, SpectralField(g), 0.5);
    CHECK(norm_h(u) == 0.0);
}

TEST_CASE("third-order convergence on the exact solution") {
    // With the damping fold disabled the beta*u term rides the explicit
    // stages, so the ladder exposes the genuine scheme order.
    auto g = make_grid(16);
    const auto p = decay_params();
    const auto tg = taylor_green(g);
    const double rate = 2.0 * p.mu + p.alpha + p.beta;
    const auto exact = std::exp(-rate) * tg;

    std::vector<double> dts = {8e-3, 4e-3, 2e-3};
    std::vector<double> errs;
    for (double dt : dts) {
        StepperConfig sc;
        sc.dt = dt;
        sc.fold_r1_damping = false;
        Stepper st(g, p, sc);
        errs.push_back(norm_h(integrate(st, tg, 1.0) - exact));
    }
    for (std::size_t i = 1; i < errs.size(); ++i) {
        const double order = std::log2(errs[i - 1] / errs[i]);
        INFO("dt = " << dts[i] << " order " << order);
        CHECK(order == Catch::Approx(3.0).margin(0.3));
    }
}

TEST_CASE("manufactured equilibrium") {
    auto g = make_grid(32);
    PhysParams p;
    p.mu = 1.0;
    p.alpha = 0.5;
    p.beta = 0.5;
    p.r = 3;

    const auto u_star = taylor_green(g, 0.1);
    p.forcing = manufactured_forcing(u_star, p);

    StepperConfig sc;
    sc.dt = 2e-3;
    Stepper st(g, p, sc);

    SECTION("residual of the right-hand side vanishes at u*") {
        // f was built from the same discrete operators, so one advance must
        // keep u* fixed to rounding.
        const auto u1 = st.advance(u_star, sc.dt);
        CHECK(norm_h(u1 - u_star) < 1e-12);
    }

    SECTION("perturbed start is pulled back to u*") {
        SpectralField u0 = u_star;
        add_scaled(u0, 1e-2, random_divfree_field(g, 9, 1.5, 1.0));
        const auto uT = integrate(st, u0, 12.0);
        CHECK(norm_h(uT - u_star) < 1e-8);
    }

    SECTION("zero equilibrium gives zero forcing") {
        const auto f = steady_state_forcing(SpectralField(g), p);
        CHECK(norm_h(f) == 0.0);
    }
}

TEST_CASE("tangent stepping") {
    auto g = make_grid(16);

    SECTION("zero tangent stays zero") {
        const auto p = decay_params();
        StepperConfig sc;
        sc.dt = 1e-2;
        Stepper st(g, p, sc);
        Stepper::Advance adv;
        auto u = taylor_green(g);
        st.advance(u, sc.dt, &adv);
        const auto xi = st.advance_tangent(SpectralField(g), adv);
        CHECK(norm_h(xi) == 0.0);
    }

    SECTION("frozen zero base, r=1: per-mode closed-form multiplier") {
        const auto p = decay_params();
        StepperConfig sc;
        sc.dt = 5e-3;
        Stepper st(g, p, sc);
        Stepper::Advance adv;
        st.advance(SpectralField(g), sc.dt, &adv);

        SpectralField xi(g);
        xi.at(0, 0, 2) = Complex(0.0, -0.5);
        xi.at(0, 0, g.n - 2) = Complex(0.0, 0.5);
        const auto xi1 = st.advance_tangent(xi, adv);
        const double mult = std::exp(-(p.mu * 4.0 + p.alpha + p.beta) * sc.dt);
        CHECK(std::abs(xi1.at(0, 0, 2) - mult * xi.at(0, 0, 2)) < 1e-15);
    }

    SECTION("linearity of the tangent map") {
        PhysParams p;
        p.mu = 0.05;
        p.alpha = 0.1;
        p.beta = 0.4;
        p.r = 3;
        p.forcing = ForcingSpec{};
        p.forcing.kind = ForcingSpec::Kind::kolmogorov;
        p.forcing.amplitude = 0.3;
        StepperConfig sc;
        sc.dt = 2e-3;
        Stepper st(g, p, sc);

        auto u = random_divfree_field(g, 1, 1.5, 1.0);
        Stepper::Advance adv;
        st.advance(u, sc.dt, &adv);

        const auto xi = random_divfree_field(g, 2, 1.5, 1.0);
        const auto eta = random_divfree_field(g, 3, 1.5, 1.0);
        const double a = 1.7, b = -0.45;
        const auto lhs = st.advance_tangent(a * xi + b * eta, adv);
        SpectralField rhs = a * st.advance_tangent(xi, adv);
        add_scaled(rhs, b, st.advance_tangent(eta, adv));
        CHECK(norm_h(lhs - rhs) < 1e-12 * std::max(1.0, norm_h(rhs)));
    }

    SECTION("tangent matches the nonlinear finite difference at first order") {
        PhysParams p;
        p.mu = 0.1;
        p.alpha = 0.1;
        p.beta = 0.3;
        p.r = 3;
        p.forcing.kind = ForcingSpec::Kind::kolmogorov;
        p.forcing.amplitude = 0.5;
        StepperConfig sc;
        sc.dt = 2e-3;
        sc.t_end = 0.5;
        Stepper st(g, p, sc);

        const auto u0 = random_divfree_field(g, 5, 1.5, 1.0);
        const auto xi0 = random_divfree_field(g, 6, 1.5, 1.0);

        SpectralField u = u0, xi = xi0;
        const long n = std::lround(sc.t_end / sc.dt);
        for (long s = 0; s < n; ++s) {
            Stepper::Advance adv;
            auto un = st.advance(u, sc.dt, &adv);
            xi = st.advance_tangent(xi, adv);
            u = std::move(un);
        }

        std::vector<double> eps = {1e-2, 1e-3, 1e-4};
        std::vector<double> err;
        for (double e : eps) {
            SpectralField v0 = u0;
            add_scaled(v0, e, xi0);
            const auto vT = integrate(st, v0, sc.t_end);
            SpectralField fd = vT - u;
            fd *= 1.0 / e;
            err.push_back(norm_h(fd - xi));
        }
        for (std::size_t i = 1; i < err.size(); ++i) {
            const double slope = std::log10(err[i - 1] / err[i]);
            INFO("eps " << eps[i] << " slope " << slope);
            CHECK(slope == Catch::Approx(1.0).margin(0.1));
        }
    }
}

TEST_CASE("energy accounting") {
    auto g = make_grid(32);
    PhysParams p;
    p.mu = 0.1;
    p.alpha = 0.2;
    p.beta = 0.5;
    p.r = 3;
    p.forcing.kind = ForcingSpec::Kind::kolmogorov;
    p.forcing.amplitude = 0.4;

    auto residual_at = [&](double dt) {
        StepperConfig sc;
        sc.dt = dt;
        sc.t_end = 0.5;
        Stepper st(g, p, sc);
        const auto rec = run_simulation(random_divfree_field(g, 3, 2.0, 1.0), st);
        return rec.max_step_residual;
    };

    SECTION("per-step residual is third order in dt") {
        const double r1 = residual_at(4e-3);
        const double r2 = residual_at(2e-3);
        const double ratio = r1 / r2;
        INFO("residuals " << r1 << " " << r2);
        CHECK(ratio > 5.0);
        CHECK(ratio < 12.0);
    }

    SECTION("gronwall envelope holds along a forced run") {
        StepperConfig sc;
        sc.dt = 2e-3;
        sc.t_end = 2.0;
        sc.record_every = 10;
        Stepper st(g, p, sc);
        const auto rec = run_simulation(random_divfree_field(g, 4, 2.0, 1.0), st);
        CHECK(rec.gronwall_all_ok());
        rec.validate();
        CHECK(rec.times.back() == Catch::Approx(2.0));
    }
}

TEST_CASE("CFL policies") {
    auto g = make_grid(16);
    PhysParams p = decay_params();
    StepperConfig sc;
    sc.dt = 0.5; // far beyond the advective limit for |u| ~ 1
    sc.on_cfl = CflPolicy::error;
    Stepper st_err(g, p, sc);
    const auto tg = taylor_green(g);
    CHECK_THROWS_AS(st_err.advance(tg, sc.dt), std::runtime_error);

    sc.on_cfl = CflPolicy::halve;
    Stepper st_halve(g, p, sc);
    Stepper::Advance adv;
    const auto u1 = st_halve.advance(tg, sc.dt, &adv);
    CHECK(adv.substeps.size() >= 2);
    // halved stepping still tracks the exact decay closely
    const double rate = 2.0 * p.mu + p.alpha + p.beta;
    CHECK(norm_h(u1 - std::exp(-rate * sc.dt) * tg) < 1e-10);
}
