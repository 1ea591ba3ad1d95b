// Acceptance suite: one pass/fail line per criterion. Exit code is the
// number of failed criteria. Heavier criteria drive the shipped configs in
// configs/ through the same experiment drivers the CLI uses.

#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cbf/experiments.hpp"

using namespace cbf;

#ifndef CBF_CONFIG_DIR
#define CBF_CONFIG_DIR "../configs"
#endif

namespace {

int g_failures = 0;

void report(int id, const std::string& title, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %2d: %s  (%s)\n", pass ? "PASS" : "FAIL", id, title.c_str(),
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

RunConfig load_config(const std::string& name) {
    return parse_config(slurp(std::string(CBF_CONFIG_DIR) + "/" + name));
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return std::string(buf);
}

SpectralField integrate(const Stepper& st, SpectralField u, double t_end) {
    const double dt = st.config().dt;
    const long n = std::lround(t_end / dt);
    for (long s = 0; s < n; ++s) u = st.advance(u, dt);
    return u;
}

// --------------------------------------------------------------------------
// 1. Exact-solution convergence on the Taylor-Green decay.

void criterion_1() {
    auto g = make_grid(32);
    PhysParams p;
    p.mu = 0.01;
    p.alpha = 0.1;
    p.beta = 0.5;
    p.r = 1;
    const double rate = 2.0 * p.mu + p.alpha + p.beta;
    const auto tg = taylor_green(g);
    const auto exact = std::exp(-rate) * tg;

    StepperConfig sc;
    sc.dt = 1e-3;
    sc.t_end = 1.0;
    Stepper st(g, p, sc);
    const double rel = norm_h(integrate(st, tg, 1.0) - exact) / norm_h(exact);

    std::vector<double> dts = {8e-3, 4e-3, 2e-3};
    std::vector<double> errs;
    for (double dt : dts) {
        StepperConfig lc;
        lc.dt = dt;
        lc.fold_r1_damping = false; // keep beta*u on the explicit path
        Stepper lst(g, p, lc);
        errs.push_back(norm_h(integrate(lst, tg, 1.0) - exact));
    }
    bool orders_ok = true;
    std::string orders;
    for (std::size_t i = 1; i < errs.size(); ++i) {
        const double order = std::log2(errs[i - 1] / errs[i]);
        orders += fmt("%.3f ", order);
        orders_ok = orders_ok && std::abs(order - 3.0) <= 0.3;
    }
    report(1, "Taylor-Green exact decay and third-order ladder", rel < 1e-6 && orders_ok,
           fmt("rel err %.3g at t=1, ladder orders %s", rel, orders.c_str()));
}

// --------------------------------------------------------------------------
// 2. Energy-law audit on the laminar and energetic shipped configs.

void criterion_2() {
    bool pass = true;
    std::string detail;
    for (const char* name : {"laminar_audit.cfg", "chaotic_audit.cfg"}) {
        RunConfig cfg = load_config(name);
        cfg.out_dir = std::string("acceptance_out/audit_") + name;
        const auto res = run_experiment(cfg);
        pass = pass && res.all_pass();
        detail += std::string(name) + " ratio " + res.summary.at("richardson_ratio") + "; ";
    }
    report(2, "energy balance residual is O(dt^3), Richardson-verified", pass, detail);
}

// --------------------------------------------------------------------------
// 3. Gronwall envelope and absorbing radius over 10 scaled random ICs.

void criterion_3() {
    RunConfig cfg = load_config("absorbing_reference.cfg");
    cfg.out_dir = "acceptance_out/absorbing";
    const auto res = run_experiment(cfg);
    report(3, "Gronwall envelope and absorbing ball entry for 10 ICs up to 10*M1",
           res.all_pass(),
           fmt("M1=%s, worst entry t_B=%s", res.summary.at("absorbing_radius_m1").c_str(),
               res.summary.at("worst_entry_time").c_str()));
}

// --------------------------------------------------------------------------
// 4. Time-averaged dissipation bound on every shipped config.

void criterion_4() {
    bool pass = true;
    std::string detail;
    int checked = 0;
    std::vector<std::filesystem::path> paths;
    for (const auto& entry : std::filesystem::directory_iterator(CBF_CONFIG_DIR))
        if (entry.path().extension() == ".cfg") paths.push_back(entry.path());
    std::sort(paths.begin(), paths.end());
    for (const auto& path : paths) {
        const RunConfig cfg = parse_config(slurp(path.string()));
        const GridSpec grid = cfg.make_grid_spec();
        StepperConfig sc = cfg.stepper;
        sc.t_end = std::min(cfg.stepper.t_end, 5.0);
        sc.record_every = std::max(sc.record_every, 5);
        Stepper st(grid, cfg.physics, sc);
        const SpectralField u0 = realize_forcing(cfg.experiment.u0, grid, cfg.physics);
        if (norm_h(u0) == 0.0 && st.forcing_vdual() == 0.0) continue; // trivial dynamics
        const auto rec = run_simulation(u0, st);
        const auto rep = time_average_dissipation(rec);
        ++checked;
        if (!(rep.pass && rep.margin > 0.0)) {
            pass = false;
            detail += path.filename().string() + " margin " + std::to_string(rep.margin) + "; ";
        }
    }
    if (detail.empty()) detail = fmt("positive margin on all %d nontrivial configs", checked);
    report(4, "time-averaged dissipation bound on all shipped configs", pass && checked > 0,
           detail);
}

// --------------------------------------------------------------------------
// 5. Operator identities over >= 1000 random fields via the verify driver.

void criterion_5() {
    RunConfig cfg = load_config("verify_reference.cfg");
    cfg.out_dir = "acceptance_out/verify";
    const auto res = run_experiment(cfg);
    std::string bad;
    for (const auto& r : res.reports)
        if (!r.pass) bad += r.name + " ";
    report(5, "operator identities at stated tolerances over random ensembles", res.all_pass(),
           bad.empty() ? "all identity reports green" : ("failing: " + bad));
}

// --------------------------------------------------------------------------
// 6. Frechet differentiability: remainder slope 2.0 +/- 0.1 for r=1,2,3.

void criterion_6() {
    bool pass = true;
    std::string detail;
    for (int r = 1; r <= 3; ++r) {
        RunConfig cfg = load_config("frechet_r" + std::to_string(r) + ".cfg");
        cfg.out_dir = "acceptance_out/frechet_r" + std::to_string(r);
        const auto res = run_experiment(cfg);
        pass = pass && res.all_pass();
        detail += fmt("r=%d slope %.4s G=%.5s; ", r, res.summary.at("slope").c_str(),
                      res.summary.at("grashof").c_str());
    }
    report(6, "Frechet remainder slope 2.0 +/- 0.1 for r in {1,2,3} near G=20", pass, detail);
}

// --------------------------------------------------------------------------
// 7. Lyapunov closed forms in the frozen regime plus the stable run.

void criterion_7() {
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
    const auto exps = exponents(ens);
    auto rates = canonical_mode_rates(g, p, ec.m);
    std::sort(rates.rbegin(), rates.rend());
    double worst = 0.0;
    for (std::size_t i = 0; i < exps.size(); ++i)
        worst = std::max(worst, std::abs(exps[i] - rates[i]));
    const auto rep = dimension_report(ens, st);
    const double cons = std::abs(rep.exponent_sum - rep.trace_mean_full);

    // stable equilibrium: every exponent negative, d_KY = 0
    PhysParams ps;
    ps.mu = 0.6;
    ps.alpha = 0.3;
    ps.beta = 0.4;
    ps.r = 3;
    const auto u_star = taylor_green(g, 0.05);
    ps.forcing = manufactured_forcing(u_star, ps);
    StepperConfig scs;
    scs.dt = 5e-3;
    scs.t_end = 30.0;
    Stepper sts(g, ps, scs);
    EnsembleConfig ecs;
    ecs.m = 3;
    ecs.t_total = 30.0;
    const auto inits = canonical_tangent_basis(g, ecs.m);
    const auto enss = evolve_ensemble_qr(u_star, sts, ecs, &inits);
    const auto expss = exponents(enss);
    const bool all_neg = expss.front() < 0.0;
    const double dky = ky_dimension(expss).value;

    report(7, "frozen-regime exponent closed form, estimator consistency, stable run",
           worst < 1e-8 && cons < 1e-6 && all_neg && dky == 0.0,
           fmt("max exponent err %.2g, |sum-trace| %.2g, top stable exponent %.3f, d_KY %.1f",
               worst, cons, expss.front(), dky));
}

// --------------------------------------------------------------------------
// 8. Dimension bounds with kappa calibrated once on the reference config.

void criterion_8() {
    auto run_lyap = [&](const std::string& name) {
        RunConfig cfg = load_config(name);
        const GridSpec grid = cfg.make_grid_spec();
        Stepper st(grid, cfg.physics, cfg.stepper);
        SpectralField u0 = realize_forcing(cfg.experiment.u0, grid, cfg.physics);
        const long warm = std::lround(cfg.experiment.warmup / cfg.stepper.dt);
        for (long s = 0; s < warm; ++s) u0 = st.advance(u0, cfg.stepper.dt);
        EnsembleConfig ec;
        ec.m = cfg.experiment.m;
        ec.t_total = cfg.stepper.t_end;
        ec.t_ortho = cfg.experiment.t_ortho;
        ec.seed = cfg.seed;
        const auto ens = evolve_ensemble_qr(u0, st, ec);
        return dimension_report(ens, st);
    };

    const DimensionReport ref = run_lyap("lyapunov_reference.cfg");
    RunConfig ref_cfg = load_config("lyapunov_reference.cfg");
    const double mu_ref = ref_cfg.physics.mu;
    const double lam1 = 1.0; // all three configs share the default torus

    // Calibrate the absolute constant once, from the reference trace curve:
    // the inequality q_m <= -mu lam1 m / 2 + kappa E / (2 mu^2 lam1) must
    // hold for every m, so kappa is its largest measured requirement with a
    // factor-2 safety margin for the unmeasured subspace sizes.
    double kappa = 1e-12;
    for (std::size_t k = 0; k < ref.traces.q_tail.size(); ++k) {
        const double m = static_cast<double>(k + 1);
        const double need = 2.0 * mu_ref * mu_ref * lam1 *
                            (ref.traces.q_tail[k] + 0.5 * mu_ref * lam1 * m) /
                            std::max(ref.flux_measured, 1e-300);
        kappa = std::max(kappa, 2.0 * need);
    }

    // The reference must be genuinely chaotic and its KY interpolation must
    // resolve inside the ensemble.
    bool pass = !ref.ky.saturated && ref.ky.value > 1.0 && ref.exponents.front() > 0.0;
    std::string detail = fmt("ref: d_KY=%.2f lam1=%.3f G=%.0f kappa=%.3g; ", ref.ky.value,
                             ref.exponents.front(), ref.bounds.grashof, kappa);
    for (const char* name : {"lyapunov_alt_mu.cfg", "lyapunov_alt_f.cfg"}) {
        const DimensionReport rep = run_lyap(name);
        const double G = rep.bounds.grashof;
        const double dim_f_bound = 2.0 * (1.0 + 2.0 * kappa * G * G);
        const double dim_h_bound = 1.0 + kappa * G * G;
        const bool ky_ok = !rep.ky.saturated && rep.ky.value <= dim_f_bound + 1e-12;
        const bool trace_ok = rep.traces.first_negative > 0 &&
                              rep.traces.first_negative <= std::ceil(dim_h_bound) + 1e-12;
        // the trace dimension always dominates the KY interpolation
        const bool ky_le_trace =
            rep.traces.first_negative < 0 ||
            rep.ky.value <= static_cast<double>(rep.traces.first_negative) + 1e-12;
        pass = pass && ky_ok && trace_ok && ky_le_trace;
        detail += fmt("%s: d_KY=%.2f<=%.2f m*=%d<=ceil(%.2f); ", name, rep.ky.value, dim_f_bound,
                      rep.traces.first_negative, dim_h_bound);
    }

    // Grashof scaling of the bound formulas is exact.
    PhysParams p1;
    p1.mu = 0.5;
    const auto b1 = paper_bounds(p1, 2.0, 1.0, 1.3);
    PhysParams p2;
    p2.mu = 0.25;
    const auto b2 = paper_bounds(p2, 2.0, 1.0, 1.3);
    const bool scaling_ok =
        std::abs(b2.grashof - 4.0 * b1.grashof) < 1e-12 * b1.grashof &&
        std::abs((b2.dim_h_grashof - 1.0) - 16.0 * (b1.dim_h_grashof - 1.0)) < 1e-10 &&
        std::abs((b2.dim_f_grashof - 2.0) - 16.0 * (b1.dim_f_grashof - 2.0)) < 1e-10;
    pass = pass && scaling_ok;

    report(8, "dimension bounds dominate d_KY and trace dimension with one kappa", pass, detail);
}

// --------------------------------------------------------------------------
// 9. Cutoff function invariants at N=128 and N=256.

void criterion_9() {
    bool pass = true;
    std::string detail;
    for (int n : {128, 256}) {
        auto g = make_grid(n);
        const double r = g.length / 5.0;
        const auto c = cutoff_chi(g, r);
        double lo = 1e300, hi = -1e300;
        for (double v : c.chi) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        const bool ok = lo >= 0.0 && hi <= 1.0 && c.max_grad * r <= 12.5;
        pass = pass && ok;
        detail += fmt("N=%d max|grad|R=%.3f; ", n, c.max_grad * r);
    }
    const double r = 1.25;
    const double s = 1.3;
    const bool spots_ok =
        std::abs(cutoff_value(r * std::sqrt(1.5), r) - 1.0 / 16.0) < 1e-12 &&
        std::abs(cutoff_value(r * std::sqrt(s), r) - std::pow((s - 1.0) * (2.0 - s), 2)) < 1e-12 &&
        cutoff_value(0.0, r) == 0.0 && cutoff_value(2.0 * r, r) == 1.0;
    pass = pass && spots_ok;
    report(9, "cutoff gradient bound and quartic spot values", pass,
           detail + (spots_ok ? "spot checks exact" : "spot checks FAILED"));
}

// --------------------------------------------------------------------------
// 10. Expanding-domain semicontinuity ladder.

void criterion_10() {
    RunConfig cfg = load_config("semicontinuity_reference.cfg");
    cfg.out_dir = "acceptance_out/semicontinuity";
    const auto res = run_experiment(cfg);
    report(10, "masked-forcing ladder: gaps, tails and semidistance trend", res.all_pass(),
           fmt("final semidistance %s (declared eps %g)",
               res.summary.at("semidistance_final").c_str(), cfg.experiment.epsilon_final));
}

// --------------------------------------------------------------------------
// 11. Determinism of the artifact manifests.

void criterion_11() {
    RunConfig cfg = load_config("simulate_demo.cfg");
    cfg.stepper.t_end = std::min(cfg.stepper.t_end, 2.0);
    cfg.out_dir = "acceptance_out/det_a";
    run_experiment(cfg);
    cfg.out_dir = "acceptance_out/det_b";
    run_experiment(cfg);
    const std::string a = slurp("acceptance_out/det_a/manifest.txt");
    const std::string b = slurp("acceptance_out/det_b/manifest.txt");
    report(11, "identical config and seed give identical manifests", !a.empty() && a == b,
           fmt("%zu manifest bytes compared", a.size()));
}

} // namespace

int main() {
    std::filesystem::create_directories("acceptance_out");
    using Fn = void (*)();
    const Fn criteria[] = {criterion_1, criterion_2, criterion_3, criterion_4,
                           criterion_5, criterion_6, criterion_7, criterion_8,
                           criterion_9, criterion_10, criterion_11};
    int id = 1;
    for (Fn fn : criteria) {
        try {
            fn();
        } catch (const std::exception& e) {
            report(id, "criterion raised an exception", false, e.what());
        }
        ++id;
    }
    std::printf("%d criteria failed\n", g_failures);
    return g_failures;
}
