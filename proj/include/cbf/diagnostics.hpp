#pragma once

#include <string>
#include <vector>

#include "cbf/integrator.hpp"

namespace cbf {

// One checked inequality: pass iff lhs <= rhs + tolerance. `anchor` is a
// stable identifier of the bound for report files.
struct BoundReport {
    std::string name;
    double lhs = 0.0;
    double rhs = 0.0;
    double tolerance = 0.0;
    double margin = 0.0; // rhs - lhs
    bool pass = false;
    std::string anchor;

    static BoundReport check(std::string name, double lhs, double rhs, double tolerance,
                             std::string anchor) {
        BoundReport r;
        r.name = std::move(name);
        r.lhs = lhs;
        r.rhs = rhs;
        r.tolerance = tolerance;
        r.margin = rhs - lhs;
        r.pass = lhs <= rhs + tolerance;
        r.anchor = std::move(anchor);
        return r;
    }

    std::string human_line() const;
};

inline std::string BoundReport::human_line() const {
    char buf[256];
    std::snprintf(buf, sizeof buf, "[%s] %-34s lhs=%.6g rhs=%.6g margin=%.3g (%s)",
                  pass ? "PASS" : "FAIL", name.c_str(), lhs, rhs, margin, anchor.c_str());
    return std::string(buf);
}

// ---------------------------------------------------------------------------
// Absorbing ball

struct AbsorbingRadii {
    double m1 = 0.0;        // (1/mu) sqrt(2/lambda1) ||f||_{V'}
    double m1_alpha = 0.0;  // sqrt(2/(mu alpha)) ||f||_{V'}, Darcy-driven
};

inline AbsorbingRadii absorbing_ball_radius(const PhysParams& params, const GridSpec& grid,
                                            double f_vdual) {
    AbsorbingRadii r;
    r.m1 = std::sqrt(2.0 / grid.lambda1) * f_vdual / params.mu;
    r.m1_alpha = params.alpha > 0.0 ? std::sqrt(2.0 / (params.mu * params.alpha)) * f_vdual : 0.0;
    return r;
}

// First recorded time after which the trajectory stays inside the M1 ball.
// Returns a negative value when the trajectory never settles.
inline double absorbing_entry_time(const RunRecord& rec, double m1, double slack = kGronwallSlack) {
    double entry = -1.0;
    for (std::size_t i = 0; i < rec.rows(); ++i) {
        const double h2 = rec.h_norm[i] * rec.h_norm[i];
        if (h2 <= m1 * m1 + slack) {
            if (entry < 0.0) entry = rec.times[i];
        } else {
            entry = -1.0;
        }
    }
    return entry;
}

inline BoundReport gronwall_report(const RunRecord& rec) {
    // Worst excess over the envelope across all recorded times.
    double worst = -1e300;
    double worst_rhs = 0.0;
    for (std::size_t i = 0; i < rec.rows(); ++i) {
        const double lhs = rec.h_norm[i] * rec.h_norm[i];
        const double rhs =
            gronwall_envelope(rec.times[i], rec.u0_h * rec.u0_h, rec.f_vdual, rec.mu, rec.lambda1);
        if (lhs - rhs > worst) {
            worst = lhs - rhs;
            worst_rhs = rhs;
        }
    }
    return BoundReport::check("gronwall_envelope", worst + worst_rhs, worst_rhs, kGronwallSlack,
                              "gronwall-envelope-h");
}

// ---------------------------------------------------------------------------
// Time-averaged dissipation

// (1/t) integral of [mu ||u||_V^2 + alpha ||u||_H^2 + beta ||u||^{r+1}]
// against ||u0||_H^2/t + ||f||_{V'}^2/mu, from recorded series only.
inline BoundReport time_average_dissipation(const RunRecord& rec) {
    if (rec.rows() < 2) throw std::invalid_argument("time_average_dissipation: empty record");
    double integral = 0.0;
    auto dissipation_at = [&](std::size_t i) {
        return rec.mu * rec.v_norm[i] * rec.v_norm[i] + rec.alpha * rec.h_norm[i] * rec.h_norm[i] +
               rec.beta * std::pow(rec.lr_norm[i], rec.r + 1);
    };
    for (std::size_t i = 1; i < rec.rows(); ++i)
        integral += 0.5 * (rec.times[i] - rec.times[i - 1]) * (dissipation_at(i) + dissipation_at(i - 1));
    const double t = rec.times.back();
    const double lhs = integral / t;
    const double rhs = rec.u0_h * rec.u0_h / t + rec.f_vdual * rec.f_vdual / rec.mu;
    // Quadrature slack scales with the record resolution.
    const double slack = 1e-6 + rec.dt * rec.dt * rec.dt;
    return BoundReport::check("time_average_dissipation", lhs, rhs, slack,
                              "time-averaged-dissipation");
}

// ---------------------------------------------------------------------------
// Lipschitz dependence on initial data

struct LipschitzResult {
    BoundReport report;
    std::vector<double> times;
    std::vector<double> separation;   // ||S(t)u0 - S(t)v0||_H
    std::vector<double> bound;        // Lipschitz envelope
};

// ||S(t)u0 - S(t)v0||_H <= ||u0 - v0||_H exp{ (1/mu^2)(||u0||_H^2 + t ||f||_{V'}^2 / mu) },
// verified at every recorded time along the pair.
inline LipschitzResult lipschitz_pair_check(const SpectralField& u0, const SpectralField& v0,
                                            const Stepper& stepper) {
    check_same_grid(u0, v0, "lipschitz_pair_check");
    const StepperConfig& cfg = stepper.config();
    const PhysParams& p = stepper.params();
    const double w0 = norm_h(u0 - v0);
    const double u0h2 = norm_h(u0) * norm_h(u0);
    const double fv2 = stepper.forcing_vdual() * stepper.forcing_vdual();

    LipschitzResult res;
    SpectralField u = u0, v = v0;
    const long n_steps = std::lround(cfg.t_end / cfg.dt);
    double worst_excess = -1e300;
    double worst_rhs = 1.0;
    auto visit = [&](double t) {
        const double sep = norm_h(u - v);
        const double env = w0 * std::exp((u0h2 + t * fv2 / p.mu) / (p.mu * p.mu));
        res.times.push_back(t);
        res.separation.push_back(sep);
        res.bound.push_back(env);
        if (sep - env > worst_excess) {
            worst_excess = sep - env;
            worst_rhs = env;
        }
    };
    visit(0.0);
    for (long s = 1; s <= n_steps; ++s) {
        u = stepper.advance(u, cfg.dt);
        v = stepper.advance(v, cfg.dt);
        if (s % cfg.record_every == 0 || s == n_steps) visit(static_cast<double>(s) * cfg.dt);
    }
    res.report = BoundReport::check("lipschitz_pair", worst_excess + worst_rhs, worst_rhs,
                                    kGronwallSlack, "lipschitz-initial-data");
    return res;
}

// ---------------------------------------------------------------------------
// Frechet remainder slope

struct FrechetResult {
    std::vector<double> eps;        // retained ladder entries
    std::vector<double> remainder;  // ||S(t)(u0+e xi0) - S(t)u0 - e xi(t)||_H
    std::vector<double> dropped_eps; // entries at the rounding floor
    double slope = 0.0;
    BoundReport report;
};

// Co-integrates the tangent along u0 and fits log(remainder) vs log(eps).
// Quadratic remainder (slope 2) is the differentiability certificate.
inline FrechetResult frechet_remainder_check(const SpectralField& u0, const SpectralField& xi0,
                                             const Stepper& stepper,
                                             const std::vector<double>& eps_ladder,
                                             double slope_tol = 0.1) {
    const StepperConfig& cfg = stepper.config();
    const long n_steps = std::lround(cfg.t_end / cfg.dt);

    SpectralField u = u0, xi = xi0;
    for (long s = 0; s < n_steps; ++s) {
        Stepper::Advance adv;
        SpectralField un = stepper.advance(u, cfg.dt, &adv);
        xi = stepper.advance_tangent(xi, adv);
        u = std::move(un);
    }

    FrechetResult res;
    const double floor_scale = norm_h(u);
    for (double e : eps_ladder) {
        SpectralField v = u0;
        add_scaled(v, e, xi0);
        for (long s = 0; s < n_steps; ++s) v = stepper.advance(v, cfg.dt);
        SpectralField rem = v - u;
        add_scaled(rem, -e, xi);
        const double r = norm_h(rem);
        // Ladder entries that sank to the rounding floor carry no slope
        // information; they are reported and excluded from the fit.
        if (r <= 1e3 * 1e-16 * std::max(1.0, floor_scale)) {
            res.dropped_eps.push_back(e);
            continue;
        }
        res.eps.push_back(e);
        res.remainder.push_back(r);
    }

    if (res.eps.size() >= 2) {
        // Least-squares slope in log-log coordinates.
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const double n = static_cast<double>(res.eps.size());
        for (std::size_t i = 0; i < res.eps.size(); ++i) {
            const double x = std::log(res.eps[i]), y = std::log(res.remainder[i]);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        res.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        res.report = BoundReport::check("frechet_remainder_slope", std::abs(res.slope - 2.0),
                                        slope_tol, 0.0, "frechet-remainder-quadratic");
    } else {
        // The whole ladder sat at the rounding floor: the remainder is zero
        // to machine precision, which certifies differentiability directly
        // (linear dynamics). No slope is fitted.
        res.report = BoundReport::check("frechet_remainder_floor",
                                        res.eps.empty() ? 0.0 : 1.0, 0.0, 0.0,
                                        "frechet-remainder-quadratic");
    }
    return res;
}

} // namespace cbf
