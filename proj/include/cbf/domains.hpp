#pragma once

#include "cbf/integrator.hpp"

namespace cbf {

// ---------------------------------------------------------------------------
// Radial cutoff chi_R: 0 inside radius R, 1 at and beyond 2R, C^1 and
// monotone in between. In squared-radius coordinates s = |x-c|^2/R^2 the
// profile follows the quartic ((s-1)(2-s))^2 on s in [1, 3/2] (value 1/16 at
// s = 3/2, zero slope at both ends) and a cubic Hermite bridge from 1/16 up
// to 1 on s in [3/2, 4]. max |grad chi_R| stays below 2/R.

namespace detail {

inline double chi_profile(double s) {
    if (s <= 1.0) return 0.0;
    if (s >= 4.0) return 1.0;
    if (s <= 1.5) {
        const double a = (s - 1.0) * (2.0 - s);
        return a * a;
    }
    const double tau = (s - 1.5) / 2.5;
    return 0.0625 + 0.9375 * tau * tau * (3.0 - 2.0 * tau);
}

// d(chi)/ds
inline double chi_profile_ds(double s) {
    if (s <= 1.0 || s >= 4.0) return 0.0;
    if (s <= 1.5) return 2.0 * (s - 1.0) * (2.0 - s) * (3.0 - 2.0 * s);
    const double tau = (s - 1.5) / 2.5;
    return 0.9375 * 6.0 * tau * (1.0 - tau) / 2.5;
}

} // namespace detail

struct CutoffField {
    GridSpec grid;
    double radius = 0.0;
    std::vector<double> chi;     // n*n samples
    std::vector<double> grad;    // 2 planes, analytic gradient samples
    double max_grad = 0.0;

    static CutoffField uniform(const GridSpec& grid, double value) {
        CutoffField c;
        c.grid = grid;
        c.radius = 0.0;
        c.chi.assign(static_cast<std::size_t>(grid.size()), value);
        c.grad.assign(static_cast<std::size_t>(2) * grid.size(), 0.0);
        return c;
    }
};

inline double cutoff_value(double rho, double radius) {
    return detail::chi_profile(rho * rho / (radius * radius));
}

inline CutoffField cutoff_chi(const GridSpec& grid, double radius) {
    if (!(radius > 0.0)) throw std::invalid_argument("cutoff: radius must be positive");
    if (2.0 * radius > 0.5 * grid.length)
        throw std::invalid_argument("cutoff: 2R exceeds half the period");
    CutoffField c;
    c.grid = grid;
    c.radius = radius;
    c.chi.resize(static_cast<std::size_t>(grid.size()));
    c.grad.resize(static_cast<std::size_t>(2) * grid.size());
    const int n = grid.n;
    const double h = grid.dx();
    const double cx = 0.5 * grid.length, cy = cx;
    const double r2 = radius * radius;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double dx = i * h - cx, dy = j * h - cy;
            const double s = (dx * dx + dy * dy) / r2;
            const std::size_t idx = static_cast<std::size_t>(i) * n + j;
            c.chi[idx] = detail::chi_profile(s);
            const double dchids = detail::chi_profile_ds(s);
            const double gx = dchids * 2.0 * dx / r2;
            const double gy = dchids * 2.0 * dy / r2;
            c.grad[idx] = gx;
            c.grad[static_cast<std::size_t>(grid.size()) + idx] = gy;
            c.max_grad = std::max(c.max_grad, std::sqrt(gx * gx + gy * gy));
        }
    }
    return c;
}

// ---------------------------------------------------------------------------
// Masked data

// Sharp-indicator restriction of the forcing to the disc of radius R.
inline ForcingSpec masked_forcing(ForcingSpec f, double radius) {
    f.mask_radius = radius;
    return f;
}

inline SpectralField masked_initial_data(const SpectralField& u0, double radius) {
    return apply_disc_mask(u0, radius);
}

// ---------------------------------------------------------------------------
// Tail energy ||chi_R u||_{L^2}^2, quadrature on the cutoff's own grid.

inline double tail_energy(const SpectralField& u, const CutoffField& chi) {
    if (!u.grid.same_as(chi.grid)) throw std::invalid_argument("tail_energy: grid mismatch");
    const auto phys = inverse_transform(u);
    const std::size_t plane = static_cast<std::size_t>(u.grid.size());
    const double cell = u.grid.dx() * u.grid.dx();
    double acc = 0.0;
    for (std::size_t i = 0; i < plane; ++i) {
        const double c2 = chi.chi[i] * chi.chi[i];
        acc += c2 * (phys[i] * phys[i] + phys[plane + i] * phys[plane + i]);
    }
    return acc * cell;
}

// ---------------------------------------------------------------------------
// Attractor sampling

struct SnapshotSet {
    std::vector<SpectralField> fields;
    std::vector<double> times;
    double m1 = 0.0;             // absorbing radius of the run
    bool all_inside_ball = true; // transient long enough
};

// Integrates past the transient and collects `count` states spaced `spacing`
// apart. Samples outside the M1 ball are kept but flagged.
inline SnapshotSet attractor_snapshots(const SpectralField& u0, const Stepper& stepper,
                                       double transient, int count, double spacing) {
    if (count < 1) throw std::invalid_argument("attractor_snapshots: count must be positive");
    const double dt = stepper.config().dt;
    SnapshotSet set;
    set.m1 = std::sqrt(2.0 / stepper.grid().lambda1) * stepper.forcing_vdual() /
             stepper.params().mu;

    SpectralField u = u0;
    const long warm = std::lround(transient / dt);
    for (long s = 0; s < warm; ++s) u = stepper.advance(u, dt);
    const long gap = std::max<long>(1, std::lround(spacing / dt));
    for (int k = 0; k < count; ++k) {
        if (k > 0)
            for (long s = 0; s < gap; ++s) u = stepper.advance(u, dt);
        const double t = transient + static_cast<double>(k) * static_cast<double>(gap) * dt;
        if (norm_h(u) > set.m1 + kGronwallSlack) set.all_inside_ball = false;
        set.fields.push_back(u);
        set.times.push_back(t);
    }
    return set;
}

// ---------------------------------------------------------------------------
// Hausdorff semidistance dist(A,B) = sup_{a in A} inf_{b in B} ||a-b||_H

inline double hausdorff_semidistance(const std::vector<SpectralField>& a,
                                     const std::vector<SpectralField>& b) {
    if (a.empty() || b.empty())
        throw std::invalid_argument("hausdorff_semidistance: empty snapshot set");
    double sup = 0.0;
    for (const auto& x : a) {
        double inf = 1e300;
        for (const auto& y : b) inf = std::min(inf, norm_h(x - y));
        sup = std::max(sup, inf);
    }
    return sup;
}

} // namespace cbf
