#pragma once

#include <cmath>
#include <stdexcept>
#include <variant>

#include "cbf/field.hpp"

namespace cbf {

// ---------------------------------------------------------------------------
// Norms

struct NormKind {
    enum Tag { H, V, Vdual, Lp } tag = H;
    double p = 2.0;

    static NormKind h() { return {H, 2.0}; }
    static NormKind v() { return {V, 2.0}; }
    static NormKind vdual() { return {Vdual, 2.0}; }
    static NormKind lp(double p) { return {Lp, p}; }
};

inline double norm_v(const SpectralField& f) {
    double acc = 0.0;
    const int n = f.grid.n;
    for (int c = 0; c < 2; ++c)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) acc += f.grid.k_sq(i, j) * std::norm(f.at(c, i, j));
    return f.grid.length * std::sqrt(acc);
}

// Dual norm on the divergence-free scale: || A^{-1/2} P f ||_H. The argument
// must be projected and zero-mean; the zero mode is skipped.
inline double norm_vdual(const SpectralField& f) {
    double acc = 0.0;
    const int n = f.grid.n;
    for (int c = 0; c < 2; ++c) {
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                const double k2 = f.grid.k_sq(i, j);
                if (k2 == 0.0) continue;
                acc += std::norm(f.at(c, i, j)) / k2;
            }
        }
    }
    return f.grid.length * std::sqrt(acc);
}

// L^p norm of the pointwise magnitude |u| = sqrt(u1^2+u2^2), by quadrature on
// the pad-refined grid.
inline double norm_lp(const SpectralField& f, double p) {
    if (p < 2.0) throw std::invalid_argument("norm_lp: p must be at least 2");
    const int m = f.grid.padded_n();
    const std::vector<double> phys = to_physical_padded(f, m);
    const double cell = (f.grid.length / m) * (f.grid.length / m);
    const std::size_t sz = static_cast<std::size_t>(m) * m;
    double acc = 0.0;
    for (std::size_t i = 0; i < sz; ++i) {
        const double a = phys[i];
        const double b = phys[sz + i];
        acc += std::pow(a * a + b * b, 0.5 * p);
    }
    return std::pow(acc * cell, 1.0 / p);
}

inline double norm(const SpectralField& f, NormKind kind) {
    switch (kind.tag) {
        case NormKind::H: return norm_h(f);
        case NormKind::V: return norm_v(f);
        case NormKind::Vdual: return norm_vdual(f);
        case NormKind::Lp: return norm_lp(f, kind.p);
    }
    throw std::logic_error("norm: unreachable");
}

inline double max_pointwise_speed(const std::vector<double>& phys, std::size_t plane) {
    double worst = 0.0;
    for (std::size_t i = 0; i < plane; ++i)
        worst = std::max(worst, phys[i] * phys[i] + phys[plane + i] * phys[plane + i]);
    return std::sqrt(worst);
}

inline double max_speed(const SpectralField& f) {
    const int m = f.grid.padded_n();
    const auto phys = to_physical_padded(f, m);
    return max_pointwise_speed(phys, static_cast<std::size_t>(m) * m);
}

// H^2 norm used by the Agmon diagnostic: (||u||_H^2 + ||A u||_H^2)^{1/2}.
inline double norm_h2(const SpectralField& f) {
    double acc = 0.0;
    const int n = f.grid.n;
    for (int c = 0; c < 2; ++c)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const double k2 = f.grid.k_sq(i, j);
                acc += (1.0 + k2 * k2) * std::norm(f.at(c, i, j));
            }
    return f.grid.length * std::sqrt(acc);
}

// ---------------------------------------------------------------------------
// Stokes operator and derivatives

// A = -P Laplace, diagonal multiplier |k|^2 on the torus.
inline SpectralField apply_stokes(const SpectralField& u) {
    SpectralField r = u;
    const int n = u.grid.n;
    for (int c = 0; c < 2; ++c)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) r.at(c, i, j) *= u.grid.k_sq(i, j);
    return r;
}

namespace detail {

// Padded physical samples of u and of grad u, shared by the nonlinear terms.
struct PhysicalStage {
    int n_pad = 0;
    std::vector<double> u;      // 2 planes
    std::vector<double> grad;   // 4 planes: d1u1, d2u1, d1u2, d2u2
    double max_speed = 0.0;

    std::size_t plane() const { return static_cast<std::size_t>(n_pad) * n_pad; }
};

inline PhysicalStage make_physical_stage(const SpectralField& u, bool with_grad = true) {
    PhysicalStage s;
    s.n_pad = u.grid.padded_n();
    s.u = to_physical_padded(u, s.n_pad);
    s.max_speed = max_pointwise_speed(s.u, s.plane());
    if (with_grad) {
        const int n = u.grid.n;
        s.grad.resize(4 * s.plane());
        std::vector<Complex> dx(static_cast<std::size_t>(u.grid.size()));
        std::vector<Complex> dy(static_cast<std::size_t>(u.grid.size()));
        std::vector<Complex> buf;
        for (int comp = 0; comp < 2; ++comp) {
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    const std::size_t idx = static_cast<std::size_t>(i) * n + j;
                    const Complex c = u.at(comp, i, j);
                    dx[idx] = Complex(0.0, u.grid.kx(i)) * c;
                    dy[idx] = Complex(0.0, u.grid.ky(j)) * c;
                }
            pair_to_physical(u.grid, dx.data(), dy.data(), s.n_pad,
                             s.grad.data() + static_cast<std::size_t>(2 * comp) * s.plane(),
                             s.grad.data() + static_cast<std::size_t>(2 * comp + 1) * s.plane(),
                             buf);
        }
    }
    return s;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Convection B(u,v) = P((u.grad) v), dealiased through the padded grid.

inline SpectralField bilinear(const detail::PhysicalStage& u, const SpectralField& v_spec) {
    const auto v = detail::make_physical_stage(v_spec);
    if (u.n_pad != v.n_pad) throw std::invalid_argument("bilinear: grid mismatch");
    const std::size_t plane = u.plane();
    std::vector<double> w(2 * plane);
    for (std::size_t i = 0; i < plane; ++i) {
        const double a = u.u[i], b = u.u[plane + i];
        w[i] = a * v.grad[i] + b * v.grad[plane + i];
        w[plane + i] = a * v.grad[2 * plane + i] + b * v.grad[3 * plane + i];
    }
    return project_divfree(from_physical_padded(v_spec.grid, u.n_pad, w));
}

inline SpectralField bilinear(const SpectralField& u, const SpectralField& v) {
    check_same_grid(u, v, "bilinear");
    return bilinear(detail::make_physical_stage(u, /*with_grad=*/false), v);
}

// Trilinear form b(u,v,w) = integral (u.grad v).w evaluated by padded
// quadrature, independent of the projected operator path.
inline double trilinear(const SpectralField& u, const SpectralField& v, const SpectralField& w) {
    check_same_grid(u, v, "trilinear");
    check_same_grid(u, w, "trilinear");
    const auto us = detail::make_physical_stage(u, false);
    const auto vs = detail::make_physical_stage(v, true);
    const auto ws = detail::make_physical_stage(w, false);
    const std::size_t plane = us.plane();
    const double cell = (u.grid.length / us.n_pad) * (u.grid.length / us.n_pad);
    double acc = 0.0;
    for (std::size_t i = 0; i < plane; ++i) {
        const double a = us.u[i], b = us.u[plane + i];
        acc += (a * vs.grad[i] + b * vs.grad[plane + i]) * ws.u[i];
        acc += (a * vs.grad[2 * plane + i] + b * vs.grad[3 * plane + i]) * ws.u[plane + i];
    }
    return acc * cell;
}

// ---------------------------------------------------------------------------
// Damping C(u) = P(|u|^{r-1} u) and its derivative

inline void check_absorption_exponent(int r) {
    if (r < 1 || r > 3)
        throw std::invalid_argument("absorption exponent r must be in {1,2,3}, got " +
                                    std::to_string(r));
}

inline SpectralField damping(const SpectralField& u, int r) {
    check_absorption_exponent(r);
    if (r == 1) return project_divfree(u);
    const int m = u.grid.padded_n();
    auto phys = to_physical_padded(u, m);
    const std::size_t plane = static_cast<std::size_t>(m) * m;
    for (std::size_t i = 0; i < plane; ++i) {
        const double a = phys[i], b = phys[plane + i];
        const double s2 = a * a + b * b;
        const double w = (r == 3) ? s2 : std::sqrt(s2);
        phys[i] = w * a;
        phys[plane + i] = w * b;
    }
    return project_divfree(from_physical_padded(u.grid, m, phys));
}

// C'(u) xi = P(|u|^{r-1} xi + (r-1)|u|^{r-3} (u.xi) u). For r=2 the second
// term's |u|^{-1} factor is taken as 0 where |u| < 1e-14, the pointwise limit.
inline SpectralField damping_derivative(const detail::PhysicalStage& us, const SpectralField& xi,
                                        int r) {
    check_absorption_exponent(r);
    if (r == 1) return project_divfree(xi);
    const int m = xi.grid.padded_n();
    if (us.n_pad != m) throw std::invalid_argument("damping_derivative: grid mismatch");
    auto xp = to_physical_padded(xi, m);
    const std::size_t plane = static_cast<std::size_t>(m) * m;
    for (std::size_t i = 0; i < plane; ++i) {
        const double a = us.u[i], b = us.u[plane + i];
        const double x = xp[i], y = xp[plane + i];
        const double s2 = a * a + b * b;
        double rx, ry;
        if (r == 3) {
            const double dot2 = 2.0 * (a * x + b * y);
            rx = s2 * x + dot2 * a;
            ry = s2 * y + dot2 * b;
        } else { // r == 2
            const double s = std::sqrt(s2);
            rx = s * x;
            ry = s * y;
            if (s >= 1e-14) {
                const double dot = (a * x + b * y) / s;
                rx += dot * a;
                ry += dot * b;
            }
        }
        xp[i] = rx;
        xp[plane + i] = ry;
    }
    return project_divfree(from_physical_padded(xi.grid, m, xp));
}

inline SpectralField damping_derivative(const SpectralField& u, const SpectralField& xi, int r) {
    check_same_grid(u, xi, "damping_derivative");
    if (r == 1) return project_divfree(xi); // skip the physical evaluation entirely
    return damping_derivative(detail::make_physical_stage(u, false), xi, r);
}

// Duality pairing <|u1|^{r-1}u1 - |u2|^{r-1}u2, u1 - u2> by padded physical
// quadrature. The integrand is pointwise nonnegative, so the value is
// nonnegative to rounding for every r.
inline double damping_monotonicity_pairing(const SpectralField& u1, const SpectralField& u2,
                                           int r) {
    check_absorption_exponent(r);
    check_same_grid(u1, u2, "damping_monotonicity_pairing");
    const int m = u1.grid.padded_n();
    const auto p1 = to_physical_padded(u1, m);
    const auto p2 = to_physical_padded(u2, m);
    const std::size_t plane = static_cast<std::size_t>(m) * m;
    const double cell = (u1.grid.length / m) * (u1.grid.length / m);
    double acc = 0.0;
    for (std::size_t i = 0; i < plane; ++i) {
        const double a1 = p1[i], b1 = p1[plane + i];
        const double a2 = p2[i], b2 = p2[plane + i];
        const double w1 = std::pow(a1 * a1 + b1 * b1, 0.5 * (r - 1));
        const double w2 = std::pow(a2 * a2 + b2 * b2, 0.5 * (r - 1));
        acc += (w1 * a1 - w2 * a2) * (a1 - a2) + (w1 * b1 - w2 * b2) * (b1 - b2);
    }
    return acc * cell;
}

// ---------------------------------------------------------------------------
// Inequality diagnostics

// Shifted V inner product <<u>>^2 = mu ||u||_V^2 - (mu lambda1 / 2) ||u||_H^2.
// Nonnegative on zero-mean fields; equivalent to the V norm.
inline double shifted_norm_sq(const SpectralField& u, double mu) {
    const double v = norm_v(u), h = norm_h(u);
    return mu * v * v - 0.5 * mu * u.grid.lambda1 * h * h;
}

// Ratio ||u||_{L^4} / (2^{1/4} ||u||_H^{1/2} ||u||_V^{1/2}); at most 1 when
// the explicit-constant inequality holds.
inline double ladyzhenskaya_ratio(const SpectralField& u) {
    const double l4 = norm_lp(u, 4.0);
    const double bound = std::pow(2.0, 0.25) * std::sqrt(norm_h(u)) * std::sqrt(norm_v(u));
    return bound > 0.0 ? l4 / bound : 0.0;
}

// Constant in ||u||_{L^p} <= C ||u||_H^{1-2/p} ||u||_V^{2/p}; the exponent
// structure (not C itself) is the checked content.
inline double gagliardo_nirenberg_constant(const SpectralField& u, double p) {
    const double h = norm_h(u), v = norm_v(u);
    if (h == 0.0 || v == 0.0) return 0.0;
    return norm_lp(u, p) / (std::pow(h, 1.0 - 2.0 / p) * std::pow(v, 2.0 / p));
}

inline double linf_norm(const SpectralField& u) {
    return max_speed(u);
}

// Constant in Agmon's ||u||_Linf <= C ||u||_H^{1/2} ||u||_{H^2}^{1/2}.
inline double agmon_constant(const SpectralField& u) {
    const double h = norm_h(u), h2 = norm_h2(u);
    if (h == 0.0 || h2 == 0.0) return 0.0;
    return linf_norm(u) / (std::sqrt(h) * std::sqrt(h2));
}

} // namespace cbf
