#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "cbf/operators.hpp"

namespace cbf {

// Time-independent forcing described by name and parameters, realizable on
// any grid. An optional disc mask (sharp indicator of radius mask_radius
// about the cell center) and an optional V' rescaling are applied after the
// base field is built. `explicit_field` carries an in-memory field and is
// produced programmatically (manufactured equilibria), not by the parser.
struct ForcingSpec {
    enum class Kind { zero, taylor_green, kolmogorov, gaussian_bump, random, file, manufactured_tg, explicit_field };

    Kind kind = Kind::zero;
    double amplitude = 1.0;
    double sigma = 0.5;          // gaussian_bump width
    int mode = 1;                // kolmogorov wavenumber
    std::uint64_t seed = 1;      // random
    double decay = 2.0;          // random spectral decay
    std::string path;            // file
    std::optional<double> mask_radius;
    std::optional<double> vdual_norm; // rescale so ||f||_{V'} matches
    std::optional<SpectralField> field; // explicit_field payload

    static ForcingSpec zero_forcing() { return ForcingSpec{}; }

    bool operator==(const ForcingSpec& o) const {
        return kind == o.kind && amplitude == o.amplitude && sigma == o.sigma && mode == o.mode &&
               seed == o.seed && decay == o.decay && path == o.path &&
               mask_radius == o.mask_radius && vdual_norm == o.vdual_norm;
    }
};

struct PhysParams {
    double mu = 1.0;
    double alpha = 0.0;
    double beta = 0.0;
    int r = 1;
    ForcingSpec forcing;
    double kappa_tilde = 1.0;

    void validate() const {
        if (!(mu > 0.0)) throw ConfigError("physics: mu must be positive");
        if (alpha < 0.0) throw ConfigError("physics: alpha must be nonnegative");
        if (beta < 0.0) throw ConfigError("physics: beta must be nonnegative");
        if (r < 1 || r > 3)
            throw ConfigError("physics: absorption exponent r must be in {1,2,3}, got " +
                              std::to_string(r));
        if (!(kappa_tilde > 0.0)) throw ConfigError("physics: kappa_tilde must be positive");
    }
};

// Sharp disc indicator about the cell center, sampled pointwise.
inline SpectralField apply_disc_mask(const SpectralField& f, double radius) {
    const int m = f.grid.padded_n();
    auto phys = to_physical_padded(f, m);
    const std::size_t plane = static_cast<std::size_t>(m) * m;
    const double h = f.grid.length / m;
    const double cx = 0.5 * f.grid.length, cy = cx;
    const double r2 = radius * radius;
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            const double dx = i * h - cx, dy = j * h - cy;
            if (dx * dx + dy * dy >= r2) { // radius 0 masks everything
                const std::size_t idx = static_cast<std::size_t>(i) * m + j;
                phys[idx] = 0.0;
                phys[plane + idx] = 0.0;
            }
        }
    }
    return project_divfree(from_physical_padded(f.grid, m, phys));
}

namespace detail {

inline SpectralField realize_base_forcing(const ForcingSpec& spec, const GridSpec& grid,
                                          const PhysParams& params);

} // namespace detail

inline SpectralField manufactured_equilibrium(const GridSpec& grid, const PhysParams& params) {
    return taylor_green(grid, params.forcing.amplitude);
}

// Forcing that makes u* a steady state of the discrete system:
// f = mu A u* + B(u*,u*) + alpha u* + beta C(u*), all through the same
// discrete operators the stepper uses.
inline SpectralField steady_state_forcing(const SpectralField& u_star, const PhysParams& params) {
    SpectralField f = apply_stokes(u_star);
    f *= params.mu;
    add_scaled(f, 1.0, bilinear(u_star, u_star));
    add_scaled(f, params.alpha, project_divfree(u_star));
    if (params.beta != 0.0) add_scaled(f, params.beta, damping(u_star, params.r));
    return f;
}

inline ForcingSpec manufactured_forcing(const SpectralField& u_star, const PhysParams& params) {
    ForcingSpec spec;
    spec.kind = ForcingSpec::Kind::explicit_field;
    spec.field = steady_state_forcing(u_star, params);
    return spec;
}

namespace detail {

inline SpectralField realize_base_forcing(const ForcingSpec& spec, const GridSpec& grid,
                                          const PhysParams& params) {
    using Kind = ForcingSpec::Kind;
    switch (spec.kind) {
        case Kind::zero: return SpectralField(grid);
        case Kind::taylor_green: return taylor_green(grid, spec.amplitude);
        case Kind::kolmogorov: {
            const double a = spec.amplitude;
            const int k = spec.mode;
            const double ks = grid.k_scale;
            return project_divfree(field_from_function(grid, [a, k, ks](double, double y) {
                return std::pair<double, double>(a * std::sin(k * ks * y), 0.0);
            }));
        }
        case Kind::gaussian_bump: {
            const double a = spec.amplitude, s2 = spec.sigma * spec.sigma;
            const double c = 0.5 * grid.length;
            return project_divfree(field_from_function(grid, [a, s2, c](double x, double y) {
                const double dx = x - c, dy = y - c;
                const double g = a * std::exp(-0.5 * (dx * dx + dy * dy) / s2);
                // curl of the Gaussian stream function
                return std::pair<double, double>(g * dy / s2, -g * dx / s2);
            }));
        }
        case Kind::random:
            return random_divfree_field(grid, spec.seed, spec.decay, spec.amplitude);
        case Kind::file: return project_divfree(read_field(spec.path, grid.pad));
        case Kind::manufactured_tg: {
            PhysParams p = params;
            p.forcing = spec;
            return steady_state_forcing(manufactured_equilibrium(grid, p), p);
        }
        case Kind::explicit_field:
            if (!spec.field) throw std::logic_error("explicit forcing without payload");
            if (!spec.field->grid.same_as(grid))
                throw std::invalid_argument("explicit forcing realized on a different grid");
            return *spec.field;
    }
    throw std::logic_error("realize_base_forcing: unreachable");
}

} // namespace detail

inline SpectralField realize_forcing(const ForcingSpec& spec, const GridSpec& grid,
                                     const PhysParams& params) {
    SpectralField f = detail::realize_base_forcing(spec, grid, params);
    if (spec.mask_radius) f = apply_disc_mask(f, *spec.mask_radius);
    f = project_divfree(std::move(f));
    if (spec.vdual_norm) {
        const double cur = norm_vdual(f);
        if (cur > 0.0) f *= (*spec.vdual_norm / cur);
    }
    return f;
}

// Generalized Grashof number G = ||f||_{V'} / (mu^2 lambda1^{1/2}).
inline double grashof_number(double f_vdual, double mu, double lambda1) {
    return f_vdual / (mu * mu * std::sqrt(lambda1));
}

} // namespace cbf
