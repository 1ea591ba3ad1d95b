#pragma once

#include <array>
#include <map>
#include <memory>
#include <mutex>
#include <optional>

#include "cbf/forcing.hpp"

namespace cbf {

enum class CflPolicy { error, halve };

struct StepperConfig {
    double dt = 1e-3;
    double t_end = 1.0;
    double cfl = 0.5;
    int record_every = 1;
    CflPolicy on_cfl = CflPolicy::halve;
    // With r=1 the damping is linear and joins the integrating factor, which
    // makes the pure-decay dynamics exact. Disable to keep beta*u explicit.
    bool fold_r1_damping = true;
    std::string scheme = "ifrk3";

    void validate() const {
        if (!(dt > 0.0)) throw ConfigError("stepper: dt must be positive");
        if (!(t_end >= 0.0)) throw ConfigError("stepper: t_end must be nonnegative");
        if (!(cfl > 0.0 && cfl <= 1.0)) throw ConfigError("stepper: cfl must be in (0,1]");
        if (record_every < 1) throw ConfigError("stepper: record_every must be at least 1");
        if (scheme != "ifrk3") throw ConfigError("stepper: unknown scheme '" + scheme + "'");
    }
};

// Integrating-factor Runge-Kutta step of the projected system
//   du/dt = -(mu A + alpha + [beta]) u + N(u),
//   N(u)  = -B(u,u) - beta_explicit C(u) + f.
// The diagonal part is integrated exactly; the third-order Kutta stages
// (c = 0, 1/2, 1) keep every exponential factor decaying. The tangent step
// evaluates the linearized right-hand side at the nonlinear stage values,
// so the tangent propagator is the exact Jacobian action of the step map.
class Stepper {
  public:
    struct StageDiag {
        double h_sq = 0.0;   // ||u||_H^2
        double v_sq = 0.0;   // ||u||_V^2
        double lr_pow = 0.0; // ||u||_{L^{r+1}}^{r+1}
        double f_pair = 0.0; // <f,u>
        double max_speed = 0.0;

        double dissipation(const PhysParams& p) const {
            return p.mu * v_sq + p.alpha * h_sq + p.beta * lr_pow;
        }
    };

    struct StepStages {
        double h = 0.0;
        std::array<detail::PhysicalStage, 3> phys; // at tau = 0, h/2, h
    };

    struct Advance {
        double dt = 0.0;
        StageDiag start;
        std::vector<StepStages> substeps;
    };

    Stepper(const GridSpec& grid, const PhysParams& params, const StepperConfig& cfg)
        : grid_(grid), params_(params), cfg_(cfg) {
        params_.validate();
        cfg_.validate();
        f_ = realize_forcing(params_.forcing, grid_, params_);
        f_vdual_ = norm_vdual(f_);
        f_is_zero_ = norm_h(f_) == 0.0;
        fold_beta_ = (params_.r == 1 && cfg_.fold_r1_damping);
        beta_explicit_ = fold_beta_ ? 0.0 : params_.beta;
    }

    const GridSpec& grid() const { return grid_; }
    const PhysParams& params() const { return params_; }
    const StepperConfig& config() const { return cfg_; }
    const SpectralField& forcing_field() const { return f_; }
    double forcing_vdual() const { return f_vdual_; }

    // Integrating-factor multiplier mu |k|^2 + alpha (+ beta when folded).
    double linear_multiplier(int i, int j) const {
        return params_.mu * grid_.k_sq(i, j) + params_.alpha + (fold_beta_ ? params_.beta : 0.0);
    }

    double cfl_limit(double max_speed) const {
        return cfg_.cfl * grid_.dx() / std::max(1.0, max_speed);
    }

    StageDiag diagnostics_of(const SpectralField& u) const {
        return diag_from(u, detail::make_physical_stage(u, /*with_grad=*/false));
    }

    // One outer step of size dt, CFL-subdivided per policy.
    SpectralField advance(const SpectralField& u, double dt, Advance* out = nullptr) const {
        int nsub = 1;
        while (true) {
            if (out) {
                out->dt = dt;
                out->substeps.clear();
            }
            SpectralField w = u;
            const double h = dt / nsub;
            bool violated = false;
            for (int s = 0; s < nsub; ++s) {
                StepStages st;
                StageDiag d;
                SpectralField next = single_step(w, h, st, d);
                if (s == 0 && out) out->start = d;
                if (h > cfl_limit(d.max_speed)) {
                    if (cfg_.on_cfl == CflPolicy::error)
                        throw std::runtime_error("CFL violation: dt=" + std::to_string(h) +
                                                 " exceeds limit " +
                                                 std::to_string(cfl_limit(d.max_speed)));
                    violated = true;
                    break;
                }
                if (out) out->substeps.push_back(std::move(st));
                w = std::move(next);
            }
            if (!violated) return w;
            nsub *= 2;
            if (nsub > (1 << 16)) throw std::runtime_error("CFL halving did not stabilize the step");
        }
    }

    // Co-integrated tangent step through the same substeps. When requested,
    // emits F'(u) xi at the interval start (the full discrete linearized
    // generator, reconstructed from the stage evaluation).
    SpectralField advance_tangent(const SpectralField& xi, const Advance& adv,
                                  SpectralField* generator_at_start = nullptr) const {
        SpectralField z = xi;
        bool first = true;
        for (const auto& st : adv.substeps) {
            z = tangent_single_step(z, st, first ? generator_at_start : nullptr);
            first = false;
        }
        return z;
    }

    // <phi, F'(u) xi> given the precomputed generator field.
    static double generator_pairing(const SpectralField& phi, const SpectralField& gen) {
        return inner_h(phi, gen);
    }

    detail::PhysicalStage physical_stage(const SpectralField& u) const {
        return detail::make_physical_stage(u);
    }

    // Full discrete linearized generator F'(u) xi at a frozen state.
    SpectralField linearized_generator(const SpectralField& xi,
                                       const detail::PhysicalStage& us) const {
        SpectralField gen = tangent_explicit_rhs(xi, us);
        for (int i = 0; i < grid_.n; ++i)
            for (int j = 0; j < grid_.n; ++j) {
                const double d = linear_multiplier(i, j);
                gen.at(0, i, j) -= d * xi.at(0, i, j);
                gen.at(1, i, j) -= d * xi.at(1, i, j);
            }
        return gen;
    }

  private:
    static double lr_power(const detail::PhysicalStage& s, int r, double length) {
        const std::size_t plane = s.plane();
        const double cell = (length / s.n_pad) * (length / s.n_pad);
        double acc = 0.0;
        const double e = 0.5 * (r + 1);
        for (std::size_t i = 0; i < plane; ++i) {
            const double q = s.u[i] * s.u[i] + s.u[plane + i] * s.u[plane + i];
            acc += std::pow(q, e);
        }
        return acc * cell;
    }

    StageDiag diag_from(const SpectralField& u, const detail::PhysicalStage& s) const {
        StageDiag d;
        const double h = norm_h(u), v = norm_v(u);
        d.h_sq = h * h;
        d.v_sq = v * v;
        d.lr_pow = lr_power(s, params_.r, grid_.length);
        d.f_pair = f_is_zero_ ? 0.0 : inner_h(f_, u);
        d.max_speed = s.max_speed;
        return d;
    }

    // Tangent ensembles step concurrently, so the cache takes a lock. Map
    // nodes are stable under insertion, which keeps returned references valid.
    const std::vector<double>& exp_table(double s) const {
        std::lock_guard<std::mutex> lock(exp_mu_);
        auto it = exp_cache_.find(s);
        if (it != exp_cache_.end()) return it->second;
        std::vector<double> t(static_cast<std::size_t>(grid_.size()));
        for (int i = 0; i < grid_.n; ++i)
            for (int j = 0; j < grid_.n; ++j)
                t[static_cast<std::size_t>(i) * grid_.n + j] = std::exp(-s * linear_multiplier(i, j));
        return exp_cache_.emplace(s, std::move(t)).first->second;
    }

    static void apply_table(SpectralField& u, const std::vector<double>& t) {
        const std::size_t plane = t.size();
        for (int c = 0; c < 2; ++c)
            for (std::size_t i = 0; i < plane; ++i) u.coeffs[c * plane + i] *= t[i];
    }

    // N(u) = -P[(u.grad)u + beta_explicit |u|^{r-1}u] + f, one transform pair.
    SpectralField explicit_rhs(const detail::PhysicalStage& s) const {
        const std::size_t plane = s.plane();
        std::vector<double> w(2 * plane);
        const bool with_c = beta_explicit_ != 0.0;
        const int r = params_.r;
        for (std::size_t i = 0; i < plane; ++i) {
            const double a = s.u[i], b = s.u[plane + i];
            double wx = a * s.grad[i] + b * s.grad[plane + i];
            double wy = a * s.grad[2 * plane + i] + b * s.grad[3 * plane + i];
            if (with_c) {
                const double q = a * a + b * b;
                const double c = (r == 1) ? 1.0 : ((r == 3) ? q : std::sqrt(q));
                wx += beta_explicit_ * c * a;
                wy += beta_explicit_ * c * b;
            }
            w[i] = -wx;
            w[plane + i] = -wy;
        }
        SpectralField rhs = project_divfree(from_physical_padded(grid_, s.n_pad, w));
        if (!f_is_zero_) rhs += f_;
        return rhs;
    }

    // Linearized explicit part at a frozen stage:
    // -P[(xi.grad)u + (u.grad)xi + beta_explicit C'(u) xi].
    SpectralField tangent_explicit_rhs(const SpectralField& xi,
                                       const detail::PhysicalStage& us) const {
        const auto xs = detail::make_physical_stage(xi, /*with_grad=*/true);
        const std::size_t plane = us.plane();
        std::vector<double> w(2 * plane);
        const bool with_c = beta_explicit_ != 0.0;
        const int r = params_.r;
        for (std::size_t i = 0; i < plane; ++i) {
            const double a = us.u[i], b = us.u[plane + i];
            const double x = xs.u[i], y = xs.u[plane + i];
            double wx = x * us.grad[i] + y * us.grad[plane + i] + a * xs.grad[i] + b * xs.grad[plane + i];
            double wy = x * us.grad[2 * plane + i] + y * us.grad[3 * plane + i] +
                        a * xs.grad[2 * plane + i] + b * xs.grad[3 * plane + i];
            if (with_c) {
                double cx, cy;
                if (r == 1) {
                    cx = x;
                    cy = y;
                } else if (r == 3) {
                    const double q = a * a + b * b;
                    const double dot2 = 2.0 * (a * x + b * y);
                    cx = q * x + dot2 * a;
                    cy = q * y + dot2 * b;
                } else {
                    const double sp = std::sqrt(a * a + b * b);
                    cx = sp * x;
                    cy = sp * y;
                    if (sp >= 1e-14) {
                        const double dot = (a * x + b * y) / sp;
                        cx += dot * a;
                        cy += dot * b;
                    }
                }
                wx += beta_explicit_ * cx;
                wy += beta_explicit_ * cy;
            }
            w[i] = -wx;
            w[plane + i] = -wy;
        }
        return project_divfree(from_physical_padded(grid_, us.n_pad, w));
    }

    SpectralField single_step(const SpectralField& u, double h, StepStages& st,
                              StageDiag& d0) const {
        st.h = h;
        st.phys[0] = detail::make_physical_stage(u);
        d0 = diag_from(u, st.phys[0]);

        const auto& eh = exp_table(h);
        const auto& eh2 = exp_table(0.5 * h);

        const SpectralField g1 = explicit_rhs(st.phys[0]);

        SpectralField ua = u;
        add_scaled(ua, 0.5 * h, g1);
        apply_table(ua, eh2);
        st.phys[1] = detail::make_physical_stage(ua);
        const SpectralField g2 = explicit_rhs(st.phys[1]);

        SpectralField ub = u;
        add_scaled(ub, -h, g1);
        apply_table(ub, eh);
        SpectralField tmp = g2;
        apply_table(tmp, eh2);
        add_scaled(ub, 2.0 * h, tmp);
        st.phys[2] = detail::make_physical_stage(ub);
        const SpectralField g3 = explicit_rhs(st.phys[2]);

        SpectralField un = u;
        add_scaled(un, h / 6.0, g1);
        apply_table(un, eh);
        add_scaled(un, 2.0 * h / 3.0, tmp); // tmp = E(h/2) g2
        add_scaled(un, h / 6.0, g3);
        return un;
    }

    SpectralField tangent_single_step(const SpectralField& xi, const StepStages& st,
                                      SpectralField* generator_out) const {
        const double h = st.h;
        const auto& eh = exp_table(h);
        const auto& eh2 = exp_table(0.5 * h);

        const SpectralField g1 = tangent_explicit_rhs(xi, st.phys[0]);
        if (generator_out) {
            // F' xi = -(mu A + alpha + folded beta) xi + explicit part.
            SpectralField gen = g1;
            for (int i = 0; i < grid_.n; ++i)
                for (int j = 0; j < grid_.n; ++j) {
                    const double d = linear_multiplier(i, j);
                    gen.at(0, i, j) -= d * xi.at(0, i, j);
                    gen.at(1, i, j) -= d * xi.at(1, i, j);
                }
            *generator_out = std::move(gen);
        }

        SpectralField xa = xi;
        add_scaled(xa, 0.5 * h, g1);
        apply_table(xa, eh2);
        const SpectralField g2 = tangent_explicit_rhs(xa, st.phys[1]);

        SpectralField xb = xi;
        add_scaled(xb, -h, g1);
        apply_table(xb, eh);
        SpectralField tmp = g2;
        apply_table(tmp, eh2);
        add_scaled(xb, 2.0 * h, tmp);
        const SpectralField g3 = tangent_explicit_rhs(xb, st.phys[2]);

        SpectralField xn = xi;
        add_scaled(xn, h / 6.0, g1);
        apply_table(xn, eh);
        add_scaled(xn, 2.0 * h / 3.0, tmp);
        add_scaled(xn, h / 6.0, g3);
        return xn;
    }

    GridSpec grid_;
    PhysParams params_;
    StepperConfig cfg_;
    SpectralField f_;
    double f_vdual_ = 0.0;
    bool f_is_zero_ = true;
    bool fold_beta_ = false;
    double beta_explicit_ = 0.0;
    mutable std::map<double, std::vector<double>> exp_cache_;
    mutable std::mutex exp_mu_;
};

// ---------------------------------------------------------------------------
// Trajectory record

struct RunRecord {
    std::vector<double> times;
    std::vector<double> h_norm;       // ||u||_H
    std::vector<double> v_norm;       // ||u||_V
    std::vector<double> lr_norm;      // ||u||_{L^{r+1}}
    std::vector<double> energy_residual; // per recorded interval
    std::vector<char> gronwall_ok;
    std::vector<std::pair<double, SpectralField>> snapshots;

    double dt = 0.0;
    double mu = 0.0, alpha = 0.0, beta = 0.0;
    int r = 1;
    double lambda1 = 1.0;
    double f_vdual = 0.0;
    double u0_h = 0.0;
    double max_step_residual = 0.0;

    std::size_t rows() const { return times.size(); }

    bool gronwall_all_ok() const {
        for (char c : gronwall_ok)
            if (!c) return false;
        return true;
    }

    void validate() const {
        const std::size_t n = times.size();
        if (h_norm.size() != n || v_norm.size() != n || lr_norm.size() != n ||
            energy_residual.size() != n || gronwall_ok.size() != n)
            throw std::logic_error("RunRecord: series length mismatch");
        for (std::size_t i = 1; i < n; ++i)
            if (!(times[i] > times[i - 1])) throw std::logic_error("RunRecord: times not increasing");
    }
};

inline double gronwall_envelope(double t, double u0_h_sq, double f_vdual, double mu,
                                double lambda1) {
    return u0_h_sq * std::exp(-mu * lambda1 * t) + f_vdual * f_vdual / (mu * mu * lambda1);
}

inline constexpr double kGronwallSlack = 1e-6;

struct RunOptions {
    int snapshot_every = 0;   // outer steps between snapshots; 0 disables
    double snapshot_start = 0.0;
};

// Fixed-cadence integration to t_end, recording norms at record_every steps
// and accounting the discrete energy balance per step: residual_n =
// Delta(E)/... specifically 0.5*d(||u||_H^2) + trapezoid of the dissipation
// minus the forcing power over the step.
inline RunRecord run_simulation(const SpectralField& u0, const Stepper& stepper,
                                const RunOptions& opt = {}, SpectralField* final_state = nullptr) {
    const StepperConfig& cfg = stepper.config();
    const PhysParams& p = stepper.params();
    const GridSpec& grid = stepper.grid();

    RunRecord rec;
    rec.dt = cfg.dt;
    rec.mu = p.mu;
    rec.alpha = p.alpha;
    rec.beta = p.beta;
    rec.r = p.r;
    rec.lambda1 = grid.lambda1;
    rec.f_vdual = stepper.forcing_vdual();
    rec.u0_h = norm_h(u0);

    const long n_steps = std::lround(cfg.t_end / cfg.dt);
    const double u0_h_sq = rec.u0_h * rec.u0_h;

    auto append_row = [&](double t, const Stepper::StageDiag& d, double residual) {
        rec.times.push_back(t);
        rec.h_norm.push_back(std::sqrt(std::max(0.0, d.h_sq)));
        rec.v_norm.push_back(std::sqrt(std::max(0.0, d.v_sq)));
        rec.lr_norm.push_back(std::pow(std::max(0.0, d.lr_pow), 1.0 / (p.r + 1)));
        rec.energy_residual.push_back(residual);
        const double bound = gronwall_envelope(t, u0_h_sq, rec.f_vdual, p.mu, grid.lambda1);
        rec.gronwall_ok.push_back(d.h_sq <= bound + kGronwallSlack ? 1 : 0);
    };

    // Each advance reports diagnostics at its own start, which are also the
    // previous step's endpoint; rows and residuals are emitted one step late
    // so nothing is computed twice.
    SpectralField u = u0;
    Stepper::StageDiag d_prev;
    double interval_residual = 0.0;

    auto settle_step = [&](long ended_step, const Stepper::StageDiag& d_end) {
        const double step_residual =
            0.5 * (d_end.h_sq - d_prev.h_sq) +
            0.5 * cfg.dt * (d_prev.dissipation(p) + d_end.dissipation(p)) -
            0.5 * cfg.dt * (d_prev.f_pair + d_end.f_pair);
        interval_residual += step_residual;
        rec.max_step_residual = std::max(rec.max_step_residual, std::abs(step_residual));
        if (ended_step % cfg.record_every == 0 || ended_step == n_steps) {
            append_row(static_cast<double>(ended_step) * cfg.dt, d_end, interval_residual);
            interval_residual = 0.0;
        }
    };

    for (long s = 1; s <= n_steps; ++s) {
        Stepper::Advance adv;
        SpectralField next = stepper.advance(u, cfg.dt, &adv);
        if (s == 1)
            append_row(0.0, adv.start, 0.0);
        else
            settle_step(s - 1, adv.start);
        d_prev = adv.start;
        u = std::move(next);
        const double t = static_cast<double>(s) * cfg.dt;
        if (opt.snapshot_every > 0 && s % opt.snapshot_every == 0 && t >= opt.snapshot_start)
            rec.snapshots.emplace_back(t, u);
    }
    if (n_steps >= 1) settle_step(n_steps, stepper.diagnostics_of(u));
    else
        append_row(0.0, stepper.diagnostics_of(u), 0.0);
    if (final_state) *final_state = std::move(u);
    rec.validate();
    return rec;
}

} // namespace cbf
