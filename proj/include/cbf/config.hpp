#pragma once

#include <cctype>
#include <map>
#include <set>
#include <sstream>

#include "cbf/domains.hpp"
#include "cbf/lyapunov.hpp"

namespace cbf {

// ---------------------------------------------------------------------------
// Strict key = value config, grouped in named sections. Unknown sections,
// unknown keys, duplicate keys and malformed values are hard errors that
// cite line numbers.

struct ExperimentConfig {
    std::string kind = "simulate";
    ForcingSpec u0; // initial data, same token grammar as forcing

    // simulate
    int snapshot_every = 0;
    // absorbing
    int ic_count = 10;
    double ic_scale_max = 10.0;
    // frechet
    double eps_min = 1e-5;
    double eps_max = 1e-2;
    int eps_count = 4;
    double slope_tol = 0.1;
    ForcingSpec xi0; // tangent direction
    // lyapunov
    int m = 4;
    double t_ortho = 0.1;
    double warmup = 0.0; // transient integrated before the ensemble starts
    std::string tangent_init = "random"; // random | canonical
    // semicontinuity
    std::vector<double> radii;
    double transient = 0.0;
    int snap_count = 4;
    double snap_spacing = 1.0;
    double epsilon_final = 0.0;

    bool operator==(const ExperimentConfig& o) const {
        return kind == o.kind && u0 == o.u0 && snapshot_every == o.snapshot_every &&
               ic_count == o.ic_count && ic_scale_max == o.ic_scale_max && eps_min == o.eps_min &&
               eps_max == o.eps_max && eps_count == o.eps_count && slope_tol == o.slope_tol &&
               xi0 == o.xi0 && m == o.m && t_ortho == o.t_ortho && warmup == o.warmup &&
               tangent_init == o.tangent_init && radii == o.radii && transient == o.transient &&
               snap_count == o.snap_count && snap_spacing == o.snap_spacing &&
               epsilon_final == o.epsilon_final;
    }
};

struct RunConfig {
    int grid_n = 0;
    double grid_length = kTwoPi;
    int grid_pad = 2;
    PhysParams physics;
    StepperConfig stepper;
    ExperimentConfig experiment;
    std::uint64_t seed = 1;
    std::string out_dir = "out";

    GridSpec make_grid_spec() const { return cbf::make_grid(grid_n, grid_length, grid_pad); }

    bool operator==(const RunConfig& o) const {
        return grid_n == o.grid_n && grid_length == o.grid_length && grid_pad == o.grid_pad &&
               physics.mu == o.physics.mu && physics.alpha == o.physics.alpha &&
               physics.beta == o.physics.beta && physics.r == o.physics.r &&
               physics.kappa_tilde == o.physics.kappa_tilde &&
               physics.forcing == o.physics.forcing && stepper.dt == o.stepper.dt &&
               stepper.t_end == o.stepper.t_end && stepper.cfl == o.stepper.cfl &&
               stepper.record_every == o.stepper.record_every &&
               stepper.on_cfl == o.stepper.on_cfl &&
               stepper.fold_r1_damping == o.stepper.fold_r1_damping &&
               stepper.scheme == o.stepper.scheme && experiment == o.experiment &&
               seed == o.seed && out_dir == o.out_dir;
    }
};

namespace detail {

struct ConfigEntry {
    std::string value;
    int line = 0;
    bool consumed = false;
};

struct ConfigSection {
    std::map<std::string, ConfigEntry> entries;
    int line = 0;
};

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

inline ConfigError at_line(int line, const std::string& msg) {
    return ConfigError("config line " + std::to_string(line) + ": " + msg);
}

inline double parse_double(const ConfigEntry& e, const std::string& key) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(e.value, &pos);
        if (pos != e.value.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw at_line(e.line, "key '" + key + "' expects a number, got '" + e.value + "'");
    }
}

inline long long parse_int(const ConfigEntry& e, const std::string& key) {
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(e.value, &pos);
        if (pos != e.value.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw at_line(e.line, "key '" + key + "' expects an integer, got '" + e.value + "'");
    }
}

inline bool parse_bool(const ConfigEntry& e, const std::string& key) {
    if (e.value == "true") return true;
    if (e.value == "false") return false;
    throw at_line(e.line, "key '" + key + "' expects true or false, got '" + e.value + "'");
}

// Field/forcing grammar: "<name> key=value ..." with optional modifiers
// mask_radius= and vdual_norm=.
inline ForcingSpec parse_field_spec(const ConfigEntry& e, const std::string& key) {
    std::istringstream in(e.value);
    std::string name;
    in >> name;
    ForcingSpec spec;
    using Kind = ForcingSpec::Kind;
    if (name == "zero") spec.kind = Kind::zero;
    else if (name == "taylor_green") spec.kind = Kind::taylor_green;
    else if (name == "kolmogorov") spec.kind = Kind::kolmogorov;
    else if (name == "gaussian_bump") spec.kind = Kind::gaussian_bump;
    else if (name == "random") spec.kind = Kind::random;
    else if (name == "file") spec.kind = Kind::file;
    else if (name == "manufactured_tg") spec.kind = Kind::manufactured_tg;
    else
        throw at_line(e.line, "key '" + key + "': unknown field kind '" + name + "'");

    std::string tok;
    while (in >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos)
            throw at_line(e.line, "key '" + key + "': expected param=value, got '" + tok + "'");
        const std::string pk = tok.substr(0, eq);
        const std::string pv = tok.substr(eq + 1);
        ConfigEntry pe{pv, e.line, false};
        if (pk == "amplitude") spec.amplitude = parse_double(pe, key + "." + pk);
        else if (pk == "sigma") spec.sigma = parse_double(pe, key + "." + pk);
        else if (pk == "mode") spec.mode = static_cast<int>(parse_int(pe, key + "." + pk));
        else if (pk == "seed") spec.seed = static_cast<std::uint64_t>(parse_int(pe, key + "." + pk));
        else if (pk == "decay") spec.decay = parse_double(pe, key + "." + pk);
        else if (pk == "path") spec.path = pv;
        else if (pk == "mask_radius") spec.mask_radius = parse_double(pe, key + "." + pk);
        else if (pk == "vdual_norm") spec.vdual_norm = parse_double(pe, key + "." + pk);
        else
            throw at_line(e.line, "key '" + key + "': unknown field param '" + pk + "'");
    }
    return spec;
}

inline std::vector<double> parse_double_list(const ConfigEntry& e, const std::string& key) {
    std::vector<double> out;
    std::string item;
    std::istringstream in(e.value);
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        ConfigEntry pe{item, e.line, false};
        out.push_back(parse_double(pe, key));
    }
    if (out.empty()) throw at_line(e.line, "key '" + key + "' expects a comma-separated list");
    return out;
}

inline std::map<std::string, ConfigSection> tokenize_config(const std::string& text) {
    std::map<std::string, ConfigSection> sections;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    std::string current;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        const std::string line = trim(raw);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw at_line(line_no, "unterminated section header");
            current = trim(line.substr(1, line.size() - 2));
            if (current.empty()) throw at_line(line_no, "empty section name");
            if (sections.count(current))
                throw at_line(line_no, "section [" + current + "] already declared at line " +
                                           std::to_string(sections[current].line));
            sections[current].line = line_no;
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw at_line(line_no, "expected key = value");
        if (current.empty()) throw at_line(line_no, "key outside any section");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw at_line(line_no, "empty key");
        auto& sec = sections[current];
        auto it = sec.entries.find(key);
        if (it != sec.entries.end())
            throw at_line(line_no, "duplicate key '" + key + "' in [" + current +
                                       "], first set at line " + std::to_string(it->second.line));
        sec.entries[key] = ConfigEntry{value, line_no, false};
    }
    return sections;
}

class SectionReader {
  public:
    SectionReader(std::map<std::string, ConfigSection>& sections, const std::string& name,
                  bool required)
        : name_(name) {
        auto it = sections.find(name);
        if (it == sections.end()) {
            if (required) throw ConfigError("config: missing required section [" + name + "]");
            sec_ = nullptr;
        } else {
            sec_ = &it->second;
        }
    }

    bool present() const { return sec_ != nullptr; }

    const ConfigEntry* get(const std::string& key) {
        if (!sec_) return nullptr;
        auto it = sec_->entries.find(key);
        if (it == sec_->entries.end()) return nullptr;
        it->second.consumed = true;
        return &it->second;
    }

    const ConfigEntry& require(const std::string& key) {
        const ConfigEntry* e = get(key);
        if (!e)
            throw ConfigError("config: section [" + name_ + "] is missing required key '" + key +
                              "'");
        return *e;
    }

    void reject_unconsumed() const {
        if (!sec_) return;
        for (const auto& [key, entry] : sec_->entries)
            if (!entry.consumed)
                throw at_line(entry.line, "unknown key '" + key + "' in section [" + name_ + "]");
    }

  private:
    std::string name_;
    ConfigSection* sec_;
};

} // namespace detail

inline RunConfig parse_config(const std::string& text) {
    auto sections = detail::tokenize_config(text);
    static const std::set<std::string> known = {"grid", "physics", "stepper", "experiment", "run"};
    for (const auto& [name, sec] : sections)
        if (!known.count(name))
            throw detail::at_line(sec.line, "unknown section [" + name + "]");

    RunConfig cfg;

    detail::SectionReader grid(sections, "grid", true);
    {
        const auto& n = grid.require("n");
        cfg.grid_n = static_cast<int>(detail::parse_int(n, "n"));
        if (cfg.grid_n < 8 || cfg.grid_n % 2 != 0)
            throw detail::at_line(n.line, "grid n must be even and at least 8");
        if (const auto* e = grid.get("length")) {
            cfg.grid_length = detail::parse_double(*e, "length");
            if (!(cfg.grid_length > 0.0)) throw detail::at_line(e->line, "length must be positive");
        }
        if (const auto* e = grid.get("pad")) {
            cfg.grid_pad = static_cast<int>(detail::parse_int(*e, "pad"));
            if (cfg.grid_pad < 1) throw detail::at_line(e->line, "pad must be at least 1");
        }
        grid.reject_unconsumed();
    }

    detail::SectionReader phys(sections, "physics", true);
    {
        cfg.physics.mu = detail::parse_double(phys.require("mu"), "mu");
        if (const auto* e = phys.get("alpha")) cfg.physics.alpha = detail::parse_double(*e, "alpha");
        if (const auto* e = phys.get("beta")) cfg.physics.beta = detail::parse_double(*e, "beta");
        if (const auto* e = phys.get("r")) {
            cfg.physics.r = static_cast<int>(detail::parse_int(*e, "r"));
            if (cfg.physics.r < 1 || cfg.physics.r > 3)
                throw detail::at_line(e->line, "absorption exponent r must be in {1,2,3}, got " +
                                                   e->value);
        }
        if (const auto* e = phys.get("kappa_tilde"))
            cfg.physics.kappa_tilde = detail::parse_double(*e, "kappa_tilde");
        if (const auto* e = phys.get("forcing"))
            cfg.physics.forcing = detail::parse_field_spec(*e, "forcing");
        phys.reject_unconsumed();
        cfg.physics.validate();
    }

    detail::SectionReader step(sections, "stepper", true);
    {
        cfg.stepper.dt = detail::parse_double(step.require("dt"), "dt");
        cfg.stepper.t_end = detail::parse_double(step.require("t_end"), "t_end");
        if (const auto* e = step.get("cfl")) cfg.stepper.cfl = detail::parse_double(*e, "cfl");
        if (const auto* e = step.get("record_every"))
            cfg.stepper.record_every = static_cast<int>(detail::parse_int(*e, "record_every"));
        if (const auto* e = step.get("on_cfl")) {
            if (e->value == "halve") cfg.stepper.on_cfl = CflPolicy::halve;
            else if (e->value == "error") cfg.stepper.on_cfl = CflPolicy::error;
            else
                throw detail::at_line(e->line, "on_cfl must be halve or error");
        }
        if (const auto* e = step.get("fold_r1_damping"))
            cfg.stepper.fold_r1_damping = detail::parse_bool(*e, "fold_r1_damping");
        if (const auto* e = step.get("scheme")) cfg.stepper.scheme = e->value;
        step.reject_unconsumed();
        cfg.stepper.validate();
    }

    detail::SectionReader exp(sections, "experiment", true);
    {
        auto& ec = cfg.experiment;
        ec.kind = exp.require("kind").value;
        static const std::set<std::string> kinds = {"simulate",  "energy-audit", "absorbing",
                                                    "frechet",   "lyapunov",     "semicontinuity",
                                                    "verify"};
        if (!kinds.count(ec.kind))
            throw ConfigError("config: unknown experiment kind '" + ec.kind + "'");
        if (const auto* e = exp.get("u0")) ec.u0 = detail::parse_field_spec(*e, "u0");

        if (ec.kind == "simulate") {
            if (const auto* e = exp.get("snapshot_every"))
                ec.snapshot_every = static_cast<int>(detail::parse_int(*e, "snapshot_every"));
        } else if (ec.kind == "absorbing") {
            if (const auto* e = exp.get("ic_count"))
                ec.ic_count = static_cast<int>(detail::parse_int(*e, "ic_count"));
            if (const auto* e = exp.get("ic_scale_max"))
                ec.ic_scale_max = detail::parse_double(*e, "ic_scale_max");
        } else if (ec.kind == "frechet") {
            if (const auto* e = exp.get("eps_min")) ec.eps_min = detail::parse_double(*e, "eps_min");
            if (const auto* e = exp.get("eps_max")) ec.eps_max = detail::parse_double(*e, "eps_max");
            if (const auto* e = exp.get("eps_count"))
                ec.eps_count = static_cast<int>(detail::parse_int(*e, "eps_count"));
            if (const auto* e = exp.get("slope_tol"))
                ec.slope_tol = detail::parse_double(*e, "slope_tol");
            if (const auto* e = exp.get("xi0")) ec.xi0 = detail::parse_field_spec(*e, "xi0");
        } else if (ec.kind == "lyapunov") {
            ec.m = static_cast<int>(detail::parse_int(exp.require("m"), "m"));
            if (ec.m < 1 || ec.m > 64)
                throw ConfigError("config: lyapunov ensemble size m must be in [1,64]");
            if (const auto* e = exp.get("t_ortho")) ec.t_ortho = detail::parse_double(*e, "t_ortho");
            if (const auto* e = exp.get("warmup")) ec.warmup = detail::parse_double(*e, "warmup");
            if (const auto* e = exp.get("tangent_init")) {
                if (e->value != "random" && e->value != "canonical")
                    throw detail::at_line(e->line, "tangent_init must be random or canonical");
                ec.tangent_init = e->value;
            }
        } else if (ec.kind == "semicontinuity") {
            ec.radii = detail::parse_double_list(exp.require("radii"), "radii");
            ec.transient = detail::parse_double(exp.require("transient"), "transient");
            ec.epsilon_final = detail::parse_double(exp.require("epsilon_final"), "epsilon_final");
            if (const auto* e = exp.get("snap_count"))
                ec.snap_count = static_cast<int>(detail::parse_int(*e, "snap_count"));
            if (const auto* e = exp.get("snap_spacing"))
                ec.snap_spacing = detail::parse_double(*e, "snap_spacing");
        }
        exp.reject_unconsumed();
    }

    detail::SectionReader run(sections, "run", false);
    if (run.present()) {
        if (const auto* e = run.get("seed"))
            cfg.seed = static_cast<std::uint64_t>(detail::parse_int(*e, "seed"));
        if (const auto* e = run.get("out")) cfg.out_dir = e->value;
        run.reject_unconsumed();
    }

    return cfg;
}

// ---------------------------------------------------------------------------
// Canonical rendering; parse(render_config(c)) == c.

namespace detail {

inline std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
}

inline std::string render_field_spec(const ForcingSpec& s) {
    using Kind = ForcingSpec::Kind;
    std::string out;
    switch (s.kind) {
        case Kind::zero: out = "zero"; break;
        case Kind::taylor_green: out = "taylor_green amplitude=" + fmt_double(s.amplitude); break;
        case Kind::kolmogorov:
            out = "kolmogorov amplitude=" + fmt_double(s.amplitude) +
                  " mode=" + std::to_string(s.mode);
            break;
        case Kind::gaussian_bump:
            out = "gaussian_bump amplitude=" + fmt_double(s.amplitude) +
                  " sigma=" + fmt_double(s.sigma);
            break;
        case Kind::random:
            out = "random amplitude=" + fmt_double(s.amplitude) + " seed=" + std::to_string(s.seed) +
                  " decay=" + fmt_double(s.decay);
            break;
        case Kind::file: out = "file path=" + s.path; break;
        case Kind::manufactured_tg:
            out = "manufactured_tg amplitude=" + fmt_double(s.amplitude);
            break;
        case Kind::explicit_field:
            throw std::logic_error("explicit field payloads cannot be rendered to config text");
    }
    if (s.mask_radius) out += " mask_radius=" + fmt_double(*s.mask_radius);
    if (s.vdual_norm) out += " vdual_norm=" + fmt_double(*s.vdual_norm);
    return out;
}

} // namespace detail

inline std::string render_config(const RunConfig& c) {
    std::ostringstream out;
    out << "[grid]\n";
    out << "n = " << c.grid_n << "\n";
    out << "length = " << detail::fmt_double(c.grid_length) << "\n";
    out << "pad = " << c.grid_pad << "\n\n";

    out << "[physics]\n";
    out << "mu = " << detail::fmt_double(c.physics.mu) << "\n";
    out << "alpha = " << detail::fmt_double(c.physics.alpha) << "\n";
    out << "beta = " << detail::fmt_double(c.physics.beta) << "\n";
    out << "r = " << c.physics.r << "\n";
    out << "kappa_tilde = " << detail::fmt_double(c.physics.kappa_tilde) << "\n";
    out << "forcing = " << detail::render_field_spec(c.physics.forcing) << "\n\n";

    out << "[stepper]\n";
    out << "dt = " << detail::fmt_double(c.stepper.dt) << "\n";
    out << "t_end = " << detail::fmt_double(c.stepper.t_end) << "\n";
    out << "cfl = " << detail::fmt_double(c.stepper.cfl) << "\n";
    out << "record_every = " << c.stepper.record_every << "\n";
    out << "on_cfl = " << (c.stepper.on_cfl == CflPolicy::halve ? "halve" : "error") << "\n";
    out << "fold_r1_damping = " << (c.stepper.fold_r1_damping ? "true" : "false") << "\n";
    out << "scheme = " << c.stepper.scheme << "\n\n";

    out << "[experiment]\n";
    out << "kind = " << c.experiment.kind << "\n";
    out << "u0 = " << detail::render_field_spec(c.experiment.u0) << "\n";
    const auto& ec = c.experiment;
    if (ec.kind == "simulate") {
        out << "snapshot_every = " << ec.snapshot_every << "\n";
    } else if (ec.kind == "absorbing") {
        out << "ic_count = " << ec.ic_count << "\n";
        out << "ic_scale_max = " << detail::fmt_double(ec.ic_scale_max) << "\n";
    } else if (ec.kind == "frechet") {
        out << "eps_min = " << detail::fmt_double(ec.eps_min) << "\n";
        out << "eps_max = " << detail::fmt_double(ec.eps_max) << "\n";
        out << "eps_count = " << ec.eps_count << "\n";
        out << "slope_tol = " << detail::fmt_double(ec.slope_tol) << "\n";
        out << "xi0 = " << detail::render_field_spec(ec.xi0) << "\n";
    } else if (ec.kind == "lyapunov") {
        out << "m = " << ec.m << "\n";
        out << "t_ortho = " << detail::fmt_double(ec.t_ortho) << "\n";
        out << "warmup = " << detail::fmt_double(ec.warmup) << "\n";
        out << "tangent_init = " << ec.tangent_init << "\n";
    } else if (ec.kind == "semicontinuity") {
        out << "radii = ";
        for (std::size_t i = 0; i < ec.radii.size(); ++i)
            out << (i ? "," : "") << detail::fmt_double(ec.radii[i]);
        out << "\n";
        out << "transient = " << detail::fmt_double(ec.transient) << "\n";
        out << "epsilon_final = " << detail::fmt_double(ec.epsilon_final) << "\n";
        out << "snap_count = " << ec.snap_count << "\n";
        out << "snap_spacing = " << detail::fmt_double(ec.snap_spacing) << "\n";
    }
    out << "\n[run]\n";
    out << "seed = " << c.seed << "\n";
    out << "out = " << c.out_dir << "\n";
    return out.str();
}

} // namespace cbf
