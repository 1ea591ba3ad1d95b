#pragma once

#include <algorithm>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "cbf/fft.hpp"
#include "cbf/grid.hpp"
#include "cbf/rng.hpp"

namespace cbf {

using Complex = std::complex<double>;

// Zero-mean, divergence-free 2D vector field stored as Fourier coefficients
// u(x) = sum_k u_hat(k) exp(i k.x). Storage is component-major, row-major in
// the frequency indices. The Nyquist row/column (frequency N/2) is kept zero
// by every field-producing operation: that mode has no conjugate partner on
// the lattice and its derivative sign is ambiguous. Fields are value types;
// operations return new fields.
struct SpectralField {
    GridSpec grid;
    std::vector<Complex> coeffs; // size 2*n*n

    SpectralField() = default;
    explicit SpectralField(const GridSpec& g)
        : grid(g), coeffs(static_cast<std::size_t>(2) * g.size(), Complex(0.0, 0.0)) {}

    Complex& at(int c, int i, int j) {
        return coeffs[(static_cast<std::size_t>(c) * grid.n + i) * grid.n + j];
    }
    Complex at(int c, int i, int j) const {
        return coeffs[(static_cast<std::size_t>(c) * grid.n + i) * grid.n + j];
    }

    SpectralField& operator+=(const SpectralField& o) {
        for (std::size_t i = 0; i < coeffs.size(); ++i) coeffs[i] += o.coeffs[i];
        return *this;
    }
    SpectralField& operator-=(const SpectralField& o) {
        for (std::size_t i = 0; i < coeffs.size(); ++i) coeffs[i] -= o.coeffs[i];
        return *this;
    }
    SpectralField& operator*=(double s) {
        for (auto& c : coeffs) c *= s;
        return *this;
    }

    friend SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
    friend SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
    friend SpectralField operator*(SpectralField a, double s) { return a *= s; }
    friend SpectralField operator*(double s, SpectralField a) { return a *= s; }
};

inline void check_same_grid(const SpectralField& a, const SpectralField& b, const char* where) {
    if (!a.grid.same_as(b.grid))
        throw std::invalid_argument(std::string(where) + ": fields live on different grids");
}

// axpy-style accumulation, y += s*x.
inline void add_scaled(SpectralField& y, double s, const SpectralField& x) {
    for (std::size_t i = 0; i < y.coeffs.size(); ++i) y.coeffs[i] += s * x.coeffs[i];
}

// ---------------------------------------------------------------------------
// Transform pair

// Physical samples (component-major, u_c(x_i, y_j) at x = i*L/N) ->
// Fourier coefficients. Faithful DFT of the input: no projection, no
// Nyquist zeroing, so inverse_transform(transform(x)) == x to rounding.
inline SpectralField transform(const GridSpec& grid, const std::vector<double>& samples) {
    const int n = grid.n;
    if (samples.size() != static_cast<std::size_t>(2) * grid.size())
        throw std::invalid_argument("transform: sample array does not match grid");
    SpectralField f(grid);
    std::vector<Complex> buf(static_cast<std::size_t>(grid.size()));
    for (int c = 0; c < 2; ++c) {
        const double* src = samples.data() + static_cast<std::size_t>(c) * grid.size();
        for (int i = 0; i < n * n; ++i) buf[static_cast<std::size_t>(i)] = Complex(src[i], 0.0);
        detail::dft_forward(n, buf.data());
        std::copy(buf.begin(), buf.end(),
                  f.coeffs.begin() + static_cast<std::size_t>(c) * grid.size());
    }
    return f;
}

inline std::vector<double> inverse_transform(const SpectralField& f) {
    const int n = f.grid.n;
    std::vector<double> samples(static_cast<std::size_t>(2) * f.grid.size());
    std::vector<Complex> buf(static_cast<std::size_t>(f.grid.size()));
    for (int c = 0; c < 2; ++c) {
        std::copy(f.coeffs.begin() + static_cast<std::size_t>(c) * f.grid.size(),
                  f.coeffs.begin() + static_cast<std::size_t>(c + 1) * f.grid.size(), buf.begin());
        detail::dft_inverse(n, buf.data());
        double* dst = samples.data() + static_cast<std::size_t>(c) * f.grid.size();
        for (int i = 0; i < n * n; ++i) dst[i] = buf[static_cast<std::size_t>(i)].real();
    }
    return samples;
}

inline SpectralField field_from_function(
    const GridSpec& grid, const std::function<std::pair<double, double>(double, double)>& fn) {
    const int n = grid.n;
    std::vector<double> samples(static_cast<std::size_t>(2) * grid.size());
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            auto [ux, uy] = fn(i * grid.dx(), j * grid.dx());
            samples[static_cast<std::size_t>(i) * n + j] = ux;
            samples[static_cast<std::size_t>(grid.size()) + i * n + j] = uy;
        }
    }
    return transform(grid, samples);
}

// ---------------------------------------------------------------------------
// Padded physical evaluation for nonlinear products

namespace detail {

// One component: zero-pad in k, inverse transform, keep real parts in dst.
inline void component_to_physical(const GridSpec& grid, const Complex* coeffs, int n_pad,
                                  double* dst, std::vector<Complex>& buf) {
    const int n = grid.n;
    buf.assign(static_cast<std::size_t>(n_pad) * n_pad, Complex(0.0, 0.0));
    for (int i = 0; i < n; ++i) {
        if (grid.is_nyquist(i)) continue;
        const int ti = (grid.freq_of(i) + n_pad) % n_pad;
        for (int j = 0; j < n; ++j) {
            if (grid.is_nyquist(j)) continue;
            const int tj = (grid.freq_of(j) + n_pad) % n_pad;
            buf[static_cast<std::size_t>(ti) * n_pad + tj] = coeffs[static_cast<std::size_t>(i) * n + j];
        }
    }
    dft_inverse(n_pad, buf.data());
    for (std::size_t i = 0; i < buf.size(); ++i) dst[i] = buf[i].real();
}

// Two real fields per complex transform: a rides the real part, b the
// imaginary part. Exact by linearity of the DFT.
inline void pair_to_physical(const GridSpec& grid, const Complex* ca, const Complex* cb, int n_pad,
                             double* dst_a, double* dst_b, std::vector<Complex>& buf) {
    const int n = grid.n;
    buf.assign(static_cast<std::size_t>(n_pad) * n_pad, Complex(0.0, 0.0));
    for (int i = 0; i < n; ++i) {
        if (grid.is_nyquist(i)) continue;
        const int ti = (grid.freq_of(i) + n_pad) % n_pad;
        for (int j = 0; j < n; ++j) {
            if (grid.is_nyquist(j)) continue;
            const int tj = (grid.freq_of(j) + n_pad) % n_pad;
            const std::size_t src = static_cast<std::size_t>(i) * n + j;
            const Complex b = cb[src];
            buf[static_cast<std::size_t>(ti) * n_pad + tj] =
                ca[src] + Complex(-b.imag(), b.real());
        }
    }
    dft_inverse(n_pad, buf.data());
    for (std::size_t i = 0; i < buf.size(); ++i) {
        dst_a[i] = buf[i].real();
        dst_b[i] = buf[i].imag();
    }
}

// Forward counterpart: unpack with c_a(k) = (z(k)+conj(z(-k)))/2 and
// c_b(k) = -i (z(k)-conj(z(-k)))/2, truncated to the grid's modes.
inline void pair_from_physical(const GridSpec& grid, int n_pad, const double* src_a,
                               const double* src_b, Complex* out_a, Complex* out_b,
                               std::vector<Complex>& buf) {
    const int n = grid.n;
    const std::size_t plane = static_cast<std::size_t>(n_pad) * n_pad;
    buf.resize(plane);
    for (std::size_t i = 0; i < plane; ++i) buf[i] = Complex(src_a[i], src_b[i]);
    dft_forward(n_pad, buf.data());
    for (int i = 0; i < n; ++i) {
        const bool ny_i = grid.is_nyquist(i);
        const int ti = ny_i ? 0 : (grid.freq_of(i) + n_pad) % n_pad;
        const int tim = ny_i ? 0 : (n_pad - ti) % n_pad;
        for (int j = 0; j < n; ++j) {
            const std::size_t dst = static_cast<std::size_t>(i) * n + j;
            if (ny_i || grid.is_nyquist(j)) {
                out_a[dst] = out_b[dst] = Complex(0.0, 0.0);
                continue;
            }
            const int tj = (grid.freq_of(j) + n_pad) % n_pad;
            const int tjm = (n_pad - tj) % n_pad;
            const Complex z1 = buf[static_cast<std::size_t>(ti) * n_pad + tj];
            const Complex z2 = std::conj(buf[static_cast<std::size_t>(tim) * n_pad + tjm]);
            out_a[dst] = 0.5 * (z1 + z2);
            const Complex d = z1 - z2;
            out_b[dst] = Complex(0.5 * d.imag(), -0.5 * d.real());
        }
    }
}

} // namespace detail

// Evaluate the field on the pad-refined grid (n_pad = pad*n points per dim).
// Component-major real samples. Zero padding in k keeps coefficient values,
// so no rescaling is involved.
inline std::vector<double> to_physical_padded(const SpectralField& f, int n_pad) {
    std::vector<double> out(static_cast<std::size_t>(2) * n_pad * n_pad, 0.0);
    std::vector<Complex> buf;
    const std::size_t plane = static_cast<std::size_t>(n_pad) * n_pad;
    detail::pair_to_physical(f.grid, f.coeffs.data(),
                             f.coeffs.data() + static_cast<std::size_t>(f.grid.size()), n_pad,
                             out.data(), out.data() + plane, buf);
    return out;
}

// Transform padded physical samples back and truncate to the grid's modes.
// Nyquist row/column of the result is zeroed.
inline SpectralField from_physical_padded(const GridSpec& grid, int n_pad,
                                          const std::vector<double>& samples) {
    SpectralField f(grid);
    std::vector<Complex> buf;
    const std::size_t plane = static_cast<std::size_t>(n_pad) * n_pad;
    detail::pair_from_physical(grid, n_pad, samples.data(), samples.data() + plane,
                               f.coeffs.data(),
                               f.coeffs.data() + static_cast<std::size_t>(grid.size()), buf);
    return f;
}

// ---------------------------------------------------------------------------
// Helmholtz-Hodge (Leray) projection

// Closed-form spectral projection P(k) = I - k k^T / |k|^2 applied per mode.
// Zero mode and Nyquist row/column are zeroed. Idempotent and self-adjoint.
inline SpectralField project_divfree(SpectralField f) {
    const int n = f.grid.n;
    for (int i = 0; i < n; ++i) {
        const bool nyq_i = f.grid.is_nyquist(i);
        const double a = f.grid.kx(i);
        for (int j = 0; j < n; ++j) {
            Complex& u = f.at(0, i, j);
            Complex& v = f.at(1, i, j);
            if (nyq_i || f.grid.is_nyquist(j)) {
                u = v = Complex(0.0, 0.0);
                continue;
            }
            const double b = f.grid.ky(j);
            const double k2 = a * a + b * b;
            if (k2 == 0.0) {
                u = v = Complex(0.0, 0.0);
                continue;
            }
            const Complex dot = (a * u + b * v) / k2;
            u -= a * dot;
            v -= b * dot;
        }
    }
    return f;
}

inline double max_divergence(const SpectralField& f) {
    double worst = 0.0;
    const int n = f.grid.n;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const Complex d = f.grid.kx(i) * f.at(0, i, j) + f.grid.ky(j) * f.at(1, i, j);
            worst = std::max(worst, std::abs(d));
        }
    }
    return worst;
}

// Largest violation of coeffs(-k) = conj(coeffs(k)).
inline double max_conjugate_asymmetry(const SpectralField& f) {
    const int n = f.grid.n;
    double worst = 0.0;
    for (int c = 0; c < 2; ++c) {
        for (int i = 0; i < n; ++i) {
            const int im = (n - i) % n;
            for (int j = 0; j < n; ++j) {
                const int jm = (n - j) % n;
                worst = std::max(worst, std::abs(f.at(c, i, j) - std::conj(f.at(c, im, jm))));
            }
        }
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Generators

inline SpectralField taylor_green(const GridSpec& grid, double amplitude = 1.0) {
    return field_from_function(grid, [amplitude](double x, double y) {
        return std::pair<double, double>(amplitude * std::cos(x) * std::sin(y),
                                         -amplitude * std::sin(x) * std::cos(y));
    });
}

// L^2 (H) inner product. The unitary convention ties the spectral sum to the
// physical integral: <u,v> = L^2 sum_k u_hat(k).conj(v_hat(k)).
inline double inner_h(const SpectralField& a, const SpectralField& b) {
    check_same_grid(a, b, "inner_h");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.coeffs.size(); ++i)
        acc += (a.coeffs[i] * std::conj(b.coeffs[i])).real();
    return acc * a.grid.length * a.grid.length;
}

inline double norm_h(const SpectralField& f) {
    double acc = 0.0;
    for (const auto& c : f.coeffs) acc += std::norm(c);
    return f.grid.length * std::sqrt(acc);
}

// Deterministic divergence-free field built from a random stream function
// with power-law modal decay |k|^{-spectrum_decay}, rescaled so the H norm
// equals the requested amplitude exactly.
inline SpectralField random_divfree_field(const GridSpec& grid, std::uint64_t seed,
                                          double spectrum_decay, double amplitude) {
    if (amplitude < 0.0) throw std::invalid_argument("random field: amplitude must be nonnegative");
    SpectralField f(grid);
    if (amplitude == 0.0) return f;

    CounterRng rng(seed);
    const int n = grid.n;
    for (int i = 0; i < n; ++i) {
        if (grid.is_nyquist(i)) continue;
        for (int j = 0; j < n; ++j) {
            if (grid.is_nyquist(j)) continue;
            const int fi = grid.freq_of(i);
            const int fj = grid.freq_of(j);
            if (fi == 0 && fj == 0) continue;
            // Fill one representative per conjugate pair.
            if (fi < 0 || (fi == 0 && fj < 0)) continue;
            const double k2 = grid.k_sq(i, j);
            const double mag = std::pow(k2, -0.5 * spectrum_decay);
            const Complex psi(mag * rng.next_gaussian(), mag * rng.next_gaussian());
            // u = i k^perp psi is divergence-free by construction.
            const Complex ux = Complex(0.0, -grid.ky(j)) * psi;
            const Complex uy = Complex(0.0, grid.kx(i)) * psi;
            const int im = (n - i) % n;
            const int jm = (n - j) % n;
            f.at(0, i, j) = ux;
            f.at(1, i, j) = uy;
            f.at(0, im, jm) = std::conj(ux);
            f.at(1, im, jm) = std::conj(uy);
        }
    }
    const double h = norm_h(f);
    if (h > 0.0) f *= amplitude / h;
    return f;
}

// ---------------------------------------------------------------------------
// Binary field dump ("CBF1")
//
// Layout: magic "CBF1", little-endian u32 N, f64 L, then for every mode in
// row-major frequency-index order both components interleaved as
// re(u1), im(u1), re(u2), im(u2) (f64 each).

inline void write_field(const std::string& path, const SpectralField& f) {
    std::FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw std::runtime_error("cannot open for writing: " + path);
    bool ok = std::fwrite("CBF1", 1, 4, fp) == 4;
    const std::uint32_t n32 = static_cast<std::uint32_t>(f.grid.n);
    ok = ok && std::fwrite(&n32, sizeof n32, 1, fp) == 1;
    ok = ok && std::fwrite(&f.grid.length, sizeof(double), 1, fp) == 1;
    const int n = f.grid.n;
    for (int i = 0; i < n && ok; ++i) {
        for (int j = 0; j < n && ok; ++j) {
            double quad[4] = {f.at(0, i, j).real(), f.at(0, i, j).imag(), f.at(1, i, j).real(),
                              f.at(1, i, j).imag()};
            ok = std::fwrite(quad, sizeof(double), 4, fp) == 4;
        }
    }
    if (std::fclose(fp) != 0) ok = false;
    if (!ok) {
        std::remove(path.c_str());
        throw std::runtime_error("short write while dumping field: " + path);
    }
}

inline SpectralField read_field(const std::string& path, int pad = 2) {
    std::FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) throw std::runtime_error("cannot open field dump: " + path);
    char magic[4];
    std::uint32_t n32 = 0;
    double length = 0.0;
    bool ok = std::fread(magic, 1, 4, fp) == 4 && std::memcmp(magic, "CBF1", 4) == 0;
    ok = ok && std::fread(&n32, sizeof n32, 1, fp) == 1;
    ok = ok && std::fread(&length, sizeof(double), 1, fp) == 1;
    if (!ok) {
        std::fclose(fp);
        throw std::runtime_error("not a CBF1 field dump: " + path);
    }
    GridSpec grid = make_grid(static_cast<int>(n32), length, pad);
    SpectralField f(grid);
    const int n = grid.n;
    for (int i = 0; i < n && ok; ++i) {
        for (int j = 0; j < n && ok; ++j) {
            double quad[4];
            ok = std::fread(quad, sizeof(double), 4, fp) == 4;
            f.at(0, i, j) = Complex(quad[0], quad[1]);
            f.at(1, i, j) = Complex(quad[2], quad[3]);
        }
    }
    std::fclose(fp);
    if (!ok) throw std::runtime_error("truncated CBF1 field dump: " + path);
    return f;
}

} // namespace cbf
