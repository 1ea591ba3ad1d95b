#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace cbf {

inline constexpr double kPi = 3.141592653589793238462643;
inline constexpr double kTwoPi = 2.0 * kPi;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Periodic N x N grid on [0,L)^2 for zero-mean vector fields.
// Integer frequencies run over {-N/2+1, ..., N/2}; physical wavenumbers are
// scaled by 2*pi/L. The smallest nonzero |k|^2 is the Poincare constant.
struct GridSpec {
    int n = 0;
    double length = kTwoPi;
    int pad = 2;

    double k_scale = 1.0;   // 2*pi/L
    double lambda1 = 1.0;   // min over k != 0 of |k|^2
    std::vector<int> freq;  // index -> integer frequency

    double dx() const { return length / n; }
    int padded_n() const { return pad * n; }
    int size() const { return n * n; }

    // Integer frequency of row/column index i.
    int freq_of(int i) const { return freq[static_cast<std::size_t>(i)]; }

    double kx(int i) const { return k_scale * freq_of(i); }
    double ky(int j) const { return k_scale * freq_of(j); }
    double k_sq(int i, int j) const {
        double a = kx(i), b = ky(j);
        return a * a + b * b;
    }
    bool is_nyquist(int i) const { return 2 * freq_of(i) == n; }

    bool same_as(const GridSpec& o) const {
        return n == o.n && length == o.length && pad == o.pad;
    }
};

inline GridSpec make_grid(int n, double length = kTwoPi, int pad = 2) {
    if (n < 8 || n % 2 != 0)
        throw ConfigError("grid: N must be even and at least 8, got " + std::to_string(n));
    if (!(length > 0.0))
        throw ConfigError("grid: period length must be positive");
    if (pad < 1)
        throw ConfigError("grid: pad factor must be at least 1");

    GridSpec g;
    g.n = n;
    g.length = length;
    g.pad = pad;
    g.k_scale = kTwoPi / length;
    g.freq.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        g.freq[static_cast<std::size_t>(i)] = (i <= n / 2) ? i : i - n;

    double lam = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            double k2 = g.k_sq(i, j);
            if (k2 > 0.0 && (lam == 0.0 || k2 < lam)) lam = k2;
        }
    }
    g.lambda1 = lam;
    return g;
}

} // namespace cbf
