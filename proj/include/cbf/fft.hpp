#pragma once

#include <complex>
#include <map>
#include <mutex>
#include <vector>

#include <fftw3.h>

namespace cbf::detail {

// Process-wide cache of in-place 2D c2c plans. FFTW_ESTIMATE keeps planning
// deterministic across runs; FFTW_UNALIGNED lets one plan serve any buffer.
// Plan execution through fftw_execute_dft is thread safe, creation is not.
class FftEngine {
  public:
    static FftEngine& instance() {
        static FftEngine e;
        return e;
    }

    // Unnormalized transform, sign -1 (forward) or +1 (inverse).
    void execute(int n, std::complex<double>* data, int sign) {
        fftw_plan p = plan_for(n, sign);
        auto* d = reinterpret_cast<fftw_complex*>(data);
        fftw_execute_dft(p, d, d);
    }

    FftEngine(const FftEngine&) = delete;
    FftEngine& operator=(const FftEngine&) = delete;

  private:
    FftEngine() = default;
    ~FftEngine() {
        for (auto& [key, p] : plans_) fftw_destroy_plan(p);
    }

    fftw_plan plan_for(int n, int sign) {
        std::lock_guard<std::mutex> lock(mu_);
        auto key = std::pair<int, int>(n, sign);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        std::vector<std::complex<double>> scratch(static_cast<std::size_t>(n) * n);
        auto* d = reinterpret_cast<fftw_complex*>(scratch.data());
        fftw_plan p = fftw_plan_dft_2d(n, n, d, d, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
        plans_.emplace(key, p);
        return p;
    }

    std::mutex mu_;
    std::map<std::pair<int, int>, fftw_plan> plans_;
};

// In-place forward DFT with 1/n^2 normalization: samples -> coefficients of
// u(x) = sum_k c(k) exp(i k.x).
inline void dft_forward(int n, std::complex<double>* data) {
    FftEngine::instance().execute(n, data, FFTW_FORWARD);
    const double s = 1.0 / (static_cast<double>(n) * n);
    const std::size_t total = static_cast<std::size_t>(n) * n;
    for (std::size_t i = 0; i < total; ++i) data[i] *= s;
}

// In-place inverse: coefficients -> samples, no scaling.
inline void dft_inverse(int n, std::complex<double>* data) {
    FftEngine::instance().execute(n, data, FFTW_BACKWARD);
}

} // namespace cbf::detail
