#include "fft.hpp"

#include <numbers>
#include <stdexcept>

namespace ticksync::detail {

namespace {

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

// Roots of unity for the largest stage, reused with a stride by the smaller
// ones: twiddles[k] = exp(-i * pi * k / half).
std::vector<std::complex<double>> make_twiddles(std::size_t half) {
    std::vector<std::complex<double>> w(half);
    const double step = -std::numbers::pi / static_cast<double>(half);
    for (std::size_t k = 0; k < half; ++k)
        w[k] = std::polar(1.0, step * static_cast<double>(k));
    return w;
}

} // namespace

void fft(std::vector<std::complex<double>>& a, bool inverse) {
    const std::size_t n = a.size();
    if (n == 0 || (n & (n - 1)) != 0) throw std::invalid_argument("fft size must be a power of two");
    if (n == 1) return;

    // bit-reversal permutation
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }

    static thread_local std::vector<std::complex<double>> twiddles;
    static thread_local std::size_t twiddle_half = 0;
    if (twiddle_half != n / 2) {
        twiddles = make_twiddles(n / 2);
        twiddle_half = n / 2;
    }

    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len >> 1;
        const std::size_t stride = n / len;
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t k = 0; k < half; ++k) {
                std::complex<double> w = twiddles[k * stride];
                if (inverse) w = std::conj(w);
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + half] * w;
                a[i + k] = u + v;
                a[i + k + half] = u - v;
            }
        }
    }

    if (inverse) {
        const double inv_n = 1.0 / static_cast<double>(n);
        for (auto& x : a) x *= inv_n;
    }
}

std::vector<double> convolve_real(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.empty() || b.empty()) return {};
    const std::size_t out_len = a.size() + b.size() - 1;
    const std::size_t n = next_pow2(out_len);

    // Pack both signals into one complex FFT: z = a + i*b, so
    // A[k] = (Z[k] + conj(Z[n-k]))/2 and B[k] = (Z[k] - conj(Z[n-k]))/(2i),
    // and the product spectrum A*B never has to be formed explicitly per
    // operand: C[k] = (Z[k]^2 - conj(Z[n-k])^2) / (4i).
    std::vector<std::complex<double>> z(n, {0.0, 0.0});
    for (std::size_t i = 0; i < a.size(); ++i) z[i].real(a[i]);
    for (std::size_t i = 0; i < b.size(); ++i) z[i].imag(b[i]);
    fft(z, false);

    std::vector<std::complex<double>> c(n);
    const std::complex<double> quarter_i(0.0, -0.25); // 1/(4i)
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t kr = (n - k) & (n - 1);
        const std::complex<double> zk = z[k];
        const std::complex<double> zr = std::conj(z[kr]);
        c[k] = (zk * zk - zr * zr) * quarter_i;
    }
    fft(c, true);

    std::vector<double> out(out_len);
    for (std::size_t i = 0; i < out_len; ++i) out[i] = c[i].real();
    return out;
}

} // namespace ticksync::detail
