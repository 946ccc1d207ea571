#pragma once
// Independent reference implementations used only by the tests. They follow
// the textbook definitions directly and share no code with the library.

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "sdssar/image.hpp"

namespace oracle {

using cd = std::complex<double>;

/// O((WH)^2) 2-D DFT, forward (sign -1) or inverse (sign +1, unnormalised).
inline std::vector<cd> dft2(const std::vector<cd>& in, std::size_t w, std::size_t h, int sign) {
    std::vector<cd> out(w * h);
    for (std::size_t v = 0; v < h; ++v)
        for (std::size_t u = 0; u < w; ++u) {
            cd acc = 0;
            for (std::size_t r = 0; r < h; ++r)
                for (std::size_t c = 0; c < w; ++c) {
                    const double ph = sign * 2.0 * std::numbers::pi *
                                      (static_cast<double>(u * c) / w + static_cast<double>(v * r) / h);
                    acc += in[r * w + c] * cd(std::cos(ph), std::sin(ph));
                }
            out[v * w + u] = acc;
        }
    return out;
}

/// Signed bin index of DFT coefficient u on an axis of n samples.
inline double signed_bin(std::size_t u, std::size_t n) {
    return u <= n / 2 ? static_cast<double>(u) : static_cast<double>(u) - static_cast<double>(n);
}

/// Radial frequency on a grid rescaled so both axes span max(W, H) bins.
inline double radial(std::size_t u, std::size_t v, std::size_t w, std::size_t h) {
    const double m = static_cast<double>(std::max(w, h));
    const double fu = signed_bin(u, w) * m / static_cast<double>(w);
    const double fv = signed_bin(v, h) * m / static_cast<double>(h);
    return std::sqrt(fu * fu + fv * fv);
}

inline double butterworth(double f, double fc, double a, double b, int order) {
    return f <= fc ? a / (b + std::pow(f / fc, 2.0 * order)) : 0.0;
}

/// Low-pass filter via the naive DFT, no clamping.
inline sdssar::Raster lowpass(const sdssar::Raster& img, double fc, double a, double b, int order) {
    const std::size_t w = img.width, h = img.height;
    std::vector<cd> x(img.values.begin(), img.values.end());
    auto spec = dft2(x, w, h, -1);
    for (std::size_t v = 0; v < h; ++v)
        for (std::size_t u = 0; u < w; ++u) spec[v * w + u] *= butterworth(radial(u, v, w, h), fc, a, b, order);
    const auto back = dft2(spec, w, h, +1);
    sdssar::Raster out(w, h);
    for (std::size_t i = 0; i < out.size(); ++i) out.values[i] = back[i].real() / static_cast<double>(w * h);
    return out;
}

/// Angle between u and v, arccos of the cosine similarity evaluated in the
/// cancellation-free half-angle form.
inline double angle(const std::vector<double>& u, const std::vector<double>& v) {
    double nu = 0, nv = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    if (nu == 0 || nv == 0) return 0.0;
    std::vector<double> a(u.size()), b(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        a[i] = u[i] / std::sqrt(nu);
        b[i] = v[i] / std::sqrt(nv);
    }
    double diff = 0, sum = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        diff += (a[i] - b[i]) * (a[i] - b[i]);
        sum += (a[i] + b[i]) * (a[i] + b[i]);
    }
    return 2.0 * std::atan2(std::sqrt(diff), std::sqrt(sum));
}

struct PC {
    double pcov_sq, cvar_x_sq, cvar_y_sq, pc;
};

/// Exhaustive evaluation: builds every a_ijk, b_ijk, the per-anchor means,
/// the double-centred A_ijk, B_ijk and the triple sums. The covariance sum
/// is negated (indicator kernel vs angle kernel, see the ledger).
inline PC projection_correlation(const std::vector<double>& x, const std::vector<std::vector<double>>& y) {
    const std::size_t n = x.size();
    const double nd = static_cast<double>(n);
    std::vector<double> a(n * n * n), b(n * n * n);
    auto at = [n](std::size_t i, std::size_t j, std::size_t k) { return (k * n + i) * n + j; };
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                a[at(i, j, k)] = (x[i] <= x[k] ? 1.0 : 0.0) * (x[j] <= x[k] ? 1.0 : 0.0);
                std::vector<double> di(y[i].size()), dj(y[j].size());
                for (std::size_t c = 0; c < di.size(); ++c) {
                    di[c] = y[i][c] - y[k][c];
                    dj[c] = y[j][c] - y[k][c];
                }
                b[at(i, j, k)] = i == j ? 0.0 : angle(di, dj);
            }
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t k = 0; k < n; ++k) {
        std::vector<double> ai(n, 0), aj(n, 0), bi(n, 0), bj(n, 0);
        double aa = 0, bb = 0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                ai[i] += a[at(i, j, k)] / nd;
                aj[j] += a[at(i, j, k)] / nd;
                bi[i] += b[at(i, j, k)] / nd;
                bj[j] += b[at(i, j, k)] / nd;
                aa += a[at(i, j, k)] / (nd * nd);
                bb += b[at(i, j, k)] / (nd * nd);
            }
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                const double A = a[at(i, j, k)] - ai[i] - aj[j] + aa;
                const double B = b[at(i, j, k)] - bi[i] - bj[j] + bb;
                sab += A * B;
                saa += A * A;
                sbb += B * B;
            }
    }
    const double n3 = nd * nd * nd;
    PC r{std::max(0.0, -sab / n3), saa / n3, sbb / n3, 0.0};
    r.pc = std::sqrt(r.pcov_sq / std::sqrt(r.cvar_x_sq * r.cvar_y_sq));
    return r;
}

/// Reflect-101 padding index.
inline long reflect(long i, long n) {
    if (n == 1) return 0;
    while (i < 0 || i >= n) {
        if (i < 0) i = -i;
        if (i >= n) i = 2 * (n - 1) - i;
    }
    return i;
}

/// Direct dilated "same" convolution, channel-major tensors [c][r][col].
inline std::vector<double> conv(const std::vector<double>& in, std::size_t cin, std::size_t h, std::size_t w,
                                const double* weights, const double* bias, std::size_t cout, std::size_t k,
                                std::size_t dil) {
    std::vector<double> out(cout * h * w, 0.0);
    const long half = static_cast<long>(k / 2);
    for (std::size_t o = 0; o < cout; ++o)
        for (std::size_t r = 0; r < h; ++r)
            for (std::size_t c = 0; c < w; ++c) {
                double acc = bias[o];
                for (std::size_t i = 0; i < cin; ++i)
                    for (std::size_t ky = 0; ky < k; ++ky)
                        for (std::size_t kx = 0; kx < k; ++kx) {
                            const long rr = reflect(static_cast<long>(r) + (static_cast<long>(ky) - half) * static_cast<long>(dil), static_cast<long>(h));
                            const long cc = reflect(static_cast<long>(c) + (static_cast<long>(kx) - half) * static_cast<long>(dil), static_cast<long>(w));
                            acc += weights[((o * cin + i) * k + ky) * k + kx] * in[(i * h + rr) * w + cc];
                        }
                out[(o * h + r) * w + c] = acc;
            }
    return out;
}

/// Regularised lower incomplete gamma P(a, x) by its power series.
inline double gamma_p(double a, double x) {
    if (x <= 0) return 0.0;
    double term = 1.0 / a, sum = term;
    for (int n = 1; n < 1000; ++n) {
        term *= x / (a + n);
        sum += term;
        if (term < sum * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace oracle
