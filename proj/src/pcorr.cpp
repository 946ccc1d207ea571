#include "sdssar/pcorr.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "sdssar/errors.hpp"
#include "sdssar/rng.hpp"

namespace sdssar {

void PCSample::validate() const {
    const std::size_t n = scalars.size();
    if (dim < 1) throw InvalidArgument("PCSample: vector dimension must be >= 1");
    if (n < 3) throw InvalidArgument("PCSample: need at least 3 observations");
    if (vectors.size() != n * dim) throw InvalidArgument("PCSample: vectors do not match n * d");
    for (double v : scalars)
        if (!std::isfinite(v)) throw InvalidArgument("PCSample: non-finite scalar");
    for (double v : vectors)
        if (!std::isfinite(v)) throw InvalidArgument("PCSample: non-finite vector entry");
}

double angle(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) throw InvalidArgument("angle: dimension mismatch");
    if (u.size() == 1) {
        if (u[0] == 0.0 || v[0] == 0.0) return 0.0;
        return (u[0] > 0.0) == (v[0] > 0.0) ? 0.0 : std::numbers::pi;
    }
    double nu = 0.0, nv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    if (nu == 0.0 || nv == 0.0) return 0.0;
    // 2 atan2(|u^ - v^|, |u^ + v^|): unlike acos of the cosine it stays
    // accurate for nearly parallel or antiparallel vectors.
    nu = std::sqrt(nu);
    nv = std::sqrt(nv);
    double dm = 0.0, dp = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double a = u[i] / nu, b = v[i] / nv;
        dm += (a - b) * (a - b);
        dp += (a + b) * (a + b);
    }
    return 2.0 * std::atan2(std::sqrt(dm), std::sqrt(dp));
}

namespace {

/// Double-centred angle matrix B_k (n x n, row-major) for anchor k.
void centred_angles(const PCSample& s, std::size_t k, std::vector<double>& B,
                    std::vector<double>& diff, std::vector<double>& row_mean) {
    const std::size_t n = s.size();
    const std::size_t d = s.dim;
    const auto yk = s.vector(k);
    for (std::size_t i = 0; i < n; ++i) {
        const auto yi = s.vector(i);
        for (std::size_t c = 0; c < d; ++c) diff[i * d + c] = yi[c] - yk[c];
    }
    for (std::size_t i = 0; i < n; ++i) {
        std::span<const double> di(diff.data() + i * d, d);
        B[i * n + i] = 0.0;  // ang(v, v) = 0, including the zero vector
        for (std::size_t j = i + 1; j < n; ++j) {
            const double a = angle(di, std::span<const double>(diff.data() + j * d, d));
            B[i * n + j] = a;
            B[j * n + i] = a;
        }
    }
    double grand = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double r = 0.0;
        for (std::size_t j = 0; j < n; ++j) r += B[i * n + j];
        row_mean[i] = r / static_cast<double>(n);
        grand += r;
    }
    grand /= static_cast<double>(n * n);
    // b is symmetric, so column means equal row means.
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) B[i * n + j] += grand - row_mean[i] - row_mean[j];
}

/// Indicator u_i = I(X_i <= X_k), returned centred.
void centred_indicator(std::span<const double> x, std::size_t k, std::vector<double>& u) {
    const std::size_t n = x.size();
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        u[i] = x[i] <= x[k] ? 1.0 : 0.0;
        m += u[i];
    }
    m /= static_cast<double>(n);
    for (auto& v : u) v -= m;
}

/// -sum_ij A_ijk B_ijk for one anchor: A_ijk = u_i u_j with u centred.
/// The indicator kernel is positive semi-definite while the angle kernel is
/// conditionally negative definite, so the raw sum is never positive; its
/// negation is the dependence measure (equal, up to 2 pi, to using angles on
/// the scalar side as well).
double cross_term(const std::vector<double>& B, const std::vector<double>& u) {
    const std::size_t n = u.size();
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (u[i] == 0.0) continue;
        double r = 0.0;
        const double* row = B.data() + i * n;
        for (std::size_t j = 0; j < n; ++j) r += row[j] * u[j];
        s += u[i] * r;
    }
    return -s;
}

void check_nondegenerate(const PCSample& s) {
    const auto [mn, mx] = std::minmax_element(s.scalars.begin(), s.scalars.end());
    if (*mn == *mx) throw DegenerateInput("projection correlation: all scalars are equal");
    bool all_equal = true;
    for (std::size_t i = 1; i < s.size() && all_equal; ++i) {
        all_equal = std::equal(s.vector(i).begin(), s.vector(i).end(), s.vector(0).begin());
    }
    if (all_equal) throw DegenerateInput("projection correlation: all vectors are equal");
}

PCStatistic finish(double sum_ab, double sum_aa, double sum_bb, std::size_t n) {
    const double n3 = std::pow(static_cast<double>(n), 3.0);
    PCStatistic st;
    st.pcov_sq = std::max(sum_ab / n3, 0.0);
    st.cvar_x_sq = sum_aa / n3;
    st.cvar_y_sq = sum_bb / n3;
    if (!(st.cvar_x_sq > 0.0) || !(st.cvar_y_sq > 0.0)) {
        throw DegenerateInput("projection correlation: zero conditional variance");
    }
    const double ratio = st.pcov_sq / std::sqrt(st.cvar_x_sq * st.cvar_y_sq);
    st.pc = std::clamp(std::sqrt(ratio), 0.0, 1.0);
    return st;
}

}  // namespace

PCStatistic projection_correlation(const PCSample& sample) {
    sample.validate();
    const std::size_t n = sample.size();
    if (n > kMaxProjectionSample) {
        throw InvalidArgument("projection correlation: n = " + std::to_string(n) +
                              " exceeds the cap of " + std::to_string(kMaxProjectionSample) +
                              "; subsample first");
    }
    check_nondegenerate(sample);
    std::vector<double> B(n * n), diff(n * sample.dim), row_mean(n), u(n);
    double sum_ab = 0.0, sum_aa = 0.0, sum_bb = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        centred_angles(sample, k, B, diff, row_mean);
        centred_indicator(sample.scalars, k, u);
        sum_ab += cross_term(B, u);
        double uu = 0.0;
        for (double v : u) uu += v * v;
        sum_aa += uu * uu;
        for (double b : B) sum_bb += b * b;
    }
    return finish(sum_ab, sum_aa, sum_bb, n);
}

IndependenceResult independence_test(const PCSample& sample, double alpha,
                                     std::size_t permutations, std::uint64_t seed) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
    if (permutations < 100) throw InvalidArgument("need at least 100 permutations");
    IndependenceResult res;
    res.statistic = projection_correlation(sample);
    res.permutations = permutations;

    const std::size_t n = sample.size();
    // Angle matrices depend only on the vectors, so they are shared by every
    // re-pairing. Cache them when they fit (n <= 256 -> 128 MiB).
    const bool cache = n <= 256;
    std::vector<double> all_B;
    std::vector<double> B(n * n), diff(n * sample.dim), row_mean(n), u(n);
    if (cache) {
        all_B.resize(n * n * n);
        for (std::size_t k = 0; k < n; ++k) {
            centred_angles(sample, k, B, diff, row_mean);
            std::copy(B.begin(), B.end(), all_B.begin() + static_cast<std::ptrdiff_t>(k * n * n));
        }
    }
    std::vector<double> xs(n);
    auto cross_sum = [&](std::span<const double> x) {
        double s = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            centred_indicator(x, k, u);
            if (cache) {
                std::copy_n(all_B.begin() + static_cast<std::ptrdiff_t>(k * n * n), n * n, B.begin());
            } else {
                centred_angles(sample, k, B, diff, row_mean);
            }
            s += cross_term(B, u);
        }
        return s;
    };

    // Observed value through the same summation path as the permuted ones.
    const double observed = cross_sum(sample.scalars);
    auto rng = make_rng(seed);
    std::size_t at_least = 0;
    std::copy(sample.scalars.begin(), sample.scalars.end(), xs.begin());
    for (std::size_t p = 0; p < permutations; ++p) {
        std::shuffle(xs.begin(), xs.end(), rng);
        if (cross_sum(xs) >= observed) ++at_least;
    }
    res.p_value = static_cast<double>(1 + at_least) / static_cast<double>(1 + permutations);
    res.reject = res.p_value <= alpha;
    return res;
}

PCSample subsample(const PCSample& sample, std::size_t n, std::uint64_t seed) {
    if (n >= sample.size()) return sample;
    std::vector<std::size_t> idx(sample.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    auto rng = make_rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(n);
    std::sort(idx.begin(), idx.end());
    PCSample out;
    out.dim = sample.dim;
    for (auto i : idx) {
        out.scalars.push_back(sample.scalars[i]);
        const auto v = sample.vector(i);
        out.vectors.insert(out.vectors.end(), v.begin(), v.end());
    }
    return out;
}

}  // namespace sdssar
