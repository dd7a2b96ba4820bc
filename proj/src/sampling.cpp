#include "qmcbasket/sampling.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "qmcbasket/sobol_directions.hpp"

namespace qmcbasket {

namespace {

void require(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

// Stream labels for derive_seed so distinct uses never collide.
constexpr std::uint64_t kStreamSobol = 1;
constexpr std::uint64_t kStreamLhs = 2;
constexpr std::uint64_t kStreamMc = 3;
constexpr std::uint64_t kStreamLhsPerm = 4;
constexpr std::uint64_t kStreamLhsOffset = 5;
constexpr std::uint64_t kStreamScrambleDim = 6;

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

struct SplitMix64 {
    std::uint64_t state;
    std::uint64_t next() {
        std::uint64_t z = (state += kGolden);
        return mix64(z);
    }
    std::uint32_t next32() { return static_cast<std::uint32_t>(next() >> 32); }
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    // unbiased-enough bounded draw (Lemire multiply-shift)
    std::uint64_t bounded(std::uint64_t range) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next()) * range) >> 64);
    }
};

void fill_lhs_column(Eigen::Ref<Matrix> u, int col, int n, std::uint64_t perm_seed,
                     std::uint64_t offset_seed) {
    std::vector<std::uint32_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0u);
    SplitMix64 pg{perm_seed};
    for (int i = n - 1; i > 0; --i)
        std::swap(perm[i], perm[static_cast<std::size_t>(pg.bounded(i + 1))]);
    SplitMix64 og{offset_seed};
    for (int r = 0; r < n; ++r) u(r, col) = (perm[r] + og.uniform01()) / n;
}

}  // namespace

const char* to_string(SamplerKind kind) {
    switch (kind) {
        case SamplerKind::Mc: return "MC";
        case SamplerKind::Lhs: return "LHS";
        case SamplerKind::RqmcHybrid: return "RQMC";
    }
    throw std::invalid_argument("to_string: unknown sampler kind");
}

SamplerKind sampler_kind_from_string(const std::string& name) {
    std::string up = name;
    std::transform(up.begin(), up.end(), up.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::toupper(ch)); });
    if (up == "MC" || up == "PRNG") return SamplerKind::Mc;
    if (up == "LHS") return SamplerKind::Lhs;
    if (up == "RQMC" || up == "RQMC_HYBRID" || up == "RQMC-HYBRID") return SamplerKind::RqmcHybrid;
    throw std::invalid_argument("unknown sampler kind: " + name);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t replication, std::uint64_t group,
                          std::uint64_t column) {
    std::uint64_t h = master;
    h = mix64(h + kGolden * (replication + 1));
    h = mix64(h + kGolden * (group + 1));
    h = mix64(h + kGolden * (column + 1));
    return h;
}

SobolSequence::SobolSequence(int dims) : dims_(dims) {
    require(dims >= 1 && dims <= detail::kSobolMaxDim, "SobolSequence: dimension out of range");
    directions_.resize(dims);
    shift_.assign(dims, 0u);
    for (int dim = 0; dim < dims; ++dim) {
        std::array<std::uint32_t, 32> m{};
        if (dim == 0) {
            m.fill(1u);  // van der Corput
        } else {
            const detail::SobolDimInit& init = detail::kSobolInit[dim - 1];
            const int s = static_cast<int>(init.degree);
            const std::uint32_t a = init.poly_coeffs;
            for (int k = 0; k < s; ++k) m[k] = init.m[k];
            for (int k = s; k < 32; ++k) {
                std::uint32_t mk = m[k - s] ^ (m[k - s] << s);
                for (int i = 1; i <= s - 1; ++i)
                    if ((a >> (s - 1 - i)) & 1u) mk ^= m[k - i] << i;
                m[k] = mk;
            }
        }
        for (int k = 0; k < 32; ++k) directions_[dim][k] = m[k] << (31 - k);
    }
}

SobolSequence::SobolSequence(int dims, std::uint64_t seed) : SobolSequence(dims) {
    scrambled_ = true;
    for (int dim = 0; dim < dims_; ++dim) {
        SplitMix64 rng{derive_seed(seed, 0, kStreamScrambleDim, static_cast<std::uint64_t>(dim))};
        // Random lower triangular bit matrix with unit diagonal, acting on
        // the digit vector most significant bit first.  Row j of the matrix
        // is kept as a 32-bit mask; output digit j is the parity of
        // mask_j & input.  Applying it to the direction integers once is
        // equivalent to scrambling every point, because points are XOR
        // combinations of direction integers.
        std::array<std::uint32_t, 32> mask;
        for (int j = 0; j < 32; ++j) {
            const int bitpos = 31 - j;
            std::uint32_t row = 1u << bitpos;
            if (j > 0) row |= rng.next32() & (~0u << (bitpos + 1));
            mask[j] = row;
        }
        for (int k = 0; k < 32; ++k) {
            const std::uint32_t v = directions_[dim][k];
            std::uint32_t y = 0;
            for (int j = 0; j < 32; ++j)
                y |= static_cast<std::uint32_t>(std::popcount(mask[j] & v) & 1) << (31 - j);
            directions_[dim][k] = y;
        }
        shift_[dim] = rng.next32();
    }
}

Matrix SobolSequence::points(std::uint32_t first, int count) const {
    require(count >= 0, "SobolSequence::points: negative count");
    Matrix out(count, dims_);
    std::vector<std::uint32_t> x(dims_, 0u);
    const std::uint32_t gray = first ^ (first >> 1);
    for (int k = 0; k < 32; ++k)
        if ((gray >> k) & 1u)
            for (int dim = 0; dim < dims_; ++dim) x[dim] ^= directions_[dim][k];
    for (int r = 0; r < count; ++r) {
        for (int dim = 0; dim < dims_; ++dim)
            out(r, dim) = static_cast<double>(x[dim] ^ shift_[dim]) * 0x1.0p-32;
        if (r + 1 < count) {
            const std::uint32_t next = first + static_cast<std::uint32_t>(r) + 1u;
            const int k = std::countr_zero(next);
            for (int dim = 0; dim < dims_; ++dim) x[dim] ^= directions_[dim][k];
        }
    }
    return out;
}

PointSet sobol_points(int n, int d, std::uint64_t seed, bool scramble) {
    require(n >= 1, "sobol_points: need at least one point");
    require(d >= 1 && d <= detail::kSobolMaxDim, "sobol_points: dimension out of range");
    PointSet p;
    p.spec = SamplerSpec{SamplerKind::RqmcHybrid, n, d, seed, d};
    if (scramble) {
        SobolSequence seq(d, seed);
        p.u = seq.points(0, n);
    } else {
        SobolSequence seq(d);
        p.u = seq.points(1, n);
    }
    return p;
}

PointSet lhs_points(int n, int d, std::uint64_t seed) {
    require(n >= 1 && d >= 1, "lhs_points: need positive n and d");
    PointSet p;
    p.spec = SamplerSpec{SamplerKind::Lhs, n, d, seed, 0};
    p.u.resize(n, d);
    for (int c = 0; c < d; ++c)
        fill_lhs_column(p.u, c, n, derive_seed(seed, 0, kStreamLhsPerm, c),
                        derive_seed(seed, 0, kStreamLhsOffset, c));
    return p;
}

PointSet hybrid_points(const SamplerSpec& spec, int replication) {
    require(spec.n >= 1 && spec.d >= 1, "hybrid_points: need positive n and d");
    require(spec.sobol_dims >= 0, "hybrid_points: negative sobol_dims");
    const int s = std::min({spec.sobol_dims, spec.d, detail::kSobolMaxDim});
    PointSet p;
    p.spec = spec;
    p.replication = replication;
    p.u.resize(spec.n, spec.d);
    if (s > 0) {
        SobolSequence seq(s, derive_seed(spec.seed, replication, kStreamSobol, 0));
        p.u.leftCols(s) = seq.points(0, spec.n);
    }
    if (spec.d > s) {
        const std::uint64_t lhs_seed = derive_seed(spec.seed, replication, kStreamLhs, 0);
        for (int c = 0; c < spec.d - s; ++c)
            fill_lhs_column(p.u, s + c, spec.n, derive_seed(lhs_seed, 0, kStreamLhsPerm, c),
                            derive_seed(lhs_seed, 0, kStreamLhsOffset, c));
    }
    return p;
}

PointSet generate_points(const SamplerSpec& spec, int replication) {
    require(spec.n >= 1 && spec.d >= 1, "generate_points: need positive n and d");
    switch (spec.kind) {
        case SamplerKind::RqmcHybrid: return hybrid_points(spec, replication);
        case SamplerKind::Lhs: {
            PointSet p = lhs_points(spec.n, spec.d, derive_seed(spec.seed, replication, kStreamLhs, 0));
            p.spec = spec;
            p.replication = replication;
            return p;
        }
        case SamplerKind::Mc: {
            PointSet p;
            p.spec = spec;
            p.replication = replication;
            p.u.resize(spec.n, spec.d);
            const std::uint64_t mc_seed = derive_seed(spec.seed, replication, kStreamMc, 0);
            for (int c = 0; c < spec.d; ++c) {
                SplitMix64 rng{derive_seed(mc_seed, 0, 0, c)};
                for (int r = 0; r < spec.n; ++r) p.u(r, c) = rng.uniform01();
            }
            return p;
        }
    }
    throw std::invalid_argument("generate_points: unknown sampler kind");
}

double inverse_normal_cdf(double u) {
    // Acklam's rational approximation, three branches.
    static constexpr double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                    -2.759285104469687e+02, 1.383577518672690e+02,
                                    -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                    -1.556989798598866e+02, 6.680131188771972e+01,
                                    -1.328068155288572e+01};
    static constexpr double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                    -2.400758277161838e+00, -2.549732539343734e+00,
                                    4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                    2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double plow = 0.02425;
    u = std::clamp(u, 1e-16, 1.0 - 1e-16);
    if (u < plow) {
        const double q = std::sqrt(-2.0 * std::log(u));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (u > 1.0 - plow) {
        const double q = std::sqrt(-2.0 * std::log(1.0 - u));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double q = u - 0.5, r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

double inverse_normal_cdf_refined(double u) {
    u = std::clamp(u, 1e-16, 1.0 - 1e-16);
    double x = inverse_normal_cdf(u);
    // One Halley step against the exact CDF.
    const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - u;
    const double t = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    return x - t / (1.0 + 0.5 * x * t);
}

Matrix to_normal(const PointSet& points) {
    return points.u.unaryExpr([](double u) { return inverse_normal_cdf(u); });
}

}  // namespace qmcbasket
