#ifndef QMCBASKET_SAMPLING_HPP
#define QMCBASKET_SAMPLING_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "qmcbasket/block_linalg.hpp"

namespace qmcbasket {

enum class SamplerKind { Mc, Lhs, RqmcHybrid };

const char* to_string(SamplerKind kind);
SamplerKind sampler_kind_from_string(const std::string& name);

/// What to generate: n points in dimension d, seeded deterministically.
/// For RqmcHybrid the leading min(sobol_dims, d) coordinates come from a
/// scrambled Sobol sequence and the rest from Latin hypercube sampling.
struct SamplerSpec {
    SamplerKind kind = SamplerKind::RqmcHybrid;
    int n = 8192;
    int d = 0;
    std::uint64_t seed = 0;
    int sobol_dims = 50;
};

/// n x d uniforms in [0,1), tagged with how they were made.
struct PointSet {
    Matrix u;
    SamplerSpec spec;
    int replication = 0;
};

/// Counter-based seed derivation (splitmix64 finaliser chain).  Every
/// (replication, group, column) triple maps to an independent stream, so
/// replications never share randomness.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t replication, std::uint64_t group,
                          std::uint64_t column);

/// Sobol low-discrepancy sequence, up to 50 dimensions, 32 output bits.
/// Dimension 1 is the van der Corput sequence; higher dimensions use
/// published primitive polynomials and initial direction numbers chosen for
/// good two-dimensional projections.  Optionally scrambled with Matousek's
/// random linear scramble plus a digital shift, which preserves the dyadic
/// equidistribution of the sequence.
class SobolSequence {
  public:
    /// Unscrambled sequence.
    explicit SobolSequence(int dims);
    /// Scrambled: per-dimension lower triangular bit matrices and shifts
    /// derived from the seed.
    SobolSequence(int dims, std::uint64_t seed);

    int dims() const { return dims_; }
    bool scrambled() const { return scrambled_; }

    /// Points with sequence indices first .. first+count-1 (Gray code
    /// enumeration; index 0 is the all-zeros point before shifting).
    Matrix points(std::uint32_t first, int count) const;

  private:
    int dims_;
    bool scrambled_ = false;
    std::vector<std::array<std::uint32_t, 32>> directions_;  // per dimension
    std::vector<std::uint32_t> shift_;
};

/// First n Sobol points.  Unscrambled point sets start at sequence index 1
/// (the all-zeros point is skipped); scrambled point sets cover indices
/// 0..n-1, where the digital shift displaces the origin and keeps exactly
/// one point in every dyadic box when n is a power of two.
PointSet sobol_points(int n, int d, std::uint64_t seed, bool scramble);

/// Latin hypercube sample: each column is an independent random permutation
/// of the n strata with a uniform draw inside each stratum.
PointSet lhs_points(int n, int d, std::uint64_t seed);

/// Scrambled Sobol for the leading min(sobol_dims, d) columns, LHS for the
/// rest, with all randomness derived from (seed, replication).
PointSet hybrid_points(const SamplerSpec& spec, int replication);

/// Dispatch on spec.kind; Mc fills every column with plain pseudo-random
/// uniforms so all samplers flow through the same inverse-CDF pipeline.
PointSet generate_points(const SamplerSpec& spec, int replication);

/// Rational approximation to the standard normal quantile (absolute error
/// below 1e-9 over (0,1)); input clamped to [1e-16, 1 - 1e-16].
double inverse_normal_cdf(double u);

/// Same approximation polished with one Halley step (error below 1e-13).
double inverse_normal_cdf_refined(double u);

/// Map every coordinate through inverse_normal_cdf.
Matrix to_normal(const PointSet& points);

}  // namespace qmcbasket

#endif
