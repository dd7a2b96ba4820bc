#ifndef QMCBASKET_PATH_CONSTRUCTION_HPP
#define QMCBASKET_PATH_CONSTRUCTION_HPP

#include <string>

#include "qmcbasket/block_linalg.hpp"
#include "qmcbasket/market_model.hpp"

namespace qmcbasket {

enum class Method { CH, PCA, LT, KPA };

const char* to_string(Method method);
Method method_from_string(const std::string& name);

/// A factor matrix C with C C^T = Sigma plus provenance.  Feeding C
/// independent standard normals yields log paths with the exact covariance;
/// the methods differ only in how they distribute variance across input
/// dimensions, which is what quasi-Monte Carlo exploits.
struct Construction {
    Method method = Method::CH;
    Matrix c;
    int optimized_columns = 0;  // LT only
    std::string metadata;       // "key=value;..." build parameters
};

/// Block lower-triangular Cholesky factor, assembled dense.
Construction build_ch(const BlockBoomerangMatrix& blocks);

/// Principal component factor E Lambda^(1/2) of the assembled covariance,
/// columns ordered by descending eigenvalue; eigenvalues within tolerance
/// of zero are clamped, anything more negative throws.
Construction build_pca(const BlockBoomerangMatrix& blocks);

/// Linear transformation construction C = C_ch A: the first `count` columns
/// of the orthogonal matrix A sequentially maximise the squared derivative
/// of the (linearised) payoff along each new input dimension, subject to
/// orthogonality with the earlier columns; the remaining columns are an
/// arbitrary orthonormal completion.  Column p uses the payoff linearised
/// at the image of the previously fixed coordinates:
///   d_i = exp(mu_i + sum_{k<p} (C_ch a_k)_i),  b = C_ch^T d,  a_p = b/|b|
/// after projecting b off a_1..a_{p-1} (modified Gram-Schmidt with one
/// re-orthogonalisation pass when cancellation exceeds 90%).
Construction build_lt(const BlockBoomerangMatrix& blocks, const Vector& mu, int count);

/// Kronecker product approximation: with H the nearest Kronecker factor of
/// the covariance along R, and F = R (x) H,
///   C = C_Sigma (C_R^-1 (x) C_H^-1) E_F Lambda_F^(1/2),
/// built from the separate eigensystems of R and H (never the full M N one).
/// C C^T = Sigma exactly; only the column ordering follows the approximate
/// Kronecker spectrum.  Throws if H is not positive definite.
Construction build_kpa(const BlockBoomerangMatrix& blocks, const BoomerangMatrix& r);

/// z = C eps.
LogPathVector transform(const Construction& c, const Vector& eps);

/// Smallest d such that the first d input dimensions carry a fraction p of
/// the linearised payoff variance sum_l (sum_i e^(mu_i) C_il)^2.
int effective_truncation_dimension(const Construction& c, const Vector& mu, double p);

}  // namespace qmcbasket

#endif
