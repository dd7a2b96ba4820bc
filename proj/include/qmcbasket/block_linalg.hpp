#ifndef QMCBASKET_BLOCK_LINALG_HPP
#define QMCBASKET_BLOCK_LINALG_HPP

#include <vector>

#include <Eigen/Dense>

namespace qmcbasket {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Relative tolerance below which a symmetric matrix is still accepted as
/// positive semidefinite (smallest admissible eigenvalue or Cholesky pivot
/// is -kPsdTol * max(1, largest magnitude)).
inline constexpr double kPsdTol = 1e-10;

/// Symmetric N x N matrix with entries A(h,p) = b(min(h,p)).
/// Fully described by its elementary vector b.
struct BoomerangMatrix {
    Vector b;

    int size() const { return static_cast<int>(b.size()); }
    Matrix assemble() const;
};

/// Symmetric block matrix with D x D blocks A(h,p) = B_min(h,p), h,p = 1..P.
/// Stores only the elementary block sequence B_1..B_P.
struct BlockBoomerangMatrix {
    std::vector<Matrix> blocks;

    int block_count() const { return static_cast<int>(blocks.size()); }
    int block_size() const { return blocks.empty() ? 0 : static_cast<int>(blocks.front().rows()); }
    int dim() const { return block_count() * block_size(); }
    Matrix assemble() const;
};

/// Block lower triangular matrix whose row h repeats the first h diagonal
/// blocks: row h = [C_1, C_2, ..., C_h, 0, ..., 0].  This is the shape of
/// the Cholesky factor of a block boomerang matrix, and matrix products
/// against it reduce to running prefix/suffix block sums.
struct BlockLowerTriangular {
    std::vector<Matrix> diag_blocks;

    int block_count() const { return static_cast<int>(diag_blocks.size()); }
    int block_size() const {
        return diag_blocks.empty() ? 0 : static_cast<int>(diag_blocks.front().rows());
    }
    int dim() const { return block_count() * block_size(); }

    Matrix assemble() const;

    /// y = L x in O(P D^2).
    Vector apply(const Vector& x) const;
    /// y = L^T x in O(P D^2).
    Vector apply_transpose(const Vector& x) const;
    /// L * W for a dense W with dim() rows, via cumulative row-block sums.
    Matrix apply_left(const Matrix& w) const;
};

/// Symmetric block tridiagonal matrix: diagonal blocks D_1..D_P and
/// subdiagonal blocks T_1..T_{P-1} (block (h+1,h) = T_h, block (h,h+1) = T_h^T).
struct BlockTridiagonal {
    std::vector<Matrix> diag;
    std::vector<Matrix> offdiag;

    int block_count() const { return static_cast<int>(diag.size()); }
    int block_size() const { return diag.empty() ? 0 : static_cast<int>(diag.front().rows()); }
    Matrix assemble() const;
};

/// Lower Cholesky factor of a symmetric positive semidefinite matrix.
/// Pivots within kPsdTol of zero are clamped to zero (the rest of that
/// column is zeroed); a pivot below -kPsdTol * scale throws std::domain_error.
Matrix chol_dense(const Matrix& s);

/// Cholesky factor of a block boomerang matrix in O(P D^3): the factor is
/// BlockLowerTriangular with diagonal blocks C_h = chol(B_h - B_{h-1}).
/// Requires every increment to be positive semidefinite.
BlockLowerTriangular chol_block_boomerang(const BlockBoomerangMatrix& b);

/// Inverse of a block boomerang matrix, which is block tridiagonal:
/// with V_h = B_h - B_{h-1} (B_0 = 0),
///   D_h = V_h^-1 + V_{h+1}^-1 for h < P,   D_P = V_P^-1,
///   T_h = -V_{h+1}^-1.
/// Requires every increment to be strictly positive definite.
BlockTridiagonal inverse_block_boomerang(const BlockBoomerangMatrix& b);

/// Kronecker product, row-major block convention: out((i-1)*p+k, (j-1)*q+l)
/// = A(i,j) * B(k,l) for A m x n and B p x q.
Matrix kron(const Matrix& a, const Matrix& b);

/// Phase-(h,l) subsampling used when projecting onto a Kronecker structure:
/// picks rows h, h+m2, h+2*m2, ... and columns l, l+n2, ... (1-based phases).
Matrix rearrangement_block(const Matrix& g, int h, int l, int m2, int n2);

/// Trace of A^T B for two boomerang matrices given by their elementary
/// vectors: sum_j (2(N-j)+1) a_j b_j.
double boomerang_trace_product(const Vector& a, const Vector& b);

/// Least-squares factor H minimising || G - R (x) H ||_F over D x D matrices
/// H, for G block boomerang and R boomerang with matching counts:
///   H(h,l) = tr(R^T G_{(h,l)}) / tr(R^T R)
/// with both traces evaluated through boomerang_trace_product.
Matrix nearest_kron_factor(const BlockBoomerangMatrix& g, const BoomerangMatrix& r);

/// Symmetric eigendecomposition with eigenvalues sorted descending and a
/// deterministic sign convention (largest-magnitude component of each
/// eigenvector is positive).
struct SymEig {
    Vector eigenvalues;
    Matrix eigenvectors;  // column k pairs with eigenvalues(k)
};

SymEig eig_sym(const Matrix& s);

}  // namespace qmcbasket

#endif
