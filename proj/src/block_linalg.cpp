#include "qmcbasket/block_linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace qmcbasket {

namespace {

void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

void check_block_sequence(const std::vector<Matrix>& blocks, const char* what) {
    require(!blocks.empty(), std::string(what) + ": empty block sequence");
    const Eigen::Index d = blocks.front().rows();
    for (const Matrix& b : blocks) {
        require(b.rows() == d && b.cols() == d,
                std::string(what) + ": blocks must be square with equal sizes");
    }
}

}  // namespace

Matrix BoomerangMatrix::assemble() const {
    const int n = size();
    Matrix out(n, n);
    for (int h = 0; h < n; ++h)
        for (int p = 0; p < n; ++p) out(h, p) = b(std::min(h, p));
    return out;
}

Matrix BlockBoomerangMatrix::assemble() const {
    check_block_sequence(blocks, "BlockBoomerangMatrix");
    const int p = block_count(), d = block_size();
    Matrix out(p * d, p * d);
    for (int h = 0; h < p; ++h)
        for (int l = 0; l < p; ++l) out.block(h * d, l * d, d, d) = blocks[std::min(h, l)];
    return out;
}

Matrix BlockLowerTriangular::assemble() const {
    check_block_sequence(diag_blocks, "BlockLowerTriangular");
    const int p = block_count(), d = block_size();
    Matrix out = Matrix::Zero(p * d, p * d);
    for (int h = 0; h < p; ++h)
        for (int l = 0; l <= h; ++l) out.block(h * d, l * d, d, d) = diag_blocks[l];
    return out;
}

Vector BlockLowerTriangular::apply(const Vector& x) const {
    const int p = block_count(), d = block_size();
    require(x.size() == dim(), "apply: dimension mismatch");
    Vector out(dim());
    Vector running = Vector::Zero(d);
    for (int h = 0; h < p; ++h) {
        running += diag_blocks[h] * x.segment(h * d, d);
        out.segment(h * d, d) = running;
    }
    return out;
}

Vector BlockLowerTriangular::apply_transpose(const Vector& x) const {
    const int p = block_count(), d = block_size();
    require(x.size() == dim(), "apply_transpose: dimension mismatch");
    Vector out(dim());
    Vector suffix = Vector::Zero(d);
    for (int h = p - 1; h >= 0; --h) {
        suffix += x.segment(h * d, d);
        out.segment(h * d, d) = diag_blocks[h].transpose() * suffix;
    }
    return out;
}

Matrix BlockLowerTriangular::apply_left(const Matrix& w) const {
    const int p = block_count(), d = block_size();
    require(w.rows() == dim(), "apply_left: dimension mismatch");
    Matrix out(dim(), w.cols());
    Matrix running = Matrix::Zero(d, w.cols());
    for (int h = 0; h < p; ++h) {
        running.noalias() += diag_blocks[h] * w.middleRows(h * d, d);
        out.middleRows(h * d, d) = running;
    }
    return out;
}

Matrix BlockTridiagonal::assemble() const {
    check_block_sequence(diag, "BlockTridiagonal");
    require(offdiag.size() + 1 == diag.size(),
            "BlockTridiagonal: need exactly block_count()-1 offdiagonal blocks");
    const int p = block_count(), d = block_size();
    Matrix out = Matrix::Zero(p * d, p * d);
    for (int h = 0; h < p; ++h) out.block(h * d, h * d, d, d) = diag[h];
    for (int h = 0; h + 1 < p; ++h) {
        out.block((h + 1) * d, h * d, d, d) = offdiag[h];
        out.block(h * d, (h + 1) * d, d, d) = offdiag[h].transpose();
    }
    return out;
}

Matrix chol_dense(const Matrix& s) {
    require(s.rows() == s.cols(), "chol_dense: matrix must be square");
    const int n = static_cast<int>(s.rows());
    if (n == 0) return Matrix(0, 0);
    const double scale = std::max(1.0, s.diagonal().cwiseAbs().maxCoeff());
    const double tol = kPsdTol * scale;
    Matrix l = Matrix::Zero(n, n);
    for (int j = 0; j < n; ++j) {
        double pivot = s(j, j) - l.row(j).head(j).squaredNorm();
        if (pivot < -tol)
            throw std::domain_error("chol_dense: matrix is indefinite at pivot " +
                                    std::to_string(j) + " (value " + std::to_string(pivot) + ")");
        if (pivot <= 0.0) continue;  // clamped pivot, column stays zero
        const double ljj = std::sqrt(pivot);
        l(j, j) = ljj;
        for (int i = j + 1; i < n; ++i)
            l(i, j) = (s(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / ljj;
    }
    return l;
}

BlockLowerTriangular chol_block_boomerang(const BlockBoomerangMatrix& b) {
    check_block_sequence(b.blocks, "chol_block_boomerang");
    BlockLowerTriangular out;
    out.diag_blocks.reserve(b.blocks.size());
    Matrix prev = Matrix::Zero(b.block_size(), b.block_size());
    for (std::size_t h = 0; h < b.blocks.size(); ++h) {
        Matrix increment = b.blocks[h] - prev;
        try {
            out.diag_blocks.push_back(chol_dense(increment));
        } catch (const std::domain_error& e) {
            throw std::domain_error("chol_block_boomerang: increment " + std::to_string(h + 1) +
                                    " not positive semidefinite: " + e.what());
        }
        prev = b.blocks[h];
    }
    return out;
}

BlockTridiagonal inverse_block_boomerang(const BlockBoomerangMatrix& b) {
    check_block_sequence(b.blocks, "inverse_block_boomerang");
    const int p = b.block_count(), d = b.block_size();
    std::vector<Matrix> vinv(p);
    Matrix prev = Matrix::Zero(d, d);
    for (int h = 0; h < p; ++h) {
        Matrix increment = b.blocks[h] - prev;
        Eigen::LLT<Matrix> llt(increment);
        if (llt.info() != Eigen::Success)
            throw std::domain_error("inverse_block_boomerang: increment " + std::to_string(h + 1) +
                                    " is singular or indefinite");
        vinv[h] = llt.solve(Matrix::Identity(d, d));
        prev = b.blocks[h];
    }
    BlockTridiagonal out;
    out.diag.resize(p);
    out.offdiag.resize(p - 1);
    for (int h = 0; h < p - 1; ++h) {
        out.diag[h] = vinv[h] + vinv[h + 1];
        out.offdiag[h] = -vinv[h + 1];
    }
    out.diag[p - 1] = vinv[p - 1];
    return out;
}

Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

Matrix rearrangement_block(const Matrix& g, int h, int l, int m2, int n2) {
    require(m2 > 0 && n2 > 0, "rearrangement_block: block sizes must be positive");
    require(g.rows() % m2 == 0 && g.cols() % n2 == 0,
            "rearrangement_block: dimensions must be divisible by block sizes");
    require(h >= 1 && h <= m2 && l >= 1 && l <= n2, "rearrangement_block: phase out of range");
    const Eigen::Index m1 = g.rows() / m2, n1 = g.cols() / n2;
    Matrix out(m1, n1);
    for (Eigen::Index i = 0; i < m1; ++i)
        for (Eigen::Index j = 0; j < n1; ++j) out(i, j) = g(h - 1 + i * m2, l - 1 + j * n2);
    return out;
}

double boomerang_trace_product(const Vector& a, const Vector& b) {
    require(a.size() == b.size(), "boomerang_trace_product: length mismatch");
    const Eigen::Index n = a.size();
    double acc = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) acc += static_cast<double>(2 * (n - 1 - j) + 1) * a(j) * b(j);
    return acc;
}

Matrix nearest_kron_factor(const BlockBoomerangMatrix& g, const BoomerangMatrix& r) {
    check_block_sequence(g.blocks, "nearest_kron_factor");
    require(r.size() == g.block_count(),
            "nearest_kron_factor: boomerang length must equal block count");
    const double denom = boomerang_trace_product(r.b, r.b);
    if (denom <= 0.0)
        throw std::domain_error("nearest_kron_factor: zero reference matrix");
    const int d = g.block_size(), p = g.block_count();
    Matrix out(d, d);
    Vector entry_series(p);
    for (int h = 0; h < d; ++h)
        for (int l = 0; l < d; ++l) {
            for (int n = 0; n < p; ++n) entry_series(n) = g.blocks[n](h, l);
            out(h, l) = boomerang_trace_product(entry_series, r.b) / denom;
        }
    return out;
}

SymEig eig_sym(const Matrix& s) {
    require(s.rows() == s.cols(), "eig_sym: matrix must be square");
    Eigen::SelfAdjointEigenSolver<Matrix> solver(s);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("eig_sym: eigendecomposition failed to converge");
    const Eigen::Index n = s.rows();
    SymEig out;
    out.eigenvalues = solver.eigenvalues().reverse();
    out.eigenvectors = solver.eigenvectors().rowwise().reverse();
    for (Eigen::Index k = 0; k < n; ++k) {
        Eigen::Index imax = 0;
        out.eigenvectors.col(k).cwiseAbs().maxCoeff(&imax);
        if (out.eigenvectors(imax, k) < 0.0) out.eigenvectors.col(k) = -out.eigenvectors.col(k);
    }
    return out;
}

}  // namespace qmcbasket
