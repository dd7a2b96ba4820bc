#include "qmcbasket/path_construction.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace qmcbasket {

namespace {

void require(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

double millis_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
}

}  // namespace

const char* to_string(Method method) {
    switch (method) {
        case Method::CH: return "CH";
        case Method::PCA: return "PCA";
        case Method::LT: return "LT";
        case Method::KPA: return "KPA";
    }
    throw std::invalid_argument("to_string: unknown construction method");
}

Method method_from_string(const std::string& name) {
    std::string up = name;
    std::transform(up.begin(), up.end(), up.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::toupper(ch)); });
    if (up == "CH") return Method::CH;
    if (up == "PCA") return Method::PCA;
    if (up == "LT") return Method::LT;
    if (up == "KPA") return Method::KPA;
    throw std::invalid_argument("unknown construction method: " + name);
}

Construction build_ch(const BlockBoomerangMatrix& blocks) {
    Construction out;
    out.method = Method::CH;
    out.c = chol_block_boomerang(blocks).assemble();
    return out;
}

Construction build_pca(const BlockBoomerangMatrix& blocks) {
    SymEig eig = eig_sym(blocks.assemble());
    const Eigen::Index n = eig.eigenvalues.size();
    const double lmax = std::max(1.0, eig.eigenvalues(0));
    Vector scale(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const double lambda = eig.eigenvalues(k);
        if (lambda < -kPsdTol * lmax)
            throw std::domain_error("build_pca: covariance eigenvalue " + std::to_string(lambda) +
                                    " below tolerance");
        scale(k) = std::sqrt(std::max(lambda, 0.0));
    }
    Construction out;
    out.method = Method::PCA;
    out.c = eig.eigenvectors * scale.asDiagonal();
    return out;
}

Construction build_lt(const BlockBoomerangMatrix& blocks, const Vector& mu, int count) {
    const int dim = blocks.dim();
    require(mu.size() == dim, "build_lt: drift length must match covariance dimension");
    require(count >= 1 && count <= dim, "build_lt: column count out of range");

    const auto start = std::chrono::steady_clock::now();
    const BlockLowerTriangular cch = chol_block_boomerang(blocks);

    Matrix a_opt(dim, count);
    Vector cumulative = Vector::Zero(dim);  // sum of fixed columns of C* = C_ch A
    for (int p = 0; p < count; ++p) {
        const Vector d = (mu + cumulative).array().exp();
        Vector b = cch.apply_transpose(d);
        const double norm_before = b.norm();
        // modified Gram-Schmidt against the fixed columns
        for (int k = 0; k < p; ++k) b -= a_opt.col(k).dot(b) * a_opt.col(k);
        if (b.norm() < 0.1 * norm_before)
            for (int k = 0; k < p; ++k) b -= a_opt.col(k).dot(b) * a_opt.col(k);
        const double norm = b.norm();
        if (!(norm > 1e-14 * std::max(norm_before, 1e-300)))
            throw std::domain_error("build_lt: degenerate objective at column " +
                                    std::to_string(p + 1));
        a_opt.col(p) = b / norm;
        cumulative += cch.apply(a_opt.col(p));
    }
    const double opt_ms = millis_since(start);

    // Orthonormal completion: the remaining columns of any orthogonal basis
    // whose leading part spans the optimized block.
    const auto completion_start = std::chrono::steady_clock::now();
    Matrix a(dim, dim);
    a.leftCols(count) = a_opt;
    if (count < dim) {
        Eigen::HouseholderQR<Matrix> qr(a_opt);
        Matrix q = qr.householderQ();
        a.rightCols(dim - count) = q.rightCols(dim - count);
    }
    const double completion_ms = millis_since(completion_start);

    Construction out;
    out.method = Method::LT;
    out.c = cch.apply_left(a);
    out.optimized_columns = count;
    out.metadata = "columns=" + std::to_string(count) +
                   ";opt_ms=" + std::to_string(opt_ms) +
                   ";completion_ms=" + std::to_string(completion_ms);
    return out;
}

Construction build_kpa(const BlockBoomerangMatrix& blocks, const BoomerangMatrix& r) {
    const int m = blocks.block_size(), n = blocks.block_count();
    require(r.size() == n, "build_kpa: reference length must equal block count");
    require(r.b(0) > 0.0, "build_kpa: reference must be increasing and positive");
    for (int j = 1; j < n; ++j)
        require(r.b(j) > r.b(j - 1), "build_kpa: reference must be increasing and positive");

    const Matrix h = nearest_kron_factor(blocks, r);
    const SymEig eig_h = eig_sym(h);
    if (!(eig_h.eigenvalues(m - 1) > kPsdTol * std::max(1.0, eig_h.eigenvalues(0))))
        throw std::domain_error(
            "build_kpa: nearest Kronecker factor is not positive definite (smallest eigenvalue " +
            std::to_string(eig_h.eigenvalues(m - 1)) + ")");
    const SymEig eig_r = eig_sym(r.assemble());

    // Inverse Cholesky of the boomerang reference is bidiagonal: forward
    // substitution with increments of the elementary vector.
    Matrix rinv_er = Matrix::Zero(n, n);
    for (int j = 0; j < n; ++j) {
        const double dt = r.b(j) - (j > 0 ? r.b(j - 1) : 0.0);
        const double inv = 1.0 / std::sqrt(dt);
        rinv_er.row(j) += inv * eig_r.eigenvectors.row(j);
        if (j > 0) rinv_er.row(j) -= inv * eig_r.eigenvectors.row(j - 1);
    }
    const Matrix ch = chol_dense(h);
    const Matrix hinv_eh = ch.triangularView<Eigen::Lower>().solve(eig_h.eigenvectors);

    // Pair eigenvalues, sort the products descending with a deterministic
    // tie-break, and assemble the paired Kronecker columns.
    std::vector<std::pair<int, int>> order(static_cast<std::size_t>(n) * m);
    for (int j = 0; j < n; ++j)
        for (int l = 0; l < m; ++l) order[static_cast<std::size_t>(j) * m + l] = {j, l};
    std::stable_sort(order.begin(), order.end(), [&](const auto& x, const auto& y) {
        return eig_r.eigenvalues(x.first) * eig_h.eigenvalues(x.second) >
               eig_r.eigenvalues(y.first) * eig_h.eigenvalues(y.second);
    });

    Matrix g(n * m, n * m);
    for (std::size_t col = 0; col < order.size(); ++col) {
        const auto [j, l] = order[col];
        const double weight =
            std::sqrt(std::max(eig_r.eigenvalues(j) * eig_h.eigenvalues(l), 0.0));
        for (int jj = 0; jj < n; ++jj)
            g.col(col).segment(static_cast<Eigen::Index>(jj) * m, m) =
                (weight * rinv_er(jj, j)) * hinv_eh.col(l);
    }

    Construction out;
    out.method = Method::KPA;
    out.c = chol_block_boomerang(blocks).apply_left(g);
    return out;
}

LogPathVector transform(const Construction& c, const Vector& eps) {
    require(eps.size() == c.c.cols(), "transform: input length must match factor columns");
    return c.c * eps;
}

int effective_truncation_dimension(const Construction& c, const Vector& mu, double p) {
    require(mu.size() == c.c.rows(), "effective_truncation_dimension: drift length mismatch");
    require(p > 0.0 && p < 1.0, "effective_truncation_dimension: threshold must be in (0,1)");
    const Vector gradient = c.c.transpose() * mu.array().exp().matrix();
    const Vector v = gradient.array().square();
    const double total = v.sum();
    if (!(total > 0.0))
        throw std::domain_error("effective_truncation_dimension: all-zero payoff gradient");
    double acc = 0.0;
    for (Eigen::Index l = 0; l < v.size(); ++l) {
        acc += v(l);
        if (acc >= p * total) return static_cast<int>(l) + 1;
    }
    return static_cast<int>(v.size());
}

}  // namespace qmcbasket
