#include "qmcbasket/greeks.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "replication_runner.hpp"

namespace qmcbasket {

namespace {

constexpr int kChunkRows = 2048;
constexpr double kWeightFloor = 1e-300;  // |L_k| below this flags the path

void require(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

// I(i, j) = int_0^{t_j} sigma_i(s) ds for every asset and date.
Matrix integrated_vol_table(const MarketSpec& spec) {
    const int m = spec.asset_count(), n = spec.monitoring_count();
    Matrix table(m, n);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) table(i, j) = integrated_vol(spec.curves[i], spec.times(j));
    return table;
}

}  // namespace

CorrelationLoadings correlation_loadings(const Matrix& rho) {
    require(rho.rows() == rho.cols(), "correlation_loadings: matrix must be square");
    CorrelationLoadings out;
    out.alpha = chol_dense(rho);
    for (Eigen::Index k = 0; k < out.alpha.rows(); ++k)
        if (!(out.alpha(k, k) > 0.0))
            throw std::domain_error(
                "correlation_loadings: correlation is singular (zero pivot at asset " +
                std::to_string(k + 1) + ")");
    return out;
}

TerminalBmConditioner make_terminal_bm(const MarketSpec& spec) {
    const int m = spec.asset_count(), n = spec.monitoring_count();
    const BlockBoomerangMatrix blocks = build_covariance_blocks(spec);
    const CorrelationLoadings loadings = correlation_loadings(spec.corr);
    const Matrix int_sigma = integrated_vol_table(spec);

    TerminalBmConditioner cond;
    cond.gain.resize(n);
    Matrix residual_cov = Matrix::Zero(m, m);
    Matrix prev_block = Matrix::Zero(m, m);
    for (int j = 0; j < n; ++j) {
        const double dt = spec.times(j) - (j > 0 ? spec.times(j - 1) : 0.0);
        Vector dint(m);
        for (int i = 0; i < m; ++i)
            dint(i) = int_sigma(i, j) - (j > 0 ? int_sigma(i, j - 1) : 0.0);
        // (U_j)_{mi} = alpha_im * dint_i
        const Matrix u = loadings.alpha.transpose() * dint.asDiagonal();
        const Matrix v = blocks.blocks[j] - prev_block;
        Eigen::LLT<Matrix> llt(v);
        if (llt.info() != Eigen::Success)
            throw std::domain_error("terminal_bm: covariance increment " + std::to_string(j + 1) +
                                    " is singular or indefinite");
        cond.gain[j] = llt.solve(u.transpose()).transpose();
        residual_cov += dt * Matrix::Identity(m, m) - cond.gain[j] * u.transpose();
        prev_block = blocks.blocks[j];
    }

    residual_cov = 0.5 * (residual_cov + residual_cov.transpose()).eval();
    const SymEig eig = eig_sym(residual_cov);
    const double lmax = std::max(1.0, eig.eigenvalues(0));
    if (eig.eigenvalues(m - 1) < -kPsdTol * lmax)
        throw std::domain_error("terminal_bm: residual covariance indefinite (eigenvalue " +
                                std::to_string(eig.eigenvalues(m - 1)) + ")");
    Vector sqrt_ev = eig.eigenvalues.cwiseMax(0.0).cwiseSqrt();
    cond.residual_chol = eig.eigenvectors * sqrt_ev.asDiagonal();

    // Summation by parts: sum_j A_j (Z_j - Z_{j-1}) = sum_j (A_j - A_{j+1}) Z_j.
    cond.collapsed.resize(m, m * n);
    for (int j = 0; j < n; ++j) {
        Matrix tilde = cond.gain[j];
        if (j + 1 < n) tilde -= cond.gain[j + 1];
        cond.collapsed.middleCols(static_cast<Eigen::Index>(j) * m, m) = tilde;
    }
    return cond;
}

Vector terminal_bm(const MarketSpec& spec, const LogPathVector& z, const Vector& residual_normals) {
    const int m = spec.asset_count();
    require(z.size() == spec.path_dim(), "terminal_bm: path length mismatch");
    require(residual_normals.size() == m, "terminal_bm: need M residual normals");
    const TerminalBmConditioner cond = make_terminal_bm(spec);
    return cond.collapsed * z + cond.residual_chol * residual_normals;
}

double malliavin_weight(const MarketSpec& spec, const Matrix& prices,
                        const CorrelationLoadings& loadings, int k, double wk_t) {
    const int m = spec.asset_count(), n = spec.monitoring_count();
    require(prices.rows() == m && prices.cols() == n, "malliavin_weight: prices must be M x N");
    require(k >= 1 && k <= m, "malliavin_weight: asset index out of range");
    const Matrix int_sigma = integrated_vol_table(spec);
    const int kk = k - 1;

    double lk = 0.0, dlk = 0.0, gk = 0.0, dgk = 0.0;
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < m; ++i) {
            const double q = spec.weights(i, j) * prices(i, j);
            const double load = loadings.alpha(i, kk) * int_sigma(i, j);
            lk += q * load;
            dlk += q * load * load;
        }
        const double qk = spec.weights(kk, j) * prices(kk, j);
        gk += qk;
        dgk += qk * loadings.alpha(kk, kk) * int_sigma(kk, j);
    }
    gk /= spec.spots(kk);
    dgk /= spec.spots(kk);
    if (std::abs(lk) < kWeightFloor)
        throw std::domain_error("malliavin_weight: vanishing L, path rejected");
    return (gk / lk) * wk_t - (lk * dgk - gk * dlk) / (lk * lk);
}

std::vector<Estimate> estimate_deltas(const MarketSpec& spec, const Construction& c,
                                      const SamplerSpec& sampler, int reps, int threads) {
    spec.validate();
    const int m = spec.asset_count(), mn = spec.path_dim();
    require(c.c.rows() == mn && c.c.cols() == mn,
            "estimate_deltas: construction does not match the market dimension");
    require(sampler.d == mn + m,
            "estimate_deltas: sampler dimension must be M*N + M (residual columns)");
    require(reps >= 1, "estimate_deltas: need at least one replication");

    // The residual columns must stay outside the Sobol block.
    SamplerSpec sampler_used = sampler;
    sampler_used.sobol_dims = std::min(sampler.sobol_dims, mn);

    const int n = sampler.n;
    const Vector mu = drift_vector(spec);
    const double disc = std::exp(-spec.rate * spec.maturity);
    const CorrelationLoadings loadings = correlation_loadings(spec.corr);
    const Matrix alpha_sq = loadings.alpha.array().square();
    const Matrix int_sigma = integrated_vol_table(spec);
    const TerminalBmConditioner cond = make_terminal_bm(spec);

    // Per-asset reductions as thin matrices against the weighted-price rows:
    // with ws = exp(mu + z) laid out time-major, ws * qmat gives
    // q_i = sum_j w_ij S_ij I_ij per path, and similarly for the others.
    Matrix qmat = Matrix::Zero(mn, m);   // I_ij at ((j)M+i, i)
    Matrix pmat = Matrix::Zero(mn, m);   // I_ij^2
    Matrix gmat = Matrix::Zero(mn, m);   // 1/x_i
    Matrix dgmat = Matrix::Zero(mn, m);  // alpha_ii I_ij / x_i
    for (int j = 0; j < spec.monitoring_count(); ++j)
        for (int i = 0; i < m; ++i) {
            const Eigen::Index row = static_cast<Eigen::Index>(j) * m + i;
            const double isig = int_sigma(i, j);
            qmat(row, i) = isig;
            pmat(row, i) = isig * isig;
            gmat(row, i) = 1.0 / spec.spots(i);
            dgmat(row, i) = loadings.alpha(i, i) * isig / spec.spots(i);
        }

    const std::function<std::vector<double>(int)> one_replication = [&](int rep) {
        const PointSet pts = generate_points(sampler_used, rep);
        const Matrix e = to_normal(pts);
        std::vector<detail::KahanSum> sums(m);
        Matrix z, w;
        for (int row0 = 0; row0 < n; row0 += kChunkRows) {
            const int rows = std::min(kChunkRows, n - row0);
            const auto e_path = e.middleRows(row0, rows).leftCols(mn);
            z.noalias() = e_path * c.c.transpose();
            w.noalias() = z * cond.collapsed.transpose();
            w.noalias() += e.middleRows(row0, rows).rightCols(m) * cond.residual_chol.transpose();
            z.rowwise() += mu.transpose();
            z.array() = z.array().exp();  // now the weighted prices w_ij S_ij
            const Vector g = z.rowwise().sum();
            const Matrix q = z * qmat;
            const Matrix p = z * pmat;
            const Matrix gk = z * gmat;
            const Matrix dgk = z * dgmat;
            const Matrix l = q * loadings.alpha;
            const Matrix dl = p * alpha_sq;
            for (int k = 0; k < m; ++k) {
                detail::KahanSum& acc = sums[k];
                for (int r = 0; r < rows; ++r) {
                    const double payoff = std::max(g(r) - spec.strike, 0.0);
                    const double lk = l(r, k);
                    if (std::abs(lk) < kWeightFloor) continue;  // flagged path
                    const double weight =
                        (gk(r, k) / lk) * w(r, k) - (lk * dgk(r, k) - gk(r, k) * dl(r, k)) / (lk * lk);
                    acc.add(payoff * weight);
                }
            }
        }
        std::vector<double> means(m);
        for (int k = 0; k < m; ++k) means[k] = disc * sums[k].sum / n;
        return means;
    };

    const std::vector<std::vector<double>> per_rep =
        detail::run_replications<std::vector<double>>(reps, threads, one_replication);

    std::vector<Estimate> out(m);
    std::vector<double> thetas(reps);
    for (int k = 0; k < m; ++k) {
        for (int r = 0; r < reps; ++r) thetas[r] = per_rep[r][k];
        out[k] = summarize_replications(thetas, n);
    }
    return out;
}

Estimate finite_difference_delta(const MarketSpec& spec, const Construction& c,
                                 const SamplerSpec& sampler, int k, double bump, int reps,
                                 int threads) {
    spec.validate();
    const int m = spec.asset_count(), mn = spec.path_dim();
    require(k >= 1 && k <= m, "finite_difference_delta: asset index out of range");
    require(bump >= 1e-4 && bump <= 1e-1, "finite_difference_delta: bump outside [1e-4, 1e-1]");
    require(c.c.rows() == mn && c.c.cols() == mn,
            "finite_difference_delta: construction does not match the market dimension");
    require(sampler.d == mn || sampler.d == mn + m,
            "finite_difference_delta: sampler dimension must be M*N (or M*N + M)");
    require(reps >= 1, "finite_difference_delta: need at least one replication");

    const int n = sampler.n;
    const Vector mu = drift_vector(spec);
    const double disc = std::exp(-spec.rate * spec.maturity);
    // A relative spot bump scales the asset-k terms of the basket linearly,
    // so both bumped payoffs come from one simulated path set.
    Vector mask = Vector::Zero(mn);
    for (int j = 0; j < spec.monitoring_count(); ++j)
        mask(static_cast<Eigen::Index>(j) * m + (k - 1)) = 1.0;

    const std::function<std::vector<double>(int)> one_replication = [&](int rep) {
        const PointSet pts = generate_points(sampler, rep);
        const Matrix e = to_normal(pts);
        detail::KahanSum up, down;
        Matrix z;
        for (int row0 = 0; row0 < n; row0 += kChunkRows) {
            const int rows = std::min(kChunkRows, n - row0);
            z.noalias() = e.middleRows(row0, rows).leftCols(mn) * c.c.transpose();
            z.rowwise() += mu.transpose();
            z.array() = z.array().exp();
            const Vector g = z.rowwise().sum();
            const Vector gk = z * mask;
            for (int r = 0; r < rows; ++r) {
                up.add(std::max(g(r) + bump * gk(r) - spec.strike, 0.0));
                down.add(std::max(g(r) - bump * gk(r) - spec.strike, 0.0));
            }
        }
        const double scale = disc / (2.0 * spec.spots(k - 1) * bump * n);
        return std::vector<double>{scale * (up.sum - down.sum)};
    };

    const std::vector<std::vector<double>> per_rep =
        detail::run_replications<std::vector<double>>(reps, threads, one_replication);
    std::vector<double> thetas(reps);
    for (int r = 0; r < reps; ++r) thetas[r] = per_rep[r][0];
    return summarize_replications(thetas, n);
}

}  // namespace qmcbasket
