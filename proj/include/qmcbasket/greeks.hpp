#ifndef QMCBASKET_GREEKS_HPP
#define QMCBASKET_GREEKS_HPP

#include <vector>

#include "qmcbasket/market_model.hpp"
#include "qmcbasket/path_construction.hpp"
#include "qmcbasket/pricing_engine.hpp"
#include "qmcbasket/sampling.hpp"

namespace qmcbasket {

/// Lower-triangular alpha with alpha alpha^T = rho, so the correlated
/// drivers decompose as B_i = sum_m alpha_im W_m over independent W.
struct CorrelationLoadings {
    Matrix alpha;
};

/// Cholesky factor of the correlation matrix; throws if rho is indefinite
/// or singular (the delta weights need every alpha_kk > 0).
CorrelationLoadings correlation_loadings(const Matrix& rho);

/// Exact Gaussian conditioning of the terminal independent Brownian vector
/// W(T) on the generated log path.  Per step j, with V_j the covariance
/// increment and (U_j)_{mi} = alpha_im int_{t_{j-1}}^{t_j} sigma_i(s) ds,
///   W(T) = sum_j U_j V_j^-1 (Z_j - Z_{j-1}) + C_res eta,
/// which collapses to one M x (M N) matrix acting on z by summation by
/// parts.  C_res C_res^T is the residual covariance sum_j (dt_j I -
/// U_j V_j^-1 U_j^T), clamped PSD.
struct TerminalBmConditioner {
    Matrix collapsed;      // M x (M N); W(T) = collapsed z + residual_chol eta
    Matrix residual_chol;  // M x M
    std::vector<Matrix> gain;  // A_j = U_j V_j^-1, kept for inspection
};

TerminalBmConditioner make_terminal_bm(const MarketSpec& spec);

/// Convenience wrapper building the conditioner and applying it once.
Vector terminal_bm(const MarketSpec& spec, const LogPathVector& z, const Vector& residual_normals);

/// The Skorohod-integral weight for asset k on one path, from the price
/// fixings S_i(t_j) and the conditioned W_k(T):
///   weight = (G_k / L_k) W_k(T) - (L_k DG_k - G_k DL_k) / L_k^2
/// with, writing I_i(t) = int_0^t sigma_i(s) ds and q_ij = w_ij S_i(t_j),
///   G_k  = sum_j q_kj / x_k,          DG_k = alpha_kk sum_j q_kj I_k(t_j) / x_k,
///   L_k  = sum_ij q_ij alpha_ik I_i(t_j),   DL_k = sum_ij q_ij (alpha_ik I_i(t_j))^2.
/// The delta is Delta_k = e^{-rT} E[(m(T) - K)^+ weight_k].  k is 1-based.
double malliavin_weight(const MarketSpec& spec, const Matrix& prices,
                        const CorrelationLoadings& loadings, int k, double wk_t);

/// All M deltas by replicated simulation.  The sampler dimension must be
/// M N + M: the trailing M columns drive the conditioning residual and are
/// never Sobol-driven (sobol_dims is capped at M N internally).
std::vector<Estimate> estimate_deltas(const MarketSpec& spec, const Construction& c,
                                      const SamplerSpec& sampler, int reps, int threads = 1);

/// Central finite difference (price(x_k(1+h)) - price(x_k(1-h)))/(2 x_k h)
/// with common random numbers: both bumps share every point set and the
/// construction, so only the drift shifts.  bump is relative, in [1e-4, 0.1].
Estimate finite_difference_delta(const MarketSpec& spec, const Construction& c,
                                 const SamplerSpec& sampler, int k, double bump, int reps,
                                 int threads = 1);

}  // namespace qmcbasket

#endif
