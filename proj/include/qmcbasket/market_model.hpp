#ifndef QMCBASKET_MARKET_MODEL_HPP
#define QMCBASKET_MARKET_MODEL_HPP

#include <vector>

#include <nlohmann/json.hpp>

#include "qmcbasket/block_linalg.hpp"

namespace qmcbasket {

/// Exponentially decaying instantaneous volatility
///   sigma(t) = (sigma0 - sigma_inf) exp(-t / tau) + sigma_inf.
struct VolatilityCurve {
    double sigma0 = 0.0;
    double sigma_inf = 0.0;
    double tau = 1.0;
};

double instantaneous_vol(const VolatilityCurve& curve, double t);

/// int_0^t sigma(s) ds in closed form.
double integrated_vol(const VolatilityCurve& curve, double t);

/// Discretely monitored basket option on M lognormal assets observed at N
/// dates.  weights(i, j) multiplies asset i at times(j); the payoff is
/// (sum_ij weights(i,j) S_i(t_j) - strike)^+ discounted at the flat rate.
///
/// Log prices are flattened time-major: component k = (j-1)M + i of a path
/// vector is the centred log price of asset i at date j (1-based).
struct MarketSpec {
    Vector spots;                        // M initial prices, all positive
    double rate = 0.0;
    double maturity = 0.0;
    Vector times;                        // N dates, increasing, last = maturity
    Matrix corr;                         // M x M instantaneous correlation
    std::vector<VolatilityCurve> curves; // one per asset
    Matrix weights;                      // M x N, nonnegative, sums to 1
    double strike = 0.0;

    int asset_count() const { return static_cast<int>(spots.size()); }
    int monitoring_count() const { return static_cast<int>(times.size()); }
    int path_dim() const { return asset_count() * monitoring_count(); }

    /// Throws std::invalid_argument on any inconsistency (sizes, signs,
    /// non-PSD correlation, weight normalisation, time grid).
    void validate() const;
};

/// Centred log price vector in the time-major flattening of MarketSpec.
using LogPathVector = Vector;

/// rho_ik int_0^t sigma_i(s) sigma_k(s) ds, closed form; i, k are 1-based.
double integrated_cross_vol(const MarketSpec& spec, int i, int k, double t);

/// Elementary covariance blocks of the big log price covariance: block n is
/// the M x M matrix [ integrated_cross_vol(i, k, t_n) ].  The full covariance
/// is block boomerang because increments over disjoint intervals are
/// independent.  Every block is checked for positive semidefiniteness.
BlockBoomerangMatrix build_covariance_blocks(const MarketSpec& spec);

/// Per-component drift mu_k = log(w_ij S_i(0)) + r t_j - 0.5 int_0^{t_j}
/// sigma_i^2, with k = (j-1)M + i.  Requires strictly positive weights.
Vector drift_vector(const MarketSpec& spec);

/// Weighted sum of prices g = sum_k exp(mu_k + z_k).
double basket_value(const Vector& mu, const LogPathVector& z);

/// exp(-r T) * max(g - strike, 0).
double discounted_payoff(const MarketSpec& spec, double g);

/// The 10-asset equicorrelated benchmark market: S_i(0) = 100, r = 4%,
/// T = 1, uniform monitoring grid, sigma_i(0) linear from 10% to 50%,
/// sigma_i(inf) = 9%, tau_i = 1.5, equal weights.
MarketSpec default_market(double rho, double strike, int monitoring = 250);

void to_json(nlohmann::json& j, const VolatilityCurve& curve);
void from_json(const nlohmann::json& j, VolatilityCurve& curve);

/// MarketSpec JSON uses the field names above; "corr" accepts either a full
/// matrix or {"equicorrelation": rho}, "weights" accepts a matrix or the
/// string "equal", and "times" may be omitted for a uniform grid (N then
/// names the number of dates).
void to_json(nlohmann::json& j, const MarketSpec& spec);
void from_json(const nlohmann::json& j, MarketSpec& spec);

}  // namespace qmcbasket

#endif
