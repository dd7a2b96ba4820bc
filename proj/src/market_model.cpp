#include "qmcbasket/market_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace qmcbasket {

namespace {

void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

void check_curve(const VolatilityCurve& curve) {
    require(curve.sigma0 >= 0.0, "volatility curve: sigma0 must be nonnegative");
    require(curve.sigma_inf >= 0.0, "volatility curve: sigma_inf must be nonnegative");
    require(curve.tau > 0.0, "volatility curve: tau must be positive");
}

}  // namespace

double instantaneous_vol(const VolatilityCurve& curve, double t) {
    require(t >= 0.0, "instantaneous_vol: negative time");
    return (curve.sigma0 - curve.sigma_inf) * std::exp(-t / curve.tau) + curve.sigma_inf;
}

double integrated_vol(const VolatilityCurve& curve, double t) {
    require(t >= 0.0, "integrated_vol: negative time");
    const double shat = curve.sigma0 - curve.sigma_inf;
    return shat * curve.tau * (1.0 - std::exp(-t / curve.tau)) + curve.sigma_inf * t;
}

void MarketSpec::validate() const {
    const int m = asset_count(), n = monitoring_count();
    require(m >= 1, "market: need at least one asset");
    require(n >= 1, "market: need at least one monitoring date");
    require((spots.array() > 0.0).all(), "market: spots must be positive");
    require(maturity > 0.0, "market: maturity must be positive");
    require(times(0) > 0.0, "market: first monitoring date must be positive");
    for (int j = 1; j < n; ++j)
        require(times(j) > times(j - 1), "market: monitoring dates must be strictly increasing");
    require(std::abs(times(n - 1) - maturity) <= 1e-12 * std::max(1.0, maturity),
            "market: last monitoring date must equal maturity");
    require(corr.rows() == m && corr.cols() == m, "market: correlation must be M x M");
    for (int i = 0; i < m; ++i) {
        require(std::abs(corr(i, i) - 1.0) <= 1e-12, "market: correlation diagonal must be 1");
        for (int k = 0; k < i; ++k)
            require(std::abs(corr(i, k) - corr(k, i)) <= 1e-12,
                    "market: correlation must be symmetric");
    }
    {
        SymEig eig = eig_sym(corr);
        const double lmax = std::max(1.0, eig.eigenvalues(0));
        require(eig.eigenvalues(m - 1) >= -kPsdTol * lmax,
                "market: correlation must be positive semidefinite");
    }
    require(static_cast<int>(curves.size()) == m, "market: need one volatility curve per asset");
    for (const VolatilityCurve& c : curves) check_curve(c);
    require(weights.rows() == m && weights.cols() == n, "market: weights must be M x N");
    require((weights.array() >= 0.0).all(), "market: weights must be nonnegative");
    require(std::abs(weights.sum() - 1.0) <= 1e-12, "market: weights must sum to 1");
    require(strike >= 0.0, "market: strike must be nonnegative");
}

double integrated_cross_vol(const MarketSpec& spec, int i, int k, double t) {
    const int m = spec.asset_count();
    require(i >= 1 && i <= m && k >= 1 && k <= m, "integrated_cross_vol: asset index out of range");
    require(t >= 0.0, "integrated_cross_vol: negative time");
    const VolatilityCurve& ci = spec.curves[i - 1];
    const VolatilityCurve& ck = spec.curves[k - 1];
    const double shi = ci.sigma0 - ci.sigma_inf, shk = ck.sigma0 - ck.sigma_inf;
    const double both = shi * shk * (ci.tau * ck.tau / (ci.tau + ck.tau)) *
                        (1.0 - std::exp(-t * (1.0 / ci.tau + 1.0 / ck.tau)));
    const double left = shi * ck.sigma_inf * ci.tau * (1.0 - std::exp(-t / ci.tau));
    const double right = ci.sigma_inf * shk * ck.tau * (1.0 - std::exp(-t / ck.tau));
    const double flat = ci.sigma_inf * ck.sigma_inf * t;
    return spec.corr(i - 1, k - 1) * (both + left + right + flat);
}

BlockBoomerangMatrix build_covariance_blocks(const MarketSpec& spec) {
    spec.validate();
    const int m = spec.asset_count(), n = spec.monitoring_count();
    BlockBoomerangMatrix out;
    out.blocks.resize(n);
    for (int j = 0; j < n; ++j) {
        Matrix block(m, m);
        for (int i = 0; i < m; ++i)
            for (int k = 0; k <= i; ++k) {
                block(i, k) = integrated_cross_vol(spec, i + 1, k + 1, spec.times(j));
                block(k, i) = block(i, k);
            }
        SymEig eig = eig_sym(block);
        const double lmax = std::max(1.0, eig.eigenvalues(0));
        if (eig.eigenvalues(m - 1) < -kPsdTol * lmax)
            throw std::domain_error("build_covariance_blocks: covariance block " +
                                    std::to_string(j + 1) + " is not positive semidefinite");
        out.blocks[j] = std::move(block);
    }
    return out;
}

Vector drift_vector(const MarketSpec& spec) {
    spec.validate();
    require((spec.weights.array() > 0.0).all(), "drift_vector: weights must be strictly positive");
    const int m = spec.asset_count(), n = spec.monitoring_count();
    Vector mu(m * n);
    for (int j = 0; j < n; ++j) {
        const double t = spec.times(j);
        for (int i = 0; i < m; ++i) {
            const double var = integrated_cross_vol(spec, i + 1, i + 1, t);
            mu(j * m + i) =
                std::log(spec.weights(i, j) * spec.spots(i)) + spec.rate * t - 0.5 * var;
        }
    }
    return mu;
}

double basket_value(const Vector& mu, const LogPathVector& z) {
    require(mu.size() == z.size(), "basket_value: dimension mismatch");
    return (mu + z).array().exp().sum();
}

double discounted_payoff(const MarketSpec& spec, double g) {
    return std::exp(-spec.rate * spec.maturity) * std::max(g - spec.strike, 0.0);
}

MarketSpec default_market(double rho, double strike, int monitoring) {
    require(monitoring >= 1, "default_market: need at least one monitoring date");
    const int m = 10;
    MarketSpec spec;
    spec.spots = Vector::Constant(m, 100.0);
    spec.rate = 0.04;
    spec.maturity = 1.0;
    spec.times = Vector::LinSpaced(monitoring, 1.0 / monitoring, 1.0);
    spec.corr = Matrix::Constant(m, m, rho);
    spec.corr.diagonal().setOnes();
    spec.curves.resize(m);
    for (int i = 0; i < m; ++i)
        spec.curves[i] = VolatilityCurve{0.10 + 0.40 * i / (m - 1.0), 0.09, 1.5};
    spec.weights = Matrix::Constant(m, monitoring, 1.0 / (m * monitoring));
    spec.strike = strike;
    spec.validate();
    return spec;
}

void to_json(nlohmann::json& j, const VolatilityCurve& curve) {
    j = nlohmann::json{{"sigma0", curve.sigma0},
                       {"sigma_inf", curve.sigma_inf},
                       {"tau", curve.tau}};
}

void from_json(const nlohmann::json& j, VolatilityCurve& curve) {
    j.at("sigma0").get_to(curve.sigma0);
    j.at("sigma_inf").get_to(curve.sigma_inf);
    j.at("tau").get_to(curve.tau);
}

void to_json(nlohmann::json& j, const MarketSpec& spec) {
    const int m = spec.asset_count(), n = spec.monitoring_count();
    j = nlohmann::json::object();
    j["M"] = m;
    j["N"] = n;
    j["spots"] = std::vector<double>(spec.spots.data(), spec.spots.data() + m);
    j["rate"] = spec.rate;
    j["maturity"] = spec.maturity;
    j["times"] = std::vector<double>(spec.times.data(), spec.times.data() + n);
    nlohmann::json corr = nlohmann::json::array();
    for (int i = 0; i < m; ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (int k = 0; k < m; ++k) row.push_back(spec.corr(i, k));
        corr.push_back(std::move(row));
    }
    j["corr"] = std::move(corr);
    j["curves"] = spec.curves;
    nlohmann::json weights = nlohmann::json::array();
    for (int i = 0; i < m; ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (int l = 0; l < n; ++l) row.push_back(spec.weights(i, l));
        weights.push_back(std::move(row));
    }
    j["weights"] = std::move(weights);
    j["strike"] = spec.strike;
}

void from_json(const nlohmann::json& j, MarketSpec& spec) {
    const auto bad = [](const std::string& msg) { return std::invalid_argument("market json: " + msg); };

    std::vector<double> spots;
    if (j.at("spots").is_number()) {
        if (!j.contains("M")) throw bad("scalar spots needs explicit M");
        spots.assign(j.at("M").get<int>(), j.at("spots").get<double>());
    } else {
        j.at("spots").get_to(spots);
    }
    const int m = static_cast<int>(spots.size());
    if (j.contains("M") && j.at("M").get<int>() != m) throw bad("M inconsistent with spots");
    spec.spots = Eigen::Map<const Vector>(spots.data(), m);

    j.at("rate").get_to(spec.rate);
    j.at("maturity").get_to(spec.maturity);

    int n = 0;
    if (j.contains("times")) {
        std::vector<double> times = j.at("times").get<std::vector<double>>();
        n = static_cast<int>(times.size());
        spec.times = Eigen::Map<const Vector>(times.data(), n);
    } else {
        if (!j.contains("N")) throw bad("need times or N");
        n = j.at("N").get<int>();
        if (n < 1) throw bad("N must be positive");
        spec.times = Vector::LinSpaced(n, spec.maturity / n, spec.maturity);
    }
    if (j.contains("N") && j.at("N").get<int>() != n) throw bad("N inconsistent with times");

    const nlohmann::json& corr = j.at("corr");
    if (corr.is_object()) {
        const double rho = corr.at("equicorrelation").get<double>();
        spec.corr = Matrix::Constant(m, m, rho);
        spec.corr.diagonal().setOnes();
    } else {
        spec.corr.resize(m, m);
        if (static_cast<int>(corr.size()) != m) throw bad("corr row count mismatch");
        for (int i = 0; i < m; ++i) {
            if (static_cast<int>(corr[i].size()) != m) throw bad("corr column count mismatch");
            for (int k = 0; k < m; ++k) spec.corr(i, k) = corr[i][k].get<double>();
        }
    }

    const nlohmann::json& curves = j.at("curves");
    if (curves.is_object()) {
        spec.curves.assign(m, curves.get<VolatilityCurve>());
    } else {
        spec.curves = curves.get<std::vector<VolatilityCurve>>();
    }

    const nlohmann::json& weights = j.at("weights");
    if (weights.is_string()) {
        if (weights.get<std::string>() != "equal") throw bad("unknown weights keyword");
        spec.weights = Matrix::Constant(m, n, 1.0 / (m * n));
    } else {
        spec.weights.resize(m, n);
        if (static_cast<int>(weights.size()) != m) throw bad("weights row count mismatch");
        for (int i = 0; i < m; ++i) {
            if (static_cast<int>(weights[i].size()) != n) throw bad("weights column count mismatch");
            for (int l = 0; l < n; ++l) spec.weights(i, l) = weights[i][l].get<double>();
        }
    }

    j.at("strike").get_to(spec.strike);
    spec.validate();
}

}  // namespace qmcbasket
