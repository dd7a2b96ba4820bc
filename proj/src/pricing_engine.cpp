#include "qmcbasket/pricing_engine.hpp"

#include <cmath>
#include <stdexcept>

#include "replication_runner.hpp"

namespace qmcbasket {

namespace {

constexpr int kChunkRows = 2048;

void require(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

// The sampler may carry M extra residual columns when the point set is
// shared with the delta estimator; pricing uses only the leading M*N.
void check_dimensions(const MarketSpec& spec, const Construction& c, const SamplerSpec& sampler) {
    const int mn = spec.path_dim();
    require(c.c.rows() == mn && c.c.cols() == mn,
            "price: construction does not match the market dimension");
    require(sampler.d == mn || sampler.d == mn + spec.asset_count(),
            "price: sampler dimension must be M*N (or M*N + M when shared with deltas)");
    require(sampler.n >= 1, "price: need at least one point per replication");
}

}  // namespace

Estimate summarize_replications(const std::vector<double>& values, int paths_per_replication) {
    require(!values.empty(), "summarize_replications: no replication values");
    Estimate est;
    est.per_replication = values;
    est.replications = static_cast<int>(values.size());
    est.paths_per_replication = paths_per_replication;
    detail::KahanSum mean_acc;
    for (double v : values) mean_acc.add(v);
    est.value = mean_acc.sum / est.replications;
    if (est.replications >= 2) {
        detail::KahanSum var_acc;
        for (double v : values) var_acc.add((v - est.value) * (v - est.value));
        est.rmse = std::sqrt(var_acc.sum /
                             (static_cast<double>(est.replications) * (est.replications - 1)));
    }
    return est;
}

std::vector<Estimate> price_strikes(const MarketSpec& spec, const Construction& c,
                                    const SamplerSpec& sampler, int reps,
                                    const std::vector<double>& strikes, int threads) {
    spec.validate();
    check_dimensions(spec, c, sampler);
    require(reps >= 1, "price: need at least one replication");
    require(!strikes.empty(), "price: need at least one strike");
    for (double k : strikes) require(k >= 0.0, "price: strikes must be nonnegative");

    const int mn = spec.path_dim();
    const int n = sampler.n;
    const Vector mu = drift_vector(spec);
    const double disc = std::exp(-spec.rate * spec.maturity);

    const std::function<std::vector<double>(int)> one_replication = [&](int rep) {
        const PointSet pts = generate_points(sampler, rep);
        const Matrix e = to_normal(pts);
        std::vector<detail::KahanSum> sums(strikes.size());
        Matrix z;
        for (int row0 = 0; row0 < n; row0 += kChunkRows) {
            const int rows = std::min(kChunkRows, n - row0);
            z.noalias() = e.middleRows(row0, rows).leftCols(mn) * c.c.transpose();
            z.rowwise() += mu.transpose();
            z.array() = z.array().exp();
            const Vector g = z.rowwise().sum();
            for (std::size_t s = 0; s < strikes.size(); ++s) {
                detail::KahanSum& acc = sums[s];
                const double strike = strikes[s];
                for (int r = 0; r < rows; ++r) acc.add(std::max(g(r) - strike, 0.0));
            }
        }
        std::vector<double> means(strikes.size());
        for (std::size_t s = 0; s < strikes.size(); ++s) means[s] = disc * sums[s].sum / n;
        return means;
    };

    const std::vector<std::vector<double>> per_rep =
        detail::run_replications<std::vector<double>>(reps, threads, one_replication);

    std::vector<Estimate> out(strikes.size());
    std::vector<double> thetas(reps);
    for (std::size_t s = 0; s < strikes.size(); ++s) {
        for (int r = 0; r < reps; ++r) thetas[r] = per_rep[r][s];
        out[s] = summarize_replications(thetas, n);
    }
    return out;
}

Estimate price(const MarketSpec& spec, const Construction& c, const SamplerSpec& sampler, int reps,
               int threads) {
    return price_strikes(spec, c, sampler, reps, {spec.strike}, threads).front();
}

std::vector<PriceCell> price_grid(const MarketSpec& spec,
                                  const std::vector<Construction>& constructions,
                                  const std::vector<SamplerSpec>& samplers,
                                  const std::vector<double>& strikes, int reps, int threads) {
    require(!constructions.empty() && !samplers.empty() && !strikes.empty(),
            "price_grid: empty selection");
    std::vector<PriceCell> cells;
    cells.reserve(constructions.size() * samplers.size() * strikes.size());
    for (const Construction& c : constructions) {
        for (const SamplerSpec& sampler : samplers) {
            std::vector<Estimate> estimates;
            std::string error;
            try {
                estimates = price_strikes(spec, c, sampler, reps, strikes, threads);
            } catch (const std::exception& e) {
                error = e.what();
            }
            for (std::size_t s = 0; s < strikes.size(); ++s) {
                PriceCell cell;
                cell.method = c.method;
                cell.sampler = sampler.kind;
                cell.strike = strikes[s];
                if (error.empty())
                    cell.estimate = estimates[s];
                else
                    cell.error = error;
                cells.push_back(std::move(cell));
            }
        }
    }
    return cells;
}

}  // namespace qmcbasket
