#ifndef QMCBASKET_PRICING_ENGINE_HPP
#define QMCBASKET_PRICING_ENGINE_HPP

#include <string>
#include <vector>

#include "qmcbasket/market_model.hpp"
#include "qmcbasket/path_construction.hpp"
#include "qmcbasket/sampling.hpp"

namespace qmcbasket {

/// Replicated simulation result: the estimate is the mean of independent
/// replication means, rmse its standard error across replications.
struct Estimate {
    double value = 0.0;
    double rmse = 0.0;
    int replications = 0;
    int paths_per_replication = 0;
    std::vector<double> per_replication;
};

/// Mean and standard error sqrt(sum (x_r - mean)^2 / (R (R-1))) over the
/// replication values; rmse is 0 for a single replication.
Estimate summarize_replications(const std::vector<double>& values, int paths_per_replication);

/// Price the basket option by simulating `reps` independent replications of
/// sampler.n paths each.  The sampler dimension must be M N, or M N + M when
/// the point set is shared with the delta estimator (the trailing columns
/// are ignored here).  Replications may run on `threads` workers; results
/// are reduced in replication order and do not depend on the thread count.
Estimate price(const MarketSpec& spec, const Construction& c, const SamplerSpec& sampler,
               int reps, int threads = 1);

/// One pass over the paths pricing several strikes at once (the drift and
/// the transformed paths are strike independent).
std::vector<Estimate> price_strikes(const MarketSpec& spec, const Construction& c,
                                    const SamplerSpec& sampler, int reps,
                                    const std::vector<double>& strikes, int threads = 1);

struct PriceCell {
    Method method = Method::CH;
    SamplerKind sampler = SamplerKind::Mc;
    double strike = 0.0;
    Estimate estimate;
    std::string error;  // nonempty if this cell failed
};

/// Full (construction x sampler x strike) grid on one market.  Each
/// construction is reused across samplers and strikes; a failing cell is
/// recorded with its error message instead of aborting the grid.
std::vector<PriceCell> price_grid(const MarketSpec& spec,
                                  const std::vector<Construction>& constructions,
                                  const std::vector<SamplerSpec>& samplers,
                                  const std::vector<double>& strikes, int reps, int threads = 1);

}  // namespace qmcbasket

#endif
