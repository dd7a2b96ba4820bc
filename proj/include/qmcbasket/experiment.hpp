#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qmcbasket/market_model.hpp"
#include "qmcbasket/path_construction.hpp"
#include "qmcbasket/sampling.hpp"

namespace qmcbasket {

inline constexpr const char* kVersion = "0.1.0";

enum class Task { Price, Delta, Effdim, Dump };

std::string to_string(Task task);
Task task_from_string(const std::string& name);

/// Batch experiment description. A config fully determines the report bytes:
/// there is no wall-clock seeding and thread count never changes results.
struct ExperimentConfig {
    MarketSpec market = default_market(0.0, 100.0, 250);
    std::vector<Method> constructions{Method::CH, Method::PCA, Method::LT, Method::KPA};
    std::vector<SamplerKind> samplers{SamplerKind::Mc, SamplerKind::Lhs,
                                      SamplerKind::RqmcHybrid};
    std::vector<double> strikes{100.0};
    /// Correlation sweep. Each value replaces market.corr with an
    /// equicorrelation matrix; leave empty to price market.corr as given.
    std::vector<double> rhos{0.0, 0.4};
    int n = 8192;
    int reps = 10;
    std::uint64_t seed = 12345;
    int threads = 1;
    int lt_columns = 50;
    double effdim_threshold = 0.99;
    Task task = Task::Price;
    std::string out = "report";
    std::string format = "csv";
    bool dump_points = false;
    /// Shrinks the run for smoke tests: uniform 25-date grid, n = 1024.
    bool quick = false;
};

void to_json(nlohmann::json& j, const ExperimentConfig& config);
void from_json(const nlohmann::json& j, ExperimentConfig& config);

ExperimentConfig default_config();

/// Parses a JSON config file; absent keys keep their defaults.
ExperimentConfig load_config(const std::string& path);

/// Copy of `market` with an equicorrelation matrix of parameter rho.
MarketSpec with_equicorrelation(const MarketSpec& market, double rho);

/// Copy of `market` on a uniform grid of `monitoring` dates with equal
/// weights. Requires the input weights to be equal (anything else has no
/// canonical regridding).
MarketSpec regrid_uniform(const MarketSpec& market, int monitoring);

/// Runs the configured task, writes the report file(s) next to config.out,
/// prints a rounded summary table, and returns the process exit status
/// (0 = success). Configuration problems throw std::invalid_argument and
/// numerical failures that abort the whole run throw std::domain_error;
/// per-cell failures (e.g. KPA unavailable) are recorded in the report.
int run(const ExperimentConfig& config);

}  // namespace qmcbasket
