#include "qmcbasket/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>

#include "qmcbasket/greeks.hpp"
#include "qmcbasket/pricing_engine.hpp"

namespace qmcbasket {

namespace {

void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string rho_label(double rho) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%g", rho);
    return buf;
}

std::string pad(std::string s, std::size_t width) {
    if (s.size() < width) s.append(width - s.size(), ' ');
    return s;
}

bool ends_with(const std::string& s, const char* suffix) {
    const std::size_t len = std::strlen(suffix);
    return s.size() >= len && s.compare(s.size() - len, len, suffix) == 0;
}

std::string report_path(const ExperimentConfig& config) {
    const std::string suffix = "." + config.format;
    return ends_with(config.out, suffix.c_str()) ? config.out : config.out + suffix;
}

std::string dump_prefix(const ExperimentConfig& config) {
    std::string base = config.out;
    for (const char* suffix : {".csv", ".json"})
        if (ends_with(base, suffix)) {
            base.resize(base.size() - std::strlen(suffix));
            break;
        }
    return base;
}

std::string csv_quote(const std::string& s) {
    if (s.empty()) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << text;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + path);
}

void write_matrix_csv(const std::string& path, const Matrix& m) {
    std::string text;
    text.reserve(static_cast<std::size_t>(m.size()) * 20 + 16);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j > 0) text += ',';
            text += fmt(m(i, j));
        }
        text += '\n';
    }
    write_text(path, text);
}

struct Built {
    Method method = Method::CH;
    std::optional<Construction> c;
    std::string error;
};

std::vector<Built> build_constructions(const MarketSpec& spec,
                                       const std::vector<Method>& methods, int lt_columns) {
    const BlockBoomerangMatrix blocks = build_covariance_blocks(spec);
    const Vector mu = drift_vector(spec);
    const BoomerangMatrix time_grid{spec.times};
    std::vector<Built> out;
    out.reserve(methods.size());
    for (Method method : methods) {
        Built b;
        b.method = method;
        try {
            switch (method) {
                case Method::CH: b.c = build_ch(blocks); break;
                case Method::PCA: b.c = build_pca(blocks); break;
                case Method::LT:
                    b.c = build_lt(blocks, mu, std::min(lt_columns, spec.path_dim()));
                    break;
                case Method::KPA: b.c = build_kpa(blocks, time_grid); break;
            }
        } catch (const std::exception& e) {
            b.error = e.what();
        }
        out.push_back(std::move(b));
    }
    return out;
}

struct PriceRow {
    double rho = 0.0;
    Method method = Method::CH;
    SamplerKind sampler = SamplerKind::Mc;
    double strike = 0.0;
    double price = std::numeric_limits<double>::quiet_NaN();
    double rmse = std::numeric_limits<double>::quiet_NaN();
    std::string error;
};

struct DeltaRow {
    double rho = 0.0;
    Method method = Method::CH;
    SamplerKind sampler = SamplerKind::Mc;
    double strike = 0.0;
    int k = 0;
    double delta = std::numeric_limits<double>::quiet_NaN();
    double rmse = std::numeric_limits<double>::quiet_NaN();
    std::string error;
};

struct EffdimRow {
    double rho = 0.0;
    Method method = Method::CH;
    int d_t = 0;
    std::string error;
};

using Markets = std::vector<std::pair<double, MarketSpec>>;

void dump_point_sets(const ExperimentConfig& config, const MarketSpec& spec) {
    const std::string prefix = dump_prefix(config);
    for (SamplerKind kind : config.samplers) {
        SamplerSpec sampler;
        sampler.kind = kind;
        sampler.n = config.n;
        sampler.d = spec.path_dim();
        sampler.seed = config.seed;
        const PointSet pts = generate_points(sampler, 0);
        const std::string path = prefix + "_points_" + to_string(kind) + ".csv";
        write_matrix_csv(path, pts.u);
        std::cout << "wrote " << path << "\n";
    }
}

nlohmann::json base_report(const ExperimentConfig& config) {
    nlohmann::json j;
    j["version"] = kVersion;
    j["task"] = to_string(config.task);
    j["config"] = config;
    // execution detail, not experiment identity: the same seed must produce
    // byte-identical reports at any thread count
    j["config"].erase("threads");
    return j;
}

int run_price(const ExperimentConfig& config, const Markets& markets) {
    std::vector<PriceRow> rows;
    for (const auto& [rho, spec] : markets) {
        const std::vector<Built> built =
            build_constructions(spec, config.constructions, config.lt_columns);
        for (const Built& b : built) {
            for (SamplerKind kind : config.samplers) {
                SamplerSpec sampler;
                sampler.kind = kind;
                sampler.n = config.n;
                sampler.d = spec.path_dim();
                sampler.seed = config.seed;
                auto fail = [&](const std::string& why) {
                    for (double strike : config.strikes) {
                        PriceRow row;
                        row.rho = rho;
                        row.method = b.method;
                        row.sampler = kind;
                        row.strike = strike;
                        row.error = why;
                        rows.push_back(std::move(row));
                    }
                };
                if (!b.c) {
                    fail(b.error);
                    continue;
                }
                try {
                    const std::vector<Estimate> est = price_strikes(
                        spec, *b.c, sampler, config.reps, config.strikes, config.threads);
                    for (std::size_t s = 0; s < config.strikes.size(); ++s) {
                        PriceRow row;
                        row.rho = rho;
                        row.method = b.method;
                        row.sampler = kind;
                        row.strike = config.strikes[s];
                        row.price = est[s].value;
                        row.rmse = est[s].rmse;
                        rows.push_back(std::move(row));
                    }
                } catch (const std::exception& e) {
                    fail(e.what());
                }
            }
        }
    }

    const std::string path = report_path(config);
    if (config.format == "csv") {
        std::string csv = "sampler,construction,rho,strike,price,rmse,reps,n,seed,error\n";
        for (const PriceRow& row : rows) {
            csv += to_string(row.sampler);
            csv += ',';
            csv += to_string(row.method);
            csv += ',';
            csv += fmt(row.rho);
            csv += ',';
            csv += fmt(row.strike);
            csv += ',';
            csv += fmt(row.price);
            csv += ',';
            csv += fmt(row.rmse);
            csv += ',';
            csv += std::to_string(config.reps);
            csv += ',';
            csv += std::to_string(config.n);
            csv += ',';
            csv += std::to_string(config.seed);
            csv += ',';
            csv += csv_quote(row.error);
            csv += '\n';
        }
        write_text(path, csv);
    } else {
        nlohmann::json j = base_report(config);
        nlohmann::json arr = nlohmann::json::array();
        for (const PriceRow& row : rows) {
            nlohmann::json obj{{"sampler", to_string(row.sampler)},
                               {"construction", to_string(row.method)},
                               {"rho", row.rho},
                               {"strike", row.strike},
                               {"reps", config.reps},
                               {"n", config.n},
                               {"seed", config.seed}};
            if (row.error.empty()) {
                obj["price"] = row.price;
                obj["rmse"] = row.rmse;
            } else {
                obj["price"] = nullptr;
                obj["rmse"] = nullptr;
                obj["error"] = row.error;
            }
            arr.push_back(std::move(obj));
        }
        j["rows"] = std::move(arr);
        write_text(path, j.dump(2) + "\n");
    }
    std::cout << "report written: " << path << "\n";

    for (const auto& [rho, spec] : markets) {
        (void)spec;
        for (double strike : config.strikes) {
            std::cout << "\n[price] rho=" << rho_label(rho) << " strike=" << rho_label(strike)
                      << " (n=" << config.n << ", reps=" << config.reps
                      << ", seed=" << config.seed << ")\n";
            std::string header = pad("construction", 14);
            for (SamplerKind kind : config.samplers) header += pad(to_string(kind), 22);
            std::cout << header << "\n";
            for (Method method : config.constructions) {
                std::string line = pad(to_string(method), 14);
                for (SamplerKind kind : config.samplers) {
                    std::string cell = "(failed)";
                    for (const PriceRow& row : rows)
                        if (row.rho == rho && row.strike == strike && row.method == method &&
                            row.sampler == kind && row.error.empty())
                            cell = fmt_fixed(row.price, 5) + " (" + fmt_fixed(row.rmse, 5) + ")";
                    line += pad(cell, 22);
                }
                std::cout << line << "\n";
            }
        }
    }
    return 0;
}

int run_delta(const ExperimentConfig& config, const Markets& markets) {
    std::vector<DeltaRow> rows;
    for (const auto& [rho, spec0] : markets) {
        const std::vector<Built> built =
            build_constructions(spec0, config.constructions, config.lt_columns);
        const int m = spec0.asset_count();
        for (double strike : config.strikes) {
            MarketSpec spec = spec0;
            spec.strike = strike;
            for (const Built& b : built) {
                for (SamplerKind kind : config.samplers) {
                    SamplerSpec sampler;
                    sampler.kind = kind;
                    sampler.n = config.n;
                    sampler.d = spec.path_dim() + m;
                    sampler.seed = config.seed;
                    auto fail = [&](const std::string& why) {
                        for (int k = 1; k <= m; ++k) {
                            DeltaRow row;
                            row.rho = rho;
                            row.method = b.method;
                            row.sampler = kind;
                            row.strike = strike;
                            row.k = k;
                            row.error = why;
                            rows.push_back(std::move(row));
                        }
                    };
                    if (!b.c) {
                        fail(b.error);
                        continue;
                    }
                    try {
                        const std::vector<Estimate> est =
                            estimate_deltas(spec, *b.c, sampler, config.reps, config.threads);
                        for (int k = 1; k <= m; ++k) {
                            DeltaRow row;
                            row.rho = rho;
                            row.method = b.method;
                            row.sampler = kind;
                            row.strike = strike;
                            row.k = k;
                            row.delta = est[k - 1].value;
                            row.rmse = est[k - 1].rmse;
                            rows.push_back(std::move(row));
                        }
                    } catch (const std::exception& e) {
                        fail(e.what());
                    }
                }
            }
        }
    }

    const std::string path = report_path(config);
    if (config.format == "csv") {
        std::string csv = "sampler,construction,rho,strike,k,delta,rmse,reps,n,seed,error\n";
        for (const DeltaRow& row : rows) {
            csv += to_string(row.sampler);
            csv += ',';
            csv += to_string(row.method);
            csv += ',';
            csv += fmt(row.rho);
            csv += ',';
            csv += fmt(row.strike);
            csv += ',';
            csv += std::to_string(row.k);
            csv += ',';
            csv += fmt(row.delta);
            csv += ',';
            csv += fmt(row.rmse);
            csv += ',';
            csv += std::to_string(config.reps);
            csv += ',';
            csv += std::to_string(config.n);
            csv += ',';
            csv += std::to_string(config.seed);
            csv += ',';
            csv += csv_quote(row.error);
            csv += '\n';
        }
        write_text(path, csv);
    } else {
        nlohmann::json j = base_report(config);
        nlohmann::json arr = nlohmann::json::array();
        for (const DeltaRow& row : rows) {
            nlohmann::json obj{{"sampler", to_string(row.sampler)},
                               {"construction", to_string(row.method)},
                               {"rho", row.rho},
                               {"strike", row.strike},
                               {"k", row.k},
                               {"reps", config.reps},
                               {"n", config.n},
                               {"seed", config.seed}};
            if (row.error.empty()) {
                obj["delta"] = row.delta;
                obj["rmse"] = row.rmse;
            } else {
                obj["delta"] = nullptr;
                obj["rmse"] = nullptr;
                obj["error"] = row.error;
            }
            arr.push_back(std::move(obj));
        }
        j["rows"] = std::move(arr);
        write_text(path, j.dump(2) + "\n");
    }
    std::cout << "report written: " << path << "\n";

    const int m = markets.front().second.asset_count();
    for (const auto& [rho, spec] : markets) {
        (void)spec;
        for (SamplerKind kind : config.samplers) {
            for (double strike : config.strikes) {
                std::cout << "\n[delta] rho=" << rho_label(rho) << " sampler=" << to_string(kind)
                          << " strike=" << rho_label(strike) << "\n";
                std::string header = pad("k", 5);
                for (Method method : config.constructions) header += pad(to_string(method), 24);
                std::cout << header << "\n";
                for (int k = 1; k <= m; ++k) {
                    std::string line = pad(std::to_string(k), 5);
                    for (Method method : config.constructions) {
                        std::string cell = "(failed)";
                        for (const DeltaRow& row : rows)
                            if (row.rho == rho && row.strike == strike && row.method == method &&
                                row.sampler == kind && row.k == k && row.error.empty())
                                cell = fmt_fixed(row.delta, 6) + " (" + fmt_fixed(row.rmse, 6) +
                                       ")";
                        line += pad(cell, 24);
                    }
                    std::cout << line << "\n";
                }
            }
        }
    }
    return 0;
}

int run_effdim(const ExperimentConfig& config, const Markets& markets) {
    std::vector<EffdimRow> rows;
    for (const auto& [rho, spec] : markets) {
        const std::vector<Built> built =
            build_constructions(spec, config.constructions, config.lt_columns);
        const Vector mu = drift_vector(spec);
        for (const Built& b : built) {
            EffdimRow row;
            row.rho = rho;
            row.method = b.method;
            if (!b.c) {
                row.error = b.error;
            } else {
                try {
                    row.d_t = effective_truncation_dimension(*b.c, mu, config.effdim_threshold);
                } catch (const std::exception& e) {
                    row.error = e.what();
                }
            }
            rows.push_back(std::move(row));
        }
    }

    const std::string path = report_path(config);
    if (config.format == "csv") {
        std::string csv = "construction,rho,p,d_t,error\n";
        for (const EffdimRow& row : rows) {
            csv += to_string(row.method);
            csv += ',';
            csv += fmt(row.rho);
            csv += ',';
            csv += fmt(config.effdim_threshold);
            csv += ',';
            csv += row.error.empty() ? std::to_string(row.d_t) : std::string();
            csv += ',';
            csv += csv_quote(row.error);
            csv += '\n';
        }
        write_text(path, csv);
    } else {
        nlohmann::json j = base_report(config);
        nlohmann::json arr = nlohmann::json::array();
        for (const EffdimRow& row : rows) {
            nlohmann::json obj{{"construction", to_string(row.method)},
                               {"rho", row.rho},
                               {"p", config.effdim_threshold}};
            if (row.error.empty()) {
                obj["d_t"] = row.d_t;
            } else {
                obj["d_t"] = nullptr;
                obj["error"] = row.error;
            }
            arr.push_back(std::move(obj));
        }
        j["rows"] = std::move(arr);
        write_text(path, j.dump(2) + "\n");
    }
    std::cout << "report written: " << path << "\n";

    std::cout << "\n[effdim] p=" << rho_label(config.effdim_threshold) << "\n";
    std::string header = pad("construction", 14);
    for (const auto& [rho, spec] : markets) {
        (void)spec;
        header += pad("rho=" + rho_label(rho), 12);
    }
    std::cout << header << "\n";
    for (Method method : config.constructions) {
        std::string line = pad(to_string(method), 14);
        for (const auto& [rho, spec] : markets) {
            (void)spec;
            std::string cell = "(failed)";
            for (const EffdimRow& row : rows)
                if (row.rho == rho && row.method == method && row.error.empty())
                    cell = std::to_string(row.d_t);
            line += pad(cell, 12);
        }
        std::cout << line << "\n";
    }
    return 0;
}

int run_dump(const ExperimentConfig& config, const Markets& markets) {
    const std::string prefix = dump_prefix(config);
    for (const auto& [rho, spec] : markets) {
        const std::string rp = prefix + "_rho" + rho_label(rho);
        const BlockBoomerangMatrix blocks = build_covariance_blocks(spec);
        write_matrix_csv(rp + "_sigma.csv", blocks.assemble());
        std::cout << "wrote " << rp << "_sigma.csv\n";
        const std::vector<Built> built =
            build_constructions(spec, config.constructions, config.lt_columns);
        for (const Built& b : built) {
            if (!b.c) {
                std::cout << to_string(b.method) << " unavailable: " << b.error << "\n";
                continue;
            }
            const std::string path = rp + "_factor_" + to_string(b.method) + ".csv";
            write_matrix_csv(path, b.c->c);
            std::cout << "wrote " << path << "\n";
        }
    }
    if (config.dump_points) dump_point_sets(config, markets.front().second);
    return 0;
}

}  // namespace

std::string to_string(Task task) {
    switch (task) {
        case Task::Price: return "price";
        case Task::Delta: return "delta";
        case Task::Effdim: return "effdim";
        case Task::Dump: return "dump";
    }
    throw std::invalid_argument("unknown task value");
}

Task task_from_string(const std::string& name) {
    std::string lower;
    for (char c : name) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (lower == "price") return Task::Price;
    if (lower == "delta") return Task::Delta;
    if (lower == "effdim") return Task::Effdim;
    if (lower == "dump") return Task::Dump;
    throw std::invalid_argument("unknown task '" + name +
                                "' (expected price, delta, effdim, or dump)");
}

void to_json(nlohmann::json& j, const ExperimentConfig& config) {
    std::vector<std::string> constructions, samplers;
    for (Method method : config.constructions) constructions.emplace_back(to_string(method));
    for (SamplerKind kind : config.samplers) samplers.emplace_back(to_string(kind));
    j = nlohmann::json{{"market", config.market},
                       {"constructions", constructions},
                       {"samplers", samplers},
                       {"strikes", config.strikes},
                       {"rhos", config.rhos},
                       {"n", config.n},
                       {"reps", config.reps},
                       {"seed", config.seed},
                       {"threads", config.threads},
                       {"lt_columns", config.lt_columns},
                       {"effdim_threshold", config.effdim_threshold},
                       {"task", to_string(config.task)},
                       {"out", config.out},
                       {"format", config.format},
                       {"dump_points", config.dump_points},
                       {"quick", config.quick}};
}

void from_json(const nlohmann::json& j, ExperimentConfig& config) {
    if (j.contains("market")) config.market = j.at("market").get<MarketSpec>();
    if (j.contains("constructions")) {
        config.constructions.clear();
        for (const auto& name : j.at("constructions"))
            config.constructions.push_back(method_from_string(name.get<std::string>()));
    }
    if (j.contains("samplers")) {
        config.samplers.clear();
        for (const auto& name : j.at("samplers"))
            config.samplers.push_back(sampler_kind_from_string(name.get<std::string>()));
    }
    if (j.contains("strikes")) config.strikes = j.at("strikes").get<std::vector<double>>();
    if (j.contains("rhos")) config.rhos = j.at("rhos").get<std::vector<double>>();
    if (j.contains("n")) config.n = j.at("n").get<int>();
    if (j.contains("reps")) config.reps = j.at("reps").get<int>();
    if (j.contains("seed")) config.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("threads")) config.threads = j.at("threads").get<int>();
    if (j.contains("lt_columns")) config.lt_columns = j.at("lt_columns").get<int>();
    if (j.contains("effdim_threshold"))
        config.effdim_threshold = j.at("effdim_threshold").get<double>();
    if (j.contains("task")) config.task = task_from_string(j.at("task").get<std::string>());
    if (j.contains("out")) config.out = j.at("out").get<std::string>();
    if (j.contains("format")) config.format = j.at("format").get<std::string>();
    if (j.contains("dump_points")) config.dump_points = j.at("dump_points").get<bool>();
    if (j.contains("quick")) config.quick = j.at("quick").get<bool>();
}

ExperimentConfig default_config() { return ExperimentConfig{}; }

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file '" + path + "'");
    const nlohmann::json j = nlohmann::json::parse(in);
    return j.get<ExperimentConfig>();
}

MarketSpec with_equicorrelation(const MarketSpec& market, double rho) {
    MarketSpec out = market;
    const int m = market.asset_count();
    out.corr = Matrix::Constant(m, m, rho);
    out.corr.diagonal().setOnes();
    return out;
}

MarketSpec regrid_uniform(const MarketSpec& market, int monitoring) {
    require(monitoring >= 1, "regrid_uniform: need at least one monitoring date");
    const int m = market.asset_count();
    const int n = market.monitoring_count();
    const double w = 1.0 / (static_cast<double>(m) * n);
    if (!((market.weights.array() - w).abs() <= 1e-12 * (1.0 + w)).all())
        throw std::invalid_argument(
            "regrid_uniform: weights are not equal, explicit weights cannot be regridded");
    MarketSpec out = market;
    out.times = Vector::LinSpaced(monitoring, market.maturity / monitoring, market.maturity);
    out.weights = Matrix::Constant(m, monitoring, 1.0 / (static_cast<double>(m) * monitoring));
    return out;
}

int run(const ExperimentConfig& config_in) {
    ExperimentConfig config = config_in;
    require(!config.constructions.empty(), "config: constructions must be non-empty");
    require(config.n >= 1, "config: n must be positive");
    require(config.reps >= 1, "config: reps must be positive");
    require(config.threads >= 1, "config: threads must be positive");
    require(config.lt_columns >= 1, "config: lt_columns must be positive");
    require(config.effdim_threshold > 0.0 && config.effdim_threshold < 1.0,
            "config: effdim_threshold must lie in (0, 1)");
    require(!config.out.empty(), "config: out path must be non-empty");
    require(config.format == "csv" || config.format == "json",
            "config: format must be csv or json");
    const bool needs_samplers =
        config.task == Task::Price || config.task == Task::Delta || config.dump_points;
    if (needs_samplers) require(!config.samplers.empty(), "config: samplers must be non-empty");
    if (config.task == Task::Price || config.task == Task::Delta) {
        require(!config.strikes.empty(), "config: strikes must be non-empty");
        for (double strike : config.strikes)
            require(strike >= 0.0, "config: strikes must be nonnegative");
    }

    if (config.quick) {
        config.market = regrid_uniform(config.market, 25);
        config.n = 1024;
    }

    Markets markets;
    if (config.rhos.empty()) {
        const int m = config.market.asset_count();
        markets.emplace_back(m > 1 ? config.market.corr(0, 1) : 0.0, config.market);
    } else {
        for (double rho : config.rhos)
            markets.emplace_back(rho, with_equicorrelation(config.market, rho));
    }
    for (auto& [rho, spec] : markets) {
        (void)rho;
        spec.validate();
    }

    int status = 0;
    switch (config.task) {
        case Task::Price: status = run_price(config, markets); break;
        case Task::Delta: status = run_delta(config, markets); break;
        case Task::Effdim: status = run_effdim(config, markets); break;
        case Task::Dump: status = run_dump(config, markets); break;
    }
    if (config.dump_points && config.task != Task::Dump)
        dump_point_sets(config, markets.front().second);
    return status;
}

}  // namespace qmcbasket
