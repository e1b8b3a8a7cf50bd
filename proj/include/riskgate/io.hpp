#pragma once

#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "riskgate/engine.hpp"
#include "riskgate/errors.hpp"
#include "riskgate/market.hpp"
#include "riskgate/matrix.hpp"
#include "riskgate/scenario.hpp"
#include "riskgate/tolerance.hpp"

namespace riskgate {

using json = nlohmann::ordered_json;

namespace detail {

inline double require_number(const json& j, const char* field, const std::string& where) {
    if (!j.contains(field) || !j[field].is_number())
        throw SchemaError("missing or non-numeric field '" + std::string(field) + "' " +
                          where);
    return j[field].get<double>();
}

inline std::vector<double> require_number_array(const json& j, const char* field,
                                                const std::string& where) {
    if (!j.contains(field) || !j[field].is_array())
        throw SchemaError("missing or non-array field '" + std::string(field) + "' " +
                          where);
    std::vector<double> out;
    out.reserve(j[field].size());
    for (const auto& v : j[field]) {
        if (!v.is_number())
            throw SchemaError("non-numeric entry in '" + std::string(field) + "' " + where);
        out.push_back(v.get<double>());
    }
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// market model files

inline json model_to_json(const MarketModel& model) {
    json j;
    j["n_securities"] = model.n_securities;
    j["n_factors"] = model.n_factors;
    j["n_paths"] = model.n_paths;
    j["times"] = model.times;
    j["money_market_index"] = model.money_market_index;
    json paths = json::array();
    for (std::size_t p = 0; p < model.n_paths; ++p) {
        json row = json::array();
        for (std::size_t k = 0; k < model.n_times(); ++k) {
            const MarketSample& s = model.sample(p, k);
            json sample;
            sample["S"] = s.prices;
            sample["mu"] = s.drifts;
            sample["sigma"] = s.dispersion.data();  // row-major
            sample["r"] = s.short_rate;
            sample["M"] = s.deflator;
            sample["D"] = s.cum_dividends;
            row.push_back(std::move(sample));
        }
        paths.push_back(std::move(row));
    }
    j["samples"] = std::move(paths);
    if (model.wiener_increments) j["dW"] = *model.wiener_increments;
    if (model.seed) j["seed"] = *model.seed;
    return j;
}

inline MarketModel model_from_json(const json& j) try {
    MarketModel model;
    if (!j.is_object()) throw SchemaError("model file: top level is not an object");
    for (const char* field : {"n_securities", "n_factors", "n_paths"})
        if (!j.contains(field) || !j[field].is_number_unsigned())
            throw SchemaError(std::string("model file: missing count field '") + field +
                              "'");
    model.n_securities = j["n_securities"].get<std::size_t>();
    model.n_factors = j["n_factors"].get<std::size_t>();
    model.n_paths = j["n_paths"].get<std::size_t>();
    model.times = detail::require_number_array(j, "times", "(top level)");
    if (j.contains("money_market_index"))
        model.money_market_index = j["money_market_index"].get<std::size_t>();
    if (!j.contains("samples") || !j["samples"].is_array())
        throw SchemaError("model file: missing 'samples' array");
    const auto& paths = j["samples"];
    if (paths.size() != model.n_paths)
        throw SchemaError("model file: 'samples' has " + std::to_string(paths.size()) +
                          " paths, header says " + std::to_string(model.n_paths));
    model.samples.resize(model.n_paths);
    for (std::size_t p = 0; p < model.n_paths; ++p) {
        if (!paths[p].is_array() || paths[p].size() != model.times.size())
            throw SchemaError("model file: path " + std::to_string(p) +
                              " sample count vs times");
        model.samples[p].resize(model.times.size());
        for (std::size_t k = 0; k < model.times.size(); ++k) {
            const std::string where =
                "(path " + std::to_string(p) + ", t_index " + std::to_string(k) + ")";
            const auto& js = paths[p][k];
            if (!js.is_object()) throw SchemaError("model file: sample " + where);
            MarketSample s;
            s.prices = detail::require_number_array(js, "S", where);
            s.drifts = detail::require_number_array(js, "mu", where);
            s.cum_dividends = detail::require_number_array(js, "D", where);
            s.short_rate = detail::require_number(js, "r", where);
            s.deflator = detail::require_number(js, "M", where);
            const std::vector<double> flat =
                detail::require_number_array(js, "sigma", where);
            if (flat.size() != model.n_securities * model.n_factors)
                throw SchemaError("model file: sigma length " +
                                  std::to_string(flat.size()) + " " + where);
            if (s.prices.size() != model.n_securities ||
                s.drifts.size() != model.n_securities ||
                s.cum_dividends.size() != model.n_securities)
                throw SchemaError("model file: vector length " + where);
            s.dispersion = RealMatrix(model.n_securities, model.n_factors);
            s.dispersion.data() = flat;
            model.samples[p][k] = std::move(s);
        }
    }
    if (j.contains("dW")) {
        model.wiener_increments =
            j["dW"].get<std::vector<std::vector<std::vector<double>>>>();
    }
    if (j.contains("seed")) model.seed = j["seed"].get<std::uint64_t>();
    return model;
} catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("model file: ") + e.what());
}

// ---------------------------------------------------------------------------
// strategy, certificate, report

inline json strategy_to_json(const TradingStrategy& s) {
    json j;
    j["holdings"] = s.holdings;
    return j;
}

inline TradingStrategy strategy_from_json(const json& j) {
    if (!j.is_object() || !j.contains("holdings") || !j["holdings"].is_array())
        throw SchemaError("strategy file: missing 'holdings' array");
    TradingStrategy s;
    try {
        s.holdings = j["holdings"].get<std::vector<std::vector<std::vector<double>>>>();
    } catch (const nlohmann::json::exception&) {
        throw SchemaError("strategy file: 'holdings' is not a [path][time][security] grid");
    }
    for (const auto& path : s.holdings) {
        if (path.size() != s.n_times())
            throw SchemaError("strategy file: ragged time grid");
        for (const auto& h : path)
            if (!all_finite(h)) throw SchemaError("strategy file: non-finite holding");
    }
    return s;
}

inline json certificate_to_json(const GenerationCertificate& c) {
    json j;
    j["planted_lambda"] = c.planted_lambda;
    json injected = json::array();
    for (const GridIndex& g : c.injected) injected.push_back({g.path, g.t_index});
    j["injected"] = std::move(injected);
    return j;
}

inline GenerationCertificate certificate_from_json(const json& j) try {
    GenerationCertificate c;
    if (!j.is_object() || !j.contains("planted_lambda") || !j.contains("injected"))
        throw SchemaError("certificate file: missing fields");
    c.planted_lambda =
        j["planted_lambda"].get<std::vector<std::vector<std::vector<double>>>>();
    for (const auto& pair : j["injected"]) {
        if (!pair.is_array() || pair.size() != 2)
            throw SchemaError("certificate file: bad injected entry");
        c.injected.push_back({pair[0].get<std::size_t>(), pair[1].get<std::size_t>()});
    }
    return c;
} catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("certificate file: ") + e.what());
}

inline json report_to_json(const AnalysisReport& report) {
    json verdicts = json::array();
    for (std::size_t p = 0; p < report.verdicts.size(); ++p)
        for (std::size_t k = 0; k < report.verdicts[p].size(); ++k) {
            const SampleVerdict& v = report.verdicts[p][k];
            json entry;
            entry["path"] = p;
            entry["t_index"] = k;
            entry["status"] = v.free() ? "free" : "violated";
            entry["residual"] = v.membership_residual;
            entry["marginal"] = v.marginal;
            if (v.free()) {
                entry["psi"] = v.psi;
                entry["lambda_star"] = v.lambda_star;
            } else {
                entry["z"] = v.certificate_z;
                entry["theta"] = v.theta;
                entry["excess_margin"] = v.excess_margin;
            }
            verdicts.push_back(std::move(entry));
        }

    const auto index_list = [](const std::vector<GridIndex>& v) {
        json out = json::array();
        for (const GridIndex& g : v) out.push_back({g.path, g.t_index});
        return out;
    };
    json rate = json::array();
    for (const RateComparisonRecord& r : report.rate_consistency) {
        json entry;
        entry["account_a"] = r.account_a;
        entry["account_b"] = r.account_b;
        entry["consistent"] = r.consistent;
        entry["max_rate_gap"] = r.max_rate_gap;
        rate.push_back(std::move(entry));
    }
    json summary;
    summary["free_count"] = report.free_count;
    summary["violated_count"] = report.violated_count;
    summary["violated"] = index_list(report.violated);
    summary["marginal"] = index_list(report.marginal);
    summary["zero_variance_free"] = index_list(report.zero_variance_free);
    summary["max_capm_residual"] = report.max_capm_residual;
    summary["max_price_of_risk_norm"] = report.max_price_of_risk_norm;
    summary["rate_consistency"] = std::move(rate);
    summary["exit_status"] = report.exit_status;

    json j;
    j["verdicts"] = std::move(verdicts);
    j["summary"] = std::move(summary);
    return j;
}

/// One row per sample, stable column order. Vector-valued witnesses live in
/// the JSON report; CSV carries the scalar verdict columns.
inline std::string report_to_csv(const AnalysisReport& report) {
    std::ostringstream out;
    out << "path,t_index,status,residual,marginal,excess_margin\n";
    out.precision(17);
    for (std::size_t p = 0; p < report.verdicts.size(); ++p)
        for (std::size_t k = 0; k < report.verdicts[p].size(); ++k) {
            const SampleVerdict& v = report.verdicts[p][k];
            out << p << ',' << k << ',' << (v.free() ? "free" : "violated") << ','
                << v.membership_residual << ',' << (v.marginal ? 1 : 0) << ','
                << v.excess_margin << '\n';
        }
    return out.str();
}

// ---------------------------------------------------------------------------
// files

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path + ": " + e.what());
    }
    return j;
}

inline void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << j.dump(2) << '\n';
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << text;
}

/// Loads and fully validates a market model file. ParseError for malformed
/// JSON, SchemaError for missing fields or shape mismatches, InvariantError
/// for violated sample/grid invariants, each located by (path, time, field).
inline MarketModel ingest(const std::string& path, const ToleranceConfig& tol = {}) {
    const MarketModel model = model_from_json(read_json_file(path));
    validate_model(model, tol);
    return model;
}

}  // namespace riskgate
