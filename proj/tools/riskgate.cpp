// riskgate: instantaneous arbitrage analysis for discretized securities
// market models. Subcommands: gen, analyze, capm, complete, rates.
//
// Exit codes: 0 clean, 2 arbitrage found, 1 usage or input error.

#include <cstdlib>
#include <exception>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "riskgate/riskgate.hpp"

namespace {

constexpr int kExitClean = 0;
constexpr int kExitError = 1;
constexpr int kExitArbitrage = 2;

std::string strip_json_suffix(const std::string& path) {
    const std::string suffix = ".json";
    if (path.size() > suffix.size() &&
        path.compare(path.size() - suffix.size(), suffix.size(), suffix) == 0)
        return path.substr(0, path.size() - suffix.size());
    return path;
}

std::uint64_t seed_fallback() {
    if (const char* env = std::getenv("RISKGATE_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw riskgate::InvalidSpec("RISKGATE_SEED is not an unsigned integer");
        }
    }
    return 0;
}

riskgate::Injection parse_injection(const std::string& text) {
    std::istringstream in(text);
    riskgate::Injection inj;
    char c1 = 0, c2 = 0;
    if (!(in >> inj.path >> c1 >> inj.t_index >> c2 >> inj.strength) || c1 != ',' ||
        c2 != ',')
        throw riskgate::InvalidSpec("--inject expects 'path,t_index,strength', got '" +
                                    text + "'");
    return inj;
}

void write_violations_sidecar(const std::string& model_path,
                              const riskgate::AnalysisReport& report) {
    riskgate::json violations = riskgate::json::array();
    for (const riskgate::GridIndex& idx : report.violated) {
        const riskgate::SampleVerdict& v = report.verdicts[idx.path][idx.t_index];
        riskgate::json entry;
        entry["path"] = idx.path;
        entry["t_index"] = idx.t_index;
        entry["z"] = v.certificate_z;
        entry["theta"] = v.theta;
        entry["excess_margin"] = v.excess_margin;
        entry["residual"] = v.membership_residual;
        entry["marginal"] = v.marginal;
        violations.push_back(std::move(entry));
    }
    riskgate::json j;
    j["violations"] = std::move(violations);
    const std::string path = strip_json_suffix(model_path) + ".violations.json";
    riskgate::write_json_file(path, j);
    std::cerr << "violations written to " << path << "\n";
}

struct CommonOptions {
    riskgate::ToleranceConfig tol;
    std::string out;
    std::string format = "json";
    std::size_t threads = std::max(1u, std::thread::hardware_concurrency());
};

int run_gen(const riskgate::ScenarioSpec& spec_in, bool seed_given,
            const std::vector<std::string>& inject_flags, const std::string& out) {
    riskgate::ScenarioSpec spec = spec_in;
    if (spec.n_securities < 2)
        throw riskgate::InvalidSpec(
            "--securities must be at least 2 (money market plus one risky security)");
    if (!seed_given) spec.seed = seed_fallback();
    for (const std::string& text : inject_flags)
        spec.injections.push_back(parse_injection(text));
    spec.validate();

    auto [model, cert] = riskgate::generate(spec);
    if (!spec.injections.empty())
        std::tie(model, cert) =
            riskgate::inject_arbitrage(std::move(model), std::move(cert), spec.injections);

    riskgate::write_json_file(out, riskgate::model_to_json(model));
    const std::string cert_path = strip_json_suffix(out) + ".cert.json";
    riskgate::write_json_file(cert_path, riskgate::certificate_to_json(cert));
    std::cout << "wrote " << out << " (" << model.n_securities << " securities, "
              << model.n_factors << " factors, " << model.n_paths << " paths x "
              << model.n_times() << " times), " << cert.injected.size()
              << " injection(s); certificate " << cert_path << "\n";
    return kExitClean;
}

int run_analyze(const std::string& model_path, const CommonOptions& opt) {
    const riskgate::MarketModel model = riskgate::ingest(model_path, opt.tol);
    const riskgate::AnalysisReport report =
        riskgate::analyze(model, opt.tol, opt.threads);

    std::string out = opt.out;
    if (out.empty())
        out = strip_json_suffix(model_path) +
              (opt.format == "csv" ? ".report.csv" : ".report.json");
    if (opt.format == "csv")
        riskgate::write_text_file(out, riskgate::report_to_csv(report));
    else
        riskgate::write_json_file(out, riskgate::report_to_json(report));

    std::cout << report.free_count << " free, " << report.violated_count
              << " violated of " << (report.free_count + report.violated_count)
              << " samples; max CAPM residual " << report.max_capm_residual
              << "; report " << out << "\n";
    if (report.violated_count > 0) {
        write_violations_sidecar(model_path, report);
        return kExitArbitrage;
    }
    return kExitClean;
}

int run_capm(const std::string& model_path, const CommonOptions& opt) {
    const riskgate::MarketModel model = riskgate::ingest(model_path, opt.tol);
    std::string out = opt.out;
    if (out.empty()) out = strip_json_suffix(model_path) + ".capm.json";
    try {
        const riskgate::CapmStrategyResult result = riskgate::capm_strategy(model, opt.tol);
        riskgate::json j = riskgate::strategy_to_json(result.strategy);
        j["max_capm_residual"] = result.max_residual;
        riskgate::write_json_file(out, j);
        std::cout << "max CAPM residual " << result.max_residual << "; strategy " << out
                  << "\n";
        return kExitClean;
    } catch (const riskgate::ArbitragePresent& e) {
        std::cerr << e.what() << "\n";
        for (const auto& [p, k] : e.indices())
            std::cerr << "  infeasible at (path " << p << ", t_index " << k << ")\n";
        // the analysis report carries the certificates for these samples
        write_violations_sidecar(model_path,
                                 riskgate::analyze(model, opt.tol, opt.threads));
        return kExitArbitrage;
    }
}

int run_complete(const std::string& model_path, const std::string& strategy_path,
                 const CommonOptions& opt) {
    const riskgate::MarketModel model = riskgate::ingest(model_path, opt.tol);
    const riskgate::TradingStrategy strategy =
        riskgate::strategy_from_json(riskgate::read_json_file(strategy_path));

    const riskgate::TradingStrategy completed =
        riskgate::self_financing_completion(strategy, model);
    const riskgate::StrategyLedger original =
        riskgate::strategy_ledger(strategy, model, /*deflated=*/true);
    const riskgate::StrategyLedger ledger =
        riskgate::strategy_ledger(completed, model, /*deflated=*/true);

    double max_dividend = 0.0, max_value_gap = 0.0;
    for (std::size_t p = 0; p < model.n_paths; ++p)
        for (std::size_t k = 0; k < model.n_times(); ++k) {
            max_dividend = std::max(max_dividend, std::abs(ledger.dividends[p][k]));
            max_value_gap = std::max(
                max_value_gap, std::abs(ledger.value[p][k] - original.gains[p][k]));
        }

    std::string out = opt.out;
    if (out.empty()) out = strip_json_suffix(strategy_path) + ".completed.json";
    riskgate::write_json_file(out, riskgate::strategy_to_json(completed));
    std::cout << "max |deflated dividends| " << max_dividend
              << "; max |deflated value - original deflated gains| " << max_value_gap
              << "; strategy " << out << "\n";
    return kExitClean;
}

riskgate::TradingStrategy parse_account(const std::string& spec,
                                        const riskgate::MarketModel& model) {
    const bool is_index = !spec.empty() && spec.find_first_not_of("0123456789") ==
                                               std::string::npos;
    if (is_index)
        return riskgate::unit_security_strategy(model, std::stoul(spec));
    return riskgate::strategy_from_json(riskgate::read_json_file(spec));
}

int run_rates(const std::string& model_path, const std::string& account_a,
              const std::string& account_b, const CommonOptions& opt) {
    const riskgate::MarketModel model = riskgate::ingest(model_path, opt.tol);
    const riskgate::TradingStrategy a = parse_account(account_a, model);
    const riskgate::TradingStrategy b = parse_account(account_b, model);
    const riskgate::RateConsistency rc = riskgate::rate_consistency(a, b, model, opt.tol);
    if (rc.consistent) {
        std::cout << "Consistent (max rate gap " << rc.max_rate_gap
                  << ", normalized deflator gap " << rc.max_normalized_deflator_gap
                  << ")\n";
        return kExitClean;
    }
    std::string out = opt.out;
    if (out.empty()) out = strip_json_suffix(model_path) + ".rate_witness.json";
    riskgate::json j = riskgate::strategy_to_json(*rc.witness);
    j["margin"] = rc.witness_margin;
    riskgate::write_json_file(out, j);
    std::cout << "Inconsistent: max rate gap " << rc.max_rate_gap << "; witness " << out
              << "\n";
    return kExitArbitrage;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"instantaneous arbitrage analysis for sampled securities markets"};
    app.require_subcommand(1);

    CommonOptions opt;
    app.add_option("--rank-tol", opt.tol.rank_tol, "row-independence tolerance")
        ->check(CLI::PositiveNumber);
    app.add_option("--residual-tol", opt.tol.residual_tol, "span-membership tolerance")
        ->check(CLI::PositiveNumber);
    app.add_option("--threads", opt.threads, "worker threads for analysis");
    app.add_option("--out,-o", opt.out, "output path");
    app.add_option("--format", opt.format, "report format")
        ->check(CLI::IsMember({"json", "csv"}));

    // gen
    auto* gen = app.add_subcommand("gen", "generate a synthetic market model");
    gen->fallthrough();  // let subcommands use the shared flags above
    riskgate::ScenarioSpec spec;
    bool seed_given = false;
    std::string rank_profile = "full";
    std::vector<std::string> inject_flags;
    gen->add_option("--securities", spec.n_securities, "number of securities incl. money market");
    gen->add_option("--factors", spec.n_factors, "number of Wiener factors");
    gen->add_option("--paths", spec.n_paths, "number of scenario paths");
    gen->add_option("--steps", spec.n_steps, "number of time steps");
    gen->add_option("--horizon", spec.horizon, "time horizon in years");
    gen->add_option("--rate-min", spec.rate_min, "short rate lower bound");
    gen->add_option("--rate-max", spec.rate_max, "short rate upper bound");
    gen->add_option("--dispersion-scale", spec.dispersion_scale, "dispersion entry scale");
    gen->add_option("--rank-profile", rank_profile, "dispersion rank profile")
        ->check(CLI::IsMember({"full", "deficient", "zero"}));
    gen->add_option("--rank", spec.deficient_rank, "planted rank for --rank-profile deficient");
    gen->add_option("--inject", inject_flags, "arbitrage injection 'path,t_index,strength'");
    gen->add_option("--seed", spec.seed, "generator seed (RISKGATE_SEED as fallback)")
        ->each([&seed_given](const std::string&) { seed_given = true; });

    // analyze
    auto* analyze = app.add_subcommand("analyze", "classify every sample of a model file");
    analyze->fallthrough();
    std::string analyze_model;
    analyze->add_option("model", analyze_model, "market model JSON file")->required();

    // capm
    auto* capm = app.add_subcommand("capm", "build the CAPM strategy of a model file");
    capm->fallthrough();
    std::string capm_model;
    capm->add_option("model", capm_model, "market model JSON file")->required();

    // complete
    auto* complete = app.add_subcommand("complete", "self-financing completion of a strategy");
    complete->fallthrough();
    std::string complete_model, complete_strategy;
    complete->add_option("model", complete_model, "market model JSON file")->required();
    complete->add_option("strategy", complete_strategy, "strategy JSON file")->required();

    // rates
    auto* rates = app.add_subcommand("rates", "compare two money market accounts");
    rates->fallthrough();
    std::string rates_model, account_a, account_b;
    rates->add_option("model", rates_model, "market model JSON file")->required();
    rates->add_option("--account-a", account_a, "security index or strategy file")
        ->required();
    rates->add_option("--account-b", account_b, "security index or strategy file")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }

    try {
        if (gen->parsed()) {
            if (rank_profile == "deficient") spec.rank_profile = riskgate::RankProfile::Deficient;
            else if (rank_profile == "zero") spec.rank_profile = riskgate::RankProfile::Zero;
            else spec.rank_profile = riskgate::RankProfile::Full;
            if (opt.out.empty())
                throw riskgate::InvalidSpec("gen requires --out for the model file");
            return run_gen(spec, seed_given, inject_flags, opt.out);
        }
        if (analyze->parsed()) return run_analyze(analyze_model, opt);
        if (capm->parsed()) return run_capm(capm_model, opt);
        if (complete->parsed()) return run_complete(complete_model, complete_strategy, opt);
        if (rates->parsed()) return run_rates(rates_model, account_a, account_b, opt);
        std::cerr << "error: no subcommand\n";
        return kExitError;
    } catch (const riskgate::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
}
