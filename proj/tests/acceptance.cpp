// Acceptance suite: one line per criterion, nonzero exit if any fails.
//
//   riskgate_acceptance [cli_binary] [golden_dir] [--write-golden]
//
// --write-golden regenerates the CLI golden files instead of comparing.

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "oracles.hpp"
#include "riskgate/riskgate.hpp"

using namespace riskgate;

namespace {

std::string g_cli = "./build/riskgate";
std::string g_golden = "tests/golden";
std::string g_work;

// ---------------------------------------------------------------------- utils

int shell(const std::string& cmd) {
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

int run_cli(const std::string& args) {
    return shell("cd " + g_work + " && " + g_cli + " " + args + " >> cli_log.txt 2>&1");
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Tally {
    bool ok = true;
    std::string detail;
    long checks = 0;

    void expect(bool cond, const std::string& what) {
        ++checks;
        if (!cond && ok) {
            ok = false;
            detail = what;
        }
    }
};

RealMatrix random_matrix(CounterRng& rng, std::size_t m, std::size_t k) {
    RealMatrix a(m, k);
    for (double& v : a.data()) v = rng.normal();
    return a;
}

RealMatrix planted_rank_matrix(CounterRng& rng, std::size_t m, std::size_t k,
                               std::size_t r) {
    if (r == 0) return RealMatrix(m, k, 0.0);
    for (;;) {
        const RealMatrix v = matmul(random_matrix(rng, m, r), random_matrix(rng, r, k));
        if (oracle::smallest_planted_singular_value(v, r) >= 100.0 * 1e-9) return v;
    }
}

std::string format_max(double v) {
    std::ostringstream ss;
    ss.precision(3);
    ss << std::scientific << v;
    return ss.str();
}

// ------------------------------------------------------------------ criteria

// 1. factorization: planted rank recovered, orthonormal basis, span kept
std::pair<bool, std::string> criterion_factorization() {
    CounterRng rng(101);
    Tally t;
    double max_ortho = 0.0, max_span = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t m = 1 + rng.next_u64() % 8;
        const std::size_t k = 1 + rng.next_u64() % 8;
        const std::size_t r = rng.next_u64() % (std::min(m, k) + 1);
        const RealMatrix v = planted_rank_matrix(rng, m, k, r);
        const RankFactorization f = orthonormal_row_projector(v);
        t.expect(f.rank == r, "rank mismatch");
        if (f.rank != r) continue;
        const RealMatrix qqt = matmul(f.basis, transpose(f.basis));
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < r; ++j)
                max_ortho = std::max(max_ortho,
                                     std::abs(qqt(i, j) - (i == j ? 1.0 : 0.0)));
        for (std::size_t i = 0; i < m; ++i) {
            std::vector<double> resid = v.row_copy(i);
            for (std::size_t b = 0; b < r; ++b) {
                const double c = dot(v.row(i), f.basis.row(b));
                for (std::size_t j = 0; j < k; ++j) resid[j] -= c * f.basis(b, j);
            }
            max_span = std::max(max_span, norm2(resid) / (1.0 + norm2(v.row(i))));
        }
    }
    t.expect(max_ortho <= 1e-9, "orthonormality " + format_max(max_ortho));
    t.expect(max_span <= 1e-8, "span residual " + format_max(max_span));
    return {t.ok, t.ok ? "1000 instances, ortho " + format_max(max_ortho) + ", span " +
                             format_max(max_span)
                       : t.detail};
}

// 2. selector: reconstruction, pivot support, oracle agreement
std::pair<bool, std::string> criterion_selector() {
    CounterRng rng(202);
    Tally t;
    double max_resid = 0.0;
    int oracle_checked = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t m = 1 + rng.next_u64() % 8;
        const std::size_t k = 1 + rng.next_u64() % 8;
        const std::size_t r = rng.next_u64() % (std::min(m, k) + 1);
        const RealMatrix v = planted_rank_matrix(rng, m, k, r);

        std::vector<double> x(m);
        for (double& c : x) c = rng.uniform(-2.0, 2.0);
        const std::vector<double> y = row_times_matrix(x, v);
        const std::vector<double> back = solve_row_system(y, v);
        const std::vector<double> image = row_times_matrix(back, v);
        double err = 0.0;
        for (std::size_t j = 0; j < k; ++j) err += (image[j] - y[j]) * (image[j] - y[j]);
        err = std::sqrt(err);
        t.expect(err <= 1e-8 * (1.0 + norm2(y)), "reconstruction " + format_max(err));
        max_resid = std::max(max_resid, err / (1.0 + norm2(y)));

        const RankFactorization f = orthonormal_row_projector(v);
        for (std::size_t i = 0; i < m; ++i) {
            bool is_pivot = false;
            for (std::size_t p : f.pivot_rows) is_pivot |= (p == i);
            if (!is_pivot) t.expect(back[i] == 0.0, "non-pivot entry not exactly zero");
        }

        // membership verdicts against the elimination oracle, condition-filtered
        std::vector<double> probe(k);
        const bool in_span = (trial % 2 == 0 && r > 0) || r == k;
        if (in_span && trial % 2 == 0 && r > 0) {
            probe = y;
        } else {
            for (double& c : probe) c = rng.uniform(-2.0, 2.0);
            if (!in_span) {
                RealMatrix stacked(m + 1, k);
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < k; ++j) stacked(i, j) = v(i, j);
                for (std::size_t j = 0; j < k; ++j) stacked(m, j) = probe[j];
                if (oracle::smallest_planted_singular_value(stacked, r + 1) <
                    100.0 * 1e-9)
                    continue;
            }
        }
        const bool kernel_verdict = row_span_membership(probe, v).member;
        t.expect(kernel_verdict == oracle::row_membership(probe, v, 1e-9),
                 "membership disagrees with the elimination oracle");
        t.expect(kernel_verdict == in_span, "membership verdict wrong");
        ++oracle_checked;
    }
    return {t.ok, t.ok ? "1000 instances, max rel residual " + format_max(max_resid) +
                             ", " + std::to_string(oracle_checked) + " oracle checks"
                       : t.detail};
}

// 3. duality: exactly one of solution / certificate, certificate identities
std::pair<bool, std::string> criterion_duality() {
    CounterRng rng(303);
    Tally t;
    int solutions = 0, certificates = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t m = 2 + rng.next_u64() % 6;
        const std::size_t k = 1 + rng.next_u64() % 6;
        const std::size_t r = rng.next_u64() % (std::min(m, k) + 1);
        const RealMatrix sigma = planted_rank_matrix(rng, m, k, r);

        std::vector<double> y(m, 0.0);
        const bool reachable = (r == m) || (trial % 2 == 0 && r > 0);
        if (reachable) {
            std::vector<double> xs(k);
            for (double& c : xs) c = rng.uniform(-2.0, 2.0);
            y = matrix_times_col(sigma, xs);
        } else {
            const RankFactorization f = orthonormal_row_projector(transpose(sigma));
            for (;;) {
                for (double& c : y) c = rng.normal();
                for (std::size_t i = 0; i < f.rank; ++i) {
                    const double c = dot(std::span<const double>(y), f.basis.row(i));
                    for (std::size_t j = 0; j < m; ++j) y[j] -= c * f.basis(i, j);
                }
                const double n = norm2(y);
                if (n > 0.1) {
                    for (double& c : y) c *= 1.5 / n;
                    break;
                }
            }
        }

        bool solved = false, certified = false;
        try {
            const std::vector<double> xs = solve_column_system(y, sigma);
            const std::vector<double> image = matrix_times_col(sigma, xs);
            double err = 0.0;
            for (std::size_t i = 0; i < m; ++i)
                err += (image[i] - y[i]) * (image[i] - y[i]);
            t.expect(std::sqrt(err) <= 1e-8 * (1.0 + norm2(y)), "solution residual");
            solved = true;
        } catch (const NotInSpan&) {
        }
        try {
            const std::vector<double> z = dual_certificate(y, sigma);
            t.expect(std::abs(dot(std::span<const double>(z),
                                  std::span<const double>(y)) -
                              1.0) <= 1e-9,
                     "Z·Y != 1");
            t.expect(norm2(row_times_matrix(z, sigma)) <=
                         1e-9 * (1.0 + max_abs(sigma)),
                     "Z·Sigma != 0");
            certified = true;
        } catch (const NoCertificate&) {
        }
        t.expect(solved != certified, "duality exclusivity broken");
        t.expect(solved == reachable, "wrong side of the duality");
        (solved ? solutions : certificates) += 1;
    }
    return {t.ok, t.ok ? std::to_string(solutions) + " solutions / " +
                             std::to_string(certificates) + " certificates, identities hold"
                       : t.detail};
}

// 4. minimal price of risk: gap nonnegative over null-space perturbations
std::pair<bool, std::string> criterion_minimality() {
    Tally t;
    CounterRng rng(404);
    double min_gap = 0.0;
    int samples_used = 0;
    for (std::uint64_t model_idx = 0; samples_used < 500; ++model_idx) {
        ScenarioSpec spec;
        spec.n_securities = 5;
        spec.n_factors = 4;
        spec.n_paths = 4;
        spec.n_steps = 24;
        spec.rank_profile = RankProfile::Deficient;
        spec.deficient_rank = 2;
        spec.seed = 8800 + model_idx;
        const auto [model, cert] = generate(spec);
        for (std::size_t p = 0; p < model.n_paths && samples_used < 500; ++p)
            for (std::size_t k = 0; k < model.n_times() && samples_used < 500; ++k) {
                const MarketSample& s = model.sample(p, k);
                const SampleVerdict v = classify_sample(s, 0);
                t.expect(v.free(), "generated sample not free");
                if (!v.free()) continue;
                t.expect(minimality_gap(v.lambda_star, s, v) == 0.0,
                         "zero perturbation gap not exactly zero");
                const RankFactorization f = orthonormal_row_projector(s.dispersion);
                for (int trial = 0; trial < 100; ++trial) {
                    std::vector<double> nu(spec.n_factors);
                    for (double& x : nu) x = rng.normal();
                    for (std::size_t i = 0; i < f.rank; ++i) {
                        const double c =
                            dot(std::span<const double>(nu), f.basis.row(i));
                        for (std::size_t j = 0; j < nu.size(); ++j)
                            nu[j] -= c * f.basis(i, j);
                    }
                    std::vector<double> lambda = v.lambda_star;
                    for (std::size_t j = 0; j < lambda.size(); ++j) lambda[j] += nu[j];
                    const double gap = minimality_gap(lambda, s, v);
                    min_gap = std::min(min_gap, gap);
                    t.expect(gap >= -1e-9, "negative gap " + format_max(gap));
                }
                ++samples_used;
            }
    }
    return {t.ok, t.ok ? "500 samples x 100 perturbations, min gap " +
                             format_max(min_gap)
                       : t.detail};
}

// 5 + 6. CAPM round trip through the CLI, with certificate validity
std::pair<bool, std::string> criterion_round_trip_and_certificates(Tally& cert_tally) {
    Tally t;
    CounterRng rng(505);
    double max_capm = 0.0;
    for (int i = 0; i < 100; ++i) {
        const std::string base = "t5_" + std::to_string(i);
        const std::string flags = "--securities 5 --factors 2 --paths 4 --steps 12 "
                                  "--seed " +
                                  std::to_string(9000 + i);
        t.expect(run_cli("gen " + flags + " -o " + base + ".json") == 0, "gen failed");
        t.expect(run_cli("capm " + base + ".json") == 0, "capm exit code");
        const json strat = read_json_file(g_work + "/" + base + ".capm.json");
        const double resid = strat["max_capm_residual"].get<double>();
        max_capm = std::max(max_capm, resid);
        t.expect(resid <= 1e-8, "capm residual " + format_max(resid));

        // three distinct injections; strengths down to the 1e-4*scale floor
        std::set<std::pair<std::size_t, std::size_t>> picks;
        while (picks.size() < 3)
            picks.emplace(rng.next_u64() % 4, rng.next_u64() % 13);
        const double strengths[3] = {1e-4, 0.01, 0.5};
        std::string inject_flags;
        int si = 0;
        for (const auto& [p, k] : picks) {
            std::ostringstream ss;
            ss << " --inject " << p << "," << k << "," << strengths[si++];
            inject_flags += ss.str();
        }
        t.expect(run_cli("gen " + flags + inject_flags + " -o " + base +
                         "_dirty.json") == 0,
                 "gen --inject failed");
        t.expect(run_cli("analyze " + base + "_dirty.json") == 2, "analyze exit code");

        const json report = read_json_file(g_work + "/" + base + "_dirty.report.json");
        const json cert = read_json_file(g_work + "/" + base + "_dirty.cert.json");
        std::set<std::pair<std::size_t, std::size_t>> violated, injected;
        for (const auto& idx : report["summary"]["violated"])
            violated.emplace(idx[0].get<std::size_t>(), idx[1].get<std::size_t>());
        for (const auto& idx : cert["injected"])
            injected.emplace(idx[0].get<std::size_t>(), idx[1].get<std::size_t>());
        t.expect(violated == injected, "violated != injected at model " + base);

        // criterion 6 on every violated verdict of this model
        const MarketModel model = ingest(g_work + "/" + base + "_dirty.json");
        const json sidecar =
            read_json_file(g_work + "/" + base + "_dirty.violations.json");
        for (const auto& v : sidecar["violations"]) {
            const std::size_t p = v["path"].get<std::size_t>();
            const std::size_t k = v["t_index"].get<std::size_t>();
            const MarketSample& s = model.sample(p, k);
            const std::vector<double> theta = v["theta"].get<std::vector<double>>();
            const std::vector<double> e = excess_drift(s);
            const double value =
                dot(std::span<const double>(theta), std::span<const double>(s.prices));
            const std::vector<double> loadings =
                row_times_matrix(std::span<const double>(theta), s.dispersion);
            const double margin =
                dot(std::span<const double>(theta), std::span<const double>(e));
            cert_tally.expect(std::abs(value) <=
                                  1e-9 * (1.0 + norm2(s.prices)),
                              "theta·S too large");
            cert_tally.expect(norm2(loadings) <= 1e-9 * (1.0 + max_abs(s.dispersion)),
                              "theta·sigma too large");
            cert_tally.expect(std::abs(margin - 1.0) <= 1e-9, "theta margin off 1");
        }
    }
    return {t.ok, t.ok ? "100 models round-tripped, max CAPM residual " +
                             format_max(max_capm)
                       : t.detail};
}

// 7. riskless directions have no excess return at free samples
std::pair<bool, std::string> criterion_riskless_excess() {
    Tally t;
    CounterRng rng(707);
    double worst = 0.0;
    int samples_used = 0;
    for (std::uint64_t model_idx = 0; samples_used < 500; ++model_idx) {
        ScenarioSpec spec;
        spec.n_securities = 6;
        spec.n_factors = 4;
        spec.n_paths = 5;
        spec.n_steps = 19;
        spec.rank_profile = model_idx % 2 == 0 ? RankProfile::Deficient
                                               : RankProfile::Full;
        spec.deficient_rank = 3;
        spec.seed = 7700 + model_idx;
        const auto [model, cert] = generate(spec);
        for (std::size_t p = 0; p < model.n_paths && samples_used < 500; ++p)
            for (std::size_t k = 0; k < model.n_times() && samples_used < 500; ++k) {
                const MarketSample& s = model.sample(p, k);
                const std::vector<double> e = excess_drift(s);
                const RankFactorization f =
                    orthonormal_row_projector(transpose(s.dispersion));
                for (int trial = 0; trial < 200; ++trial) {
                    std::vector<double> delta(model.n_securities);
                    for (double& x : delta) x = rng.normal();
                    for (std::size_t i = 0; i < f.rank; ++i) {
                        const double c =
                            dot(std::span<const double>(delta), f.basis.row(i));
                        for (std::size_t j = 0; j < delta.size(); ++j)
                            delta[j] -= c * f.basis(i, j);
                    }
                    const double excess = std::abs(
                        dot(std::span<const double>(delta), std::span<const double>(e)));
                    const double bound = 1e-8 * (1.0 + norm2(delta) * norm2(e));
                    worst = std::max(worst, excess / bound);
                    t.expect(excess <= bound, "riskless direction earns " +
                                                  format_max(excess));
                }
                ++samples_used;
            }
    }
    return {t.ok, t.ok ? "500 samples x 200 directions, worst ratio " +
                             format_max(worst)
                       : t.detail};
}

// 8. self-financing completion ledger identities on simulated paths
std::pair<bool, std::string> criterion_completion_ledger() {
    Tally t;
    std::vector<double> times(201);
    for (std::size_t k = 0; k < times.size(); ++k)
        times[k] = static_cast<double>(k) / 200.0;
    const SimulationTemplate tmpl = SimulationTemplate::constant(
        {1.0, 40.0, 25.0}, {0.0, 2.0, -0.5},
        RealMatrix::from_rows({{0.0, 0.0}, {3.0, 0.8}, {-0.5, 2.2}}), 0.05, times, 50);
    const MarketModel model = simulate_paths(tmpl, 606);

    CounterRng rng(808);
    double worst_div = 0.0, worst_gap = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        TradingStrategy strat;
        strat.holdings.assign(model.n_paths,
                              std::vector<std::vector<double>>(model.n_times(),
                                                               std::vector<double>(3)));
        for (auto& path : strat.holdings)
            for (auto& h : path)
                for (double& v : h) v = rng.uniform(-1.0, 1.0);

        const TradingStrategy completed = self_financing_completion(strat, model);
        const StrategyLedger original = strategy_ledger(strat, model, true);
        const StrategyLedger after = strategy_ledger(completed, model, true);

        double max_value = 0.0;
        for (std::size_t p = 0; p < model.n_paths; ++p)
            for (std::size_t k = 0; k < model.n_times(); ++k)
                max_value = std::max(max_value, std::abs(after.value[p][k]));
        const double bound = 1e-9 * (1.0 + max_value);
        for (std::size_t p = 0; p < model.n_paths; ++p)
            for (std::size_t k = 0; k < model.n_times(); ++k) {
                worst_div = std::max(worst_div, std::abs(after.dividends[p][k]));
                worst_gap = std::max(
                    worst_gap, std::abs(after.value[p][k] - original.gains[p][k]));
                t.expect(std::abs(after.dividends[p][k]) <= bound,
                         "completion still pays dividends");
                t.expect(std::abs(after.value[p][k] - original.gains[p][k]) <= bound,
                         "completed value drifts from original gains");
                const MarketSample& s = model.sample(p, k);
                const std::vector<double> e = excess_drift(s);
                t.expect(
                    row_times_matrix(std::span<const double>(completed.holdings[p][k]),
                                     s.dispersion) ==
                        row_times_matrix(std::span<const double>(strat.holdings[p][k]),
                                         s.dispersion),
                    "dispersion changed by completion");
                t.expect(dot(std::span<const double>(completed.holdings[p][k]),
                             std::span<const double>(e)) ==
                             dot(std::span<const double>(strat.holdings[p][k]),
                                 std::span<const double>(e)),
                         "excess return changed by completion");
            }
    }
    return {t.ok, t.ok ? "50 paths x 200 steps x 20 strategies, max dividend " +
                             format_max(worst_div) + ", max value gap " +
                             format_max(worst_gap)
                       : t.detail};
}

// money market (index 0, rates r1) and a second riskless account (rates r2)
MarketModel rate_model(const std::vector<double>& r1, const std::vector<double>& r2,
                       double m2_initial, const std::vector<double>& times) {
    MarketModel m;
    m.n_securities = 3;
    m.n_factors = 1;
    m.n_paths = 1;
    m.money_market_index = 0;
    m.times = times;
    m.samples.resize(1);
    double m1 = 1.0, m2 = m2_initial;
    for (std::size_t k = 0; k < times.size(); ++k) {
        MarketSample s;
        s.prices = {m1, m2, 30.0};
        s.drifts = {r1[k] * m1, r2[k] * m2, 0.0};
        s.dispersion = RealMatrix::from_rows({{0.0}, {0.0}, {1.0}});
        s.short_rate = r1[k];
        s.deflator = m1;
        s.cum_dividends = {0.0, 0.0, 0.0};
        m.samples[0].push_back(std::move(s));
        if (k + 1 < times.size()) {
            const double dt = times[k + 1] - times[k];
            m1 *= std::exp(r1[k] * dt);
            m2 *= std::exp(r2[k] * dt);
        }
    }
    return m;
}

// 9. interest rate consistency and the explicit witness
std::pair<bool, std::string> criterion_rate_consistency() {
    Tally t;
    std::vector<double> times(201);
    for (std::size_t k = 0; k < times.size(); ++k)
        times[k] = static_cast<double>(k) / 200.0;

    {
        const std::vector<double> flat(times.size(), 0.03);
        const MarketModel m = rate_model(flat, flat, 1.7, times);
        const RateConsistency rc = rate_consistency(unit_security_strategy(m, 0),
                                                    unit_security_strategy(m, 1), m);
        t.expect(rc.consistent, "equal-rate accounts judged inconsistent");
        t.expect(rc.max_normalized_deflator_gap <= 1e-12,
                 "normalized deflator gap " +
                     format_max(rc.max_normalized_deflator_gap));
    }
    double witness_gap = 0.0;
    {
        std::vector<double> r1(times.size(), 0.03), r2(times.size(), 0.03);
        for (std::size_t k = 50; k < 100; ++k) r2[k] = 0.05;
        const MarketModel m = rate_model(r1, r2, 2.0, times);
        const RateConsistency rc = rate_consistency(unit_security_strategy(m, 0),
                                                    unit_security_strategy(m, 1), m);
        t.expect(!rc.consistent, "different rates judged consistent");
        t.expect(rc.witness.has_value(), "no witness produced");
        if (rc.witness) {
            for (std::size_t k = 0; k < times.size(); ++k) {
                const MarketSample& s = m.sample(0, k);
                const std::vector<double>& h = rc.witness->holdings[0][k];
                const double value = dot(std::span<const double>(h),
                                         std::span<const double>(s.prices));
                const double drift = dot(std::span<const double>(h),
                                         std::span<const double>(s.drifts));
                const std::vector<double> loadings =
                    row_times_matrix(std::span<const double>(h), s.dispersion);
                t.expect(std::abs(value) <= 1e-9 * (1.0 + norm2(s.prices)),
                         "witness value nonzero");
                t.expect(norm2(loadings) <= 1e-9 * (1.0 + max_abs(s.dispersion)),
                         "witness has dispersion");
                t.expect(drift >= -1e-12, "witness drift negative");
                const bool differs = k >= 50 && k < 100;
                if (differs) {
                    t.expect(drift > 1e-6, "witness drift not positive where rates differ");
                    witness_gap = std::max(witness_gap, std::abs(drift - 0.02));
                } else {
                    t.expect(drift <= 1e-12, "witness drift positive where rates agree");
                }
            }
        }
    }
    return {t.ok, t.ok ? "deflator gap <= 1e-12; witness margin |drift-0.02| <= " +
                             format_max(witness_gap)
                       : t.detail};
}

// hand inputs for the golden runs
void write_cli_inputs() {
    std::vector<double> times(6);
    for (std::size_t k = 0; k < times.size(); ++k)
        times[k] = static_cast<double>(k) / 5.0;
    std::vector<double> r1(times.size(), 0.02), r2(times.size(), 0.02);
    r2[2] = 0.04;
    r2[3] = 0.04;
    write_json_file(g_work + "/rates_model.json",
                    model_to_json(rate_model(r1, r2, 2.0, times)));

    TradingStrategy strat;
    strat.holdings.assign(2, std::vector<std::vector<double>>(6, {0.0, 0.0, 0.0, 0.0}));
    for (std::size_t p = 0; p < 2; ++p)
        for (std::size_t k = 0; k < 6; ++k)
            strat.holdings[p][k] = {0.0, 1.0 + 0.25 * static_cast<double>(k),
                                    -0.5, 0.125 * static_cast<double>(p + k)};
    write_json_file(g_work + "/complete_input.json", strategy_to_json(strat));
}

const std::vector<std::pair<std::string, std::string>> kGoldenOutputs = {
    {"gen_model.json", "gen_model.json"},
    {"gen_model.cert.json", "gen_model.cert.json"},
    {"gen_model.report.json", "gen_model.report.json"},
    {"gen_model.capm.json", "gen_model.capm.json"},
    {"dirty_model.json", "dirty_model.json"},
    {"dirty_model.violations.json", "dirty_model.violations.json"},
    {"complete_input.completed.json", "complete_output.json"},
    {"rates_model.rate_witness.json", "rates_witness.json"},
};

// runs every golden command; returns false on any unexpected exit code
bool run_golden_commands(Tally& t) {
    write_cli_inputs();
    t.expect(run_cli("gen --securities 4 --factors 2 --paths 2 --steps 5 --seed 2026 "
                     "-o gen_model.json") == 0,
             "gen exit");
    t.expect(run_cli("analyze gen_model.json") == 0, "analyze exit on clean model");
    t.expect(run_cli("capm gen_model.json") == 0, "capm exit on clean model");
    t.expect(run_cli("gen --securities 4 --factors 2 --paths 2 --steps 5 --seed 2026 "
                     "--inject 0,2,0.5 --inject 1,4,0.25 -o dirty_model.json") == 0,
             "gen --inject exit");
    t.expect(run_cli("analyze dirty_model.json") == 2, "analyze exit on dirty model");
    t.expect(run_cli("capm dirty_model.json") == 2, "capm exit on dirty model");
    t.expect(run_cli("complete gen_model.json complete_input.json") == 0,
             "complete exit");
    t.expect(run_cli("rates rates_model.json --account-a 0 --account-b 1") == 2,
             "rates exit on inconsistent accounts");
    t.expect(run_cli("rates rates_model.json --account-a 0 --account-b 0") == 0,
             "rates exit on identical accounts");
    t.expect(run_cli("gen --securities 0 -o invalid.json") == 1, "usage error exit");
    t.expect(run_cli("analyze no_such_file.json") == 1, "missing input exit");
    return t.ok;
}

// 10. CLI contract: golden files, exit codes, determinism
std::pair<bool, std::string> criterion_cli_contract() {
    Tally t;
    run_golden_commands(t);
    for (const auto& [produced, golden] : kGoldenOutputs) {
        const std::string got = slurp(g_work + "/" + produced);
        const std::string want = slurp(g_golden + "/" + golden);
        t.expect(!want.empty(), "missing golden file " + golden);
        t.expect(got == want, "golden mismatch: " + golden);
    }

    // pipeline determinism: repeat runs are byte-identical, threads included
    const std::string report_once = slurp(g_work + "/gen_model.report.json");
    const std::string capm_once = slurp(g_work + "/gen_model.capm.json");
    const std::string model_once = slurp(g_work + "/gen_model.json");
    t.expect(run_cli("gen --securities 4 --factors 2 --paths 2 --steps 5 --seed 2026 "
                     "-o gen_model.json") == 0,
             "gen rerun exit");
    t.expect(run_cli("analyze gen_model.json") == 0, "analyze rerun exit");
    t.expect(run_cli("capm gen_model.json") == 0, "capm rerun exit");
    t.expect(slurp(g_work + "/gen_model.json") == model_once, "gen not deterministic");
    t.expect(slurp(g_work + "/gen_model.report.json") == report_once,
             "analyze not deterministic");
    t.expect(slurp(g_work + "/gen_model.capm.json") == capm_once,
             "capm not deterministic");
    t.expect(run_cli("analyze gen_model.json --threads 3 --out threaded.report.json") ==
                 0,
             "threaded analyze exit");
    t.expect(slurp(g_work + "/threaded.report.json") == report_once,
             "threaded report differs from serial");
    return {t.ok,
            t.ok ? std::to_string(kGoldenOutputs.size()) +
                       " golden files match; exit codes 0/1/2; reruns byte-identical"
                 : t.detail};
}

}  // namespace

int main(int argc, char** argv) {
    bool write_golden = false;
    std::vector<std::string> positional;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--write-golden")
            write_golden = true;
        else
            positional.push_back(arg);
    }
    if (positional.size() > 0) g_cli = positional[0];
    if (positional.size() > 1) g_golden = positional[1];
    if (g_cli.find('/') != std::string::npos && g_cli[0] != '/')
        g_cli = std::string(std::getenv("PWD") ? std::getenv("PWD") : ".") + "/" + g_cli;

    g_work = std::string(std::getenv("TMPDIR") ? std::getenv("TMPDIR") : "/tmp") +
             "/riskgate_acceptance";
    if (shell("rm -rf " + g_work + " && mkdir -p " + g_work) != 0) {
        std::cerr << "cannot prepare work dir " << g_work << "\n";
        return 1;
    }

    if (write_golden) {
        Tally t;
        if (!run_golden_commands(t)) {
            std::cerr << "golden generation failed: " << t.detail << "\n";
            return 1;
        }
        if (shell("mkdir -p " + g_golden) != 0) {
            std::cerr << "cannot create " << g_golden << "\n";
            return 1;
        }
        for (const auto& [produced, golden] : kGoldenOutputs)
            if (shell("cp " + g_work + "/" + produced + " " + g_golden + "/" + golden) !=
                0) {
                std::cerr << "cannot copy " << produced << "\n";
                return 1;
            }
        std::cout << "wrote " << kGoldenOutputs.size() << " golden files to "
                  << g_golden << "\n";
        return 0;
    }

    Tally certificates;
    int failures = 0;
    const auto report = [&failures](int id, const std::string& name, bool ok,
                                    const std::string& detail) {
        std::cout << (ok ? "PASS" : "FAIL") << "  " << id << ". " << name << ": "
                  << detail << "\n";
        if (!ok) ++failures;
    };

    {
        auto [ok, detail] = criterion_factorization();
        report(1, "kernel factorization suite", ok, detail);
    }
    {
        auto [ok, detail] = criterion_selector();
        report(2, "selector suite", ok, detail);
    }
    {
        auto [ok, detail] = criterion_duality();
        report(3, "duality suite", ok, detail);
    }
    {
        auto [ok, detail] = criterion_minimality();
        report(4, "minimal price of risk", ok, detail);
    }
    {
        auto [ok, detail] = criterion_round_trip_and_certificates(certificates);
        report(5, "CAPM round trip", ok, detail);
        report(6, "certificate validity", certificates.ok,
               certificates.ok ? std::to_string(certificates.checks) +
                                     " certificate checks across the round-trip suite"
                               : certificates.detail);
    }
    {
        auto [ok, detail] = criterion_riskless_excess();
        report(7, "riskless excess equivalence", ok, detail);
    }
    {
        auto [ok, detail] = criterion_completion_ledger();
        report(8, "self-financing completion ledger", ok, detail);
    }
    {
        auto [ok, detail] = criterion_rate_consistency();
        report(9, "interest rate consistency", ok, detail);
    }
    {
        auto [ok, detail] = criterion_cli_contract();
        report(10, "CLI contract", ok, detail);
    }

    if (failures > 0) {
        std::cout << failures << " criterion(s) failed\n";
        return 1;
    }
    std::cout << "all criteria passed\n";
    return 0;
}
