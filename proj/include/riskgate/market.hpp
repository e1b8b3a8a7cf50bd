#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "riskgate/errors.hpp"
#include "riskgate/matrix.hpp"
#include "riskgate/rng.hpp"
#include "riskgate/tolerance.hpp"

namespace riskgate {

struct GridIndex {
    std::size_t path = 0;
    std::size_t t_index = 0;
    bool operator==(const GridIndex&) const = default;
};

/// One (path, time) point of a discretized securities market: prices S,
/// gains drifts mu, dispersion sigma (securities × factors), short rate r,
/// money market value M and cumulative dividends D. Units: currency,
/// currency/year, currency/sqrt(year), 1/year.
struct MarketSample {
    std::vector<double> prices;
    std::vector<double> drifts;
    RealMatrix dispersion;
    double short_rate = 0.0;
    double deflator = 1.0;
    std::vector<double> cum_dividends;

    std::size_t n_securities() const { return prices.size(); }
    std::size_t n_factors() const { return dispersion.cols(); }
};

/// Grid of market samples over paths × times, with a designated security
/// playing the money market account (zero dispersion row, drift r·S, no
/// dividends, price equal to the deflator). Immutable by convention after
/// construction; all analysis functions take it by const reference.
struct MarketModel {
    std::size_t n_securities = 0;
    std::size_t n_factors = 0;
    std::size_t n_paths = 0;
    std::vector<double> times;
    std::vector<std::vector<MarketSample>> samples;  // [path][time]
    std::size_t money_market_index = 0;
    // realized Wiener increments per (path, step), each of length n_factors
    std::optional<std::vector<std::vector<std::vector<double>>>> wiener_increments;
    std::optional<std::uint64_t> seed;

    std::size_t n_times() const { return times.size(); }
    std::size_t n_steps() const { return times.empty() ? 0 : times.size() - 1; }
    const MarketSample& sample(std::size_t path, std::size_t t) const {
        return samples[path][t];
    }
};

/// Holdings grid: units of each security held at each (path, time).
struct TradingStrategy {
    std::vector<std::vector<std::vector<double>>> holdings;  // [path][time][security]

    std::size_t n_paths() const { return holdings.size(); }
    std::size_t n_times() const { return holdings.empty() ? 0 : holdings.front().size(); }
};

/// Per-sample value, accumulated trading gains and implied cumulative
/// dividends of a strategy. dividends = gains − value by construction, so
/// the ledger identity holds exactly as accumulated.
struct StrategyLedger {
    std::vector<std::vector<double>> value;      // [path][time]
    std::vector<std::vector<double>> gains;      // [path][time]
    std::vector<std::vector<double>> dividends;  // [path][time]
};

// ---------------------------------------------------------------------------
// deflation and the money market account

/// Money market value path M(t_k) from per-step short rates by the
/// left-point exponential rule: M_{k+1} = M_k · exp(r_k · Δt_k).
/// `rates` may carry one entry per time point (the last is unused) or one
/// per step.
inline std::vector<double> money_market_path(const std::vector<double>& rates, double m0,
                                             const std::vector<double>& times) {
    if (!(m0 > 0.0))
        throw NonpositiveInitialValue("money_market_path: M(0) = " + std::to_string(m0));
    if (times.empty()) throw ShapeMismatch("money_market_path: empty time grid");
    for (std::size_t k = 0; k + 1 < times.size(); ++k)
        if (!(times[k] < times[k + 1]))
            throw ShapeMismatch("money_market_path: times not strictly increasing at " +
                                std::to_string(k));
    const std::size_t steps = times.size() - 1;
    if (rates.size() != steps && rates.size() != times.size())
        throw ShapeMismatch("money_market_path: rates length " +
                            std::to_string(rates.size()) + " for " +
                            std::to_string(times.size()) + " time points");
    std::vector<double> m(times.size());
    m[0] = m0;
    for (std::size_t k = 0; k < steps; ++k)
        m[k + 1] = m[k] * std::exp(rates[k] * (times[k + 1] - times[k]));
    return m;
}

/// Excess expected dollar return vector mu − r·S. The money market
/// component is zero whenever the sample honors its invariant.
inline std::vector<double> excess_drift(const MarketSample& s) {
    std::vector<double> e(s.prices.size());
    for (std::size_t i = 0; i < e.size(); ++i)
        e[i] = s.drifts[i] - s.short_rate * s.prices[i];
    return e;
}

struct DeflatedCoefficients {
    std::vector<double> excess_drift;  // (mu − r·S)/M
    RealMatrix dispersion;             // sigma/M
};

/// Instantaneous coefficients of the gains process in money market units.
inline DeflatedCoefficients deflate_sample(const MarketSample& s) {
    if (!(s.deflator > 0.0))
        throw NonpositiveInitialValue("deflate_sample: deflator " +
                                      std::to_string(s.deflator));
    DeflatedCoefficients out;
    out.excess_drift = excess_drift(s);
    for (double& v : out.excess_drift) v /= s.deflator;
    out.dispersion = s.dispersion;
    for (double& v : out.dispersion.data()) v /= s.deflator;
    return out;
}

/// Cumulative dividend path in money market units:
/// D^{1/M}(t_k) = D(t_k)/M(t_k) + Σ_{j<k} D(t_j)·(r_j/M_j)·Δt_j
/// (left-point rule for the integral term).
inline std::vector<double> deflate_dividends(const std::vector<double>& dividends,
                                             const std::vector<double>& rates,
                                             const std::vector<double>& deflator,
                                             const std::vector<double>& times) {
    const std::size_t n = times.size();
    if (dividends.size() != n || deflator.size() != n ||
        (rates.size() != n && rates.size() != n - 1))
        throw ShapeMismatch("deflate_dividends: grid shapes disagree");
    std::vector<double> out(n);
    double integral = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        out[k] = dividends[k] / deflator[k] + integral;
        if (k + 1 < n)
            integral += dividends[k] * (rates[k] / deflator[k]) * (times[k + 1] - times[k]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// ledgers

/// Value, gains and implied dividends of a strategy over the realized grid,
/// in currency units or (deflated = true) in money market units. Gains
/// accumulate by the left-point rule over the realized per-security gains
/// path G = S + D (or its deflated counterpart).
inline StrategyLedger strategy_ledger(const TradingStrategy& strat, const MarketModel& model,
                                      bool deflated = false) {
    if (model.n_paths == 0 || model.n_times() == 0)
        throw MissingIncrements("strategy_ledger: model has no realized grid");
    if (strat.n_paths() != model.n_paths || strat.n_times() != model.n_times())
        throw ShapeMismatch("strategy_ledger: strategy grid " +
                            std::to_string(strat.n_paths()) + "x" +
                            std::to_string(strat.n_times()) + " vs model " +
                            std::to_string(model.n_paths) + "x" +
                            std::to_string(model.n_times()));
    const std::size_t nt = model.n_times();
    const std::size_t ns = model.n_securities;

    StrategyLedger ledger;
    ledger.value.assign(model.n_paths, std::vector<double>(nt, 0.0));
    ledger.gains = ledger.value;
    ledger.dividends = ledger.value;

    for (std::size_t p = 0; p < model.n_paths; ++p) {
        // per-security prices and gains on this path, deflated if requested
        std::vector<std::vector<double>> price(nt, std::vector<double>(ns));
        std::vector<std::vector<double>> gains_path(nt, std::vector<double>(ns));
        for (std::size_t i = 0; i < ns; ++i) {
            std::vector<double> div(nt), rate(nt), defl(nt);
            for (std::size_t k = 0; k < nt; ++k) {
                const MarketSample& s = model.sample(p, k);
                div[k] = s.cum_dividends[i];
                rate[k] = s.short_rate;
                defl[k] = s.deflator;
            }
            if (deflated) {
                const std::vector<double> div_defl =
                    deflate_dividends(div, rate, defl, model.times);
                for (std::size_t k = 0; k < nt; ++k) {
                    price[k][i] = model.sample(p, k).prices[i] / defl[k];
                    gains_path[k][i] = price[k][i] + div_defl[k];
                }
            } else {
                for (std::size_t k = 0; k < nt; ++k) {
                    price[k][i] = model.sample(p, k).prices[i];
                    gains_path[k][i] = price[k][i] + div[k];
                }
            }
        }

        const auto& h = strat.holdings[p];
        for (std::size_t k = 0; k < nt; ++k)
            if (h[k].size() != ns)
                throw ShapeMismatch("strategy_ledger: holdings length at (" +
                                    std::to_string(p) + ", " + std::to_string(k) + ")");

        double gains = dot(std::span<const double>(h[0]),
                           std::span<const double>(gains_path[0]));
        for (std::size_t k = 0; k < nt; ++k) {
            if (k > 0) {
                double step = 0.0;
                for (std::size_t i = 0; i < ns; ++i)
                    step += h[k - 1][i] * (gains_path[k][i] - gains_path[k - 1][i]);
                gains += step;
            }
            const double value = dot(std::span<const double>(h[k]),
                                     std::span<const double>(price[k]));
            ledger.value[p][k] = value;
            ledger.gains[p][k] = gains;
            ledger.dividends[p][k] = gains - value;
        }
    }
    return ledger;
}

/// True when the strategy paid out nothing: max |dividends| over the grid
/// stays below tol·(1 + max |value|).
inline bool self_financing_check(const StrategyLedger& ledger,
                                 const ToleranceConfig& tol = {}) {
    double max_div = 0.0, max_val = 0.0;
    for (std::size_t p = 0; p < ledger.value.size(); ++p)
        for (std::size_t k = 0; k < ledger.value[p].size(); ++k) {
            max_div = std::max(max_div, std::abs(ledger.dividends[p][k]));
            max_val = std::max(max_val, std::abs(ledger.value[p][k]));
        }
    return max_div <= tol.residual_tol * (1.0 + max_val);
}

/// Self-financing completion: reinvests the strategy's accumulated deflated
/// dividends into the money market security. The completed strategy has the
/// same dispersion and the same excess expected return at every sample
/// (only the money market holding changes), pays no dividends, and its
/// deflated value equals the original strategy's deflated gains.
inline TradingStrategy self_financing_completion(const TradingStrategy& strat,
                                                 const MarketModel& model) {
    const StrategyLedger deflated = strategy_ledger(strat, model, /*deflated=*/true);
    TradingStrategy out = strat;
    for (std::size_t p = 0; p < model.n_paths; ++p)
        for (std::size_t k = 0; k < model.n_times(); ++k)
            out.holdings[p][k][model.money_market_index] += deflated.dividends[p][k];
    return out;
}

// ---------------------------------------------------------------------------
// validation

namespace detail {

inline std::string at(std::size_t path, std::size_t t, const char* field) {
    return std::string(" at (path ") + std::to_string(path) + ", t_index " +
           std::to_string(t) + ", field " + field + ")";
}

}  // namespace detail

/// Checks every grid and sample invariant: shapes, finiteness, positive
/// deflator, the money market row (zero dispersion, drift r·S, zero
/// dividends, price equal to the deflator) and the deflator recursion along
/// each path. Throws InvariantError / ShapeMismatch with the offending
/// (path, t_index, field) location.
inline void validate_model(const MarketModel& model, const ToleranceConfig& tol = {}) {
    if (model.n_securities == 0 || model.n_factors == 0 || model.n_paths == 0)
        throw InvariantError("model: securities, factors and paths must be positive");
    if (model.times.empty()) throw InvariantError("model: empty time grid");
    for (std::size_t k = 0; k + 1 < model.times.size(); ++k)
        if (!(model.times[k] < model.times[k + 1]))
            throw InvariantError("model: times not strictly increasing at index " +
                                 std::to_string(k));
    if (model.money_market_index >= model.n_securities)
        throw InvariantError("model: money_market_index out of range");
    if (model.samples.size() != model.n_paths)
        throw ShapeMismatch("model: sample grid has " +
                            std::to_string(model.samples.size()) + " paths, expected " +
                            std::to_string(model.n_paths));

    const std::size_t mm = model.money_market_index;
    for (std::size_t p = 0; p < model.n_paths; ++p) {
        if (model.samples[p].size() != model.times.size())
            throw ShapeMismatch("model: path " + std::to_string(p) + " has " +
                                std::to_string(model.samples[p].size()) + " samples");
        for (std::size_t k = 0; k < model.times.size(); ++k) {
            const MarketSample& s = model.samples[p][k];
            if (s.prices.size() != model.n_securities ||
                s.drifts.size() != model.n_securities ||
                s.cum_dividends.size() != model.n_securities)
                throw ShapeMismatch("model: vector length" + detail::at(p, k, "S/mu/D"));
            if (s.dispersion.rows() != model.n_securities ||
                s.dispersion.cols() != model.n_factors)
                throw ShapeMismatch("model: dispersion shape" + detail::at(p, k, "sigma"));
            if (!all_finite(s.prices) || !all_finite(s.drifts) ||
                !all_finite(s.cum_dividends) || !s.dispersion.is_finite() ||
                !std::isfinite(s.short_rate) || !std::isfinite(s.deflator))
                throw InvariantError("model: non-finite entry" + detail::at(p, k, "sample"));
            if (!(s.deflator > 0.0))
                throw InvariantError("model: nonpositive deflator" + detail::at(p, k, "M"));

            const double sigma_scale = max_abs(s.dispersion);
            for (std::size_t j = 0; j < model.n_factors; ++j)
                if (std::abs(s.dispersion(mm, j)) >
                    tol.residual_tol * (1.0 + sigma_scale))
                    throw InvariantError("model: money market dispersion row not zero" +
                                         detail::at(p, k, "sigma"));
            if (std::abs(s.drifts[mm] - s.short_rate * s.prices[mm]) >
                tol.residual_tol * (1.0 + std::abs(s.drifts[mm])))
                throw InvariantError("model: money market drift != r*S" +
                                     detail::at(p, k, "mu"));
            if (std::abs(s.cum_dividends[mm]) > tol.residual_tol)
                throw InvariantError("model: money market dividends not zero" +
                                     detail::at(p, k, "D"));
            if (k == 0)
                for (std::size_t i = 0; i < model.n_securities; ++i)
                    if (std::abs(s.cum_dividends[i]) > tol.residual_tol)
                        throw InvariantError("model: cumulative dividends must start at 0" +
                                             detail::at(p, k, "D"));
            if (std::abs(s.prices[mm] - s.deflator) >
                tol.residual_tol * (1.0 + s.deflator))
                throw InvariantError("model: money market price != deflator" +
                                     detail::at(p, k, "S"));
            if (k > 0) {
                const MarketSample& prev = model.samples[p][k - 1];
                const double dt = model.times[k] - model.times[k - 1];
                const double expected = prev.deflator * std::exp(prev.short_rate * dt);
                if (std::abs(s.deflator - expected) >
                    tol.residual_tol * (1.0 + std::abs(expected)))
                    throw InvariantError("model: deflator breaks the exponential recursion" +
                                         detail::at(p, k, "M"));
            }
        }
    }
    if (model.wiener_increments) {
        const auto& dw = *model.wiener_increments;
        if (dw.size() != model.n_paths)
            throw ShapeMismatch("model: dW path count");
        for (std::size_t p = 0; p < dw.size(); ++p) {
            if (dw[p].size() != model.n_steps())
                throw ShapeMismatch("model: dW step count at path " + std::to_string(p));
            for (std::size_t k = 0; k < dw[p].size(); ++k)
                if (dw[p][k].size() != model.n_factors || !all_finite(dw[p][k]))
                    throw ShapeMismatch("model: dW entry" + detail::at(p, k, "dW"));
        }
    }
}

// ---------------------------------------------------------------------------
// simulation

/// Coefficient template for Euler-Maruyama simulation. Coefficients may
/// depend on time and current prices; constant coefficients are the common
/// case (see `constant`). The money market security is driven by the short
/// rate alone, whatever the template says about it.
struct SimulationTemplate {
    std::size_t n_securities = 0;
    std::size_t n_factors = 0;
    std::size_t n_paths = 1;
    std::vector<double> times;
    std::size_t money_market_index = 0;
    double initial_deflator = 1.0;
    std::vector<double> initial_prices;
    std::function<double(double)> short_rate;
    std::function<std::vector<double>(double, const std::vector<double>&)> drifts;
    std::function<RealMatrix(double, const std::vector<double>&)> dispersion;
    // cumulative dividends per security as a function of time; zero if unset
    std::function<std::vector<double>(double)> cum_dividends;

    static SimulationTemplate constant(std::vector<double> s0, std::vector<double> mu,
                                       RealMatrix sigma, double rate,
                                       std::vector<double> times, std::size_t n_paths = 1,
                                       std::size_t money_market_index = 0,
                                       double m0 = 1.0) {
        SimulationTemplate t;
        t.n_securities = s0.size();
        t.n_factors = sigma.cols();
        t.n_paths = n_paths;
        t.times = std::move(times);
        t.money_market_index = money_market_index;
        t.initial_deflator = m0;
        t.initial_prices = std::move(s0);
        t.short_rate = [rate](double) { return rate; };
        t.drifts = [mu = std::move(mu)](double, const std::vector<double>&) { return mu; };
        t.dispersion = [sigma = std::move(sigma)](double, const std::vector<double>&) {
            return sigma;
        };
        return t;
    }
};

/// Simulates realized price paths with Gaussian increments of variance Δt
/// per factor: G_{k+1} = G_k + mu_k·Δt + sigma_k·ΔW_k, S = G − D. Each path
/// draws from its own counter-based stream, so the result is independent of
/// evaluation order. The money market price follows the exact exponential
/// recursion and its drift is r·M at every sample.
inline MarketModel simulate_paths(const SimulationTemplate& tmpl, std::uint64_t seed) {
    if (tmpl.n_securities == 0 || tmpl.n_factors == 0 || tmpl.n_paths == 0)
        throw InvalidTemplate("simulate_paths: empty dimensions");
    if (tmpl.times.size() < 1)
        throw InvalidTemplate("simulate_paths: empty time grid");
    for (std::size_t k = 0; k + 1 < tmpl.times.size(); ++k)
        if (!(tmpl.times[k] < tmpl.times[k + 1]))
            throw InvalidTemplate("simulate_paths: times not strictly increasing");
    if (tmpl.money_market_index >= tmpl.n_securities)
        throw InvalidTemplate("simulate_paths: money_market_index out of range");
    if (!(tmpl.initial_deflator > 0.0))
        throw InvalidTemplate("simulate_paths: initial deflator must be positive");
    if (tmpl.initial_prices.size() != tmpl.n_securities)
        throw InvalidTemplate("simulate_paths: initial prices length");
    if (!tmpl.short_rate || !tmpl.drifts || !tmpl.dispersion)
        throw InvalidTemplate("simulate_paths: missing coefficient functions");

    const std::size_t mm = tmpl.money_market_index;
    const std::size_t nt = tmpl.times.size();
    const auto dividends_at = [&](double t) {
        if (!tmpl.cum_dividends) return std::vector<double>(tmpl.n_securities, 0.0);
        std::vector<double> d = tmpl.cum_dividends(t);
        if (d.size() != tmpl.n_securities)
            throw InvalidTemplate("simulate_paths: dividend vector length");
        return d;
    };
    {
        const std::vector<double> d0 = dividends_at(tmpl.times[0]);
        if (max_abs(d0) != 0.0)
            throw InvalidTemplate("simulate_paths: cumulative dividends must start at 0");
    }

    MarketModel model;
    model.n_securities = tmpl.n_securities;
    model.n_factors = tmpl.n_factors;
    model.n_paths = tmpl.n_paths;
    model.times = tmpl.times;
    model.money_market_index = mm;
    model.seed = seed;
    model.samples.assign(tmpl.n_paths, std::vector<MarketSample>(nt));
    model.wiener_increments.emplace(
        tmpl.n_paths,
        std::vector<std::vector<double>>(nt - 1, std::vector<double>(tmpl.n_factors)));

    for (std::size_t p = 0; p < tmpl.n_paths; ++p) {
        CounterRng rng(seed, p);
        double deflator = tmpl.initial_deflator;
        std::vector<double> prices = tmpl.initial_prices;
        prices[mm] = deflator;
        std::vector<double> div = dividends_at(tmpl.times[0]);
        div[mm] = 0.0;
        std::vector<double> gains(tmpl.n_securities);
        for (std::size_t i = 0; i < gains.size(); ++i) gains[i] = prices[i] + div[i];

        for (std::size_t k = 0; k < nt; ++k) {
            const double t = tmpl.times[k];
            MarketSample s;
            s.prices = prices;
            s.cum_dividends = div;
            s.short_rate = tmpl.short_rate(t);
            s.deflator = deflator;
            s.dispersion = tmpl.dispersion(t, prices);
            if (s.dispersion.rows() != tmpl.n_securities ||
                s.dispersion.cols() != tmpl.n_factors)
                throw InvalidTemplate("simulate_paths: dispersion shape from template");
            for (std::size_t j = 0; j < tmpl.n_factors; ++j) s.dispersion(mm, j) = 0.0;
            s.drifts = tmpl.drifts(t, prices);
            if (s.drifts.size() != tmpl.n_securities)
                throw InvalidTemplate("simulate_paths: drift length from template");
            s.drifts[mm] = s.short_rate * deflator;

            if (k + 1 < nt) {
                const double dt = tmpl.times[k + 1] - tmpl.times[k];
                const double sqrt_dt = std::sqrt(dt);
                std::vector<double>& dw = (*model.wiener_increments)[p][k];
                for (std::size_t j = 0; j < tmpl.n_factors; ++j)
                    dw[j] = sqrt_dt * rng.normal();
                for (std::size_t i = 0; i < tmpl.n_securities; ++i) {
                    if (i == mm) continue;
                    double shock = 0.0;
                    for (std::size_t j = 0; j < tmpl.n_factors; ++j)
                        shock += s.dispersion(i, j) * dw[j];
                    gains[i] += s.drifts[i] * dt + shock;
                }
                deflator *= std::exp(s.short_rate * dt);
                div = dividends_at(tmpl.times[k + 1]);
                div[mm] = 0.0;
                for (std::size_t i = 0; i < tmpl.n_securities; ++i)
                    prices[i] = gains[i] - div[i];
                prices[mm] = deflator;
                gains[mm] = deflator;
            }
            model.samples[p][k] = std::move(s);
        }
    }
    return model;
}

}  // namespace riskgate
