#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "riskgate/errors.hpp"
#include "riskgate/market.hpp"
#include "riskgate/matrix.hpp"
#include "riskgate/selection.hpp"
#include "riskgate/tolerance.hpp"

namespace riskgate {

enum class SampleStatus { Free, Violated };

/// Outcome of classifying one market sample.
///
/// Free: the excess drift e = mu − r·S lies in the column span of the
/// dispersion; psi solves sigma·sigmaᵀ·psiᵀ = e and lambda_star = psi·sigma
/// is the minimal price of risk.
///
/// Violated: no price of risk exists; certificate_z satisfies Z·e = 1 and
/// Z·sigma = 0, and theta = Z − (Z·S/M)·b is the zero-value arbitrage
/// strategy built from it (b the money market unit strategy), with
/// excess_margin = theta·e normalized to 1.
struct SampleVerdict {
    SampleStatus status = SampleStatus::Free;
    std::vector<double> psi;
    std::vector<double> lambda_star;
    double membership_residual = 0.0;
    std::vector<double> certificate_z;
    std::vector<double> theta;
    double excess_margin = 0.0;
    bool marginal = false;

    bool free() const { return status == SampleStatus::Free; }
};

/// Classifies one sample. Membership of the excess drift is tested against
/// the dispersion matrix itself (not the Gram matrix, whose condition number
/// is squared); psi is then recovered from the Gram system, whose
/// consistency the membership verdict already guarantees.
inline SampleVerdict classify_sample(const MarketSample& s, std::size_t money_market_index,
                                     const ToleranceConfig& tol = {}) {
    const std::vector<double> e = excess_drift(s);
    const RealMatrix sigma_t = transpose(s.dispersion);
    const SpanMembership membership = row_span_membership(e, sigma_t, tol);

    SampleVerdict verdict;
    verdict.membership_residual = membership.residual;
    if (membership.member) {
        verdict.status = SampleStatus::Free;
        const RealMatrix gram = matmul(s.dispersion, sigma_t);
        const RankFactorization f = orthonormal_row_projector(gram, tol);
        verdict.psi = selector_row_solution(e, gram, f);
        // one refinement pass: the Gram system squares the dispersion's
        // condition number, and the correction stays on the pivot support
        std::vector<double> defect = row_times_matrix(verdict.psi, gram);
        for (std::size_t i = 0; i < defect.size(); ++i) defect[i] = e[i] - defect[i];
        const std::vector<double> update = selector_row_solution(defect, gram, f);
        for (std::size_t i = 0; i < verdict.psi.size(); ++i)
            verdict.psi[i] += update[i];
        verdict.lambda_star = row_times_matrix(verdict.psi, s.dispersion);
    } else {
        verdict.status = SampleStatus::Violated;
        bool knife_edge = false;
        try {
            verdict.certificate_z = dual_certificate(e, s.dispersion, tol);
        } catch (const NoCertificate&) {
            knife_edge = true;
            // the dispersion test and the augmented-system test disagree:
            // the sample sits on the tolerance knife edge. The dispersion
            // test owns the verdict; take the selector's certificate as is
            // and let the marginal flag surface the conditioning problem.
            RealMatrix augmented(s.dispersion.rows(), s.dispersion.cols() + 1);
            for (std::size_t i = 0; i < s.dispersion.rows(); ++i) {
                augmented(i, 0) = e[i];
                for (std::size_t j = 0; j < s.dispersion.cols(); ++j)
                    augmented(i, j + 1) = s.dispersion(i, j);
            }
            std::vector<double> target(s.dispersion.cols() + 1, 0.0);
            target[0] = 1.0;
            verdict.certificate_z = selector_row_solution(
                target, augmented, orthonormal_row_projector(augmented, tol));
        }
        const double cost = dot(std::span<const double>(verdict.certificate_z),
                                std::span<const double>(s.prices));
        verdict.theta = verdict.certificate_z;
        verdict.theta[money_market_index] -= cost / s.deflator;
        verdict.excess_margin =
            dot(std::span<const double>(verdict.theta), std::span<const double>(e));
        // knife-edge violations (within a factor 10 of the threshold, or with
        // a disagreeing certificate test) are flagged, not reclassified
        verdict.marginal =
            knife_edge ||
            membership.residual <= 10.0 * tol.residual_tol * (1.0 + norm2(e));
    }
    return verdict;
}

/// True iff sigma·lambdaᵀ reproduces the excess drift at residual_tol.
inline bool price_of_risk_check(std::span<const double> lambda, const MarketSample& s,
                                const ToleranceConfig& tol = {}) {
    if (lambda.size() != s.n_factors())
        throw DimensionMismatch("price_of_risk_check: lambda length " +
                                std::to_string(lambda.size()) + " vs " +
                                std::to_string(s.n_factors()) + " factors");
    const std::vector<double> e = excess_drift(s);
    const std::vector<double> image = matrix_times_col(s.dispersion, lambda);
    std::vector<double> diff(e.size());
    for (std::size_t i = 0; i < e.size(); ++i) diff[i] = image[i] - e[i];
    return norm2(diff) <= tol.residual_tol * (1.0 + norm2(e));
}

/// Squared-length gap lambda·lambdaᵀ − lambda*·lambda*ᵀ of a competing price
/// of risk against the minimal one; nonnegative up to tolerance.
inline double minimality_gap(std::span<const double> lambda, const MarketSample& s,
                             const SampleVerdict& verdict,
                             const ToleranceConfig& tol = {}) {
    if (!verdict.free())
        throw InvalidLambda("minimality_gap: verdict is not Free");
    if (!price_of_risk_check(lambda, s, tol))
        throw InvalidLambda("minimality_gap: lambda is not a price of risk at tolerance");
    return dot(lambda, lambda) -
           dot(std::span<const double>(verdict.lambda_star),
               std::span<const double>(verdict.lambda_star));
}

/// Betas of the individual securities with respect to a reference strategy:
/// sigma·sigmaᵀ·deltaᵀ over the strategy's dollar return variance, or zero
/// when that variance vanishes (at tolerance).
inline std::vector<double> fundamental_betas(std::span<const double> delta,
                                             const MarketSample& s,
                                             const ToleranceConfig& tol = {}) {
    if (delta.size() != s.n_securities())
        throw DimensionMismatch("fundamental_betas: holdings length");
    const std::vector<double> loadings = row_times_matrix(delta, s.dispersion);
    const double variance = dot(std::span<const double>(loadings),
                                std::span<const double>(loadings));
    std::vector<double> betas(s.n_securities(), 0.0);
    if (variance <= tol.residual_tol * (1.0 + variance)) return betas;
    for (std::size_t i = 0; i < betas.size(); ++i)
        betas[i] = dot(s.dispersion.row(i), std::span<const double>(loadings)) / variance;
    return betas;
}

/// Pricing error of the CAPM equation for a candidate market strategy:
/// (mu − r·S) − b_delta · (delta·(mu − r·S)), componentwise.
inline std::vector<double> capm_residual(std::span<const double> delta,
                                         const MarketSample& s,
                                         const ToleranceConfig& tol = {}) {
    const std::vector<double> e = excess_drift(s);
    const std::vector<double> betas = fundamental_betas(delta, s, tol);
    const double market_excess = dot(delta, std::span<const double>(e));
    std::vector<double> resid(e.size());
    for (std::size_t i = 0; i < e.size(); ++i)
        resid[i] = e[i] - betas[i] * market_excess;
    return resid;
}

/// The CAPM right-hand side is invariant under rescaling the reference
/// strategy by any nonzero c (betas scale by 1/c). Verifies that identity
/// at one sample.
inline bool scaling_invariance_check(std::span<const double> delta, double c,
                                     const MarketSample& s,
                                     const ToleranceConfig& tol = {}) {
    if (c == 0.0) throw Error("scaling_invariance_check: scale must be nonzero");
    const std::vector<double> e = excess_drift(s);
    std::vector<double> scaled(delta.begin(), delta.end());
    for (double& v : scaled) v *= c;

    const std::vector<double> base_betas = fundamental_betas(delta, s, tol);
    const std::vector<double> scaled_betas =
        fundamental_betas(std::span<const double>(scaled), s, tol);
    const double base_excess = dot(delta, std::span<const double>(e));
    const double scaled_excess =
        dot(std::span<const double>(scaled), std::span<const double>(e));
    for (std::size_t i = 0; i < e.size(); ++i) {
        const double lhs = scaled_betas[i] * scaled_excess;
        const double rhs = base_betas[i] * base_excess;
        if (std::abs(lhs - rhs) > tol.residual_tol * (1.0 + std::abs(rhs))) return false;
    }
    return true;
}

struct CapmStrategyResult {
    TradingStrategy strategy;
    double max_residual = 0.0;
};

/// Builds the strategy whose dispersion is the minimal price of risk at
/// every sample; it satisfies the CAPM equation wherever the market is
/// arbitrage-free. Throws ArbitragePresent listing the infeasible samples
/// otherwise.
inline CapmStrategyResult capm_strategy(const MarketModel& model,
                                        const ToleranceConfig& tol = {}) {
    CapmStrategyResult out;
    out.strategy.holdings.assign(
        model.n_paths, std::vector<std::vector<double>>(model.n_times()));
    std::vector<std::pair<std::size_t, std::size_t>> infeasible;
    for (std::size_t p = 0; p < model.n_paths; ++p)
        for (std::size_t k = 0; k < model.n_times(); ++k) {
            const MarketSample& s = model.sample(p, k);
            const SampleVerdict verdict =
                classify_sample(s, model.money_market_index, tol);
            if (!verdict.free()) {
                infeasible.emplace_back(p, k);
                out.strategy.holdings[p][k].assign(model.n_securities, 0.0);
                continue;
            }
            out.strategy.holdings[p][k] = verdict.psi;
            const std::vector<double> resid = capm_residual(verdict.psi, s, tol);
            out.max_residual = std::max(out.max_residual, norm2(resid));
        }
    if (!infeasible.empty())
        throw ArbitragePresent("capm_strategy: " + std::to_string(infeasible.size()) +
                                   " sample(s) admit arbitrage",
                               std::move(infeasible));
    return out;
}

/// Turns a riskless strategy with positive excess return at the flagged
/// samples into a zero-value arbitrage strategy: the position's cost is
/// financed by shorting the money market, so theta·S = 0, theta·sigma = 0
/// and theta·mu = delta·(mu − r·S) > 0 there; theta vanishes elsewhere.
inline TradingStrategy zero_value_certificate(const TradingStrategy& strat,
                                              const MarketModel& model,
                                              const std::vector<GridIndex>& flagged,
                                              const ToleranceConfig& tol = {}) {
    if (strat.n_paths() != model.n_paths || strat.n_times() != model.n_times())
        throw ShapeMismatch("zero_value_certificate: strategy grid vs model grid");
    TradingStrategy out;
    out.holdings.assign(model.n_paths,
                        std::vector<std::vector<double>>(
                            model.n_times(), std::vector<double>(model.n_securities, 0.0)));
    for (const GridIndex& idx : flagged) {
        if (idx.path >= model.n_paths || idx.t_index >= model.n_times())
            throw InvalidSpec("zero_value_certificate: flagged index off the grid");
        const MarketSample& s = model.sample(idx.path, idx.t_index);
        const std::vector<double>& delta = strat.holdings[idx.path][idx.t_index];
        const std::vector<double> loadings =
            row_times_matrix(std::span<const double>(delta), s.dispersion);
        const double variance = dot(std::span<const double>(loadings),
                                    std::span<const double>(loadings));
        if (variance > tol.residual_tol * (1.0 + variance))
            throw NotRiskless("zero_value_certificate: nonzero dispersion at (path " +
                              std::to_string(idx.path) + ", t_index " +
                              std::to_string(idx.t_index) + ")");
        const std::vector<double> e = excess_drift(s);
        const double excess =
            dot(std::span<const double>(delta), std::span<const double>(e));
        if (!(excess > 0.0))
            throw NoPositiveExcess("zero_value_certificate: excess " +
                                   std::to_string(excess) + " at (path " +
                                   std::to_string(idx.path) + ", t_index " +
                                   std::to_string(idx.t_index) + ")");
        std::vector<double>& theta = out.holdings[idx.path][idx.t_index];
        theta = delta;
        const double cost = dot(std::span<const double>(delta),
                                std::span<const double>(s.prices));
        theta[model.money_market_index] -= cost / s.deflator;
    }
    return out;
}

// ---------------------------------------------------------------------------
// money market accounts and rate consistency

/// Rates and deflator paths derived from a candidate money market strategy:
/// M = b·S and r = (b·mu)/M per sample. Throws NotAMoneyMarketAccount when
/// the strategy carries dispersion or its value is not strictly positive.
struct AccountPaths {
    std::vector<std::vector<double>> rates;     // [path][time]
    std::vector<std::vector<double>> deflator;  // [path][time]
};

inline AccountPaths account_paths(const TradingStrategy& account, const MarketModel& model,
                                  const ToleranceConfig& tol = {}) {
    if (account.n_paths() != model.n_paths || account.n_times() != model.n_times())
        throw ShapeMismatch("account_paths: account grid vs model grid");
    AccountPaths out;
    out.rates.assign(model.n_paths, std::vector<double>(model.n_times(), 0.0));
    out.deflator = out.rates;
    for (std::size_t p = 0; p < model.n_paths; ++p)
        for (std::size_t k = 0; k < model.n_times(); ++k) {
            const MarketSample& s = model.sample(p, k);
            const std::vector<double>& b = account.holdings[p][k];
            if (b.size() != model.n_securities)
                throw ShapeMismatch("account_paths: holdings length");
            const std::vector<double> loadings =
                row_times_matrix(std::span<const double>(b), s.dispersion);
            if (norm2(loadings) > tol.residual_tol * (1.0 + max_abs(s.dispersion)))
                throw NotAMoneyMarketAccount("account has dispersion at (path " +
                                             std::to_string(p) + ", t_index " +
                                             std::to_string(k) + ")");
            const double value =
                dot(std::span<const double>(b), std::span<const double>(s.prices));
            if (!(value > 0.0))
                throw NotAMoneyMarketAccount("account value " + std::to_string(value) +
                                             " at (path " + std::to_string(p) +
                                             ", t_index " + std::to_string(k) + ")");
            out.deflator[p][k] = value;
            out.rates[p][k] =
                dot(std::span<const double>(b), std::span<const double>(s.drifts)) / value;
        }
    return out;
}

/// Unit holding of one security, as a strategy grid.
inline TradingStrategy unit_security_strategy(const MarketModel& model,
                                              std::size_t security) {
    if (security >= model.n_securities)
        throw InvalidSpec("unit_security_strategy: security index out of range");
    TradingStrategy s;
    s.holdings.assign(model.n_paths,
                      std::vector<std::vector<double>>(
                          model.n_times(), std::vector<double>(model.n_securities, 0.0)));
    for (auto& path : s.holdings)
        for (auto& h : path) h[security] = 1.0;
    return s;
}

struct RateConsistency {
    bool consistent = false;
    double max_rate_gap = 0.0;
    double max_normalized_deflator_gap = 0.0;
    // present iff inconsistent: the long-cheap / short-rich combination with
    // zero value, zero dispersion and drift |r1 − r2| at every sample
    std::optional<TradingStrategy> witness;
    std::vector<std::vector<double>> witness_margin;  // [path][time], |r1 − r2|
};

/// Compares two money market accounts. Consistent when the derived rates
/// agree at every sample (then the deflators normalized by their initial
/// values agree too); otherwise returns the explicit zero-value arbitrage
/// witness: hold 1/M of the higher-rate account against 1/M of the other.
inline RateConsistency rate_consistency(const TradingStrategy& account_a,
                                        const TradingStrategy& account_b,
                                        const MarketModel& model,
                                        const ToleranceConfig& tol = {}) {
    const AccountPaths a = account_paths(account_a, model, tol);
    const AccountPaths b = account_paths(account_b, model, tol);

    RateConsistency out;
    double max_rate = 0.0;
    for (std::size_t p = 0; p < model.n_paths; ++p)
        for (std::size_t k = 0; k < model.n_times(); ++k) {
            out.max_rate_gap =
                std::max(out.max_rate_gap, std::abs(a.rates[p][k] - b.rates[p][k]));
            max_rate = std::max({max_rate, std::abs(a.rates[p][k]),
                                 std::abs(b.rates[p][k])});
            const double na = a.deflator[p][k] / a.deflator[p][0];
            const double nb = b.deflator[p][k] / b.deflator[p][0];
            out.max_normalized_deflator_gap =
                std::max(out.max_normalized_deflator_gap, std::abs(na - nb));
        }
    out.consistent = out.max_rate_gap <= tol.residual_tol * (1.0 + max_rate);
    if (out.consistent) return out;

    TradingStrategy witness;
    witness.holdings.assign(model.n_paths,
                            std::vector<std::vector<double>>(
                                model.n_times(),
                                std::vector<double>(model.n_securities, 0.0)));
    out.witness_margin.assign(model.n_paths, std::vector<double>(model.n_times(), 0.0));
    for (std::size_t p = 0; p < model.n_paths; ++p)
        for (std::size_t k = 0; k < model.n_times(); ++k) {
            const double sign = (b.rates[p][k] > a.rates[p][k]) ? 1.0 : -1.0;
            const double wa = -sign / a.deflator[p][k];
            const double wb = sign / b.deflator[p][k];
            std::vector<double>& h = witness.holdings[p][k];
            for (std::size_t i = 0; i < model.n_securities; ++i)
                h[i] = wa * account_a.holdings[p][k][i] + wb * account_b.holdings[p][k][i];
            out.witness_margin[p][k] = std::abs(a.rates[p][k] - b.rates[p][k]);
        }
    out.witness = std::move(witness);
    return out;
}

// ---------------------------------------------------------------------------
// whole-grid analysis

struct RateComparisonRecord {
    std::size_t account_a = 0;  // security indices of the compared accounts
    std::size_t account_b = 0;
    bool consistent = false;
    double max_rate_gap = 0.0;
};

struct AnalysisReport {
    std::vector<std::vector<SampleVerdict>> verdicts;  // [path][time]
    std::vector<GridIndex> violated;
    std::vector<GridIndex> marginal;
    std::vector<GridIndex> zero_variance_free;  // Free samples priced by the
                                                // zero-excess branch
    std::size_t free_count = 0;
    std::size_t violated_count = 0;
    double max_capm_residual = 0.0;
    std::vector<double> max_price_of_risk_norm;  // per path, max ‖lambda*‖
    std::vector<RateComparisonRecord> rate_consistency;
    int exit_status = 0;  // 0 arbitrage-free, 2 violations found
};

namespace detail {

// Riskless securities are money market candidates: zero dispersion row,
// strictly positive price, no dividends, at every sample.
inline std::vector<std::size_t> riskless_securities(const MarketModel& model,
                                                    const ToleranceConfig& tol) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < model.n_securities; ++i) {
        bool riskless = true;
        for (std::size_t p = 0; p < model.n_paths && riskless; ++p)
            for (std::size_t k = 0; k < model.n_times() && riskless; ++k) {
                const MarketSample& s = model.sample(p, k);
                for (std::size_t j = 0; j < model.n_factors; ++j)
                    if (std::abs(s.dispersion(i, j)) >
                        tol.residual_tol * (1.0 + max_abs(s.dispersion))) {
                        riskless = false;
                        break;
                    }
                if (!(s.prices[i] > 0.0) ||
                    std::abs(s.cum_dividends[i]) > tol.residual_tol)
                    riskless = false;
            }
        if (riskless) out.push_back(i);
    }
    return out;
}

}  // namespace detail

/// Classifies every sample of the grid. The model is instantaneously
/// arbitrage-free iff violated_count == 0. Aggregates are reduced in index
/// order, so a threaded run reproduces the serial report bit for bit.
inline AnalysisReport analyze(const MarketModel& model, const ToleranceConfig& tol = {},
                              std::size_t n_threads = 1) {
    AnalysisReport report;
    report.verdicts.assign(model.n_paths, std::vector<SampleVerdict>(model.n_times()));

    const std::size_t total = model.n_paths * model.n_times();
    const std::size_t workers = std::max<std::size_t>(1, std::min(n_threads, total));
    const auto classify_range = [&](std::size_t begin, std::size_t end) {
        for (std::size_t flat = begin; flat < end; ++flat) {
            const std::size_t p = flat / model.n_times();
            const std::size_t k = flat % model.n_times();
            report.verdicts[p][k] =
                classify_sample(model.sample(p, k), model.money_market_index, tol);
        }
    };
    if (workers <= 1) {
        classify_range(0, total);
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (total + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t begin = w * chunk;
            const std::size_t end = std::min(total, begin + chunk);
            if (begin >= end) break;
            pool.emplace_back(classify_range, begin, end);
        }
        for (std::thread& t : pool) t.join();
    }

    report.max_price_of_risk_norm.assign(model.n_paths, 0.0);
    for (std::size_t p = 0; p < model.n_paths; ++p)
        for (std::size_t k = 0; k < model.n_times(); ++k) {
            const SampleVerdict& v = report.verdicts[p][k];
            if (v.free()) {
                ++report.free_count;
                const MarketSample& s = model.sample(p, k);
                const double resid = norm2(capm_residual(v.psi, s, tol));
                report.max_capm_residual = std::max(report.max_capm_residual, resid);
                report.max_price_of_risk_norm[p] = std::max(
                    report.max_price_of_risk_norm[p], norm2(v.lambda_star));
                const std::vector<double> loadings =
                    row_times_matrix(std::span<const double>(v.psi), s.dispersion);
                const double variance = dot(std::span<const double>(loadings),
                                            std::span<const double>(loadings));
                if (variance <= tol.residual_tol * (1.0 + variance))
                    report.zero_variance_free.push_back({p, k});
            } else {
                ++report.violated_count;
                report.violated.push_back({p, k});
            }
            if (v.marginal) report.marginal.push_back({p, k});
        }

    const std::vector<std::size_t> candidates = detail::riskless_securities(model, tol);
    for (std::size_t a = 0; a < candidates.size(); ++a)
        for (std::size_t b = a + 1; b < candidates.size(); ++b) {
            const RateConsistency rc =
                rate_consistency(unit_security_strategy(model, candidates[a]),
                                 unit_security_strategy(model, candidates[b]), model, tol);
            report.rate_consistency.push_back(
                {candidates[a], candidates[b], rc.consistent, rc.max_rate_gap});
        }

    report.exit_status = report.violated_count == 0 ? 0 : 2;
    return report;
}

}  // namespace riskgate
