#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "riskgate/engine.hpp"
#include "riskgate/errors.hpp"
#include "riskgate/market.hpp"
#include "riskgate/matrix.hpp"
#include "riskgate/rng.hpp"
#include "riskgate/selection.hpp"
#include "riskgate/tolerance.hpp"

namespace riskgate {

enum class RankProfile { Full, Deficient, Zero };

struct Injection {
    std::size_t path = 0;
    std::size_t t_index = 0;
    double strength = 0.0;
};

/// Recipe for a synthetic market: dimensions, coefficient ranges, the rank
/// profile of the dispersion and an optional list of samples to push out of
/// the arbitrage-free set.
struct ScenarioSpec {
    std::size_t n_securities = 4;
    std::size_t n_factors = 3;
    std::size_t n_paths = 1;
    std::size_t n_steps = 1;
    double horizon = 1.0;
    double rate_min = 0.0;
    double rate_max = 0.1;
    double dispersion_scale = 1.0;
    RankProfile rank_profile = RankProfile::Full;
    std::size_t deficient_rank = 0;
    std::vector<Injection> injections;
    std::uint64_t seed = 0;

    std::size_t planted_rank() const {
        const std::size_t risky = n_securities - 1;
        switch (rank_profile) {
            case RankProfile::Full: return std::min(risky, n_factors);
            case RankProfile::Deficient: return deficient_rank;
            case RankProfile::Zero: return 0;
        }
        return 0;
    }

    void validate() const {
        if (n_securities < 2)
            throw InvalidSpec("scenario: need at least a money market and one security");
        if (n_factors == 0 || n_paths == 0 || n_steps == 0)
            throw InvalidSpec("scenario: factors, paths and steps must be positive");
        if (!(horizon > 0.0)) throw InvalidSpec("scenario: horizon must be positive");
        if (!(rate_min <= rate_max)) throw InvalidSpec("scenario: empty rate range");
        if (!(dispersion_scale > 0.0))
            throw InvalidSpec("scenario: dispersion scale must be positive");
        if (rank_profile == RankProfile::Deficient &&
            (deficient_rank == 0 ||
             deficient_rank > std::min(n_securities - 1, n_factors)))
            throw InvalidSpec("scenario: deficient rank out of range");
        for (const Injection& inj : injections) {
            if (inj.path >= n_paths || inj.t_index > n_steps)
                throw InvalidSpec("scenario: injection off the grid at (path " +
                                  std::to_string(inj.path) + ", t_index " +
                                  std::to_string(inj.t_index) + ")");
            if (!(inj.strength > 0.0))
                throw InvalidSpec("scenario: injection strength must be positive");
        }
    }
};

/// Ground truth recorded while generating: the planted price of risk at
/// every sample and the indices where arbitrage was injected afterwards.
struct GenerationCertificate {
    std::vector<std::vector<std::vector<double>>> planted_lambda;  // [path][time][K]
    std::vector<GridIndex> injected;
};

namespace detail {

// rng stream tags, one per independent draw family
enum : std::uint64_t {
    kStreamRate = 1,
    kStreamPrice = 2,
    kStreamLambda = 3,
    kStreamSigma = 4,
    kStreamInject = 5,
};

// Rank-r dispersion for the risky block as a product of an (n×r) and an
// (r×K) Gaussian factor. Redraws (bumping the stream) while any
// orthonormalization residual sits near the tolerance knife edge, so the
// planted rank is numerically unambiguous.
inline RealMatrix draw_risky_dispersion(std::uint64_t seed, std::size_t path,
                                        std::size_t t, std::size_t n_risky,
                                        std::size_t n_factors, std::size_t rank,
                                        double scale) {
    if (rank == 0) return RealMatrix(n_risky, n_factors, 0.0);
    const double entry_scale = scale / std::sqrt(static_cast<double>(rank));
    for (std::uint64_t attempt = 0;; ++attempt) {
        CounterRng rng(seed, path, t, kStreamSigma + (attempt << 8));
        RealMatrix left(n_risky, rank), right(rank, n_factors);
        for (double& v : left.data()) v = rng.normal();
        for (double& v : right.data()) v = rng.normal();
        RealMatrix sigma = matmul(left, right);
        for (double& v : sigma.data()) v *= entry_scale;

        const RankFactorization f = orthonormal_row_projector(sigma);
        if (f.rank != rank) continue;
        bool well_separated = true;
        for (std::size_t i = 0; i < f.rank; ++i)
            if (1.0 / f.orthonormalizer(i, i) < 1e-4 * scale) {
                well_separated = false;
                break;
            }
        if (well_separated) return sigma;
    }
}

}  // namespace detail

/// Synthesizes an arbitrage-free market: at every sample a price of risk is
/// drawn first and the drift is built as mu = r·S + sigma·lambdaᵀ, so the
/// generated grid is Free by construction. Pure function of the spec
/// (injections in the spec are applied by the caller via inject_arbitrage).
inline std::pair<MarketModel, GenerationCertificate> generate(const ScenarioSpec& spec) {
    spec.validate();
    const std::size_t n_risky = spec.n_securities - 1;
    const std::size_t rank = spec.planted_rank();
    const std::size_t nt = spec.n_steps + 1;

    MarketModel model;
    model.n_securities = spec.n_securities;
    model.n_factors = spec.n_factors;
    model.n_paths = spec.n_paths;
    model.money_market_index = 0;
    model.seed = spec.seed;
    model.times.resize(nt);
    for (std::size_t k = 0; k < nt; ++k)
        model.times[k] = spec.horizon * static_cast<double>(k) /
                         static_cast<double>(spec.n_steps);
    model.samples.assign(spec.n_paths, std::vector<MarketSample>(nt));

    GenerationCertificate cert;
    cert.planted_lambda.assign(
        spec.n_paths,
        std::vector<std::vector<double>>(nt, std::vector<double>(spec.n_factors, 0.0)));

    for (std::size_t p = 0; p < spec.n_paths; ++p) {
        double deflator = 1.0;
        for (std::size_t k = 0; k < nt; ++k) {
            CounterRng rate_rng(spec.seed, p, k, detail::kStreamRate);
            CounterRng price_rng(spec.seed, p, k, detail::kStreamPrice);
            CounterRng lambda_rng(spec.seed, p, k, detail::kStreamLambda);

            MarketSample s;
            s.short_rate = rate_rng.uniform(spec.rate_min, spec.rate_max);
            s.deflator = deflator;
            s.prices.resize(spec.n_securities);
            s.prices[0] = deflator;
            for (std::size_t i = 1; i < spec.n_securities; ++i)
                s.prices[i] = price_rng.uniform(1.0, 100.0);
            s.cum_dividends.assign(spec.n_securities, 0.0);

            const RealMatrix risky = detail::draw_risky_dispersion(
                spec.seed, p, k, n_risky, spec.n_factors, rank, spec.dispersion_scale);
            s.dispersion = RealMatrix(spec.n_securities, spec.n_factors, 0.0);
            for (std::size_t i = 0; i < n_risky; ++i)
                for (std::size_t j = 0; j < spec.n_factors; ++j)
                    s.dispersion(i + 1, j) = risky(i, j);

            std::vector<double>& lambda = cert.planted_lambda[p][k];
            for (std::size_t j = 0; j < spec.n_factors; ++j)
                lambda[j] = lambda_rng.uniform(-2.0, 2.0);

            s.drifts.resize(spec.n_securities);
            s.drifts[0] = s.short_rate * deflator;
            for (std::size_t i = 1; i < spec.n_securities; ++i)
                s.drifts[i] = s.short_rate * s.prices[i] +
                              dot(s.dispersion.row(i), std::span<const double>(lambda));

            if (k + 1 < nt)
                deflator *= std::exp(s.short_rate * (model.times[k + 1] - model.times[k]));
            model.samples[p][k] = std::move(s);
        }
    }
    return {std::move(model), std::move(cert)};
}

/// Pushes the drift out of the dispersion column span at the requested
/// samples: adds strength·u to mu, where u is the normalized residual of a
/// seeded random direction after projection onto the span (money market
/// component zero). Throws SpanIsFull when the risky dispersion rows already
/// span the whole risky subspace.
inline std::pair<MarketModel, GenerationCertificate> inject_arbitrage(
    MarketModel model, GenerationCertificate cert, const std::vector<Injection>& injections,
    const ToleranceConfig& tol = {}) {
    const std::uint64_t seed = model.seed.value_or(0);
    const std::size_t mm = model.money_market_index;
    for (const Injection& inj : injections) {
        if (inj.path >= model.n_paths || inj.t_index >= model.n_times())
            throw InvalidSpec("inject_arbitrage: injection off the grid");
        if (!(inj.strength > 0.0)) {
            cert.injected.push_back({inj.path, inj.t_index});
            continue;  // zero strength leaves the model unchanged
        }
        MarketSample& s = model.samples[inj.path][inj.t_index];

        // risky-block column span, as row vectors of the transposed block
        const std::size_t n_risky = model.n_securities - 1;
        RealMatrix risky_t(model.n_factors, n_risky);
        {
            std::size_t col = 0;
            for (std::size_t i = 0; i < model.n_securities; ++i) {
                if (i == mm) continue;
                for (std::size_t j = 0; j < model.n_factors; ++j)
                    risky_t(j, col) = s.dispersion(i, j);
                ++col;
            }
        }
        const RankFactorization f = orthonormal_row_projector(risky_t, tol);
        if (f.rank >= n_risky)
            throw SpanIsFull("inject_arbitrage: dispersion already spans the risky "
                             "subspace at (path " +
                             std::to_string(inj.path) + ", t_index " +
                             std::to_string(inj.t_index) + ")");

        std::vector<double> direction(n_risky, 0.0);
        for (std::uint64_t attempt = 0;; ++attempt) {
            CounterRng rng(seed, inj.path, inj.t_index,
                           detail::kStreamInject + (attempt << 8));
            std::vector<double> v(n_risky);
            for (double& x : v) x = rng.normal();
            for (std::size_t i = 0; i < f.rank; ++i) {
                const double c = dot(std::span<const double>(v), f.basis.row(i));
                for (std::size_t j = 0; j < n_risky; ++j) v[j] -= c * f.basis(i, j);
            }
            const double n = norm2(v);
            if (n > 1e-6) {  // draw fell (numerically) inside the span: redraw
                for (std::size_t j = 0; j < n_risky; ++j) direction[j] = v[j] / n;
                break;
            }
        }

        std::size_t col = 0;
        for (std::size_t i = 0; i < model.n_securities; ++i) {
            if (i == mm) continue;
            s.drifts[i] += inj.strength * direction[col];
            ++col;
        }
        cert.injected.push_back({inj.path, inj.t_index});
    }
    return {std::move(model), std::move(cert)};
}

}  // namespace riskgate
