#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "riskgate/errors.hpp"
#include "riskgate/matrix.hpp"
#include "riskgate/tolerance.hpp"

namespace riskgate {

/// Rank-revealing factorization of the row space of a matrix V (M×K).
///
/// pivot_rows      indices of the lexicographically first maximal
///                 independent subset of rows, in scan order
/// orthonormalizer G (r×r), lower triangular with positive diagonal;
///                 applied to the pivot rows it orthonormalizes them
/// projector       J = G·H (r×M) where H selects the pivot rows, so that
///                 Q = J·V has orthonormal rows; columns of J at non-pivot
///                 indices are exactly zero
/// basis           Q = J·V (r×K), orthonormal rows spanning rowspan(V)
struct RankFactorization {
    std::size_t rank = 0;
    std::vector<std::size_t> pivot_rows;
    RealMatrix orthonormalizer;
    RealMatrix projector;
    RealMatrix basis;
};

struct SpanMembership {
    bool member = false;
    double residual = 0.0;
};

namespace detail {

struct GreedyGs {
    std::vector<std::size_t> pivots;
    std::vector<std::vector<double>> thetas;  // orthonormal rows, one per pivot
    std::vector<std::vector<double>> g_rows;  // combination coefficients over pivots
};

// Greedy row scan with classical Gram-Schmidt against the rows accepted so
// far. Coefficients are taken against the original row, as a single block,
// with one extra projection pass when the residual collapses below
// sqrt(rank_tol)·‖row‖; classical Gram-Schmidt alone loses orthogonality
// exactly in that regime. `strict` turns a rejected (dependent) row into an
// error instead of skipping it.
inline GreedyGs greedy_orthonormalize(const RealMatrix& v, const ToleranceConfig& tol,
                                      bool strict) {
    tol.validate();
    GreedyGs out;
    const std::size_t k = v.cols();
    for (std::size_t i = 0; i < v.rows(); ++i) {
        const auto row = v.row(i);
        const double row_norm = norm2(row);
        const std::size_t n = out.thetas.size();

        std::vector<double> coeff(n, 0.0);
        std::vector<double> x(row.begin(), row.end());
        for (std::size_t j = 0; j < n; ++j) {
            coeff[j] = dot(row, std::span<const double>(out.thetas[j]));
        }
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t c = 0; c < k; ++c) x[c] -= coeff[j] * out.thetas[j][c];

        double x_norm = norm2(x);
        if (n > 0 && x_norm < std::sqrt(tol.rank_tol) * row_norm) {
            for (std::size_t j = 0; j < n; ++j) {
                const double extra = dot(std::span<const double>(x),
                                         std::span<const double>(out.thetas[j]));
                for (std::size_t c = 0; c < k; ++c) x[c] -= extra * out.thetas[j][c];
                coeff[j] += extra;
            }
            x_norm = norm2(x);
        }

        if (x_norm <= tol.rank_tol * (1.0 + row_norm)) {
            if (strict)
                throw DegenerateRow("row " + std::to_string(i) +
                                    " is dependent on the rows before it (residual " +
                                    std::to_string(x_norm) + ")");
            continue;
        }

        const double inv = 1.0 / x_norm;
        std::vector<double> theta(k);
        for (std::size_t c = 0; c < k; ++c) theta[c] = x[c] * inv;

        // g row: (e_i − Σ coeff_j · g_j) / ‖x‖, expressed over accepted rows
        std::vector<double> g(n + 1, 0.0);
        g[n] = inv;
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t l = 0; l <= j; ++l) g[l] -= inv * coeff[j] * out.g_rows[j][l];

        out.pivots.push_back(i);
        out.thetas.push_back(std::move(theta));
        out.g_rows.push_back(std::move(g));
    }
    return out;
}

inline RealMatrix pack_rows(const std::vector<std::vector<double>>& rows, std::size_t cols) {
    RealMatrix m(rows.size(), cols);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
    return m;
}

}  // namespace detail

/// Scans the rows of V in index order and keeps each row whose residual,
/// after projection onto the rows already kept, exceeds
/// rank_tol·(1 + ‖row‖). Returns the numerical rank and the kept indices
/// (the first maximal independent subset in lexicographic order). A zero
/// matrix yields rank 0 and no pivots.
inline std::pair<std::size_t, std::vector<std::size_t>> greedy_pivot_rows(
    const RealMatrix& v, const ToleranceConfig& tol = {}) {
    if (!v.is_finite()) throw Error("greedy_pivot_rows: non-finite entries");
    auto gs = detail::greedy_orthonormalize(v, tol, /*strict=*/false);
    return {gs.pivots.size(), std::move(gs.pivots)};
}

/// Orthonormalizes the rows of W (assumed independent at rank_tol, e.g. the
/// pivot rows from greedy_pivot_rows). Returns (G, Q) with Q = G·W, rows of
/// Q orthonormal, G lower triangular with positive diagonal. Throws
/// DegenerateRow if some row turns out dependent after all.
inline std::pair<RealMatrix, RealMatrix> gram_schmidt_rows(
    const RealMatrix& w, const ToleranceConfig& tol = {}) {
    if (!w.is_finite()) throw Error("gram_schmidt_rows: non-finite entries");
    auto gs = detail::greedy_orthonormalize(w, tol, /*strict=*/true);
    const std::size_t r = gs.pivots.size();
    return {detail::pack_rows(gs.g_rows, r), detail::pack_rows(gs.thetas, w.cols())};
}

/// Full rank factorization of V: greedy pivot selection followed by
/// Gram-Schmidt on the pivot rows. Deterministic for fixed input and
/// tolerances. Rank 0 produces empty G, J, Q.
inline RankFactorization orthonormal_row_projector(const RealMatrix& v,
                                                   const ToleranceConfig& tol = {}) {
    if (!v.is_finite()) throw Error("orthonormal_row_projector: non-finite entries");
    auto gs = detail::greedy_orthonormalize(v, tol, /*strict=*/false);
    RankFactorization f;
    f.rank = gs.pivots.size();
    f.pivot_rows = gs.pivots;
    f.orthonormalizer = detail::pack_rows(gs.g_rows, f.rank);
    f.basis = detail::pack_rows(gs.thetas, v.cols());
    f.projector = RealMatrix(f.rank, v.rows());
    for (std::size_t i = 0; i < f.rank; ++i)
        for (std::size_t l = 0; l <= i; ++l) f.projector(i, gs.pivots[l]) = gs.g_rows[i][l];
    return f;
}

/// Distance of the row vector y (length K) from the row span of V, and the
/// membership verdict at residual_tol·(1 + ‖y‖). The zero vector is a member
/// of every span, including the rank-0 one.
inline SpanMembership row_span_membership(std::span<const double> y, const RealMatrix& v,
                                          const ToleranceConfig& tol = {}) {
    if (y.size() != v.cols())
        throw DimensionMismatch("row_span_membership: vector length " +
                                std::to_string(y.size()) + " vs " +
                                std::to_string(v.cols()) + " columns");
    const RankFactorization f = orthonormal_row_projector(v, tol);
    std::vector<double> resid(y.begin(), y.end());
    for (std::size_t i = 0; i < f.rank; ++i) {
        const double c = dot(y, f.basis.row(i));
        for (std::size_t j = 0; j < y.size(); ++j) resid[j] -= c * f.basis(i, j);
    }
    const double r = norm2(resid);
    return {r <= tol.residual_tol * (1.0 + norm2(y)), r};
}

/// The selector formula x = y·Vᵀ·Jᵀ·J without any membership check; entries
/// of x at non-pivot indices are exactly zero by construction.
inline std::vector<double> selector_row_solution(std::span<const double> y,
                                                 const RealMatrix& v,
                                                 const RankFactorization& f) {
    // u = y·Vᵀ gathered at the pivots, then w = u·Jᵀ, x = w·J,
    // both through the pivot support of J.
    std::vector<double> u(f.rank, 0.0);
    for (std::size_t l = 0; l < f.rank; ++l) u[l] = dot(y, v.row(f.pivot_rows[l]));
    std::vector<double> w(f.rank, 0.0);
    for (std::size_t i = 0; i < f.rank; ++i) {
        double s = 0.0;
        for (std::size_t l = 0; l <= i; ++l) s += u[l] * f.orthonormalizer(i, l);
        w[i] = s;
    }
    std::vector<double> x(v.rows(), 0.0);
    for (std::size_t l = 0; l < f.rank; ++l) {
        double s = 0.0;
        for (std::size_t i = l; i < f.rank; ++i) s += w[i] * f.orthonormalizer(i, l);
        x[f.pivot_rows[l]] = s;
    }
    return x;
}

/// Solves the row system x·V = y for the selector solution supported on the
/// pivot rows. Throws NotInSpan (carrying the distance) when y is not in the
/// row span of V at residual_tol.
inline std::vector<double> solve_row_system(std::span<const double> y, const RealMatrix& v,
                                            const ToleranceConfig& tol = {}) {
    if (y.size() != v.cols())
        throw DimensionMismatch("solve_row_system: vector length " +
                                std::to_string(y.size()) + " vs " +
                                std::to_string(v.cols()) + " columns");
    const RankFactorization f = orthonormal_row_projector(v, tol);
    std::vector<double> resid(y.begin(), y.end());
    for (std::size_t i = 0; i < f.rank; ++i) {
        const double c = dot(y, f.basis.row(i));
        for (std::size_t j = 0; j < y.size(); ++j) resid[j] -= c * f.basis(i, j);
    }
    const double r = norm2(resid);
    if (r > tol.residual_tol * (1.0 + norm2(y)))
        throw NotInSpan("solve_row_system: target outside the row span (residual " +
                            std::to_string(r) + ")",
                        r);
    return selector_row_solution(y, v, f);
}

/// Solves the column system V·x = y by transposition.
inline std::vector<double> solve_column_system(std::span<const double> y,
                                               const RealMatrix& v,
                                               const ToleranceConfig& tol = {}) {
    if (y.size() != v.rows())
        throw DimensionMismatch("solve_column_system: vector length " +
                                std::to_string(y.size()) + " vs " +
                                std::to_string(v.rows()) + " rows");
    return solve_row_system(y, transpose(v), tol);
}

/// Separating certificate for an unreachable target: a row vector Z with
/// Z·Y = 1 and Z·Σ = 0, obtained by solving the augmented row system
/// z·[Y | Σ] = (1, 0, …, 0). Throws NoCertificate when Y lies in the column
/// span of Σ (exactly the case where solve_column_system succeeds).
inline std::vector<double> dual_certificate(std::span<const double> y_col,
                                            const RealMatrix& sigma,
                                            const ToleranceConfig& tol = {}) {
    if (y_col.size() != sigma.rows())
        throw DimensionMismatch("dual_certificate: vector length " +
                                std::to_string(y_col.size()) + " vs " +
                                std::to_string(sigma.rows()) + " rows");
    RealMatrix augmented(sigma.rows(), sigma.cols() + 1);
    for (std::size_t i = 0; i < sigma.rows(); ++i) {
        augmented(i, 0) = y_col[i];
        for (std::size_t j = 0; j < sigma.cols(); ++j) augmented(i, j + 1) = sigma(i, j);
    }
    std::vector<double> target(sigma.cols() + 1, 0.0);
    target[0] = 1.0;
    try {
        return solve_row_system(target, augmented, tol);
    } catch (const NotInSpan& e) {
        throw NoCertificate(
            "dual_certificate: target is reachable, no separating vector exists "
            "(augmented residual " +
            std::to_string(e.residual()) + ")");
    }
}

}  // namespace riskgate
