#pragma once

// Unconstrained Gaussian team solver. The optimal structured gain solves a
// coupled linear system over the stacked blocks vec(K_i); the system is the
// stationarity condition of the convex quadratic team cost, assembled per
// player pair with a Kronecker lift. Also houses the full-information gain,
// closed-form expected cost, the estimate-then-act baseline and the
// projection-orthogonality residual.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "teamlq/core.hpp"
#include "teamlq/linalg.hpp"

namespace teamlq::radner {

namespace detail {

inline void require_gaussian(const TeamProblem& p, const char* who) {
    require(p.mode == Mode::gaussian && p.stats.has_value(),
            std::string(who) + ": gaussian mode with statistics required");
}

// G = C V_xx C^T + V_vv, the measurement second-moment matrix
inline Mat measurement_moment(const TeamProblem& p) {
    const Mat c = p.info.stacked_measurement_map();
    Mat g = c * p.stats->state_cov * transpose(c);
    if (!p.stats->noise_cov.empty()) g = g + p.stats->noise_cov;
    return sym_part(g);
}

}  // namespace detail

// L solving r L = -s^T (the completion-of-squares gain); r must be PD.
inline Mat full_information_gain(const QuadraticForm& objective) {
    return solve_spd(objective.r, -transpose(objective.s));
}

struct TeamLinearSystem {
    Mat coefficient;  // symmetric PSD, (sum m_i p_i) square
    Vec rhs;
    // unknown layout: players in order, vec(K_i) column-major within a player
    std::vector<std::size_t> offsets;  // per player offset into the unknown vector

    DecisionGain gain_from_solution(const Vec& sol, const InformationStructure& info) const {
        DecisionGain g = zero_gain(info);
        for (std::size_t i = 0; i < info.num_players(); ++i) {
            std::size_t k = offsets[i];
            for (std::size_t c = 0; c < info.measurement_dim(i); ++c)
                for (std::size_t r = 0; r < info.decision_dims[i]; ++r) g.blocks[i](r, c) = sol[k++];
        }
        return g;
    }
};

// Stationarity system for the structured gain: for each player i,
//   sum_j [r]_ij K_j ([C V C^T + V_vv])_ji = [L^T r]_i-ish right-hand side,
// lifted with vec(A X B) = (B^T kron A) vec(X), column-major vec.
inline TeamLinearSystem build_team_system(const TeamProblem& p) {
    detail::require_gaussian(p, "build_team_system");
    const auto& info = p.info;
    const std::size_t players = info.num_players();
    const Mat g = detail::measurement_moment(p);
    (void)cholesky(p.objective.r);  // precondition: objective r positive definite
    const Mat vxx = p.stats->state_cov;

    TeamLinearSystem sys;
    sys.offsets.resize(players);
    std::size_t total = 0;
    for (std::size_t i = 0; i < players; ++i) {
        sys.offsets[i] = total;
        total += info.decision_dims[i] * info.measurement_dim(i);
    }
    sys.coefficient = Mat(total, total);
    sys.rhs.assign(total, 0.0);

    for (std::size_t i = 0; i < players; ++i) {
        const std::size_t mi = info.decision_dims[i], pi = info.measurement_dim(i);
        const std::size_t moff_i = info.decision_offset(i), poff_i = info.measurement_offset(i);
        for (std::size_t j = 0; j < players; ++j) {
            const std::size_t mj = info.decision_dims[j], pj = info.measurement_dim(j);
            const Mat r_ij = block(p.objective.r, moff_i, info.decision_offset(j), mi, mj);
            const Mat g_ji = block(g, info.measurement_offset(j), poff_i, pj, pi);
            // equation block (i, j): [r]_ij K_j [g]_ji maps vec(K_j) by (g_ji^T kron r_ij)
            const Mat lift = kron(transpose(g_ji), r_ij);
            for (std::size_t a = 0; a < mi * pi; ++a)
                for (std::size_t b = 0; b < mj * pj; ++b)
                    sys.coefficient(sys.offsets[i] + a, sys.offsets[j] + b) += lift(a, b);
        }
        // rhs block i: [L^T r]_i^T V_xx C_i^T written with s: -[s^T]_i V_xx C_i^T
        const Mat sti = block(transpose(p.objective.s), moff_i, 0, mi, p.objective.state_dim());
        const Mat bi = -1.0 * (sti * vxx * transpose(info.measurement_maps[i]));  // m_i x p_i
        std::size_t k = sys.offsets[i];
        for (std::size_t c = 0; c < pi; ++c)
            for (std::size_t r = 0; r < mi; ++r) sys.rhs[k++] = bi(r, c);
    }
    sys.coefficient = sym_part(sys.coefficient);
    return sys;
}

// Optimal structured gain via the team linear system; errors out on a
// singular system, naming the player whose block lost rank.
inline DecisionGain solve_unconstrained(const TeamProblem& p) {
    const TeamLinearSystem sys = build_team_system(p);
    Vec sol;
    try {
        sol = solve_spd(sys.coefficient, sys.rhs);
    } catch (const NotSpdError& e) {
        std::size_t player = 0;
        for (std::size_t i = 0; i < sys.offsets.size(); ++i)
            if (e.pivot >= sys.offsets[i]) player = i;
        throw std::runtime_error(
            "solve_unconstrained: team system is singular at player " + std::to_string(player + 1) +
            " (degenerate measurement statistics; consider adding measurement noise)");
    }
    return sys.gain_from_solution(sol, p.info);
}

// Exact expectation of [x; u]^T M [x; u] with u = K(Cx + v):
//   Tr(q V_xx) + 2 Tr(s K C V_xx) + Tr(r K (C V_xx C^T + V_vv) K^T)
inline double expected_cost(const TeamProblem& p, const DecisionGain& gain, const QuadraticForm& form) {
    detail::require_gaussian(p, "expected_cost");
    require(form.state_dim() == p.objective.state_dim() && form.decision_dim() == p.objective.decision_dim(),
            "expected_cost: form dimensions differ from the problem");
    const Mat k = assemble_gain(gain, p.info);
    const Mat c = p.info.stacked_measurement_map();
    const Mat g = detail::measurement_moment(p);
    const Mat kc = k * c;
    double value = frob_inner(form.q, sym_part(p.stats->state_cov));
    value += 2.0 * trace(form.s * kc * p.stats->state_cov);
    value += trace(form.r * k * g * transpose(k));
    return value;
}

inline double expected_cost(const TeamProblem& p, const DecisionGain& gain) {
    return expected_cost(p, gain, p.objective);
}

// The separation heuristic: each player applies the full-information gain to
// its own best estimate, K_i = L_i (V_xx C_i^T)(C_i V_xx C_i^T + V_vv,ii)^-1.
// Suboptimal for teams in general.
inline DecisionGain estimate_then_act(const TeamProblem& p) {
    detail::require_gaussian(p, "estimate_then_act");
    const Mat l = full_information_gain(p.objective);
    const Mat vxx = p.stats->state_cov;
    DecisionGain g = zero_gain(p.info);
    for (std::size_t i = 0; i < p.info.num_players(); ++i) {
        const Mat& ci = p.info.measurement_maps[i];
        Mat innov = ci * vxx * transpose(ci);
        if (!p.stats->noise_cov.empty()) {
            const std::size_t off = p.info.measurement_offset(i);
            innov = innov + block(p.stats->noise_cov, off, off, ci.rows(), ci.rows());
        }
        Mat est;  // (C_i V C_i^T + V_ii)^-1 C_i V, the per-player estimator
        try {
            est = solve_spd(sym_part(innov), ci * vxx);
        } catch (const NotSpdError&) {
            throw std::runtime_error("estimate_then_act: singular innovation covariance for player " +
                                     std::to_string(i + 1));
        }
        const Mat li = block(l, p.info.decision_offset(i), 0, p.info.decision_dims[i], l.cols());
        g.blocks[i] = li * transpose(est);
    }
    return g;
}

// Projection-condition residual: max over structured basis directions B of
// |E[(u - Lx)^T r B y]|, zero exactly at the optimal structured gain.
inline double orthogonality_residual(const TeamProblem& p, const DecisionGain& gain) {
    detail::require_gaussian(p, "orthogonality_residual");
    const Mat k = assemble_gain(gain, p.info);
    const Mat c = p.info.stacked_measurement_map();
    const Mat l = full_information_gain(p.objective);
    const Mat vxx = p.stats->state_cov;
    // E[(u - Lx) y^T] = (KC - L) V_xx C^T + K V_vv
    Mat cross = (k * c - l) * vxx * transpose(c);
    if (!p.stats->noise_cov.empty()) cross = cross + k * p.stats->noise_cov;
    const Mat inner = p.objective.r * cross;  // residual of E[r (u - Lx) y^T]
    double res = 0.0;
    for (const Mat& b : gain_basis(p.info)) res = std::max(res, std::abs(frob_inner(b, inner)));
    return res;
}

// Analytic gradient of the expected cost in gain_basis coordinates; the
// finite-difference checks in the tests pin the sign and index conventions.
inline Vec cost_gradient(const TeamProblem& p, const DecisionGain& gain, const QuadraticForm& form) {
    detail::require_gaussian(p, "cost_gradient");
    const Mat k = assemble_gain(gain, p.info);
    const Mat c = p.info.stacked_measurement_map();
    const Mat g = detail::measurement_moment(p);
    // d/dK of the expected cost: 2 (s^T V_xx C^T + r K G)
    const Mat grad_dense = 2.0 * (transpose(form.s) * p.stats->state_cov * transpose(c) + form.r * k * g);
    Vec out;
    for (const Mat& b : gain_basis(p.info)) out.push_back(frob_inner(b, grad_dense));
    return out;
}

inline Vec cost_gradient(const TeamProblem& p, const DecisionGain& gain) {
    return cost_gradient(p, gain, p.objective);
}

}  // namespace teamlq::radner
