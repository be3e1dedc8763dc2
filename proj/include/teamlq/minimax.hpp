#pragma once

// Deterministic (worst-case) team solver. A quadratic worst-case constraint
//   [x; K C x]^T M_j [x; K C x] <= 0   for all x
// holds iff the LMI block
//   [[Q_j + S_j K C + C^T K^T S_j^T,  C^T K^T R_j],
//    [R_j K C,                        -R_j        ]]  <= 0
// does (Schur complement on R_j > 0). The game value is located by bisection
// over the shift Q_0 -> Q_0 - gamma I of the objective block; the gain
// returned at the value is the maximal-margin point of the feasibility
// problem, which makes the output deterministic. The bound computed here is
// over linear structured decisions; whether nonlinear decisions can do
// better in the constrained deterministic setting is left open.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "teamlq/core.hpp"
#include "teamlq/linalg.hpp"
#include "teamlq/sdp.hpp"

namespace teamlq::minimax {

struct BuildResult {
    sdp::Problem problem;                 // feasibility in the gain coefficients
    std::vector<double> r_regularization; // epsilon added per form
};

inline QuadraticForm shift_state_block(const QuadraticForm& f, double gamma) {
    Mat q = f.q;
    for (std::size_t i = 0; i < q.rows(); ++i) q(i, i) -= gamma;
    return QuadraticForm(std::move(q), f.s, f.r);
}

// One LMI block per form, affine in the gain coefficients; no other
// variables. R blocks must be PSD; singular ones are nudged to PD.
inline BuildResult build_lmi(const std::vector<QuadraticForm>& forms, const InformationStructure& info) {
    require(!forms.empty(), "build_lmi: at least one form");
    const std::size_t n = info.state_dim();
    const std::size_t m = info.total_decision_dim();
    const Mat c = info.stacked_measurement_map();
    const std::vector<Mat> basis = gain_basis(info);

    BuildResult out;
    sdp::Problem& sp = out.problem;
    sp.num_vars = basis.size();
    sp.cost.assign(sp.num_vars, 0.0);
    for (std::size_t i = 0; i < info.num_players(); ++i)
        for (std::size_t r = 0; r < info.decision_dims[i]; ++r)
            for (std::size_t cc = 0; cc < info.measurement_dim(i); ++cc)
                sp.var_names.push_back("K" + std::to_string(i + 1) + "(" + std::to_string(r) + "," +
                                       std::to_string(cc) + ")");

    for (const QuadraticForm& f : forms) {
        require(f.state_dim() == n && f.decision_dim() == m, "build_lmi: form dimensions mismatch");
        Mat r = f.r;
        const double rnorm = spectral_norm_sym(r);
        const double rmin = lambda_min_sym(r);
        if (rmin < -1e-10 * std::max(rnorm, 1e-300))
            throw std::invalid_argument("build_lmi: form r block is indefinite");
        double eps = 1e-9 * (1.0 + rnorm);
        if (rmin >= eps) {
            eps = 0.0;
        } else {
            for (std::size_t i = 0; i < m; ++i) r(i, i) += eps;
        }
        out.r_regularization.push_back(eps);

        const std::size_t dim = n + m;
        std::vector<Mat> blk(sp.num_vars + 1, Mat(dim, dim));
        put_block(blk[0], 0, 0, f.q);
        put_block(blk[0], n, n, -r);
        for (std::size_t k = 0; k < basis.size(); ++k) {
            Mat fk(dim, dim);
            const Mat t = f.s * basis[k] * c;  // S B_k C
            put_block(fk, 0, 0, t + transpose(t));
            const Mat off = transpose(c) * transpose(basis[k]) * r;  // C^T B_k^T R
            put_block(fk, 0, n, off);
            put_block(fk, n, 0, transpose(off));
            blk[k + 1] = std::move(fk);
        }
        sp.lmi_blocks.push_back(std::move(blk));
    }
    return out;
}

struct FeasibleGain {
    bool feasible = false;
    DecisionGain gain;
    double margin = 0.0;          // strict-feasibility margin (-t*)
    std::size_t worst_block = 0;  // most violated block when infeasible
};

// Joint feasibility of all blocks over K; the returned gain is the maximal
// margin point. On infeasibility the most-violated block index is reported.
inline FeasibleGain solve_constrained(const std::vector<QuadraticForm>& forms,
                                      const InformationStructure& info,
                                      const sdp::Settings& settings = {}) {
    const BuildResult br = build_lmi(forms, info);
    const sdp::FeasibilityResult fr = sdp::feasibility(br.problem, settings);
    FeasibleGain out;
    out.feasible = fr.feasible;
    out.margin = fr.margin;
    out.gain = gain_from_coefficients(fr.witness, info);
    if (!out.feasible) {
        double worst = -1e300;
        for (std::size_t b = 0; b < br.problem.lmi_blocks.size(); ++b) {
            const auto& blk = br.problem.lmi_blocks[b];
            Mat f = blk[0];
            for (std::size_t k = 0; k < br.problem.num_vars; ++k)
                if (fr.witness[k] != 0.0) f = f + fr.witness[k] * blk[k + 1];
            const double v = lambda_max_sym(f);
            if (v > worst) {
                worst = v;
                out.worst_block = b;
            }
        }
    }
    return out;
}

struct Solution {
    double game_value = 0.0;
    DecisionGain gain;
    double certificate_margin = 0.0;  // margin of the LMI set at game_value + tol
    std::vector<std::pair<double, bool>> bisection_trace;
};

// Bisection over gamma on feasibility of the shifted objective block,
// jointly with any fixed (already bound-folded) constraint blocks.
inline Solution value(const QuadraticForm& objective, const std::vector<QuadraticForm>& fixed_blocks,
                      const InformationStructure& info, double tol = 1e-6,
                      const sdp::Settings& settings = {}) {
    require(tol > 0.0, "minimax value: tol must be positive");
    try {
        (void)cholesky(objective.r);
    } catch (const NotSpdError&) {
        throw std::invalid_argument("minimax value: objective r must be positive definite");
    }

    Solution out;
    auto probe = [&](double gamma) {
        std::vector<QuadraticForm> forms;
        forms.push_back(shift_state_block(objective, gamma));
        for (const auto& f : fixed_blocks) forms.push_back(f);
        const BuildResult br = build_lmi(forms, info);
        const sdp::FeasibilityResult fr = sdp::feasibility(br.problem, settings);
        out.bisection_trace.emplace_back(gamma, fr.feasible);
        return fr;
    };

    const double scale = spectral_norm_sym(objective.full_matrix());
    double lo = -scale, hi = scale + 1.0;
    for (int attempt = 0;; ++attempt) {
        if (!probe(hi).feasible) {
            if (attempt >= 6) throw std::runtime_error("minimax value: bracket failure, upper bound infeasible");
            hi = std::abs(hi) * 10.0;
            continue;
        }
        break;
    }
    for (int attempt = 0;; ++attempt) {
        if (probe(lo).feasible) {
            if (attempt >= 6) throw std::runtime_error("minimax value: bracket failure, lower bound feasible");
            lo = -std::abs(lo) * 10.0;
            continue;
        }
        break;
    }

    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (probe(mid).feasible)
            hi = mid;
        else
            lo = mid;
    }
    out.game_value = 0.5 * (lo + hi);

    // certificate probe at game_value + tol, solved tighter than the
    // bisection probes so the reported gain is sharply determined
    {
        std::vector<QuadraticForm> forms;
        forms.push_back(shift_state_block(objective, out.game_value + tol));
        for (const auto& f : fixed_blocks) forms.push_back(f);
        const BuildResult br = build_lmi(forms, info);
        sdp::Settings polished = settings;
        polished.gap_tol = std::min(settings.gap_tol, 1e-12);
        polished.feas_tol = std::min(settings.feas_tol, 1e-11);
        const sdp::FeasibilityResult fr = sdp::feasibility(br.problem, polished);
        out.certificate_margin = fr.margin;
        out.gain = gain_from_coefficients(fr.witness, info);
    }
    return out;
}

inline Solution value(const QuadraticForm& objective, const InformationStructure& info,
                      double tol = 1e-6, const sdp::Settings& settings = {}) {
    return value(objective, {}, info, tol, settings);
}

// ||u_i||^2 <= gamma_i ||x||^2 as a worst-case quadratic form:
// Q = -gamma_i I, S = 0, R selects player i's decision block.
inline QuadraticForm norm_constraint_form(const InformationStructure& info, std::size_t player,
                                          double gamma_i) {
    require(gamma_i >= 0.0, "norm_constraint_form: bound must be nonnegative");
    require(player < info.num_players(), "norm_constraint_form: player index out of range");
    const std::size_t n = info.state_dim();
    const std::size_t m = info.total_decision_dim();
    Mat q(n, n);
    for (std::size_t i = 0; i < n; ++i) q(i, i) = -gamma_i;
    Mat r(m, m);
    const std::size_t off = info.decision_offset(player);
    for (std::size_t i = 0; i < info.decision_dims[player]; ++i) r(off + i, off + i) = 1.0;
    return QuadraticForm(std::move(q), Mat(n, m), std::move(r));
}

// sum_i ||u_i||^2 <= c ||x||^2: Q = -c I, S = 0, R = I.
inline QuadraticForm shared_power_form(const InformationStructure& info, double c) {
    require(c >= 0.0, "shared_power_form: bound must be nonnegative");
    const std::size_t n = info.state_dim();
    const std::size_t m = info.total_decision_dim();
    Mat q(n, n);
    for (std::size_t i = 0; i < n; ++i) q(i, i) = -c;
    return QuadraticForm(std::move(q), Mat(n, m), Mat::identity(m));
}

// max over PSD X with Tr X = 1 of Tr(M X), once as an SDP over a trace-zero
// parametrization and once as the top eigenvalue; the two must agree.
inline std::pair<double, double> stochastic_equivalence_check(const Mat& m_in,
                                                              const sdp::Settings& settings = {}) {
    const Mat m = sym_part(m_in);
    const std::size_t d = m.rows();

    // basis of trace-zero symmetric matrices
    std::vector<Mat> basis;
    for (std::size_t a = 0; a + 1 < d; ++a) {
        Mat b(d, d);
        b(a, a) = 1.0;
        b(a + 1, a + 1) = -1.0;
        basis.push_back(std::move(b));
    }
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = a + 1; b < d; ++b) {
            Mat e(d, d);
            e(a, b) = e(b, a) = 1.0;
            basis.push_back(std::move(e));
        }

    sdp::Problem sp;
    sp.num_vars = basis.size();
    sp.cost.resize(basis.size());
    for (std::size_t k = 0; k < basis.size(); ++k) sp.cost[k] = -frob_inner(m, basis[k]);
    std::vector<Mat> blk;
    Mat f0(d, d);
    for (std::size_t i = 0; i < d; ++i) f0(i, i) = -1.0 / static_cast<double>(d);
    blk.push_back(std::move(f0));  // -X(z) <= 0 with X(0) = I/d strictly feasible
    for (const Mat& b : basis) blk.push_back(-b);
    sp.lmi_blocks.push_back(std::move(blk));

    sdp::Settings cfg = settings;
    cfg.feasible_start = Vec(sp.num_vars, 0.0);
    const sdp::Solution sol = sdp::solve(sp, cfg);
    const double lhs = trace(m) / static_cast<double>(d) - sol.primal_objective;
    const double rhs = lambda_max_sym(m);
    return {lhs, rhs};
}

}  // namespace teamlq::minimax
