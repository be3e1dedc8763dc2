#pragma once

// Power-constrained Gaussian team solver. The expectation constraints
//   E [x; u]^T M_j [x; u] <= gamma_j,   u = K C x,   x ~ N(0, X^2)
// are recast with slack matrices P_j as linear matrix inequalities
//   [[P_j - X Q_j X - X S_j K C X - X C^T K^T S_j^T X,  X C^T K^T R_j],
//    [R_j K C X,                                        R_j         ]] >= 0,
//   Tr P_j <= gamma_j,
// and the objective bound gamma_0 is minimized over (gamma_0, P_j, K).
// Measurement noise is absorbed by augmenting the state with the noise
// vector; the dual of each trace inequality is the constraint multiplier.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "teamlq/core.hpp"
#include "teamlq/linalg.hpp"
#include "teamlq/radner.hpp"
#include "teamlq/sdp.hpp"

namespace teamlq::constrained {

// Exact expectation of form j at the gain (j = 0 is the objective,
// j >= 1 the constraints in order).
inline double constraint_value(const TeamProblem& p, const DecisionGain& gain, std::size_t j) {
    require(j <= p.constraints.size(), "constraint_value: form index out of range");
    const QuadraticForm& form = j == 0 ? p.objective : p.constraints[j - 1].form;
    return radner::expected_cost(p, gain, form);
}

namespace detail {

struct AugmentedModel {
    Mat x_sqrt;          // PSD square root of the (augmented) covariance
    Mat c;               // stacked (augmented) measurement map, p x nx
    std::vector<Mat> q;  // per form, nx x nx (zero-padded when augmented)
    std::vector<Mat> s;  // per form, nx x m
    std::vector<Mat> r;  // per form, m x m, regularized to PD where needed
    std::vector<double> r_regularization;  // epsilon added to each r
    std::vector<bool> state_only;          // form has s = 0, r = 0
    std::size_t nx = 0, m = 0;
};

inline AugmentedModel augment(const TeamProblem& p) {
    require(p.mode == Mode::gaussian && p.stats.has_value(),
            "constrained solver: gaussian mode with statistics required");
    const std::size_t n = p.objective.state_dim();
    const std::size_t m = p.objective.decision_dim();
    const std::size_t pd = p.info.total_measurement_dim();
    const bool noisy = p.stats->has_noise();

    AugmentedModel am;
    am.m = m;
    am.nx = noisy ? n + pd : n;

    Mat sigma(am.nx, am.nx);
    put_block(sigma, 0, 0, sym_part(p.stats->state_cov));
    if (noisy) put_block(sigma, n, n, sym_part(p.stats->noise_cov));
    am.x_sqrt = psd_sqrt(sigma);  // throws when the covariance is not PSD

    am.c = Mat(pd, am.nx);
    put_block(am.c, 0, 0, p.info.stacked_measurement_map());
    if (noisy)
        for (std::size_t i = 0; i < pd; ++i) am.c(i, n + i) = 1.0;

    auto push_form = [&](const QuadraticForm& f, bool objective) {
        Mat q(am.nx, am.nx), s(am.nx, m);
        put_block(q, 0, 0, f.q);
        put_block(s, 0, 0, f.s);
        Mat r = f.r;
        const double rnorm = spectral_norm_sym(r);
        const double rmin = lambda_min_sym(r);
        if (rmin < -1e-10 * std::max(rnorm, 1e-300))
            throw std::invalid_argument("constrained solver: form r block is indefinite");
        const bool state_only = !objective && max_abs(f.s) == 0.0 && max_abs(f.r) == 0.0;
        double eps = 0.0;
        if (!state_only) {
            eps = 1e-9 * (1.0 + rnorm);
            if (rmin >= eps) {
                eps = 0.0;
            } else {
                for (std::size_t i = 0; i < m; ++i) r(i, i) += eps;
            }
        }
        am.q.push_back(std::move(q));
        am.s.push_back(std::move(s));
        am.r.push_back(std::move(r));
        am.r_regularization.push_back(eps);
        am.state_only.push_back(state_only);
    };
    push_form(p.objective, true);
    for (const auto& c : p.constraints) push_form(c.form, false);
    return am;
}

}  // namespace detail

struct BuildResult {
    sdp::Problem problem;
    std::size_t gamma0_index = 0;
    std::vector<std::ptrdiff_t> p_offset;     // per form: first slack-matrix variable, -1 if none
    std::size_t k_offset = 0;                 // first gain coefficient
    std::size_t num_gain_coeffs = 0;
    std::vector<std::ptrdiff_t> lmi_block;    // per form: LMI block index, -1 if none
    std::vector<std::size_t> scalar_block;    // per form: trace / constant block index
    std::vector<double> r_regularization;     // per form
    std::size_t aug_state_dim = 0;
};

// Assembles the SDP: variables are gamma_0, the entries of each slack matrix
// P_j (upper triangle, row-major), then the gain-basis coefficients of K.
inline BuildResult build_sdp(const TeamProblem& p) {
    const detail::AugmentedModel am = detail::augment(p);
    const std::size_t nforms = am.q.size();
    const std::size_t nx = am.nx, m = am.m;
    const std::size_t tri = nx * (nx + 1) / 2;
    const std::vector<Mat> basis = gain_basis(p.info);

    BuildResult out;
    out.aug_state_dim = nx;
    out.r_regularization = am.r_regularization;
    out.p_offset.assign(nforms, -1);
    out.lmi_block.assign(nforms, -1);
    out.scalar_block.assign(nforms, 0);

    sdp::Problem& sp = out.problem;
    sp.var_names.push_back("gamma0");
    std::size_t nv = 1;
    for (std::size_t j = 0; j < nforms; ++j) {
        if (am.state_only[j]) continue;
        out.p_offset[j] = static_cast<std::ptrdiff_t>(nv);
        for (std::size_t a = 0; a < nx; ++a)
            for (std::size_t b = a; b < nx; ++b)
                sp.var_names.push_back("P" + std::to_string(j) + "[" + std::to_string(a) + "," +
                                       std::to_string(b) + "]");
        nv += tri;
    }
    out.k_offset = nv;
    out.num_gain_coeffs = basis.size();
    for (std::size_t i = 0; i < p.info.num_players(); ++i)
        for (std::size_t r = 0; r < p.info.decision_dims[i]; ++r)
            for (std::size_t c = 0; c < p.info.measurement_dim(i); ++c)
                sp.var_names.push_back("K" + std::to_string(i + 1) + "(" + std::to_string(r) + "," +
                                       std::to_string(c) + ")");
    nv += basis.size();

    sp.num_vars = nv;
    sp.cost.assign(nv, 0.0);
    sp.cost[0] = 1.0;  // minimize gamma_0

    const Mat zero_nv(0, 0);
    auto zero_blockset = [&](std::size_t dim) {
        return std::vector<Mat>(nv + 1, Mat(dim, dim));
    };

    for (std::size_t j = 0; j < nforms; ++j) {
        const double gamma_j = j == 0 ? 0.0 : p.constraints[j - 1].bound;
        if (am.state_only[j]) {
            // no decision dependence: the constraint is the constant check
            // Tr(X Q_j X) <= gamma_j
            auto blk = zero_blockset(1);
            blk[0](0, 0) = frob_inner(am.q[j], am.x_sqrt * am.x_sqrt) - gamma_j;
            out.scalar_block[j] = sp.lmi_blocks.size();
            sp.lmi_blocks.push_back(std::move(blk));
            continue;
        }

        // LMI block, stored negated so that F(z) <= 0
        const std::size_t dim = nx + m;
        auto blk = zero_blockset(dim);
        {
            Mat f0(dim, dim);
            put_block(f0, 0, 0, sym_part(am.x_sqrt * am.q[j] * am.x_sqrt));
            put_block(f0, nx, nx, -am.r[j]);
            blk[0] = std::move(f0);
        }
        std::size_t var = static_cast<std::size_t>(out.p_offset[j]) + 1;  // +1: F list offset
        for (std::size_t a = 0; a < nx; ++a)
            for (std::size_t b = a; b < nx; ++b) {
                Mat f(dim, dim);
                f(a, b) = -1.0;
                f(b, a) = -1.0;
                if (a == b) f(a, a) = -1.0;
                blk[var++] = std::move(f);
            }
        const Mat sr = am.x_sqrt * am.s[j];        // X S_j
        const Mat cx = am.c * am.x_sqrt;           // C X
        for (std::size_t k = 0; k < basis.size(); ++k) {
            Mat f(dim, dim);
            const Mat t = sr * basis[k] * cx;      // X S_j B_k C X
            put_block(f, 0, 0, t + transpose(t));
            const Mat off = -1.0 * (transpose(cx) * transpose(basis[k]) * am.r[j]);  // -X C^T B^T R_j
            put_block(f, 0, nx, off);
            put_block(f, nx, 0, transpose(off));
            blk[out.k_offset + k + 1] = std::move(f);
        }
        out.lmi_block[j] = static_cast<std::ptrdiff_t>(sp.lmi_blocks.size());
        sp.lmi_blocks.push_back(std::move(blk));

        // trace block: Tr P_j <= gamma_j (gamma_0 is the minimized variable)
        auto tb = zero_blockset(1);
        if (j == 0)
            tb[1](0, 0) = -1.0;  // ... - gamma_0 <= 0
        else
            tb[0](0, 0) = -gamma_j;
        var = static_cast<std::size_t>(out.p_offset[j]) + 1;
        for (std::size_t a = 0; a < nx; ++a)
            for (std::size_t b = a; b < nx; ++b) {
                if (a == b) tb[var](0, 0) = 1.0;
                ++var;
            }
        out.scalar_block[j] = sp.lmi_blocks.size();
        sp.lmi_blocks.push_back(std::move(tb));
    }

    return out;
}

struct Solution {
    DecisionGain gain;
    double objective_value = 0.0;          // gamma_0
    std::vector<double> constraint_values; // exact expectations, one per constraint
    std::vector<double> multipliers;       // lambda_j from the trace-block duals
    std::vector<Mat> slack_matrices;       // P_j per form (index 0 is the objective)
    sdp::Status status = sdp::Status::max_iter;
    std::vector<double> r_regularization;  // per form
    sdp::Solution sdp_solution;
};

// The gain is read off the SDP variables, so the engine runs tighter than
// its generic defaults; slack bounds leave weakly determined directions that
// settle at roughly the square root of the gap.
inline sdp::Settings default_settings() {
    sdp::Settings s;
    s.gap_tol = 1e-10;
    s.feas_tol = 1e-10;
    return s;
}

inline Solution solve(const TeamProblem& p, const sdp::Settings& settings = default_settings()) {
    const BuildResult br = build_sdp(p);
    sdp::Solution s = sdp::solve(br.problem, settings);

    Solution out;
    out.status = s.status;
    out.r_regularization = br.r_regularization;
    if (s.status == sdp::Status::infeasible) {
        out.gain = zero_gain(p.info);
        out.sdp_solution = std::move(s);
        return out;
    }

    Vec kz(s.z.begin() + br.k_offset, s.z.begin() + br.k_offset + br.num_gain_coeffs);
    out.gain = gain_from_coefficients(kz, p.info);
    out.objective_value = s.z[br.gamma0_index];
    const std::size_t nforms = br.p_offset.size();
    const std::size_t nx = br.aug_state_dim;
    const detail::AugmentedModel am = detail::augment(p);
    for (std::size_t j = 0; j < nforms; ++j) {
        if (br.p_offset[j] >= 0) {
            Mat pj(nx, nx);
            std::size_t var = static_cast<std::size_t>(br.p_offset[j]);
            for (std::size_t a = 0; a < nx; ++a)
                for (std::size_t b = a; b < nx; ++b) {
                    pj(a, b) = pj(b, a) = s.z[var++];
                }
            out.slack_matrices.push_back(std::move(pj));
        } else {
            // state-only form: the slack matrix is the constant X Q_j X
            out.slack_matrices.push_back(sym_part(am.x_sqrt * am.q[j] * am.x_sqrt));
        }
        if (j >= 1) {
            out.constraint_values.push_back(constraint_value(p, out.gain, j));
            const Mat& dual = s.duals[br.scalar_block[j]];
            out.multipliers.push_back(dual.empty() ? 0.0 : dual(0, 0));
        }
    }
    out.sdp_solution = std::move(s);
    return out;
}

struct DualGapReport {
    double objective = 0.0;          // gamma_0 from the solver
    double lagrangian = 0.0;         // value_0 + sum lambda_j (value_j - gamma_j)
    std::vector<double> slacks;      // value_j - gamma_j
    std::vector<double> complementarity;  // |lambda_j * slack_j|
    double gap = 0.0;                // |lagrangian - objective|
};

// Evaluates the Lagrangian at the returned (gain, multipliers); at the
// optimum it matches the objective value up to complementary slackness.
inline DualGapReport dual_gap_report(const TeamProblem& p, const Solution& sol) {
    DualGapReport rep;
    rep.objective = sol.objective_value;
    rep.lagrangian = constraint_value(p, sol.gain, 0);
    for (std::size_t j = 1; j <= p.constraints.size(); ++j) {
        const double slack = constraint_value(p, sol.gain, j) - p.constraints[j - 1].bound;
        const double lambda = sol.multipliers[j - 1];
        rep.slacks.push_back(slack);
        rep.complementarity.push_back(std::abs(lambda * slack));
        rep.lagrangian += lambda * slack;
    }
    rep.gap = std::abs(rep.lagrangian - rep.objective);
    return rep;
}

}  // namespace teamlq::constrained
