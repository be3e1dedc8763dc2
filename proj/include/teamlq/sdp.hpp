#pragma once

// Self-contained dense semidefinite-programming engine for the small
// standard-form problems produced by the team solvers:
//
//     minimize  c^T z   subject to   F_0^b + sum_k z_k F_k^b <= 0   per block b
//
// Solved by primal-dual path following with Nesterov-Todd scaling; the
// Newton/Schur system is assembled densely and factored by Cholesky.
// When no strictly feasible start is supplied, a feasibility pass
// (minimize t with F(z) <= t I) precedes optimization and doubles as the
// infeasibility detector.

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "teamlq/linalg.hpp"

namespace teamlq::sdp {

struct Problem {
    std::size_t num_vars = 0;
    Vec cost;                                 // length num_vars
    std::vector<std::vector<Mat>> lmi_blocks; // each block: F_0, F_1, ..., F_num_vars
    std::vector<std::string> var_names;       // optional labels, length num_vars when present
};

struct Settings {
    std::size_t max_iter = 200;
    double gap_tol = 1e-8;
    double step_fraction = 0.98;
    double feas_tol = 1e-9;                 // residual tolerances, relative
    double infeasibility_threshold = 1e-8;  // phase-1 optimum above this => infeasible
    double feasibility_margin_cap = 1e3;    // lower bound on the phase-1 variable
    std::optional<Vec> feasible_start;      // strictly feasible z; skips the phase-1 pass
};

enum class Status { optimal, infeasible, unbounded, max_iter };

inline const char* to_string(Status s) {
    switch (s) {
        case Status::optimal: return "optimal";
        case Status::infeasible: return "infeasible";
        case Status::unbounded: return "unbounded";
        case Status::max_iter: return "max_iter";
    }
    return "unknown";
}

struct IterateInfo {
    double primal_objective = 0.0;
    double dual_objective = 0.0;
    double gap = 0.0;
    double mu = 0.0;
    double primal_residual = 0.0;  // scaled X-side equality residual
    double dual_residual = 0.0;    // scaled slack-equation residual
    bool dual_bound_valid = false; // residuals small enough for dual_objective to be a bound
};

struct Solution {
    Vec z;
    std::vector<Mat> duals;  // one PSD matrix per block
    double primal_objective = 0.0;
    double dual_objective = 0.0;
    Status status = Status::max_iter;
    std::size_t iterations = 0;
    struct Residuals {
        double primal_infeasibility = 0.0;  // max over blocks of lambda_max(F(z))
        double dual_infeasibility = 0.0;    // max_k |c_k + sum_b <F_k, X_b>|
        double duality_gap = 0.0;
    } residuals;
    std::vector<IterateInfo> trace;
    double phase1_margin = std::numeric_limits<double>::quiet_NaN();  // -t* when phase 1 ran
};

inline void validate_problem(const Problem& p) {
    require(!p.lmi_blocks.empty(), "sdp: at least one block required");
    require(p.cost.size() == p.num_vars, "sdp: cost length must equal num_vars");
    for (std::size_t b = 0; b < p.lmi_blocks.size(); ++b) {
        const auto& blk = p.lmi_blocks[b];
        require(blk.size() == p.num_vars + 1,
                "sdp: block " + std::to_string(b) + " must carry num_vars+1 matrices");
        const std::size_t d = blk.front().rows();
        for (const Mat& f : blk) {
            require(f.is_square() && f.rows() == d,
                    "sdp: block " + std::to_string(b) + " has inconsistent matrix sizes");
            require(all_finite(f), "sdp: block " + std::to_string(b) + " has non-finite entries");
        }
    }
}

namespace detail {

// forward substitution with matrix right-hand side: L X = B
inline Mat fwd_solve_lower(const Mat& l, const Mat& b) {
    const std::size_t n = l.rows();
    Mat x(n, b.cols());
    for (std::size_t j = 0; j < b.cols(); ++j)
        for (std::size_t i = 0; i < n; ++i) {
            double s = b(i, j);
            for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * x(k, j);
            x(i, j) = s / l(i, i);
        }
    return x;
}

// largest alpha with M + alpha dM > 0, for M = L L^T
inline double max_step(const Mat& chol_l, const Mat& dm) {
    const Mat a = fwd_solve_lower(chol_l, dm);                 // L^-1 dM
    const Mat y = transpose(fwd_solve_lower(chol_l, transpose(a)));  // L^-1 dM L^-T
    const double lmin = lambda_min_sym(sym_part(y));
    if (lmin >= -1e-14) return std::numeric_limits<double>::infinity();
    return -1.0 / lmin;
}

struct MatFun {
    Mat sqrt, inv_sqrt, inv;
};

inline MatFun sym_functions(const Mat& a) {
    const SymEig e = sym_eig(a);
    const std::size_t n = a.rows();
    const double lmax = std::max(e.eigenvalues.back(), 1e-300);
    MatFun out{Mat(n, n), Mat(n, n), Mat(n, n)};
    for (std::size_t k = 0; k < n; ++k) {
        const double lam = std::max(e.eigenvalues[k], lmax * 1e-250);
        const double rt = std::sqrt(lam);
        for (std::size_t i = 0; i < n; ++i) {
            const double vik = e.eigenvectors(i, k);
            for (std::size_t j = 0; j < n; ++j) {
                const double w = vik * e.eigenvectors(j, k);
                out.sqrt(i, j) += rt * w;
                out.inv_sqrt(i, j) += (1.0 / rt) * w;
                out.inv(i, j) += (1.0 / lam) * w;
            }
        }
    }
    return out;
}

struct PreparedBlock {
    std::size_t dim = 0;
    std::vector<std::size_t> nz;  // variable indices with a nonzero F_k
};

struct IpmState {
    Vec z;
    std::vector<Mat> x, s;
};

}  // namespace detail

// Core interior-point loop. `start` must be strictly feasible or nearly so;
// any slack-shift it needs is absorbed into the dual residual and driven out.
inline Solution run_ipm(const Problem& p, const Vec& start, const Settings& cfg) {
    validate_problem(p);
    const std::size_t nvar = p.num_vars;
    const std::size_t nblk = p.lmi_blocks.size();

    std::vector<detail::PreparedBlock> prep(nblk);
    std::size_t dim_total = 0;
    for (std::size_t b = 0; b < nblk; ++b) {
        prep[b].dim = p.lmi_blocks[b].front().rows();
        dim_total += prep[b].dim;
        for (std::size_t k = 0; k < nvar; ++k)
            if (max_abs(p.lmi_blocks[b][k + 1]) != 0.0) prep[b].nz.push_back(k);
    }

    auto eval_block = [&](std::size_t b, const Vec& z) {
        Mat f = p.lmi_blocks[b][0];
        for (std::size_t k : prep[b].nz) {
            if (z[k] == 0.0) continue;
            f = f + z[k] * p.lmi_blocks[b][k + 1];
        }
        return f;
    };

    detail::IpmState st;
    st.z = start;
    st.x.resize(nblk);
    st.s.resize(nblk);
    for (std::size_t b = 0; b < nblk; ++b) {
        Mat s0 = -eval_block(b, st.z);
        const double lmin = lambda_min_sym(s0);
        const double norm = std::max(spectral_norm_sym(s0), 1.0);
        if (lmin < 1e-8 * norm) {
            const double shift = 1e-8 * norm - lmin;
            for (std::size_t i = 0; i < prep[b].dim; ++i) s0(i, i) += shift;
        }
        st.s[b] = sym_part(s0);
        st.x[b] = Mat::identity(prep[b].dim);
    }

    Solution sol;
    sol.z = st.z;
    const double cinf = std::max(norm_inf(p.cost), 1.0);

    double best_merit = std::numeric_limits<double>::infinity();
    detail::IpmState best = st;

    std::size_t iter = 0;
    for (; iter < cfg.max_iter; ++iter) {
        // residuals of the current iterate
        std::vector<Mat> fz(nblk), rd(nblk);
        double rd_max = 0.0;
        for (std::size_t b = 0; b < nblk; ++b) {
            fz[b] = eval_block(b, st.z);
            rd[b] = -fz[b] - st.s[b];  // want 0
            rd_max = std::max(rd_max, max_abs(rd[b]) / (1.0 + max_abs(p.lmi_blocks[b][0])));
        }
        Vec rp(nvar, 0.0);
        for (std::size_t k = 0; k < nvar; ++k) rp[k] = -p.cost[k];
        for (std::size_t b = 0; b < nblk; ++b)
            for (std::size_t k : prep[b].nz) rp[k] -= frob_inner(p.lmi_blocks[b][k + 1], st.x[b]);
        const double rp_rel = norm_inf(rp) / cinf;

        double mu_total = 0.0, dobj = 0.0;
        for (std::size_t b = 0; b < nblk; ++b) {
            mu_total += frob_inner(st.x[b], st.s[b]);
            dobj += frob_inner(p.lmi_blocks[b][0], st.x[b]);
        }
        const double mu = mu_total / static_cast<double>(dim_total);
        const double pobj = dot(p.cost, st.z);
        const double gap = pobj - dobj;
        const double scale = 1.0 + std::abs(pobj) + std::abs(dobj);

        IterateInfo info;
        info.primal_objective = pobj;
        info.dual_objective = dobj;
        info.gap = gap;
        info.mu = mu;
        info.primal_residual = rp_rel;
        info.dual_residual = rd_max;
        info.dual_bound_valid = rp_rel <= 1e-7 && rd_max <= 1e-7;
        sol.trace.push_back(info);

        const double merit = mu_total / scale + rp_rel + rd_max;
        if (merit < best_merit) {
            best_merit = merit;
            best = st;
        }

        if (mu_total <= cfg.gap_tol * scale && std::abs(gap) <= 10.0 * cfg.gap_tol * scale &&
            rp_rel <= cfg.feas_tol * 10.0 && rd_max <= cfg.feas_tol * 10.0) {
            sol.status = Status::optimal;
            best = st;
            break;
        }
        if (pobj < -1e13 * cinf && rp_rel < 1e-6) {
            sol.status = Status::unbounded;
            best = st;
            break;
        }
        if (!std::isfinite(mu) || mu > 1e18) break;  // diverged; report best iterate

        // Nesterov-Todd scaling point per block
        std::vector<Mat> w(nblk), sinv(nblk);
        std::vector<Mat> xchol(nblk), schol(nblk);
        bool scaling_ok = true;
        for (std::size_t b = 0; b < nblk; ++b) {
            try {
                xchol[b] = cholesky(st.x[b]);
                schol[b] = cholesky(st.s[b]);
            } catch (const NotSpdError&) {
                scaling_ok = false;
                break;
            }
            const detail::MatFun sf = detail::sym_functions(st.s[b]);
            sinv[b] = sf.inv;
            const Mat t = sym_part(sf.sqrt * st.x[b] * sf.sqrt);
            const detail::MatFun tf = detail::sym_functions(t);
            w[b] = sym_part(sf.inv_sqrt * tf.sqrt * sf.inv_sqrt);
        }
        if (!scaling_ok) break;

        // Schur complement M_kl = sum_b <F_k, W F_l W>
        std::vector<std::vector<Mat>> wfw(nblk);
        for (std::size_t b = 0; b < nblk; ++b) {
            wfw[b].resize(prep[b].nz.size());
            for (std::size_t j = 0; j < prep[b].nz.size(); ++j)
                wfw[b][j] = w[b] * p.lmi_blocks[b][prep[b].nz[j] + 1] * w[b];
        }
        Mat m(nvar, nvar);
        for (std::size_t b = 0; b < nblk; ++b)
            for (std::size_t i = 0; i < prep[b].nz.size(); ++i)
                for (std::size_t j = i; j < prep[b].nz.size(); ++j) {
                    const double v = frob_inner(p.lmi_blocks[b][prep[b].nz[i] + 1], wfw[b][j]);
                    m(prep[b].nz[i], prep[b].nz[j]) += v;
                    if (i != j) m(prep[b].nz[j], prep[b].nz[i]) += v;
                }

        // factor with a bounded regularization retry ladder
        Mat mchol, mfact;
        {
            double diag_max = 1e-300;
            for (std::size_t k = 0; k < nvar; ++k) diag_max = std::max(diag_max, m(k, k));
            double reg = 0.0;
            bool factored = false;
            for (double rel = 1e-12; rel <= 1.1e-6; rel *= 2.0) {
                try {
                    Mat mr = m;
                    if (reg > 0.0)
                        for (std::size_t k = 0; k < nvar; ++k) mr(k, k) += reg;
                    mchol = cholesky(mr);
                    mfact = std::move(mr);
                    factored = true;
                    break;
                } catch (const NotSpdError&) {
                    reg = rel * diag_max;
                }
            }
            if (!factored) break;  // singular beyond the ladder: stop with best iterate
        }

        auto solve_direction = [&](const std::vector<Mat>& rhs3) {
            Vec rhs = rp;
            for (std::size_t b = 0; b < nblk; ++b) {
                const Mat g = rhs3[b] - sym_part(w[b] * rd[b] * w[b]);
                for (std::size_t k : prep[b].nz) rhs[k] -= frob_inner(p.lmi_blocks[b][k + 1], g);
            }
            Vec dz = chol_solve(mchol, rhs);
            // one round of iterative refinement on the Schur system
            {
                Vec resid = rhs;
                for (std::size_t i = 0; i < nvar; ++i)
                    for (std::size_t j = 0; j < nvar; ++j) resid[i] -= mfact(i, j) * dz[j];
                const Vec corr = chol_solve(mchol, resid);
                for (std::size_t i = 0; i < nvar; ++i) dz[i] += corr[i];
            }
            std::vector<Mat> ds(nblk), dx(nblk);
            for (std::size_t b = 0; b < nblk; ++b) {
                Mat d = rd[b];
                for (std::size_t k : prep[b].nz) d = d - dz[k] * p.lmi_blocks[b][k + 1];
                ds[b] = sym_part(d);
                dx[b] = sym_part(rhs3[b] - w[b] * ds[b] * w[b]);
            }
            return std::tuple<Vec, std::vector<Mat>, std::vector<Mat>>{dz, dx, ds};
        };

        auto step_lengths = [&](const std::vector<Mat>& dx, const std::vector<Mat>& ds) {
            double ap = std::numeric_limits<double>::infinity();
            double ad = std::numeric_limits<double>::infinity();
            for (std::size_t b = 0; b < nblk; ++b) {
                ap = std::min(ap, detail::max_step(xchol[b], dx[b]));
                ad = std::min(ad, detail::max_step(schol[b], ds[b]));
            }
            return std::pair<double, double>{std::min(1.0, cfg.step_fraction * ap),
                                             std::min(1.0, cfg.step_fraction * ad)};
        };

        // predictor pass fixes the centering weight
        std::vector<Mat> rhs3(nblk);
        for (std::size_t b = 0; b < nblk; ++b) rhs3[b] = -st.x[b];
        auto [dz_aff, dx_aff, ds_aff] = solve_direction(rhs3);
        auto [ap_aff, ad_aff] = step_lengths(dx_aff, ds_aff);
        double mu_aff = 0.0;
        for (std::size_t b = 0; b < nblk; ++b)
            mu_aff += frob_inner(st.x[b] + ap_aff * dx_aff[b], st.s[b] + ad_aff * ds_aff[b]);
        mu_aff = std::max(mu_aff / static_cast<double>(dim_total), 0.0);
        double sigma = std::pow(mu_aff / std::max(mu, 1e-300), 3.0);
        sigma = std::min(std::max(sigma, 1e-4), 0.9);

        // corrector pass
        for (std::size_t b = 0; b < nblk; ++b) rhs3[b] = sym_part(sigma * mu * sinv[b] - st.x[b]);
        auto [dz, dx, ds] = solve_direction(rhs3);
        auto [ap, ad] = step_lengths(dx, ds);

        for (std::size_t k = 0; k < nvar; ++k) st.z[k] += ad * dz[k];
        for (std::size_t b = 0; b < nblk; ++b) {
            st.x[b] = sym_part(st.x[b] + ap * dx[b]);
            st.s[b] = sym_part(st.s[b] + ad * ds[b]);
        }
    }

    // report the best iterate seen
    sol.iterations = iter;
    sol.z = best.z;
    sol.duals = best.x;
    sol.primal_objective = dot(p.cost, best.z);
    sol.dual_objective = 0.0;
    double dual_res = 0.0;
    {
        Vec stat(nvar, 0.0);
        for (std::size_t k = 0; k < nvar; ++k) stat[k] = p.cost[k];
        double primal_inf = -std::numeric_limits<double>::infinity();
        for (std::size_t b = 0; b < nblk; ++b) {
            Mat f = p.lmi_blocks[b][0];
            for (std::size_t k : prep[b].nz) f = f + best.z[k] * p.lmi_blocks[b][k + 1];
            primal_inf = std::max(primal_inf, lambda_max_sym(f));
            sol.dual_objective += frob_inner(p.lmi_blocks[b][0], best.x[b]);
            for (std::size_t k : prep[b].nz) stat[k] += frob_inner(p.lmi_blocks[b][k + 1], best.x[b]);
        }
        dual_res = norm_inf(stat);
        sol.residuals.primal_infeasibility = primal_inf;
        sol.residuals.dual_infeasibility = dual_res;
        sol.residuals.duality_gap = sol.primal_objective - sol.dual_objective;
    }
    return sol;
}

namespace detail {

// phase-1 problem: minimize t subject to F(z) - t I <= 0 and t >= -cap
inline Problem make_phase1(const Problem& p, double cap) {
    Problem q;
    q.num_vars = p.num_vars + 1;
    q.cost.assign(q.num_vars, 0.0);
    q.cost.back() = 1.0;
    q.var_names = p.var_names;
    if (!q.var_names.empty()) q.var_names.push_back("feasibility_t");
    for (const auto& blk : p.lmi_blocks) {
        std::vector<Mat> nb = blk;
        nb.push_back(-Mat::identity(blk.front().rows()));
        q.lmi_blocks.push_back(std::move(nb));
    }
    std::vector<Mat> capblk(p.num_vars + 2, Mat(1, 1));
    capblk[0](0, 0) = -cap;
    capblk[p.num_vars + 1](0, 0) = -1.0;
    q.lmi_blocks.push_back(std::move(capblk));
    return q;
}

inline Vec phase1_start(const Problem& p, double cap) {
    double t0 = -cap + 1.0;
    for (const auto& blk : p.lmi_blocks) t0 = std::max(t0, lambda_max_sym(blk[0]) + 1.0);
    Vec z(p.num_vars + 1, 0.0);
    z.back() = t0;
    return z;
}

}  // namespace detail

// Solve with the feasibility pass in front unless a strictly feasible start
// is supplied. Deterministic given identical inputs and settings.
inline Solution solve(const Problem& p, const Settings& cfg = {}) {
    validate_problem(p);
    if (cfg.feasible_start) {
        require(cfg.feasible_start->size() == p.num_vars, "sdp: feasible_start length mismatch");
        return run_ipm(p, *cfg.feasible_start, cfg);
    }

    const Problem p1 = detail::make_phase1(p, cfg.feasibility_margin_cap);
    Settings cfg1 = cfg;
    cfg1.feasible_start.reset();
    Solution s1 = run_ipm(p1, detail::phase1_start(p, cfg.feasibility_margin_cap), cfg1);
    const double t_star = s1.z.back();

    if (t_star > cfg.infeasibility_threshold) {
        Solution out;
        out.z.assign(s1.z.begin(), s1.z.end() - 1);
        out.status = Status::infeasible;
        out.iterations = s1.iterations;
        out.phase1_margin = -t_star;
        out.primal_objective = dot(p.cost, out.z);
        out.residuals.primal_infeasibility = t_star;
        return out;
    }

    Vec z0(s1.z.begin(), s1.z.end() - 1);
    Solution out = run_ipm(p, z0, cfg);
    out.phase1_margin = -t_star;
    return out;
}

struct FeasibilityResult {
    bool feasible = false;
    Vec witness;    // z at the phase-1 optimum
    double margin = 0.0;  // -t*, positive means strictly feasible
    Solution detail;
};

// Wraps solve on: minimize t subject to F(z) <= t I.
inline FeasibilityResult feasibility(const Problem& p, const Settings& cfg = {}) {
    validate_problem(p);
    const Problem p1 = detail::make_phase1(p, cfg.feasibility_margin_cap);
    Settings cfg1 = cfg;
    cfg1.feasible_start = detail::phase1_start(p, cfg.feasibility_margin_cap);
    Solution s1 = solve(p1, cfg1);
    FeasibilityResult out;
    out.margin = -s1.z.back();
    out.feasible = s1.z.back() < cfg.infeasibility_threshold;
    out.witness.assign(s1.z.begin(), s1.z.end() - 1);
    out.detail = std::move(s1);
    return out;
}

struct VerifyReport {
    double max_primal_violation = 0.0;   // max over blocks of lambda_max(F(z))
    double dual_psd_violation = 0.0;     // max over blocks of max(0, -lambda_min(X))
    double dual_equality_residual = 0.0; // max_k |c_k + sum_b <F_k, X_b>|
    double duality_gap = 0.0;            // |c^T z - sum_b <F_0^b, X_b>|
    std::vector<double> complementary_slackness;  // |Tr(X_b F_b(z))| per block
    bool has_duals = false;

    bool pass(double primal_tol = 1e-7, double dual_tol = 1e-9, double gap_tol = 1e-7,
              double slack_tol = 1e-6) const {
        if (max_primal_violation > primal_tol) return false;
        if (!has_duals) return true;
        if (dual_psd_violation > dual_tol) return false;
        if (dual_equality_residual > gap_tol) return false;
        if (duality_gap > gap_tol) return false;
        for (double cs : complementary_slackness)
            if (std::abs(cs) > slack_tol) return false;
        return true;
    }
};

// Recomputes every residual from scratch, independent of solver internals.
inline VerifyReport verify(const Problem& p, const Solution& s) {
    validate_problem(p);
    require(s.z.size() == p.num_vars, "sdp verify: z length mismatch");
    VerifyReport rep;
    rep.has_duals = s.duals.size() == p.lmi_blocks.size();
    rep.max_primal_violation = -std::numeric_limits<double>::infinity();
    double scale = 1.0 + std::abs(dot(p.cost, s.z));
    double dobj = 0.0;
    Vec stat = p.cost;
    for (std::size_t b = 0; b < p.lmi_blocks.size(); ++b) {
        Mat f = p.lmi_blocks[b][0];
        for (std::size_t k = 0; k < p.num_vars; ++k) {
            if (s.z[k] == 0.0 || max_abs(p.lmi_blocks[b][k + 1]) == 0.0) continue;
            f = f + s.z[k] * p.lmi_blocks[b][k + 1];
        }
        rep.max_primal_violation = std::max(rep.max_primal_violation, lambda_max_sym(f));
        if (rep.has_duals) {
            const Mat& x = s.duals[b];
            rep.dual_psd_violation = std::max(rep.dual_psd_violation, std::max(0.0, -lambda_min_sym(x)));
            rep.complementary_slackness.push_back(std::abs(frob_inner(x, f)) / scale);
            dobj += frob_inner(p.lmi_blocks[b][0], x);
            for (std::size_t k = 0; k < p.num_vars; ++k) stat[k] += frob_inner(p.lmi_blocks[b][k + 1], x);
        }
    }
    if (rep.has_duals) {
        rep.dual_equality_residual = norm_inf(stat) / std::max(1.0, norm_inf(p.cost));
        rep.duality_gap = std::abs(dot(p.cost, s.z) - dobj) / scale;
    }
    return rep;
}

// Text dump of a problem, one labeled matrix per section. Debug aid for
// cross-checking against external solvers.
inline void dump(const Problem& p, std::ostream& os) {
    os << "num_vars " << p.num_vars << "\n";
    os << "cost";
    for (double c : p.cost) os << " " << c;
    os << "\n";
    if (!p.var_names.empty()) {
        os << "vars";
        for (const auto& n : p.var_names) os << " " << n;
        os << "\n";
    }
    for (std::size_t b = 0; b < p.lmi_blocks.size(); ++b) {
        const auto& blk = p.lmi_blocks[b];
        os << "block " << b << " dim " << blk.front().rows() << "\n";
        for (std::size_t k = 0; k < blk.size(); ++k) {
            if (k > 0 && max_abs(blk[k]) == 0.0) continue;
            os << (k == 0 ? std::string("F0") : "F" + std::to_string(k)) << "\n";
            for (std::size_t i = 0; i < blk[k].rows(); ++i) {
                for (std::size_t j = 0; j < blk[k].cols(); ++j)
                    os << (j ? " " : "") << blk[k](i, j);
                os << "\n";
            }
        }
    }
}

}  // namespace teamlq::sdp
