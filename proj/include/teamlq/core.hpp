#pragma once

// Problem data model shared by every solver: quadratic forms coupling state
// and decision, the information structure that induces the block-diagonal
// gain set, Gaussian statistics, and the assembled team problem. All types
// are immutable values after construction and safe to share across threads.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "teamlq/linalg.hpp"

namespace teamlq {

// One indexed block matrix [[q, s], [s^T, r]] over (state, decision).
// q and r are symmetrized on construction; the relative asymmetry of the
// inputs is recorded so validate() can flag sloppy data.
struct QuadraticForm {
    Mat q;  // n x n, state-state
    Mat s;  // n x m, state-decision
    Mat r;  // m x m, decision-decision
    double input_asymmetry_q = 0.0;
    double input_asymmetry_r = 0.0;

    QuadraticForm() = default;
    QuadraticForm(Mat q_in, Mat s_in, Mat r_in) {
        require(q_in.is_square(), "QuadraticForm: q must be square");
        require(r_in.is_square(), "QuadraticForm: r must be square");
        require(s_in.rows() == q_in.rows() && s_in.cols() == r_in.rows(),
                "QuadraticForm: s must be state_dim x decision_dim");
        input_asymmetry_q = all_finite(q_in) ? asymmetry(q_in) : 0.0;
        input_asymmetry_r = all_finite(r_in) ? asymmetry(r_in) : 0.0;
        q = sym_part(q_in);
        s = std::move(s_in);
        r = sym_part(r_in);
    }

    std::size_t state_dim() const { return q.rows(); }
    std::size_t decision_dim() const { return r.rows(); }

    // [[q, s], [s^T, r]] as one (n+m) x (n+m) matrix
    Mat full_matrix() const {
        Mat m(state_dim() + decision_dim(), state_dim() + decision_dim());
        put_block(m, 0, 0, q);
        put_block(m, 0, state_dim(), s);
        put_block(m, state_dim(), 0, transpose(s));
        put_block(m, state_dim(), state_dim(), r);
        return m;
    }
};

// Per-player decision sizes m_i and measurement maps C_i (p_i x n). The
// induced gain set is K = diag(K_1, ..., K_N) with K_i of size m_i x p_i.
struct InformationStructure {
    std::vector<std::size_t> decision_dims;
    std::vector<Mat> measurement_maps;

    std::size_t num_players() const { return decision_dims.size(); }
    std::size_t total_decision_dim() const {
        std::size_t m = 0;
        for (std::size_t mi : decision_dims) m += mi;
        return m;
    }
    std::size_t total_measurement_dim() const {
        std::size_t p = 0;
        for (const Mat& c : measurement_maps) p += c.rows();
        return p;
    }
    std::size_t state_dim() const { return measurement_maps.empty() ? 0 : measurement_maps.front().cols(); }
    std::size_t measurement_dim(std::size_t i) const { return measurement_maps[i].rows(); }

    std::size_t decision_offset(std::size_t i) const {
        std::size_t off = 0;
        for (std::size_t k = 0; k < i; ++k) off += decision_dims[k];
        return off;
    }
    std::size_t measurement_offset(std::size_t i) const {
        std::size_t off = 0;
        for (std::size_t k = 0; k < i; ++k) off += measurement_maps[k].rows();
        return off;
    }

    // C = [C_1; ...; C_N], p x n
    Mat stacked_measurement_map() const {
        Mat c(total_measurement_dim(), state_dim());
        std::size_t row = 0;
        for (const Mat& ci : measurement_maps) {
            put_block(c, row, 0, ci);
            row += ci.rows();
        }
        return c;
    }
};

struct GaussianStatistics {
    Mat state_cov;  // n x n, E xx^T
    Mat noise_cov;  // p x p, E vv^T; empty when measurements are noiseless

    bool has_noise() const { return !noise_cov.empty() && max_abs(noise_cov) > 0.0; }
    // symmetric PSD square root of the state covariance (the X with X^2 = cov)
    Mat state_sqrt() const { return psd_sqrt(sym_part(state_cov)); }
};

enum class Mode { gaussian, minimax };

struct Constraint {
    QuadraticForm form;
    double bound = 0.0;  // gamma_j
};

struct TeamProblem {
    QuadraticForm objective;
    std::vector<Constraint> constraints;
    InformationStructure info;
    std::optional<GaussianStatistics> stats;
    Mode mode = Mode::gaussian;
};

// The team's linear policy u_i = K_i y_i, stored block by block.
struct DecisionGain {
    std::vector<Mat> blocks;
};

struct Diagnostic {
    std::string field;
    std::string message;
};

// ---------------------------------------------------------------------------
// gain parametrization

inline void check_gain_shapes(const DecisionGain& gain, const InformationStructure& info) {
    require(gain.blocks.size() == info.num_players(), "gain: wrong number of blocks");
    for (std::size_t i = 0; i < gain.blocks.size(); ++i) {
        require(gain.blocks[i].rows() == info.decision_dims[i] &&
                    gain.blocks[i].cols() == info.measurement_dim(i),
                "gain: block " + std::to_string(i) + " has wrong shape");
    }
}

// diag(K_1, ..., K_N) as a dense m x p matrix
inline Mat assemble_gain(const DecisionGain& gain, const InformationStructure& info) {
    check_gain_shapes(gain, info);
    Mat k(info.total_decision_dim(), info.total_measurement_dim());
    for (std::size_t i = 0; i < gain.blocks.size(); ++i)
        put_block(k, info.decision_offset(i), info.measurement_offset(i), gain.blocks[i]);
    return k;
}

// keeps the diagonal blocks, zeroes everything else
inline DecisionGain project_gain(const Mat& dense, const InformationStructure& info) {
    require(dense.rows() == info.total_decision_dim() && dense.cols() == info.total_measurement_dim(),
            "project_gain: dense matrix has wrong shape");
    DecisionGain g;
    for (std::size_t i = 0; i < info.num_players(); ++i)
        g.blocks.push_back(block(dense, info.decision_offset(i), info.measurement_offset(i),
                                 info.decision_dims[i], info.measurement_dim(i)));
    return g;
}

inline DecisionGain zero_gain(const InformationStructure& info) {
    DecisionGain g;
    for (std::size_t i = 0; i < info.num_players(); ++i)
        g.blocks.emplace_back(info.decision_dims[i], info.measurement_dim(i));
    return g;
}

// Basis of the structured gain set: one m x p matrix per free entry, a single
// 1 inside some diagonal block. Ordering is a documented contract used by the
// SDP builders: blocks in player order, row-major within each block.
inline std::vector<Mat> gain_basis(const InformationStructure& info) {
    std::vector<Mat> basis;
    basis.reserve([&] {
        std::size_t c = 0;
        for (std::size_t i = 0; i < info.num_players(); ++i)
            c += info.decision_dims[i] * info.measurement_dim(i);
        return c;
    }());
    for (std::size_t i = 0; i < info.num_players(); ++i) {
        const std::size_t roff = info.decision_offset(i), coff = info.measurement_offset(i);
        for (std::size_t r = 0; r < info.decision_dims[i]; ++r)
            for (std::size_t c = 0; c < info.measurement_dim(i); ++c) {
                Mat b(info.total_decision_dim(), info.total_measurement_dim());
                b(roff + r, coff + c) = 1.0;
                basis.push_back(std::move(b));
            }
    }
    return basis;
}

// coefficients of an assembled gain in the gain_basis ordering
inline Vec gain_coefficients(const DecisionGain& gain, const InformationStructure& info) {
    check_gain_shapes(gain, info);
    Vec z;
    for (std::size_t i = 0; i < info.num_players(); ++i)
        for (std::size_t r = 0; r < info.decision_dims[i]; ++r)
            for (std::size_t c = 0; c < info.measurement_dim(i); ++c)
                z.push_back(gain.blocks[i](r, c));
    return z;
}

inline DecisionGain gain_from_coefficients(const Vec& z, const InformationStructure& info) {
    DecisionGain g = zero_gain(info);
    std::size_t k = 0;
    require(z.size() >= [&] {
        std::size_t c = 0;
        for (std::size_t i = 0; i < info.num_players(); ++i)
            c += info.decision_dims[i] * info.measurement_dim(i);
        return c;
    }(), "gain_from_coefficients: too few coefficients");
    for (std::size_t i = 0; i < info.num_players(); ++i)
        for (std::size_t r = 0; r < info.decision_dims[i]; ++r)
            for (std::size_t c = 0; c < info.measurement_dim(i); ++c) g.blocks[i](r, c) = z[k++];
    return g;
}

// ---------------------------------------------------------------------------
// validation

namespace detail {

inline void check_form(const QuadraticForm& f, const std::string& name, bool objective,
                       bool constrained_gaussian, std::vector<Diagnostic>& out) {
    const bool finite = all_finite(f.q) && all_finite(f.s) && all_finite(f.r);
    if (!finite) {
        out.push_back({name, "non-finite entries"});
        return;
    }
    if (f.input_asymmetry_q > 1e-12) out.push_back({name + ".q", "asymmetric q beyond tolerance"});
    if (f.input_asymmetry_r > 1e-12) out.push_back({name + ".r", "asymmetric r beyond tolerance"});
    if (f.decision_dim() > 0) {
        const double rmin = lambda_min_sym(f.r);
        const double rnorm = spectral_norm_sym(f.r);
        if (objective) {
            if (!(rmin > 0.0)) out.push_back({name + ".r", "objective r not positive definite"});
        } else if (rmin < -1e-10 * std::max(rnorm, 1e-300)) {
            out.push_back({name + ".r", "constraint r not positive semidefinite"});
        }
    }
    if (objective && constrained_gaussian) {
        const Mat full = f.full_matrix();
        const double wmin = lambda_min_sym(full);
        if (wmin < -1e-10 * std::max(spectral_norm_sym(full), 1e-300))
            out.push_back({name, "objective block matrix [[q,s],[s^T,r]] not positive semidefinite"});
    }
}

}  // namespace detail

// Returns one diagnostic per violated invariant; empty means the problem is
// well formed. Never throws on finite or non-finite input.
inline std::vector<Diagnostic> validate(const TeamProblem& p) {
    std::vector<Diagnostic> out;
    const std::size_t n = p.objective.state_dim();
    const std::size_t m = p.objective.decision_dim();

    // information structure
    if (p.info.decision_dims.size() != p.info.measurement_maps.size())
        out.push_back({"info", "decision_dims and measurement_maps disagree on player count"});
    std::size_t m_sum = 0, p_sum = 0;
    for (std::size_t i = 0; i < p.info.decision_dims.size(); ++i) {
        if (p.info.decision_dims[i] < 1)
            out.push_back({"info.decision_dims[" + std::to_string(i) + "]", "decision size must be >= 1"});
        m_sum += p.info.decision_dims[i];
    }
    for (std::size_t i = 0; i < p.info.measurement_maps.size(); ++i) {
        const Mat& ci = p.info.measurement_maps[i];
        if (ci.rows() < 1)
            out.push_back({"info.measurement_maps[" + std::to_string(i) + "]", "measurement size must be >= 1"});
        if (ci.cols() != n)
            out.push_back({"info.measurement_maps[" + std::to_string(i) + "]",
                           "column count differs from state dimension"});
        if (!all_finite(ci))
            out.push_back({"info.measurement_maps[" + std::to_string(i) + "]", "non-finite entries"});
        p_sum += ci.rows();
    }
    if (m_sum != m) out.push_back({"info.decision_dims", "sizes do not sum to the decision dimension"});

    // forms
    const bool constrained_gaussian = p.mode == Mode::gaussian && !p.constraints.empty();
    detail::check_form(p.objective, "objective", true, constrained_gaussian, out);
    for (std::size_t j = 0; j < p.constraints.size(); ++j) {
        const auto& c = p.constraints[j];
        const std::string name = "constraints[" + std::to_string(j) + "]";
        if (c.form.state_dim() != n || c.form.decision_dim() != m)
            out.push_back({name, "form dimensions differ from the objective"});
        detail::check_form(c.form, name, false, constrained_gaussian, out);
        if (!std::isfinite(c.bound)) out.push_back({name + ".bound", "bound must be finite"});
    }

    // statistics vs mode
    if (p.mode == Mode::gaussian) {
        if (!p.stats) {
            out.push_back({"stats", "gaussian mode requires statistics"});
        } else {
            const Mat& sc = p.stats->state_cov;
            if (!sc.is_square() || sc.rows() != n)
                out.push_back({"stats.state_cov", "must be state_dim x state_dim"});
            else if (!all_finite(sc))
                out.push_back({"stats.state_cov", "non-finite entries"});
            else {
                const Mat scs = sym_part(sc);
                if (lambda_min_sym(scs) < -1e-10 * std::max(spectral_norm_sym(scs), 1e-300))
                    out.push_back({"stats.state_cov", "not positive semidefinite"});
            }
            if (!p.stats->noise_cov.empty()) {
                const Mat& nc = p.stats->noise_cov;
                if (!nc.is_square() || nc.rows() != p_sum)
                    out.push_back({"stats.noise_cov", "must be measurement_dim x measurement_dim"});
                else if (!all_finite(nc))
                    out.push_back({"stats.noise_cov", "non-finite entries"});
                else {
                    const Mat ncs = sym_part(nc);
                    if (lambda_min_sym(ncs) < -1e-10 * std::max(spectral_norm_sym(ncs), 1e-300))
                        out.push_back({"stats.noise_cov", "not positive semidefinite"});
                }
            }
        }
    } else if (p.stats) {
        out.push_back({"stats", "minimax mode must not carry statistics"});
    }

    return out;
}

}  // namespace teamlq
