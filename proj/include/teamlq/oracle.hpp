#pragma once

// Independent verification engines: seeded Monte Carlo estimation of the
// Gaussian expectations, a normal-equations projection oracle assembled from
// first principles (kept deliberately separate from the radner solve path),
// the scalar constrained problem whose pointwise optimum is nonlinear, and
// congruence eigenvalue checks for the worst-case quadratic constraints.

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "teamlq/core.hpp"
#include "teamlq/linalg.hpp"
#include "teamlq/radner.hpp"

namespace teamlq::oracle {

// Portable seeded generator: a splitmix64 stream per draw position, normals
// via Box-Muller. Stream splitting is per sample index — sample s draws from
// the stream keyed by (seed, s) — so block-parallel estimation reproduces the
// serial result exactly.
struct Rng {
    std::uint64_t state;

    explicit Rng(std::uint64_t seed) : state(seed) {}

    static Rng for_sample(std::uint64_t seed, std::uint64_t sample_index) {
        return Rng(seed ^ (0x9e3779b97f4a7c15ULL * (sample_index + 1)));
    }

    std::uint64_t next_u64() {
        state += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    double uniform01() { return ((next_u64() >> 11) + 0.5) * 0x1.0p-53; }

    double normal() {
        // Box-Muller; the spare is deliberately not cached so that each call
        // consumes a fixed number of uniforms
        const double u1 = uniform01();
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }
};

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t samples = 0;
    std::uint64_t seed = 0;
};

// One function y_i -> u_i per player; policies must respect the information
// structure by construction (they only ever see their own measurement).
using PlayerPolicy = std::function<Vec(const Vec&)>;

struct Policy {
    std::vector<PlayerPolicy> players;
};

inline Policy linear_policy(const DecisionGain& gain) {
    Policy pol;
    for (const Mat& k : gain.blocks)
        pol.players.push_back([k](const Vec& y) { return mat_vec(k, y); });
    return pol;
}

// Monte Carlo estimate of E[x; u]^T M [x; u] under x ~ N(0, state_cov),
// v ~ N(0, noise_cov), u_i = policy_i(C_i x + v_i). Deterministic per seed.
inline McEstimate mc_expected_cost(const TeamProblem& p, const Policy& policy,
                                   const QuadraticForm& form, std::size_t samples,
                                   std::uint64_t seed) {
    require(p.mode == Mode::gaussian && p.stats.has_value(), "mc_expected_cost: gaussian mode required");
    require(policy.players.size() == p.info.num_players(), "mc_expected_cost: one policy per player");
    require(samples >= 1000, "mc_expected_cost: at least 1e3 samples");

    const std::size_t n = p.objective.state_dim();
    const std::size_t pdim = p.info.total_measurement_dim();
    const Mat state_sqrt = p.stats->state_sqrt();
    const bool noisy = !p.stats->noise_cov.empty();
    const Mat noise_sqrt = noisy ? psd_sqrt(sym_part(p.stats->noise_cov)) : Mat();
    const Mat c = p.info.stacked_measurement_map();

    double mean = 0.0, m2 = 0.0;
    Vec xi(n), eta(pdim), x(n), y(pdim), u;
    for (std::size_t s = 0; s < samples; ++s) {
        Rng rng = Rng::for_sample(seed, s);
        for (std::size_t i = 0; i < n; ++i) xi[i] = rng.normal();
        x = mat_vec(state_sqrt, xi);
        y = mat_vec(c, x);
        if (noisy) {
            for (std::size_t i = 0; i < pdim; ++i) eta[i] = rng.normal();
            const Vec v = mat_vec(noise_sqrt, eta);
            for (std::size_t i = 0; i < pdim; ++i) y[i] += v[i];
        }
        u.clear();
        for (std::size_t i = 0; i < p.info.num_players(); ++i) {
            const std::size_t off = p.info.measurement_offset(i);
            const Vec yi(y.begin() + off, y.begin() + off + p.info.measurement_dim(i));
            const Vec ui = policy.players[i](yi);
            require(ui.size() == p.info.decision_dims[i], "mc_expected_cost: policy output size mismatch");
            u.insert(u.end(), ui.begin(), ui.end());
        }
        // cost sample [x; u]^T M [x; u]
        double cost = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) cost += x[i] * form.q(i, j) * x[j];
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < u.size(); ++j) cost += 2.0 * x[i] * form.s(i, j) * u[j];
        for (std::size_t i = 0; i < u.size(); ++i)
            for (std::size_t j = 0; j < u.size(); ++j) cost += u[i] * form.r(i, j) * u[j];

        const double delta = cost - mean;
        mean += delta / static_cast<double>(s + 1);
        m2 += delta * (cost - mean);
    }

    McEstimate est;
    est.mean = mean;
    est.samples = samples;
    est.seed = seed;
    const double var = samples > 1 ? m2 / static_cast<double>(samples - 1) : 0.0;
    est.std_error = std::sqrt(std::max(var, 0.0) / static_cast<double>(samples));
    return est;
}

// Direct least-squares derivation of the optimal structured gain: minimize
// E||u - Lx||^2_r over the gain-basis coefficients via the explicitly
// assembled Gram matrix. Independent of radner::solve_unconstrained.
inline DecisionGain projection_oracle(const TeamProblem& p) {
    require(p.mode == Mode::gaussian && p.stats.has_value(), "projection_oracle: gaussian mode required");
    const Mat l = radner::full_information_gain(p.objective);
    const Mat c = p.info.stacked_measurement_map();
    const Mat vxx = p.stats->state_cov;
    Mat g = c * vxx * transpose(c);
    if (!p.stats->noise_cov.empty()) g = g + p.stats->noise_cov;
    g = sym_part(g);

    const std::vector<Mat> basis = gain_basis(p.info);
    const std::size_t nb = basis.size();
    Mat gram(nb, nb);
    Vec rhs(nb, 0.0);
    const Mat exy = vxx * transpose(c);  // E[x y^T]
    for (std::size_t a = 0; a < nb; ++a) {
        for (std::size_t b = a; b < nb; ++b) {
            // <B_a y, B_b y>_r = Tr(B_a^T r B_b G)
            const double v = trace(transpose(basis[a]) * p.objective.r * basis[b] * g);
            gram(a, b) = v;
            gram(b, a) = v;
        }
        rhs[a] = trace(transpose(basis[a]) * p.objective.r * l * exy);
    }
    Vec z;
    try {
        z = solve_spd(gram, rhs);
    } catch (const NotSpdError&) {
        throw std::runtime_error("projection_oracle: singular Gram matrix (degenerate statistics)");
    }
    return gain_from_coefficients(z, p.info);
}

// The scalar reference problem: minimize u^2 subject to (x - u)^2 <= gamma.
// The pointwise optimum shrinks x toward zero by sqrt(gamma) and is
// nonlinear in x.
inline double example1_closed_form(double x, double gamma) {
    require(gamma >= 0.0, "example1_closed_form: gamma must be nonnegative");
    if (x * x > gamma) return (std::abs(x) - std::sqrt(gamma)) * (x >= 0.0 ? 1.0 : -1.0);
    return 0.0;
}

struct PolicyTable {
    Vec x;
    Vec u;
};

inline Vec make_grid(double lo, double hi, double step) {
    Vec g;
    for (double v = lo; v <= hi + 0.5 * step; v += step) g.push_back(v);
    return g;
}

// For each grid x, scan u_grid for the u minimizing u^2 subject to
// (x - u)^2 <= gamma. u = x is always feasible, so the table is total.
inline PolicyTable example1_grid(double gamma, const Vec& x_grid, const Vec& u_grid) {
    require(gamma >= 0.0, "example1_grid: gamma must be nonnegative");
    PolicyTable table;
    for (double x : x_grid) {
        double best_u = x;
        double best_cost = x * x;
        for (double u : u_grid) {
            if ((x - u) * (x - u) > gamma) continue;
            if (u * u < best_cost) {
                best_cost = u * u;
                best_u = u;
            }
        }
        table.x.push_back(x);
        table.u.push_back(best_u);
    }
    return table;
}

// lambda_max([I; KC]^T M [I; KC]); negative iff the worst-case quadratic
// constraint holds strictly for every x != 0.
inline double congruence_max_eig(const QuadraticForm& form, const DecisionGain& gain,
                                 const InformationStructure& info) {
    const Mat k = assemble_gain(gain, info);
    const Mat kc = k * info.stacked_measurement_map();
    const Mat inner = form.q + form.s * kc + transpose(kc) * transpose(form.s) +
                      transpose(kc) * form.r * kc;
    return lambda_max_sym(sym_part(inner));
}

}  // namespace teamlq::oracle
