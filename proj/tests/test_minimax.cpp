#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "teamlq/minimax.hpp"
#include "teamlq/oracle.hpp"
#include "teamlq/radner.hpp"
#include "test_util.hpp"

using namespace teamlq;

namespace {

InformationStructure full_info_structure(std::size_t n, std::size_t m) {
    InformationStructure info;
    info.decision_dims = {m};
    info.measurement_maps = {Mat::identity(n)};
    return info;
}

InformationStructure per_coordinate_structure(std::size_t n) {
    InformationStructure info;
    for (std::size_t i = 0; i < n; ++i) {
        info.decision_dims.push_back(1);
        Mat c(1, n);
        c(0, i) = 1.0;
        info.measurement_maps.push_back(std::move(c));
    }
    return info;
}

// the benchmark objective form (scalar state, two coupled decisions)
QuadraticForm benchmark_objective() {
    return QuadraticForm(Mat{{1}}, Mat{{-1, -1}}, Mat{{2, 1}, {1, 2}});
}

double full_information_value(const QuadraticForm& f) {
    // lambda_max of the Schur complement q - s r^-1 s^T
    const Mat schur = f.q - f.s * solve_spd(f.r, transpose(f.s));
    return lambda_max_sym(sym_part(schur));
}

Mat evaluate_lmi_block(const minimax::BuildResult& br, std::size_t b, const Vec& z) {
    const auto& blk = br.problem.lmi_blocks[b];
    Mat f = blk[0];
    for (std::size_t k = 0; k < z.size(); ++k)
        if (z[k] != 0.0) f = f + z[k] * blk[k + 1];
    return f;
}

}  // namespace

TEST_CASE("build_lmi: the norm-bound block is a spectral-norm constraint") {
    InformationStructure info = full_info_structure(2, 2);
    const QuadraticForm f(-Mat::identity(2), Mat::zeros(2, 2), Mat::identity(2));
    const auto br = minimax::build_lmi({f}, info);
    REQUIRE(br.problem.num_vars == 4);
    REQUIRE(br.problem.lmi_blocks.size() == 1);

    // feasible with margin at K = 0
    const auto fg = minimax::solve_constrained({f}, info);
    CHECK(fg.feasible);
    CHECK(fg.margin > 0.5);

    // block sign tracks ||K||_2 <= 1
    DecisionGain small;
    small.blocks = {Mat{{0.5, 0}, {0, 0.5}}};
    CHECK(lambda_max_sym(evaluate_lmi_block(br, 0, gain_coefficients(small, info))) < 0.0);
    DecisionGain big;
    big.blocks = {Mat{{1.5, 0}, {0, 0.2}}};
    CHECK(lambda_max_sym(evaluate_lmi_block(br, 0, gain_coefficients(big, info))) > 0.0);
}

TEST_CASE("build_lmi: a positively curved state block is infeasible for every gain") {
    InformationStructure info = per_coordinate_structure(2);
    Mat q{{1, 0}, {0, -1}};  // lambda_max > 0
    const QuadraticForm f(q, Mat::zeros(2, 2), Mat::zeros(2, 2));
    const auto fg = minimax::solve_constrained({f}, info);
    CHECK_FALSE(fg.feasible);
    CHECK(fg.worst_block == 0);
}

TEST_CASE("LMI sign agrees with the congruence eigenvalue on random pairs") {
    testutil::Rand rng(7);
    int checked = 0;
    while (checked < 100) {
        const std::size_t n = 2 + rng.next_u64() % 2;
        InformationStructure info = per_coordinate_structure(n);
        const std::size_t m = info.total_decision_dim();
        const QuadraticForm f(testutil::random_sym(rng, n), testutil::random_mat(rng, n, m),
                              testutil::random_spd(rng, m, 0.5));
        DecisionGain g = zero_gain(info);
        for (auto& b : g.blocks) b = testutil::random_mat(rng, b.rows(), b.cols());

        const double cong = oracle::congruence_max_eig(f, g, info);
        if (std::abs(cong) <= 1e-8) continue;  // tie band excluded
        const auto br = minimax::build_lmi({f}, info);
        const double block_eig = lambda_max_sym(evaluate_lmi_block(br, 0, gain_coefficients(g, info)));
        CHECK(((cong > 0.0) == (block_eig > 0.0)));
        ++checked;
    }
}

TEST_CASE("an infeasible pair yields a violating state from the congruence eigenvector") {
    testutil::Rand rng(11);
    int found = 0;
    while (found < 20) {
        const std::size_t n = 2;
        InformationStructure info = per_coordinate_structure(n);
        const std::size_t m = info.total_decision_dim();
        const QuadraticForm f(testutil::random_sym(rng, n), testutil::random_mat(rng, n, m),
                              testutil::random_spd(rng, m, 0.5));
        DecisionGain g = zero_gain(info);
        for (auto& b : g.blocks) b = testutil::random_mat(rng, b.rows(), b.cols());
        if (oracle::congruence_max_eig(f, g, info) <= 1e-6) continue;

        // top eigenvector of the congruence matrix is a worst-case state
        const Mat kc = assemble_gain(g, info) * info.stacked_measurement_map();
        const Mat inner =
            sym_part(f.q + f.s * kc + transpose(kc) * transpose(f.s) + transpose(kc) * f.r * kc);
        const SymEig e = sym_eig(inner);
        Vec x(n);
        for (std::size_t i = 0; i < n; ++i) x[i] = e.eigenvectors(i, n - 1);
        const Vec u = mat_vec(kc, x);
        double value = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) value += x[i] * f.q(i, j) * x[j];
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j) value += 2.0 * x[i] * f.s(i, j) * u[j];
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) value += u[i] * f.r(i, j) * u[j];
        CHECK(value > 0.0);  // the quadratic constraint fails at this x
        ++found;
    }
}

TEST_CASE("full-information game value equals the Schur-complement eigenvalue") {
    // benchmark data with a single fully informed player: value 1/3
    InformationStructure info = full_info_structure(1, 2);
    const auto sol = minimax::value(benchmark_objective(), info, 1e-7);
    CHECK(sol.game_value == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
    CHECK(sol.certificate_margin > 0.0);

    testutil::Rand rng(17);
    for (int t = 0; t < 10; ++t) {
        const std::size_t n = 1 + rng.next_u64() % 3;
        const std::size_t m = 1 + rng.next_u64() % 2;
        const QuadraticForm f(testutil::random_sym(rng, n), testutil::random_mat(rng, n, m),
                              testutil::random_spd(rng, m, 0.6));
        InformationStructure info_t = full_info_structure(n, m);
        const auto s = minimax::value(f, info_t, 1e-7);
        const double oracle_value = full_information_value(f);
        CHECK(s.game_value == doctest::Approx(oracle_value).epsilon(1e-6));
    }
}

TEST_CASE("structured value dominates the full-information value") {
    InformationStructure info = per_coordinate_structure(1);
    info.decision_dims = {1, 1};
    info.measurement_maps = {Mat{{1}}, Mat{{1}}};
    const auto sol = minimax::value(benchmark_objective(), info, 1e-7);
    CHECK(sol.game_value >= 1.0 / 3.0 - 1e-6);

    // bracketing around the reported value
    const QuadraticForm obj = benchmark_objective();
    CHECK(minimax::solve_constrained({minimax::shift_state_block(obj, sol.game_value + 2e-7)}, info).feasible);
    CHECK_FALSE(
        minimax::solve_constrained({minimax::shift_state_block(obj, sol.game_value - 2e-7)}, info).feasible);
}

TEST_CASE("no coupling: the value is lambda_max of the state block and the gain is zero") {
    InformationStructure info = per_coordinate_structure(2);
    const QuadraticForm f(Mat{{2, 0}, {0, -1}}, Mat::zeros(2, 2), Mat::identity(2));
    const auto sol = minimax::value(f, info, 1e-7);
    CHECK(sol.game_value == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(max_abs(assemble_gain(sol.gain, info)) <= 1e-4);
}

TEST_CASE("bisection trace is monotone and brackets the value") {
    InformationStructure info = full_info_structure(2, 2);
    testutil::Rand rng(29);
    const QuadraticForm f(testutil::random_sym(rng, 2), testutil::random_mat(rng, 2, 2),
                          testutil::random_spd(rng, 2, 0.6));
    const auto sol = minimax::value(f, info, 1e-6);
    for (const auto& [ga, fa] : sol.bisection_trace)
        for (const auto& [gb, fb] : sol.bisection_trace)
            if (fa && !fb) CHECK(ga > gb);  // nothing feasible below an infeasible probe
}

TEST_CASE("scaling the objective scales the value and preserves the gain") {
    InformationStructure info;
    info.decision_dims = {1, 1};
    info.measurement_maps = {Mat{{1}}, Mat{{1}}};
    const QuadraticForm obj = benchmark_objective();
    const double tol = 1e-7;
    const auto base = minimax::value(obj, info, tol);

    const double alpha = 4.0;
    const QuadraticForm scaled(alpha * obj.q, alpha * obj.s, alpha * obj.r);
    const auto s2 = minimax::value(scaled, info, alpha * tol);
    CHECK(s2.game_value == doctest::Approx(alpha * base.game_value).epsilon(1e-6));
    CHECK(frob_norm(assemble_gain(s2.gain, info) - assemble_gain(base.gain, info)) <= 1e-6);
}

TEST_CASE("scalar constrained game: the optimal linear gain is 1 - sqrt(gamma)") {
    InformationStructure info;
    info.decision_dims = {1};
    info.measurement_maps = {Mat{{1}}};
    const QuadraticForm objective(Mat{{0}}, Mat{{0}}, Mat{{1}});       // worst-case ||u||^2
    const QuadraticForm constraint(Mat{{1}}, Mat{{-1}}, Mat{{1}});     // (x - u)^2
    const double gamma = 0.25;
    const auto sol =
        minimax::value(objective, {minimax::shift_state_block(constraint, gamma)}, info, 1e-7);
    CHECK(sol.game_value == doctest::Approx(0.25).epsilon(1e-5));
    CHECK(sol.gain.blocks[0](0, 0) == doctest::Approx(0.5).epsilon(5e-3));

    // a norm constraint alone is always satisfiable by the zero gain
    const auto fg = minimax::solve_constrained({minimax::norm_constraint_form(info, 0, 1.0)}, info);
    CHECK(fg.feasible);
}

TEST_CASE("a loose shared power bound does not move the value") {
    InformationStructure info;
    info.decision_dims = {1, 1};
    info.measurement_maps = {Mat{{1}}, Mat{{1}}};
    const QuadraticForm obj = benchmark_objective();
    const auto plain = minimax::value(obj, info, 1e-6);
    const auto bounded = minimax::value(obj, {minimax::shared_power_form(info, 100.0)}, info, 1e-6);
    CHECK(bounded.game_value == doctest::Approx(plain.game_value).epsilon(1e-5));
}

TEST_CASE("zero shared power forces the zero gain") {
    InformationStructure info;
    info.decision_dims = {1, 1};
    info.measurement_maps = {Mat{{1}}, Mat{{1}}};
    const auto fg = minimax::solve_constrained({minimax::shared_power_form(info, 0.0)}, info);
    CHECK(fg.feasible);
    CHECK(max_abs(assemble_gain(fg.gain, info)) <= 1e-4);
}

TEST_CASE("constraint form builders") {
    InformationStructure info;
    info.decision_dims = {1, 1};
    info.measurement_maps = {Mat{{1, 0}}, Mat{{0, 1}}};
    const QuadraticForm f = minimax::norm_constraint_form(info, 0, 2.0);
    CHECK(f.q(0, 0) == -2.0);
    CHECK(f.q(1, 1) == -2.0);
    CHECK(f.q(0, 1) == 0.0);
    CHECK(max_abs(f.s) == 0.0);
    CHECK(f.r(0, 0) == 1.0);
    CHECK(f.r(1, 1) == 0.0);

    const QuadraticForm sh = minimax::shared_power_form(info, 3.0);
    CHECK(sh.q(0, 0) == -3.0);
    CHECK(sh.r(0, 0) == 1.0);
    CHECK(sh.r(1, 1) == 1.0);

    CHECK_THROWS_AS((void)minimax::norm_constraint_form(info, 0, -1.0), std::invalid_argument);
    CHECK_THROWS_AS((void)minimax::shared_power_form(info, -0.5), std::invalid_argument);

    // norm-form feasibility threshold matches the singular value of K C
    testutil::Rand rng(31);
    for (int t = 0; t < 20; ++t) {
        DecisionGain g;
        g.blocks = {Mat{{rng.sym_unit() * 2.0}}, Mat{{rng.sym_unit() * 2.0}}};
        const double gamma_i = 0.1 + 2.0 * rng.uniform01();
        const QuadraticForm nf = minimax::norm_constraint_form(info, 0, gamma_i);
        const double cong = oracle::congruence_max_eig(nf, g, info);
        const double k1 = g.blocks[0](0, 0);
        if (std::abs(k1 * k1 - gamma_i) < 1e-8) continue;
        CHECK(((k1 * k1 > gamma_i) == (cong > 0.0)));
    }
}

TEST_CASE("trace-constrained maximization equals the top eigenvalue") {
    auto [l1, r1] = minimax::stochastic_equivalence_check(Mat::identity(2));
    CHECK(l1 == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(r1 == doctest::Approx(1.0).epsilon(1e-12));

    auto [l2, r2] = minimax::stochastic_equivalence_check(Mat{{3, 0}, {0, -1}});
    CHECK(l2 == doctest::Approx(3.0).epsilon(1e-7));
    CHECK(r2 == doctest::Approx(3.0).epsilon(1e-12));

    testutil::Rand rng(41);
    for (int t = 0; t < 5; ++t) {
        const Mat m = testutil::random_sym(rng, 5);
        auto [lhs, rhs] = minimax::stochastic_equivalence_check(m);
        CHECK(std::abs(lhs - rhs) <= 1e-7 * (1.0 + std::abs(rhs)));
    }
}

TEST_CASE("sampled lower values never exceed the computed game value") {
    testutil::Rand rng(47);
    InformationStructure info = per_coordinate_structure(2);
    const std::size_t m = info.total_decision_dim();
    const QuadraticForm f(testutil::random_sym(rng, 2), testutil::random_mat(rng, 2, m),
                          testutil::random_spd(rng, m, 0.6));
    const double tol = 1e-8;
    const auto sol = minimax::value(f, info, tol);

    for (int t = 0; t < 8; ++t) {
        // random PD covariance normalized to unit trace
        Mat x = testutil::random_spd(rng, 2, 0.2);
        x = (1.0 / trace(x)) * x;
        TeamProblem p;
        p.mode = Mode::gaussian;
        p.objective = f;
        p.info = info;
        GaussianStatistics st;
        st.state_cov = x;
        p.stats = st;
        const DecisionGain kbest = radner::solve_unconstrained(p);
        const double inner_value = radner::expected_cost(p, kbest);
        CHECK(inner_value <= sol.game_value + tol + 1e-8);
    }
}

TEST_CASE("objective r must be positive definite") {
    InformationStructure info = full_info_structure(1, 1);
    const QuadraticForm bad(Mat{{1}}, Mat{{0}}, Mat{{0}});
    CHECK_THROWS_AS((void)minimax::value(bad, info), std::invalid_argument);
}
