// Acceptance suite: end-to-end checks of the solver stack at pinned
// tolerances, one pass/fail line per criterion. Exits with the number of
// failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "teamlq/teamlq.hpp"
#include "test_util.hpp"

using namespace teamlq;

namespace {

int g_failures = 0;

struct Criterion {
    int number;
    std::string name;
    std::vector<std::string> problems;
    double seconds = 0.0;
    std::chrono::steady_clock::time_point start;

    double elapsed() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    void expect(bool ok, const std::string& what) {
        if (!ok) problems.push_back(what);
    }
    void expect_close(double value, double target, double tol, const std::string& what) {
        if (!(std::abs(value - target) <= tol))
            problems.push_back(what + ": " + std::to_string(value) + " vs " + std::to_string(target) +
                               " (tol " + std::to_string(tol) + ")");
    }
    void finish() {
        if (problems.empty()) {
            std::printf("criterion %02d [%s] PASS (%.2fs)\n", number, name.c_str(), seconds);
        } else {
            ++g_failures;
            std::printf("criterion %02d [%s] FAIL (%.2fs)\n", number, name.c_str(), seconds);
            for (const auto& p : problems) std::printf("    - %s\n", p.c_str());
        }
    }
};

void run_criterion(int number, const std::string& name, const std::function<void(Criterion&)>& body) {
    Criterion c;
    c.number = number;
    c.name = name;
    c.start = std::chrono::steady_clock::now();
    try {
        body(c);
    } catch (const std::exception& e) {
        c.problems.push_back(std::string("exception: ") + e.what());
    }
    c.seconds = c.elapsed();
    c.finish();
}

QuadraticForm benchmark_objective() {
    return QuadraticForm(Mat{{1}}, Mat{{-1, -1}}, Mat{{2, 1}, {1, 2}});
}

TeamProblem benchmark_with_power_bound(double bound) {
    TeamProblem p = testutil::two_player_benchmark();
    p.constraints.push_back({QuadraticForm(Mat(1, 1), Mat(1, 2), Mat::identity(2)), bound});
    return p;
}

double full_information_value(const QuadraticForm& f) {
    const Mat schur = f.q - f.s * solve_spd(f.r, transpose(f.s));
    return lambda_max_sym(sym_part(schur));
}

}  // namespace

int main() {
    run_criterion(1, "two-player benchmark reproduction", [](Criterion& c) {
        const TeamProblem p = testutil::two_player_benchmark();
        const DecisionGain k = radner::solve_unconstrained(p);
        c.expect_close(k.blocks[0](0, 0), 0.2, 1e-8, "K1");
        c.expect_close(k.blocks[1](0, 0), 0.2, 1e-8, "K2");
        c.expect_close(radner::expected_cost(p, k), 0.6, 1e-9, "team cost");
        const DecisionGain eta = radner::estimate_then_act(p);
        c.expect_close(eta.blocks[0](0, 0), 1.0 / 6.0, 1e-10, "estimate-then-act K1");
        c.expect_close(eta.blocks[1](0, 0), 1.0 / 6.0, 1e-10, "estimate-then-act K2");
        const double eta_cost = radner::expected_cost(p, eta);
        c.expect_close(eta_cost, 11.0 / 18.0, 1e-9, "estimate-then-act cost");
        c.expect_close(eta_cost, 0.611, 5e-4, "estimate-then-act cost, rounded figure");
        c.expect(c.elapsed() <= 1.0, "runtime");
    });

    run_criterion(2, "full-information gain", [](Criterion& c) {
        const Mat l = radner::full_information_gain(benchmark_objective());
        c.expect_close(l(0, 0), 1.0 / 3.0, 1e-10, "L1");
        c.expect_close(l(1, 0), 1.0 / 3.0, 1e-10, "L2");
    });

    run_criterion(3, "inactive constraints reduce to the unconstrained solution", [](Criterion& c) {
        const TeamProblem p = benchmark_with_power_bound(1e6);
        const auto sol = constrained::solve(p);
        c.expect(sol.status == sdp::Status::optimal, "SDP status not optimal");
        const DecisionGain kstar = radner::solve_unconstrained(p);
        c.expect_close(sol.gain.blocks[0](0, 0), kstar.blocks[0](0, 0), 1e-5, "K1 vs unconstrained");
        c.expect_close(sol.gain.blocks[1](0, 0), kstar.blocks[1](0, 0), 1e-5, "K2 vs unconstrained");
        for (double lambda : sol.multipliers)
            c.expect(lambda < 1e-6, "multiplier not vanishing: " + std::to_string(lambda));
        c.expect(c.elapsed() <= 5.0, "runtime");
    });

    run_criterion(4, "active power constraint with dual certificate", [](Criterion& c) {
        const TeamProblem base = testutil::two_player_benchmark();
        const DecisionGain kstar = radner::solve_unconstrained(base);
        TeamProblem p = benchmark_with_power_bound(0.0);
        const double full_power = constrained::constraint_value(p, kstar, 1);
        const double bound = 0.5 * full_power;
        p.constraints[0].bound = bound;

        const auto sol = constrained::solve(p);
        c.expect(sol.status == sdp::Status::optimal, "SDP status not optimal");
        c.expect(sol.constraint_values[0] <= bound + 1e-8, "power bound violated");
        c.expect(sol.multipliers[0] > 1e-4, "multiplier not active");
        const double comp = std::abs(sol.multipliers[0] * (sol.constraint_values[0] - bound));
        c.expect(comp < 1e-5, "complementary slackness " + std::to_string(comp));

        const auto policy = oracle::linear_policy(sol.gain);
        const auto cost = oracle::mc_expected_cost(p, policy, p.objective, 1000000, 20240817);
        c.expect(std::abs(cost.mean - constrained::constraint_value(p, sol.gain, 0)) <=
                     3.0 * cost.std_error,
                 "Monte Carlo objective outside 3 standard errors");
        const auto power = oracle::mc_expected_cost(p, policy, p.constraints[0].form, 1000000, 20240818);
        c.expect(std::abs(power.mean - sol.constraint_values[0]) <= 3.0 * power.std_error,
                 "Monte Carlo power outside 3 standard errors");
    });

    run_criterion(5, "minimax value matches the eigenvalue oracle under full information",
                  [](Criterion& c) {
        InformationStructure info;
        info.decision_dims = {2};
        info.measurement_maps = {Mat{{1}}};
        const auto sol = minimax::value(benchmark_objective(), info, 1e-7);
        c.expect_close(sol.game_value, 1.0 / 3.0, 1e-6, "benchmark value");

        testutil::Rand rng(2024);
        for (int t = 0; t < 10; ++t) {
            const auto t0 = std::chrono::steady_clock::now();
            const std::size_t n = 1 + rng.next_u64() % 3;
            const std::size_t m = 1 + rng.next_u64() % 2;
            const QuadraticForm f(testutil::random_sym(rng, n), testutil::random_mat(rng, n, m),
                                  testutil::random_spd(rng, m, 0.6));
            InformationStructure fi;
            fi.decision_dims = {m};
            fi.measurement_maps = {Mat::identity(n)};
            const auto s = minimax::value(f, fi, 1e-7);
            c.expect_close(s.game_value, full_information_value(f), 1e-6,
                           "random instance " + std::to_string(t));
            const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            c.expect(dt <= 10.0, "runtime per instance");
        }
    });

    run_criterion(6, "worst-case LMI sign matches the congruence eigenvalue", [](Criterion& c) {
        testutil::Rand rng(7);
        int checked = 0;
        while (checked < 100) {
            const std::size_t n = 2 + rng.next_u64() % 2;
            InformationStructure info;
            for (std::size_t i = 0; i < n; ++i) {
                info.decision_dims.push_back(1);
                Mat ci(1, n);
                ci(0, i) = 1.0;
                info.measurement_maps.push_back(std::move(ci));
            }
            const std::size_t m = info.total_decision_dim();
            const QuadraticForm f(testutil::random_sym(rng, n), testutil::random_mat(rng, n, m),
                                  testutil::random_spd(rng, m, 0.5));
            DecisionGain g = zero_gain(info);
            for (auto& b : g.blocks) b = testutil::random_mat(rng, b.rows(), b.cols());
            const double cong = oracle::congruence_max_eig(f, g, info);
            if (std::abs(cong) <= 1e-8) continue;  // tie band excluded
            const auto br = minimax::build_lmi({f}, info);
            const Vec z = gain_coefficients(g, info);
            Mat fz = br.problem.lmi_blocks[0][0];
            for (std::size_t k = 0; k < z.size(); ++k)
                if (z[k] != 0.0) fz = fz + z[k] * br.problem.lmi_blocks[0][k + 1];
            const double block_eig = lambda_max_sym(fz);
            if ((cong > 0.0) != (block_eig > 0.0))
                c.expect(false, "sign mismatch at instance " + std::to_string(checked));
            ++checked;
        }
    });

    run_criterion(7, "pointwise nonlinear optimum beats every feasible linear policy", [](Criterion& c) {
        const double gamma_abs = 1.0;
        const Vec x_grid = oracle::make_grid(-3.0, 3.0, 0.01);
        const Vec u_grid = oracle::make_grid(-3.0, 3.0, 1e-4);
        const auto table = oracle::example1_grid(gamma_abs, x_grid, u_grid);
        double worst = 0.0;
        for (std::size_t i = 0; i < table.x.size(); ++i)
            worst = std::max(worst,
                             std::abs(table.u[i] - oracle::example1_closed_form(table.x[i], gamma_abs)));
        c.expect(worst <= 1.01e-4, "grid vs closed form: " + std::to_string(worst));

        // the linear worst-case-ratio policy at gamma = 0.25 is exactly feasible
        const double gamma_ratio = 0.25;
        const double k = 1.0 - std::sqrt(gamma_ratio);
        InformationStructure info;
        info.decision_dims = {1};
        info.measurement_maps = {Mat{{1}}};
        DecisionGain kg;
        kg.blocks = {Mat{{k}}};
        const QuadraticForm ratio_form(Mat{{1.0 - gamma_ratio}}, Mat{{-1}}, Mat{{1}});
        c.expect(oracle::congruence_max_eig(ratio_form, kg, info) <= 1e-10,
                 "linear ratio policy infeasible");

        // boundary-equal at x = 2 where the two constraint levels coincide
        const double lin_cost_2 = (k * 2.0) * (k * 2.0);
        const double nl_2 = oracle::example1_closed_form(2.0, gamma_abs);
        c.expect_close(lin_cost_2, 1.0, 1e-12, "linear cost at x=2");
        c.expect_close(nl_2 * nl_2, 1.0, 1e-12, "nonlinear cost at x=2");

        // strict gap at x = 1.5
        const double lin_u = k * 1.5;
        const double nl_u = oracle::example1_closed_form(1.5, gamma_abs);
        c.expect_close(lin_u, 0.75, 1e-12, "linear decision at x=1.5");
        c.expect_close(nl_u, 0.5, 1e-12, "nonlinear decision at x=1.5");
        c.expect(lin_u * lin_u > nl_u * nl_u + 0.3, "no strict gap at x=1.5");
    });

    run_criterion(8, "projection orthogonality separates optimal from heuristic gains", [](Criterion& c) {
        const TeamProblem p = testutil::two_player_benchmark();
        const double at_optimum = radner::orthogonality_residual(p, radner::solve_unconstrained(p));
        c.expect(at_optimum < 1e-9, "residual at the optimum: " + std::to_string(at_optimum));
        const double at_heuristic = radner::orthogonality_residual(p, radner::estimate_then_act(p));
        c.expect(at_heuristic > 1e-3, "residual at estimate-then-act: " + std::to_string(at_heuristic));
    });

    run_criterion(9, "projection oracle agrees with the team solve", [](Criterion& c) {
        testutil::Rand rng(6161);
        for (int t = 0; t < 10; ++t) {
            const std::size_t n = 2 + rng.next_u64() % 5;       // n <= 6
            const std::size_t players = 1 + rng.next_u64() % 3; // N <= 3
            const TeamProblem p = testutil::random_team_problem(rng, n, players);
            const Mat a = assemble_gain(oracle::projection_oracle(p), p.info);
            const Mat b = assemble_gain(radner::solve_unconstrained(p), p.info);
            const double diff = frob_norm(a - b);
            if (!(diff <= 1e-8 * std::max(1.0, frob_norm(b))))
                c.expect(false, "instance " + std::to_string(t) + ": gain discrepancy " +
                                    std::to_string(diff));
        }
    });

    run_criterion(10, "trace-constrained maximization equals the top eigenvalue", [](Criterion& c) {
        testutil::Rand rng(909);
        for (int t = 0; t < 20; ++t) {
            const std::size_t d = 2 + rng.next_u64() % 4;
            const Mat m = testutil::random_sym(rng, d);
            const auto [lhs, rhs] = minimax::stochastic_equivalence_check(m);
            if (!(std::abs(lhs - rhs) <= 1e-7 * (1.0 + std::abs(rhs))))
                c.expect(false, "instance " + std::to_string(t) + ": " + std::to_string(lhs) + " vs " +
                                    std::to_string(rhs));
        }
    });

    run_criterion(11, "SDP engine certificates", [](Criterion& c) {
        testutil::Rand rng(77);
        for (int t = 0; t < 8; ++t) {
            const Mat a = testutil::random_sym(rng, 3 + rng.next_u64() % 3);
            sdp::Problem p;
            p.num_vars = 1;
            p.cost = {1.0};
            p.lmi_blocks.push_back({a, -Mat::identity(a.rows())});
            const auto s = sdp::solve(p);
            c.expect(s.status == sdp::Status::optimal, "status not optimal");
            const double target = lambda_max_sym(a);
            c.expect_close(s.z[0], target, 1e-7 * (1.0 + std::abs(target)), "top eigenvalue");
            c.expect(std::abs(s.residuals.duality_gap) <= 1e-8 * (1.0 + std::abs(s.primal_objective)) * 10.0,
                     "duality gap");
            for (const auto& it : s.trace) {
                if (!it.dual_bound_valid) continue;
                const double scale = 1.0 + std::abs(it.primal_objective) + std::abs(it.dual_objective);
                if (!(it.dual_objective <= it.primal_objective + 1e-9 * scale))
                    c.expect(false, "weak duality violated on an exposed iterate");
            }
            c.expect(sdp::verify(p, s).pass(), "verify() rejected an optimal output");
        }
    });

    std::printf("%s: %d criterion failure(s)\n", g_failures == 0 ? "ACCEPTANCE PASS" : "ACCEPTANCE FAIL",
                g_failures);
    return g_failures;
}
