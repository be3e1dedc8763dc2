// teamlq command line tool: solve team decision problems from JSON files,
// verify reports against independent recomputation, and dump the underlying
// semidefinite programs for external cross-checking.
//
// Exit codes: 0 solved/verified, 1 input error, 2 infeasible,
//             3 solver non-convergence or bracket failure, 4 verification mismatch.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "teamlq/teamlq.hpp"

using namespace teamlq;
using io::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitNoConvergence = 3;
constexpr int kExitVerifyMismatch = 4;

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

int load_problem_checked(const std::string& path, TeamProblem& out, std::string& digest) {
    try {
        out = io::load_problem(path, &digest);
    } catch (const std::exception& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    }
    const auto diagnostics = validate(out);
    if (!diagnostics.empty()) {
        for (const auto& d : diagnostics) std::cerr << "input error: " << d.field << ": " << d.message << "\n";
        return kExitInput;
    }
    return kExitOk;
}

json base_report(const std::string& solver, const std::string& digest, const TeamProblem& p) {
    json rep;
    rep["tool"] = io::kToolName;
    rep["tool_version"] = io::kToolVersion;
    rep["solver"] = solver;
    rep["input_digest"] = digest;
    rep["mode"] = p.mode == Mode::gaussian ? "gaussian" : "minimax";
    return rep;
}

void write_report(const json& rep, const std::string& out_path) {
    io::write_file_atomic(out_path, rep.dump(2) + "\n");
}

std::vector<QuadraticForm> minimax_constraint_blocks(const TeamProblem& p) {
    std::vector<QuadraticForm> blocks;
    for (const auto& c : p.constraints) blocks.push_back(minimax::shift_state_block(c.form, c.bound));
    return blocks;
}

int run_gaussian_solve(const TeamProblem& p, const std::string& digest, const std::string& out_path,
                       const sdp::Settings& settings) {
    const auto t0 = std::chrono::steady_clock::now();
    if (p.constraints.empty()) {
        DecisionGain gain;
        try {
            gain = radner::solve_unconstrained(p);
        } catch (const std::exception& e) {
            std::cerr << "solver error: " << e.what() << "\n";
            return kExitNoConvergence;
        }
        json rep = base_report("radner", digest, p);
        rep["status"] = "optimal";
        rep["gain"] = io::gain_to_json(gain);
        rep["objective_value"] = radner::expected_cost(p, gain);
        rep["residuals"] = {{"stationarity", radner::orthogonality_residual(p, gain)}};
        rep["tolerances"] = {{"objective_value", 1e-6}, {"stationarity", 1e-6}, {"mc_sigma", 4.0}};
        rep["timing_ms"] = elapsed_ms(t0);
        write_report(rep, out_path);
        std::cout << "radner: optimal, objective " << rep["objective_value"].get<double>() << ", report "
                  << out_path << "\n";
        return kExitOk;
    }

    const auto sol = constrained::solve(p, settings);
    json rep = base_report("constrained-sdp", digest, p);
    rep["status"] = sdp::to_string(sol.status);
    if (sol.status == sdp::Status::optimal || sol.status == sdp::Status::max_iter) {
        rep["gain"] = io::gain_to_json(sol.gain);
        rep["objective_value"] = sol.objective_value;
        rep["constraint_values"] = sol.constraint_values;
        rep["multipliers"] = sol.multipliers;
        double comp = 0.0;
        for (std::size_t j = 0; j < sol.multipliers.size(); ++j)
            comp = std::max(comp, std::abs(sol.multipliers[j] *
                                           (sol.constraint_values[j] - p.constraints[j].bound)));
        rep["residuals"] = {{"complementarity", comp},
                            {"sdp_gap", sol.sdp_solution.residuals.duality_gap},
                            {"sdp_primal_infeasibility", sol.sdp_solution.residuals.primal_infeasibility}};
        rep["r_regularization"] = sol.r_regularization;
        rep["tolerances"] = {{"objective_value", 1e-5},
                             {"constraint_slack", 1e-6},
                             {"complementarity", 1e-5},
                             {"mc_sigma", 4.0}};
    }
    rep["timing_ms"] = elapsed_ms(t0);
    write_report(rep, out_path);

    switch (sol.status) {
        case sdp::Status::optimal:
            std::cout << "constrained-sdp: optimal, objective " << sol.objective_value << ", report "
                      << out_path << "\n";
            return kExitOk;
        case sdp::Status::infeasible:
            std::cerr << "constrained-sdp: problem certified infeasible\n";
            return kExitInfeasible;
        default:
            std::cerr << "constrained-sdp: no convergence (" << sdp::to_string(sol.status) << ")\n";
            return kExitNoConvergence;
    }
}

int run_minimax_solve(const TeamProblem& p, const std::string& digest, const std::string& out_path,
                      double tol) {
    const auto t0 = std::chrono::steady_clock::now();
    minimax::Solution sol;
    try {
        sol = minimax::value(p.objective, minimax_constraint_blocks(p), p.info, tol);
    } catch (const std::exception& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return kExitNoConvergence;
    }
    json rep = base_report("minimax-lmi", digest, p);
    rep["status"] = "optimal";
    rep["decision_class"] = "optimal linear decision";  // nonlinear decisions are not searched
    rep["gamma_star"] = sol.game_value;
    rep["gain"] = io::gain_to_json(sol.gain);
    rep["certificate_margin"] = sol.certificate_margin;
    rep["tol"] = tol;
    json trace = json::array();
    for (const auto& [gamma, feasible] : sol.bisection_trace) trace.push_back(json::array({gamma, feasible}));
    rep["bisection_trace"] = std::move(trace);
    rep["tolerances"] = {{"certificate", 1e-7}};
    rep["timing_ms"] = elapsed_ms(t0);
    write_report(rep, out_path);
    std::cout << "minimax-lmi: value " << sol.game_value << ", report " << out_path << "\n";
    return kExitOk;
}

struct CheckList {
    std::vector<std::string> failed;
    void check(const std::string& name, bool ok, double value, double tol) {
        std::printf("%s %s: value %.9g tolerance %.3g\n", ok ? "[ok]" : "[FAIL]", name.c_str(), value, tol);
        if (!ok) failed.push_back(name);
    }
};

int run_verify(const std::string& problem_path, const std::string& report_path, std::size_t samples,
               std::uint64_t seed) {
    TeamProblem p;
    std::string digest;
    if (const int rc = load_problem_checked(problem_path, p, digest); rc != kExitOk) return rc;

    json rep;
    try {
        rep = json::parse(io::read_file(report_path));
    } catch (const std::exception& e) {
        std::cerr << "input error: report: " << e.what() << "\n";
        return kExitInput;
    }

    CheckList checks;
    try {
        const std::string solver = rep.at("solver").get<std::string>();
        checks.check("input-digest", rep.at("input_digest").get<std::string>() == digest, 0.0, 0.0);

        const json tolerances = rep.value("tolerances", json::object());
        const double mc_sigma = tolerances.value("mc_sigma", 4.0);

        if (solver == "radner" || solver == "constrained-sdp") {
            const DecisionGain gain = io::gain_from_json(rep.at("gain"), "/gain");
            check_gain_shapes(gain, p.info);
            const double objective = constrained::constraint_value(p, gain, 0);
            const double reported = rep.at("objective_value").get<double>();
            const double scale = 1.0 + std::abs(objective);
            const double tol_obj = tolerances.value("objective_value", 1e-5);
            checks.check("objective-value", std::abs(objective - reported) <= tol_obj * scale,
                         std::abs(objective - reported), tol_obj * scale);

            if (solver == "radner") {
                const double stat = radner::orthogonality_residual(p, gain);
                const double tol_stat = tolerances.value("stationarity", 1e-6);
                checks.check("stationarity", stat <= tol_stat, stat, tol_stat);
            } else {
                const auto multipliers = rep.at("multipliers").get<std::vector<double>>();
                const auto values = rep.at("constraint_values").get<std::vector<double>>();
                const double tol_slack = tolerances.value("constraint_slack", 1e-6);
                const double tol_comp = tolerances.value("complementarity", 1e-5);
                for (std::size_t j = 0; j < p.constraints.size(); ++j) {
                    const double vj = constrained::constraint_value(p, gain, j + 1);
                    const std::string tag = "constraint-" + std::to_string(j + 1);
                    checks.check(tag + "-recompute", std::abs(vj - values.at(j)) <= tol_slack * (1.0 + std::abs(vj)),
                                 std::abs(vj - values.at(j)), tol_slack);
                    checks.check(tag + "-bound", vj <= p.constraints[j].bound + tol_slack * (1.0 + std::abs(vj)),
                                 vj - p.constraints[j].bound, tol_slack);
                    checks.check(tag + "-multiplier", multipliers.at(j) >= -1e-9, multipliers.at(j), 1e-9);
                    const double comp = std::abs(multipliers.at(j) * (vj - p.constraints[j].bound));
                    checks.check(tag + "-complementarity", comp <= tol_comp * scale, comp, tol_comp * scale);
                }
            }

            // Monte Carlo recomputation of the objective expectation
            const auto est =
                oracle::mc_expected_cost(p, oracle::linear_policy(gain), p.objective, samples, seed);
            checks.check("monte-carlo-objective",
                         std::abs(est.mean - objective) <= mc_sigma * est.std_error + 1e-9,
                         std::abs(est.mean - objective), mc_sigma * est.std_error + 1e-9);
            for (std::size_t j = 0; j < p.constraints.size(); ++j) {
                const auto cest = oracle::mc_expected_cost(p, oracle::linear_policy(gain),
                                                           p.constraints[j].form, samples, seed + 1 + j);
                const double vj = constrained::constraint_value(p, gain, j + 1);
                checks.check("monte-carlo-constraint-" + std::to_string(j + 1),
                             std::abs(cest.mean - vj) <= mc_sigma * cest.std_error + 1e-9,
                             std::abs(cest.mean - vj), mc_sigma * cest.std_error + 1e-9);
            }
        } else if (solver == "minimax-lmi") {
            const DecisionGain gain = io::gain_from_json(rep.at("gain"), "/gain");
            check_gain_shapes(gain, p.info);
            const double gamma_star = rep.at("gamma_star").get<double>();
            const double tol = rep.value("tol", 1e-6);
            const double tol_cert = tolerances.value("certificate", 1e-7);
            const double scale = 1.0 + std::abs(gamma_star);

            // the reported gain must satisfy every worst-case block at gamma* + 2 tol
            double worst = oracle::congruence_max_eig(
                minimax::shift_state_block(p.objective, gamma_star + 2.0 * tol), gain, p.info);
            for (const auto& blockform : minimax_constraint_blocks(p))
                worst = std::max(worst, oracle::congruence_max_eig(blockform, gain, p.info));
            checks.check("certificate", worst <= tol_cert * scale, worst, tol_cert * scale);

            bool monotone = true;
            for (const json& a : rep.at("bisection_trace"))
                for (const json& b : rep.at("bisection_trace"))
                    if (a.at(1).get<bool>() && !b.at(1).get<bool>() &&
                        a.at(0).get<double>() < b.at(0).get<double>())
                        monotone = false;
            checks.check("trace-monotone", monotone, monotone ? 0.0 : 1.0, 0.0);
            checks.check("certificate-margin", rep.at("certificate_margin").get<double>() > -1e-8,
                         rep.at("certificate_margin").get<double>(), 1e-8);
        } else {
            std::cerr << "input error: unknown solver '" << solver << "' in report\n";
            return kExitInput;
        }
    } catch (const json::exception& e) {
        std::cerr << "input error: report: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    }

    if (!checks.failed.empty()) {
        std::printf("verification failed: %zu check(s):", checks.failed.size());
        for (const auto& name : checks.failed) std::printf(" %s", name.c_str());
        std::printf("\n");
        return kExitVerifyMismatch;
    }
    std::printf("verification passed\n");
    return kExitOk;
}

int run_dump(const TeamProblem& p, double gamma, const std::string& out_path) {
    sdp::Problem sp;
    if (p.mode == Mode::gaussian) {
        sp = constrained::build_sdp(p).problem;
    } else {
        std::vector<QuadraticForm> forms;
        forms.push_back(minimax::shift_state_block(p.objective, gamma));
        for (const auto& f : minimax_constraint_blocks(p)) forms.push_back(f);
        sp = minimax::build_lmi(forms, p.info).problem;
    }
    if (out_path.empty()) {
        sdp::dump(sp, std::cout);
    } else {
        std::ostringstream ss;
        sdp::dump(sp, ss);
        io::write_file_atomic(out_path, ss.str());
    }
    return kExitOk;
}

std::uint64_t resolve_seed(bool seed_given, std::uint64_t seed_flag) {
    if (seed_given) return seed_flag;
    if (const char* env = std::getenv("TEAMLQ_SEED")) return std::strtoull(env, nullptr, 10);
    return 20240817ULL;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"team decision solver: Gaussian and worst-case linear-quadratic teams"};
    app.require_subcommand(1);

    std::string path, out_path = "report.json", report_path, mode_override;
    double tol = 1e-6;
    std::size_t max_iter = 200;
    std::size_t samples = 100000;
    std::uint64_t seed_flag = 0;
    bool seed_given = false;
    double dump_gamma = 0.0;

    auto* solve_cmd = app.add_subcommand("solve", "solve a problem file and write a report");
    solve_cmd->add_option("problem", path, "problem JSON file")->required();
    solve_cmd->add_option("--out", out_path, "report output path (default report.json)");
    solve_cmd->add_option("--mode", mode_override, "override the file's mode (gaussian|minimax)");
    solve_cmd->add_option("--tol", tol, "solver tolerance (SDP gap / bisection width)");
    solve_cmd->add_option("--max-iter", max_iter, "interior-point iteration cap");

    auto* minimax_cmd = app.add_subcommand("minimax", "worst-case solve of a minimax-mode file");
    minimax_cmd->add_option("problem", path, "problem JSON file")->required();
    minimax_cmd->add_option("--out", out_path, "report output path (default report.json)");
    minimax_cmd->add_option("--tol", tol, "bisection tolerance on the game value");

    auto* verify_cmd = app.add_subcommand("verify", "re-check a report against the problem file");
    verify_cmd->add_option("problem", path, "problem JSON file")->required();
    verify_cmd->add_option("report", report_path, "report JSON file")->required();
    verify_cmd->add_option("--samples", samples, "Monte Carlo sample count");
    verify_cmd->add_option("--seed", seed_flag, "Monte Carlo seed (overrides TEAMLQ_SEED)")
        ->each([&](const std::string&) { seed_given = true; });

    auto* dump_cmd = app.add_subcommand("dump-sdp", "dump the assembled SDP as labeled text");
    dump_cmd->add_option("problem", path, "problem JSON file")->required();
    dump_cmd->add_option("--gamma", dump_gamma, "objective shift for minimax-mode dumps");
    std::string dump_out;
    dump_cmd->add_option("--out", dump_out, "output path (default stdout)");

    CLI11_PARSE(app, argc, argv);

    TeamProblem problem;
    std::string digest;
    if (const int rc = load_problem_checked(path, problem, digest); rc != kExitOk) return rc;

    if (solve_cmd->parsed()) {
        if (!mode_override.empty()) {
            if (mode_override == "gaussian") {
                problem.mode = Mode::gaussian;
            } else if (mode_override == "minimax") {
                problem.mode = Mode::minimax;
                problem.stats.reset();
            } else {
                std::cerr << "input error: --mode must be gaussian or minimax\n";
                return kExitInput;
            }
            const auto diagnostics = validate(problem);
            if (!diagnostics.empty()) {
                for (const auto& d : diagnostics)
                    std::cerr << "input error: " << d.field << ": " << d.message << "\n";
                return kExitInput;
            }
        }
        if (problem.mode == Mode::minimax) return run_minimax_solve(problem, digest, out_path, tol);
        sdp::Settings settings = constrained::default_settings();
        settings.max_iter = max_iter;
        settings.gap_tol = std::min(settings.gap_tol, tol);
        return run_gaussian_solve(problem, digest, out_path, settings);
    }
    if (minimax_cmd->parsed()) {
        if (problem.mode != Mode::minimax) {
            std::cerr << "input error: minimax command requires a minimax-mode file\n";
            return kExitInput;
        }
        return run_minimax_solve(problem, digest, out_path, tol);
    }
    if (verify_cmd->parsed()) return run_verify(path, report_path, samples, resolve_seed(seed_given, seed_flag));
    if (dump_cmd->parsed()) return run_dump(problem, dump_gamma, dump_out);
    return kExitInput;
}
