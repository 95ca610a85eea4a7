#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "nfl/backreach.hpp"
#include "nfl/experiments.hpp"
#include "nfl/oracle.hpp"
#include "nfl/report.hpp"

namespace {

constexpr int kExitCertified = 0;
constexpr int kExitNotCertified = 2;
constexpr int kExitError = 1;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

Eigen::VectorXi parse_counts(const std::string& text) {
    std::vector<int> vals;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) vals.push_back(std::stoi(cell));
    Eigen::VectorXi r(static_cast<long>(vals.size()));
    for (size_t i = 0; i < vals.size(); ++i) r[static_cast<long>(i)] = vals[i];
    return r;
}

nfl::HyperRectangle load_rect(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open set file: " + path);
    nlohmann::json j;
    in >> j;
    return j.get<nfl::HyperRectangle>();
}

struct RunArgs {
    std::string scenario;
    std::string system_path, policy_path, target_path, init_path;
    std::string algorithm = "breach";
    std::string policies_dir = "policies";
    std::string output = "report.json";
    int tau = 0;           // 0 = scenario default
    std::string r_text;    // empty = scenario default
    long samples = 20000;
    uint64_t seed = 0;
    bool clip_control_bounds = false;
    bool single_step_refinement = false;
    bool bench = false;
};

int cmd_run(const RunArgs& args) {
    const bool scenario_mode = !args.scenario.empty();
    const bool path_mode = !args.system_path.empty() || !args.policy_path.empty() ||
                           !args.target_path.empty() || !args.init_path.empty();
    if (scenario_mode == path_mode) {
        std::cerr << "error: provide exactly one of --scenario or the explicit "
                     "--system/--policy/--target/--init paths\n";
        return kExitError;
    }

    nfl::LinearSystem sys;
    nfl::NeuralNetwork nn;
    nfl::HyperRectangle target, init;
    int tau = args.tau;
    Eigen::VectorXi r;
    std::string policy_path;

    if (scenario_mode) {
        nfl::Scenario sc = nfl::find_scenario(args.scenario, args.policies_dir);
        nfl::TrainedPolicy policy = nfl::ensure_policy(sc.policy_kind, sc.policy_path);
        std::cout << "policy " << sc.policy_path << " held-out MSE:";
        for (long k = 0; k < policy.holdout_mse.size(); ++k) std::cout << ' ' << policy.holdout_mse[k];
        std::cout << (policy.gate_passed ? " (gate passed)" : " (GATE FAILED)") << "\n";
        if (!policy.gate_passed) {
            std::cerr << "error: policy failed its held-out MSE gate; run is invalid\n";
            return kExitError;
        }
        sys = sc.system;
        nn = policy.network;
        target = sc.target;
        init = sc.init;
        if (tau == 0) tau = sc.tau;
        r = args.r_text.empty() ? sc.r : parse_counts(args.r_text);
        policy_path = sc.policy_path;
    } else {
        if (args.system_path.empty() || args.policy_path.empty() || args.target_path.empty() ||
            args.init_path.empty()) {
            std::cerr << "error: explicit mode needs --system, --policy, --target and --init\n";
            return kExitError;
        }
        sys = nfl::load_system(args.system_path);
        nn = nfl::load_network(args.policy_path);
        target = load_rect(args.target_path);
        init = load_rect(args.init_path);
        if (tau == 0) tau = 1;
        r = args.r_text.empty() ? Eigen::VectorXi::Ones(sys.nx()) : parse_counts(args.r_text);
        policy_path = args.policy_path;
    }

    nfl::BackreachOptions opts;
    opts.r = r;
    opts.clip_control_bounds = args.clip_control_bounds;
    opts.single_step_refinement = args.single_step_refinement;

    nfl::RunReport report;
    report.version = NFL_VERSION;
    report.algorithm = args.algorithm;
    report.target = target;
    report.init = init;
    report.config = {{"scenario", args.scenario},
                     {"algorithm", args.algorithm},
                     {"policies_dir", args.policies_dir},
                     {"policy", policy_path},
                     {"tau", tau},
                     {"r", std::vector<int>(r.begin(), r.end())},
                     {"samples", args.samples},
                     {"seed", args.seed},
                     {"clip_control_bounds", args.clip_control_bounds},
                     {"single_step_refinement", args.single_step_refinement}};
    if (!scenario_mode) {
        report.config["system"] = args.system_path;
        report.config["target_path"] = args.target_path;
        report.config["init_path"] = args.init_path;
    }

    const int runs = args.bench ? 3 : 1;
    std::vector<double> times;
    for (int i = 0; i < runs; ++i) {
        const auto start = Clock::now();
        if (args.algorithm == "breach") {
            report.backward = nfl::breach_lp(sys, nn, target, tau, opts);
        } else if (args.algorithm == "rebreach") {
            report.backward = nfl::rebreach_lp(sys, nn, target, tau, opts);
        } else if (args.algorithm == "forward") {
            report.forward = nfl::reach_forward(sys, nn, init, tau, opts);
        } else {
            std::cerr << "error: unknown algorithm '" << args.algorithm << "'\n";
            return kExitError;
        }
        times.push_back(seconds_since(start));
    }
    std::sort(times.begin(), times.end());
    report.wall_clock_s = times[times.size() / 2];
    if (args.bench)
        std::cout << "wall-clock spread over " << runs << " runs: [" << times.front() << ", "
                  << times.back() << "] s\n";

    if (report.backward) {
        report.lp_solves = report.backward->lp_solves;
        report.backreach_lp_solves = report.backward->backreach_lp_solves;
        report.verdict = nfl::certify_safety(*report.backward, init);

        const auto region = nfl::default_sample_region(sys, target, tau);
        report.truth = nfl::mc_true_bp(sys, nn, target, tau, region, args.samples, args.seed);
        report.errors.assign(static_cast<size_t>(tau) + 1, std::nullopt);
        for (int t = 1; t <= tau; ++t) {
            const auto& truth_rect = report.truth->step_rects[static_cast<size_t>(t)];
            const auto& hull = report.backward->hulls[static_cast<size_t>(t)];
            if (truth_rect && hull && nfl::volume(*truth_rect) > 0.0) {
                report.errors[static_cast<size_t>(t)] =
                    nfl::approx_error(nfl::volume(*truth_rect), nfl::volume(*hull));
            }
        }

        std::cout << "step  hull-area     error-vs-truth\n";
        for (int t = 1; t <= tau; ++t) {
            const auto& hull = report.backward->hulls[static_cast<size_t>(t)];
            std::cout << "  " << t << "   ";
            if (hull) {
                std::cout << nfl::volume(*hull);
            } else {
                std::cout << "(empty)";
            }
            std::cout << "   ";
            if (report.errors[static_cast<size_t>(t)]) {
                std::cout << *report.errors[static_cast<size_t>(t)];
            } else {
                std::cout << "(undefined)";
            }
            std::cout << "\n";
        }
    } else if (report.forward) {
        report.lp_solves = report.forward->lp_solves;
        report.verdict = nfl::certify_safety_forward(*report.forward, target);
        std::cout << "step  forward-hull-area\n";
        for (size_t t = 1; t < report.forward->sets.size(); ++t) {
            const auto hull = nfl::bound_with_rectangle(report.forward->sets[t]);
            std::cout << "  " << t << "   ";
            if (hull) {
                std::cout << nfl::volume(*hull);
            } else {
                std::cout << "(empty)";
            }
            std::cout << "\n";
        }
    }

    nfl::write_report(report, args.output);
    std::filesystem::path csv = args.output;
    csv.replace_extension(".csv");
    nfl::write_csv(report, csv.string());

    std::cout << "lp_solves: " << report.lp_solves
              << " (backreach LPs tallied separately: " << report.backreach_lp_solves << ")\n";
    std::cout << "wall-clock: " << report.wall_clock_s << " s\n";
    std::cout << "report: " << args.output << " (+ " << csv.string() << ")\n";
    if (report.verdict.certified) {
        std::cout << "verdict: CERTIFIED SAFE\n";
        return kExitCertified;
    }
    std::cout << "verdict: NOT CERTIFIED (first unsafe step "
              << *report.verdict.first_unsafe_step << ")\n";
    return kExitNotCertified;
}

struct AuditArgs {
    std::string report_path;
    std::string policies_dir = "policies";
    long samples = 100000;
    uint64_t seed = 1;
};

int cmd_audit(const AuditArgs& args) {
    nfl::LoadedReport loaded = nfl::load_report(args.report_path);

    nfl::LinearSystem sys;
    nfl::NeuralNetwork nn;
    const std::string scenario = loaded.config.value("scenario", "");
    if (!scenario.empty()) {
        nfl::Scenario sc = nfl::find_scenario(scenario, args.policies_dir);
        sys = sc.system;
        nn = nfl::ensure_policy(sc.policy_kind, sc.policy_path).network;
    } else {
        sys = nfl::load_system(loaded.config.at("system").get<std::string>());
        nn = nfl::load_network(loaded.config.at("policy").get<std::string>());
    }

    nfl::AuditReport audit = nfl::soundness_audit(loaded.backward, sys, nn, loaded.target,
                                                  args.samples, args.seed);
    std::cout << "audited " << audit.n_samples << " samples (" << audit.checked
              << " reach the target within the horizon)\n";
    if (audit.violations == 0) {
        std::cout << "violations: 0\n";
        return kExitCertified;
    }
    std::cout << "violations: " << audit.violations << "\n";
    for (const auto& v : audit.examples) {
        std::cout << "  step " << v.step << " state [";
        for (long k = 0; k < v.state.size(); ++k) std::cout << (k ? ", " : "") << v.state[k];
        std::cout << "]\n";
    }
    return kExitNotCertified;
}

struct TrainArgs {
    std::string field = "eq19";
    std::string hidden;
    std::string out = "policy.json";
    int epochs = 0;
    int batch = 0;
    long n_samples = 0;
    double lr = 0.0;
    uint64_t seed = 0;
    bool have_seed = false;
};

int cmd_train(const TrainArgs& args) {
    nfl::PolicyKind kind;
    if (args.field == "eq19") {
        kind = nfl::PolicyKind::GroundRobot;
    } else if (args.field == "faulty") {
        kind = nfl::PolicyKind::GroundRobotFaulty;
    } else if (args.field == "lqr") {
        kind = nfl::PolicyKind::DoubleIntegratorLqr;
    } else {
        std::cerr << "error: unknown field '" << args.field << "' (eq19|faulty|lqr)\n";
        return kExitError;
    }

    nfl::PolicyRecipe recipe = nfl::policy_recipe(kind);
    if (!args.hidden.empty()) {
        recipe.hidden.clear();
        const Eigen::VectorXi h = parse_counts(args.hidden);
        for (long i = 0; i < h.size(); ++i) recipe.hidden.push_back(h[i]);
    }
    if (args.epochs > 0) recipe.epochs = args.epochs;
    if (args.batch > 0) recipe.batch = args.batch;
    if (args.n_samples > 0) recipe.n_samples = args.n_samples;
    if (args.lr > 0.0) recipe.learning_rate = args.lr;
    if (args.have_seed) recipe.seed = args.seed;

    nfl::TrainedPolicy policy = nfl::train_policy(kind, recipe);
    const auto parent = std::filesystem::path(args.out).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    nfl::save_network(policy.network, args.out);

    std::cout << "held-out MSE per output component:";
    for (long k = 0; k < policy.holdout_mse.size(); ++k) std::cout << ' ' << policy.holdout_mse[k];
    std::cout << "\ngate (< " << recipe.mse_gate << "): " << (policy.gate_passed ? "passed" : "FAILED")
              << "\npolicy written to " << args.out << "\n";
    return kExitCertified;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Backward reachability safety certification for neural feedback loops"};
    app.set_version_flag("--version", NFL_VERSION);
    app.require_subcommand(1);

    RunArgs run_args;
    CLI::App* run = app.add_subcommand("run", "run an analysis and write a report");
    run->add_option("--scenario", run_args.scenario, "benchmark scenario name");
    run->add_option("--system", run_args.system_path, "system JSON path");
    run->add_option("--policy", run_args.policy_path, "policy JSON path");
    run->add_option("--target", run_args.target_path, "target set JSON path");
    run->add_option("--init", run_args.init_path, "initial set JSON path");
    run->add_option("--algorithm", run_args.algorithm, "breach|rebreach|forward");
    run->add_option("--tau", run_args.tau, "time horizon (scenario default when omitted)");
    run->add_option("--r", run_args.r_text, "partition counts, e.g. 4,4");
    run->add_option("--samples", run_args.samples, "Monte-Carlo samples for the truth estimate");
    run->add_option("--seed", run_args.seed, "Monte-Carlo seed");
    run->add_option("--output", run_args.output, "report JSON path");
    run->add_option("--policies-dir", run_args.policies_dir, "directory for scenario policies");
    run->add_flag("--clip-control-bounds", run_args.clip_control_bounds,
                  "intersect relaxed control bounds with the control box");
    run->add_flag("--single-step-refinement", run_args.single_step_refinement,
                  "refinement chains one step only (ablation)");
    run->add_flag("--bench", run_args.bench, "run 3 times and report the median wall-clock");

    AuditArgs audit_args;
    CLI::App* audit = app.add_subcommand("audit", "re-run the soundness oracle on a report");
    audit->add_option("report", audit_args.report_path, "report JSON path")->required();
    audit->add_option("--samples", audit_args.samples, "rollout sample count");
    audit->add_option("--seed", audit_args.seed, "rollout seed");
    audit->add_option("--policies-dir", audit_args.policies_dir, "directory for scenario policies");

    TrainArgs train_args;
    CLI::App* train = app.add_subcommand("train", "train a benchmark policy");
    train->add_option("--field", train_args.field, "eq19|faulty|lqr");
    train->add_option("--hidden", train_args.hidden, "hidden widths, e.g. 10,10");
    train->add_option("--epochs", train_args.epochs, "training epochs");
    train->add_option("--batch", train_args.batch, "batch size");
    train->add_option("--n-samples", train_args.n_samples, "dataset size");
    train->add_option("--lr", train_args.lr, "learning rate");
    auto* seed_opt = train->add_option("--seed", train_args.seed, "training seed");
    train->add_option("--out", train_args.out, "output policy JSON path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(run_args);
        if (audit->parsed()) return cmd_audit(audit_args);
        if (train->parsed()) {
            train_args.have_seed = seed_opt->count() > 0;
            return cmd_train(train_args);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}
