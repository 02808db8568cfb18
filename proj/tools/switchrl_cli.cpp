// Command-line front end: exact and offline evaluation, switching costs,
// dataset generation, switch-optimal search, the actor-critic search, and
// the bundled verification suite.

#include "switchrl/config.hpp"
#include "switchrl/fixtures.hpp"
#include "switchrl/io.hpp"
#include "switchrl/nac.hpp"
#include "switchrl/net_value.hpp"
#include "switchrl/offline.hpp"
#include "switchrl/verify.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <sstream>

namespace {

using namespace switchrl;

struct GlobalOpts {
    std::string config_path;
    std::uint64_t seed = 0;
    std::string out_dir;
    bool quiet = false;

    ConfigFile config() const {
        return config_path.empty() ? ConfigFile{} : ConfigFile::load(config_path);
    }
    void ensure_out() const {
        if (!out_dir.empty()) std::filesystem::create_directories(out_dir);
    }
    std::string out_file(const std::string& name) const { return out_dir + "/" + name; }
    std::ostream& info() const {
        static std::ostringstream sink;
        if (quiet) {
            sink.str("");
            return sink;
        }
        return std::cout;
    }
};

void add_global_flags(CLI::App* cmd, GlobalOpts* g) {
    cmd->add_option("--config", g->config_path, "key=value configuration file");
    cmd->add_option("--seed", g->seed, "random seed");
    cmd->add_option("--out", g->out_dir, "output directory");
    cmd->add_flag("--quiet", g->quiet, "suppress console output");
}

std::string format_vector(const Vector& v) {
    std::ostringstream out;
    for (Eigen::Index i = 0; i < v.size(); ++i) out << (i ? " " : "") << fmt_g12(v(i));
    return out.str();
}

std::string format_matrix(const Matrix& m) {
    std::ostringstream out;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            out << (c ? " " : "") << fmt_g12(m(r, c));
        out << '\n';
    }
    return out.str();
}

void write_matrix_exact(std::ostream& out, const std::string& tag, const Matrix& m) {
    out << tag << ' ' << m.rows() << ' ' << m.cols() << '\n';
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            out << (c ? " " : "") << fmt_exact(m(r, c));
        out << '\n';
    }
}

int cmd_evaluate(const GlobalOpts& g, const std::string& mdp_path,
                 const std::string& policy_path, const std::string& old_policy_path,
                 int initial_state) {
    const FiniteMdp mdp = load_mdp(mdp_path);
    const TabularPolicy policy = load_policy(policy_path);
    const Valuation val = evaluate_exact(mdp, policy);
    g.info() << "V " << format_vector(val.v) << '\n';
    g.info() << "Q\n" << format_matrix(val.q);

    std::optional<NetValuation> net;
    if (!old_policy_path.empty()) {
        const TabularPolicy old_policy = load_policy(old_policy_path);
        const CostSpec spec =
            cost_spec_from_config(g.config(), mdp.n_states, mdp.n_actions);
        const SwitchProblem prob(mdp, old_policy, spec, initial_state);
        net = net_value_exact(prob, policy);
        g.info() << "cost " << fmt_g12(net->switch_cost) << '\n';
        g.info() << "V_N " << format_vector(net->v_net_all) << '\n';
        g.info() << "Q_N\n" << format_matrix(net->q_net);
    }

    if (!g.out_dir.empty()) {
        g.ensure_out();
        atomic_write_file(g.out_file("valuation.txt"), [&](std::ostream& out) {
            write_matrix_exact(out, "V", val.v);
            write_matrix_exact(out, "Q", val.q);
            if (net) {
                out << "cost " << fmt_exact(net->switch_cost) << '\n';
                write_matrix_exact(out, "V_N", net->v_net_all);
                write_matrix_exact(out, "Q_N", net->q_net);
            }
        });
    }
    return 0;
}

int cmd_cost(const GlobalOpts& g, const std::string& old_path,
             const std::string& new_path, int mc_states) {
    const TabularPolicy pi_o = load_policy(old_path);
    const TabularPolicy pi_n = load_policy(new_path);
    const CostSpec spec =
        cost_spec_from_config(g.config(), pi_o.n_states(), pi_o.n_actions());
    const double c = mc_states > 0
                         ? switching_cost(spec, pi_o, pi_n, mc_states, g.seed)
                         : switching_cost(spec, pi_o, pi_n);
    g.info() << fmt_g12(c) << '\n';
    if (!g.out_dir.empty()) {
        g.ensure_out();
        atomic_write_file(g.out_file("cost.txt"), [&](std::ostream& out) {
            out << fmt_exact(c) << '\n';
        });
    }
    return 0;
}

int cmd_gen_data(const GlobalOpts& g, const std::string& mdp_path,
                 const std::string& policy_path, int episodes) {
    const FiniteMdp mdp = load_mdp(mdp_path);
    const TabularPolicy behavior = load_policy(policy_path);
    const TransitionDataset data =
        generate_dataset(mdp, behavior, episodes, g.seed,
                         std::filesystem::path(policy_path).stem().string());
    g.ensure_out();
    const std::string path =
        g.out_dir.empty() ? "dataset.txt" : g.out_file("dataset.txt");
    save_dataset(path, data);
    g.info() << "wrote " << data.records.size() << " records to " << path << '\n';
    return 0;
}

SwitchProblem problem_from_files(const GlobalOpts& g, const std::string& mdp_path,
                                 const std::string& old_policy_path, int initial_state) {
    const FiniteMdp mdp = load_mdp(mdp_path);
    const TabularPolicy old_policy = load_policy(old_policy_path);
    const CostSpec spec = cost_spec_from_config(g.config(), mdp.n_states, mdp.n_actions);
    return SwitchProblem(mdp, old_policy, spec, initial_state);
}

int cmd_ope(const GlobalOpts& g, const std::string& mdp_path,
            const std::string& old_policy_path, const std::string& policy_path,
            const std::string& data_path, int initial_state) {
    const SwitchProblem prob = problem_from_files(g, mdp_path, old_policy_path,
                                                  initial_state);
    const TabularPolicy policy = load_policy(policy_path);
    const TransitionDataset data = load_dataset(data_path);
    const OpeConfig cfg = ope_config_from_config(g.config(), g.seed);
    const OfflineEvaluation eval = evaluate_offline(prob, policy, data, cfg);
    g.info() << "v_net_hat " << fmt_g12(eval.v_net_hat) << '\n';
    g.info() << "coverage " << fmt_g12(eval.coverage_fraction) << " ("
             << eval.covered_pairs << " pairs)\n";
    if (!g.out_dir.empty()) {
        g.ensure_out();
        atomic_write_file(g.out_file("ope_report.txt"), [&](std::ostream& out) {
            out << "v_net_hat=" << fmt_exact(eval.v_net_hat) << '\n';
            out << "coverage=" << fmt_exact(eval.coverage_fraction) << '\n';
            out << "covered_pairs=" << eval.covered_pairs << '\n';
        });
        atomic_write_file(g.out_file("loss_trace.txt"), [&](std::ostream& out) {
            out << format_loss_trace(eval.trace);
        });
    }
    return 0;
}

int cmd_search(const GlobalOpts& g, const std::string& mdp_path,
               const std::string& old_policy_path, int initial_state) {
    const SwitchProblem prob = problem_from_files(g, mdp_path, old_policy_path,
                                                  initial_state);
    const CandidateSet set = candidate_set_from_config(g.config());
    const SearchResult result = switch_optimal_search(prob, set);
    g.info() << format_ranking(result);
    g.info() << "best " << (result.kept_old ? "old" : "candidate") << " net "
             << fmt_g12(result.v_net) << '\n';
    if (!g.out_dir.empty()) {
        g.ensure_out();
        atomic_write_file(g.out_file("ranking.txt"), [&](std::ostream& out) {
            out << format_ranking(result);
        });
        save_policy(g.out_file("best.policy"), result.best);
    }
    return 0;
}

int cmd_nac(const GlobalOpts& g, const std::string& mdp_path,
            const std::string& old_policy_path, const std::string& data_path,
            int initial_state) {
    const SwitchProblem prob = problem_from_files(g, mdp_path, old_policy_path,
                                                  initial_state);
    const TransitionDataset data = load_dataset(data_path);
    const ConfigFile cfg = g.config();
    const std::vector<std::uint64_t> seeds = seed_list_from_config(cfg, g.seed);
    g.ensure_out();
    int switches = 0;
    for (const std::uint64_t seed : seeds) {
        NacConfig nac_cfg = nac_config_from_config(cfg, seed);
        const NacReport report = run_nac(prob, data, nac_cfg);
        switches += report.switch_flag ? 1 : 0;
        g.info() << "seed " << seed << ": chosen=" << report.chosen
                 << " v_old=" << fmt_g12(report.v_old)
                 << " v_new_net=" << fmt_g12(report.v_new_net)
                 << " epochs=" << report.epochs_run << '\n';
        if (!g.out_dir.empty())
            save_report(g.out_file("nac_report_seed" + std::to_string(seed) + ".txt"),
                        report);
    }
    g.info() << "switched in " << switches << "/" << seeds.size() << " runs\n";
    return 0;
}

int cmd_verify(const GlobalOpts& g, bool list_only, const std::string& fixture_dir) {
    if (list_only) {
        for (const std::string& name : verification_check_names())
            g.info() << name << '\n';
        return 0;
    }
    const VerificationInputs inputs = fixture_dir.empty()
                                          ? VerificationInputs::builtin()
                                          : VerificationInputs::from_directory(fixture_dir);
    const std::vector<CheckResult> results = run_verification_checks(inputs);
    int failures = 0;
    for (const CheckResult& r : results) {
        g.info() << (r.pass ? "[PASS] " : "[FAIL] ") << r.name;
        if (!r.pass) {
            g.info() << " -- " << r.detail;
            ++failures;
        }
        g.info() << '\n';
    }
    if (failures > 0) {
        g.info() << failures << " check(s) failed\n";
        return 1;
    }
    g.info() << "all " << results.size() << " checks passed\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Offline policy switching toolkit"};
    app.require_subcommand(1);

    GlobalOpts g;
    std::string mdp_path, policy_path, old_policy_path, data_path;
    std::string cost_old_path, cost_new_path;
    int initial_state = -1;
    int mc_states = 0;
    int episodes = 1;
    bool list_only = false;
    std::string fixture_dir;

    CLI::App* evaluate = app.add_subcommand("evaluate", "exact values and net values");
    add_global_flags(evaluate, &g);
    evaluate->add_option("--mdp", mdp_path, "MDP file")->required();
    evaluate->add_option("--policy", policy_path, "policy to evaluate")->required();
    evaluate->add_option("--old-policy", old_policy_path,
                         "incumbent policy (enables net values)");
    evaluate->add_option("--initial-state", initial_state, "decision state");

    CLI::App* cost = app.add_subcommand("cost", "switching cost between two policies");
    add_global_flags(cost, &g);
    cost->add_option("--old", cost_old_path, "incumbent policy")->required();
    cost->add_option("--new", cost_new_path, "candidate policy")->required();
    cost->add_option("--mc", mc_states, "Monte-Carlo state draws (0 = exact)");

    CLI::App* gen = app.add_subcommand("gen-data", "roll out a behavior policy");
    add_global_flags(gen, &g);
    gen->add_option("--mdp", mdp_path, "MDP file")->required();
    gen->add_option("--policy", policy_path, "behavior policy")->required();
    gen->add_option("--episodes", episodes, "episode count")->required();

    CLI::App* ope = app.add_subcommand("ope", "offline net value evaluation");
    add_global_flags(ope, &g);
    ope->add_option("--mdp", mdp_path, "MDP file")->required();
    ope->add_option("--old-policy", old_policy_path, "incumbent policy")->required();
    ope->add_option("--policy", policy_path, "policy to evaluate")->required();
    ope->add_option("--data", data_path, "dataset file")->required();
    ope->add_option("--initial-state", initial_state, "decision state");

    CLI::App* search = app.add_subcommand("search", "switch-optimal search");
    add_global_flags(search, &g);
    search->add_option("--mdp", mdp_path, "MDP file")->required();
    search->add_option("--old-policy", old_policy_path, "incumbent policy")->required();
    search->add_option("--initial-state", initial_state, "decision state");

    CLI::App* nac = app.add_subcommand("nac", "net actor-critic search");
    add_global_flags(nac, &g);
    nac->add_option("--mdp", mdp_path, "MDP file")->required();
    nac->add_option("--old-policy", old_policy_path, "incumbent policy")->required();
    nac->add_option("--data", data_path, "dataset file")->required();
    nac->add_option("--initial-state", initial_state, "decision state");

    CLI::App* verify = app.add_subcommand("verify-paper", "run the bundled checks");
    add_global_flags(verify, &g);
    verify->add_flag("--list", list_only, "print check names without executing");
    verify->add_option("--fixture-dir", fixture_dir, "override bundled fixtures");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (app.got_subcommand(evaluate))
            return cmd_evaluate(g, mdp_path, policy_path, old_policy_path, initial_state);
        if (app.got_subcommand(cost))
            return cmd_cost(g, cost_old_path, cost_new_path, mc_states);
        if (app.got_subcommand(gen))
            return cmd_gen_data(g, mdp_path, policy_path, episodes);
        if (app.got_subcommand(ope))
            return cmd_ope(g, mdp_path, old_policy_path, policy_path, data_path,
                           initial_state);
        if (app.got_subcommand(search))
            return cmd_search(g, mdp_path, old_policy_path, initial_state);
        if (app.got_subcommand(nac))
            return cmd_nac(g, mdp_path, old_policy_path, data_path, initial_state);
        if (app.got_subcommand(verify)) return cmd_verify(g, list_only, fixture_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 2;
}
