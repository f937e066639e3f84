// migplan: plan GPU-count-minimizing deployments of DNN services on
// MIG-partitionable GPUs, and plan/simulate zero-downtime transitions between
// deployments. All GPU behavior comes from profile tables; nothing here
// touches real hardware.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "migplan/bench.hpp"
#include "migplan/ga.hpp"
#include "migplan/io.hpp"
#include "migplan/mcts.hpp"
#include "migplan/transition_planner.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

using namespace migplan;

struct ManifestInfo {
    std::string command;
    json flags = json::object();
    std::vector<std::string> inputs;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
};

// Every output file gets a sibling <file>.manifest.json recording the command,
// flags, seeds, and input digests. Identical manifests and inputs mean
// identical outputs.
void write_manifest(const ManifestInfo& m, const std::string& output_path) {
    json inputs = json::object();
    for (const auto& p : m.inputs) {
        char digest[32];
        std::snprintf(digest, sizeof digest, "fnv1a64:%016llx",
                      static_cast<unsigned long long>(fnv1a64(read_file(p))));
        inputs[p] = digest;
    }
    double wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - m.start).count();
    json manifest{{"command", m.command},
                  {"flags", m.flags},
                  {"inputs", inputs},
                  {"tool_version", kVersion},
                  {"wall_ms", out_num(wall_ms)}};
    write_json_file(output_path + ".manifest.json", manifest);
}

PartitionRuleSet rules_from(const std::string& rules_path) {
    return rules_path.empty() ? PartitionRuleSet::defaults() : load_rules(rules_path);
}

json completion_json(const CompletionRates& comp) {
    json arr = json::array();
    for (double c : comp.values) arr.push_back(out_num(c));
    return arr;
}

int cmd_enumerate_partitions(const std::string& rules_path, const std::string& out_path) {
    auto parts = enumerate_maximal_partitions(rules_from(rules_path));
    json j = partitions_to_json(parts);
    if (out_path.empty())
        std::cout << j.dump(2) << "\n";
    else
        write_json_file(out_path, j);
    return 0;
}

struct OptimizeArgs {
    std::string mode = "fast";
    std::string slos, profiles, rules, out;
    uint64_t seed = 0;
    bool seed_set = false;
    int budget_iters = 200;
    int topk = 10;
    double time_budget = 60.0;
    int ga_rounds = 1 << 30;
    int population = 16;
    double erase_fraction = 0.10;
    int workers = 1;
    bool quiet = false;
};

int cmd_optimize(const OptimizeArgs& a, ManifestInfo& manifest) {
    ProfileStore profiles = load_profiles(a.profiles);
    std::vector<ServiceSpec> services = load_services(a.slos, profiles);
    PartitionRuleSet rules = rules_from(a.rules);

    if ((a.mode == "mcts" || a.mode == "full") && !a.seed_set)
        throw SchemaError("--seed is required for stochastic modes (mcts, full)");

    Deployment dep;
    if (a.mode == "fast") {
        PlanContext ctx = make_plan_context(services, profiles, rules);
        auto trace = [&](int iter, const Candidate& c, double s, const CompletionRates& comp) {
            if (a.quiet) return;
            json line{{"iter", iter},
                      {"score", out_num(s)},
                      {"config", deployment_to_json(Deployment{{DeployedGpu{"pick", c.config}}})["gpus"][0]
                                     ["instances"]},
                      {"completion", completion_json(comp)}};
            std::cout << line.dump() << "\n";
        };
        dep = make_deployment(fast_algo(zero_completion(services.size()), ctx, trace));
    } else if (a.mode == "mcts") {
        PlanContext ctx = make_plan_context(services, profiles, rules);
        MctsParams params;
        params.budget_iters = a.budget_iters;
        params.topk = a.topk;
        auto trace = [&](int iter, int depth, int estimate, int best) {
            if (a.quiet) return;
            json line{{"iter", iter}, {"depth", depth}, {"rollout_estimate", estimate}, {"best_len", best}};
            std::cout << line.dump() << "\n";
        };
        dep = make_deployment(mcts_solve(zero_completion(services.size()), ctx, params, a.seed, trace));
    } else if (a.mode == "full") {
        GaParams params;
        params.seed = a.seed;
        params.time_budget_s = a.time_budget;
        params.max_rounds = a.ga_rounds;
        params.population = a.population;
        params.erase_fraction = a.erase_fraction;
        params.workers = a.workers;
        params.slow.budget_iters = a.budget_iters;
        params.slow.topk = a.topk;
        auto log = [&](const GaRoundLog& r) {
            if (a.quiet) return;
            json line{{"round", r.round},
                      {"best_gpus", r.best_gpus},
                      {"best_slack", out_num(r.best_slack)},
                      {"improved", r.improved}};
            std::cout << line.dump() << "\n";
        };
        dep = two_phase(services, profiles, rules, params, log);
    } else {
        throw SchemaError("unknown mode '" + a.mode + "' (expected fast, mcts, or full)");
    }

    validate_deployment(dep, services, profiles, rules);
    write_json_file(a.out, deployment_to_json(dep));
    write_manifest(manifest, a.out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"MIG deployment planning toolkit"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    try {
        ManifestInfo manifest;

        // ---- enumerate-partitions
        auto* sc_enum = app.add_subcommand("enumerate-partitions", "Print the derived legal partition table");
        std::string enum_rules, enum_out;
        sc_enum->add_option("--rules", enum_rules, "Partition rules JSON (defaults to A100 rules)");
        sc_enum->add_option("-o,--output", enum_out, "Output file (stdout when omitted)");

        // ---- optimize
        OptimizeArgs oa;
        auto* sc_opt = app.add_subcommand("optimize", "Compute a GPU-minimizing deployment");
        sc_opt->add_option("--mode", oa.mode, "fast | mcts | full")->required();
        sc_opt->add_option("--slos", oa.slos, "SLO file")->required();
        sc_opt->add_option("--profiles", oa.profiles, "Profile file")->required();
        sc_opt->add_option("--rules", oa.rules, "Partition rules JSON");
        sc_opt->add_option("-o,--output", oa.out, "Deployment output file")->required();
        sc_opt->add_option("--seed", oa.seed, "RNG seed (required for mcts/full)")
            ->each([&](const std::string&) { oa.seed_set = true; });
        sc_opt->add_option("--budget-iters", oa.budget_iters, "MCTS iteration budget");
        sc_opt->add_option("--topk", oa.topk, "MCTS children per node");
        sc_opt->add_option("--time-budget", oa.time_budget, "GA time budget in seconds");
        sc_opt->add_option("--ga-rounds", oa.ga_rounds, "GA round cap");
        sc_opt->add_option("--population", oa.population, "GA population size");
        sc_opt->add_option("--erase-fraction", oa.erase_fraction, "GA crossover erase fraction");
        sc_opt->add_option("--workers", oa.workers, "Worker threads (1 = reference mode)");
        sc_opt->add_flag("--quiet", oa.quiet, "Suppress the per-iteration trace");

        // ---- baseline
        auto* sc_base = app.add_subcommand("baseline", "Static-partition baseline deployments");
        std::string base_kind, base_slos, base_profiles, base_out;
        sc_base->add_option("--kind", base_kind, "7of7 | 7x1 | mix")->required();
        sc_base->add_option("--slos", base_slos)->required();
        sc_base->add_option("--profiles", base_profiles)->required();
        sc_base->add_option("-o,--output", base_out)->required();

        // ---- lowerbound
        auto* sc_lb = app.add_subcommand("lowerbound", "GPU lower bound ignoring partition rules");
        std::string lb_slos, lb_profiles, lb_out;
        sc_lb->add_option("--slos", lb_slos)->required();
        sc_lb->add_option("--profiles", lb_profiles)->required();
        sc_lb->add_option("-o,--output", lb_out, "Output file (stdout when omitted)");

        // ---- gen-workload
        auto* sc_gen = app.add_subcommand("gen-workload", "Generate a random workload SLO file");
        std::string gen_dist = "lognormal", gen_profiles, gen_out;
        int gen_n = 24;
        double gen_mu = -1.0, gen_sigma = -1.0, gen_latency = 100.0;
        uint64_t gen_seed = 0;
        bool gen_seed_set = false;
        sc_gen->add_option("--dist", gen_dist, "normal | lognormal");
        sc_gen->add_option("--n", gen_n, "Number of services");
        sc_gen->add_option("--mu", gen_mu, "Distribution mean (log-space for lognormal)");
        sc_gen->add_option("--sigma", gen_sigma, "Distribution sigma");
        sc_gen->add_option("--latency-ms", gen_latency, "SLO latency ceiling");
        sc_gen->add_option("--seed", gen_seed)->each([&](const std::string&) { gen_seed_set = true; });
        sc_gen->add_option("--profiles", gen_profiles)->required();
        sc_gen->add_option("-o,--output", gen_out)->required();

        // ---- transition
        auto* sc_tr = app.add_subcommand("transition", "Plan a zero-downtime deployment transition");
        std::string tr_from, tr_to, tr_old_slos, tr_new_slos, tr_profiles, tr_rules, tr_out;
        int tr_extra = 0, tr_gpm = 8;
        sc_tr->add_option("--from", tr_from, "Current deployment")->required();
        sc_tr->add_option("--to", tr_to, "Target deployment")->required();
        sc_tr->add_option("--old-slos", tr_old_slos)->required();
        sc_tr->add_option("--new-slos", tr_new_slos)->required();
        sc_tr->add_option("--profiles", tr_profiles)->required();
        sc_tr->add_option("--rules", tr_rules);
        sc_tr->add_option("--extra-gpus", tr_extra, "Extra GPU budget");
        sc_tr->add_option("--gpus-per-machine", tr_gpm);
        sc_tr->add_option("-o,--output", tr_out, "Plan output file")->required();

        // ---- simulate
        auto* sc_sim = app.add_subcommand("simulate", "Execute a transition plan on a simulated cluster");
        std::string sim_state, sim_plan, sim_costs, sim_old, sim_new, sim_profiles, sim_rules, sim_out;
        int sim_gpm = 8;
        sc_sim->add_option("--state", sim_state, "Starting cluster deployment")->required();
        sc_sim->add_option("--plan", sim_plan)->required();
        sc_sim->add_option("--costs", sim_costs, "Action cost model JSON");
        sc_sim->add_option("--old-slos", sim_old)->required();
        sc_sim->add_option("--new-slos", sim_new)->required();
        sc_sim->add_option("--profiles", sim_profiles)->required();
        sc_sim->add_option("--rules", sim_rules);
        sc_sim->add_option("--gpus-per-machine", sim_gpm);
        sc_sim->add_option("-o,--output", sim_out, "Report output file (stdout when omitted)");

        // ---- oracle
        auto* sc_or = app.add_subcommand("oracle", "Brute-force minimum-GPU deployment (small instances)");
        std::string or_slos, or_profiles, or_rules, or_out;
        int or_cap = 3;
        sc_or->add_option("--slos", or_slos)->required();
        sc_or->add_option("--profiles", or_profiles)->required();
        sc_or->add_option("--rules", or_rules);
        sc_or->add_option("--cap", or_cap, "Maximum GPUs to search");
        sc_or->add_option("-o,--output", or_out)->required();

        // ---- report
        auto* sc_rep = app.add_subcommand("report", "Normalized cost table");
        std::string rep_counts, rep_prices, rep_out, rep_csv;
        sc_rep->add_option("--counts", rep_counts, "GPU counts JSON")->required();
        sc_rep->add_option("--prices", rep_prices, "Prices JSON")->required();
        sc_rep->add_option("-o,--output", rep_out)->required();
        sc_rep->add_option("--csv", rep_csv, "Also write a CSV table");

        try {
            app.parse(argc, argv);
        } catch (const CLI::ParseError& e) {
            if (e.get_exit_code() == 0) return 0;  // --help / --version
            std::cerr << e.what() << "\n";
            return 2;
        }

        auto record_flag = [&](CLI::App* sc) {
            manifest.command = sc->get_name();
            for (const auto* opt : sc->get_options()) {
                if (opt->count() == 0) continue;
                auto results = opt->results();
                manifest.flags[opt->get_name()] = results.size() == 1 ? json(results[0]) : json(results);
            }
        };

        if (sc_enum->parsed()) {
            record_flag(sc_enum);
            if (!enum_rules.empty()) manifest.inputs.push_back(enum_rules);
            int rc = cmd_enumerate_partitions(enum_rules, enum_out);
            if (!enum_out.empty()) write_manifest(manifest, enum_out);
            return rc;
        }
        if (sc_opt->parsed()) {
            record_flag(sc_opt);
            manifest.inputs = {oa.slos, oa.profiles};
            if (!oa.rules.empty()) manifest.inputs.push_back(oa.rules);
            return cmd_optimize(oa, manifest);
        }
        if (sc_base->parsed()) {
            record_flag(sc_base);
            manifest.inputs = {base_slos, base_profiles};
            ProfileStore profiles = load_profiles(base_profiles);
            std::vector<ServiceSpec> services = load_services(base_slos, profiles);
            BaselineKind kind;
            if (base_kind == "7of7")
                kind = BaselineKind::WholeGpu;
            else if (base_kind == "7x1")
                kind = BaselineKind::SevenSlices;
            else if (base_kind == "mix")
                kind = BaselineKind::Mix421;
            else
                throw SchemaError("unknown baseline kind '" + base_kind + "' (expected 7of7, 7x1, or mix)");
            Deployment dep = baseline(kind, services, profiles);
            write_json_file(base_out, deployment_to_json(dep));
            write_manifest(manifest, base_out);
            return 0;
        }
        if (sc_lb->parsed()) {
            record_flag(sc_lb);
            manifest.inputs = {lb_slos, lb_profiles};
            ProfileStore profiles = load_profiles(lb_profiles);
            std::vector<ServiceSpec> services = load_services(lb_slos, profiles);
            json j{{"lower_bound", lower_bound(services, profiles)}};
            if (lb_out.empty()) {
                std::cout << j.dump(2) << "\n";
            } else {
                write_json_file(lb_out, j);
                write_manifest(manifest, lb_out);
            }
            return 0;
        }
        if (sc_gen->parsed()) {
            record_flag(sc_gen);
            manifest.inputs = {gen_profiles};
            if (!gen_seed_set) throw SchemaError("--seed is required for gen-workload");
            Distribution dist;
            if (gen_dist == "normal")
                dist = Distribution::Normal;
            else if (gen_dist == "lognormal")
                dist = Distribution::Lognormal;
            else
                throw SchemaError("unknown distribution '" + gen_dist + "'");
            if (gen_mu < 0.0) gen_mu = dist == Distribution::Normal ? 5000.0 : 8.0;
            if (gen_sigma < 0.0) gen_sigma = dist == Distribution::Normal ? 2000.0 : 0.6;
            ProfileStore profiles = load_profiles(gen_profiles);
            WorkloadSpec w = gen_workload(gen_n, dist, gen_mu, gen_sigma, gen_latency, gen_seed, profiles);
            write_json_file(gen_out, services_to_json(w.services));
            write_manifest(manifest, gen_out);
            return 0;
        }
        if (sc_tr->parsed()) {
            record_flag(sc_tr);
            manifest.inputs = {tr_from, tr_to, tr_old_slos, tr_new_slos, tr_profiles};
            if (!tr_rules.empty()) manifest.inputs.push_back(tr_rules);
            ProfileStore profiles = load_profiles(tr_profiles);
            std::vector<ServiceSpec> old_slos = load_services(tr_old_slos, profiles);
            std::vector<ServiceSpec> new_slos = load_services(tr_new_slos, profiles);
            PartitionRuleSet rules = rules_from(tr_rules);
            Deployment from = load_deployment(tr_from);
            Deployment to = load_deployment(tr_to);
            TransitionPlan plan = plan_transition(from, to, old_slos, new_slos, profiles, rules, tr_extra,
                                                  Topology{tr_gpm});
            write_json_file(tr_out, plan_to_json(plan));
            write_manifest(manifest, tr_out);
            return 0;
        }
        if (sc_sim->parsed()) {
            record_flag(sc_sim);
            manifest.inputs = {sim_state, sim_plan, sim_old, sim_new, sim_profiles};
            if (!sim_costs.empty()) manifest.inputs.push_back(sim_costs);
            if (!sim_rules.empty()) manifest.inputs.push_back(sim_rules);
            ProfileStore profiles = load_profiles(sim_profiles);
            std::vector<ServiceSpec> old_slos = load_services(sim_old, profiles);
            std::vector<ServiceSpec> new_slos = load_services(sim_new, profiles);
            PartitionRuleSet rules = rules_from(sim_rules);
            ActionCostModel costs = sim_costs.empty() ? ActionCostModel{} : load_costs(sim_costs);
            ClusterState state = cluster_from_deployment(load_deployment(sim_state), sim_gpm);
            TransitionGuard guard = TransitionGuard::from_slos(old_slos, new_slos);
            TransitionPlan plan = load_plan(sim_plan);
            SimulationReport report = run_plan(state, plan, costs, guard, profiles, rules);
            json j = report_to_json(report);
            if (sim_out.empty()) {
                std::cout << j.dump(2) << "\n";
            } else {
                write_json_file(sim_out, j);
                write_manifest(manifest, sim_out);
            }
            return report.safe ? 0 : 1;
        }
        if (sc_or->parsed()) {
            record_flag(sc_or);
            manifest.inputs = {or_slos, or_profiles};
            if (!or_rules.empty()) manifest.inputs.push_back(or_rules);
            ProfileStore profiles = load_profiles(or_profiles);
            std::vector<ServiceSpec> services = load_services(or_slos, profiles);
            PartitionRuleSet rules = rules_from(or_rules);
            auto dep = brute_force_optimum(services, profiles, rules, or_cap);
            if (!dep) {
                std::cerr << "no deployment within " << or_cap << " GPUs\n";
                return 1;
            }
            write_json_file(or_out, deployment_to_json(*dep));
            write_manifest(manifest, or_out);
            return 0;
        }
        if (sc_rep->parsed()) {
            record_flag(sc_rep);
            manifest.inputs = {rep_counts, rep_prices};
            auto counts = load_gpu_counts(rep_counts);
            auto prices = load_prices(rep_prices);
            auto rows = cost_report(counts, prices);
            write_json_file(rep_out, cost_rows_to_json(rows));
            if (!rep_csv.empty()) {
                std::ofstream csv(rep_csv, std::ios::binary);
                if (!csv) throw SchemaError("cannot write '" + rep_csv + "'");
                csv << cost_rows_to_csv(rows);
            }
            write_manifest(manifest, rep_out);
            return 0;
        }
        return 2;
    } catch (const SchemaError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const PlanningError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ExecutionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
