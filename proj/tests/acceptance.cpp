// Acceptance suite: runs every toolkit-level criterion at its stated tolerance
// and prints one PASS/FAIL line per criterion. Returns the number of failures.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "migplan/bench.hpp"
#include "migplan/ga.hpp"
#include "migplan/io.hpp"
#include "migplan/mcts.hpp"
#include "migplan/transition_planner.hpp"

using namespace migplan;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %2d: %s%s%s\n", pass ? "PASS" : "FAIL", id, name.c_str(),
                detail.empty() ? "" : " — ", detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

void info(const std::string& text) {
    std::printf("[info]              %s\n", text.c_str());
    std::fflush(stdout);
}

void criterion(int id, const std::string& name, const std::function<std::pair<bool, std::string>()>& fn) {
    try {
        auto [pass, detail] = fn();
        report(id, name, pass, detail);
    } catch (const std::exception& e) {
        report(id, name, false, std::string("exception: ") + e.what());
    }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const std::string kFixtures = FIXTURES_DIR;
const std::string kCli = MIGPLAN_CLI_PATH;

// Moderately sized random workloads keep the 200-workload sweep tractable.
std::vector<ServiceSpec> sized_workload(const ProfileStore& profiles, int n, bool normal, uint64_t seed) {
    double mu = normal ? (n <= 4 ? 900.0 : n <= 12 ? 700.0 : 550.0) : (n <= 4 ? 6.5 : n <= 12 ? 6.2 : 6.0);
    double sigma = normal ? (n <= 4 ? 400.0 : 250.0) : 0.5;
    return gen_workload(n, normal ? Distribution::Normal : Distribution::Lognormal, mu, sigma, 100.0, seed,
                        profiles)
        .services;
}

struct TempDir {
    fs::path dir;
    TempDir() {
        dir = fs::temp_directory_path() / ("migplan_accept_" + std::to_string(::getpid()));
        fs::create_directories(dir);
    }
    ~TempDir() { fs::remove_all(dir); }
    std::string file(const std::string& name) const { return (dir / name).string(); }
};

int run_cli(const std::string& args, const TempDir& td) {
    std::string cmd = kCli + " " + args + " > " + td.file("cli_stdout.txt") + " 2> " + td.file("cli_stderr.txt");
    int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

// ---- criterion 1: the derived partition table -------------------------------

std::pair<bool, std::string> c1_partition_table() {
    TempDir td;
    auto t0 = std::chrono::steady_clock::now();
    if (run_cli("enumerate-partitions -o " + td.file("parts.json"), td) != 0)
        return {false, "enumerate-partitions failed"};
    double secs = seconds_since(t0);
    json j = load_json_file(td.file("parts.json"));
    if (j.at("count") != 18) return {false, "count = " + j.at("count").dump()};
    bool has_421 = false;
    for (const auto& part : j.at("partitions")) {
        std::multiset<int> sizes;
        for (const auto& s : part.at("sizes")) sizes.insert(s.get<int>());
        if (sizes.count(4) && sizes.count(3)) return {false, "table contains 4/7 + 3/7"};
        if (sizes == std::multiset<int>{3, 3, 1}) return {false, "table contains 3/7 + 3/7 + 1/7"};
        if (sizes == std::multiset<int>{4, 2, 1}) has_421 = true;
    }
    if (!has_421) return {false, "table is missing {4/7, 2/7, 1/7}"};
    if (secs >= 1.0) return {false, "took " + std::to_string(secs) + "s"};
    char buf[64];
    std::snprintf(buf, sizeof buf, "18 partitions in %.3fs", secs);
    return {true, buf};
}

// ---- criterion 2: worked utility example ------------------------------------

std::pair<bool, std::string> c2_utility_example() {
    ProfileStore ps;
    ModelProfile p;
    p.model_name = "m";
    p.entries[1] = {{8, 50.0, 70.0}};
    ps["m"] = p;
    std::vector<ServiceSpec> services{{"svc-0", "m", 1000.0, 100.0}, {"svc-1", "m", 1000.0, 100.0}};
    validate_services(services, ps);
    GpuConfig one{{AssignedInstance{Placement{1, 0}, "svc-0", 8}}};
    GpuConfig seven;
    for (int s = 0; s < 7; ++s) seven.instances.push_back({Placement{1, s}, "svc-0", 8});
    Utility u1 = utility_of(one, services, ps);
    Utility u7 = utility_of(seven, services, ps);
    bool ok = u1.values[0] == 0.05 && u1.values[1] == 0.0 && u7.values[0] == 0.35 && u7.values[1] == 0.0;
    return {ok, ok ? "+5% and +35%, exact" : "utility arithmetic drifted"};
}

// ---- criterion 3: score zeroing ----------------------------------------------

std::pair<bool, std::string> c3_score_zeroing() {
    ProfileStore ps = load_profiles(kFixtures + "/profiles.json");
    auto services = load_services(kFixtures + "/slos_day.json", ps);
    PlanContext ctx = make_plan_context(services, ps, PartitionRuleSet::defaults());
    Rng rng(mix_seed(3, 3));
    for (int trial = 0; trial < 1000; ++trial) {
        const Candidate& c = ctx.pool.items[pick_index(rng, ctx.pool.items.size())];
        CompletionRates comp;
        for (size_t i = 0; i < services.size(); ++i) comp.values.push_back(1.0 + 2.0 * uniform01(rng));
        if (score(c, comp) != 0.0) return {false, "non-zero score on a satisfied state"};
    }
    return {true, "1000 random configs, all exactly zero"};
}

// ---- criteria 4 + 5: optimizer validity and the improvement chain ------------

std::pair<bool, std::string> c4_c5_optimizers(std::string& c5_detail, bool& c5_pass) {
    ProfileStore ps = load_profiles(kFixtures + "/profiles.json");
    const int kWorkloads = 200;
    int violations = 0, chain_violations = 0, round_violations = 0;
    GaParams ga;
    ga.population = 4;
    ga.max_rounds = 2;
    ga.stall_rounds = 10;
    ga.time_budget_s = 600.0;
    ga.slow.budget_iters = 12;

    for (int i = 0; i < kWorkloads; ++i) {
        int n = std::array{4, 12, 24}[i % 3];
        auto services = sized_workload(ps, n, i % 2 == 0, 1000 + i);
        PlanContext ctx = make_plan_context(services, ps, PartitionRuleSet::defaults());

        auto fast = fast_algo(zero_completion(services.size()), ctx);
        if (!is_satisfied(completion_of(fast, services, ps))) ++violations;

        MctsParams mp;
        mp.budget_iters = 16;
        auto slow = mcts_solve(zero_completion(services.size()), ctx, mp, 77 + i);
        if (!is_satisfied(completion_of(slow, services, ps))) ++violations;

        ga.seed = 9000 + i;
        std::vector<GaRoundLog> logs;
        Deployment full = two_phase(services, ps, PartitionRuleSet::defaults(), ga,
                                    [&](const GaRoundLog& l) { logs.push_back(l); });
        if (!is_satisfied(completion_of(full, services, ps))) ++violations;

        int lb = lower_bound(services, ps);
        if (!(lb <= static_cast<int>(full.gpus.size()) && full.gpus.size() <= fast.size()))
            ++chain_violations;
        for (size_t r = 1; r < logs.size(); ++r)
            if (logs[r].best_gpus > logs[r - 1].best_gpus) ++round_violations;
    }

    // runtime bound: the fast algorithm at n=24, default-scale demands
    auto big = gen_workload(24, Distribution::Lognormal, 8.0, 0.6, 100.0, 4242, ps).services;
    PlanContext big_ctx = make_plan_context(big, ps, PartitionRuleSet::defaults());
    auto t0 = std::chrono::steady_clock::now();
    auto big_fast = fast_algo(zero_completion(big.size()), big_ctx);
    double fast_secs = seconds_since(t0);
    bool fast_ok = fast_secs < 60.0 && is_satisfied(completion_of(big_fast, big, ps));

    c5_pass = chain_violations == 0 && round_violations == 0;
    c5_detail = "lower_bound <= |two_phase| <= |fast_algo| on " + std::to_string(kWorkloads) +
                " workloads; per-round best non-increasing";
    if (!c5_pass)
        c5_detail = std::to_string(chain_violations) + " chain violations, " +
                    std::to_string(round_violations) + " round regressions";

    char buf[160];
    std::snprintf(buf, sizeof buf, "%d workloads, %d violations; fast_algo n=24 at scale: %zu GPUs in %.2fs",
                  kWorkloads, violations, big_fast.size(), fast_secs);
    return {violations == 0 && fast_ok, buf};
}

// ---- criterion 6: tiny-instance optimality -----------------------------------

std::pair<bool, std::string> c6_tiny_optimality() {
    ProfileStore ps = load_profiles(kFixtures + "/profiles.json");
    auto rules = PartitionRuleSet::defaults();
    int cases = 0, ga_match = 0, fast_match = 0;
    uint64_t seed = 1;
    double lb_gap_sum = 0.0;
    while (cases < 30 && seed < 500) {
        uint64_t s = seed++;
        int n = 1 + static_cast<int>(s % 3);
        auto services =
            gen_workload(n, Distribution::Lognormal, 4.6, 0.6, 100.0, 31000 + s, ps).services;
        std::optional<Deployment> oracle;
        try {
            oracle = brute_force_optimum(services, ps, rules, 3);
        } catch (const PlanningError&) {
            continue;
        }
        if (!oracle) continue;
        ++cases;
        int best = static_cast<int>(oracle->gpus.size());

        PlanContext ctx = make_plan_context(services, ps, rules);
        auto fast = fast_algo(zero_completion(services.size()), ctx);
        if (static_cast<int>(fast.size()) == best) ++fast_match;

        GaParams ga;
        ga.seed = 555 + s;
        ga.max_rounds = 10;
        ga.stall_rounds = 10;
        ga.population = 8;
        ga.erase_fraction = 0.34;
        ga.time_budget_s = 600.0;
        ga.slow.budget_iters = 64;
        Deployment full = two_phase(services, ps, rules, ga);
        if (static_cast<int>(full.gpus.size()) == best) ++ga_match;
        int lb = lower_bound(services, ps);
        lb_gap_sum += best > 0 ? static_cast<double>(best - lb) / best : 0.0;
    }
    char buf[160];
    std::snprintf(buf, sizeof buf, "two_phase %d/30, fast %d/30 (need >= 28 and >= 20); mean LB gap %.1f%%",
                  ga_match, fast_match, 100.0 * lb_gap_sum / std::max(1, cases));
    return {cases == 30 && ga_match >= 28 && fast_match >= 20, buf};
}

// ---- criterion 7: savings on the shipped fixture workload --------------------

std::pair<bool, std::string> c7_savings() {
    ProfileStore ps = load_profiles(kFixtures + "/profiles.json");
    auto services = load_services(kFixtures + "/slos_24.json", ps);
    auto rules = PartitionRuleSet::defaults();

    Deployment whole = baseline(BaselineKind::WholeGpu, services, ps);
    auto t0 = std::chrono::steady_clock::now();
    GaParams ga;
    ga.seed = 24;
    ga.time_budget_s = 600.0;
    ga.stall_rounds = 10;
    ga.slow.budget_iters = 48;
    Deployment ours = two_phase(services, ps, rules, ga);
    double secs = seconds_since(t0);
    if (!is_satisfied(completion_of(ours, services, ps))) return {false, "two_phase output invalid"};

    double ratio = static_cast<double>(ours.gpus.size()) / static_cast<double>(whole.gpus.size());
    int lb = lower_bound(services, ps);
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "two_phase %zu vs A100-7/7 %zu GPUs (ratio %.3f, need <= 0.8) in %.0fs; lower bound %d "
                  "(gap %.1f%%)",
                  ours.gpus.size(), whole.gpus.size(), ratio, secs,
                  lb, 100.0 * (static_cast<double>(ours.gpus.size()) - lb) / ours.gpus.size());
    return {ratio <= 0.8 && secs < 1800.0, buf};
}

// ---- criterion 8: mutation neutrality ----------------------------------------

std::pair<bool, std::string> c8_mutation_neutrality() {
    ProfileStore ps = load_profiles(kFixtures + "/profiles.json");
    auto rules = PartitionRuleSet::defaults();
    int done = 0;
    for (uint64_t w = 0; w < 5; ++w) {
        auto services = sized_workload(ps, 12, w % 2 == 0, 600 + w);
        PlanContext ctx = make_plan_context(services, ps, rules);
        Chromosome parent = evaluate_chromosome(fast_algo(zero_completion(services.size()), ctx), ctx);
        CompletionRates before = completion_of(parent.gpus, services, ps);
        Rng rng(mix_seed(8, w));
        for (int trial = 0; trial < 200; ++trial, ++done) {
            Chromosome child = mutate(parent, GaParams{}, rng);
            CompletionRates after = completion_of(child.gpus, services, ps);
            if (after.values != before.values)
                return {false, "completion rates changed at mutation " + std::to_string(done)};
            parent = std::move(child);
        }
    }
    return {true, std::to_string(done) + " mutations, completion rates bitwise unchanged"};
}

// ---- criteria 9 + 10: transition safety and reconfiguration legality ---------

std::pair<bool, std::string> c9_c10_transitions(std::string& c10_detail, bool& c10_pass) {
    ProfileStore ps = load_profiles(kFixtures + "/profiles.json");
    auto rules = PartitionRuleSet::defaults();
    int unsafe = 0, not_equivalent = 0, repartitions_checked = 0, corruption_missed = 0, corruptions = 0;

    for (int i = 0; i < 100; ++i) {
        auto old_slos = sized_workload(ps, 3 + i % 4, i % 2 == 0, 70000 + i);
        // the new side keeps models (a model change requires a new service id)
        // while demands shift and the service set churns at the tail
        std::vector<ServiceSpec> new_slos;
        Rng prng(mix_seed(71000, i));
        for (size_t k = 0; k < old_slos.size(); ++k) {
            if (k + 1 == old_slos.size() && old_slos.size() > 2 && pick_index(prng, 3) == 0) continue;
            ServiceSpec s = old_slos[k];
            s.required_rps *= 0.3 + 2.2 * uniform01(prng);
            new_slos.push_back(std::move(s));
        }
        if (pick_index(prng, 2) == 0) {
            ServiceSpec fresh = old_slos[pick_index(prng, old_slos.size())];
            fresh.service_id = "svc-churn";
            fresh.required_rps = 100.0 + 500.0 * uniform01(prng);
            new_slos.push_back(std::move(fresh));
        }
        validate_services(new_slos, ps);
        PlanContext c1 = make_plan_context(old_slos, ps, rules);
        PlanContext c2 = make_plan_context(new_slos, ps, rules);
        Deployment from = make_deployment(fast_algo(zero_completion(old_slos.size()), c1), "o-");
        Deployment to = make_deployment(fast_algo(zero_completion(new_slos.size()), c2), "n-");
        TransitionPlan plan = plan_transition(from, to, old_slos, new_slos, ps, rules, 2);
        TransitionGuard guard = TransitionGuard::from_slos(old_slos, new_slos);

        // replay, re-verifying rule_reconf for every repartition against the
        // live state just before it applies
        {
            ClusterState st = cluster_from_deployment(from);
            for (const auto& stage : plan.stages)
                for (const auto& a : stage) {
                    if (a.kind == ActionKind::Repartition) {
                        ++repartitions_checked;
                        if (!rule_reconf(a.repart_removed, a.repart_added, st.ensure(a.gpu).partition, rules))
                            return {false, "a repartition violates rule_reconf"};
                    }
                    apply_action_inplace(st, a, rules);
                }
        }
        ClusterState st = cluster_from_deployment(from);
        SimulationReport rep = run_plan(st, plan, ActionCostModel{}, guard, ps, rules);
        if (!rep.safe) ++unsafe;
        if (!deployment_equivalent(st, to)) ++not_equivalent;

        // mutation-testing check: duplicating any action as a trailing stage
        // must be caught (precondition failure or guard violation)
        if (!plan.empty()) {
            ++corruptions;
            TransitionPlan corrupted = plan;
            corrupted.stages.push_back({corrupted.stages.front().front()});
            ClusterState cst = cluster_from_deployment(from);
            bool caught = false;
            try {
                SimulationReport crep = run_plan(cst, corrupted, ActionCostModel{}, guard, ps, rules);
                caught = !crep.safe;
            } catch (const ExecutionError&) {
                caught = true;
            }
            if (!caught) ++corruption_missed;
        }
    }

    // day <-> night round trip on the shipped fixtures
    auto day = load_services(kFixtures + "/slos_day.json", ps);
    auto night = load_services(kFixtures + "/slos_night.json", ps);
    PlanContext cd = make_plan_context(day, ps, rules);
    PlanContext cn = make_plan_context(night, ps, rules);
    Deployment day_dep = make_deployment(fast_algo(zero_completion(day.size()), cd), "day-");
    Deployment night_dep = make_deployment(fast_algo(zero_completion(night.size()), cn), "night-");
    auto run_dir = [&](const Deployment& f, const Deployment& t, std::span<const ServiceSpec> fs,
                       std::span<const ServiceSpec> ts) {
        TransitionPlan plan = plan_transition(f, t, fs, ts, ps, rules, 2);
        ClusterState st = cluster_from_deployment(f);
        TransitionGuard g = TransitionGuard::from_slos(fs, ts);
        SimulationReport rep = run_plan(st, plan, ActionCostModel{}, g, ps, rules);
        return std::tuple{rep.safe && deployment_equivalent(st, t), rep.wall_ms};
    };
    auto [shrink_ok, shrink_ms] = run_dir(day_dep, night_dep, day, night);
    auto [grow_ok, grow_ms] = run_dir(night_dep, day_dep, night, day);

    c10_pass = repartitions_checked > 0 && corruption_missed == 0;
    c10_detail = std::to_string(repartitions_checked) + " repartitions pass rule_reconf; " +
                 std::to_string(corruptions) + "/" + std::to_string(corruptions) + " corrupted plans caught";
    if (corruption_missed > 0)
        c10_detail = std::to_string(corruption_missed) + " corrupted plans slipped through";

    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "100 pairs: %d unsafe, %d non-equivalent; day2night %.0fs < night2day %.0fs: %s", unsafe,
                  not_equivalent, shrink_ms / 1000.0, grow_ms / 1000.0,
                  shrink_ms < grow_ms ? "yes" : "NO");
    bool pass = unsafe == 0 && not_equivalent == 0 && shrink_ok && grow_ok && shrink_ms < grow_ms;
    return {pass, buf};
}

// ---- criterion 11: rollout memoization speedup --------------------------------

std::pair<bool, std::string> c11_rollout_speedup() {
    ProfileStore ps = load_profiles(kFixtures + "/profiles.json");
    auto services = load_services(kFixtures + "/slos_24.json", ps);
    PlanContext ctx = make_plan_context(services, ps, PartitionRuleSet::defaults());
    MctsParams params;
    CompletionRates zero = zero_completion(services.size());
    int max_depth = 2 * static_cast<int>(fast_algo(zero, ctx).size());

    // uncached estimation re-scores the full candidate set at every step
    auto uncached_rollout = [&](Rng& rng) {
        CompletionRates cur = zero;
        int steps = 0;
        while (!is_satisfied(cur) && steps < max_depth) {
            auto top = detail::topk_candidates(ctx.pool, cur, params.topk, nullptr);
            const Candidate& c = ctx.pool.items[top[pick_index(rng, top.size())]];
            for (const auto& [svc, u] : c.util) cur.values[svc] += u;
            ++steps;
        }
        return steps;
    };

    RolloutCache cache;
    Rng warm_rng(11);
    for (int i = 0; i < 20; ++i) rollout(zero, ctx, params, cache, warm_rng, max_depth);  // warm the pools

    const int kWarm = 200, kCold = 5;
    Rng rng_a(12);
    auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < kWarm; ++i) rollout(zero, ctx, params, cache, rng_a, max_depth);
    double warm_per = seconds_since(t0) / kWarm;

    Rng rng_b(12);
    t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < kCold; ++i) uncached_rollout(rng_b);
    double cold_per = seconds_since(t0) / kCold;

    double ratio = cold_per / std::max(warm_per, 1e-9);
    char buf[160];
    std::snprintf(buf, sizeof buf, "warmed %.3fms vs re-scoring %.1fms per rollout: %.0fx (floor 10x)",
                  warm_per * 1e3, cold_per * 1e3, ratio);
    return {ratio >= 10.0, buf};
}

// ---- criterion 12: byte-identical seeded runs ---------------------------------

std::pair<bool, std::string> c12_determinism() {
    TempDir td;
    const std::string profiles = kFixtures + "/profiles.json";
    const std::string night = kFixtures + "/slos_night.json";
    const std::string day = kFixtures + "/slos_day.json";

    struct Step {
        std::string name, args, output;
    };
    std::vector<Step> steps = {
        {"gen-workload",
         "gen-workload --dist lognormal --n 8 --seed 5 --profiles " + profiles + " -o OUT", "wl.json"},
        {"optimize-fast",
         "optimize --mode fast --slos " + night + " --profiles " + profiles + " --quiet --workers 1 -o OUT",
         "fast.json"},
        {"optimize-mcts",
         "optimize --mode mcts --seed 3 --budget-iters 60 --slos " + night + " --profiles " + profiles +
             " --quiet --workers 1 -o OUT",
         "mcts.json"},
        {"optimize-full",
         "optimize --mode full --seed 4 --ga-rounds 2 --time-budget 600 --budget-iters 12 --slos " + night +
             " --profiles " + profiles + " --quiet --workers 1 -o OUT",
         "full.json"},
    };
    for (auto& s : steps) {
        std::string first = td.file("a_" + s.output), second = td.file("b_" + s.output);
        std::string args_a = s.args, args_b = s.args;
        args_a.replace(args_a.find("OUT"), 3, first);
        args_b.replace(args_b.find("OUT"), 3, second);
        if (run_cli(args_a, td) != 0 || run_cli(args_b, td) != 0)
            return {false, s.name + " failed to run"};
        if (read_file(first) != read_file(second)) return {false, s.name + " output differs across runs"};
    }

    // transition + simulate on the deterministic fast deployments
    if (run_cli("optimize --mode fast --slos " + day + " --profiles " + profiles + " --quiet -o " +
                    td.file("day.json"),
                td) != 0)
        return {false, "day optimize failed"};
    for (const char* tag : {"a", "b"}) {
        if (run_cli("transition --from " + td.file("day.json") + " --to " + td.file("a_fast.json") +
                        " --old-slos " + day + " --new-slos " + night + " --profiles " + profiles +
                        " --extra-gpus 1 -o " + td.file(std::string(tag) + "_plan.json"),
                    td) != 0)
            return {false, "transition failed"};
        if (run_cli("simulate --state " + td.file("day.json") + " --plan " +
                        td.file(std::string(tag) + "_plan.json") + " --old-slos " + day + " --new-slos " +
                        night + " --profiles " + profiles + " -o " + td.file(std::string(tag) + "_rep.json"),
                    td) != 0)
            return {false, "simulate failed"};
    }
    if (read_file(td.file("a_plan.json")) != read_file(td.file("b_plan.json")))
        return {false, "transition plans differ across runs"};
    if (read_file(td.file("a_rep.json")) != read_file(td.file("b_rep.json")))
        return {false, "simulation reports differ across runs"};
    return {true, "6 seeded commands, byte-identical outputs"};
}

int main() {
    std::printf("migplan acceptance suite\n");

    criterion(1, "partition table", c1_partition_table);
    criterion(2, "utility arithmetic", c2_utility_example);
    criterion(3, "score zeroing", c3_score_zeroing);

    std::string c5_detail;
    bool c5_pass = false;
    criterion(4, "optimizer validity", [&] { return c4_c5_optimizers(c5_detail, c5_pass); });
    report(5, "improvement chain", c5_pass, c5_detail);

    criterion(6, "tiny-instance optimality", c6_tiny_optimality);
    criterion(7, "savings vs A100-7/7", c7_savings);
    criterion(8, "mutation neutrality", c8_mutation_neutrality);

    std::string c10_detail;
    bool c10_pass = false;
    criterion(9, "transition safety", [&] { return c9_c10_transitions(c10_detail, c10_pass); });
    report(10, "reconfiguration legality", c10_pass, c10_detail);

    criterion(11, "rollout memoization", c11_rollout_speedup);
    criterion(12, "determinism", c12_determinism);

    // configuration-space sizes for the record (counting convention differs
    // from any particular external tally; reported, not asserted)
    try {
        ProfileStore ps = load_profiles(kFixtures + "/profiles.json");
        for (int n : {12, 13}) {
            auto services = sized_workload(ps, n, false, 999);
            PlanContext ctx = make_plan_context(services, ps, PartitionRuleSet::defaults());
            info("deduplicated config count at n=" + std::to_string(n) + ": " +
                 std::to_string(ctx.pool.items.size()));
        }
    } catch (const std::exception& e) {
        info(std::string("config-count report skipped: ") + e.what());
    }

    std::printf("%d of 12 criteria passed\n", 12 - g_failures);
    return g_failures;
}
