#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "migplan/mig_rules.hpp"
#include "migplan/transition.hpp"

namespace migplan {

/// One simulated GPU: the carved partition plus which placements run what.
/// Unlike a Deployment, carved-but-idle placements are first-class here.
struct GpuState {
    std::string id;
    int machine = 0;
    std::vector<Placement> partition;                        // sorted by slot
    std::map<Placement, std::pair<std::string, int>> live;   // placement -> (service, batch)

    bool is_idle(const Placement& p) const { return !live.count(p); }
    bool in_partition(const Placement& p) const {
        return std::find(partition.begin(), partition.end(), p) != partition.end();
    }
    bool busy() const { return !live.empty(); }
};

struct ClusterState {
    std::vector<GpuState> gpus;
    std::map<std::string, int> index;  // gpu id -> position
    int gpus_per_machine = 8;
    double clock_ms = 0.0;

    GpuState& ensure(const std::string& id) {
        auto it = index.find(id);
        if (it != index.end()) return gpus[it->second];
        GpuState g;
        g.id = id;
        g.machine = static_cast<int>(gpus.size()) / gpus_per_machine;
        index[id] = static_cast<int>(gpus.size());
        gpus.push_back(std::move(g));
        return gpus.back();
    }
    GpuState& at(const std::string& id) {
        auto it = index.find(id);
        if (it == index.end()) throw ExecutionError("unknown gpu '" + id + "'");
        return gpus[it->second];
    }
    int busy_gpus() const {
        int n = 0;
        for (const auto& g : gpus) n += g.busy() ? 1 : 0;
        return n;
    }
};

inline ClusterState cluster_from_deployment(const Deployment& dep, int gpus_per_machine = 8) {
    ClusterState st;
    st.gpus_per_machine = gpus_per_machine;
    for (const auto& gpu : dep.gpus) {
        GpuState& g = st.ensure(gpu.id);
        for (const auto& inst : gpu.config.instances) {
            g.partition.push_back(inst.placement);
            g.live[inst.placement] = {inst.service_id, inst.batch};
        }
        std::sort(g.partition.begin(), g.partition.end());
    }
    return st;
}

/// Synchronous action durations in milliseconds. These are configuration, not
/// measured ground truth.
struct ActionCostModel {
    double create_ms = 30000;
    double delete_ms = 5000;
    double migrate_local_ms = 30000;
    double migrate_remote_ms = 60000;
    double repartition_ms = 10000;

    double duration(ActionKind k) const {
        switch (k) {
            case ActionKind::Create: return create_ms;
            case ActionKind::Delete: return delete_ms;
            case ActionKind::MigrateLocal: return migrate_local_ms;
            case ActionKind::MigrateRemote: return migrate_remote_ms;
            case ActionKind::Repartition: return repartition_ms;
        }
        return 0.0;
    }
    void validate() const {
        for (double d : {create_ms, delete_ms, migrate_local_ms, migrate_remote_ms, repartition_ms})
            if (d <= 0.0) throw SchemaError("action durations must be positive");
    }
};

namespace detail {

inline std::string placement_str(const Placement& p) {
    return std::to_string(p.slices) + "@" + std::to_string(p.start_slot);
}

// Carve-or-reuse for create/migrate targets: the placement must either be a
// carved idle slot or be legally carvable next to the current partition.
inline void acquire_slot(GpuState& g, const Placement& p, const PartitionRuleSet& rules, const Action& a) {
    if (g.in_partition(p)) {
        if (!g.is_idle(p))
            throw ExecutionError(std::string(action_kind_name(a.kind)) + " on gpu '" + g.id + "': placement " +
                                 placement_str(p) + " is already running a service");
        return;
    }
    std::vector<Placement> after = g.partition;
    after.push_back(p);
    if (!is_legal_partition(after, rules))
        throw ExecutionError(std::string(action_kind_name(a.kind)) + " on gpu '" + g.id + "': carving " +
                             placement_str(p) + " is not a legal partition");
    g.partition = std::move(after);
    std::sort(g.partition.begin(), g.partition.end());
}

// Source resolution for migrations: lowest-slot live instance matching
// (service, size, batch) on the source GPU.
inline Placement resolve_migration_source(const GpuState& g, const Action& a) {
    for (const auto& [p, sb] : g.live)
        if (p.slices == a.placement.slices && sb.first == a.service && sb.second == a.batch) return p;
    throw ExecutionError("migrate from gpu '" + g.id + "': no live instance of service '" + a.service +
                         "' size " + std::to_string(a.placement.slices) + " batch " + std::to_string(a.batch));
}

}  // namespace detail

/// Applies one action in place. The clock is not touched here; the synchronous
/// wrapper and run_plan own time. Throws ExecutionError when the action's
/// preconditions do not hold in the current state.
inline void apply_action_inplace(ClusterState& state, const Action& action, const PartitionRuleSet& rules) {
    switch (action.kind) {
        case ActionKind::Create: {
            GpuState& g = state.ensure(action.gpu);
            detail::acquire_slot(g, action.placement, rules, action);
            g.live[action.placement] = {action.service, action.batch};
            break;
        }
        case ActionKind::Delete: {
            GpuState& g = state.at(action.gpu);
            auto it = g.live.find(action.placement);
            if (it == g.live.end())
                throw ExecutionError("delete on gpu '" + g.id + "': no live instance at " +
                                     detail::placement_str(action.placement));
            g.live.erase(it);
            break;
        }
        case ActionKind::MigrateLocal:
        case ActionKind::MigrateRemote: {
            GpuState& src = state.at(action.gpu);
            Placement from = detail::resolve_migration_source(src, action);
            GpuState& dst = state.ensure(action.target_gpu);
            if (&dst == &src && from == action.placement) break;
            detail::acquire_slot(dst, action.placement, rules, action);
            // replica first, then source teardown; net capacity change is zero
            dst.live[action.placement] = {action.service, action.batch};
            state.at(action.gpu).live.erase(from);
            break;
        }
        case ActionKind::Repartition: {
            GpuState& g = state.ensure(action.gpu);
            if (!rule_reconf(action.repart_removed, action.repart_added, g.partition, rules))
                throw ExecutionError("repartition on gpu '" + g.id + "' violates the reconfiguration rule");
            std::vector<Placement> after;
            for (const auto& p : g.partition) {
                if (std::find(action.repart_removed.begin(), action.repart_removed.end(), p) !=
                    action.repart_removed.end()) {
                    g.live.erase(p);  // repartitioning a live placement drops its service
                    continue;
                }
                after.push_back(p);
            }
            for (const auto& p : action.repart_added)
                if (std::find(after.begin(), after.end(), p) == after.end()) after.push_back(p);
            std::sort(after.begin(), after.end());
            g.partition = std::move(after);
            break;
        }
    }
}

// Synchronous successor state: apply and advance the clock by the action's duration.
inline ClusterState apply_action(const ClusterState& state, const Action& action, const PartitionRuleSet& rules,
                                 const ActionCostModel& costs = {}) {
    ClusterState next = state;
    apply_action_inplace(next, action, rules);
    next.clock_ms += costs.duration(action.kind);
    return next;
}

// Live capacity (rps) per service, from profile throughputs of live instances.
inline std::map<std::string, double> capacity_of(const ClusterState& state, const ProfileStore& profiles,
                                                 const std::map<std::string, std::string>& service_model) {
    std::map<std::string, double> cap;
    for (const auto& g : state.gpus)
        for (const auto& [p, sb] : g.live) {
            auto it = service_model.find(sb.first);
            if (it == service_model.end()) throw ExecutionError("no model for service '" + sb.first + "'");
            const ProfileEntry* e = profile_for(profiles, it->second).find(p.slices, sb.second);
            if (!e)
                throw ExecutionError("no profile entry for '" + it->second + "' size " +
                                     std::to_string(p.slices) + " batch " + std::to_string(sb.second));
            cap[sb.first] += e->throughput_rps;
        }
    return cap;
}

/// Per-service guard for the transition safety check: capacity must stay at or
/// above min(old required, new required) at every action completion.
struct TransitionGuard {
    std::map<std::string, double> min_required;          // service -> guard threshold
    std::map<std::string, std::string> service_model;    // service -> model name

    static TransitionGuard from_slos(std::span<const ServiceSpec> old_slos,
                                     std::span<const ServiceSpec> new_slos) {
        TransitionGuard g;
        std::map<std::string, double> old_req, new_req;
        for (const auto& s : old_slos) {
            old_req[s.service_id] = s.required_rps;
            g.service_model[s.service_id] = s.model_name;
        }
        for (const auto& s : new_slos) {
            new_req[s.service_id] = s.required_rps;
            auto it = g.service_model.find(s.service_id);
            if (it != g.service_model.end() && it->second != s.model_name)
                throw PlanningError("service '" + s.service_id + "' changes model ('" + it->second + "' -> '" +
                                    s.model_name + "'); deploy a model change under a new service id");
            g.service_model[s.service_id] = s.model_name;
        }
        for (const auto& [id, model] : g.service_model) {
            double o = old_req.count(id) ? old_req[id] : 0.0;
            double n = new_req.count(id) ? new_req[id] : 0.0;
            g.min_required[id] = std::min(o, n);
        }
        return g;
    }
};

struct SimulationReport {
    double wall_ms = 0.0;
    std::map<std::string, int> action_counts;  // create/delete/migrate_local/migrate_remote/repartition
    int peak_gpus = 0;
    bool safe = true;
    std::vector<std::string> violations;
};

inline std::string count_key(ActionKind k) {
    switch (k) {
        case ActionKind::Create: return "create";
        case ActionKind::Delete: return "delete";
        case ActionKind::MigrateLocal: return "migrate_local";
        case ActionKind::MigrateRemote: return "migrate_remote";
        case ActionKind::Repartition: return "repartition";
    }
    return "?";
}

/// Executes a plan stage by stage over `state`. Actions within a stage run in
/// parallel (stage duration = max action duration); the capacity guard is
/// asserted after every action completion, in completion order. Guard
/// violations mark the report unsafe; precondition violations throw.
inline SimulationReport run_plan(ClusterState& state, const TransitionPlan& plan, const ActionCostModel& costs,
                                 const TransitionGuard& guard, const ProfileStore& profiles,
                                 const PartitionRuleSet& rules) {
    SimulationReport report;
    for (const char* k : {"create", "delete", "migrate_local", "migrate_remote", "repartition"})
        report.action_counts[k] = 0;
    std::map<std::string, double> cap = capacity_of(state, profiles, guard.service_model);
    report.peak_gpus = state.busy_gpus();

    int stage_no = 0;
    for (const auto& stage : plan.stages) {
        // stage invariant: pairwise-disjoint GPU sets
        std::set<std::string> touched;
        for (const auto& a : stage)
            for (const auto& g : a.touched_gpus())
                if (!touched.insert(g).second)
                    throw ExecutionError("stage " + std::to_string(stage_no) + " touches gpu '" + g +
                                         "' more than once");
        std::vector<size_t> order(stage.size());
        for (size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
            return costs.duration(stage[a].kind) < costs.duration(stage[b].kind);
        });

        double stage_start = state.clock_ms;
        double stage_end = stage_start;
        for (size_t idx : order) {
            const Action& a = stage[idx];
            apply_action_inplace(state, a, rules);
            state.clock_ms = stage_start + costs.duration(a.kind);
            stage_end = std::max(stage_end, state.clock_ms);
            report.action_counts[count_key(a.kind)] += 1;
            report.peak_gpus = std::max(report.peak_gpus, state.busy_gpus());

            cap = capacity_of(state, profiles, guard.service_model);
            for (const auto& [svc, min_req] : guard.min_required) {
                double have = cap.count(svc) ? cap[svc] : 0.0;
                if (have < min_req - 1e-6) {
                    report.safe = false;
                    report.violations.push_back(
                        "stage " + std::to_string(stage_no) + " " + std::string(action_kind_name(a.kind)) +
                        " on gpu '" + a.gpu + "': service '" + svc + "' capacity " + std::to_string(have) +
                        " < guard " + std::to_string(min_req));
                }
            }
        }
        state.clock_ms = stage_end;
        ++stage_no;
    }
    report.wall_ms = state.clock_ms;
    return report;
}

// Equivalence up to placement and GPU identity: the multiset over GPUs of
// (service, size) instance multisets must match. Idle carved slots and empty
// GPUs are ignored; batches are not part of the comparison.
inline bool deployment_equivalent(const ClusterState& state, const Deployment& target) {
    using Key = std::vector<std::pair<std::string, int>>;
    std::vector<Key> have, want;
    for (const auto& g : state.gpus) {
        Key k;
        for (const auto& [p, sb] : g.live) k.emplace_back(sb.first, p.slices);
        if (k.empty()) continue;
        std::sort(k.begin(), k.end());
        have.push_back(std::move(k));
    }
    for (const auto& g : target.gpus) {
        Key k;
        for (const auto& inst : g.config.instances) k.emplace_back(inst.service_id, inst.placement.slices);
        if (k.empty()) continue;
        std::sort(k.begin(), k.end());
        want.push_back(std::move(k));
    }
    std::sort(have.begin(), have.end());
    std::sort(want.begin(), want.end());
    return have == want;
}

}  // namespace migplan
