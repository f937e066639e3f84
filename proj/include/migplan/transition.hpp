#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "migplan/core.hpp"

namespace migplan {

enum class ActionKind { Create, Delete, MigrateLocal, MigrateRemote, Repartition };

inline const char* action_kind_name(ActionKind k) {
    switch (k) {
        case ActionKind::Create: return "create";
        case ActionKind::Delete: return "delete";
        case ActionKind::MigrateLocal: return "migrate-local";
        case ActionKind::MigrateRemote: return "migrate-remote";
        case ActionKind::Repartition: return "repartition";
    }
    return "?";
}

/// One transition action.
///   Create      gpu, placement, service, batch — boot an instance (carving the
///               slot first if it is not already carved and the result is legal)
///   Delete      gpu, placement — stop the instance; the slot stays carved
///   Migrate*    gpu (source), target_gpu, placement (destination slot),
///               service, batch — create the replica, then delete the source;
///               the source instance is the lowest-slot (service, size, batch)
///               match on the source GPU
///   Repartition gpu, repart_removed -> repart_added; must satisfy rule_reconf
///               against the GPU's partition at execution time
struct Action {
    ActionKind kind = ActionKind::Create;
    std::string gpu;
    std::string target_gpu;
    Placement placement;
    std::vector<Placement> repart_removed;
    std::vector<Placement> repart_added;
    std::string service;
    int batch = 0;

    bool is_migrate() const { return kind == ActionKind::MigrateLocal || kind == ActionKind::MigrateRemote; }
    std::vector<std::string> touched_gpus() const {
        if (is_migrate() && target_gpu != gpu) return {gpu, target_gpu};
        return {gpu};
    }
};

/// Staged action plan. Actions within a stage touch pairwise-disjoint GPU sets
/// and may run in parallel; stages execute in order.
struct TransitionPlan {
    int extra_gpu_budget = 0;
    std::vector<std::vector<Action>> stages;

    size_t action_count() const {
        size_t n = 0;
        for (const auto& s : stages) n += s.size();
        return n;
    }
    bool empty() const { return action_count() == 0; }
};

/// Per-service instance-size difference between two deployments.
struct ServiceDelta {
    std::string service_id;
    std::vector<int> added;    // sizes, descending
    std::vector<int> removed;  // sizes, descending
};

inline std::map<std::string, std::map<int, int>> instance_size_counts(const Deployment& dep) {
    std::map<std::string, std::map<int, int>> counts;
    for (const auto& gpu : dep.gpus)
        for (const auto& inst : gpu.config.instances) counts[inst.service_id][inst.placement.slices] += 1;
    return counts;
}

/// Per-service multiset difference of instance sizes (new minus old). Services
/// of either deployment appear; sizes never show up on both sides.
inline std::vector<ServiceDelta> compute_deltas(const Deployment& old_dep, const Deployment& new_dep) {
    auto old_counts = instance_size_counts(old_dep);
    auto new_counts = instance_size_counts(new_dep);
    std::map<std::string, ServiceDelta> deltas;
    auto ensure = [&](const std::string& id) -> ServiceDelta& {
        auto& d = deltas[id];
        d.service_id = id;
        return d;
    };
    for (const auto& [id, sizes] : old_counts) ensure(id);
    for (const auto& [id, sizes] : new_counts) ensure(id);
    for (auto& [id, delta] : deltas) {
        for (int size : {7, 4, 3, 2, 1}) {
            int o = old_counts.count(id) && old_counts[id].count(size) ? old_counts[id][size] : 0;
            int n = new_counts.count(id) && new_counts[id].count(size) ? new_counts[id][size] : 0;
            for (int k = 0; k < n - o; ++k) delta.added.push_back(size);
            for (int k = 0; k < o - n; ++k) delta.removed.push_back(size);
        }
    }
    std::vector<ServiceDelta> out;
    out.reserve(deltas.size());
    for (auto& [id, d] : deltas) out.push_back(std::move(d));
    return out;
}

struct ExchangePairing {
    // one entry per new instance: (new size, removed sizes it absorbs)
    std::vector<std::pair<int, std::vector<int>>> pairs;
    std::vector<int> leftovers;  // removed sizes paired with nothing
};

namespace detail {

// First-fit-decreasing pairing over explicit throughputs. Each new instance
// absorbs removed throughput while the sum stays at or below its own, so a
// removed instance stronger than every new instance is never paired.
inline std::pair<std::vector<std::vector<size_t>>, std::vector<size_t>> pair_by_throughput(
    std::span<const double> new_thr, std::span<const double> removed_thr) {
    std::vector<size_t> new_order(new_thr.size()), rem_order(removed_thr.size());
    for (size_t i = 0; i < new_order.size(); ++i) new_order[i] = i;
    for (size_t i = 0; i < rem_order.size(); ++i) rem_order[i] = i;
    std::stable_sort(new_order.begin(), new_order.end(),
                     [&](size_t a, size_t b) { return new_thr[a] > new_thr[b]; });
    std::stable_sort(rem_order.begin(), rem_order.end(),
                     [&](size_t a, size_t b) { return removed_thr[a] > removed_thr[b]; });

    std::vector<std::vector<size_t>> pairs(new_thr.size());
    std::vector<bool> used(removed_thr.size(), false);
    for (size_t ni : new_order) {
        double cap = new_thr[ni];
        double sum = 0.0;
        for (size_t ri : rem_order) {
            if (used[ri]) continue;
            if (sum + removed_thr[ri] <= cap + 1e-9) {
                used[ri] = true;
                sum += removed_thr[ri];
                pairs[ni].push_back(ri);
            }
        }
    }
    std::vector<size_t> leftovers;
    for (size_t ri : rem_order)
        if (!used[ri]) leftovers.push_back(ri);
    return {pairs, leftovers};
}

}  // namespace detail

/// Pair each new instance of a service delta with removed instances whose
/// combined throughput it covers; unpairable removals become leftovers, which
/// are only deleted after the service's pairs complete.
inline ExchangePairing pair_exchanges(const ServiceDelta& delta, const ModelProfile& profile,
                                      const ServiceSpec& slo) {
    auto thr_of = [&](int size) {
        auto e = select_entry(slo, profile, size);
        if (!e)
            throw PlanningError("service '" + slo.service_id + "': size " + std::to_string(size) +
                                " has no batch under the latency ceiling");
        return e->second;
    };
    std::vector<double> new_thr, rem_thr;
    for (int s : delta.added) new_thr.push_back(thr_of(s));
    for (int s : delta.removed) rem_thr.push_back(thr_of(s));
    auto [pair_idx, leftover_idx] = detail::pair_by_throughput(new_thr, rem_thr);

    ExchangePairing out;
    for (size_t ni = 0; ni < delta.added.size(); ++ni) {
        std::vector<int> absorbed;
        for (size_t ri : pair_idx[ni]) absorbed.push_back(delta.removed[ri]);
        out.pairs.emplace_back(delta.added[ni], std::move(absorbed));
    }
    for (size_t ri : leftover_idx) out.leftovers.push_back(delta.removed[ri]);
    return out;
}

}  // namespace migplan
