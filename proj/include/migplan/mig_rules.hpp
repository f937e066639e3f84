#pragma once

#include <map>
#include <set>
#include <span>
#include <vector>

#include "migplan/core.hpp"

namespace migplan {

/// Data-driven partition legality: legal start slots per size, memory budget in
/// eighths, and hard-excluded size pairs. The 18-entry A100 table is derived
/// from these rules rather than written out by hand.
struct PartitionRuleSet {
    std::map<int, std::vector<int>> slot_positions;   // size -> sorted legal start slots
    std::map<int, int> memory_weight;                 // size -> memory slices (of 8)
    std::set<std::pair<int, int>> hard_exclusions;    // normalized (min,max) size pairs
    int memory_budget = 8;

    static PartitionRuleSet defaults() {
        PartitionRuleSet r;
        r.slot_positions[1] = {0, 1, 2, 3, 4, 5, 6};
        r.slot_positions[2] = {0, 2, 4};
        r.slot_positions[3] = {0, 4};
        r.slot_positions[4] = {0};
        r.slot_positions[7] = {0};
        // A 1/7 instance has 1/7 of the processors but 1/8 of the memory;
        // 3/7 takes half the memory, which is what kills {3,3,1}.
        r.memory_weight = {{1, 1}, {2, 2}, {3, 4}, {4, 4}, {7, 8}};
        r.hard_exclusions = {{3, 4}};  // "no 4/7 + 3/7"
        return r;
    }
};

inline std::pair<int, int> normalized_pair(int a, int b) { return a <= b ? std::pair{a, b} : std::pair{b, a}; }

inline bool is_legal_partition(std::span<const Placement> placements, const PartitionRuleSet& rules) {
    unsigned occupied = 0;
    int memory = 0;
    for (const auto& p : placements) {
        auto pos = rules.slot_positions.find(p.slices);
        if (pos == rules.slot_positions.end()) return false;
        if (std::find(pos->second.begin(), pos->second.end(), p.start_slot) == pos->second.end()) return false;
        if (p.start_slot + p.slices > 7) return false;
        unsigned mask = ((1u << p.slices) - 1u) << p.start_slot;
        if (occupied & mask) return false;
        occupied |= mask;
        auto mw = rules.memory_weight.find(p.slices);
        if (mw == rules.memory_weight.end()) return false;
        memory += mw->second;
    }
    if (memory > rules.memory_budget) return false;
    for (size_t i = 0; i < placements.size(); ++i)
        for (size_t j = i + 1; j < placements.size(); ++j)
            if (rules.hard_exclusions.count(normalized_pair(placements[i].slices, placements[j].slices)))
                return false;
    return true;
}

/// A legal partition; maximal means no further instance of any size fits.
struct LegalPartition {
    std::vector<Placement> placements;  // sorted by start slot
    bool maximal = false;
};

inline std::vector<Placement> placement_universe(const PartitionRuleSet& rules) {
    std::vector<Placement> all;
    for (const auto& [size, slots] : rules.slot_positions)
        for (int s : slots)
            if (s + size <= 7) all.push_back(Placement{size, s});
    std::sort(all.begin(), all.end());
    return all;
}

inline bool is_maximal_partition(std::span<const Placement> placements, const PartitionRuleSet& rules) {
    std::vector<Placement> trial(placements.begin(), placements.end());
    for (const auto& extra : placement_universe(rules)) {
        if (std::find(trial.begin(), trial.end(), extra) != trial.end()) continue;
        trial.push_back(extra);
        bool legal = is_legal_partition(trial, rules);
        trial.pop_back();
        if (legal) return false;
    }
    return true;
}

namespace detail {

inline void enumerate_legal_rec(const std::vector<Placement>& universe, size_t from,
                                std::vector<Placement>& cur, const PartitionRuleSet& rules,
                                std::vector<std::vector<Placement>>& out) {
    out.push_back(cur);
    for (size_t i = from; i < universe.size(); ++i) {
        cur.push_back(universe[i]);
        if (is_legal_partition(cur, rules))
            enumerate_legal_rec(universe, i + 1, cur, rules, out);
        cur.pop_back();
    }
}

// Sort key: size multiset descending-lexicographic, then slot layout.
inline std::pair<std::vector<int>, std::vector<int>> partition_key(const std::vector<Placement>& p) {
    std::vector<int> sizes, slots;
    for (const auto& x : p) sizes.push_back(x.slices);
    std::sort(sizes.begin(), sizes.end(), std::greater<>());
    for (const auto& x : p) slots.push_back(x.start_slot);
    std::sort(slots.begin(), slots.end());
    return {sizes, slots};
}

}  // namespace detail

/// All placement-distinct maximal legal partitions, deterministically ordered.
/// Under default rules this is exactly the 18-entry A100 table.
inline std::vector<LegalPartition> enumerate_maximal_partitions(const PartitionRuleSet& rules) {
    auto universe = placement_universe(rules);
    std::vector<std::vector<Placement>> legal;
    std::vector<Placement> cur;
    detail::enumerate_legal_rec(universe, 0, cur, rules, legal);

    std::vector<LegalPartition> out;
    for (auto& p : legal) {
        if (p.empty() && !universe.empty()) continue;
        if (!is_maximal_partition(p, rules)) continue;
        std::sort(p.begin(), p.end(), [](const Placement& a, const Placement& b) {
            return a.start_slot < b.start_slot;
        });
        out.push_back(LegalPartition{p, true});
    }
    std::sort(out.begin(), out.end(), [](const LegalPartition& a, const LegalPartition& b) {
        return detail::partition_key(a.placements) < detail::partition_key(b.placements);
    });
    return out;
}

/// The reconfiguration rule: replacing mset by mset_new on a GPU currently
/// partitioned as `current` is legal iff mset is currently present and both the
/// before and after partitions are legal.
inline bool rule_reconf(std::span<const Placement> mset, std::span<const Placement> mset_new,
                        std::span<const Placement> current, const PartitionRuleSet& rules) {
    for (const auto& m : mset)
        if (std::find(current.begin(), current.end(), m) == current.end()) return false;
    if (!is_legal_partition(current, rules)) return false;
    std::vector<Placement> after;
    for (const auto& c : current)
        if (std::find(mset.begin(), mset.end(), c) == mset.end()) after.push_back(c);
    for (const auto& n : mset_new)
        if (std::find(after.begin(), after.end(), n) == after.end()) after.push_back(n);
    return is_legal_partition(after, rules);
}

// Full structural check of a deployment against SLOs, profiles, and partition
// rules. Throws PlanningError naming the offending GPU/service.
inline void validate_deployment(const Deployment& dep, std::span<const ServiceSpec> services,
                                const ProfileStore& profiles, const PartitionRuleSet& rules) {
    std::set<std::string> ids;
    for (const auto& gpu : dep.gpus) {
        if (!ids.insert(gpu.id).second) throw PlanningError("duplicate gpu id '" + gpu.id + "'");
        if (!is_legal_partition(gpu.config.partition(), rules))
            throw PlanningError("gpu '" + gpu.id + "' is not a legal partition");
        for (const auto& inst : gpu.config.instances) {
            int idx = service_index(services, inst.service_id);
            if (idx < 0)
                throw PlanningError("gpu '" + gpu.id + "' assigns unknown service '" + inst.service_id + "'");
            const ServiceSpec& svc = services[idx];
            const ModelProfile& prof = profile_for(profiles, svc.model_name);
            const ProfileEntry* e = prof.find(inst.placement.slices, inst.batch);
            if (!e)
                throw PlanningError("gpu '" + gpu.id + "': no profile entry for '" + svc.model_name + "' size " +
                                    std::to_string(inst.placement.slices) + " batch " + std::to_string(inst.batch));
            if (e->p90_ms > svc.max_p90_ms)
                throw PlanningError("gpu '" + gpu.id + "': service '" + svc.service_id + "' batch " +
                                    std::to_string(inst.batch) + " violates its latency ceiling");
        }
    }
}

}  // namespace migplan
