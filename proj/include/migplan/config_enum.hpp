#pragma once

#include <set>
#include <span>
#include <vector>

#include "migplan/core.hpp"
#include "migplan/mig_rules.hpp"

namespace migplan {

/// A GPU config candidate with its utility cached in sparse form.
struct Candidate {
    GpuConfig config;
    std::vector<std::pair<int, double>> util;  // (service index, fraction), sorted by index
    double util_sum = 0.0;
};

// (slot, size, service index, batch) per instance; identifies a config up to
// the dedup convention (equal-size instances are interchangeable).
using ConfigKey = std::vector<std::tuple<int, int, int, int>>;

/// Candidate configurations shared by the optimizers, indexed by service.
struct CandidatePool {
    int n_services = 0;
    std::vector<Candidate> items;
    std::vector<std::vector<int>> by_service;   // candidate indices touching service i
    std::vector<double> best_single_util;       // best single-service full-GPU utility per service
    std::set<ConfigKey> seen;

    bool contains_key(const ConfigKey& k) const { return seen.count(k) > 0; }
};

namespace detail {

struct SizeGroup {
    int size = 1;
    std::vector<Placement> placements;  // canonical slots for this size, ascending
};

// One canonical placement layout per distinct size multiset of the maximal
// partitions; slot-distinct layouts with equal sizes yield equal utilities.
inline std::vector<std::vector<SizeGroup>> canonical_size_multisets(const PartitionRuleSet& rules) {
    std::vector<std::vector<SizeGroup>> out;
    std::set<std::vector<int>> seen_multisets;
    for (const auto& part : enumerate_maximal_partitions(rules)) {
        std::vector<int> sizes;
        for (const auto& p : part.placements) sizes.push_back(p.slices);
        std::sort(sizes.begin(), sizes.end(), std::greater<>());
        if (!seen_multisets.insert(sizes).second) continue;
        std::map<int, SizeGroup, std::greater<>> groups;
        for (const auto& p : part.placements) {
            groups[p.slices].size = p.slices;
            groups[p.slices].placements.push_back(p);
        }
        std::vector<SizeGroup> gs;
        for (auto& [size, g] : groups) {
            std::sort(g.placements.begin(), g.placements.end());
            gs.push_back(std::move(g));
        }
        out.push_back(std::move(gs));
    }
    return out;
}

struct FeasibleEntry {
    bool ok = false;
    int batch = 1;
    double throughput = 0.0;
};

// feasibility[svc][size] under each service's latency ceiling.
inline std::vector<std::map<int, FeasibleEntry>> feasibility_table(std::span<const ServiceSpec> services,
                                                                   const ProfileStore& profiles) {
    std::vector<std::map<int, FeasibleEntry>> table(services.size());
    for (size_t i = 0; i < services.size(); ++i) {
        const ModelProfile& prof = profile_for(profiles, services[i].model_name);
        for (int size : kInstanceSlices) {
            auto e = select_entry(services[i], prof, size);
            if (e) table[i][size] = FeasibleEntry{true, e->first, e->second};
        }
    }
    return table;
}

struct EnumFilter {
    int max_mix = 2;
    int must_include = -1;                 // -1: unrestricted
    const std::set<int>* allowed = nullptr;  // co-services permitted next to must_include
};

inline ConfigKey key_of(const GpuConfig& cfg, std::span<const ServiceSpec> services) {
    ConfigKey k;
    for (const auto& inst : cfg.instances)
        k.emplace_back(inst.placement.start_slot, inst.placement.slices,
                       service_index(services, inst.service_id), inst.batch);
    std::sort(k.begin(), k.end());
    return k;
}

class ConfigEnumerator {
  public:
    ConfigEnumerator(std::span<const ServiceSpec> services, const ProfileStore& profiles,
                     const PartitionRuleSet& rules)
        : services_(services), multisets_(canonical_size_multisets(rules)),
          feasible_(feasibility_table(services, profiles)) {}

    // Emits every dedup-distinct assignment of services to each canonical size
    // multiset, honoring the filter, by appending Candidates to the pool.
    void emit(CandidatePool& pool, const ProfileStore& profiles, const EnumFilter& filter) const {
        for (const auto& groups : multisets_) {
            std::vector<std::vector<int>> chosen(groups.size());
            std::set<int> support;
            recurse(groups, 0, chosen, support, filter, pool, profiles);
        }
    }

  private:
    void recurse(const std::vector<SizeGroup>& groups, size_t gi, std::vector<std::vector<int>>& chosen,
                 std::set<int>& support, const EnumFilter& filter, CandidatePool& pool,
                 const ProfileStore& profiles) const {
        if (gi == groups.size()) {
            if (filter.must_include >= 0 && !support.count(filter.must_include)) return;
            materialize(groups, chosen, pool, profiles);
            return;
        }
        std::vector<int> seq;
        fill_group(groups, gi, 0, seq, chosen, support, filter, pool, profiles);
    }

    void fill_group(const std::vector<SizeGroup>& groups, size_t gi, int min_svc, std::vector<int>& seq,
                    std::vector<std::vector<int>>& chosen, std::set<int>& support, const EnumFilter& filter,
                    CandidatePool& pool, const ProfileStore& profiles) const {
        const SizeGroup& g = groups[gi];
        if (seq.size() == g.placements.size()) {
            chosen[gi] = seq;
            recurse(groups, gi + 1, chosen, support, filter, pool, profiles);
            return;
        }
        for (int svc = min_svc; svc < static_cast<int>(services_.size()); ++svc) {
            auto fe = feasible_[svc].find(g.size);
            if (fe == feasible_[svc].end()) continue;
            if (filter.allowed && svc != filter.must_include && !filter.allowed->count(svc)) continue;
            bool added = !support.count(svc);
            if (added && static_cast<int>(support.size()) >= filter.max_mix) continue;
            if (added) support.insert(svc);
            seq.push_back(svc);
            fill_group(groups, gi, svc, seq, chosen, support, filter, pool, profiles);
            seq.pop_back();
            if (added) support.erase(svc);
        }
    }

    void materialize(const std::vector<SizeGroup>& groups, const std::vector<std::vector<int>>& chosen,
                     CandidatePool& pool, const ProfileStore& profiles) const {
        GpuConfig cfg;
        for (size_t gi = 0; gi < groups.size(); ++gi) {
            const SizeGroup& g = groups[gi];
            for (size_t k = 0; k < g.placements.size(); ++k) {
                int svc = chosen[gi][k];
                const FeasibleEntry& fe = feasible_[svc].at(g.size);
                cfg.instances.push_back(AssignedInstance{g.placements[k], services_[svc].service_id, fe.batch});
            }
        }
        cfg.normalize();
        ConfigKey key = key_of(cfg, services_);
        if (!pool.seen.insert(key).second) return;

        Candidate cand;
        Utility u = utility_of(cfg, services_, profiles);
        for (size_t i = 0; i < u.values.size(); ++i)
            if (u.values[i] > 0.0) cand.util.emplace_back(static_cast<int>(i), u.values[i]);
        for (const auto& [idx, v] : cand.util) cand.util_sum += v;
        cand.config = std::move(cfg);

        int pos = static_cast<int>(pool.items.size());
        for (const auto& [idx, v] : cand.util) {
            pool.by_service[idx].push_back(pos);
            pool.best_single_util[idx] =
                cand.util.size() == 1 ? std::max(pool.best_single_util[idx], v) : pool.best_single_util[idx];
        }
        pool.items.push_back(std::move(cand));
    }

    std::span<const ServiceSpec> services_;
    std::vector<std::vector<SizeGroup>> multisets_;
    std::vector<std::map<int, FeasibleEntry>> feasible_;
};

}  // namespace detail

inline CandidatePool build_candidate_pool(std::span<const ServiceSpec> services, const ProfileStore& profiles,
                                          const PartitionRuleSet& rules, int max_mix) {
    CandidatePool pool;
    pool.n_services = static_cast<int>(services.size());
    pool.by_service.resize(services.size());
    pool.best_single_util.resize(services.size(), 0.0);
    if (services.empty()) return pool;
    detail::ConfigEnumerator en(services, profiles, rules);
    en.emit(pool, profiles, detail::EnumFilter{max_mix, -1, nullptr});
    return pool;
}

// Appends configs that mix `must_include` with services from `allowed`, up to
// max_mix distinct services, skipping configs already present.
inline void extend_candidate_pool(CandidatePool& pool, std::span<const ServiceSpec> services,
                                  const ProfileStore& profiles, const PartitionRuleSet& rules, int must_include,
                                  const std::set<int>& allowed, int max_mix) {
    detail::ConfigEnumerator en(services, profiles, rules);
    en.emit(pool, profiles, detail::EnumFilter{max_mix, must_include, &allowed});
}

/// All GPU configs mixing at most max_mix distinct services, one representative
/// per (size multiset, per-size service multiset).
inline std::vector<GpuConfig> enumerate_configs(std::span<const ServiceSpec> services,
                                                const ProfileStore& profiles, const PartitionRuleSet& rules,
                                                int max_mix) {
    if (max_mix < 1) throw PlanningError("enumerate_configs: max_mix must be >= 1");
    CandidatePool pool = build_candidate_pool(services, profiles, rules, max_mix);
    std::vector<GpuConfig> out;
    out.reserve(pool.items.size());
    for (auto& c : pool.items) out.push_back(std::move(c.config));
    return out;
}

}  // namespace migplan
