#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "migplan/sim.hpp"
#include "migplan/transition.hpp"

namespace migplan {

struct Topology {
    int gpus_per_machine = 8;
};

namespace planner_detail {

struct InstanceRef {
    std::string gpu;
    Placement placement;
    int batch = 1;
    double throughput = 0.0;
};

// Planner working state: the evolving cluster plus the serial action log with
// dependency edges and per-action capacity deltas (for stage scheduling).
struct Workspace {
    ClusterState state;
    std::vector<Action> actions;
    std::vector<std::vector<int>> deps;
    std::vector<std::pair<std::string, double>> cap_delta;  // (service, +/- rps); empty service = none
    const ProfileStore* profiles = nullptr;
    const PartitionRuleSet* rules = nullptr;
    std::map<std::string, std::string> service_model;
    std::vector<std::string> pool_order;  // old gpus in file order, then extras
    int allowed_extras = 0;
    int used_extras = 0;

    double thr_of(const std::string& svc, int size, int batch) const {
        const ProfileEntry* e = profile_for(*profiles, service_model.at(svc)).find(size, batch);
        if (!e)
            throw PlanningError("no profile entry for service '" + svc + "' size " + std::to_string(size) +
                                " batch " + std::to_string(batch));
        return e->throughput_rps;
    }

    int emit(Action a, std::vector<int> dep_idx) {
        std::pair<std::string, double> delta{"", 0.0};
        if (a.kind == ActionKind::Create) delta = {a.service, thr_of(a.service, a.placement.slices, a.batch)};
        if (a.kind == ActionKind::Delete) {
            const GpuState& g = state.at(a.gpu);
            auto it = g.live.find(a.placement);
            if (it == g.live.end())
                throw PlanningError("planner bug: deleting a non-live instance on gpu '" + a.gpu + "'");
            delta = {it->second.first, -thr_of(it->second.first, a.placement.slices, it->second.second)};
        }
        apply_action_inplace(state, a, *rules);  // keeps the working state = serial replay
        actions.push_back(std::move(a));
        deps.push_back(std::move(dep_idx));
        cap_delta.push_back(std::move(delta));
        return static_cast<int>(actions.size()) - 1;
    }

    struct Mark {
        ClusterState state;
        size_t n_actions;
        size_t n_pool;
        int used_extras;
    };
    Mark mark() const { return Mark{state, actions.size(), pool_order.size(), used_extras}; }
    void rollback(Mark m) {
        state = std::move(m.state);
        actions.resize(m.n_actions);
        deps.resize(m.n_actions);
        cap_delta.resize(m.n_actions);
        pool_order.resize(m.n_pool);
        used_extras = m.used_extras;
    }

    std::string fresh_extra() {
        if (used_extras >= allowed_extras)
            throw PlanningError("extra GPU budget exhausted (" + std::to_string(allowed_extras) + " allowed)");
        int k = used_extras;
        std::string id;
        do {
            id = "extra-" + std::to_string(k++);
        } while (state.index.count(id));
        ++used_extras;
        state.ensure(id);
        pool_order.push_back(id);
        return id;
    }
};

struct Spot {
    std::string gpu;
    Placement placement;
    std::vector<int> carve_deps;
};

// Where can a size-`slices` instance go? Tier 1: an already-carved idle slot.
// Tier 2: carve into untouched slot space. Tier 3: carve after retiring idle
// placements that are in the way. Tier 4: a fresh extra GPU. Within each tier,
// GPUs on `prefer_machine` come first, then pool order.
inline std::optional<Spot> find_spot(Workspace& ws, int slices, int prefer_machine,
                                     const std::set<std::string>& excluded) {
    auto pos_it = ws.rules->slot_positions.find(slices);
    if (pos_it == ws.rules->slot_positions.end()) return std::nullopt;

    std::vector<std::string> order;
    for (const auto& id : ws.pool_order)
        if (!excluded.count(id) && ws.state.at(id).machine == prefer_machine) order.push_back(id);
    for (const auto& id : ws.pool_order)
        if (!excluded.count(id) && ws.state.at(id).machine != prefer_machine) order.push_back(id);

    for (const auto& id : order) {  // tier 1
        const GpuState& g = ws.state.at(id);
        for (const auto& p : g.partition)
            if (p.slices == slices && g.is_idle(p)) return Spot{id, p, {}};
    }
    for (int tier = 2; tier <= 3; ++tier) {
        for (const auto& id : order) {
            GpuState& g = ws.state.at(id);
            std::vector<Placement> assigned;
            for (const auto& [p, sb] : g.live) assigned.push_back(p);
            for (int slot : pos_it->second) {
                Placement p{slices, slot};
                if (slot + slices > 7) continue;
                auto overlaps = [&](const Placement& q) {
                    return q.start_slot < p.start_slot + p.slices && p.start_slot < q.start_slot + q.slices;
                };
                if (std::any_of(assigned.begin(), assigned.end(), overlaps)) continue;
                if (tier == 2) {
                    std::vector<Placement> after = g.partition;
                    if (std::any_of(after.begin(), after.end(), overlaps)) continue;
                    after.push_back(p);
                    if (!is_legal_partition(after, *ws.rules)) continue;
                    int d = ws.emit(Action{ActionKind::Repartition, id, "", p, {}, {p}, "", 0}, {});
                    return Spot{id, p, {d}};
                }
                // tier 3: retire idle placements standing in the way
                std::vector<Placement> trial = assigned;
                trial.push_back(p);
                if (!is_legal_partition(trial, *ws.rules)) continue;
                std::vector<Placement> retire, keep;
                for (const auto& q : g.partition) {
                    if (!g.is_idle(q)) continue;
                    (overlaps(q) ? retire : keep).push_back(q);
                }
                std::vector<Placement> with_keep = assigned;
                with_keep.insert(with_keep.end(), keep.begin(), keep.end());
                with_keep.push_back(p);
                if (!is_legal_partition(with_keep, *ws.rules)) {
                    retire.insert(retire.end(), keep.begin(), keep.end());  // clear all idle space
                }
                if (retire.empty()) continue;  // tier 2 would have taken it
                std::sort(retire.begin(), retire.end());
                std::vector<int> carve;
                for (const auto& q : retire)
                    carve.push_back(ws.emit(Action{ActionKind::Repartition, id, "", q, {q}, {}, "", 0}, {}));
                carve.push_back(ws.emit(Action{ActionKind::Repartition, id, "", p, {}, {p}, "", 0}, {}));
                return Spot{id, p, std::move(carve)};
            }
        }
    }
    if (ws.used_extras < ws.allowed_extras) {  // tier 4
        std::string id = ws.fresh_extra();
        Placement p{slices, pos_it->second.front()};
        int d = ws.emit(Action{ActionKind::Repartition, id, "", p, {}, {p}, "", 0}, {});
        return Spot{id, p, {d}};
    }
    return std::nullopt;
}

struct ServiceExchange {
    std::string service_id;
    int demand_slices = 0;  // creation footprint, used for round ordering
    // per new instance: size, batch, throughput, paired victims
    struct NewInstance {
        int size = 0;
        int batch = 1;
        double throughput = 0.0;
        std::vector<InstanceRef> victims;
    };
    std::vector<NewInstance> creations;
    std::vector<InstanceRef> leftovers;
};

// Victims are the weakest old instances of each (service, size): lowest
// throughput first, then gpu id and slot for determinism.
inline std::vector<ServiceExchange> build_exchanges(const Deployment& old_dep, const Deployment& new_dep,
                                                    const Workspace& ws) {
    std::map<std::string, std::map<int, std::vector<InstanceRef>>> old_inst;   // svc -> size -> refs
    std::map<std::string, std::map<int, std::pair<int, int>>> counts;          // svc -> size -> (old, new)
    std::map<std::string, std::map<int, int>> new_batch;
    for (const auto& gpu : old_dep.gpus)
        for (const auto& inst : gpu.config.instances) {
            old_inst[inst.service_id][inst.placement.slices].push_back(
                InstanceRef{gpu.id, inst.placement, inst.batch,
                            ws.thr_of(inst.service_id, inst.placement.slices, inst.batch)});
            counts[inst.service_id][inst.placement.slices].first += 1;
        }
    for (const auto& gpu : new_dep.gpus)
        for (const auto& inst : gpu.config.instances) {
            counts[inst.service_id][inst.placement.slices].second += 1;
            new_batch[inst.service_id][inst.placement.slices] = inst.batch;
        }

    std::vector<ServiceExchange> out;
    for (auto& [svc, by_size] : counts) {
        ServiceExchange ex;
        ex.service_id = svc;
        std::vector<std::pair<int, int>> added;  // (size, batch)
        std::vector<InstanceRef> removed;
        for (auto it = by_size.rbegin(); it != by_size.rend(); ++it) {  // sizes descending
            int size = it->first;
            auto [o, n] = it->second;
            for (int k = 0; k < n - o; ++k) added.emplace_back(size, new_batch[svc][size]);
            if (o > n) {
                auto& refs = old_inst[svc][size];
                std::sort(refs.begin(), refs.end(), [](const InstanceRef& a, const InstanceRef& b) {
                    return std::tie(a.throughput, a.gpu, a.placement.start_slot) <
                           std::tie(b.throughput, b.gpu, b.placement.start_slot);
                });
                for (int k = 0; k < o - n; ++k) removed.push_back(refs[k]);
            }
        }
        if (added.empty() && removed.empty()) continue;

        std::vector<double> new_thr, rem_thr;
        for (const auto& [size, batch] : added) new_thr.push_back(ws.thr_of(svc, size, batch));
        for (const auto& r : removed) rem_thr.push_back(r.throughput);
        auto [pairs, leftovers] = detail::pair_by_throughput(new_thr, rem_thr);

        for (size_t ni = 0; ni < added.size(); ++ni) {
            ServiceExchange::NewInstance c;
            c.size = added[ni].first;
            c.batch = added[ni].second;
            c.throughput = new_thr[ni];
            for (size_t ri : pairs[ni]) c.victims.push_back(removed[ri]);
            ex.creations.push_back(std::move(c));
            ex.demand_slices += added[ni].first;
        }
        for (size_t ri : leftovers) ex.leftovers.push_back(removed[ri]);
        out.push_back(std::move(ex));
    }
    std::sort(out.begin(), out.end(), [](const ServiceExchange& a, const ServiceExchange& b) {
        return std::tie(b.demand_slices, a.service_id) < std::tie(a.demand_slices, b.service_id);
    });
    return out;
}

// Exchange phase for one service: create each new instance before deleting the
// removals it pairs with; leftovers go last. Returns false (after rolling
// back) when a creation cannot be placed within the GPU pool.
inline bool emit_service_exchange(Workspace& ws, const ServiceExchange& ex) {
    auto m = ws.mark();
    std::vector<int> pair_actions;
    try {
        // creations ordered by descending throughput, matching the pairing
        std::vector<size_t> order(ex.creations.size());
        for (size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
            return ex.creations[a].throughput > ex.creations[b].throughput;
        });
        for (size_t ci : order) {
            const auto& c = ex.creations[ci];
            auto spot = find_spot(ws, c.size, -1, {});
            if (!spot) throw PlanningError("no room for a " + std::to_string(c.size) + "/7 instance");
            int create_idx = ws.emit(Action{ActionKind::Create, spot->gpu, "", spot->placement, {}, {},
                                            ex.service_id, c.batch},
                                     spot->carve_deps);
            pair_actions.push_back(create_idx);
            for (const auto& v : c.victims) {
                int d = ws.emit(Action{ActionKind::Delete, v.gpu, "", v.placement, {}, {}, ex.service_id, v.batch},
                                {create_idx});
                pair_actions.push_back(d);
            }
        }
        for (const auto& v : ex.leftovers)
            ws.emit(Action{ActionKind::Delete, v.gpu, "", v.placement, {}, {}, ex.service_id, v.batch},
                    pair_actions);
        return true;
    } catch (const PlanningError&) {
        ws.rollback(std::move(m));
        return false;
    }
}

// ---- compact phase ---------------------------------------------------------

// Backtracking search for a legal placement layout of `sizes` (descending)
// that contains every placement in `forced`.
inline bool place_multiset(const std::vector<int>& sizes, size_t i, std::vector<Placement>& cur,
                           const PartitionRuleSet& rules, std::vector<Placement>& out) {
    if (i == sizes.size()) {
        out = cur;
        return true;
    }
    auto pos = rules.slot_positions.find(sizes[i]);
    if (pos == rules.slot_positions.end()) return false;
    for (int slot : pos->second) {
        Placement p{sizes[i], slot};
        if (slot + sizes[i] > 7) continue;
        if (std::find(cur.begin(), cur.end(), p) != cur.end()) continue;
        cur.push_back(p);
        if (is_legal_partition(cur, rules) && place_multiset(sizes, i + 1, cur, rules, out)) return true;
        cur.pop_back();
    }
    return false;
}

inline bool embed_partition(const std::vector<int>& size_multiset, const std::vector<Placement>& forced,
                            const PartitionRuleSet& rules, std::vector<Placement>& out) {
    std::vector<int> remaining = size_multiset;  // descending
    for (const auto& f : forced) {
        auto it = std::find(remaining.begin(), remaining.end(), f.slices);
        if (it == remaining.end()) return false;
        remaining.erase(it);
    }
    std::vector<Placement> cur = forced;
    if (!is_legal_partition(cur, rules)) return false;
    return place_multiset(remaining, 0, cur, rules, out);
}

struct CompactTarget {
    GpuConfig config;
    std::map<std::pair<std::string, int>, int> want;  // (service, size) -> count
    int total_slices = 0;
};

// Slice-weighted overlap between a GPU's live instances and a target config.
inline int overlap_slices(const GpuState& g, const CompactTarget& t) {
    std::map<std::pair<std::string, int>, int> have;
    for (const auto& [p, sb] : g.live) have[{sb.first, p.slices}] += 1;
    int s = 0;
    for (const auto& [key, want] : t.want) {
        auto it = have.find(key);
        if (it != have.end()) s += std::min(want, it->second) * key.second;
    }
    return s;
}

// Defragmentation: repeatedly pick the most occupied unfinalized GPU, realize
// the best-matching remaining target config on it (moving blockers to staging
// space, reshaping its free region, migrating the missing instances in), then
// lock it. Migrations prefer the same machine.
inline void emit_compaction(Workspace& ws, const Deployment& new_dep) {
    std::vector<CompactTarget> targets;
    for (const auto& gpu : new_dep.gpus) {
        CompactTarget t;
        t.config = gpu.config;
        for (const auto& inst : gpu.config.instances) {
            t.want[{inst.service_id, inst.placement.slices}] += 1;
            t.total_slices += inst.placement.slices;
        }
        targets.push_back(std::move(t));
    }
    std::sort(targets.begin(), targets.end(), [](const CompactTarget& a, const CompactTarget& b) {
        if (a.total_slices != b.total_slices) return a.total_slices > b.total_slices;
        return a.config < b.config;
    });

    std::set<std::string> finalized;
    std::vector<bool> done(targets.size(), false);
    size_t remaining = targets.size();

    while (remaining > 0) {
        // most occupied unfinalized GPU first
        std::string g_id;
        int best_occ = -1;
        for (const auto& id : ws.pool_order) {
            if (finalized.count(id)) continue;
            const GpuState& g = ws.state.at(id);
            int occ = 0;
            for (const auto& [p, sb] : g.live) occ += p.slices;
            if (occ > best_occ) {
                best_occ = occ;
                g_id = id;
            }
        }
        if (g_id.empty()) throw PlanningError("planner bug: no gpu left to finalize");

        size_t ti = targets.size();
        int best_ov = -1;
        for (size_t i = 0; i < targets.size(); ++i) {
            if (done[i]) continue;
            int ov = overlap_slices(ws.state.at(g_id), targets[i]);
            if (ov > best_ov) {
                best_ov = ov;
                ti = i;
            }
        }
        const CompactTarget& target = targets[ti];

        // kept instances: per (service, size), the highest-slot matches stay;
        // low slots become blockers so that migration source resolution
        // (lowest slot first) moves exactly the blockers.
        GpuState& g = ws.state.at(g_id);
        std::map<std::pair<std::string, int>, std::vector<Placement>> groups;
        for (const auto& [p, sb] : g.live) groups[{sb.first, p.slices}].push_back(p);
        std::vector<Placement> kept;
        std::vector<std::pair<Placement, std::pair<std::string, int>>> blockers;  // placement, (svc, batch)
        for (auto& [key, places] : groups) {
            std::sort(places.begin(), places.end());
            auto it = target.want.find(key);
            int keep_n = it == target.want.end() ? 0 : std::min<int>(it->second, places.size());
            for (size_t k = 0; k < places.size(); ++k) {
                if (static_cast<int>(places.size() - k) <= keep_n)
                    kept.push_back(places[k]);
                else
                    blockers.emplace_back(places[k], std::pair{key.first, g.live.at(places[k]).second});
            }
        }

        // find an embedding; demote kept instances (smallest, lowest slot first)
        // until the target's size multiset fits around them
        std::vector<int> sizes;
        for (const auto& inst : target.config.instances) sizes.push_back(inst.placement.slices);
        std::sort(sizes.begin(), sizes.end(), std::greater<>());
        std::sort(kept.begin(), kept.end(), [](const Placement& a, const Placement& b) {
            return std::tie(a.slices, a.start_slot) < std::tie(b.slices, b.start_slot);
        });
        std::vector<Placement> layout;
        while (!embed_partition(sizes, kept, *ws.rules, layout)) {
            if (kept.empty()) throw PlanningError("planner bug: target partition is not placeable");
            Placement demoted = kept.front();
            kept.erase(kept.begin());
            blockers.emplace_back(demoted,
                                  std::pair{ws.state.at(g_id).live.at(demoted).first,
                                            ws.state.at(g_id).live.at(demoted).second});
        }
        std::sort(blockers.begin(), blockers.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });

        // blockers out
        int here = ws.state.at(g_id).machine;
        for (const auto& [bp, svc_batch] : blockers) {
            std::set<std::string> excluded = finalized;
            excluded.insert(g_id);
            auto spot = find_spot(ws, bp.slices, here, excluded);
            if (!spot)
                throw PlanningError("compaction: no staging room for a " + std::to_string(bp.slices) +
                                    "/7 instance off gpu '" + g_id + "'");
            bool local = ws.state.at(spot->gpu).machine == here;
            ws.emit(Action{local ? ActionKind::MigrateLocal : ActionKind::MigrateRemote, g_id, spot->gpu,
                           spot->placement, {}, {}, svc_batch.first, svc_batch.second},
                    spot->carve_deps);
        }

        // reshape g's free region to the target layout
        {
            GpuState& gg = ws.state.at(g_id);
            std::vector<Placement> removes, adds;
            for (const auto& p : gg.partition)
                if (gg.is_idle(p) && std::find(layout.begin(), layout.end(), p) == layout.end())
                    removes.push_back(p);
            for (const auto& p : layout)
                if (!gg.in_partition(p)) adds.push_back(p);
            std::sort(removes.begin(), removes.end());
            std::sort(adds.begin(), adds.end());
            for (const auto& p : removes)
                ws.emit(Action{ActionKind::Repartition, g_id, "", p, {p}, {}, "", 0}, {});
            for (const auto& p : adds)
                ws.emit(Action{ActionKind::Repartition, g_id, "", p, {}, {p}, "", 0}, {});
        }

        // match the target's instances to the layout and migrate the missing in
        std::map<std::pair<std::string, int>, int> missing = target.want;
        for (const auto& p : kept) {
            auto svc = ws.state.at(g_id).live.at(p).first;
            missing[{svc, p.slices}] -= 1;
        }
        std::vector<Placement> free_slots;
        for (const auto& p : layout)
            if (std::find(kept.begin(), kept.end(), p) == kept.end()) free_slots.push_back(p);
        std::sort(free_slots.begin(), free_slots.end(),
                  [](const Placement& a, const Placement& b) {
                      return std::tie(b.slices, b.start_slot) < std::tie(a.slices, a.start_slot);
                  });  // big slots first; deterministic
        for (const auto& slot : free_slots) {
            // pick which (service,size) fills this slot: sorted map order
            std::string svc;
            for (auto& [key, n] : missing)
                if (n > 0 && key.second == slot.slices) {
                    svc = key.first;
                    n -= 1;
                    break;
                }
            if (svc.empty()) throw PlanningError("planner bug: layout slot without a matching target instance");
            // source: same machine preferred, then pool order, lowest slot
            std::string src_gpu;
            Placement src_p{};
            int src_batch = 0;
            for (int pass = 0; pass < 2 && src_gpu.empty(); ++pass) {
                for (const auto& id : ws.pool_order) {
                    if (id == g_id || finalized.count(id)) continue;
                    const GpuState& h = ws.state.at(id);
                    bool pref = h.machine == here;
                    if (pass == 0 && !pref) continue;
                    if (pass == 1 && pref) continue;
                    for (const auto& [p, sb] : h.live)
                        if (sb.first == svc && p.slices == slot.slices) {
                            src_gpu = id;
                            src_p = p;
                            src_batch = sb.second;
                            break;
                        }
                    if (!src_gpu.empty()) break;
                }
            }
            if (src_gpu.empty())
                throw PlanningError("planner bug: no source instance for service '" + svc + "' size " +
                                    std::to_string(slot.slices));
            bool local = ws.state.at(src_gpu).machine == here;
            ws.emit(Action{local ? ActionKind::MigrateLocal : ActionKind::MigrateRemote, src_gpu, g_id, slot,
                           {}, {}, svc, src_batch},
                    {});
        }

        finalized.insert(g_id);
        done[ti] = true;
        --remaining;
    }

    for (const auto& id : ws.pool_order)
        if (!finalized.count(id) && ws.state.at(id).busy())
            throw PlanningError("planner bug: live instances remain outside the target deployment");
}

// ---- stage scheduling ------------------------------------------------------

// Packs the serial action list into stages of GPU-disjoint actions. An action
// lands after all its dependencies (explicit edges plus the previous action on
// each GPU it touches). Deletes are additionally held back until the stage's
// worst case (all deletes complete, no creates yet) keeps every service at or
// above its guard.
inline std::vector<std::vector<Action>> schedule_stages(const std::vector<Action>& actions,
                                                        const std::vector<std::vector<int>>& deps,
                                                        const std::vector<std::pair<std::string, double>>& deltas,
                                                        std::map<std::string, double> capacity,
                                                        const std::map<std::string, double>& guard) {
    std::vector<int> stage_of(actions.size(), -1);
    std::vector<std::set<std::string>> stage_gpus;
    std::vector<std::map<std::string, double>> stage_net, stage_del;
    std::map<std::string, int> last_on_gpu;

    auto ensure_stage = [&](size_t s) {
        while (stage_gpus.size() <= s) {
            stage_gpus.emplace_back();
            stage_net.emplace_back();
            stage_del.emplace_back();
        }
    };

    for (size_t i = 0; i < actions.size(); ++i) {
        const Action& a = actions[i];
        auto touched = a.touched_gpus();
        int s_min = 0;
        for (int d : deps[i]) s_min = std::max(s_min, stage_of[d] + 1);
        for (const auto& g : touched) {
            auto it = last_on_gpu.find(g);
            if (it != last_on_gpu.end()) s_min = std::max(s_min, stage_of[it->second] + 1);
        }
        const auto& [svc, delta] = deltas[i];
        size_t s = static_cast<size_t>(s_min);
        for (;; ++s) {
            ensure_stage(s);
            bool conflict = false;
            for (const auto& g : touched)
                if (stage_gpus[s].count(g)) conflict = true;
            if (conflict) continue;
            if (delta < 0.0) {
                // worst case at stage t >= s for this service
                double run = capacity.count(svc) ? capacity.at(svc) : 0.0;
                double floor = guard.count(svc) ? guard.at(svc) : 0.0;
                bool ok = true;
                for (size_t t = 0; t < stage_gpus.size() && ok; ++t) {
                    double net_t = stage_net[t].count(svc) ? stage_net[t].at(svc) : 0.0;
                    double del_t = stage_del[t].count(svc) ? stage_del[t].at(svc) : 0.0;
                    if (t >= s) del_t += (t == s ? -delta : 0.0);
                    if (t >= s) {
                        double worst = run - del_t;
                        if (worst < floor - 1e-6) ok = false;
                    }
                    run += net_t + (t == s ? delta : 0.0);
                }
                if (!ok) continue;
            }
            break;
        }
        stage_of[i] = static_cast<int>(s);
        for (const auto& g : touched) {
            stage_gpus[s].insert(g);
            last_on_gpu[g] = static_cast<int>(i);
        }
        if (!svc.empty()) {
            stage_net[s][svc] += delta;
            if (delta < 0.0) stage_del[s][svc] += -delta;
        }
    }

    std::vector<std::vector<Action>> stages(stage_gpus.size());
    for (size_t i = 0; i < actions.size(); ++i) stages[stage_of[i]].push_back(actions[i]);
    while (!stages.empty() && stages.back().empty()) stages.pop_back();
    return stages;
}

inline TransitionPlan plan_transition_impl(const Deployment& old_dep, const Deployment& new_dep,
                                           std::span<const ServiceSpec> old_slos,
                                           std::span<const ServiceSpec> new_slos, const ProfileStore& profiles,
                                           const PartitionRuleSet& rules, int extra_gpu_budget, Topology topo) {
    Workspace ws;
    ws.profiles = &profiles;
    ws.rules = &rules;
    ws.state = cluster_from_deployment(old_dep, topo.gpus_per_machine);
    for (const auto& s : old_slos) ws.service_model[s.service_id] = s.model_name;
    for (const auto& s : new_slos) ws.service_model[s.service_id] = s.model_name;
    for (const auto& gpu : old_dep.gpus) ws.pool_order.push_back(gpu.id);
    int growth = std::max(0, static_cast<int>(new_dep.gpus.size()) - static_cast<int>(old_dep.gpus.size()));
    ws.allowed_extras = growth + extra_gpu_budget;

    TransitionGuard guard = TransitionGuard::from_slos(old_slos, new_slos);
    std::map<std::string, double> initial_cap = capacity_of(ws.state, profiles, guard.service_model);

    // exchange phase, in rounds when the budget is tight
    std::vector<planner_detail::ServiceExchange> pending = build_exchanges(old_dep, new_dep, ws);
    while (!pending.empty()) {
        std::vector<planner_detail::ServiceExchange> deferred;
        for (auto& ex : pending) {
            if (!emit_service_exchange(ws, ex)) deferred.push_back(std::move(ex));
        }
        if (deferred.size() == pending.size())
            throw PlanningError("exchange phase cannot place new instances within the extra GPU budget");
        pending = std::move(deferred);
    }

    emit_compaction(ws, new_dep);

    TransitionPlan plan;
    plan.extra_gpu_budget = extra_gpu_budget;
    plan.stages = schedule_stages(ws.actions, ws.deps, ws.cap_delta, initial_cap, guard.min_required);
    return plan;
}

}  // namespace planner_detail

/// Exchange-and-compact transition planning. The exchange phase resizes each
/// service's instances with paired create-before-delete actions (splitting
/// services into rounds when the extra GPU budget is tight); the compact phase
/// repartitions and migrates instances until the cluster matches the new
/// deployment. Throughput of every service stays at or above
/// min(old requirement, new requirement) throughout.
inline TransitionPlan plan_transition(const Deployment& old_dep, const Deployment& new_dep,
                                      std::span<const ServiceSpec> old_slos,
                                      std::span<const ServiceSpec> new_slos, const ProfileStore& profiles,
                                      const PartitionRuleSet& rules, int extra_gpu_budget, Topology topo = {}) {
    validate_deployment(old_dep, old_slos, profiles, rules);
    validate_deployment(new_dep, new_slos, profiles, rules);
    if (!is_satisfied(completion_of(old_dep, old_slos, profiles)))
        throw PlanningError("old deployment does not satisfy its SLOs");
    if (!is_satisfied(completion_of(new_dep, new_slos, profiles)))
        throw PlanningError("new deployment does not satisfy its SLOs");
    if (extra_gpu_budget < 0) throw PlanningError("extra GPU budget must be non-negative");

    try {
        return planner_detail::plan_transition_impl(old_dep, new_dep, old_slos, new_slos, profiles, rules,
                                                    extra_gpu_budget, topo);
    } catch (const PlanningError& e) {
        // find the minimum budget that works, to make the error actionable
        int lo = extra_gpu_budget + 1;
        int hi = static_cast<int>(old_dep.gpus.size() + 7 * new_dep.gpus.size()) + 8;
        auto feasible = [&](int b) {
            try {
                planner_detail::plan_transition_impl(old_dep, new_dep, old_slos, new_slos, profiles, rules, b,
                                                     topo);
                return true;
            } catch (const PlanningError&) {
                return false;
            }
        };
        if (!feasible(hi)) throw;
        while (lo < hi) {
            int mid = lo + (hi - lo) / 2;
            if (feasible(mid))
                hi = mid;
            else
                lo = mid + 1;
        }
        throw PlanningError(std::string(e.what()) + " (minimum feasible extra GPU budget: " +
                            std::to_string(lo) + ")");
    }
}

}  // namespace migplan
