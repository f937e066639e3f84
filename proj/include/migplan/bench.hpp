#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "migplan/config_enum.hpp"
#include "migplan/greedy.hpp"

namespace migplan {

enum class BaselineKind { WholeGpu, SevenSlices, Mix421 };  // A100-7/7, A100-7x1/7, A100-MIX

inline const char* baseline_name(BaselineKind k) {
    switch (k) {
        case BaselineKind::WholeGpu: return "A100-7/7";
        case BaselineKind::SevenSlices: return "A100-7x1/7";
        case BaselineKind::Mix421: return "A100-MIX";
    }
    return "?";
}

namespace bench_detail {

inline std::pair<int, double> entry_or_throw(const ServiceSpec& svc, const ProfileStore& profiles, int size) {
    auto e = select_entry(svc, profile_for(profiles, svc.model_name), size);
    if (!e)
        throw PlanningError("service '" + svc.service_id + "' is infeasible on a " + std::to_string(size) +
                            "/7 instance under its latency ceiling");
    return *e;
}

inline int ceil_div_pos(double need, double per) {
    return static_cast<int>(std::ceil(need / per - 1e-9));
}

}  // namespace bench_detail

/// Static-partition baselines. 7/7 and MIX dedicate whole GPUs to one service;
/// 7x1/7 packs 1/7 instances of any services seven to a GPU.
inline Deployment baseline(BaselineKind kind, std::span<const ServiceSpec> services,
                           const ProfileStore& profiles) {
    std::vector<GpuConfig> configs;
    switch (kind) {
        case BaselineKind::WholeGpu: {
            for (const auto& svc : services) {
                auto [batch, thr] = bench_detail::entry_or_throw(svc, profiles, 7);
                int n = bench_detail::ceil_div_pos(svc.required_rps, thr);
                for (int k = 0; k < n; ++k)
                    configs.push_back(
                        GpuConfig{{AssignedInstance{Placement{7, 0}, svc.service_id, batch}}});
            }
            break;
        }
        case BaselineKind::SevenSlices: {
            GpuConfig cur;
            int slot = 0;
            for (const auto& svc : services) {
                auto [batch, thr] = bench_detail::entry_or_throw(svc, profiles, 1);
                int n = bench_detail::ceil_div_pos(svc.required_rps, thr);
                for (int k = 0; k < n; ++k) {
                    cur.instances.push_back(AssignedInstance{Placement{1, slot++}, svc.service_id, batch});
                    if (slot == 7) {
                        configs.push_back(std::move(cur));
                        cur = GpuConfig{};
                        slot = 0;
                    }
                }
            }
            if (!cur.instances.empty()) configs.push_back(std::move(cur));
            break;
        }
        case BaselineKind::Mix421: {
            for (const auto& svc : services) {
                auto [b4, t4] = bench_detail::entry_or_throw(svc, profiles, 4);
                auto [b2, t2] = bench_detail::entry_or_throw(svc, profiles, 2);
                auto [b1, t1] = bench_detail::entry_or_throw(svc, profiles, 1);
                int n = bench_detail::ceil_div_pos(svc.required_rps, t4 + t2 + t1);
                for (int k = 0; k < n; ++k)
                    configs.push_back(GpuConfig{{AssignedInstance{Placement{4, 0}, svc.service_id, b4},
                                                 AssignedInstance{Placement{2, 4}, svc.service_id, b2},
                                                 AssignedInstance{Placement{1, 6}, svc.service_id, b1}}});
            }
            break;
        }
    }
    return make_deployment(std::move(configs));
}

/// GPU lower bound ignoring the partition rules: every service uses its most
/// slice-efficient feasible instance size, fractional slices allowed.
inline int lower_bound(std::span<const ServiceSpec> services, const ProfileStore& profiles) {
    if (services.empty()) return 0;
    double total_slices = 0.0;
    for (const auto& svc : services) {
        const ModelProfile& prof = profile_for(profiles, svc.model_name);
        double best_eff = 0.0;
        for (int size : kInstanceSlices) {
            auto e = select_entry(svc, prof, size);
            if (e) best_eff = std::max(best_eff, e->second / size);
        }
        if (best_eff <= 0.0)
            throw PlanningError("service '" + svc.service_id + "' has no feasible instance size");
        total_slices += svc.required_rps / best_eff;
    }
    return static_cast<int>(std::ceil(total_slices / 7.0 - 1e-9));
}

enum class Distribution { Normal, Lognormal };

/// A generated workload: the services plus the parameters that produced them.
struct WorkloadSpec {
    std::vector<ServiceSpec> services;
    Distribution dist = Distribution::Lognormal;
    double param_mu = 0.0;
    double param_sigma = 0.0;
    double latency_ms = 100.0;
    uint64_t seed = 0;
};

/// Draws n services over the available model profiles with requirements from
/// the given distribution (non-positive draws are resampled). Deterministic
/// under the seed.
inline WorkloadSpec gen_workload(int n, Distribution dist, double mu, double sigma, double latency_ms,
                                 uint64_t seed, const ProfileStore& profiles) {
    if (n < 1) throw PlanningError("gen_workload: n must be >= 1");
    if (profiles.empty()) throw PlanningError("gen_workload: no model profiles loaded");
    std::vector<std::string> models;
    for (const auto& [name, p] : profiles) models.push_back(name);

    WorkloadSpec w;
    w.dist = dist;
    w.param_mu = mu;
    w.param_sigma = sigma;
    w.latency_ms = latency_ms;
    w.seed = seed;
    Rng rng(mix_seed(seed, 0x776b6c64));
    for (int i = 0; i < n; ++i) {
        ServiceSpec s;
        char buf[16];
        std::snprintf(buf, sizeof buf, "svc-%03d", i);
        s.service_id = buf;
        s.model_name = models[pick_index(rng, models.size())];
        double draw = 0.0;
        do {
            draw = dist == Distribution::Normal ? normal_sample(rng, mu, sigma)
                                                : lognormal_sample(rng, mu, sigma);
        } while (!(draw > 0.0));
        s.required_rps = draw;
        s.max_p90_ms = latency_ms;
        w.services.push_back(std::move(s));
    }
    validate_services(w.services, profiles);
    return w;
}

/// Exhaustive minimum-GPU search over config multisets; the test oracle for
/// small instances. Returns nothing when the optimum exceeds `cap`.
inline std::optional<Deployment> brute_force_optimum(std::span<const ServiceSpec> services,
                                                     const ProfileStore& profiles, const PartitionRuleSet& rules,
                                                     int cap, long long node_budget = 20'000'000) {
    if (services.empty()) return make_deployment({});
    int max_mix = std::min<int>(static_cast<int>(services.size()), 7);
    CandidatePool pool = build_candidate_pool(services, profiles, rules, max_mix);

    // best utility any config gives each service, for the admissible bound
    std::vector<double> best_any(services.size(), 0.0);
    for (const auto& c : pool.items)
        for (const auto& [svc, u] : c.util) best_any[svc] = std::max(best_any[svc], u);
    for (size_t i = 0; i < services.size(); ++i)
        if (best_any[i] <= 0.0) throw PlanningError("oracle: service cannot be served by any config");

    long long nodes = 0;
    std::vector<int> chosen;
    std::vector<int> best;
    bool found = false;

    auto bound = [&](const CompletionRates& comp) {
        int need = 0;
        for (size_t i = 0; i < comp.values.size(); ++i) {
            double residual = 1.0 - comp.values[i];
            if (residual > kSatisfyEps)
                need = std::max(need, static_cast<int>(std::ceil(residual / best_any[i] - 1e-12)));
        }
        return need;
    };

    std::function<bool(int, int, const CompletionRates&)> dfs = [&](int from, int depth_left,
                                                                    const CompletionRates& comp) -> bool {
        if (++nodes > node_budget)
            throw PlanningError("oracle: node budget exceeded; shrink the instance or raise the budget");
        if (is_satisfied(comp)) {
            best = chosen;
            found = true;
            return true;
        }
        if (depth_left == 0 || bound(comp) > depth_left) return false;
        for (int i = from; i < static_cast<int>(pool.items.size()); ++i) {
            if (score(pool.items[i], comp) <= 0.0) continue;
            CompletionRates next = comp;
            for (const auto& [svc, u] : pool.items[i].util) next.values[svc] += u;
            chosen.push_back(i);
            if (dfs(i, depth_left - 1, next)) return true;
            chosen.pop_back();
        }
        return false;
    };

    CompletionRates zero = zero_completion(services.size());
    for (int depth = 0; depth <= cap; ++depth) {
        chosen.clear();
        if (dfs(0, depth, zero)) break;
    }
    if (!found) return std::nullopt;
    std::vector<GpuConfig> configs;
    for (int i : best) configs.push_back(pool.items[i].config);
    return make_deployment(std::move(configs));
}

struct CostRow {
    std::string name;
    int gpus = 0;
    double price_per_gpu_hour = 0.0;
    double cost = 0.0;
    double normalized = 0.0;  // cheapest = 1.0
};

/// Normalized hourly cost per configuration, cheapest pinned to 1.0.
inline std::vector<CostRow> cost_report(const std::vector<std::pair<std::string, int>>& gpu_counts,
                                        const std::map<std::string, double>& price_per_gpu_hour) {
    std::vector<CostRow> rows;
    double cheapest = 0.0;
    for (const auto& [name, gpus] : gpu_counts) {
        auto it = price_per_gpu_hour.find(name);
        if (it == price_per_gpu_hour.end()) throw PlanningError("no price for configuration '" + name + "'");
        if (it->second <= 0.0) throw PlanningError("price for '" + name + "' must be positive");
        CostRow r;
        r.name = name;
        r.gpus = gpus;
        r.price_per_gpu_hour = it->second;
        r.cost = gpus * it->second;
        rows.push_back(r);
        cheapest = cheapest == 0.0 ? r.cost : std::min(cheapest, r.cost);
    }
    for (auto& r : rows) r.normalized = cheapest > 0.0 ? r.cost / cheapest : 0.0;
    return rows;
}

}  // namespace migplan
