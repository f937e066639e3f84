#pragma once

#include <functional>
#include <set>
#include <span>
#include <vector>

#include "migplan/config_enum.hpp"
#include "migplan/core.hpp"

namespace migplan {

/// Everything an optimizer procedure needs: the workload, the rules, and the
/// shared candidate pool (configs mixing at most 2 services). Owns its copies
/// of the services and rules; only the profile store must outlive it.
struct PlanContext {
    std::vector<ServiceSpec> services;
    const ProfileStore* profiles = nullptr;
    PartitionRuleSet rules;
    CandidatePool pool;
};

inline PlanContext make_plan_context(std::span<const ServiceSpec> services, const ProfileStore& profiles,
                                     const PartitionRuleSet& rules, int max_mix = 2) {
    PlanContext ctx;
    ctx.services.assign(services.begin(), services.end());
    ctx.profiles = &profiles;
    ctx.rules = rules;
    ctx.pool = build_candidate_pool(ctx.services, profiles, rules, max_mix);
    return ctx;
}

// Heuristic score: sum over services of max(0, 1 - c_i) * u_i. Satisfied
// services contribute nothing, so a config serving only satisfied services
// scores exactly zero.
inline double score(const Candidate& cand, const CompletionRates& comp) {
    double s = 0.0;
    for (const auto& [idx, u] : cand.util) {
        double need = 1.0 - comp.values[idx];
        if (need > 0.0) s += need * u;
    }
    return s;
}

inline double score(const Utility& util, const CompletionRates& comp) {
    if (util.values.size() != comp.values.size())
        throw PlanningError("score: utility/completion dimension mismatch");
    double s = 0.0;
    for (size_t i = 0; i < util.values.size(); ++i) {
        double need = 1.0 - comp.values[i];
        if (need > 0.0) s += need * util.values[i];
    }
    return s;
}

inline double score(const GpuConfig& config, const CompletionRates& comp,
                    std::span<const ServiceSpec> services, const ProfileStore& profiles) {
    return score(utility_of(config, services, profiles), comp);
}

// Total order used to break score ties: higher raw utility first, then the
// lexicographically smallest config.
inline bool candidate_preferred(const Candidate& a, double score_a, const Candidate& b, double score_b) {
    if (score_a != score_b) return score_a > score_b;
    if (a.util_sum != b.util_sum) return a.util_sum > b.util_sum;
    return a.config < b.config;
}

namespace detail {

// The base pool plus configs added when services become almost satisfied.
struct WorkingSet {
    const CandidatePool* base = nullptr;
    CandidatePool extra;

    explicit WorkingSet(const CandidatePool& pool) : base(&pool) {
        extra.n_services = pool.n_services;
        extra.by_service.resize(pool.by_service.size());
        extra.best_single_util.resize(pool.best_single_util.size(), 0.0);
        extra.seen = pool.seen;
    }
    const Candidate& at(size_t i) const {
        return i < base->items.size() ? base->items[i] : extra.items[i - base->items.size()];
    }
    size_t size() const { return base->items.size() + extra.items.size(); }
};

}  // namespace detail

/// The fast optimizer procedure: repeatedly pick the highest-scoring config and
/// apply its utility until every completion rate reaches 100%. Starts from
/// configs mixing at most 2 services; once a service's residual need drops
/// below its best single-service full-GPU utility, configs mixing it with up
/// to 4 of the still-unsatisfied services are added to the set.
inline std::vector<GpuConfig> fast_algo(const CompletionRates& comp, const PlanContext& ctx,
                                        std::function<void(int, const Candidate&, double, const CompletionRates&)>
                                            trace = nullptr) {
    if (comp.values.size() != ctx.services.size())
        throw PlanningError("fast_algo: completion vector length mismatch");
    std::vector<GpuConfig> out;
    CompletionRates cur = comp;
    if (is_satisfied(cur)) return out;

    detail::WorkingSet ws(ctx.pool);
    std::vector<bool> almost(ctx.services.size(), false);

    auto maybe_extend = [&] {
        std::set<int> unsat;
        for (size_t i = 0; i < cur.values.size(); ++i)
            if (cur.values[i] < 1.0 - kSatisfyEps) unsat.insert(static_cast<int>(i));
        for (int i : unsat) {
            if (almost[i]) continue;
            double need = 1.0 - cur.values[i];
            if (need < ctx.pool.best_single_util[i]) {
                almost[i] = true;
                extend_candidate_pool(ws.extra, ctx.services, *ctx.profiles, ctx.rules, i, unsat, 4);
            }
        }
    };
    maybe_extend();

    int iter = 0;
    while (!is_satisfied(cur)) {
        int best = -1;
        double best_score = 0.0;
        for (size_t i = 0; i < ws.size(); ++i) {
            const Candidate& c = ws.at(i);
            double s = score(c, cur);
            if (s <= 0.0) continue;
            if (best < 0 || candidate_preferred(c, s, ws.at(best), best_score)) {
                best = static_cast<int>(i);
                best_score = s;
            }
        }
        if (best < 0)
            throw PlanningError("fast_algo: no config with positive score while services remain unsatisfied");
        const Candidate& chosen = ws.at(best);
        out.push_back(chosen.config);
        for (const auto& [idx, u] : chosen.util) cur.values[idx] += u;
        if (trace) trace(iter, chosen, best_score, cur);
        ++iter;
        maybe_extend();
    }
    return out;
}

inline std::vector<GpuConfig> fast_algo(const CompletionRates& comp, std::span<const ServiceSpec> services,
                                        const ProfileStore& profiles, const PartitionRuleSet& rules) {
    PlanContext ctx = make_plan_context(services, profiles, rules);
    return fast_algo(comp, ctx);
}

/// The contract every optimizer procedure satisfies: the returned configs plus
/// the given completion rates reach >= 100% for every service.
struct OptimizerProcedure {
    virtual ~OptimizerProcedure() = default;
    virtual std::vector<GpuConfig> solve(const CompletionRates& comp, const PlanContext& ctx, Rng& rng) const = 0;
};

struct FastProcedure final : OptimizerProcedure {
    std::vector<GpuConfig> solve(const CompletionRates& comp, const PlanContext& ctx, Rng&) const override {
        return fast_algo(comp, ctx);
    }
};

}  // namespace migplan
