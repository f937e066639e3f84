#pragma once

#include <chrono>
#include <functional>
#include <thread>
#include <vector>

#include "migplan/mcts.hpp"

namespace migplan {

/// A deployment plus its fitness: GPU count first, total overshoot as tie-break.
struct Chromosome {
    std::vector<GpuConfig> gpus;
    int gpu_count = 0;
    double slack = 0.0;
};

inline bool fitter(const Chromosome& a, const Chromosome& b) {
    if (a.gpu_count != b.gpu_count) return a.gpu_count < b.gpu_count;
    return a.slack < b.slack;
}

struct GaParams {
    int population = 16;
    double erase_fraction = 0.10;  // fraction of GPUs erased per crossover, min 1
    int mutation_pairs = 2;
    int stall_rounds = 10;
    double time_budget_s = 0.0;
    uint64_t seed = 0;
    int max_rounds = 1 << 30;
    int workers = 1;
    MctsParams slow;  // budget of the slow algorithm run inside each crossover

    GaParams() { slow.budget_iters = 48; }
};

inline Chromosome evaluate_chromosome(std::vector<GpuConfig> gpus, const PlanContext& ctx) {
    Chromosome c;
    CompletionRates comp = completion_of(gpus, ctx.services, *ctx.profiles);
    if (!is_satisfied(comp)) throw PlanningError("chromosome violates the deployment validity invariant");
    c.slack = slack_of(comp);
    c.gpu_count = static_cast<int>(gpus.size());
    c.gpus = std::move(gpus);
    return c;
}

/// Crossover: erase a random fraction of the GPUs, then let the slow algorithm
/// refill the residual demand. The child is always a valid deployment; if the
/// slow algorithm fails the parent is returned unchanged.
inline Chromosome crossover(const Chromosome& parent, const OptimizerProcedure& slow, const PlanContext& ctx,
                            const GaParams& params, Rng& rng) {
    size_t n = parent.gpus.size();
    size_t erase = n == 0 ? 0 : static_cast<size_t>(std::ceil(params.erase_fraction * static_cast<double>(n)));
    if (erase == 0) return parent;
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    for (size_t i = 0; i < erase; ++i) {
        size_t j = i + pick_index(rng, n - i);
        std::swap(order[i], order[j]);
    }
    std::vector<GpuConfig> survivors;
    survivors.reserve(n - erase);
    std::vector<bool> erased(n, false);
    for (size_t i = 0; i < erase; ++i) erased[order[i]] = true;
    for (size_t i = 0; i < n; ++i)
        if (!erased[i]) survivors.push_back(parent.gpus[i]);

    try {
        CompletionRates residual = completion_of(survivors, ctx.services, *ctx.profiles);
        std::vector<GpuConfig> refill = slow.solve(residual, ctx, rng);
        for (auto& cfg : refill) survivors.push_back(std::move(cfg));
        return evaluate_chromosome(std::move(survivors), ctx);
    } catch (const PlanningError&) {
        return parent;
    }
}

/// Mutation: swap the services of up to `mutation_pairs` random pairs of
/// equal-size instances running different services. Sizes are equal, so the
/// batches travel with the services and the induced completion rates are
/// exactly unchanged.
inline Chromosome mutate(const Chromosome& parent, const GaParams& params, Rng& rng) {
    Chromosome child = parent;
    struct Ref {
        size_t gpu, inst;
    };
    std::map<int, std::vector<Ref>> by_size;
    for (size_t g = 0; g < child.gpus.size(); ++g)
        for (size_t k = 0; k < child.gpus[g].instances.size(); ++k)
            by_size[child.gpus[g].instances[k].placement.slices].push_back(Ref{g, k});

    std::vector<int> sizes;
    for (const auto& [size, refs] : by_size)
        if (refs.size() >= 2) sizes.push_back(size);
    if (sizes.empty()) return child;

    for (int pair = 0; pair < params.mutation_pairs; ++pair) {
        for (int attempt = 0; attempt < 64; ++attempt) {
            int size = sizes[pick_index(rng, sizes.size())];
            const auto& refs = by_size[size];
            Ref a = refs[pick_index(rng, refs.size())];
            Ref b = refs[pick_index(rng, refs.size())];
            AssignedInstance& ia = child.gpus[a.gpu].instances[a.inst];
            AssignedInstance& ib = child.gpus[b.gpu].instances[b.inst];
            if (ia.service_id == ib.service_id) continue;
            std::swap(ia.service_id, ib.service_id);
            std::swap(ia.batch, ib.batch);
            break;
        }
    }
    return child;
}

struct GaRoundLog {
    int round = 0;
    int best_gpus = 0;
    double best_slack = 0.0;
    bool improved = false;
    double elapsed_s = 0.0;
};

/// The two-phase algorithm: seed with the fast algorithm, then run GA rounds
/// (mutation, then crossover via the slow algorithm) with elitism until the
/// time budget runs out or the best fitness stalls for `stall_rounds` rounds.
inline Deployment two_phase(std::span<const ServiceSpec> services, const ProfileStore& profiles,
                            const PartitionRuleSet& rules, const GaParams& params,
                            std::function<void(const GaRoundLog&)> log = nullptr) {
    PlanContext ctx = make_plan_context(services, profiles, rules);
    auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };

    std::vector<GpuConfig> seed_cfg = fast_algo(zero_completion(services.size()), ctx);
    if (params.time_budget_s <= 0.0 || params.max_rounds <= 0) return make_deployment(std::move(seed_cfg));

    std::vector<Chromosome> pop;
    pop.push_back(evaluate_chromosome(std::move(seed_cfg), ctx));
    Chromosome best = pop[0];
    MctsProcedure slow(params.slow);

    int stall = 0;
    for (int round = 1; round <= params.max_rounds; ++round) {
        if (elapsed() >= params.time_budget_s) break;
        if (stall >= params.stall_rounds) break;

        size_t n_parents = std::min(pop.size(), (static_cast<size_t>(params.population) + 1) / 2);
        std::vector<Chromosome> children(n_parents);
        auto work = [&](size_t i) {
            Rng rng(mix_seed(params.seed, (static_cast<uint64_t>(round) << 20) + i));
            Chromosome c = mutate(pop[i], params, rng);
            children[i] = crossover(c, slow, ctx, params, rng);
        };
        if (params.workers > 1 && n_parents > 1) {
            std::vector<std::thread> threads;
            size_t w = std::min<size_t>(params.workers, n_parents);
            for (size_t t = 0; t < w; ++t)
                threads.emplace_back([&, t] {
                    for (size_t i = t; i < n_parents; i += w) work(i);
                });
            for (auto& th : threads) th.join();
        } else {
            for (size_t i = 0; i < n_parents; ++i) work(i);
        }

        for (auto& c : children) pop.push_back(std::move(c));
        std::stable_sort(pop.begin(), pop.end(), fitter);
        if (pop.size() > static_cast<size_t>(params.population)) pop.resize(params.population);

        bool improved = fitter(pop[0], best);
        if (improved) {
            best = pop[0];
            stall = 0;
        } else {
            ++stall;
        }
        if (log) log(GaRoundLog{round, best.gpu_count, best.slack, improved, elapsed()});
    }
    return make_deployment(std::move(best.gpus));
}

}  // namespace migplan
