#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "migplan/greedy.hpp"

namespace migplan {

struct MctsParams {
    int budget_iters = 200;
    int topk = 10;            // children kept per node
    int pick_services = 5;    // unsatisfied services sampled at expansion
    double ucb_c = 1.4142135623730951;  // sqrt(2)
};

/// Tree node over completion-rate states. Leaves are satisfied states; children
/// (once expanded) are the top-K scored candidate configs for this node.
struct SearchNode {
    CompletionRates comp;
    bool leaf = false;
    bool expanded = false;
    int visits = 0;
    double value_sum = 0.0;
    struct Edge {
        int cand = -1;  // index into the context pool
        std::unique_ptr<SearchNode> node;
    };
    std::vector<Edge> children;

    explicit SearchNode(CompletionRates c) : comp(std::move(c)) { leaf = is_satisfied(comp); }
};

// The "type" of a completion-rate state: which services are still unsatisfied.
inline std::string completion_type_key(const CompletionRates& comp) {
    std::string key(comp.values.size(), '0');
    for (size_t i = 0; i < comp.values.size(); ++i)
        if (comp.values[i] < 1.0 - kSatisfyEps) key[i] = '1';
    return key;
}

/// Pools of good candidate configs, memoized per completion-rate type. Built
/// lazily on first use; reused by every rollout that hits the same type.
struct RolloutCache {
    std::unordered_map<std::string, std::vector<int>> pools;
    int builds = 0;  // how many pools were constructed (for memoization checks)
};

namespace detail {

// Top-K candidate indices by score against `comp`, drawn from `from`
// (nullptr: the whole pool). Only positive scores qualify.
inline std::vector<int> topk_candidates(const CandidatePool& pool, const CompletionRates& comp, int k,
                                        const std::vector<int>* from) {
    std::vector<std::pair<double, int>> scored;
    auto consider = [&](int idx) {
        double s = score(pool.items[idx], comp);
        if (s > 0.0) scored.emplace_back(s, idx);
    };
    if (from) {
        for (int idx : *from) consider(idx);
    } else {
        for (size_t i = 0; i < pool.items.size(); ++i) consider(static_cast<int>(i));
    }
    std::sort(scored.begin(), scored.end(), [&](const auto& a, const auto& b) {
        return candidate_preferred(pool.items[a.second], a.first, pool.items[b.second], b.first);
    });
    if (static_cast<int>(scored.size()) > k) scored.resize(k);
    std::vector<int> out;
    out.reserve(scored.size());
    for (const auto& [s, idx] : scored) out.push_back(idx);
    return out;
}

inline std::vector<int> unsatisfied_indices(const CompletionRates& comp) {
    std::vector<int> u;
    for (size_t i = 0; i < comp.values.size(); ++i)
        if (comp.values[i] < 1.0 - kSatisfyEps) u.push_back(static_cast<int>(i));
    return u;
}

}  // namespace detail

/// Expansion: sample min(5, #unsatisfied) unsatisfied services, score the
/// candidates containing at least one of them, keep the top-K as child edges.
inline std::vector<int> expand(SearchNode& node, const PlanContext& ctx, const MctsParams& params, Rng& rng) {
    if (node.leaf) throw PlanningError("expand: node is already satisfied");
    std::vector<int> unsat = detail::unsatisfied_indices(node.comp);
    size_t take = std::min<size_t>(params.pick_services, unsat.size());
    // partial Fisher-Yates: the first `take` entries become the sample
    for (size_t i = 0; i < take; ++i) {
        size_t j = i + pick_index(rng, unsat.size() - i);
        std::swap(unsat[i], unsat[j]);
    }
    std::vector<char> in_set(ctx.pool.items.size(), 0);
    std::vector<int> filtered;
    for (size_t i = 0; i < take; ++i)
        for (int idx : ctx.pool.by_service[unsat[i]])
            if (!in_set[idx]) {
                in_set[idx] = 1;
                filtered.push_back(idx);
            }
    std::sort(filtered.begin(), filtered.end());
    std::vector<int> top = detail::topk_candidates(ctx.pool, node.comp, params.topk, &filtered);
    node.children.clear();
    for (int idx : top) {
        CompletionRates child = node.comp;
        for (const auto& [svc, u] : ctx.pool.items[idx].util) child.values[svc] += u;
        node.children.push_back(SearchNode::Edge{idx, std::make_unique<SearchNode>(std::move(child))});
    }
    node.expanded = true;
    return top;
}

/// Estimation: walk from `comp` by repeatedly applying a uniformly random
/// config from the cached pool for the state's type, until satisfied or
/// max_depth. Returns the number of configs applied (max_depth on failure).
/// With a warm cache a step is a hash lookup plus a utility add; no scoring.
inline int rollout(const CompletionRates& comp, const PlanContext& ctx, const MctsParams& params,
                   RolloutCache& cache, Rng& rng, int max_depth, std::vector<int>* picked = nullptr) {
    CompletionRates cur = comp;
    int steps = 0;
    while (!is_satisfied(cur)) {
        if (steps >= max_depth) return max_depth;
        std::string key = completion_type_key(cur);
        auto it = cache.pools.find(key);
        if (it == cache.pools.end()) {
            ++cache.builds;
            it = cache.pools.emplace(key, detail::topk_candidates(ctx.pool, cur, params.topk, nullptr)).first;
        }
        const std::vector<int>& pool = it->second;
        if (pool.empty())
            throw PlanningError("rollout: no candidate config serves the remaining demand");
        int idx = pool[pick_index(rng, pool.size())];
        for (const auto& [svc, u] : ctx.pool.items[idx].util) cur.values[svc] += u;
        if (picked) picked->push_back(idx);
        ++steps;
    }
    return steps;
}

/// The slow optimizer procedure: UCB1 tree search over completion-rate states,
/// looking for the shortest root-to-leaf path. The answer is never longer than
/// the fast algorithm's on the same input.
inline std::vector<GpuConfig> mcts_solve(const CompletionRates& comp, const PlanContext& ctx,
                                         const MctsParams& params, uint64_t seed,
                                         std::function<void(int, int, int, int)> trace = nullptr) {
    if (is_satisfied(comp)) return {};
    std::vector<GpuConfig> fast_ref = fast_algo(comp, ctx);
    if (params.budget_iters <= 0) return fast_ref;

    const int l_ref = static_cast<int>(fast_ref.size());
    const int max_depth = 2 * l_ref;
    Rng rng(mix_seed(seed, 0x6d637473));
    RolloutCache cache;
    SearchNode root(comp);

    std::vector<int> best_path;  // candidate indices of the shortest complete path seen
    bool have_best = false;

    auto ucb_pick = [&](SearchNode& node) -> SearchNode::Edge& {
        double log_n = std::log(std::max(1, node.visits));
        int pick = -1;
        double best = -1.0;
        for (size_t i = 0; i < node.children.size(); ++i) {
            const SearchNode* c = node.children[i].node.get();
            if (c->visits == 0) return node.children[i];
            double v = c->value_sum / c->visits + params.ucb_c * std::sqrt(log_n / c->visits);
            if (v > best) {
                best = v;
                pick = static_cast<int>(i);
            }
        }
        return node.children[pick];
    };

    for (int iter = 0; iter < params.budget_iters; ++iter) {
        // selection
        std::vector<SearchNode*> path{&root};
        std::vector<int> edges;
        SearchNode* node = &root;
        while (node->expanded && !node->leaf && !node->children.empty()) {
            SearchNode::Edge& e = ucb_pick(*node);
            edges.push_back(e.cand);
            node = e.node.get();
            path.push_back(node);
        }
        int est;
        if (node->leaf) {
            est = 0;
            if (!have_best || edges.size() < best_path.size()) {
                best_path = edges;
                have_best = true;
            }
        } else {
            // expansion + estimation from a random new child
            if (!node->expanded) expand(*node, ctx, params, rng);
            if (!node->children.empty()) {
                size_t pick = pick_index(rng, node->children.size());
                SearchNode::Edge& e = node->children[pick];
                edges.push_back(e.cand);
                node = e.node.get();
                path.push_back(node);
            }
            std::vector<int> picked;
            est = rollout(node->comp, ctx, params, cache, rng, max_depth, &picked);
            bool complete = node->leaf || static_cast<int>(picked.size()) == est;
            if (complete && est < max_depth) {
                std::vector<int> full = edges;
                full.insert(full.end(), picked.begin(), picked.end());
                if (!have_best || full.size() < best_path.size()) {
                    best_path = std::move(full);
                    have_best = true;
                }
            }
        }
        int total_len = static_cast<int>(edges.size()) + est;
        double reward = total_len > 0 ? std::min(1.0, static_cast<double>(l_ref) / total_len) : 1.0;
        for (SearchNode* n : path) {
            n->visits += 1;
            n->value_sum += reward;
        }
        if (trace) trace(iter, static_cast<int>(edges.size()), est, have_best ? static_cast<int>(best_path.size()) : -1);
    }

    // greedy-by-visit-count descent, completed by the fast algorithm
    std::vector<int> descent;
    SearchNode* node = &root;
    while (node->expanded && !node->leaf && !node->children.empty()) {
        int pick = 0;
        for (size_t i = 1; i < node->children.size(); ++i)
            if (node->children[i].node->visits > node->children[pick].node->visits) pick = static_cast<int>(i);
        descent.push_back(node->children[pick].cand);
        node = node->children[pick].node.get();
    }
    std::vector<GpuConfig> via_descent;
    for (int idx : descent) via_descent.push_back(ctx.pool.items[idx].config);
    if (!node->leaf) {
        for (auto& cfg : fast_algo(node->comp, ctx)) via_descent.push_back(std::move(cfg));
    }

    std::vector<GpuConfig> answer = std::move(fast_ref);
    if (via_descent.size() < answer.size()) answer = std::move(via_descent);
    if (have_best && best_path.size() < answer.size()) {
        answer.clear();
        for (int idx : best_path) answer.push_back(ctx.pool.items[idx].config);
    }
    return answer;
}

struct MctsProcedure final : OptimizerProcedure {
    MctsParams params;
    explicit MctsProcedure(MctsParams p = {}) : params(p) {}
    std::vector<GpuConfig> solve(const CompletionRates& comp, const PlanContext& ctx, Rng& rng) const override {
        return mcts_solve(comp, ctx, params, rng());
    }
};

}  // namespace migplan
