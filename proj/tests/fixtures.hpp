#pragma once

#include "migplan/bench.hpp"
#include "migplan/core.hpp"

namespace testfx {

using namespace migplan;

// Sub-linear family: per-slice throughput decreases with instance size. At a
// 100ms ceiling the selected throughput per size is {1:50, 2:80, 3:105, 4:120,
// 7:140}.
inline ModelProfile sublinear_profile(const std::string& name = "cnn-a") {
    ModelProfile p;
    p.model_name = name;
    p.entries[1] = {{1, 30, 25}, {4, 45, 45}, {8, 50, 70}, {16, 52, 130}};
    p.entries[2] = {{1, 34, 22}, {4, 60, 38}, {8, 80, 60}, {16, 85, 120}};
    p.entries[3] = {{1, 36, 20}, {4, 70, 33}, {8, 105, 52}, {16, 112, 105}};
    p.entries[4] = {{1, 38, 18}, {4, 80, 30}, {8, 120, 48}, {16, 130, 110}};
    p.entries[7] = {{1, 40, 15}, {4, 90, 25}, {8, 140, 40}, {16, 155, 120}, {32, 165, 200}};
    return p;
}

// Super-linear family: per-slice throughput is highest on 7/7 and latency
// drops with size; 1/7 and 2/7 are infeasible below ~70ms ceilings.
inline ModelProfile superlinear_profile(const std::string& name = "nlp-a") {
    ModelProfile p;
    p.model_name = name;
    p.entries[1] = {{1, 6, 95}, {4, 7, 260}};
    p.entries[2] = {{1, 14, 70}, {4, 20, 150}};
    p.entries[3] = {{1, 24, 55}, {4, 33, 110}};
    p.entries[4] = {{1, 36, 42}, {4, 52, 85}, {8, 60, 140}};
    p.entries[7] = {{1, 70, 28}, {4, 112, 55}, {8, 130, 90}, {16, 140, 160}};
    return p;
}

inline ProfileStore two_model_store() {
    ProfileStore ps;
    ps["cnn-a"] = sublinear_profile("cnn-a");
    ps["nlp-a"] = superlinear_profile("nlp-a");
    return ps;
}

inline std::vector<ServiceSpec> services_sorted(std::vector<ServiceSpec> svcs, const ProfileStore& ps) {
    validate_services(svcs, ps);
    return svcs;
}

// Random small workload over the two-model store; requirements sized so fast
// deployments stay at a few dozen GPUs.
inline std::vector<ServiceSpec> random_workload(ProfileStore& ps, int n, uint64_t seed) {
    ps = two_model_store();
    Distribution dist = (seed % 2) ? Distribution::Normal : Distribution::Lognormal;
    double mu = dist == Distribution::Normal ? 900.0 : 6.3;
    double sigma = dist == Distribution::Normal ? 400.0 : 0.5;
    WorkloadSpec w = gen_workload(n, dist, mu, sigma, 100.0, seed, ps);
    return w.services;
}

// A coherent (old, new) SLO pair for transition tests: shared services keep
// their model, requirements shift, and the tail of the list churns (removed
// from old / added fresh in new).
inline std::pair<std::vector<ServiceSpec>, std::vector<ServiceSpec>> transition_pair(ProfileStore& ps, int n,
                                                                                     uint64_t seed) {
    auto old_slos = random_workload(ps, n, seed);
    Rng rng(mix_seed(seed, 0x70616972));
    std::vector<ServiceSpec> new_slos;
    for (size_t i = 0; i < old_slos.size(); ++i) {
        if (i + 1 == old_slos.size() && old_slos.size() > 2 && pick_index(rng, 3) == 0) continue;  // removed
        ServiceSpec s = old_slos[i];
        s.required_rps *= 0.3 + 2.2 * uniform01(rng);
        new_slos.push_back(std::move(s));
    }
    if (pick_index(rng, 2) == 0) {
        ServiceSpec fresh;
        fresh.service_id = "svc-new";
        fresh.model_name = pick_index(rng, 2) ? "cnn-a" : "nlp-a";
        fresh.required_rps = 100.0 + 400.0 * uniform01(rng);
        fresh.max_p90_ms = 100.0;
        new_slos.push_back(std::move(fresh));
    }
    validate_services(new_slos, ps);
    return {std::move(old_slos), std::move(new_slos)};
}

}  // namespace testfx
