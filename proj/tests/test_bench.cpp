#include <doctest.h>

#include "fixtures.hpp"
#include "migplan/bench.hpp"
#include "migplan/mig_rules.hpp"

using namespace migplan;

TEST_CASE("baseline A100-7/7: ceil(req / thr(7/7)) whole GPUs per service") {
    ProfileStore ps = testfx::two_model_store();
    auto services = testfx::services_sorted({{"a", "cnn-a", 350.0, 100.0}}, ps);
    Deployment dep = baseline(BaselineKind::WholeGpu, services, ps);
    CHECK(dep.gpus.size() == 3);  // ceil(350 / 140)
    for (const auto& g : dep.gpus) {
        REQUIRE(g.config.instances.size() == 1);
        CHECK(g.config.instances[0].placement.slices == 7);
    }
    CHECK(is_satisfied(completion_of(dep, services, ps)));
}

TEST_CASE("baseline A100-7x1/7 packs services seven instances to a GPU") {
    ProfileStore ps = testfx::two_model_store();
    // two services, each needing 4 x 1/7 instances -> ceil(8/7) = 2 GPUs
    auto services =
        testfx::services_sorted({{"a", "cnn-a", 200.0, 100.0}, {"b", "cnn-a", 200.0, 100.0}}, ps);
    Deployment dep = baseline(BaselineKind::SevenSlices, services, ps);
    CHECK(dep.gpus.size() == 2);
    int instances = 0;
    bool mixed = false;
    for (const auto& g : dep.gpus) {
        std::set<std::string> ids;
        for (const auto& i : g.config.instances) {
            CHECK(i.placement.slices == 1);
            ids.insert(i.service_id);
            ++instances;
        }
        mixed |= ids.size() > 1;
    }
    CHECK(instances == 8);
    CHECK(mixed);  // services share a GPU
    CHECK(is_satisfied(completion_of(dep, services, ps)));
}

TEST_CASE("baseline A100-MIX: one 4-2-1 GPU when the requirement matches exactly") {
    ProfileStore ps = testfx::two_model_store();
    // thr(4)+thr(2)+thr(1) = 120+80+50 = 250 at the 100ms ceiling
    auto services = testfx::services_sorted({{"a", "cnn-a", 250.0, 100.0}}, ps);
    Deployment dep = baseline(BaselineKind::Mix421, services, ps);
    REQUIRE(dep.gpus.size() == 1);
    std::multiset<int> sizes;
    for (const auto& i : dep.gpus[0].config.instances) sizes.insert(i.placement.slices);
    CHECK(sizes == std::multiset<int>{1, 2, 4});
    CHECK(is_satisfied(completion_of(dep, services, ps)));
}

TEST_CASE("baseline errors name the infeasible service and size") {
    ProfileStore ps = testfx::two_model_store();
    // nlp-a at 60ms: 1/7's only entry is 95ms, infeasible
    std::vector<ServiceSpec> svcs{{"tight", "nlp-a", 100.0, 60.0}};
    validate_services(svcs, ps);
    CHECK_THROWS_WITH_AS((void)baseline(BaselineKind::SevenSlices, svcs, ps), doctest::Contains("tight"),
                         PlanningError);
    CHECK_THROWS_WITH_AS((void)baseline(BaselineKind::SevenSlices, svcs, ps), doctest::Contains("1/7"),
                         PlanningError);
}

TEST_CASE("lower_bound") {
    ProfileStore ps = testfx::two_model_store();
    SUBCASE("one service, best efficiency 50 rps/slice at 1/7: ceil(14/7) = 2") {
        auto services = testfx::services_sorted({{"a", "cnn-a", 700.0, 100.0}}, ps);
        CHECK(lower_bound(services, ps) == 2);
    }
    SUBCASE("tiny requirement rounds up to one GPU; empty workload is zero") {
        auto services = testfx::services_sorted({{"a", "cnn-a", 1.0, 100.0}}, ps);
        CHECK(lower_bound(services, ps) == 1);
        CHECK(lower_bound(std::vector<ServiceSpec>{}, ps) == 0);
    }
    SUBCASE("lower bound never exceeds any valid deployment's GPU count") {
        for (uint64_t seed = 1; seed <= 25; ++seed) {
            ProfileStore store;
            auto services = testfx::random_workload(store, 4, seed * 19);
            PlanContext ctx = make_plan_context(services, store, PartitionRuleSet::defaults());
            auto dep = fast_algo(zero_completion(services.size()), ctx);
            CHECK(lower_bound(services, store) <= static_cast<int>(dep.size()));
        }
    }
}

TEST_CASE("gen_workload") {
    ProfileStore ps = testfx::two_model_store();
    SUBCASE("seeded determinism") {
        WorkloadSpec a = gen_workload(24, Distribution::Lognormal, 8.0, 0.6, 100.0, 42, ps);
        WorkloadSpec b = gen_workload(24, Distribution::Lognormal, 8.0, 0.6, 100.0, 42, ps);
        REQUIRE(a.services.size() == 24);
        for (size_t i = 0; i < a.services.size(); ++i) {
            CHECK(a.services[i].service_id == b.services[i].service_id);
            CHECK(a.services[i].model_name == b.services[i].model_name);
            CHECK(a.services[i].required_rps == b.services[i].required_rps);
        }
    }
    SUBCASE("single service") {
        WorkloadSpec w = gen_workload(1, Distribution::Normal, 500.0, 100.0, 100.0, 7, ps);
        CHECK(w.services.size() == 1);
        CHECK(w.services[0].required_rps > 0.0);
        CHECK(w.services[0].max_p90_ms == 100.0);
    }
    SUBCASE("doubling demands at most doubles the lower bound (plus ceiling)") {
        for (uint64_t seed = 1; seed <= 10; ++seed) {
            WorkloadSpec w = gen_workload(6, Distribution::Normal, 800.0, 300.0, 100.0, seed, ps);
            int lb1 = lower_bound(w.services, ps);
            auto doubled = w.services;
            for (auto& s : doubled) s.required_rps *= 2.0;
            int lb2 = lower_bound(doubled, ps);
            CHECK(lb2 <= 2 * lb1 + 1);
            CHECK(lb2 >= lb1);
        }
    }
}

TEST_CASE("brute_force_optimum") {
    ProfileStore ps = testfx::two_model_store();
    auto rules = PartitionRuleSet::defaults();
    SUBCASE("single 350 rps service: one GPU") {
        auto services = testfx::services_sorted({{"a", "cnn-a", 350.0, 100.0}}, ps);
        auto dep = brute_force_optimum(services, ps, rules, 3);
        REQUIRE(dep.has_value());
        CHECK(dep->gpus.size() == 1);
    }
    SUBCASE("empty workload: zero GPUs") {
        auto dep = brute_force_optimum(std::vector<ServiceSpec>{}, ps, rules, 3);
        REQUIRE(dep.has_value());
        CHECK(dep->gpus.empty());
    }
    SUBCASE("none when the optimum exceeds the cap") {
        auto services = testfx::services_sorted({{"a", "cnn-a", 3500.0, 100.0}}, ps);
        CHECK_FALSE(brute_force_optimum(services, ps, rules, 3).has_value());
    }
    SUBCASE("fast_algo never beats the oracle") {
        for (uint64_t seed = 1; seed <= 10; ++seed) {
            std::vector<ServiceSpec> svcs{
                {"a", "cnn-a", 80.0 + 60.0 * static_cast<double>(seed % 4), 100.0},
                {"b", "nlp-a", 40.0 + 30.0 * static_cast<double>(seed % 3), 100.0},
            };
            validate_services(svcs, ps);
            auto oracle = brute_force_optimum(svcs, ps, rules, 4);
            REQUIRE(oracle.has_value());
            PlanContext ctx = make_plan_context(svcs, ps, rules);
            auto fast = fast_algo(zero_completion(2), ctx);
            CHECK(fast.size() >= oracle->gpus.size());
        }
    }
    SUBCASE("node budget guard aborts loudly") {
        std::vector<ServiceSpec> svcs;
        for (int i = 0; i < 6; ++i)
            svcs.push_back({"s" + std::to_string(i), "cnn-a", 900.0, 100.0});
        validate_services(svcs, ps);
        CHECK_THROWS_WITH_AS((void)brute_force_optimum(svcs, ps, rules, 4, 2000), doctest::Contains("budget"),
                             PlanningError);
    }
}

TEST_CASE("cost_report") {
    SUBCASE("equal counts and prices normalize to 1.0") {
        auto rows = cost_report({{"x", 10}, {"y", 10}}, {{"x", 2.0}, {"y", 2.0}});
        for (const auto& r : rows) CHECK(r.normalized == doctest::Approx(1.0));
    }
    SUBCASE("10 GPUs at $2 vs 30 GPUs at $1: 1.0 vs 1.5") {
        auto rows = cost_report({{"a", 10}, {"b", 30}}, {{"a", 2.0}, {"b", 1.0}});
        CHECK(rows[0].normalized == doctest::Approx(1.0));
        CHECK(rows[1].normalized == doctest::Approx(1.5));
    }
    SUBCASE("single configuration is 1.0") {
        auto rows = cost_report({{"only", 7}}, {{"only", 3.5}});
        REQUIRE(rows.size() == 1);
        CHECK(rows[0].normalized == doctest::Approx(1.0));
    }
    SUBCASE("missing or non-positive prices are rejected") {
        CHECK_THROWS_AS((void)cost_report({{"a", 1}}, {}), PlanningError);
        CHECK_THROWS_AS((void)cost_report({{"a", 1}}, {{"a", 0.0}}), PlanningError);
    }
}
