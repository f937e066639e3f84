#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "fixtures.hpp"
#include "migplan/io.hpp"

using namespace migplan;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name, const std::string& content)
        : path((std::filesystem::temp_directory_path() / name).string()) {
        std::ofstream out(path, std::ios::binary);
        out << content;
    }
    ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("profile file round-trip and validation") {
    ProfileStore ps = testfx::two_model_store();
    TempFile f("migplan_prof.json", profiles_to_json(ps).dump());
    ProfileStore loaded = load_profiles(f.path);
    REQUIRE(loaded.size() == 2);
    CHECK(loaded["cnn-a"].find(1, 8)->throughput_rps == 50.0);
    CHECK(loaded["nlp-a"].find(7, 8)->p90_ms == 90.0);
}

TEST_CASE("unknown fields are rejected everywhere") {
    TempFile bad1("migplan_bad1.json", R"({"models": [], "extra": 1})");
    CHECK_THROWS_AS((void)load_profiles(bad1.path), SchemaError);
    TempFile bad2("migplan_bad2.json",
                  R"({"services": [{"id": "a", "model": "m", "required_rps": 1, "max_p90_ms": 1, "x": 2}]})");
    ProfileStore ps = testfx::two_model_store();
    CHECK_THROWS_AS((void)load_services(bad2.path, ps), SchemaError);
    TempFile bad3("migplan_bad3.json", R"({"gpus": [{"id": "g", "instances": [], "uh": true}]})");
    CHECK_THROWS_AS((void)load_deployment(bad3.path), SchemaError);
}

TEST_CASE("malformed JSON names the file") {
    TempFile bad("migplan_syntax.json", "{ nope");
    CHECK_THROWS_WITH_AS((void)load_profiles(bad.path), doctest::Contains("migplan_syntax"), SchemaError);
}

TEST_CASE("profile violating latency monotonicity is rejected at load") {
    TempFile bad("migplan_mono.json", R"({"models": [{"name": "m", "entries": [
        {"size": 1, "batch": 1, "throughput_rps": 10, "p90_ms": 50},
        {"size": 1, "batch": 8, "throughput_rps": 20, "p90_ms": 40}]}]})");
    CHECK_THROWS_AS((void)load_profiles(bad.path), SchemaError);
}

TEST_CASE("deployment round-trip preserves instances") {
    ProfileStore ps = testfx::two_model_store();
    auto services = testfx::services_sorted({{"a", "cnn-a", 350.0, 100.0}}, ps);
    PlanContext ctx = make_plan_context(services, ps, PartitionRuleSet::defaults());
    Deployment dep = make_deployment(fast_algo(zero_completion(1), ctx));
    TempFile f("migplan_dep.json", deployment_to_json(dep).dump());
    Deployment loaded = load_deployment(f.path);
    REQUIRE(loaded.gpus.size() == dep.gpus.size());
    for (size_t i = 0; i < loaded.gpus.size(); ++i) {
        CHECK(loaded.gpus[i].id == dep.gpus[i].id);
        CHECK(loaded.gpus[i].config == dep.gpus[i].config);
    }
}

TEST_CASE("deployment with an illegal placement is a schema error") {
    TempFile bad("migplan_slot.json",
                 R"({"gpus": [{"id": "g", "instances": [{"size": 5, "slot": 0, "service": "a", "batch": 1}]}]})");
    CHECK_THROWS_AS((void)load_deployment(bad.path), SchemaError);
    TempFile bad2("migplan_slot2.json",
                  R"({"gpus": [{"id": "g", "instances": [{"size": 4, "slot": 5, "service": "a", "batch": 1}]}]})");
    CHECK_THROWS_AS((void)load_deployment(bad2.path), SchemaError);
}

TEST_CASE("rules file overrides merge with defaults") {
    TempFile f("migplan_rules.json", R"({"hard_exclusions": []})");
    PartitionRuleSet rules = load_rules(f.path);
    CHECK(rules.hard_exclusions.empty());
    CHECK(rules.slot_positions.at(2) == std::vector<int>{0, 2, 4});
    CHECK(enumerate_maximal_partitions(rules).size() == 19);
}

TEST_CASE("costs file validation") {
    TempFile f("migplan_costs.json", R"({"create_ms": 1000, "delete_ms": 100})");
    ActionCostModel c = load_costs(f.path);
    CHECK(c.create_ms == 1000.0);
    CHECK(c.migrate_remote_ms == 60000.0);
    TempFile bad("migplan_costs_bad.json", R"({"create_ms": -1})");
    CHECK_THROWS_AS((void)load_costs(bad.path), SchemaError);
}

TEST_CASE("out_num pins doubles to nine significant digits") {
    CHECK(out_num(0.123456789123456789) == 0.123456789);
    CHECK(out_num(1.0) == 1.0);
    CHECK(out_num(1e12 + 0.4) == 1e12);
}

TEST_CASE("json dumps are stable across repeated serialization") {
    ProfileStore ps = testfx::two_model_store();
    auto services = testfx::services_sorted(
        {{"a", "cnn-a", 123.456789123, 100.0}, {"b", "nlp-a", 77.7, 100.0}}, ps);
    std::string once = services_to_json(services).dump(2);
    std::string twice = services_to_json(services).dump(2);
    CHECK(once == twice);
    TempFile f("migplan_svc.json", once);
    auto reloaded = load_services(f.path, ps);
    CHECK(services_to_json(reloaded).dump(2) == once);
}
