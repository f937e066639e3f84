#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "migplan/bench.hpp"
#include "migplan/core.hpp"
#include "migplan/mig_rules.hpp"
#include "migplan/sim.hpp"
#include "migplan/transition.hpp"

namespace migplan {

using json = nlohmann::json;

// Every number we emit is rounded through %.9g so repeated runs are
// byte-identical and diffs stay readable.
inline double out_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return std::strtod(buf, nullptr);
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline json load_json_file(const std::string& path) {
    try {
        return json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw SchemaError("'" + path + "': " + e.what());
    }
}

inline void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw SchemaError("cannot write '" + path + "'");
    out << j.dump(2) << "\n";
}

namespace io_detail {

inline void expect_keys(const json& j, const std::set<std::string>& allowed,
                        const std::set<std::string>& required, const std::string& where) {
    if (!j.is_object()) throw SchemaError(where + ": expected an object");
    for (const auto& [key, value] : j.items())
        if (!allowed.count(key)) throw SchemaError(where + ": unknown field '" + key + "'");
    for (const auto& key : required)
        if (!j.contains(key)) throw SchemaError(where + ": missing field '" + key + "'");
}

inline double get_num(const json& j, const std::string& key, const std::string& where) {
    if (!j.at(key).is_number()) throw SchemaError(where + ": field '" + key + "' must be a number");
    return j.at(key).get<double>();
}

inline int get_int(const json& j, const std::string& key, const std::string& where) {
    if (!j.at(key).is_number_integer()) throw SchemaError(where + ": field '" + key + "' must be an integer");
    return j.at(key).get<int>();
}

inline std::string get_str(const json& j, const std::string& key, const std::string& where) {
    if (!j.at(key).is_string()) throw SchemaError(where + ": field '" + key + "' must be a string");
    return j.at(key).get<std::string>();
}

inline const json& get_array(const json& j, const std::string& key, const std::string& where) {
    if (!j.at(key).is_array()) throw SchemaError(where + ": field '" + key + "' must be an array");
    return j.at(key);
}

}  // namespace io_detail

// ---- profiles ---------------------------------------------------------------

inline ProfileStore load_profiles(const std::string& path) {
    json j = load_json_file(path);
    io_detail::expect_keys(j, {"models"}, {"models"}, path);
    ProfileStore store;
    size_t mi = 0;
    for (const auto& m : io_detail::get_array(j, "models", path)) {
        std::string where = path + ":models[" + std::to_string(mi++) + "]";
        io_detail::expect_keys(m, {"name", "entries"}, {"name", "entries"}, where);
        ModelProfile prof;
        prof.model_name = io_detail::get_str(m, "name", where);
        for (const auto& e : io_detail::get_array(m, "entries", where)) {
            io_detail::expect_keys(e, {"size", "batch", "throughput_rps", "p90_ms"},
                                   {"size", "batch", "throughput_rps", "p90_ms"}, where);
            ProfileEntry pe;
            pe.batch = io_detail::get_int(e, "batch", where);
            pe.throughput_rps = io_detail::get_num(e, "throughput_rps", where);
            pe.p90_ms = io_detail::get_num(e, "p90_ms", where);
            int size = io_detail::get_int(e, "size", where);
            if (!valid_slices(size)) throw SchemaError(where + ": invalid instance size " + std::to_string(size));
            prof.entries[size].push_back(pe);
        }
        for (auto& [size, list] : prof.entries)
            std::sort(list.begin(), list.end(),
                      [](const ProfileEntry& a, const ProfileEntry& b) { return a.batch < b.batch; });
        validate_profile(prof);
        if (store.count(prof.model_name)) throw SchemaError(path + ": duplicate model '" + prof.model_name + "'");
        store[prof.model_name] = std::move(prof);
    }
    return store;
}

inline json profiles_to_json(const ProfileStore& store) {
    json models = json::array();
    for (const auto& [name, prof] : store) {
        json entries = json::array();
        for (const auto& [size, list] : prof.entries)
            for (const auto& e : list)
                entries.push_back({{"size", size},
                                   {"batch", e.batch},
                                   {"throughput_rps", out_num(e.throughput_rps)},
                                   {"p90_ms", out_num(e.p90_ms)}});
        models.push_back({{"name", name}, {"entries", entries}});
    }
    return json{{"models", models}};
}

// ---- SLOs / services --------------------------------------------------------

inline std::vector<ServiceSpec> load_services(const std::string& path, const ProfileStore& profiles) {
    json j = load_json_file(path);
    io_detail::expect_keys(j, {"services"}, {"services"}, path);
    std::vector<ServiceSpec> services;
    size_t si = 0;
    for (const auto& s : io_detail::get_array(j, "services", path)) {
        std::string where = path + ":services[" + std::to_string(si++) + "]";
        io_detail::expect_keys(s, {"id", "model", "required_rps", "max_p90_ms"},
                               {"id", "model", "required_rps", "max_p90_ms"}, where);
        ServiceSpec spec;
        spec.service_id = io_detail::get_str(s, "id", where);
        spec.model_name = io_detail::get_str(s, "model", where);
        spec.required_rps = io_detail::get_num(s, "required_rps", where);
        spec.max_p90_ms = io_detail::get_num(s, "max_p90_ms", where);
        services.push_back(std::move(spec));
    }
    validate_services(services, profiles);
    return services;
}

inline json services_to_json(std::span<const ServiceSpec> services) {
    json arr = json::array();
    for (const auto& s : services)
        arr.push_back({{"id", s.service_id},
                       {"model", s.model_name},
                       {"required_rps", out_num(s.required_rps)},
                       {"max_p90_ms", out_num(s.max_p90_ms)}});
    return json{{"services", arr}};
}

// ---- deployments ------------------------------------------------------------

inline Deployment load_deployment(const std::string& path) {
    json j = load_json_file(path);
    io_detail::expect_keys(j, {"gpus"}, {"gpus"}, path);
    Deployment dep;
    size_t gi = 0;
    for (const auto& g : io_detail::get_array(j, "gpus", path)) {
        std::string where = path + ":gpus[" + std::to_string(gi++) + "]";
        io_detail::expect_keys(g, {"id", "instances"}, {"id", "instances"}, where);
        DeployedGpu gpu;
        gpu.id = io_detail::get_str(g, "id", where);
        for (const auto& inst : io_detail::get_array(g, "instances", where)) {
            io_detail::expect_keys(inst, {"size", "slot", "service", "batch"},
                                   {"size", "slot", "service", "batch"}, where);
            AssignedInstance ai;
            int size = io_detail::get_int(inst, "size", where);
            int slot = io_detail::get_int(inst, "slot", where);
            try {
                ai.placement = make_placement(size, slot);
            } catch (const PlanningError& e) {
                throw SchemaError(where + ": " + e.what());
            }
            ai.service_id = io_detail::get_str(inst, "service", where);
            ai.batch = io_detail::get_int(inst, "batch", where);
            gpu.config.instances.push_back(std::move(ai));
        }
        gpu.config.normalize();
        dep.gpus.push_back(std::move(gpu));
    }
    return dep;
}

inline json deployment_to_json(const Deployment& dep) {
    json gpus = json::array();
    for (const auto& g : dep.gpus) {
        json instances = json::array();
        for (const auto& inst : g.config.instances)
            instances.push_back({{"size", inst.placement.slices},
                                 {"slot", inst.placement.start_slot},
                                 {"service", inst.service_id},
                                 {"batch", inst.batch}});
        gpus.push_back({{"id", g.id}, {"instances", instances}});
    }
    return json{{"gpus", gpus}};
}

// ---- partition rules --------------------------------------------------------

inline PartitionRuleSet load_rules(const std::string& path) {
    json j = load_json_file(path);
    io_detail::expect_keys(j, {"slot_positions", "memory_weight", "hard_exclusions", "memory_budget"}, {}, path);
    PartitionRuleSet rules = PartitionRuleSet::defaults();
    if (j.contains("slot_positions")) {
        rules.slot_positions.clear();
        for (const auto& [size_str, slots] : j.at("slot_positions").items()) {
            int size = std::stoi(size_str);
            if (!valid_slices(size)) throw SchemaError(path + ": invalid size '" + size_str + "'");
            if (!slots.is_array()) throw SchemaError(path + ": slot_positions values must be arrays");
            for (const auto& s : slots) rules.slot_positions[size].push_back(s.get<int>());
            std::sort(rules.slot_positions[size].begin(), rules.slot_positions[size].end());
        }
    }
    if (j.contains("memory_weight")) {
        rules.memory_weight.clear();
        for (const auto& [size_str, w] : j.at("memory_weight").items())
            rules.memory_weight[std::stoi(size_str)] = w.get<int>();
    }
    if (j.contains("hard_exclusions")) {
        rules.hard_exclusions.clear();
        for (const auto& pair : j.at("hard_exclusions")) {
            if (!pair.is_array() || pair.size() != 2)
                throw SchemaError(path + ": hard_exclusions entries must be [size, size]");
            rules.hard_exclusions.insert(normalized_pair(pair[0].get<int>(), pair[1].get<int>()));
        }
    }
    if (j.contains("memory_budget")) rules.memory_budget = j.at("memory_budget").get<int>();
    return rules;
}

// ---- transition plans -------------------------------------------------------

inline json plan_to_json(const TransitionPlan& plan) {
    json stages = json::array();
    for (const auto& stage : plan.stages) {
        json arr = json::array();
        for (const auto& a : stage) {
            json row;
            switch (a.kind) {
                case ActionKind::Create:
                    row = {{"kind", "create"},          {"gpu", a.gpu},   {"size", a.placement.slices},
                           {"slot", a.placement.start_slot}, {"service", a.service}, {"batch", a.batch}};
                    break;
                case ActionKind::Delete:
                    row = {{"kind", "delete"},
                           {"gpu", a.gpu},
                           {"size", a.placement.slices},
                           {"slot", a.placement.start_slot}};
                    break;
                case ActionKind::MigrateLocal:
                case ActionKind::MigrateRemote:
                    row = {{"kind", action_kind_name(a.kind)},
                           {"gpu", a.gpu},
                           {"target_gpu", a.target_gpu},
                           {"size", a.placement.slices},
                           {"slot", a.placement.start_slot},
                           {"service", a.service},
                           {"batch", a.batch}};
                    break;
                case ActionKind::Repartition: {
                    // serialized as single-placement carve/retire rows
                    if (a.repart_added.size() + a.repart_removed.size() != 1)
                        throw PlanningError("plan serialization expects single-placement repartitions");
                    bool add = !a.repart_added.empty();
                    const Placement& p = add ? a.repart_added.front() : a.repart_removed.front();
                    row = {{"kind", add ? "repartition-add" : "repartition-remove"},
                           {"gpu", a.gpu},
                           {"size", p.slices},
                           {"slot", p.start_slot}};
                    break;
                }
            }
            arr.push_back(std::move(row));
        }
        stages.push_back(std::move(arr));
    }
    return json{{"extra_gpu_budget", plan.extra_gpu_budget}, {"stages", stages}};
}

inline TransitionPlan load_plan(const std::string& path) {
    json j = load_json_file(path);
    io_detail::expect_keys(j, {"extra_gpu_budget", "stages"}, {"extra_gpu_budget", "stages"}, path);
    TransitionPlan plan;
    plan.extra_gpu_budget = io_detail::get_int(j, "extra_gpu_budget", path);
    size_t si = 0;
    for (const auto& stage : io_detail::get_array(j, "stages", path)) {
        std::string swhere = path + ":stages[" + std::to_string(si++) + "]";
        if (!stage.is_array()) throw SchemaError(swhere + ": expected an array of actions");
        std::vector<Action> actions;
        for (const auto& row : stage) {
            io_detail::expect_keys(row, {"kind", "gpu", "target_gpu", "size", "slot", "service", "batch"},
                                   {"kind", "gpu", "size", "slot"}, swhere);
            Action a;
            std::string kind = io_detail::get_str(row, "kind", swhere);
            int size = io_detail::get_int(row, "size", swhere);
            int slot = io_detail::get_int(row, "slot", swhere);
            Placement p;
            try {
                p = make_placement(size, slot);
            } catch (const PlanningError& e) {
                throw SchemaError(swhere + ": " + e.what());
            }
            a.gpu = io_detail::get_str(row, "gpu", swhere);
            a.placement = p;
            if (kind == "create") {
                a.kind = ActionKind::Create;
                a.service = io_detail::get_str(row, "service", swhere);
                a.batch = io_detail::get_int(row, "batch", swhere);
            } else if (kind == "delete") {
                a.kind = ActionKind::Delete;
            } else if (kind == "migrate-local" || kind == "migrate-remote") {
                a.kind = kind == "migrate-local" ? ActionKind::MigrateLocal : ActionKind::MigrateRemote;
                a.target_gpu = io_detail::get_str(row, "target_gpu", swhere);
                a.service = io_detail::get_str(row, "service", swhere);
                a.batch = io_detail::get_int(row, "batch", swhere);
            } else if (kind == "repartition-add") {
                a.kind = ActionKind::Repartition;
                a.repart_added = {p};
            } else if (kind == "repartition-remove") {
                a.kind = ActionKind::Repartition;
                a.repart_removed = {p};
            } else {
                throw SchemaError(swhere + ": unknown action kind '" + kind + "'");
            }
            actions.push_back(std::move(a));
        }
        plan.stages.push_back(std::move(actions));
    }
    return plan;
}

// ---- action costs -----------------------------------------------------------

inline ActionCostModel load_costs(const std::string& path) {
    json j = load_json_file(path);
    io_detail::expect_keys(
        j, {"create_ms", "delete_ms", "migrate_local_ms", "migrate_remote_ms", "repartition_ms"}, {}, path);
    ActionCostModel c;
    if (j.contains("create_ms")) c.create_ms = io_detail::get_num(j, "create_ms", path);
    if (j.contains("delete_ms")) c.delete_ms = io_detail::get_num(j, "delete_ms", path);
    if (j.contains("migrate_local_ms")) c.migrate_local_ms = io_detail::get_num(j, "migrate_local_ms", path);
    if (j.contains("migrate_remote_ms")) c.migrate_remote_ms = io_detail::get_num(j, "migrate_remote_ms", path);
    if (j.contains("repartition_ms")) c.repartition_ms = io_detail::get_num(j, "repartition_ms", path);
    c.validate();
    return c;
}

// ---- reports ----------------------------------------------------------------

inline json report_to_json(const SimulationReport& r) {
    json actions;
    for (const auto& [k, v] : r.action_counts) actions[k] = v;
    json violations = json::array();
    for (const auto& v : r.violations) violations.push_back(v);
    return json{{"wall_ms", out_num(r.wall_ms)}, {"actions", actions},          {"peak_gpus", r.peak_gpus},
                {"safe", r.safe},                {"violations", violations}};
}

inline json partitions_to_json(const std::vector<LegalPartition>& parts) {
    json arr = json::array();
    for (const auto& p : parts) {
        json placements = json::array();
        json sizes = json::array();
        for (const auto& pl : p.placements) {
            placements.push_back({{"size", pl.slices}, {"slot", pl.start_slot}});
            sizes.push_back(pl.slices);
        }
        arr.push_back({{"sizes", sizes}, {"placements", placements}, {"maximal", p.maximal}});
    }
    return json{{"count", arr.size()}, {"partitions", arr}};
}

inline std::map<std::string, double> load_prices(const std::string& path) {
    json j = load_json_file(path);
    io_detail::expect_keys(j, {"prices"}, {"prices"}, path);
    std::map<std::string, double> prices;
    for (const auto& row : io_detail::get_array(j, "prices", path)) {
        io_detail::expect_keys(row, {"name", "usd_per_gpu_hour"}, {"name", "usd_per_gpu_hour"}, path);
        prices[io_detail::get_str(row, "name", path)] = io_detail::get_num(row, "usd_per_gpu_hour", path);
    }
    return prices;
}

inline std::vector<std::pair<std::string, int>> load_gpu_counts(const std::string& path) {
    json j = load_json_file(path);
    io_detail::expect_keys(j, {"entries"}, {"entries"}, path);
    std::vector<std::pair<std::string, int>> counts;
    for (const auto& row : io_detail::get_array(j, "entries", path)) {
        io_detail::expect_keys(row, {"name", "gpus"}, {"name", "gpus"}, path);
        counts.emplace_back(io_detail::get_str(row, "name", path), io_detail::get_int(row, "gpus", path));
    }
    return counts;
}

inline json cost_rows_to_json(const std::vector<CostRow>& rows) {
    json arr = json::array();
    for (const auto& r : rows)
        arr.push_back({{"name", r.name},
                       {"gpus", r.gpus},
                       {"usd_per_gpu_hour", out_num(r.price_per_gpu_hour)},
                       {"cost_per_hour", out_num(r.cost)},
                       {"normalized", out_num(r.normalized)}});
    return json{{"rows", arr}};
}

inline std::string cost_rows_to_csv(const std::vector<CostRow>& rows) {
    std::ostringstream out;
    out << "name,gpus,usd_per_gpu_hour,cost_per_hour,normalized\n";
    for (const auto& r : rows) {
        char line[256];
        std::snprintf(line, sizeof line, "%s,%d,%.9g,%.9g,%.9g\n", r.name.c_str(), r.gpus,
                      r.price_per_gpu_hour, r.cost, r.normalized);
        out << line;
    }
    return out.str();
}

}  // namespace migplan
