#pragma once

#include <algorithm>
#include <array>
#include <compare>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "migplan/util.hpp"

namespace migplan {

// Fractions of 1.0 are compared against 100% with this slack everywhere.
inline constexpr double kSatisfyEps = 1e-9;

// The only instance sizes the hardware can carve. 5/7 and 6/7 do not exist.
inline constexpr std::array<int, 5> kInstanceSlices{1, 2, 3, 4, 7};

inline bool valid_slices(int slices) {
    return std::find(kInstanceSlices.begin(), kInstanceSlices.end(), slices) != kInstanceSlices.end();
}

/// Compute-slice count of a GPU instance; only {1,2,3,4,7} are constructible.
class InstanceSize {
  public:
    explicit InstanceSize(int slices) : slices_(slices) {
        if (!valid_slices(slices))
            throw PlanningError("instance size " + std::to_string(slices) + "/7 does not exist");
    }
    int slices() const { return slices_; }
    auto operator<=>(const InstanceSize&) const = default;

  private:
    int slices_;
};

/// An instance of `slices` compute slices occupying slots [start_slot, start_slot+slices).
struct Placement {
    int slices = 1;
    int start_slot = 0;

    auto operator<=>(const Placement&) const = default;
};

inline Placement make_placement(int slices, int start_slot) {
    (void)InstanceSize(slices);  // validates
    if (start_slot < 0 || start_slot + slices > 7)
        throw PlanningError("placement " + std::to_string(slices) + "@" + std::to_string(start_slot) +
                            " exceeds the 7-slot budget");
    return Placement{slices, start_slot};
}

struct ProfileEntry {
    int batch = 1;
    double throughput_rps = 0.0;
    double p90_ms = 0.0;
};

/// Measured throughput / p90 latency per (instance size, batch size).
struct ModelProfile {
    std::string model_name;
    // size -> entries sorted by batch ascending
    std::map<int, std::vector<ProfileEntry>> entries;

    const ProfileEntry* find(int size, int batch) const {
        auto it = entries.find(size);
        if (it == entries.end()) return nullptr;
        for (const auto& e : it->second)
            if (e.batch == batch) return &e;
        return nullptr;
    }
};

using ProfileStore = std::map<std::string, ModelProfile>;

// Load-time profile checks: positive measurements, p90 non-decreasing in batch.
inline void validate_profile(const ModelProfile& p) {
    if (p.model_name.empty()) throw SchemaError("profile with empty model name");
    for (const auto& [size, list] : p.entries) {
        if (!valid_slices(size))
            throw SchemaError("profile " + p.model_name + ": invalid instance size " + std::to_string(size));
        double prev_p90 = 0.0;
        int prev_batch = 0;
        for (const auto& e : list) {
            if (e.batch <= 0)
                throw SchemaError("profile " + p.model_name + ": non-positive batch");
            if (e.batch <= prev_batch)
                throw SchemaError("profile " + p.model_name + ": duplicate or unsorted batch " +
                                  std::to_string(e.batch) + " for size " + std::to_string(size));
            if (e.throughput_rps <= 0.0 || e.p90_ms <= 0.0)
                throw SchemaError("profile " + p.model_name + ": non-positive measurement at size " +
                                  std::to_string(size) + " batch " + std::to_string(e.batch));
            if (e.p90_ms < prev_p90)
                throw SchemaError("profile " + p.model_name + ": p90 decreases with batch at size " +
                                  std::to_string(size));
            prev_p90 = e.p90_ms;
            prev_batch = e.batch;
        }
    }
}

inline const ModelProfile& profile_for(const ProfileStore& profiles, const std::string& model) {
    auto it = profiles.find(model);
    if (it == profiles.end()) throw PlanningError("no profile for model '" + model + "'");
    return it->second;
}

/// A named service: which model it runs and what its SLO demands.
struct ServiceSpec {
    std::string service_id;
    std::string model_name;
    double required_rps = 0.0;
    double max_p90_ms = 0.0;
};

// Largest batch whose p90 fits under the service's latency ceiling; absence is
// a value, not an error.
inline std::optional<int> select_batch(const ServiceSpec& service, const ModelProfile& profile, int size) {
    auto it = profile.entries.find(size);
    if (it == profile.entries.end()) return std::nullopt;
    std::optional<int> best;
    for (const auto& e : it->second)
        if (e.p90_ms <= service.max_p90_ms) best = e.batch;
    return best;
}

// select_batch plus the throughput it buys.
inline std::optional<std::pair<int, double>> select_entry(const ServiceSpec& service,
                                                          const ModelProfile& profile, int size) {
    auto b = select_batch(service, profile, size);
    if (!b) return std::nullopt;
    const ProfileEntry* e = profile.find(size, *b);
    return std::make_pair(*b, e->throughput_rps);
}

// Services are kept sorted by id; index i in every rate vector refers to
// services[i]. Returns -1 when the id is unknown.
inline int service_index(std::span<const ServiceSpec> services, std::string_view id) {
    auto it = std::lower_bound(services.begin(), services.end(), id,
                               [](const ServiceSpec& s, std::string_view v) { return s.service_id < v; });
    if (it == services.end() || it->service_id != id) return -1;
    return static_cast<int>(it - services.begin());
}

// Sorts by id and validates the workload; every service must be schedulable on
// at least one instance size.
inline void validate_services(std::vector<ServiceSpec>& services, const ProfileStore& profiles) {
    std::sort(services.begin(), services.end(),
              [](const ServiceSpec& a, const ServiceSpec& b) { return a.service_id < b.service_id; });
    for (size_t i = 0; i + 1 < services.size(); ++i)
        if (services[i].service_id == services[i + 1].service_id)
            throw SchemaError("duplicate service id '" + services[i].service_id + "'");
    for (const auto& s : services) {
        if (s.service_id.empty()) throw SchemaError("service with empty id");
        if (s.required_rps <= 0.0)
            throw PlanningError("service '" + s.service_id + "': required throughput must be positive");
        if (s.max_p90_ms <= 0.0)
            throw PlanningError("service '" + s.service_id + "': latency ceiling must be positive");
        const ModelProfile& p = profile_for(profiles, s.model_name);
        bool feasible = false;
        for (int size : kInstanceSlices)
            if (select_batch(s, p, size)) feasible = true;
        if (!feasible)
            throw PlanningError("service '" + s.service_id + "' is unschedulable: no (size, batch) of model '" +
                                s.model_name + "' meets p90 <= " + std::to_string(s.max_p90_ms) + " ms");
    }
}

/// One placed instance with its service and batch assignment.
struct AssignedInstance {
    Placement placement;
    std::string service_id;
    int batch = 1;

    auto operator<=>(const AssignedInstance&) const = default;
};

/// One GPU's partition plus assignments. Idle slices carry no record; every
/// stored placement is assigned.
struct GpuConfig {
    std::vector<AssignedInstance> instances;  // sorted by start slot

    void normalize() {
        std::sort(instances.begin(), instances.end(),
                  [](const AssignedInstance& a, const AssignedInstance& b) { return a.placement < b.placement; });
    }
    std::vector<Placement> partition() const {
        std::vector<Placement> p;
        p.reserve(instances.size());
        for (const auto& i : instances) p.push_back(i.placement);
        return p;
    }
    bool empty() const { return instances.empty(); }

    auto operator<=>(const GpuConfig&) const = default;
};

/// Per-service fraction of required throughput contributed by one GPU config.
struct Utility {
    std::vector<double> values;
};

/// Per-service fraction of required throughput currently provided; 1.0 = 100%.
/// Never clamped, so overshoot stays visible.
struct CompletionRates {
    std::vector<double> values;

    bool operator==(const CompletionRates&) const = default;
};

inline CompletionRates zero_completion(size_t n) { return CompletionRates{std::vector<double>(n, 0.0)}; }

inline bool is_satisfied(const CompletionRates& comp) {
    for (double c : comp.values)
        if (c < 1.0 - kSatisfyEps) return false;
    return true;
}

inline CompletionRates apply_utility(const CompletionRates& comp, const Utility& u) {
    if (comp.values.size() != u.values.size())
        throw PlanningError("completion/utility dimension mismatch: " + std::to_string(comp.values.size()) +
                            " vs " + std::to_string(u.values.size()));
    CompletionRates out = comp;
    for (size_t i = 0; i < u.values.size(); ++i) out.values[i] += u.values[i];
    return out;
}

inline double slack_of(const CompletionRates& comp) {
    double s = 0.0;
    for (double c : comp.values) s += std::max(0.0, c - 1.0);
    return s;
}

namespace detail {

// Accumulates instance counts keyed by (service index, size, batch), then sums
// count * throughput per service in key order, dividing by the requirement
// once at the end. Keeping the arithmetic count-based makes the result depend
// only on the instance multiset, never on instance order, which is what makes
// equal-size service swaps exactly neutral.
template <typename ConfigRange>
std::vector<double> sum_rates(const ConfigRange& configs, std::span<const ServiceSpec> services,
                              const ProfileStore& profiles) {
    std::map<std::tuple<int, int, int>, long long> counts;  // (svc, size, batch) -> count
    for (const auto& cfg : configs) {
        for (const auto& inst : cfg.instances) {
            int idx = service_index(services, inst.service_id);
            if (idx < 0) throw PlanningError("unknown service '" + inst.service_id + "' in configuration");
            counts[{idx, inst.placement.slices, inst.batch}] += 1;
        }
    }
    std::vector<double> total_thr(services.size(), 0.0);
    for (const auto& [key, count] : counts) {
        auto [idx, size, batch] = key;
        const ModelProfile& prof = profile_for(profiles, services[idx].model_name);
        const ProfileEntry* e = prof.find(size, batch);
        if (!e)
            throw PlanningError("profile '" + services[idx].model_name + "' has no entry for size " +
                                std::to_string(size) + " batch " + std::to_string(batch));
        total_thr[idx] += static_cast<double>(count) * e->throughput_rps;
    }
    std::vector<double> out(services.size(), 0.0);
    for (size_t i = 0; i < out.size(); ++i) out[i] = total_thr[i] / services[i].required_rps;
    return out;
}

}  // namespace detail

inline Utility utility_of(const GpuConfig& config, std::span<const ServiceSpec> services,
                          const ProfileStore& profiles) {
    return Utility{detail::sum_rates(std::array{config}, services, profiles)};
}

/// A deployed GPU with a stable identifier.
struct DeployedGpu {
    std::string id;
    GpuConfig config;
};

/// A multiset of GpuConfigs; valid iff the induced completion rates are all >= 100%.
struct Deployment {
    std::vector<DeployedGpu> gpus;
};

// Induced completion rates of a set of GPU configs, computed from global
// instance counts (order-free; see detail::sum_rates).
inline CompletionRates completion_of(std::span<const GpuConfig> configs, std::span<const ServiceSpec> services,
                                     const ProfileStore& profiles) {
    return CompletionRates{detail::sum_rates(configs, services, profiles)};
}

inline CompletionRates completion_of(const Deployment& dep, std::span<const ServiceSpec> services,
                                     const ProfileStore& profiles) {
    std::vector<GpuConfig> configs;
    configs.reserve(dep.gpus.size());
    for (const auto& g : dep.gpus) configs.push_back(g.config);
    return completion_of(configs, services, profiles);
}

// Canonical deployment construction: configs sorted, ids gpu-0..gpu-N.
inline Deployment make_deployment(std::vector<GpuConfig> configs, const std::string& prefix = "gpu-") {
    std::sort(configs.begin(), configs.end());
    Deployment dep;
    dep.gpus.reserve(configs.size());
    for (size_t i = 0; i < configs.size(); ++i)
        dep.gpus.push_back(DeployedGpu{prefix + std::to_string(i), std::move(configs[i])});
    return dep;
}

}  // namespace migplan
