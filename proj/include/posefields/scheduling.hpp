#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "posefields/random.hpp"
#include "posefields/types.hpp"


namespace posefields {


struct TaskSpec {
    std::string name;
    std::size_t size = 0;
    double weight = 0.0;
};

/// One epoch of multi-task batches. `batches[b][t]` holds the sample indices
/// task t contributes to batch b (task order as given).
struct EpochPlan {
    std::vector<TaskSpec> tasks;
    std::vector<std::size_t> quotas;
    std::size_t batch_size = 0;
    std::size_t limiting_task = 0;
    std::uint64_t epoch = 0;
    std::vector<std::vector<std::vector<std::size_t>>> batches;
};


class ScheduleError : public InputError {
public:
    using InputError::InputError;
};


/// Per-batch sample counts: floor(w * B) plus largest-remainder correction so
/// they sum to B. Remainder ties go to the lexicographically smaller name.
inline std::vector<std::size_t> batch_quotas(const std::vector<TaskSpec>& tasks, std::size_t batch_size) {
    if (tasks.empty()) throw ScheduleError("no tasks given");
    if (batch_size == 0) throw ScheduleError("batch size must be positive");
    double total = 0.0;
    std::map<std::string, int> names;
    for (const auto& t : tasks) {
        if (t.size == 0) throw ScheduleError("task '" + t.name + "' has no samples");
        if (!(t.weight > 0.0 && t.weight <= 1.0)) throw ScheduleError("task '" + t.name + "' weight must be in (0, 1]");
        if (++names[t.name] > 1) throw ScheduleError("duplicate task name '" + t.name + "'");
        total += t.weight;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ScheduleError("task weights must sum to 1");

    std::vector<std::size_t> quotas(tasks.size());
    std::vector<std::size_t> order(tasks.size());
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        const double exact = tasks[i].weight * static_cast<double>(batch_size);
        quotas[i] = static_cast<std::size_t>(std::floor(exact + 1e-9));
        assigned += quotas[i];
        order[i] = i;
    }
    auto remainder = [&](std::size_t i) {
        return tasks[i].weight * static_cast<double>(batch_size) - static_cast<double>(quotas[i]);
    };
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double ra = remainder(a), rb = remainder(b);
        if (std::abs(ra - rb) > 1e-12) return ra > rb;
        return tasks[a].name < tasks[b].name;
    });
    for (std::size_t i = 0; assigned < batch_size; ++i, ++assigned) ++quotas[order[i % order.size()]];

    for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (quotas[i] == 0) {
            throw ScheduleError("task '" + tasks[i].name + "' gets no samples per batch at this batch size");
        }
    }
    return quotas;
}

/// Batches per epoch: the task with the smallest size / quota runs out first.
inline std::size_t batches_per_epoch(const std::vector<TaskSpec>& tasks, const std::vector<std::size_t>& quotas) {
    std::size_t batches = tasks[0].size / quotas[0];
    for (std::size_t i = 1; i < tasks.size(); ++i) batches = std::min(batches, tasks[i].size / quotas[i]);
    return batches;
}

/// Samples each task contributes to one epoch.
inline std::map<std::string, std::size_t> effective_epoch_samples(const std::vector<TaskSpec>& tasks,
                                                                  std::size_t batch_size) {
    const auto quotas = batch_quotas(tasks, batch_size);
    const std::size_t batches = batches_per_epoch(tasks, quotas);
    std::map<std::string, std::size_t> out;
    for (std::size_t i = 0; i < tasks.size(); ++i) out[tasks[i].name] = batches * quotas[i];
    return out;
}

/// Every task draws without replacement from its own shuffle, seeded from
/// (seed, epoch, task name), so reordering tasks only relabels the plan. The
/// epoch ends when the limiting task is exhausted.
inline EpochPlan plan_epoch(const std::vector<TaskSpec>& tasks, std::size_t batch_size, std::uint64_t seed,
                            std::uint64_t epoch = 0) {
    EpochPlan plan;
    plan.tasks = tasks;
    plan.batch_size = batch_size;
    plan.epoch = epoch;
    plan.quotas = batch_quotas(tasks, batch_size);
    const std::size_t batches = batches_per_epoch(tasks, plan.quotas);

    plan.limiting_task = 0;
    for (std::size_t i = 1; i < tasks.size(); ++i) {
        const std::size_t a = tasks[i].size * plan.quotas[plan.limiting_task];
        const std::size_t b = tasks[plan.limiting_task].size * plan.quotas[i];
        if (a < b || (a == b && tasks[i].name < tasks[plan.limiting_task].name)) plan.limiting_task = i;
    }

    std::vector<std::vector<std::size_t>> streams;
    for (const auto& t : tasks) {
        Rng rng(mix_seed(mix_seed(seed, epoch), hash_string(t.name)));
        streams.push_back(shuffled_indices(t.size, rng));
    }
    plan.batches.assign(batches, std::vector<std::vector<std::size_t>>(tasks.size()));
    for (std::size_t b = 0; b < batches; ++b) {
        for (std::size_t t = 0; t < tasks.size(); ++t) {
            const auto first = streams[t].begin() + static_cast<std::ptrdiff_t>(b * plan.quotas[t]);
            plan.batches[b][t].assign(first, first + static_cast<std::ptrdiff_t>(plan.quotas[t]));
        }
    }
    return plan;
}

inline nlohmann::json plan_to_json(const EpochPlan& plan) {
    nlohmann::json tasks = nlohmann::json::array();
    for (std::size_t i = 0; i < plan.tasks.size(); ++i) {
        tasks.push_back({{"name", plan.tasks[i].name},
                         {"size", plan.tasks[i].size},
                         {"weight", plan.tasks[i].weight},
                         {"quota", plan.quotas[i]}});
    }
    nlohmann::json batches = nlohmann::json::array();
    for (const auto& batch : plan.batches) {
        nlohmann::json b = nlohmann::json::object();
        for (std::size_t t = 0; t < plan.tasks.size(); ++t) b[plan.tasks[t].name] = batch[t];
        batches.push_back(std::move(b));
    }
    return {{"batch_size", plan.batch_size},
            {"epoch", plan.epoch},
            {"limiting_task", plan.tasks[plan.limiting_task].name},
            {"tasks", tasks},
            {"batches", batches}};
}


}  // namespace posefields
