#include <gtest/gtest.h>

#include <set>

#include "posefields/scheduling.hpp"

using namespace posefields;


namespace {

// Flattens the samples task t contributes across the epoch.
std::vector<std::size_t> drawn(const EpochPlan& plan, std::size_t t) {
    std::vector<std::size_t> out;
    for (const auto& batch : plan.batches) out.insert(out.end(), batch[t].begin(), batch[t].end());
    return out;
}

std::string thrown_message(const std::vector<TaskSpec>& tasks, std::size_t b) {
    try {
        batch_quotas(tasks, b);
    } catch (const ScheduleError& e) {
        return e.what();
    }
    return {};
}

}  // namespace


TEST(Scheduling, LaneKeypointPairCapsAtSmallerTask) {
    const std::vector<TaskSpec> tasks = {{"lanes", 10000, 0.5}, {"keypoints", 4000, 0.5}};
    const auto two = effective_epoch_samples(tasks, 2);
    EXPECT_EQ(two.at("lanes"), 4000u);
    EXPECT_EQ(two.at("keypoints"), 4000u);
    const auto plan = plan_epoch(tasks, 2, 1);
    EXPECT_EQ(plan.batches.size(), 4000u);
    EXPECT_EQ(plan.tasks[plan.limiting_task].name, "keypoints");
    const auto big = effective_epoch_samples(tasks, 64);
    EXPECT_EQ(big.at("lanes"), 4000u);  // 125 batches of 32
    EXPECT_EQ(big.at("keypoints"), 4000u);
}

TEST(Scheduling, SingleTaskCoversEveryIndexOnce) {
    const auto plan = plan_epoch({{"only", 100, 1.0}}, 10, 3);
    ASSERT_EQ(plan.batches.size(), 10u);
    auto all = drawn(plan, 0);
    std::sort(all.begin(), all.end());
    for (std::size_t i = 0; i < 100; ++i) EXPECT_EQ(all[i], i);
}

TEST(Scheduling, FourEqualTasks) {
    const std::vector<TaskSpec> tasks = {{"a", 8, 0.25}, {"b", 8, 0.25}, {"c", 8, 0.25}, {"d", 4, 0.25}};
    const auto plan = plan_epoch(tasks, 4, 5);
    EXPECT_EQ(plan.quotas, (std::vector<std::size_t>{1, 1, 1, 1}));
    EXPECT_EQ(plan.batches.size(), 4u);
    EXPECT_EQ(plan.limiting_task, 3u);
    auto d = drawn(plan, 3);
    std::sort(d.begin(), d.end());
    EXPECT_EQ(d, (std::vector<std::size_t>{0, 1, 2, 3}));
}

TEST(Scheduling, UnequalWeights) {
    const auto got = effective_epoch_samples({{"a", 6, 2.0 / 3.0}, {"b", 3, 1.0 / 3.0}}, 3);
    EXPECT_EQ(got.at("a"), 6u);
    EXPECT_EQ(got.at("b"), 3u);
}

TEST(Scheduling, QuotasUseLargestRemainderWithNameTies) {
    EXPECT_EQ(batch_quotas({{"x", 10, 0.5}, {"a", 10, 0.5}}, 3), (std::vector<std::size_t>{1, 2}));
    EXPECT_EQ(batch_quotas({{"a", 10, 0.7}, {"b", 10, 0.3}}, 4), (std::vector<std::size_t>{3, 1}));
    for (std::size_t b = 3; b < 40; ++b) {
        const auto q = batch_quotas({{"a", 10, 0.2}, {"b", 10, 0.3}, {"c", 10, 0.5}}, b);
        EXPECT_EQ(q[0] + q[1] + q[2], b);
    }
}

TEST(Scheduling, Errors) {
    EXPECT_NE(thrown_message({{"big", 10, 0.9}, {"tiny", 10, 0.1}}, 2).find("tiny"), std::string::npos);
    EXPECT_NE(thrown_message({{"a", 10, 0.5}, {"b", 10, 0.4}}, 2).find("sum to 1"), std::string::npos);
    EXPECT_NE(thrown_message({{"a", 10, 0.5}, {"a", 10, 0.5}}, 2).find("duplicate"), std::string::npos);
    EXPECT_NE(thrown_message({{"a", 0, 1.0}}, 2).find("'a'"), std::string::npos);
    EXPECT_THROW(batch_quotas({}, 2), ScheduleError);
    EXPECT_THROW(batch_quotas({{"a", 5, 1.0}}, 0), ScheduleError);
    EXPECT_THROW(batch_quotas({{"a", 5, -1.0}, {"b", 5, 2.0}}, 2), InputError);
}

TEST(Scheduling, Deterministic) {
    const std::vector<TaskSpec> tasks = {{"a", 50, 0.5}, {"b", 30, 0.5}};
    const auto p = plan_epoch(tasks, 4, 9, 2), q = plan_epoch(tasks, 4, 9, 2);
    EXPECT_EQ(p.batches, q.batches);
    EXPECT_EQ(plan_to_json(p).dump(), plan_to_json(q).dump());
    EXPECT_NE(plan_epoch(tasks, 4, 9, 3).batches, p.batches);
}

TEST(Scheduling, ReorderingTasksOnlyRelabels) {
    const std::vector<TaskSpec> fwd = {{"a", 50, 0.25}, {"b", 30, 0.5}, {"c", 70, 0.25}};
    const std::vector<TaskSpec> rev = {fwd[2], fwd[0], fwd[1]};
    const auto p = plan_epoch(fwd, 8, 11), q = plan_epoch(rev, 8, 11);
    ASSERT_EQ(p.batches.size(), q.batches.size());
    EXPECT_EQ(p.tasks[p.limiting_task].name, q.tasks[q.limiting_task].name);
    for (std::size_t b = 0; b < p.batches.size(); ++b) {
        EXPECT_EQ(p.batches[b][0], q.batches[b][1]);
        EXPECT_EQ(p.batches[b][1], q.batches[b][2]);
        EXPECT_EQ(p.batches[b][2], q.batches[b][0]);
    }
}

TEST(Scheduling, NoRepeatsNoOversampling) {
    Rng rng(12);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + uniform_index(rng, 4);
        std::vector<TaskSpec> tasks;
        std::vector<double> raw(n);
        double total = 0;
        for (auto& r : raw) total += (r = 0.1 + uniform01(rng));
        for (std::size_t i = 0; i < n; ++i)
            tasks.push_back({"t" + std::to_string(i), 1 + uniform_index(rng, 300), raw[i] / total});
        const std::size_t batch = n + uniform_index(rng, 30);
        EpochPlan plan;
        try {
            plan = plan_epoch(tasks, batch, trial);
        } catch (const ScheduleError&) {
            continue;  // a weight too small for this batch size
        }
        for (std::size_t t = 0; t < n; ++t) {
            const auto all = drawn(plan, t);
            EXPECT_LE(all.size(), tasks[t].size);
            EXPECT_EQ(std::set<std::size_t>(all.begin(), all.end()).size(), all.size());
            for (auto i : all) EXPECT_LT(i, tasks[t].size);
        }
        // one more batch would overrun the limiting task
        const auto lim = plan.limiting_task;
        EXPECT_GT((plan.batches.size() + 1) * plan.quotas[lim], tasks[lim].size);
        for (const auto& b : plan.batches) {
            std::size_t sum = 0;
            for (const auto& part : b) sum += part.size();
            EXPECT_EQ(sum, batch);
        }
    }
}
