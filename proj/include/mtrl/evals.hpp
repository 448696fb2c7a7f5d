#pragma once

#include "mtrl/trainer.hpp"

namespace mtrl {

struct TrialRecord {
    int task = 0;
    int trial = 0;
    bool success = false;
    int length = 0;
    int crop_lo = -1, crop_hi = -1;  // incomplete mode only
};

struct SuccessTable {
    std::map<int, double> success_by_task;
    std::map<int, int> trials_by_task;
    std::vector<TrialRecord> trials;

    double mean_success() const;
    std::string to_text() const;
    std::string to_csv() const;
    std::string trials_csv() const;
};

// Condition on complete demonstrations sampled from the store, roll out
// greedily on fresh layouts.
SuccessTable eval_standard(const System& sys, const DemoStore& demos,
                           const std::vector<int>& tasks, int trials_per_task,
                           uint64_t seed);

// Condition on randomly cropped demonstrations: `demos_per_task`
// demonstrations, `crops_per_demo` crops each, one rollout per crop.
SuccessTable eval_incomplete(const System& sys, const DemoStore& demos,
                             const std::vector<int>& tasks, int demos_per_task,
                             int crops_per_demo, uint64_t seed);

// One fresh scripted demonstration per trial of each held-out task. Errors if
// the checkpoint was trained on any of these tasks.
SuccessTable eval_oneshot(const System& sys, const std::vector<int>& heldout_tasks,
                          int trials_per_task, uint64_t seed);

// success rate of uniform random actions
double random_policy_success(const Environment& env, const TaskSpec& task,
                             int episodes, uint64_t seed);

}  // namespace mtrl
