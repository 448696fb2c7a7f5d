#include "mtrl/evals.hpp"

#include <sstream>

namespace mtrl {

double SuccessTable::mean_success() const {
    if (success_by_task.empty()) return 0.0;
    double s = 0.0;
    for (const auto& [task, rate] : success_by_task) s += rate;
    return s / double(success_by_task.size());
}

std::string SuccessTable::to_text() const {
    std::ostringstream os;
    for (const auto& [task, rate] : success_by_task) {
        os << "task " << task << " (" << task_by_id(task).name() << "): "
           << MetricsWriter::fmt(rate * 100.0) << "% over "
           << trials_by_task.at(task) << " trials\n";
    }
    os << "mean: " << MetricsWriter::fmt(mean_success() * 100.0) << "%\n";
    return os.str();
}

std::string SuccessTable::to_csv() const {
    std::ostringstream os;
    os << "task,trials,success_rate\n";
    for (const auto& [task, rate] : success_by_task)
        os << task << ',' << trials_by_task.at(task) << ','
           << MetricsWriter::fmt(rate) << "\n";
    return os.str();
}

std::string SuccessTable::trials_csv() const {
    std::ostringstream os;
    os << "task,trial,success,episode_len,crop_lo,crop_hi\n";
    for (const auto& t : trials) {
        os << t.task << ',' << t.trial << ',' << (t.success ? 1 : 0) << ',' << t.length;
        if (t.crop_lo >= 0)
            os << ',' << t.crop_lo << ',' << t.crop_hi;
        else
            os << ",,";
        os << "\n";
    }
    return os.str();
}

SuccessTable eval_standard(const System& sys, const DemoStore& demos,
                           const std::vector<int>& tasks, int trials_per_task,
                           uint64_t seed) {
    require(trials_per_task >= 1, "eval: trials must be >= 1");
    SuccessTable table;
    for (int task : tasks) {
        RandomStream rng(seed ^ fnv1a("eval-standard-task" + std::to_string(task)));
        int hits = 0;
        for (int trial = 0; trial < trials_per_task; ++trial) {
            Vecf z;
            if (sys.cfg.ablation != Ablation::SingleTask) {
                size_t di = demos.sample_demo(task, rng);
                z = sys.condition(demos.demo(di));
            }
            auto out = sys.rollout_greedy(task, z, rng);
            hits += out.success ? 1 : 0;
            table.trials.push_back({task, trial, out.success, out.length, -1, -1});
        }
        table.success_by_task[task] = double(hits) / double(trials_per_task);
        table.trials_by_task[task] = trials_per_task;
    }
    return table;
}

SuccessTable eval_incomplete(const System& sys, const DemoStore& demos,
                             const std::vector<int>& tasks, int demos_per_task,
                             int crops_per_demo, uint64_t seed) {
    require(sys.cfg.ablation != Ablation::SingleTask,
            "eval_incomplete: single-task policies take no demonstration input");
    SuccessTable table;
    for (int task : tasks) {
        RandomStream rng(seed ^ fnv1a("eval-incomplete-task" + std::to_string(task)));
        int hits = 0, trials = 0;
        for (int d = 0; d < demos_per_task; ++d) {
            size_t di = demos.sample_demo(task, rng);
            const Demonstration& demo = demos.demo(di);
            for (int c = 0; c < crops_per_demo; ++c) {
                auto [u, v] = temporal_crop(demo.length(), rng);
                Vecf z = sys.condition(demo, u, v);
                auto out = sys.rollout_greedy(task, z, rng);
                hits += out.success ? 1 : 0;
                table.trials.push_back({task, trials, out.success, out.length, u, v});
                ++trials;
            }
        }
        table.success_by_task[task] = double(hits) / double(trials);
        table.trials_by_task[task] = trials;
    }
    return table;
}

SuccessTable eval_oneshot(const System& sys, const std::vector<int>& heldout_tasks,
                          int trials_per_task, uint64_t seed) {
    require(sys.cfg.ablation != Ablation::SingleTask,
            "eval_oneshot: single-task policies take no demonstration input");
    for (int task : heldout_tasks)
        require(sys.demo_histogram.find(task) == sys.demo_histogram.end(),
                "eval_oneshot: held-out task " + std::to_string(task) +
                    " appears in the training demonstration set");
    SuccessTable table;
    for (int task : heldout_tasks) {
        RandomStream rng(seed ^ fnv1a("eval-oneshot-task" + std::to_string(task)));
        TaskSpec spec = task_by_id(task);
        int hits = 0;
        for (int trial = 0; trial < trials_per_task; ++trial) {
            Demonstration demo = scripted_demo(sys.env, spec, rng);
            Vecf z = sys.condition(demo);
            auto out = sys.rollout_greedy(task, z, rng);
            hits += out.success ? 1 : 0;
            table.trials.push_back({task, trial, out.success, out.length, -1, -1});
        }
        table.success_by_task[task] = double(hits) / double(trials_per_task);
        table.trials_by_task[task] = trials_per_task;
    }
    return table;
}

double random_policy_success(const Environment& env, const TaskSpec& task,
                             int episodes, uint64_t seed) {
    RandomStream rng(seed ^ fnv1a("random-baseline"));
    int hits = 0;
    for (int e = 0; e < episodes; ++e) {
        WorldState w = env.reset(task, rng);
        bool success = false;
        while (!w.terminal) {
            Eigen::Vector3f a{rng.uniformf(-1.0f, 1.0f), rng.uniformf(-1.0f, 1.0f),
                              rng.uniformf(-1.0f, 1.0f)};
            StepResult r = env.step(w, a, task);
            success = success || r.success;
        }
        hits += success ? 1 : 0;
    }
    return double(hits) / double(episodes);
}

}  // namespace mtrl
