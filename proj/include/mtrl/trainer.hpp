#pragma once

#include <functional>
#include <map>
#include <optional>

#include "mtrl/behavior.hpp"
#include "mtrl/checkpoint.hpp"
#include "mtrl/config.hpp"
#include "mtrl/ddpg.hpp"
#include "mtrl/metrics.hpp"
#include "mtrl/tinet.hpp"

namespace mtrl {

// A complete learner: encoders, self-organizing nets, task inference and
// actor-critic, wired according to the configured ablation.
struct System {
    RunConfig cfg;
    Environment env;
    Encoders enc;
    std::optional<BehaviorHierarchy> hierarchy;  // full, no_tinet
    std::optional<GwrNetwork> behavior_direct;   // no_act_int
    std::optional<TaskInferenceNet> tinet;       // full, no_act_int, tinet_only
    std::optional<ActorCritic> ac;               // all but single_task
    std::map<int, Encoders> task_enc;            // single_task
    std::map<int, ActorCritic> task_ac;          // single_task
    std::map<int, int> demo_histogram;           // training dataset composition

    // frozen copies used for bootstrap targets, following the actor-critic
    // target copies at the same rate
    Encoders enc_target;
    std::optional<TaskInferenceNet> tinet_target;
    std::map<int, Encoders> task_enc_target;

    void soft_update_conditioning_targets();

    static System build(const RunConfig& cfg);

    int z_width() const { return cfg.task_rep_width(); }

    // behavior target g^b for a demonstration (full / no_act_int / no_tinet)
    Vecf behavior_target(const Demonstration& demo) const;
    // adapts whichever self-organizing nets the ablation uses
    void adapt_behavior(const Demonstration& demo);

    // conditioning vector computed from a demo range (inclusive frames)
    Vecf condition(const Demonstration& demo, int lo, int hi) const;
    Vecf condition(const Demonstration& demo) const;

    // every trainable parameter, in a stable order
    std::vector<nn::Param*> trainable_params();

    struct EpisodeOutcome {
        float reward = 0.0f;
        int length = 0;
        bool success = false;
    };
    // One greedy episode on a fresh layout; `task_id` also selects the
    // per-task nets under the single-task ablation.
    EpisodeOutcome rollout_greedy(int task_id, const Vecf& z, RandomStream& rng) const;
};

void save_system(const System& sys, const std::string& path);
System load_system(const std::string& path);

struct TrainResult {
    std::string metrics_path;
    std::string checkpoint_path;
    std::string manifest_path;
    int episodes = 0;
};

std::vector<std::string> metrics_columns_for(Ablation a);

using ProgressFn = std::function<void(int episode, const std::string& line)>;

// Full training run; writes metrics.csv, checkpoint.mtrl and manifest.json
// into out_dir.
TrainResult train_run(const RunConfig& cfg, const DemoStore& demos,
                      const std::string& out_dir, const ProgressFn& progress = {});

// Demonstration-side self-supervision only: behavior lookup, hierarchy
// adaptation, temporal cropping and SSL updates, no environment interaction.
struct SslOnlyResult {
    float last_bm = 0.0f;
    float last_contrastive = 0.0f;
    int updates = 0;
};
SslOnlyResult train_ssl_only(System& sys, const DemoStore& demos,
                             const std::vector<int>& tasks, int iterations,
                             RandomStream& rng);

}  // namespace mtrl
