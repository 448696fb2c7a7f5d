#pragma once

#include <string>
#include <vector>

#include "mtrl/gwr.hpp"
#include "mtrl/tablesim.hpp"

namespace mtrl {

enum class Setting { Fixed, Continual };
enum class Ablation { Full, NoActInt, TinetOnly, NoTinet, SingleTask };

Setting setting_from_string(const std::string& s);
Ablation ablation_from_string(const std::string& s);
std::string to_string(Setting s);
std::string to_string(Ablation a);

struct RunConfig {
    uint64_t seed = 1;
    Setting setting = Setting::Fixed;
    Ablation ablation = Ablation::Full;
    int episodes = 20000;
    std::vector<int> milestones = {5000, 10000, 15000};  // continual only
    std::vector<int> tasks = {1, 2, 3, 4};
    std::string demo_path = "demos.txt";

    EnvConfig env;

    // network widths
    int state_feat = 32;    // F
    int demo_hidden = 64;   // H
    int tinet_hidden = 128;
    int policy_hidden = 64;

    // optimizer
    float lr = 1e-3f;
    float adam_beta1 = 0.9f;
    float adam_beta2 = 0.999f;
    float adam_eps = 1e-8f;

    // embeddings fed to the self-organizing nets
    float demo_embed_scale = 0.2f;
    float state_embed_scale = 0.12f;

    // reinforcement learning
    float gamma = 0.99f;
    float soft_update_rate = 0.005f;
    int rl_batch = 256;
    int replay_capacity = 1000000;
    int rl_min_buffer = 1000;
    float noise_start = 0.2f;
    float noise_end = 0.05f;
    int warmup_uniform_steps = 1000;
    // fraction of training episodes rolled out by the undirected explorer
    float explore_episode_prob = 0.2f;

    // self-supervised objective
    int ssl_batch = 256;
    int ssl_capacity = 100000;
    int ssl_min_buffer = 1000;
    float temperature = 0.1f;

    // one update round (one SSL step + one RL step) every this many env steps
    int update_every = 1;

    GwrParams gwr_act;
    GwrParams gwr_int;
    GwrParams gwr_b;

    RunConfig();

    // task representation width implied by the ablation
    int task_rep_width() const;

    void validate() const;
    std::string to_json() const;
    static RunConfig from_json(const std::string& text);
    static RunConfig load(const std::string& path);
    void save(const std::string& path) const;

    // active task ids at a given episode index
    std::vector<int> active_tasks(int episode) const;
};

}  // namespace mtrl
