#include "mtrl/config.hpp"

#include <fstream>
#include <sstream>

#include "nlohmann/json.hpp"

namespace mtrl {

using json = nlohmann::json;

Setting setting_from_string(const std::string& s) {
    if (s == "fixed") return Setting::Fixed;
    if (s == "continual") return Setting::Continual;
    fail("unknown setting '" + s + "' (want fixed|continual)");
}

Ablation ablation_from_string(const std::string& s) {
    if (s == "full") return Ablation::Full;
    if (s == "no_act_int" || s == "no-act-int") return Ablation::NoActInt;
    if (s == "tinet_only" || s == "tinet-only") return Ablation::TinetOnly;
    if (s == "no_tinet" || s == "no-tinet") return Ablation::NoTinet;
    if (s == "single_task" || s == "single-task") return Ablation::SingleTask;
    fail("unknown ablation '" + s +
         "' (want full|no_act_int|tinet_only|no_tinet|single_task)");
}

std::string to_string(Setting s) { return s == Setting::Fixed ? "fixed" : "continual"; }

std::string to_string(Ablation a) {
    switch (a) {
        case Ablation::Full: return "full";
        case Ablation::NoActInt: return "no_act_int";
        case Ablation::TinetOnly: return "tinet_only";
        case Ablation::NoTinet: return "no_tinet";
        case Ablation::SingleTask: return "single_task";
    }
    return "?";
}

RunConfig::RunConfig()
    : gwr_act(gwr_params_action()),
      gwr_int(gwr_params_intention()),
      gwr_b(gwr_params_behavior()) {}

int RunConfig::task_rep_width() const {
    switch (ablation) {
        case Ablation::Full: return demo_hidden + state_feat;
        case Ablation::NoActInt: return demo_hidden;
        case Ablation::TinetOnly: return demo_hidden + state_feat;
        case Ablation::NoTinet: return demo_hidden + state_feat;
        case Ablation::SingleTask: return 0;
    }
    return 0;
}

void RunConfig::validate() const {
    require(episodes >= 1, "config: episodes must be >= 1");
    require(!tasks.empty(), "config: task list is empty");
    if (setting == Setting::Continual) {
        require(milestones.size() + 1 == tasks.size(),
                "config: continual needs one milestone per task after the first");
        int prev = 0;
        for (int m : milestones) {
            require(m > prev, "config: milestones must be strictly increasing");
            prev = m;
        }
    }
    require(lr > 0.0f, "config: learning rate must be positive");
    require(gamma >= 0.0f && gamma < 1.0f, "config: gamma must be in [0,1)");
    require(soft_update_rate > 0.0f && soft_update_rate <= 1.0f,
            "config: soft update rate must be in (0,1]");
    require(rl_batch >= 1 && ssl_batch >= 2, "config: bad batch sizes");
    require(update_every >= 1, "config: update_every must be >= 1");
    require(temperature > 0.0f, "config: temperature must be positive");
    require(state_feat >= 1 && demo_hidden >= 1, "config: bad widths");
    gwr_act.validate();
    gwr_int.validate();
    gwr_b.validate();
}

std::vector<int> RunConfig::active_tasks(int episode) const {
    if (setting == Setting::Fixed) return tasks;
    std::vector<int> active = {tasks[0]};
    for (size_t i = 0; i < milestones.size(); ++i)
        if (episode >= milestones[i]) active.push_back(tasks[i + 1]);
    return active;
}

namespace {

json gwr_to_json(const GwrParams& p) {
    return json{{"activity_threshold", p.activity_threshold},
                {"habituation_threshold", p.habituation_threshold},
                {"eps_bmu", p.eps_bmu},
                {"eps_neighbor", p.eps_neighbor},
                {"h0", p.h0},
                {"alpha_bmu", p.alpha_bmu},
                {"alpha_neighbor", p.alpha_neighbor},
                {"tau_bmu", p.tau_bmu},
                {"tau_neighbor", p.tau_neighbor},
                {"max_edge_age", p.max_edge_age}};
}

GwrParams gwr_from_json(const json& j, GwrParams p) {
    p.activity_threshold = j.value("activity_threshold", p.activity_threshold);
    p.habituation_threshold = j.value("habituation_threshold", p.habituation_threshold);
    p.eps_bmu = j.value("eps_bmu", p.eps_bmu);
    p.eps_neighbor = j.value("eps_neighbor", p.eps_neighbor);
    p.h0 = j.value("h0", p.h0);
    p.alpha_bmu = j.value("alpha_bmu", p.alpha_bmu);
    p.alpha_neighbor = j.value("alpha_neighbor", p.alpha_neighbor);
    p.tau_bmu = j.value("tau_bmu", p.tau_bmu);
    p.tau_neighbor = j.value("tau_neighbor", p.tau_neighbor);
    p.max_edge_age = j.value("max_edge_age", p.max_edge_age);
    return p;
}

}  // namespace

std::string RunConfig::to_json() const {
    json j;
    j["seed"] = seed;
    j["setting"] = to_string(setting);
    j["ablation"] = to_string(ablation);
    j["episodes"] = episodes;
    j["milestones"] = milestones;
    j["tasks"] = tasks;
    j["demo_path"] = demo_path;
    j["env"] = json{{"step_gain", env.step_gain},
                    {"grasp_radius", env.grasp_radius},
                    {"grip_close", env.grip_close},
                    {"grip_open", env.grip_open},
                    {"success_radius", env.success_radius},
                    {"max_steps", env.max_steps},
                    {"min_spawn_dist", env.min_spawn_dist},
                    {"spawn_margin", env.spawn_margin},
                    {"place_attempts", env.place_attempts}};
    j["nn"] = json{{"state_feat", state_feat},
                   {"demo_hidden", demo_hidden},
                   {"tinet_hidden", tinet_hidden},
                   {"policy_hidden", policy_hidden},
                   {"lr", lr},
                   {"adam_beta1", adam_beta1},
                   {"adam_beta2", adam_beta2},
                   {"adam_eps", adam_eps},
                   {"demo_embed_scale", demo_embed_scale},
                   {"state_embed_scale", state_embed_scale}};
    j["rl"] = json{{"gamma", gamma},
                   {"soft_update_rate", soft_update_rate},
                   {"batch", rl_batch},
                   {"replay_capacity", replay_capacity},
                   {"min_buffer", rl_min_buffer},
                   {"noise_start", noise_start},
                   {"noise_end", noise_end},
                   {"warmup_uniform_steps", warmup_uniform_steps},
                   {"explore_episode_prob", explore_episode_prob}};
    j["ssl"] = json{{"batch", ssl_batch},
                    {"capacity", ssl_capacity},
                    {"min_buffer", ssl_min_buffer},
                    {"temperature", temperature}};
    j["update_every"] = update_every;
    j["gwr"] = json{{"action", gwr_to_json(gwr_act)},
                    {"intention", gwr_to_json(gwr_int)},
                    {"behavior", gwr_to_json(gwr_b)}};
    return j.dump(2);
}

RunConfig RunConfig::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        fail(std::string("config: parse error: ") + e.what());
    }
    RunConfig c;
    c.seed = j.value("seed", c.seed);
    c.setting = setting_from_string(j.value("setting", to_string(c.setting)));
    c.ablation = ablation_from_string(j.value("ablation", to_string(c.ablation)));
    c.episodes = j.value("episodes", c.episodes);
    c.milestones = j.value("milestones", c.milestones);
    c.tasks = j.value("tasks", c.tasks);
    c.demo_path = j.value("demo_path", c.demo_path);
    if (j.contains("env")) {
        const json& e = j["env"];
        c.env.step_gain = e.value("step_gain", c.env.step_gain);
        c.env.grasp_radius = e.value("grasp_radius", c.env.grasp_radius);
        c.env.grip_close = e.value("grip_close", c.env.grip_close);
        c.env.grip_open = e.value("grip_open", c.env.grip_open);
        c.env.success_radius = e.value("success_radius", c.env.success_radius);
        c.env.max_steps = e.value("max_steps", c.env.max_steps);
        c.env.min_spawn_dist = e.value("min_spawn_dist", c.env.min_spawn_dist);
        c.env.spawn_margin = e.value("spawn_margin", c.env.spawn_margin);
        c.env.place_attempts = e.value("place_attempts", c.env.place_attempts);
    }
    if (j.contains("nn")) {
        const json& n = j["nn"];
        c.state_feat = n.value("state_feat", c.state_feat);
        c.demo_hidden = n.value("demo_hidden", c.demo_hidden);
        c.tinet_hidden = n.value("tinet_hidden", c.tinet_hidden);
        c.policy_hidden = n.value("policy_hidden", c.policy_hidden);
        c.lr = n.value("lr", c.lr);
        c.adam_beta1 = n.value("adam_beta1", c.adam_beta1);
        c.adam_beta2 = n.value("adam_beta2", c.adam_beta2);
        c.adam_eps = n.value("adam_eps", c.adam_eps);
        c.demo_embed_scale = n.value("demo_embed_scale", c.demo_embed_scale);
        c.state_embed_scale = n.value("state_embed_scale", c.state_embed_scale);
    }
    if (j.contains("rl")) {
        const json& r = j["rl"];
        c.gamma = r.value("gamma", c.gamma);
        c.soft_update_rate = r.value("soft_update_rate", c.soft_update_rate);
        c.rl_batch = r.value("batch", c.rl_batch);
        c.replay_capacity = r.value("replay_capacity", c.replay_capacity);
        c.rl_min_buffer = r.value("min_buffer", c.rl_min_buffer);
        c.noise_start = r.value("noise_start", c.noise_start);
        c.noise_end = r.value("noise_end", c.noise_end);
        c.warmup_uniform_steps = r.value("warmup_uniform_steps", c.warmup_uniform_steps);
        c.explore_episode_prob = r.value("explore_episode_prob", c.explore_episode_prob);
    }
    if (j.contains("ssl")) {
        const json& s = j["ssl"];
        c.ssl_batch = s.value("batch", c.ssl_batch);
        c.ssl_capacity = s.value("capacity", c.ssl_capacity);
        c.ssl_min_buffer = s.value("min_buffer", c.ssl_min_buffer);
        c.temperature = s.value("temperature", c.temperature);
    }
    c.update_every = j.value("update_every", c.update_every);
    if (j.contains("gwr")) {
        const json& g = j["gwr"];
        if (g.contains("action")) c.gwr_act = gwr_from_json(g["action"], c.gwr_act);
        if (g.contains("intention")) c.gwr_int = gwr_from_json(g["intention"], c.gwr_int);
        if (g.contains("behavior")) c.gwr_b = gwr_from_json(g["behavior"], c.gwr_b);
    }
    c.validate();
    return c;
}

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream f(path);
    require(f.good(), "cannot open config: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return from_json(ss.str());
}

void RunConfig::save(const std::string& path) const {
    std::ofstream f(path);
    require(f.good(), "cannot open for writing: " + path);
    f << to_json() << "\n";
}

}  // namespace mtrl
