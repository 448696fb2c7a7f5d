#include "mtrl/trainer.hpp"

#include <cmath>
#include <filesystem>
#include <numeric>
#include <sstream>

#include "nlohmann/json.hpp"

namespace mtrl {

using json = nlohmann::json;

// ---------------------------------------------------------------- System

static void rename_params(std::vector<nn::Param*> params, const std::string& prefix) {
    for (auto* p : params) p->name = prefix + p->name;
}

static Encoders target_copy(const Encoders& enc) {
    Encoders t = enc;
    rename_params(t.params(), "target/");
    return t;
}

System System::build(const RunConfig& cfg) {
    cfg.validate();
    System s;
    s.cfg = cfg;
    s.env = Environment(cfg.env);
    EncoderConfig ec;
    ec.obs_width = kObsWidth;
    ec.state_feat = cfg.state_feat;
    ec.demo_hidden = cfg.demo_hidden;
    ec.demo_embed_scale = cfg.demo_embed_scale;
    ec.state_embed_scale = cfg.state_embed_scale;

    const bool single = cfg.ablation == Ablation::SingleTask;
    if (!single) {
        RandomStream enc_rng(cfg.seed, "init-enc");
        s.enc = Encoders(ec, enc_rng);
    }
    switch (cfg.ablation) {
        case Ablation::Full:
        case Ablation::NoTinet:
            s.hierarchy = BehaviorHierarchy(s.enc, cfg.gwr_act, cfg.gwr_int, cfg.gwr_b,
                                            cfg.seed);
            break;
        case Ablation::NoActInt:
            s.behavior_direct =
                GwrNetwork(cfg.demo_hidden, cfg.gwr_b, cfg.seed ^ fnv1a("g_b_direct"));
            break;
        default:
            break;
    }
    if (cfg.ablation == Ablation::Full || cfg.ablation == Ablation::NoActInt ||
        cfg.ablation == Ablation::TinetOnly) {
        RandomStream ti_rng(cfg.seed, "init-tinet");
        s.tinet = TaskInferenceNet(cfg.demo_hidden, cfg.tinet_hidden,
                                   cfg.task_rep_width(), ti_rng);
        s.tinet_target = *s.tinet;
        rename_params(s.tinet_target->params(), "target/");
    }
    ActorCriticConfig acc;
    acc.state_feat = cfg.state_feat;
    acc.task_rep = cfg.task_rep_width();
    acc.action_dim = 3;
    acc.hidden = cfg.policy_hidden;
    acc.soft_update_rate = cfg.soft_update_rate;
    if (!single) {
        RandomStream ac_rng(cfg.seed, "init-ac");
        s.ac = ActorCritic(acc, ac_rng);
        s.enc_target = target_copy(s.enc);
    } else {
        for (int t : cfg.tasks) {
            std::string prefix = "task" + std::to_string(t) + ".";
            RandomStream er(cfg.seed, "init-enc-" + prefix);
            s.task_enc.emplace(t, Encoders(ec, er, prefix));
            RandomStream ar(cfg.seed, "init-ac-" + prefix);
            s.task_ac.emplace(t, ActorCritic(acc, ar, prefix));
            s.task_enc_target.emplace(t, target_copy(s.task_enc.at(t)));
        }
    }
    return s;
}

void System::soft_update_conditioning_targets() {
    const float rho = cfg.soft_update_rate;
    auto blend = [rho](std::vector<nn::Param*> live, std::vector<nn::Param*> target) {
        for (size_t i = 0; i < live.size(); ++i)
            target[i]->value = rho * live[i]->value + (1.0f - rho) * target[i]->value;
    };
    if (cfg.ablation != Ablation::SingleTask) {
        blend(enc.params(), enc_target.params());
        if (tinet) blend(tinet->params(), tinet_target->params());
    } else {
        for (auto& [t, e] : task_enc) blend(e.params(), task_enc_target.at(t).params());
    }
}

static Demonstration subrange(const Demonstration& demo, int lo, int hi) {
    require(lo >= 0 && hi < demo.length() && lo < hi,
            "demo subrange must hold at least two frames");
    Demonstration d;
    d.task_id = demo.task_id;
    d.frames.assign(demo.frames.begin() + lo, demo.frames.begin() + hi + 1);
    return d;
}

Vecf System::behavior_target(const Demonstration& demo) const {
    if (hierarchy) return hierarchy->lookup(enc, demo);
    if (behavior_direct) {
        Vecf emb = enc.demo_embed(demo, 0, demo.length() - 1);
        return behavior_direct->node(behavior_direct->find_bmus(emb).best).w;
    }
    fail("behavior_target: this ablation has no behavior net");
}

void System::adapt_behavior(const Demonstration& demo) {
    if (hierarchy) {
        hierarchy->adapt(enc, demo);
    } else if (behavior_direct) {
        behavior_direct->adapt(enc.demo_embed(demo, 0, demo.length() - 1));
    }
}

Vecf System::condition(const Demonstration& demo, int lo, int hi) const {
    switch (cfg.ablation) {
        case Ablation::Full:
        case Ablation::NoActInt:
        case Ablation::TinetOnly:
            return tinet->infer(enc.demo_embed(demo, lo, hi));
        case Ablation::NoTinet: {
            if (lo == 0 && hi == demo.length() - 1) return behavior_target(demo);
            return behavior_target(subrange(demo, lo, hi));
        }
        case Ablation::SingleTask:
            return Vecf();
    }
    return Vecf();
}

Vecf System::condition(const Demonstration& demo) const {
    return condition(demo, 0, demo.length() - 1);
}

std::vector<nn::Param*> System::trainable_params() {
    std::vector<nn::Param*> out;
    auto add = [&out](std::vector<nn::Param*> v) {
        for (auto* p : v) out.push_back(p);
    };
    if (cfg.ablation != Ablation::SingleTask) {
        add(enc.params());
        if (tinet) add(tinet->params());
        if (ac) add(ac->live_params());
    } else {
        for (auto& [t, e] : task_enc) add(e.params());
        for (auto& [t, a] : task_ac) add(a.live_params());
    }
    return out;
}

System::EpisodeOutcome System::rollout_greedy(int task_id, const Vecf& z,
                                              RandomStream& rng) const {
    const bool single = cfg.ablation == Ablation::SingleTask;
    const Encoders& e = single ? task_enc.at(task_id) : enc;
    const ActorCritic& a = single ? task_ac.at(task_id) : *ac;
    TaskSpec task = task_by_id(task_id);
    WorldState w = env.reset(task, rng);
    Observation obs = env.observe(w);
    EpisodeOutcome out;
    while (!w.terminal) {
        Vecf x = e.state_features(obs);
        Eigen::Vector3f act = a.act(x, z, 0.0f, rng);
        StepResult r = env.step(w, act, task);
        obs = env.observe(w);
        out.reward += r.reward;
        out.length += 1;
        out.success = out.success || r.success;
    }
    return out;
}

// ------------------------------------------------------------- checkpoint

static std::vector<nn::Param*> all_params(System& s) {
    std::vector<nn::Param*> out = s.trainable_params();
    if (s.ac)
        for (auto* p : s.ac->target_params()) out.push_back(p);
    for (auto& [t, a] : s.task_ac)
        for (auto* p : a.target_params()) out.push_back(p);
    if (s.cfg.ablation != Ablation::SingleTask)
        for (auto* p : s.enc_target.params()) out.push_back(p);
    if (s.tinet_target)
        for (auto* p : s.tinet_target->params()) out.push_back(p);
    for (auto& [t, e] : s.task_enc_target)
        for (auto* p : e.params()) out.push_back(p);
    return out;
}

void save_system(const System& sys, const std::string& path) {
    System& s = const_cast<System&>(sys);
    CheckpointWriter w;
    json meta;
    meta["version"] = 1;
    meta["config"] = json::parse(sys.cfg.to_json());
    meta["task_rep"] = sys.cfg.task_rep_width();
    json hist = json::object();
    for (const auto& [task, count] : sys.demo_histogram)
        hist[std::to_string(task)] = count;
    meta["demo_histogram"] = hist;
    w.add_text("meta", meta.dump(2));
    for (nn::Param* p : all_params(s)) w.add_tensor("params/" + p->name, p->value);
    if (sys.hierarchy) {
        w.add_text("gwr/action", sys.hierarchy->action_net().to_json());
        w.add_text("gwr/intention", sys.hierarchy->intention_net().to_json());
        w.add_text("gwr/behavior", sys.hierarchy->behavior_net().to_json());
    }
    if (sys.behavior_direct) w.add_text("gwr/behavior", sys.behavior_direct->to_json());
    w.write(path);
}

System load_system(const std::string& path) {
    CheckpointReader r(path);
    json meta = json::parse(r.text("meta"));
    require(meta.value("version", 0) == 1, path + ": unsupported checkpoint version");
    RunConfig cfg = RunConfig::from_json(meta.at("config").dump());
    System s = System::build(cfg);
    for (nn::Param* p : all_params(s)) {
        std::string block = "params/" + p->name;
        nn::Mat m = r.tensor(block);
        require(m.rows() == p->value.rows() && m.cols() == p->value.cols(),
                path + ": shape mismatch for block '" + block +
                    "' (checkpoint/config mismatch)");
        p->value = std::move(m);
    }
    if (s.hierarchy) {
        s.hierarchy = BehaviorHierarchy(GwrNetwork::from_json(r.text("gwr/action")),
                                        GwrNetwork::from_json(r.text("gwr/intention")),
                                        GwrNetwork::from_json(r.text("gwr/behavior")));
    }
    if (s.behavior_direct)
        s.behavior_direct = GwrNetwork::from_json(r.text("gwr/behavior"));
    if (meta.contains("demo_histogram"))
        for (auto& [k, v] : meta.at("demo_histogram").items())
            s.demo_histogram[std::stoi(k)] = v.get<int>();
    return s;
}

// ------------------------------------------------------------ update round

std::vector<std::string> metrics_columns_for(Ablation a) {
    std::vector<std::string> c = {"episode", "setting", "test_task", "test_reward",
                                  "episode_len"};
    auto add = [&c](std::initializer_list<const char*> names) {
        for (const char* n : names) c.emplace_back(n);
    };
    switch (a) {
        case Ablation::Full:
            add({"nodes_act", "nodes_int", "nodes_b", "loss_bm", "loss_c", "critic_loss"});
            break;
        case Ablation::NoActInt:
            add({"nodes_b", "loss_bm", "loss_c", "critic_loss"});
            break;
        case Ablation::TinetOnly:
            add({"loss_c", "critic_loss"});
            break;
        case Ablation::NoTinet:
            add({"nodes_act", "nodes_int", "nodes_b", "critic_loss"});
            break;
        case Ablation::SingleTask:
            add({"critic_loss"});
            break;
    }
    return c;
}

namespace {

struct RoundState {
    float last_bm = std::nanf("");
    float last_c = std::nanf("");
    float last_critic = std::nanf("");
};

// One fused update round: the self-supervised loss and the actor-critic
// losses are built on one tape and backpropagated once, so shared parameters
// take a single optimizer step on the summed gradient.
void update_round(System& sys, const DemoStore& demos, SslBuffer& ssl,
                  ReplayBuffer& replay, nn::Adam& opt, RandomStream& rng,
                  int train_task, RoundState& state) {
    const RunConfig& cfg = sys.cfg;
    const bool single = cfg.ablation == Ablation::SingleTask;
    const bool has_tinet = sys.tinet.has_value();
    const int zw = cfg.task_rep_width();

    const bool do_rl = int(replay.size()) >= cfg.rl_min_buffer;
    const bool do_ssl = has_tinet && int(ssl.size()) >=
                                         std::max(cfg.ssl_min_buffer, cfg.ssl_batch);
    if (!do_rl && !do_ssl) return;

    Tape t;
    std::optional<Value> total;
    auto add_loss = [&](Value v) { total = total ? t.add(*total, v) : v; };

    if (do_ssl) {
        const int K = cfg.ssl_batch;
        auto idx = ssl.sample(size_t(K), rng);
        const bool with_bm = cfg.ablation != Ablation::TinetOnly;
        std::vector<Encoders::DemoRange> ranges;
        ranges.reserve(size_t(2 * K));
        Mat targets(K, zw);
        for (int i = 0; i < K; ++i) {
            const SslSample& samp = ssl.at(idx[size_t(i)]);
            const Demonstration& d = demos.demo(samp.demo_index);
            ranges.push_back({&d, 0, d.length() - 1});
            if (with_bm) {
                require(int(samp.behavior_target.size()) == zw,
                        "ssl sample target width mismatch");
                targets.row(i) = samp.behavior_target.transpose();
            }
        }
        for (int i = 0; i < K; ++i) {
            const SslSample& samp = ssl.at(idx[size_t(i)]);
            const Demonstration& d = demos.demo(samp.demo_index);
            ranges.push_back({&d, samp.crop_lo, samp.crop_hi});
        }
        Value embeds = sys.enc.demo_embed_batch(t, ranges, true);
        Value zs = sys.tinet->forward(t, embeds, true);
        const size_t nk = size_t(K);
        std::vector<int> ci(nk), xi(nk);
        std::iota(ci.begin(), ci.end(), 0);
        std::iota(xi.begin(), xi.end(), K);
        Value zc = t.gather_rows(zs, std::move(ci));
        Value zx = t.gather_rows(zs, std::move(xi));
        Value lc = contrastive_loss(t, zc, zx, cfg.temperature);
        state.last_c = t.scalar(lc);
        if (with_bm) {
            Value lbm = behavior_matching_loss(t, zc, std::move(targets));
            state.last_bm = t.scalar(lbm);
            add_loss(ssl_loss(t, lbm, lc));
        } else {
            add_loss(lc);
        }
    }

    if (do_rl) {
        const int B = cfg.rl_batch;
        auto idx = replay.sample(size_t(B), rng);
        Mat S(B, kObsWidth), S2(B, kObsWidth), A(B, 3);
        Vecf rew(B), term(B);
        for (int i = 0; i < B; ++i) {
            const Transition& tr = replay.at(idx[size_t(i)]);
            for (int j = 0; j < kObsWidth; ++j) {
                S(i, j) = tr.s[size_t(j)];
                S2(i, j) = tr.s_next[size_t(j)];
            }
            A.row(i) = tr.a.transpose();
            rew(i) = tr.r;
            term(i) = tr.terminal ? 1.0f : 0.0f;
        }
        Encoders& enc = single ? sys.task_enc.at(train_task) : sys.enc;
        Encoders& enc_tgt = single ? sys.task_enc_target.at(train_task) : sys.enc_target;
        ActorCritic& ac = single ? sys.task_ac.at(train_task) : *sys.ac;

        std::vector<Encoders::DemoRange> ranges;
        if (zw > 0 && has_tinet) {
            ranges.reserve(size_t(B));
            for (int i = 0; i < B; ++i) {
                const Demonstration& d = demos.demo(replay.at(idx[size_t(i)]).demo_index);
                ranges.push_back({&d, 0, d.length() - 1});
            }
        }

        Value x = enc.state_features(t, t.input(S), true);
        Value xz = x;
        Mat z_tgt(B, 0);
        if (zw > 0) {
            if (has_tinet) {
                Value embeds = enc.demo_embed_batch(t, ranges, true);
                Value z = sys.tinet->forward(t, embeds, true);
                xz = t.concat_cols(x, z);
                // target-side conditioning through the frozen copies
                Value embeds_t = enc_tgt.demo_embed_batch(t, ranges, false);
                z_tgt = t.val(sys.tinet_target->forward(t, embeds_t, false));
            } else {
                // behavior embedding conditioning; constant, one lookup per
                // distinct demonstration in the batch
                Mat Z(B, zw);
                std::map<size_t, Vecf> cache;
                for (int i = 0; i < B; ++i) {
                    size_t di = replay.at(idx[size_t(i)]).demo_index;
                    auto it = cache.find(di);
                    if (it == cache.end())
                        it = cache.emplace(di, sys.behavior_target(demos.demo(di))).first;
                    Z.row(i) = it->second.transpose();
                }
                z_tgt = Z;
                xz = t.concat_cols(x, t.input(std::move(Z)));
            }
        }

        Mat x2 = enc_tgt.state_features(S2);
        Mat xz2 = concat_xz(x2, z_tgt);
        // rewards are {0,1} and episodes stop at success, so returns live in
        // [0,1]; clamping the bootstrap keeps overestimation bounded
        Value lcrit = critic_loss(t, ac, xz, A, rew, term, xz2, cfg.gamma, 0.0f, 1.0f);
        state.last_critic = t.scalar(lcrit);
        add_loss(lcrit);
        add_loss(policy_loss(t, ac, xz));
    }

    t.backward(*total);
    std::vector<nn::Param*> params;
    if (single) {
        params = sys.task_enc.at(train_task).params();
        for (auto* p : sys.task_ac.at(train_task).live_params()) params.push_back(p);
    } else {
        params = sys.trainable_params();
    }
    opt.step(std::span<nn::Param* const>(params.data(), params.size()));
    if (do_rl) {
        if (single)
            sys.task_ac.at(train_task).soft_update_targets();
        else
            sys.ac->soft_update_targets();
        sys.soft_update_conditioning_targets();
    }
}

// Undirected exploration rollout: walks toward random waypoints (half of the
// time an object position read from the observation), grasping, carrying and
// releasing objects at random. Knows nothing about tasks, demonstrations or
// success predicates.
struct WaypointExplorer {
    Vec2 waypoint{0.5f, 0.5f};
    float speed = 1.0f;
    float grip_cmd = -1.0f;
    bool init = false;

    Eigen::Vector3f step(const Observation& obs, float step_gain, RandomStream& rng) {
        Vec2 gripper(obs[0], obs[1]);
        bool holding = false;
        int near_slot = -1;
        for (int slot = 0; slot < 3; ++slot) {
            size_t base = size_t(3 + slot * 10);
            holding = holding || obs[base + 9] == 1.0f;
            Vec2 pos(obs[base], obs[base + 1]);
            if ((pos - gripper).norm() < 0.045f) near_slot = slot;
        }
        if (!init || (gripper - waypoint).norm() < 0.05f) {
            init = true;
            if (rng.uniform() < 0.5) {
                int slot = int(rng.uniform_index(3));
                waypoint = Vec2(obs[size_t(3 + slot * 10)], obs[size_t(3 + slot * 10 + 1)]);
                waypoint += Vec2(rng.uniformf(-0.05f, 0.05f), rng.uniformf(-0.05f, 0.05f));
            } else {
                waypoint = Vec2(rng.uniformf(0.05f, 0.95f), rng.uniformf(0.05f, 0.95f));
            }
            speed = rng.uniformf(0.4f, 1.0f);
        }
        if (holding) {
            // carry for a while, then drop
            if (rng.uniform() < 0.06) grip_cmd = -1.0f;
        } else if (near_slot >= 0) {
            if (rng.uniform() < 0.3) grip_cmd = 1.0f;
        } else if (rng.uniform() < 0.08) {
            grip_cmd = (rng.uniform() < 0.5) ? 1.0f : -1.0f;
        }
        Vec2 want = (waypoint - gripper) / step_gain;
        Vec2 a = want.cwiseMax(-speed).cwiseMin(speed);
        return {a.x(), a.y(), grip_cmd};
    }
};

float exploration_noise(const RunConfig& cfg, int episode) {
    const int half = std::max(1, cfg.episodes / 2);
    if (episode >= half) return cfg.noise_end;
    float f = float(episode) / float(half);
    return cfg.noise_start + (cfg.noise_end - cfg.noise_start) * f;
}

// explorer-episode probability anneals on the same half-schedule as the noise
float exploration_episode_prob(const RunConfig& cfg, int episode) {
    const float floor_prob = std::min(cfg.explore_episode_prob, 0.05f);
    const int half = std::max(1, cfg.episodes / 2);
    if (episode >= half) return floor_prob;
    float f = float(episode) / float(half);
    return cfg.explore_episode_prob +
           (floor_prob - cfg.explore_episode_prob) * f;
}

}  // namespace

// ---------------------------------------------------------------- training

TrainResult train_run(const RunConfig& cfg, const DemoStore& demos,
                      const std::string& out_dir, const ProgressFn& progress) {
    cfg.validate();
    for (int task : cfg.tasks)
        require(demos.has_task(task),
                "no demonstrations for scheduled task " + std::to_string(task));
    std::filesystem::create_directories(out_dir);

    System sys = System::build(cfg);
    sys.demo_histogram = demos.histogram();
    const bool single = cfg.ablation == Ablation::SingleTask;

    SslBuffer ssl(size_t(cfg.ssl_capacity));
    std::map<int, ReplayBuffer> replays;
    std::map<int, nn::Adam> opts;
    auto make_adam = [&cfg]() {
        nn::Adam a(cfg.lr);
        a.beta1 = cfg.adam_beta1;
        a.beta2 = cfg.adam_beta2;
        a.eps = cfg.adam_eps;
        return a;
    };
    if (single) {
        for (int t : cfg.tasks) {
            replays.emplace(t, ReplayBuffer(size_t(cfg.replay_capacity)));
            opts.emplace(t, make_adam());
        }
    } else {
        replays.emplace(-1, ReplayBuffer(size_t(cfg.replay_capacity)));
        opts.emplace(-1, make_adam());
    }

    RandomStream rng_demo(cfg.seed, "demo-pick");
    RandomStream rng_env(cfg.seed, "env-train");
    RandomStream rng_explore(cfg.seed, "explore");
    RandomStream rng_buffers(cfg.seed, "buffers");
    RandomStream rng_test(cfg.seed, "test");

    std::string metrics_path = out_dir + "/metrics.csv";
    MetricsWriter metrics(metrics_path, metrics_columns_for(cfg.ablation));
    RoundState round_state;

    for (int episode = 0; episode < cfg.episodes; ++episode) {
        auto active = cfg.active_tasks(episode);
        int train_task;
        size_t demo_idx = 0;
        const Demonstration* demo = nullptr;
        Vecf z;

        if (single) {
            train_task = active[size_t(episode) % active.size()];
        } else {
            train_task = active[rng_demo.uniform_index(active.size())];
            demo_idx = demos.sample_demo(train_task, rng_demo);
            demo = &demos.demo(demo_idx);
            Vecf gb;
            if (sys.hierarchy || sys.behavior_direct) gb = sys.behavior_target(*demo);
            sys.adapt_behavior(*demo);
            if (sys.tinet) {
                auto [u, v] = temporal_crop(demo->length(), rng_demo);
                SslSample samp;
                samp.demo_index = demo_idx;
                samp.crop_lo = u;
                samp.crop_hi = v;
                if (cfg.ablation != Ablation::TinetOnly) samp.behavior_target = gb;
                ssl.push(std::move(samp));
                z = sys.tinet->infer(sys.enc.demo_embed(*demo, 0, demo->length() - 1));
            } else {
                z = gb;
            }
        }

        TaskSpec task = task_by_id(train_task);
        WorldState w = sys.env.reset(task, rng_env);
        Observation obs = sys.env.observe(w);
        const Encoders& enc_t = single ? sys.task_enc.at(train_task) : sys.enc;
        const ActorCritic& ac_t = single ? sys.task_ac.at(train_task) : *sys.ac;
        ReplayBuffer& replay = replays.at(single ? train_task : -1);
        nn::Adam& opt = opts.at(single ? train_task : -1);
        const float sigma = exploration_noise(cfg, episode);
        const bool explore_episode =
            int(replay.size()) < cfg.warmup_uniform_steps ||
            rng_explore.uniform() < double(exploration_episode_prob(cfg, episode));
        WaypointExplorer explorer;

        int step_i = 0;
        while (!w.terminal) {
            Eigen::Vector3f a;
            if (explore_episode) {
                a = explorer.step(obs, cfg.env.step_gain, rng_explore);
            } else {
                Vecf x = enc_t.state_features(obs);
                a = ac_t.act(x, z, sigma, rng_explore);
            }
            StepResult r = sys.env.step(w, a, task);
            Observation obs2 = sys.env.observe(w);
            Transition tr;
            tr.s = std::move(obs);
            tr.demo_index = demo_idx;
            tr.a = a;
            tr.r = r.reward;
            tr.s_next = obs2;
            tr.terminal = r.terminal;
            replay.push(std::move(tr));
            obs = std::move(obs2);
            ++step_i;
            if (step_i % cfg.update_every == 0)
                update_round(sys, demos, ssl, replay, opt, rng_buffers, train_task,
                             round_state);
        }

        // one greedy test episode on a randomly sampled active task
        int test_task = active[rng_test.uniform_index(active.size())];
        Vecf tz;
        if (!single) {
            size_t tdemo = demos.sample_demo(test_task, rng_test);
            tz = sys.condition(demos.demo(tdemo));
        }
        auto outcome = sys.rollout_greedy(test_task, tz, rng_test);

        std::map<std::string, std::string> row;
        row["episode"] = MetricsWriter::fmt(episode);
        row["setting"] = to_string(cfg.setting);
        row["test_task"] = MetricsWriter::fmt(test_task);
        row["test_reward"] = MetricsWriter::fmt(double(outcome.reward));
        row["episode_len"] = MetricsWriter::fmt(outcome.length);
        if (sys.hierarchy) {
            row["nodes_act"] = MetricsWriter::fmt(int(sys.hierarchy->action_net().node_count()));
            row["nodes_int"] =
                MetricsWriter::fmt(int(sys.hierarchy->intention_net().node_count()));
            row["nodes_b"] = MetricsWriter::fmt(int(sys.hierarchy->behavior_net().node_count()));
        }
        if (sys.behavior_direct)
            row["nodes_b"] = MetricsWriter::fmt(int(sys.behavior_direct->node_count()));
        if (sys.tinet) {
            if (cfg.ablation != Ablation::TinetOnly)
                row["loss_bm"] = MetricsWriter::fmt(double(round_state.last_bm));
            row["loss_c"] = MetricsWriter::fmt(double(round_state.last_c));
        }
        row["critic_loss"] = MetricsWriter::fmt(double(round_state.last_critic));
        metrics.append(row);

        if (progress && (episode + 1) % 100 == 0) {
            std::ostringstream os;
            os << "episode " << (episode + 1) << "/" << cfg.episodes
               << " test_task=" << test_task << " reward=" << outcome.reward
               << " critic_loss=" << round_state.last_critic;
            progress(episode + 1, os.str());
        }
    }
    metrics.flush();

    std::string ckpt_path = out_dir + "/checkpoint.mtrl";
    save_system(sys, ckpt_path);

    json manifest;
    manifest["version"] = 1;
    manifest["kind"] = "train";
    manifest["seed"] = cfg.seed;
    manifest["config"] = json::parse(cfg.to_json());
    json hist = json::object();
    for (const auto& [task, count] : sys.demo_histogram)
        hist[std::to_string(task)] = count;
    manifest["demo_histogram"] = hist;
    json cols = json::array();
    static const std::map<std::string, std::string> units = {
        {"episode", "index"},        {"setting", "label"},
        {"test_task", "task id"},    {"test_reward", "return"},
        {"episode_len", "steps"},    {"nodes_act", "count"},
        {"nodes_int", "count"},      {"nodes_b", "count"},
        {"loss_bm", "loss"},         {"loss_c", "loss"},
        {"critic_loss", "loss"}};
    for (const auto& c : metrics_columns_for(cfg.ablation))
        cols.push_back({{"name", c}, {"unit", units.at(c)}});
    manifest["metrics_columns"] = cols;
    manifest["outputs"] = {{"metrics", metrics_path}, {"checkpoint", ckpt_path}};
    std::string manifest_path = out_dir + "/manifest.json";
    {
        std::ofstream f(manifest_path);
        require(f.good(), "cannot write manifest: " + manifest_path);
        f << manifest.dump(2) << "\n";
    }

    TrainResult res;
    res.metrics_path = metrics_path;
    res.checkpoint_path = ckpt_path;
    res.manifest_path = manifest_path;
    res.episodes = cfg.episodes;
    return res;
}

SslOnlyResult train_ssl_only(System& sys, const DemoStore& demos,
                             const std::vector<int>& tasks, int iterations,
                             RandomStream& rng) {
    require(sys.tinet.has_value(), "train_ssl_only: ablation has no task inference net");
    const RunConfig& cfg = sys.cfg;
    SslBuffer ssl(size_t(cfg.ssl_capacity));
    nn::Adam opt(cfg.lr);
    opt.beta1 = cfg.adam_beta1;
    opt.beta2 = cfg.adam_beta2;
    opt.eps = cfg.adam_eps;
    SslOnlyResult out;

    for (int it = 0; it < iterations; ++it) {
        int task = tasks[rng.uniform_index(tasks.size())];
        size_t demo_idx = demos.sample_demo(task, rng);
        const Demonstration& demo = demos.demo(demo_idx);
        Vecf gb;
        if (sys.hierarchy || sys.behavior_direct) gb = sys.behavior_target(demo);
        sys.adapt_behavior(demo);
        auto [u, v] = temporal_crop(demo.length(), rng);
        SslSample samp;
        samp.demo_index = demo_idx;
        samp.crop_lo = u;
        samp.crop_hi = v;
        if (cfg.ablation != Ablation::TinetOnly) samp.behavior_target = gb;
        ssl.push(std::move(samp));

        if (int(ssl.size()) < cfg.ssl_batch) continue;
        const int K = cfg.ssl_batch;
        auto idx = ssl.sample(size_t(K), rng);
        const bool with_bm = cfg.ablation != Ablation::TinetOnly;
        const int zw = cfg.task_rep_width();
        Tape t;
        std::vector<Encoders::DemoRange> ranges;
        ranges.reserve(size_t(2 * K));
        Mat targets(K, zw);
        for (int i = 0; i < K; ++i) {
            const SslSample& s = ssl.at(idx[size_t(i)]);
            const Demonstration& d = demos.demo(s.demo_index);
            ranges.push_back({&d, 0, d.length() - 1});
            if (with_bm) targets.row(i) = s.behavior_target.transpose();
        }
        for (int i = 0; i < K; ++i) {
            const SslSample& s = ssl.at(idx[size_t(i)]);
            const Demonstration& d = demos.demo(s.demo_index);
            ranges.push_back({&d, s.crop_lo, s.crop_hi});
        }
        Value embeds = sys.enc.demo_embed_batch(t, ranges, true);
        Value zs = sys.tinet->forward(t, embeds, true);
        const size_t nk = size_t(K);
        std::vector<int> ci(nk), xi(nk);
        std::iota(ci.begin(), ci.end(), 0);
        std::iota(xi.begin(), xi.end(), K);
        Value zc = t.gather_rows(zs, std::move(ci));
        Value zx = t.gather_rows(zs, std::move(xi));
        Value lc = contrastive_loss(t, zc, zx, cfg.temperature);
        out.last_contrastive = t.scalar(lc);
        Value loss = lc;
        if (with_bm) {
            Value lbm = behavior_matching_loss(t, zc, std::move(targets));
            out.last_bm = t.scalar(lbm);
            loss = ssl_loss(t, lbm, lc);
        }
        t.backward(loss);
        std::vector<nn::Param*> params = sys.enc.params();
        for (auto* p : sys.tinet->params()) params.push_back(p);
        opt.step(std::span<nn::Param* const>(params.data(), params.size()));
        ++out.updates;
    }
    return out;
}

}  // namespace mtrl
