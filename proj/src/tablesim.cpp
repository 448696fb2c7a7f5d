#include "mtrl/tablesim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace mtrl {

const char* to_string(Color c) {
    switch (c) {
        case Color::Red: return "red";
        case Color::Green: return "green";
        case Color::White: return "white";
        case Color::Gray: return "gray";
    }
    return "?";
}

const char* to_string(Kind k) {
    switch (k) {
        case Kind::Glass: return "glass";
        case Kind::Box: return "box";
        case Kind::Can: return "can";
    }
    return "?";
}

std::string TaskSpec::name() const {
    std::string s = (verb == Verb::Grasp ? "grasp the " : "push the ");
    s += std::string(to_string(subject.color)) + " " + to_string(subject.kind);
    if (target)
        s += " towards the " + std::string(to_string(target->color)) + " " +
             to_string(target->kind);
    return s;
}

TaskSpec task_by_id(int id) {
    const ObjectDesc red_glass{Color::Red, Kind::Glass};
    const ObjectDesc green_box{Color::Green, Kind::Box};
    const ObjectDesc white_box{Color::White, Kind::Box};
    const ObjectDesc gray_can{Color::Gray, Kind::Can};
    TaskSpec t;
    t.id = id;
    switch (id) {
        case 1: t.verb = Verb::Grasp; t.subject = red_glass; break;
        case 2: t.verb = Verb::Push; t.subject = green_box; t.target = red_glass; break;
        case 3: t.verb = Verb::Push; t.subject = green_box; t.target = white_box; break;
        case 4: t.verb = Verb::Push; t.subject = white_box; t.target = green_box; break;
        case 5: t.verb = Verb::Grasp; t.subject = green_box; break;
        case 6: t.verb = Verb::Grasp; t.subject = gray_can; break;
        case 7: t.verb = Verb::Push; t.subject = gray_can; t.target = green_box; break;
        default: fail("unknown task id " + std::to_string(id));
    }
    return t;
}

std::vector<int> training_task_ids() { return {1, 2, 3, 4}; }
std::vector<int> heldout_task_ids() { return {5, 6, 7}; }

static std::array<ObjectDesc, 3> scene_objects(int task_id) {
    if (task_id >= 5)
        return {ObjectDesc{Color::Gray, Kind::Can}, ObjectDesc{Color::Green, Kind::Box},
                ObjectDesc{Color::White, Kind::Box}};
    return {ObjectDesc{Color::Red, Kind::Glass}, ObjectDesc{Color::Green, Kind::Box},
            ObjectDesc{Color::White, Kind::Box}};
}

WorldState Environment::reset(const TaskSpec& task, RandomStream& rng) const {
    WorldState s;
    const float lo = cfg_.spawn_margin, hi = 1.0f - cfg_.spawn_margin;
    std::vector<Vec2> placed;
    auto place = [&]() -> Vec2 {
        for (int attempt = 0; attempt < cfg_.place_attempts; ++attempt) {
            Vec2 p(rng.uniformf(lo, hi), rng.uniformf(lo, hi));
            bool ok = true;
            for (const Vec2& q : placed)
                if ((p - q).norm() < cfg_.min_spawn_dist) ok = false;
            if (ok) {
                placed.push_back(p);
                return p;
            }
        }
        fail("reset: placement failed after " + std::to_string(cfg_.place_attempts) +
             " rejection samples");
    };
    s.gripper = place();
    s.grip = 0.0f;
    auto descs = scene_objects(task.id);
    for (int i = 0; i < 3; ++i) {
        s.objects[size_t(i)].pos = place();
        s.objects[size_t(i)].color = descs[size_t(i)].color;
        s.objects[size_t(i)].kind = descs[size_t(i)].kind;
        s.objects[size_t(i)].held = false;
    }
    // slot order is shuffled per episode so object identity is carried by
    // features rather than observation position
    s.slot_order = {0, 1, 2};
    for (int i = 2; i > 0; --i)
        std::swap(s.slot_order[size_t(i)], s.slot_order[rng.uniform_index(uint64_t(i + 1))]);
    s.step_count = 0;
    s.terminal = false;
    return s;
}

int Environment::find_object(const WorldState& s, const ObjectDesc& d) const {
    for (int i = 0; i < 3; ++i)
        if (s.objects[size_t(i)].color == d.color && s.objects[size_t(i)].kind == d.kind)
            return i;
    fail("no object matches descriptor " + std::string(to_string(d.color)) + " " +
         to_string(d.kind));
}

bool Environment::success(const WorldState& s, const TaskSpec& task) const {
    int subj = find_object(s, task.subject);
    if (task.verb == Verb::Grasp) return s.objects[size_t(subj)].held;
    int tgt = find_object(s, *task.target);
    if (s.objects[size_t(subj)].held) return false;
    return (s.objects[size_t(subj)].pos - s.objects[size_t(tgt)].pos).norm() <=
           task.success_radius;
}

StepResult Environment::step(WorldState& s, const Eigen::Vector3f& action,
                             const TaskSpec& task) const {
    require(!s.terminal, "step: episode already terminal");
    require(action.allFinite(), "step: non-finite action");
    Eigen::Vector3f a = action.cwiseMax(-1.0f).cwiseMin(1.0f);

    Vec2 old_pos = s.gripper;
    Vec2 want = s.gripper + cfg_.step_gain * Vec2(a.x(), a.y());
    s.gripper = want.cwiseMax(0.0f).cwiseMin(1.0f);
    Vec2 delta = s.gripper - old_pos;
    s.grip = (a.z() + 1.0f) * 0.5f;

    int held = -1;
    for (int i = 0; i < 3; ++i)
        if (s.objects[size_t(i)].held) held = i;

    if (held >= 0) {
        s.objects[size_t(held)].pos = s.gripper;
        if (s.grip < cfg_.grip_open) {
            s.objects[size_t(held)].held = false;
            held = -1;
        }
    } else {
        // the grasp rule takes precedence over pushing: a closed gripper
        // reaching an object picks it up instead of displacing it
        if (s.grip > cfg_.grip_close) {
            int nearest = -1;
            float best = cfg_.grasp_radius;
            for (int i = 0; i < 3; ++i) {
                float d = (s.objects[size_t(i)].pos - s.gripper).norm();
                if (d <= best) {
                    best = d;
                    nearest = i;
                }
            }
            if (nearest >= 0) {
                s.objects[size_t(nearest)].held = true;
                s.objects[size_t(nearest)].pos = s.gripper;
                held = nearest;
            }
        }
        // kinematic push: unheld objects overlapping the moved gripper share
        // its displacement
        for (int i = 0; i < 3; ++i) {
            ObjectState& o = s.objects[size_t(i)];
            if (i != held && !o.held && (o.pos - s.gripper).norm() <= cfg_.grasp_radius) {
                o.pos = (o.pos + delta).cwiseMax(0.0f).cwiseMin(1.0f);
            }
        }
    }

    s.step_count += 1;
    StepResult r;
    if (success(s, task)) {
        r.reward = 1.0f;
        r.success = true;
        r.terminal = true;
    } else if (s.step_count >= cfg_.max_steps) {
        r.terminal = true;
    }
    s.terminal = r.terminal;
    return r;
}

Observation Environment::observe(const WorldState& s) const {
    Observation o;
    o.reserve(kObsWidth);
    o.push_back(s.gripper.x());
    o.push_back(s.gripper.y());
    o.push_back(s.grip);
    for (int slot = 0; slot < 3; ++slot) {
        const ObjectState& obj = s.objects[size_t(s.slot_order[size_t(slot)])];
        o.push_back(obj.pos.x());
        o.push_back(obj.pos.y());
        for (int c = 0; c < 4; ++c) o.push_back(int(obj.color) == c ? 1.0f : 0.0f);
        for (int k = 0; k < 3; ++k) o.push_back(int(obj.kind) == k ? 1.0f : 0.0f);
        o.push_back(obj.held ? 1.0f : 0.0f);
    }
    return o;
}

namespace {

// moves toward `target` at a capped per-axis speed; returns false when close
Eigen::Vector3f approach_action(const Vec2& gripper, const Vec2& target, float gain,
                                float speed, float grip_cmd) {
    Vec2 want = (target - gripper) / gain;
    Vec2 a = want.cwiseMax(-speed).cwiseMin(speed);
    return {a.x(), a.y(), grip_cmd};
}

}  // namespace

Demonstration scripted_demo(const Environment& env, const TaskSpec& task,
                            RandomStream& rng, int max_attempts) {
    const EnvConfig& cfg = env.config();
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        WorldState s = env.reset(task, rng);
        Demonstration demo;
        demo.task_id = task.id;
        demo.frames.push_back(env.observe(s));
        int subj = env.find_object(s, task.subject);

        // unhurried by default, but fast enough to finish hard layouts within
        // the episode budget; this puts demo lengths near thirty steps
        float path;
        if (task.verb == Verb::Grasp) {
            path = (s.gripper - s.objects[size_t(subj)].pos).norm() + 0.1f;
        } else {
            const Vec2 tgt0 = s.objects[size_t(env.find_object(s, *task.target))].pos;
            path = (s.gripper - s.objects[size_t(subj)].pos).norm() +
                   (s.objects[size_t(subj)].pos - tgt0).norm() + 0.3f;
        }
        const float base = task.verb == Verb::Grasp ? 0.30f : 0.45f;
        const float speed =
            std::min(1.0f, std::max(base, path / (36.0f * cfg.step_gain)));

        Vec2 jitter(float(rng.gaussian(0.0, 0.02)), float(rng.gaussian(0.0, 0.02)));
        bool engaged = false;
        bool done = false, ok = false;
        while (!done) {
            Eigen::Vector3f a;
            const Vec2 subj_pos = s.objects[size_t(subj)].pos;
            const float subj_dist = (s.gripper - subj_pos).norm();
            if (task.verb == Verb::Grasp) {
                if (subj_dist > 1.6f * cfg.grasp_radius) {
                    a = approach_action(s.gripper, subj_pos + jitter, cfg.step_gain,
                                        speed, -1.0f);
                } else {
                    // close the grip while darting in; grasping beats pushing
                    a = approach_action(s.gripper, subj_pos, cfg.step_gain, speed, 1.0f);
                }
            } else {
                const Vec2 tgt_pos =
                    s.objects[size_t(env.find_object(s, *task.target))].pos;
                Vec2 to_tgt = tgt_pos - subj_pos;
                float span = to_tgt.norm();
                Vec2 dir = span > 1e-6f ? Vec2(to_tgt / span) : Vec2(1, 0);
                Vec2 behind = subj_pos - dir * (1.8f * cfg.grasp_radius);
                behind = behind.cwiseMax(0.02f).cwiseMin(0.98f);  // walls
                Vec2 to_subj = subj_pos - s.gripper;
                bool aligned = to_subj.norm() > 1e-6f &&
                               (to_subj / to_subj.norm()).dot(dir) > 0.85f;
                if (engaged && (!aligned || subj_dist > 2.5f * cfg.grasp_radius))
                    engaged = false;
                if (!engaged && (s.gripper - behind - jitter).norm() < 0.02f) {
                    if (aligned)
                        engaged = true;
                    else
                        jitter.setZero();  // parked off-line: home in on the true point
                }
                if (!engaged && aligned && subj_dist < 2.0f * cfg.grasp_radius)
                    engaged = true;
                if (engaged) {
                    // drive through the object; it travels ahead of the gripper
                    a = approach_action(s.gripper, subj_pos + dir * cfg.step_gain,
                                        cfg.step_gain, speed, -1.0f);
                } else {
                    Vec2 goal = behind + jitter;
                    a = approach_action(s.gripper, goal, cfg.step_gain, speed, -1.0f);
                    Vec2 next = s.gripper + cfg.step_gain * Vec2(a.x(), a.y());
                    if ((next - subj_pos).norm() < 1.4f * cfg.grasp_radius) {
                        // the direct path would plow the object: circle it
                        Vec2 radial = s.gripper - subj_pos;
                        float r = radial.norm();
                        radial = r > 1e-6f ? Vec2(radial / r) : Vec2(-dir);
                        Vec2 tang(-radial.y(), radial.x());
                        Vec2 out = goal - subj_pos;
                        if (out.norm() > 1e-6f && tang.dot(out / out.norm()) < 0.0f)
                            tang = -tang;
                        Vec2 wp = subj_pos + (0.4f * radial + tang).normalized() *
                                                 (2.0f * cfg.grasp_radius);
                        a = approach_action(s.gripper, wp, cfg.step_gain, speed, -1.0f);
                    }
                }
            }
            StepResult r = env.step(s, a, task);
            demo.frames.push_back(env.observe(s));
            done = r.terminal;
            ok = r.success;
        }
        if (ok && demo.length() >= 2 && demo.length() <= 60) return demo;
    }
    fail("scripted_demo: no successful demonstration for task " + std::to_string(task.id) +
         " after " + std::to_string(max_attempts) + " attempts");
}

void save_demos(const std::string& path, const std::vector<Demonstration>& demos) {
    std::ofstream out(path);
    require(out.good(), "cannot open for writing: " + path);
    out << "# mtrl-demos v1 obs=" << kObsWidth << "\n";
    char buf[32];
    for (const auto& d : demos) {
        out << d.task_id << ' ' << d.length();
        for (const auto& frame : d.frames) {
            require(int(frame.size()) == kObsWidth, "demo frame width mismatch");
            for (float f : frame) {
                std::snprintf(buf, sizeof buf, "%.9g", double(f));
                out << ' ' << buf;
            }
        }
        out << '\n';
    }
    require(out.good(), "write failed: " + path);
}

std::vector<Demonstration> load_demos(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "cannot open: " + path);
    std::string line;
    require(bool(std::getline(in, line)), "empty demo file: " + path);
    std::string expect = "# mtrl-demos v1 obs=" + std::to_string(kObsWidth);
    require(line == expect, path + ":1: bad header (want '" + expect + "')");
    std::vector<Demonstration> demos;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const char* p = line.c_str();
        char* end = nullptr;
        auto bad = [&](const std::string& why) {
            fail(path + ":" + std::to_string(lineno) + ": " + why);
        };
        long task_id = std::strtol(p, &end, 10);
        if (end == p) bad("missing task id");
        p = end;
        long n = std::strtol(p, &end, 10);
        if (end == p || n < 2) bad("bad frame count");
        p = end;
        Demonstration d;
        d.task_id = int(task_id);
        d.frames.resize(size_t(n));
        for (long i = 0; i < n; ++i) {
            d.frames[size_t(i)].resize(kObsWidth);
            for (int j = 0; j < kObsWidth; ++j) {
                float v = std::strtof(p, &end);
                if (end == p) bad("truncated record");
                if (!std::isfinite(v)) bad("non-finite value");
                d.frames[size_t(i)][size_t(j)] = v;
                p = end;
            }
        }
        while (*p == ' ') ++p;
        if (*p != '\0') bad("trailing data");
        demos.push_back(std::move(d));
    }
    return demos;
}

DemoStore::DemoStore(std::vector<Demonstration> demos) : demos_(std::move(demos)) {
    for (size_t i = 0; i < demos_.size(); ++i) by_task_[demos_[i].task_id].push_back(i);
}

const std::vector<size_t>& DemoStore::demos_of_task(int task_id) const {
    auto it = by_task_.find(task_id);
    if (it == by_task_.end()) fail("no demonstrations for task " + std::to_string(task_id));
    return it->second;
}

bool DemoStore::has_task(int task_id) const { return by_task_.count(task_id) > 0; }

std::vector<int> DemoStore::task_ids() const {
    std::vector<int> ids;
    for (const auto& [id, v] : by_task_) ids.push_back(id);
    return ids;
}

std::map<int, int> DemoStore::histogram() const {
    std::map<int, int> h;
    for (const auto& [id, v] : by_task_) h[id] = int(v.size());
    return h;
}

size_t DemoStore::sample_demo(int task_id, RandomStream& rng) const {
    const auto& idx = demos_of_task(task_id);
    return idx[rng.uniform_index(idx.size())];
}

}  // namespace mtrl
