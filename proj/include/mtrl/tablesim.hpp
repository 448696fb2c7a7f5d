#pragma once

#include <Eigen/Core>

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mtrl/common.hpp"

namespace mtrl {

using Vec2 = Eigen::Vector2f;
using Vecf = Eigen::VectorXf;

enum class Color : uint8_t { Red = 0, Green = 1, White = 2, Gray = 3 };
enum class Kind : uint8_t { Glass = 0, Box = 1, Can = 2 };

const char* to_string(Color c);
const char* to_string(Kind k);

struct ObjectDesc {
    Color color;
    Kind kind;
    bool operator==(const ObjectDesc&) const = default;
};

enum class Verb : uint8_t { Grasp, Push };

struct TaskSpec {
    int id = 0;
    Verb verb = Verb::Grasp;
    ObjectDesc subject{Color::Red, Kind::Glass};
    std::optional<ObjectDesc> target;  // push tasks only
    float success_radius = 0.08f;

    std::string name() const;
};

// Tasks 1-4 are the training set; 5-7 are held out and are the only scenes
// that contain the can.
TaskSpec task_by_id(int id);
std::vector<int> training_task_ids();
std::vector<int> heldout_task_ids();

struct ObjectState {
    Vec2 pos{0, 0};
    Color color = Color::Red;
    Kind kind = Kind::Glass;
    bool held = false;
};

struct WorldState {
    Vec2 gripper{0, 0};
    float grip = 0.0f;  // 0 open .. 1 closed
    std::array<ObjectState, 3> objects;
    std::array<int, 3> slot_order{0, 1, 2};  // observation slot -> object index
    int step_count = 0;
    bool terminal = false;
};

struct EnvConfig {
    float step_gain = 0.06f;
    float grasp_radius = 0.05f;
    float grip_close = 0.7f;
    float grip_open = 0.3f;
    float success_radius = 0.08f;
    int max_steps = 50;
    float min_spawn_dist = 0.15f;
    float spawn_margin = 0.1f;
    int place_attempts = 100;
};

using Observation = std::vector<float>;
constexpr int kObsWidth = 33;  // gripper(2) + grip(1) + 3 slots x 10

struct StepResult {
    float reward = 0.0f;
    bool terminal = false;
    bool success = false;
};

struct Demonstration {
    int task_id = 0;  // evaluation metadata only, never read by the learner
    std::vector<Observation> frames;
    int length() const { return int(frames.size()); }
};

class Environment {
public:
    Environment() = default;
    explicit Environment(EnvConfig cfg) : cfg_(cfg) {}

    const EnvConfig& config() const { return cfg_; }

    WorldState reset(const TaskSpec& task, RandomStream& rng) const;
    StepResult step(WorldState& s, const Eigen::Vector3f& action,
                    const TaskSpec& task) const;
    bool success(const WorldState& s, const TaskSpec& task) const;
    Observation observe(const WorldState& s) const;

    // index of the object matching a descriptor; error if absent
    int find_object(const WorldState& s, const ObjectDesc& d) const;

private:
    EnvConfig cfg_;
};

// Scripted demonstrator. Produces an observation-only trajectory whose final
// frame satisfies the task predicate; throws after `max_attempts` failures.
Demonstration scripted_demo(const Environment& env, const TaskSpec& task,
                            RandomStream& rng, int max_attempts = 10);

// line-delimited dataset: header "# mtrl-demos v1 obs=33", then one record
// per line: task_id n f0 f1 ... f(n*33-1)
void save_demos(const std::string& path, const std::vector<Demonstration>& demos);
std::vector<Demonstration> load_demos(const std::string& path);

class DemoStore {
public:
    DemoStore() = default;
    explicit DemoStore(std::vector<Demonstration> demos);

    size_t size() const { return demos_.size(); }
    const Demonstration& demo(size_t i) const { return demos_.at(i); }
    const std::vector<size_t>& demos_of_task(int task_id) const;
    bool has_task(int task_id) const;
    std::vector<int> task_ids() const;
    std::map<int, int> histogram() const;

    size_t sample_demo(int task_id, RandomStream& rng) const;

private:
    std::vector<Demonstration> demos_;
    std::map<int, std::vector<size_t>> by_task_;
};

}  // namespace mtrl
