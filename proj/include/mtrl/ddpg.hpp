#pragma once

#include <functional>
#include <limits>

#include "mtrl/nn/adam.hpp"
#include "mtrl/nn/layers.hpp"
#include "mtrl/tablesim.hpp"

namespace mtrl {

using nn::Mat;
using nn::Tape;
using nn::Value;

struct Transition {
    Observation s;
    size_t demo_index = 0;  // reference into the demo store
    Eigen::Vector3f a{0, 0, 0};
    float r = 0.0f;
    Observation s_next;
    bool terminal = false;
};

class ReplayBuffer {
public:
    explicit ReplayBuffer(size_t capacity = 1000000) : capacity_(capacity) {}

    size_t size() const { return items_.size(); }
    size_t capacity() const { return capacity_; }
    void push(Transition t);
    const Transition& at(size_t i) const { return items_.at(i); }
    std::vector<size_t> sample(size_t k, RandomStream& rng) const;  // uniform

private:
    size_t capacity_;
    size_t write_ = 0;
    std::vector<Transition> items_;
};

struct ActorCriticConfig {
    int state_feat = 32;  // width of x
    int task_rep = 96;    // width of z; 0 for an unconditioned policy
    int action_dim = 3;
    int hidden = 64;
    float soft_update_rate = 0.005f;  // rho
};

// Deterministic policy pi(x (+) z) in [-1,1]^d and critic Q(x (+) z (+) a),
// with frozen target copies of both.
class ActorCritic {
public:
    ActorCritic() = default;
    ActorCritic(const ActorCriticConfig& cfg, RandomStream& rng,
                const std::string& name_prefix = "");

    const ActorCriticConfig& config() const { return cfg_; }
    int input_width() const { return cfg_.state_feat + cfg_.task_rep; }

    // a = clip(pi(x(+)z) + eps), eps ~ N(0, noise_scale^2) iid
    Eigen::Vector3f act(const Vecf& x, const Vecf& z, float noise_scale,
                        RandomStream& rng) const;

    Mat policy_eval(const Mat& xz) const { return pi_.eval(xz); }
    Mat policy_target_eval(const Mat& xz) const { return pi_t_.eval(xz); }
    Mat critic_eval(const Mat& xza) const { return q_.eval(xza); }
    Mat critic_target_eval(const Mat& xza) const { return q_t_.eval(xza); }

    // target <- rho * live + (1 - rho) * target
    void soft_update_targets();

    nn::Mlp& policy_net() { return pi_; }
    nn::Mlp& critic_net() { return q_; }
    const nn::Mlp& policy_net() const { return pi_; }
    const nn::Mlp& critic_net() const { return q_; }
    nn::Mlp& policy_target_net() { return pi_t_; }
    nn::Mlp& critic_target_net() { return q_t_; }

    std::vector<nn::Param*> live_params();
    std::vector<nn::Param*> target_params();

private:
    ActorCriticConfig cfg_;
    nn::Mlp pi_, q_, pi_t_, q_t_;
};

void soft_update(nn::Mlp& live, nn::Mlp& target, float rho);

// Critic regression loss on tape. Targets y = r + gamma * (1-terminal) *
// Q_target(x'(+)z', pi_target(x'(+)z')) are computed through the frozen
// copies. When `xz` is a traced value the regression gradients also reach
// whatever produced the conditioning (the encoders and task inference net).
// Optional bounds clamp the bootstrapped target to the known return range.
Value critic_loss(Tape& t, ActorCritic& ac, Value xz, const Mat& actions,
                  const Vecf& rewards, const Vecf& terminal, const Mat& xz_next,
                  float gamma,
                  float y_min = -std::numeric_limits<float>::infinity(),
                  float y_max = std::numeric_limits<float>::infinity());
Value critic_loss(Tape& t, ActorCritic& ac, const Mat& xz, const Mat& actions,
                  const Vecf& rewards, const Vecf& terminal, const Mat& xz_next,
                  float gamma,
                  float y_min = -std::numeric_limits<float>::infinity(),
                  float y_max = std::numeric_limits<float>::infinity());

// Policy objective -mean Q(xz, pi(xz)) with the critic parameters frozen.
// Gradients reach the policy (and any encoder feeding xz when it is traced)
// through the action path only.
Value policy_loss(Tape& t, ActorCritic& ac, Value xz);

// Variant with an externally supplied critic, used by tests.
using CriticFn = std::function<Value(Tape&, Value xz, Value a)>;
Value policy_loss(Tape& t, nn::Mlp& pi, Value xz, const CriticFn& critic);

// Standalone spec operations: each builds its own tape, backpropagates and
// applies one optimizer step. The trainer fuses these into a single tape per
// update round; the arithmetic is identical.
float critic_update(ActorCritic& ac, const Mat& xz, const Mat& actions,
                    const Vecf& rewards, const Vecf& terminal, const Mat& xz_next,
                    float gamma, nn::Adam& opt);
float policy_update(ActorCritic& ac, const Mat& xz, nn::Adam& opt);

Mat concat_xz(const Mat& x, const Mat& z);

}  // namespace mtrl
