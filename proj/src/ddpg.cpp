#include "mtrl/ddpg.hpp"

#include <algorithm>

namespace mtrl {

void ReplayBuffer::push(Transition t) {
    if (items_.size() < capacity_) {
        items_.push_back(std::move(t));
    } else {
        items_[write_] = std::move(t);  // FIFO overwrite of the oldest slot
        write_ = (write_ + 1) % capacity_;
    }
}

std::vector<size_t> ReplayBuffer::sample(size_t k, RandomStream& rng) const {
    require(!items_.empty(), "replay buffer: empty");
    std::vector<size_t> out(k);
    for (size_t i = 0; i < k; ++i) out[i] = rng.uniform_index(items_.size());
    return out;
}

static nn::Mlp make_target_copy(const nn::Mlp& live, const std::string& name) {
    nn::Mlp t = live;
    int i = 0;
    for (auto& layer : t.layers) {
        layer.w.name = name + ".l" + std::to_string(i) + ".w";
        layer.b.name = name + ".l" + std::to_string(i) + ".b";
        ++i;
    }
    return t;
}

ActorCritic::ActorCritic(const ActorCriticConfig& cfg, RandomStream& rng,
                         const std::string& name_prefix)
    : cfg_(cfg),
      pi_(name_prefix + "pi", {cfg.state_feat + cfg.task_rep, cfg.hidden, cfg.action_dim},
          nn::Act::Relu, nn::Act::Tanh, rng),
      q_(name_prefix + "q",
         {cfg.state_feat + cfg.task_rep + cfg.action_dim, cfg.hidden, 1}, nn::Act::Relu,
         nn::Act::Linear, rng) {
    pi_t_ = make_target_copy(pi_, name_prefix + "pi_t");
    q_t_ = make_target_copy(q_, name_prefix + "q_t");
}

Eigen::Vector3f ActorCritic::act(const Vecf& x, const Vecf& z, float noise_scale,
                                 RandomStream& rng) const {
    require(int(x.size()) == cfg_.state_feat && int(z.size()) == cfg_.task_rep,
            "act: conditioning width mismatch");
    Mat xz(1, x.size() + z.size());
    if (x.size() > 0) xz.block(0, 0, 1, x.size()) = x.transpose();
    if (z.size() > 0) xz.block(0, x.size(), 1, z.size()) = z.transpose();
    Mat a = pi_.eval(xz);
    Eigen::Vector3f out;
    for (int i = 0; i < cfg_.action_dim; ++i) {
        float v = a(0, i);
        if (noise_scale > 0.0f) v += float(rng.gaussian(0.0, double(noise_scale)));
        out(i) = std::clamp(v, -1.0f, 1.0f);
    }
    return out;
}

void soft_update(nn::Mlp& live, nn::Mlp& target, float rho) {
    require(rho > 0.0f && rho <= 1.0f, "soft_update: rho must be in (0,1]");
    require(live.layers.size() == target.layers.size(), "soft_update: layer mismatch");
    for (size_t i = 0; i < live.layers.size(); ++i) {
        target.layers[i].w.value =
            rho * live.layers[i].w.value + (1.0f - rho) * target.layers[i].w.value;
        target.layers[i].b.value =
            rho * live.layers[i].b.value + (1.0f - rho) * target.layers[i].b.value;
    }
}

void ActorCritic::soft_update_targets() {
    soft_update(pi_, pi_t_, cfg_.soft_update_rate);
    soft_update(q_, q_t_, cfg_.soft_update_rate);
}

std::vector<nn::Param*> ActorCritic::live_params() {
    auto out = pi_.params();
    for (auto* p : q_.params()) out.push_back(p);
    return out;
}

std::vector<nn::Param*> ActorCritic::target_params() {
    auto out = pi_t_.params();
    for (auto* p : q_t_.params()) out.push_back(p);
    return out;
}

Mat concat_xz(const Mat& x, const Mat& z) {
    require(x.rows() == z.rows() || z.size() == 0, "concat_xz: row mismatch");
    if (z.size() == 0) return x;
    Mat xz(x.rows(), x.cols() + z.cols());
    xz.leftCols(x.cols()) = x;
    xz.rightCols(z.cols()) = z;
    return xz;
}

Value critic_loss(Tape& t, ActorCritic& ac, Value xz, const Mat& actions,
                  const Vecf& rewards, const Vecf& terminal, const Mat& xz_next,
                  float gamma, float y_min, float y_max) {
    const Eigen::Index B = t.val(xz).rows();
    require(B > 0, "critic_loss: empty batch");
    require(actions.rows() == B && rewards.size() == B && terminal.size() == B &&
                xz_next.rows() == B,
            "critic_loss: batch size mismatch");

    // bootstrapped targets from the frozen copies
    Mat a_next = ac.policy_target_eval(xz_next);
    Mat q_next = ac.critic_target_eval(concat_xz(xz_next, a_next));
    Mat y(B, 1);
    for (Eigen::Index i = 0; i < B; ++i)
        y(i, 0) = std::clamp(rewards(i) + gamma * (1.0f - terminal(i)) * q_next(i, 0),
                             y_min, y_max);

    Value q = ac.critic_net().forward(t, t.concat_cols(xz, t.input(actions)), true);
    Value diff = t.sub(q, t.input(std::move(y)));
    return t.mean_all(t.mul(diff, diff));
}

Value critic_loss(Tape& t, ActorCritic& ac, const Mat& xz, const Mat& actions,
                  const Vecf& rewards, const Vecf& terminal, const Mat& xz_next,
                  float gamma, float y_min, float y_max) {
    return critic_loss(t, ac, t.input(xz), actions, rewards, terminal, xz_next, gamma,
                       y_min, y_max);
}

Value policy_loss(Tape& t, ActorCritic& ac, Value xz) {
    Value a = ac.policy_net().forward(t, xz, true);
    // the critic's own conditioning input is detached: gradients reach the
    // policy (and anything feeding it) through the action path only
    Value q_in = t.concat_cols(t.detach(xz), a);
    Value q = ac.critic_net().forward(t, q_in, false);  // critic frozen here
    return t.scale(t.mean_all(q), -1.0f);
}

Value policy_loss(Tape& t, nn::Mlp& pi, Value xz, const CriticFn& critic) {
    Value a = pi.forward(t, xz, true);
    Value q = critic(t, xz, a);
    return t.scale(t.mean_all(q), -1.0f);
}

float critic_update(ActorCritic& ac, const Mat& xz, const Mat& actions,
                    const Vecf& rewards, const Vecf& terminal, const Mat& xz_next,
                    float gamma, nn::Adam& opt) {
    Tape t;
    Value loss = critic_loss(t, ac, xz, actions, rewards, terminal, xz_next, gamma);
    t.backward(loss);
    auto params = ac.critic_net().params();
    opt.step(std::span<nn::Param* const>(params.data(), params.size()));
    return t.scalar(loss);
}

float policy_update(ActorCritic& ac, const Mat& xz, nn::Adam& opt) {
    require(xz.rows() > 0, "policy_update: empty batch");
    Tape t;
    Value loss = policy_loss(t, ac, t.input(xz));
    t.backward(loss);
    auto params = ac.policy_net().params();
    opt.step(std::span<nn::Param* const>(params.data(), params.size()));
    return -t.scalar(loss);
}

}  // namespace mtrl
