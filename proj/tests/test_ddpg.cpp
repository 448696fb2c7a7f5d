#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <set>

#include "mtrl/ddpg.hpp"

using namespace mtrl;

namespace {

ActorCriticConfig chain_cfg() {
    ActorCriticConfig c;
    c.state_feat = 2;
    c.task_rep = 0;
    c.action_dim = 3;
    c.hidden = 32;
    return c;
}

void zero_net(nn::Mlp& m) {
    for (auto& l : m.layers) {
        l.w.value.setZero();
        l.b.value.setZero();
    }
}

}  // namespace

TEST_CASE("act: zero noise is deterministic, outputs always within bounds") {
    RandomStream rng(1, "init-ac");
    ActorCriticConfig cfg;
    cfg.state_feat = 4;
    cfg.task_rep = 3;
    ActorCritic ac(cfg, rng);
    Vecf x(4), z(3);
    x << 0.3f, -0.2f, 0.8f, 0.0f;
    z << 1.0f, 0.0f, -1.0f;
    RandomStream noise(2);
    Eigen::Vector3f a1 = ac.act(x, z, 0.0f, noise);
    Eigen::Vector3f a2 = ac.act(x, z, 0.0f, noise);
    CHECK(a1 == a2);
    bool any_diff = false;
    for (int i = 0; i < 200; ++i) {
        Eigen::Vector3f a = ac.act(x, z, 0.5f, noise);
        for (int k = 0; k < 3; ++k) {
            CHECK(a(k) >= -1.0f);
            CHECK(a(k) <= 1.0f);
        }
        any_diff = any_diff || (a - a1).cwiseAbs().maxCoeff() > 0.0f;
    }
    CHECK(any_diff);
    Vecf bad(2);
    bad.setZero();
    CHECK_THROWS_AS((void)ac.act(bad, z, 0.0f, noise), Error);
}

TEST_CASE("soft_update: full copy at rho 1, fixed point, scalar blend") {
    RandomStream rng(3, "init-ac");
    ActorCritic ac(chain_cfg(), rng);
    // rho = 1: target becomes the live net
    soft_update(ac.policy_net(), ac.policy_target_net(), 1.0f);
    for (size_t i = 0; i < ac.policy_net().layers.size(); ++i)
        CHECK(ac.policy_net().layers[i].w.value ==
              ac.policy_target_net().layers[i].w.value);
    // live == target is a fixed point at any rho
    nn::Mat before = ac.policy_target_net().layers[0].w.value;
    soft_update(ac.policy_net(), ac.policy_target_net(), 0.005f);
    CHECK(ac.policy_target_net().layers[0].w.value == before);
    // scalar case: live 1, target 0, rho 0.5 -> 0.5
    nn::Mlp live, target;
    RandomStream r(4);
    live = nn::Mlp("a", {1, 1}, nn::Act::Linear, nn::Act::Linear, r);
    target = nn::Mlp("b", {1, 1}, nn::Act::Linear, nn::Act::Linear, r);
    live.layers[0].w.value(0, 0) = 1.0f;
    target.layers[0].w.value(0, 0) = 0.0f;
    soft_update(live, target, 0.5f);
    CHECK(target.layers[0].w.value(0, 0) == doctest::Approx(0.5f));
    CHECK_THROWS_AS(soft_update(live, target, 0.0f), Error);
}

TEST_CASE("replay buffer: capacity bound, FIFO overwrite, in-range sampling") {
    ReplayBuffer buf(4);
    for (int i = 0; i < 7; ++i) {
        Transition t;
        t.r = float(i);
        buf.push(std::move(t));
    }
    CHECK(buf.size() == 4);
    // slots now hold 4,5,6,3 (oldest overwritten first)
    std::set<float> rewards;
    for (size_t i = 0; i < buf.size(); ++i) rewards.insert(buf.at(i).r);
    CHECK(rewards == std::set<float>{3.0f, 4.0f, 5.0f, 6.0f});
    RandomStream rng(5);
    for (size_t i : buf.sample(64, rng)) CHECK(i < buf.size());
    ReplayBuffer empty(4);
    CHECK_THROWS_AS((void)empty.sample(1, rng), Error);
}

TEST_CASE("critic targets: terminal transitions and zero discount truncate bootstrap") {
    RandomStream rng(6, "init-ac");
    ActorCritic ac(chain_cfg(), rng);
    zero_net(ac.critic_net());
    zero_net(ac.critic_target_net());  // Q == 0 everywhere
    Mat xz(2, 2), xz2(2, 2), a(2, 3);
    xz << 1, 0, 0, 1;
    xz2 = xz;
    a.setZero();
    Vecf r(2), term(2);
    r << 0.7f, 0.3f;
    term << 1, 1;
    Tape t;
    Value loss = critic_loss(t, ac, xz, a, r, term, xz2, 0.99f);
    // y = r for terminal rows; Q = 0, so loss = mean r^2
    CHECK(t.scalar(loss) == doctest::Approx((0.49 + 0.09) / 2).epsilon(1e-5));
    term << 0, 0;
    Tape t2;
    Value loss2 = critic_loss(t2, ac, xz, a, r, term, xz2, 0.0f);
    CHECK(t2.scalar(loss2) == doctest::Approx((0.49 + 0.09) / 2).epsilon(1e-5));
    Mat empty(0, 2);
    Vecf er;
    Tape t3;
    CHECK_THROWS_AS(
        (void)critic_loss(t3, ac, empty, Mat(0, 3), er, er, Mat(0, 2), 0.99f), Error);
}

TEST_CASE("critic regression recovers the value of a two-state chain") {
    // s0 --any action, r=0--> s1 --any action, r=1--> terminal
    // with gamma 0.99: Q*(s1,.) = 1, Q*(s0,.) = 0.99
    RandomStream rng(7, "init-ac");
    ActorCritic ac(chain_cfg(), rng);
    nn::Adam opt(1e-3f);
    RandomStream sample_rng(8);
    Mat x0(1, 2), x1(1, 2);
    x0 << 1, 0;
    x1 << 0, 1;
    const int B = 32;
    for (int step = 0; step < 5000; ++step) {
        Mat xz(B, 2), xz2(B, 2), a(B, 3);
        Vecf r(B), term(B);
        for (int i = 0; i < B; ++i) {
            bool from_s0 = sample_rng.uniform() < 0.5;
            for (int k = 0; k < 3; ++k) a(i, k) = sample_rng.uniformf(-1, 1);
            if (from_s0) {
                xz.row(i) = x0.row(0);
                xz2.row(i) = x1.row(0);
                r(i) = 0.0f;
                term(i) = 0.0f;
            } else {
                xz.row(i) = x1.row(0);
                xz2.row(i) = x1.row(0);  // unused: terminal
                r(i) = 1.0f;
                term(i) = 1.0f;
            }
        }
        critic_update(ac, xz, a, r, term, xz2, 0.99f, opt);
        ac.soft_update_targets();
    }
    Mat probe_a(1, 3);
    probe_a << 0.2f, -0.4f, 0.6f;
    float q1 = ac.critic_eval(concat_xz(x1, probe_a))(0, 0);
    float q0 = ac.critic_eval(concat_xz(x0, probe_a))(0, 0);
    CHECK(std::abs(q1 - 1.0f) <= 0.05f);
    CHECK(std::abs(q0 - 0.99f) <= 0.05f);
}

TEST_CASE("policy ascent on a quadratic critic converges to the optimum") {
    RandomStream rng(9, "init-ac");
    ActorCriticConfig cfg = chain_cfg();
    ActorCritic ac(cfg, rng);
    const float target0 = 0.4f, target1 = -0.3f, target2 = 0.7f;
    CriticFn quad = [&](Tape& t, Value xz, Value a) {
        Mat opt_a(t.rows(a), 3);
        for (int i = 0; i < t.rows(a); ++i) opt_a.row(i) << target0, target1, target2;
        Value diff = t.sub(a, t.input(std::move(opt_a)));
        return t.scale(t.sum_rows(t.mul(diff, diff)), -1.0f);
    };
    nn::Adam opt(1e-3f);
    Mat x(8, 2);
    RandomStream xr(10);
    for (int i = 0; i < 8; ++i) x.row(i) << xr.uniformf(-1, 1), xr.uniformf(-1, 1);
    for (int step = 0; step < 3000; ++step) {
        Tape t;
        Value loss = policy_loss(t, ac.policy_net(), t.input(x), quad);
        t.backward(loss);
        auto params = ac.policy_net().params();
        opt.step(std::span<nn::Param* const>(params.data(), params.size()));
    }
    Mat a = ac.policy_eval(x);
    for (int i = 0; i < 8; ++i) {
        CHECK(std::abs(a(i, 0) - target0) <= 0.05f);
        CHECK(std::abs(a(i, 1) - target1) <= 0.05f);
        CHECK(std::abs(a(i, 2) - target2) <= 0.05f);
    }
}

TEST_CASE("one policy step moves the action along the critic's gradient") {
    RandomStream rng(11, "init-ac");
    ActorCritic ac(chain_cfg(), rng);
    Mat x(1, 2);
    x << 0.5f, -0.5f;
    float before = ac.policy_eval(x)(0, 0);
    // critic gradient says: larger first action is always better
    CriticFn linear = [&](Tape& t, Value, Value a) {
        return t.slice_cols(a, 0, 1);
    };
    nn::Adam opt(1e-3f);
    Tape t;
    Value loss = policy_loss(t, ac.policy_net(), t.input(x), linear);
    t.backward(loss);
    auto params = ac.policy_net().params();
    opt.step(std::span<nn::Param* const>(params.data(), params.size()));
    float after = ac.policy_eval(x)(0, 0);
    CHECK(after > before);
}

TEST_CASE("a zero-gradient critic changes nothing") {
    RandomStream rng(12, "init-ac");
    ActorCritic ac(chain_cfg(), rng);
    Mat x(2, 2);
    x << 1, 0, 0, 1;
    CriticFn flat = [&](Tape& t, Value, Value a) {
        return t.scale(t.sum_rows(t.mul(a, t.input(Mat::Zero(t.rows(a), 3)))), 1.0f);
    };
    Mat before = ac.policy_net().layers[0].w.value;
    nn::Adam opt(1e-3f);
    Tape t;
    Value loss = policy_loss(t, ac.policy_net(), t.input(x), flat);
    t.backward(loss);
    auto params = ac.policy_net().params();
    opt.step(std::span<nn::Param* const>(params.data(), params.size()));
    CHECK(ac.policy_net().layers[0].w.value == before);
}

TEST_CASE("policy loss through a traced conditioning input reaches its parameters") {
    RandomStream rng(13, "init-ac");
    ActorCriticConfig cfg;
    cfg.state_feat = 3;
    cfg.task_rep = 2;
    ActorCritic ac(cfg, rng);
    nn::Param cond("cond", Mat::Ones(4, 5));
    Tape t;
    Value loss = policy_loss(t, ac, t.leaf(cond));
    t.backward(loss);
    CHECK(cond.grad.cwiseAbs().sum() > 0.0f);
    // the frozen critic must receive no gradient
    float qg = 0.0f;
    for (auto* p : ac.critic_net().params()) qg += p->grad.cwiseAbs().sum();
    CHECK(qg == 0.0f);
}
