#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "mtrl/encoders.hpp"
#include "oracle_ref.hpp"

using namespace mtrl;
using oracle::DMat;

namespace {

EncoderConfig small_cfg() {
    EncoderConfig ec;
    ec.state_feat = 8;
    ec.demo_hidden = 6;
    ec.demo_embed_scale = 0.5f;
    ec.state_embed_scale = 0.5f;
    return ec;
}

Demonstration random_demo(int n, RandomStream& rng) {
    Demonstration d;
    d.task_id = 1;
    for (int i = 0; i < n; ++i) {
        Observation o(kObsWidth);
        for (auto& v : o) v = rng.uniformf(0.0f, 1.0f);
        d.frames.push_back(std::move(o));
    }
    return d;
}

}  // namespace

TEST_CASE("encode_state: deterministic, fixed width, task-distinct") {
    Environment env{EnvConfig{}};
    RandomStream er(1, "init-enc");
    Encoders enc(EncoderConfig{}, er);
    RandomStream rng(2, "env");
    WorldState s1 = env.reset(task_by_id(1), rng);
    WorldState s6 = env.reset(task_by_id(6), rng);
    Observation o1 = env.observe(s1), o6 = env.observe(s6);
    Vecf x1 = enc.state_features(o1);
    CHECK(int(x1.size()) == enc.config().state_feat);
    CHECK(x1 == enc.state_features(o1));
    CHECK((x1 - enc.state_features(o6)).norm() > 0.0f);
}

TEST_CASE("encode_state rejects a width mismatch") {
    RandomStream er(1, "init-enc");
    Encoders enc(EncoderConfig{}, er);
    Observation bad(kObsWidth - 1, 0.0f);
    CHECK_THROWS_AS((void)enc.state_features(bad), Error);
}

TEST_CASE("encode_demo: single-frame range equals one recurrent step") {
    RandomStream er(3, "init-enc"), rng(4);
    Encoders enc(small_cfg(), er);
    Demonstration d = random_demo(5, rng);
    Vecf h = enc.demo_latent(d, 2, 2);
    // reference: state features of frame 2 through one cell step in double
    DMat feat = oracle::to_double(frames_to_mat(d, 2, 2));
    for (auto& l : enc.fx().layers)
        feat = oracle::dense(feat, oracle::to_double(l.w.value),
                             oracle::to_double(l.b.value), l.act);
    oracle::LstmState s{DMat::Zero(1, 6), DMat::Zero(1, 6)};
    DMat ref = oracle::lstm_step(feat, s, oracle::to_double(enc.fd().wx.value),
                                 oracle::to_double(enc.fd().wh.value),
                                 oracle::to_double(enc.fd().b.value), 6)
                   .h;
    CHECK(oracle::max_rel_err(Mat(h.transpose()), ref.cast<float>()) <= 1e-4);
}

TEST_CASE("encode_demo: movement range differs from the full demo") {
    RandomStream er(5, "init-enc"), rng(6);
    Encoders enc(small_cfg(), er);
    Demonstration d = random_demo(8, rng);
    Vecf full = enc.demo_latent(d, 0, 7);
    Vecf movement = enc.demo_latent(d, 0, 6);
    CHECK((full - movement).norm() > 0.0f);
    CHECK_THROWS_AS((void)enc.demo_latent(d, 4, 3), Error);
}

TEST_CASE("order sensitivity: reversing a trajectory changes the latent") {
    int changed = 0;
    for (int inst = 0; inst < 20; ++inst) {
        RandomStream er(uint64_t(100 + inst), "init-enc"), rng(uint64_t(200 + inst));
        Encoders enc(small_cfg(), er);
        Demonstration d = random_demo(6, rng);
        Demonstration r = d;
        std::reverse(r.frames.begin(), r.frames.end());
        if ((enc.demo_latent(d, 0, 5) - enc.demo_latent(r, 0, 5)).norm() > 1e-6f)
            ++changed;
    }
    CHECK(changed == 20);
}

TEST_CASE("batched encode matches the one-demo evaluation path") {
    RandomStream er(7, "init-enc"), rng(8);
    Encoders enc(small_cfg(), er);
    std::vector<Demonstration> demos;
    for (int i = 0; i < 5; ++i) demos.push_back(random_demo(3 + i * 2, rng));
    std::vector<Encoders::DemoRange> ranges;
    for (auto& d : demos) ranges.push_back({&d, 0, d.length() - 1});
    ranges.push_back({&demos[0], 1, 2});  // a crop sharing frames with its demo
    Tape t;
    Value out = enc.demo_embed_batch(t, ranges, false);
    REQUIRE(t.rows(out) == 6);
    for (int i = 0; i < 5; ++i) {
        Vecf single = enc.demo_embed(demos[size_t(i)], 0, demos[size_t(i)].length() - 1);
        Mat row = t.val(out).row(i);
        CHECK((row.transpose() - single).cwiseAbs().maxCoeff() <= 2e-6f);
    }
    Vecf crop = enc.demo_embed(demos[0], 1, 2);
    CHECK((t.val(out).row(5).transpose() - crop).cwiseAbs().maxCoeff() <= 2e-6f);
}

TEST_CASE("zero-padding in a batch never changes per-demo outputs") {
    // mixing short and long demos in one batch pads the short ones with
    // masked steps; the padded result must match the unpadded single-demo
    // evaluation (bit-exact masking is covered at the recurrent-cell level;
    // across batch shapes the dense kernels may reassociate, hence the tight
    // tolerance rather than bit equality)
    RandomStream er(9, "init-enc"), rng(10);
    Encoders enc(small_cfg(), er);
    Demonstration short_d = random_demo(2, rng);
    Demonstration long_d = random_demo(12, rng);
    std::vector<Encoders::DemoRange> solo = {{&short_d, 0, 1}};
    std::vector<Encoders::DemoRange> mixed = {{&short_d, 0, 1}, {&long_d, 0, 11}};
    Tape t1, t2, t3;
    Mat a = t1.val(enc.demo_embed_batch(t1, solo, false));
    Mat b = t2.val(enc.demo_embed_batch(t2, mixed, false));
    CHECK((a.row(0) - b.row(0)).cwiseAbs().maxCoeff() <= 2e-6f);
    // identical batch composition reproduces results exactly
    Mat c = t3.val(enc.demo_embed_batch(t3, mixed, false));
    CHECK(t2.val(Value{&t2, 0}).rows() >= 0);  // keep tapes alive
    CHECK(b == c);
}

TEST_CASE("gradient flows into both the state and demonstration encoders") {
    RandomStream er(11, "init-enc"), rng(12);
    Encoders enc(small_cfg(), er);
    Demonstration d = random_demo(5, rng);
    std::vector<Encoders::DemoRange> ranges = {{&d, 0, 4}, {&d, 1, 3}};
    Tape t;
    Value emb = enc.demo_embed_batch(t, ranges, true);
    Mat probe(2, 6);
    RandomStream pr(55);
    for (int i = 0; i < probe.size(); ++i) probe.data()[i] = pr.uniformf(-1, 1);
    t.backward(t.sum_all(t.mul(emb, t.input(probe))));
    float fx_grad = 0.0f, fd_grad = 0.0f;
    for (auto& l : enc.fx().layers) fx_grad += l.w.grad.cwiseAbs().sum();
    fd_grad += enc.fd().wx.grad.cwiseAbs().sum();
    fd_grad += enc.fd().wh.grad.cwiseAbs().sum();
    CHECK(fx_grad > 0.0f);
    CHECK(fd_grad > 0.0f);
}

TEST_CASE("batched encode gradients match double-precision finite differences") {
    RandomStream er(13, "init-enc"), rng(14);
    EncoderConfig ec;
    ec.obs_width = 4;  // tiny observation so finite differences stay cheap
    ec.state_feat = 3;
    ec.demo_hidden = 3;
    ec.demo_embed_scale = 0.7f;
    Encoders enc(ec, er);
    auto mk = [&](int n) {
        Demonstration d;
        for (int i = 0; i < n; ++i) {
            Observation o(4);
            for (auto& v : o) v = rng.uniformf(-1, 1);
            d.frames.push_back(o);
        }
        return d;
    };
    Demonstration d1 = mk(3), d2 = mk(5);
    std::vector<Encoders::DemoRange> ranges = {{&d1, 0, 2}, {&d2, 0, 4}, {&d2, 1, 2}};

    Mat probe(3, 3);
    for (int i = 0; i < probe.size(); ++i) probe.data()[i] = rng.uniformf(-1, 1);

    auto ref_loss = [&]() {
        auto enc_one = [&](const Demonstration& d, int lo, int hi) {
            DMat f(hi - lo + 1, 4);
            for (int i = lo; i <= hi; ++i)
                for (int j = 0; j < 4; ++j)
                    f(i - lo, j) = double(d.frames[size_t(i)][size_t(j)]);
            for (auto& l : enc.fx().layers)
                f = oracle::dense(f, oracle::to_double(l.w.value),
                                  oracle::to_double(l.b.value), l.act);
            oracle::LstmState s{DMat::Zero(1, 3), DMat::Zero(1, 3)};
            for (Eigen::Index r = 0; r < f.rows(); ++r)
                s = oracle::lstm_step(f.row(r), s, oracle::to_double(enc.fd().wx.value),
                                      oracle::to_double(enc.fd().wh.value),
                                      oracle::to_double(enc.fd().b.value), 3);
            return DMat(oracle::l2norm_rows(s.h) * 0.7);
        };
        DMat all(3, 3);
        all.row(0) = enc_one(d1, 0, 2);
        all.row(1) = enc_one(d2, 0, 4);
        all.row(2) = enc_one(d2, 1, 2);
        return (all.array() * oracle::to_double(probe).array()).sum();
    };

    Tape t;
    Value emb = enc.demo_embed_batch(t, ranges, true);
    t.backward(t.sum_all(t.mul(emb, t.input(probe))));
    for (auto* p : enc.params()) {
        Mat fd = oracle::finite_diff(*p, ref_loss);
        CHECK(oracle::max_rel_err(p->grad, fd) <= 1e-3);
    }
}
