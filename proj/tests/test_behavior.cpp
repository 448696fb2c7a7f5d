#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "mtrl/behavior.hpp"

using namespace mtrl;

namespace {

EncoderConfig small_cfg() {
    EncoderConfig ec;
    ec.state_feat = 8;
    ec.demo_hidden = 6;
    ec.demo_embed_scale = 0.6f;
    ec.state_embed_scale = 0.6f;
    return ec;
}

BehaviorHierarchy make_hierarchy(const Encoders& enc, uint64_t seed) {
    return BehaviorHierarchy(enc, gwr_params_action(), gwr_params_intention(),
                             gwr_params_behavior(), seed);
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

TEST_CASE("lookup on fresh nets returns one of the two initial behavior weights") {
    RandomStream er(1, "init-enc"), rng(2);
    Encoders enc(small_cfg(), er);
    BehaviorHierarchy h = make_hierarchy(enc, 3);
    Demonstration d = random_demo(5, rng);
    Vecf g = h.lookup(enc, d);
    REQUIRE(h.behavior_net().node_count() == 2);
    bool matches = false;
    for (const auto& [id, n] : h.behavior_net().nodes())
        matches = matches || (n.w - g).norm() == 0.0f;
    CHECK(matches);
    CHECK(int(g.size()) == h.embedding_width());
}

TEST_CASE("lookup is a pure query and deterministic for an identical demo") {
    RandomStream er(4, "init-enc"), rng(5);
    Encoders enc(small_cfg(), er);
    BehaviorHierarchy h = make_hierarchy(enc, 6);
    Demonstration d = random_demo(6, rng);
    for (int i = 0; i < 20; ++i) h.adapt(enc, random_demo(4 + i % 5, rng));
    uint64_t before = h.structure_hash();
    Vecf g1 = h.lookup(enc, d);
    Vecf g2 = h.lookup(enc, d);
    CHECK(h.structure_hash() == before);
    CHECK(g1 == g2);
    Demonstration dup = d;  // a complete identical duplicate maps identically
    CHECK(h.lookup(enc, dup) == g1);
}

TEST_CASE("lookup rejects demos without a movement and an effect frame") {
    RandomStream er(7, "init-enc"), rng(8);
    Encoders enc(small_cfg(), er);
    BehaviorHierarchy h = make_hierarchy(enc, 9);
    Demonstration d = random_demo(1, rng);
    CHECK_THROWS_AS((void)h.lookup(enc, d), Error);
}

TEST_CASE("the behavior net always consumes node weights, never raw latents") {
    RandomStream er(10, "init-enc"), rng(11);
    Encoders enc(small_cfg(), er);
    BehaviorHierarchy h = make_hierarchy(enc, 12);
    for (int i = 0; i < 30; ++i) h.adapt(enc, random_demo(5, rng));
    Demonstration d = random_demo(5, rng);
    auto parts = h.lookup_parts(enc, d);
    CHECK(parts.action_embed == h.action_net().node(parts.action_node).w);
    CHECK(parts.intention_embed == h.intention_net().node(parts.intention_node).w);
    Vecf joint(parts.action_embed.size() + parts.intention_embed.size());
    joint << parts.action_embed, parts.intention_embed;
    // the behavior node reported is the best match for exactly this pair
    CHECK(h.behavior_net().find_bmus(joint).best == parts.behavior_node);
}

TEST_CASE("repeated adaptation on one fixed demo saturates all three nets") {
    RandomStream er(13, "init-enc"), rng(14);
    Encoders enc(small_cfg(), er);
    BehaviorHierarchy h = make_hierarchy(enc, 15);
    Demonstration d = random_demo(6, rng);
    for (int i = 0; i < 100; ++i) h.adapt(enc, d);
    size_t a1 = h.action_net().node_count();
    size_t i1 = h.intention_net().node_count();
    size_t b1 = h.behavior_net().node_count();
    for (int i = 0; i < 100; ++i) h.adapt(enc, d);
    // counts may only shrink while stale structure ages away
    CHECK(h.action_net().node_count() <= a1);
    CHECK(h.intention_net().node_count() <= i1);
    CHECK(h.behavior_net().node_count() <= b1);
    size_t a2 = h.action_net().node_count();
    size_t i2 = h.intention_net().node_count();
    size_t b2 = h.behavior_net().node_count();
    for (int i = 0; i < 100; ++i) h.adapt(enc, d);
    CHECK(h.action_net().node_count() == a2);
    CHECK(h.intention_net().node_count() == i2);
    CHECK(h.behavior_net().node_count() == b2);
}

TEST_CASE("node counts only shrink through isolated-node garbage collection") {
    RandomStream er(16, "init-enc"), rng(17);
    Encoders enc(small_cfg(), er);
    BehaviorHierarchy h = make_hierarchy(enc, 18);
    size_t prev = h.behavior_net().node_count();
    for (int i = 0; i < 200; ++i) {
        auto rep = h.adapt(enc, random_demo(3 + i % 7, rng));
        size_t now = h.behavior_net().node_count();
        long delta = long(now) - long(prev);
        long expected = (rep.behavior.inserted ? 1 : 0) - rep.behavior.nodes_removed;
        CHECK(delta == expected);
        prev = now;
    }
}

TEST_CASE("four scripted task families grow the behavior net to at least four nodes") {
    Environment env{EnvConfig{}};
    RandomStream er(19, "init-enc"), rng(20, "demo");
    EncoderConfig ec;  // production widths
    Encoders enc(ec, er);
    BehaviorHierarchy h = make_hierarchy(enc, 21);
    for (int round = 0; round < 15; ++round)
        for (int task = 1; task <= 4; ++task)
            h.adapt(enc, scripted_demo(env, task_by_id(task), rng));
    CHECK(h.behavior_net().node_count() >= 4);
    CHECK(h.action_net().node_count() >= 4);
    CHECK(h.intention_net().node_count() >= 4);
}

TEST_CASE("intention separability: same movement, different endpoints, different nodes") {
    RandomStream er(22, "init-enc"), rng(23);
    Encoders enc(small_cfg(), er);
    BehaviorHierarchy h = make_hierarchy(enc, 24);
    // two demos sharing every frame except a very different final effect
    Demonstration a = random_demo(6, rng);
    Demonstration b = a;
    for (auto& v : b.frames.back()) v = 1.0f - v;
    for (int i = 0; i < 40; ++i) {
        h.adapt(enc, a);
        h.adapt(enc, b);
    }
    auto pa = h.lookup_parts(enc, a);
    auto pb = h.lookup_parts(enc, b);
    CHECK(pa.action_node == pb.action_node);  // identical movements
    CHECK(pa.intention_node != pb.intention_node);
}
