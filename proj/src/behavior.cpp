#include "mtrl/behavior.hpp"

namespace mtrl {

BehaviorHierarchy::BehaviorHierarchy(const Encoders& enc, GwrParams act,
                                     GwrParams intent, GwrParams behavior,
                                     uint64_t seed)
    : g_act_(enc.demo_hidden_width(), act, seed ^ fnv1a("g_act")),
      g_int_(enc.state_feat_width(), intent, seed ^ fnv1a("g_int")),
      g_b_(enc.demo_hidden_width() + enc.state_feat_width(), behavior,
           seed ^ fnv1a("g_b")) {}

BehaviorHierarchy::BehaviorHierarchy(GwrNetwork act, GwrNetwork intent,
                                     GwrNetwork behavior)
    : g_act_(std::move(act)), g_int_(std::move(intent)), g_b_(std::move(behavior)) {
    require(g_b_.dim() == g_act_.dim() + g_int_.dim(),
            "behavior net width must equal action width + intention width");
}

void BehaviorHierarchy::check_demo(const Demonstration& demo) {
    require(demo.length() >= 2,
            "behavior: demonstration needs at least a movement frame and an effect frame");
}

BehaviorHierarchy::LookupParts BehaviorHierarchy::lookup_parts(
    const Encoders& enc, const Demonstration& demo) const {
    check_demo(demo);
    const int n = demo.length();
    LookupParts out;
    Vecf movement = enc.demo_embed(demo, 0, n - 2);
    Vecf effect = enc.state_embed(demo.frames[size_t(n - 1)]);
    auto ba = g_act_.find_bmus(movement);
    out.action_node = ba.best;
    out.action_embed = g_act_.node(ba.best).w;
    auto bi = g_int_.find_bmus(effect);
    out.intention_node = bi.best;
    out.intention_embed = g_int_.node(bi.best).w;
    Vecf joint(out.action_embed.size() + out.intention_embed.size());
    joint << out.action_embed, out.intention_embed;
    auto bb = g_b_.find_bmus(joint);
    out.behavior_node = bb.best;
    out.behavior_embed = g_b_.node(bb.best).w;
    return out;
}

Vecf BehaviorHierarchy::lookup(const Encoders& enc, const Demonstration& demo) const {
    return lookup_parts(enc, demo).behavior_embed;
}

BehaviorHierarchy::Report BehaviorHierarchy::adapt(const Encoders& enc,
                                                   const Demonstration& demo) {
    check_demo(demo);
    const int n = demo.length();
    Vecf movement = enc.demo_embed(demo, 0, n - 2);
    Vecf effect = enc.state_embed(demo.frames[size_t(n - 1)]);
    Report rep;
    rep.action = g_act_.adapt(movement);
    rep.intention = g_int_.adapt(effect);
    // re-query after adaptation so the behavior net sees the current codebook
    Vecf wa = g_act_.node(g_act_.find_bmus(movement).best).w;
    Vecf wi = g_int_.node(g_int_.find_bmus(effect).best).w;
    Vecf joint(wa.size() + wi.size());
    joint << wa, wi;
    rep.behavior = g_b_.adapt(joint);
    return rep;
}

uint64_t BehaviorHierarchy::structure_hash() const {
    uint64_t h = g_act_.structure_hash();
    h = h * 1099511628211ull ^ g_int_.structure_hash();
    h = h * 1099511628211ull ^ g_b_.structure_hash();
    return h;
}

}  // namespace mtrl
