#pragma once

#include "mtrl/encoders.hpp"
#include "mtrl/gwr.hpp"

namespace mtrl {

// Two-level self-organization: an action net over movement embeddings, an
// intention net over final-effect embeddings, and a behavior net over the
// concatenated best-matching pair.
class BehaviorHierarchy {
public:
    BehaviorHierarchy() = default;
    BehaviorHierarchy(const Encoders& enc, GwrParams act, GwrParams intent,
                      GwrParams behavior, uint64_t seed);
    BehaviorHierarchy(GwrNetwork act, GwrNetwork intent, GwrNetwork behavior);

    int embedding_width() const { return g_b_.dim(); }

    // Weight of the behavior node that best matches the demonstration. Pure
    // query: adapts nothing.
    Vecf lookup(const Encoders& enc, const Demonstration& demo) const;

    struct LookupParts {
        Vecf action_embed;
        Vecf intention_embed;
        Vecf behavior_embed;
        int action_node = -1;
        int intention_node = -1;
        int behavior_node = -1;
    };
    LookupParts lookup_parts(const Encoders& enc, const Demonstration& demo) const;

    struct Report {
        AdaptReport action;
        AdaptReport intention;
        AdaptReport behavior;
    };
    // One adaptation pass per net. The behavior net is fed the concatenation
    // of the freshly adapted best matches.
    Report adapt(const Encoders& enc, const Demonstration& demo);

    uint64_t structure_hash() const;

    const GwrNetwork& action_net() const { return g_act_; }
    const GwrNetwork& intention_net() const { return g_int_; }
    const GwrNetwork& behavior_net() const { return g_b_; }
    GwrNetwork& action_net() { return g_act_; }
    GwrNetwork& intention_net() { return g_int_; }
    GwrNetwork& behavior_net() { return g_b_; }

private:
    static void check_demo(const Demonstration& demo);
    GwrNetwork g_act_, g_int_, g_b_;
};

}  // namespace mtrl
