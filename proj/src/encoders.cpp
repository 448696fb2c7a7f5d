#include "mtrl/encoders.hpp"

#include <unordered_map>

namespace mtrl {

Mat obs_to_row(const Observation& obs) {
    Mat m(1, Eigen::Index(obs.size()));
    for (size_t i = 0; i < obs.size(); ++i) m(0, Eigen::Index(i)) = obs[i];
    return m;
}

Mat frames_to_mat(const Demonstration& d, int lo, int hi) {
    require(lo >= 0 && hi < d.length() && lo <= hi, "demo frame range out of bounds");
    Mat m(hi - lo + 1, kObsWidth);
    for (int i = lo; i <= hi; ++i)
        for (int j = 0; j < kObsWidth; ++j) m(i - lo, j) = d.frames[size_t(i)][size_t(j)];
    return m;
}

Encoders::Encoders(const EncoderConfig& cfg, RandomStream& rng,
                   const std::string& name_prefix)
    : cfg_(cfg),
      fx_(name_prefix + "fx", {cfg.obs_width, 64, 64, cfg.state_feat}, nn::Act::Relu,
          nn::Act::Linear, rng),
      fd_(name_prefix + "fd", cfg.state_feat, cfg.demo_hidden, rng) {}

Mat Encoders::state_features(const Mat& obs) const { return fx_.eval(obs); }

Vecf Encoders::state_features(const Observation& obs) const {
    Mat y = fx_.eval(obs_to_row(obs));
    return y.row(0).transpose();
}

Vecf Encoders::demo_latent(const Demonstration& d, int lo, int hi) const {
    require(lo <= hi, "demo_latent: empty range");
    Mat frames = frames_to_mat(d, lo, hi);
    Mat feats = fx_.eval(frames);
    auto s = fd_.initial_eval(1);
    for (Eigen::Index i = 0; i < feats.rows(); ++i)
        s = fd_.step_eval(feats.row(i), s, nullptr);
    return s.h.row(0).transpose();
}

static Vecf normalize_scaled(Vecf v, float scale) {
    float n = std::max(v.norm(), 1e-12f);
    return v * (scale / n);
}

Vecf Encoders::demo_embed(const Demonstration& d, int lo, int hi) const {
    return normalize_scaled(demo_latent(d, lo, hi), cfg_.demo_embed_scale);
}

Vecf Encoders::state_embed(const Observation& obs) const {
    return normalize_scaled(state_features(obs), cfg_.state_embed_scale);
}

Value Encoders::state_features(Tape& t, Value obs, bool train) const {
    return fx_.forward(t, obs, train);
}

Value Encoders::demo_embed_batch(Tape& t, std::span<const DemoRange> ranges,
                                 bool train) const {
    require(!ranges.empty(), "demo_embed_batch: empty batch");
    const int B = int(ranges.size());

    // one flat frame matrix covering every distinct demo once
    struct Span {
        int lo, hi, base;
    };
    std::unordered_map<const Demonstration*, Span> spans;
    for (const auto& r : ranges) {
        require(r.demo && r.lo >= 0 && r.hi < r.demo->length() && r.lo <= r.hi,
                "demo_embed_batch: bad range");
        auto [it, fresh] = spans.try_emplace(r.demo, Span{r.lo, r.hi, 0});
        if (!fresh) {
            it->second.lo = std::min(it->second.lo, r.lo);
            it->second.hi = std::max(it->second.hi, r.hi);
        }
    }
    // deterministic base assignment in first-appearance order
    int total = 0;
    std::vector<const Demonstration*> order;
    for (const auto& r : ranges) {
        bool seen = false;
        for (auto* d : order) seen = seen || (d == r.demo);
        if (!seen) {
            auto& sp = spans.at(r.demo);
            sp.base = total;
            total += sp.hi - sp.lo + 1;
            order.push_back(r.demo);
        }
    }
    Mat flat(total, cfg_.obs_width);
    for (auto* d : order) {
        const Span& sp = spans.at(d);
        for (int i = sp.lo; i <= sp.hi; ++i)
            for (int j = 0; j < cfg_.obs_width; ++j)
                flat(sp.base + i - sp.lo, j) = d->frames[size_t(i)][size_t(j)];
    }

    Value feats = fx_.forward(t, t.input(std::move(flat)), train);

    int max_len = 0;
    const size_t nb = size_t(B);
    std::vector<int> lens(nb);
    for (int i = 0; i < B; ++i) {
        lens[size_t(i)] = ranges[size_t(i)].hi - ranges[size_t(i)].lo + 1;
        max_len = std::max(max_len, lens[size_t(i)]);
    }

    auto state = fd_.initial(t, B);
    for (int step = 0; step < max_len; ++step) {
        std::vector<int> idx(nb);
        Mat mask(B, 1);
        bool all_active = true;
        for (int i = 0; i < B; ++i) {
            const auto& r = ranges[size_t(i)];
            const Span& sp = spans.at(r.demo);
            int frame = r.lo + std::min(step, lens[size_t(i)] - 1);
            idx[size_t(i)] = sp.base + (frame - sp.lo);
            bool active = step < lens[size_t(i)];
            mask(i, 0) = active ? 1.0f : 0.0f;
            all_active = all_active && active;
        }
        Value x = t.gather_rows(feats, std::move(idx));
        Value m = all_active ? Value{} : t.input(std::move(mask));
        state = fd_.step(t, x, state, m, train);
    }
    return t.scale(t.l2norm_rows(state.h), cfg_.demo_embed_scale);
}

std::vector<nn::Param*> Encoders::params() {
    std::vector<nn::Param*> out = fx_.params();
    for (auto* p : fd_.params()) out.push_back(p);
    return out;
}

}  // namespace mtrl
