#include "mtrl/tinet.hpp"

#include <unordered_set>

namespace mtrl {

TaskInferenceNet::TaskInferenceNet(int in_width, int hidden, int z_width,
                                   RandomStream& rng)
    : net_("tinet", {in_width, hidden, hidden, z_width}, nn::Act::Relu,
           nn::Act::Linear, rng) {}

Vecf TaskInferenceNet::infer(const Vecf& demo_embed) const {
    require(int(demo_embed.size()) == in_width(), "tinet: input width mismatch");
    Mat row = demo_embed.transpose();
    return net_.eval(row).row(0).transpose();
}

Mat TaskInferenceNet::infer(const Mat& demo_embeds) const { return net_.eval(demo_embeds); }

Value TaskInferenceNet::forward(Tape& t, Value demo_embeds, bool train) const {
    return net_.forward(t, demo_embeds, train);
}

std::pair<int, int> temporal_crop(int n, RandomStream& rng) {
    require(n >= 2, "temporal_crop: need at least two frames");
    // rejection keeps the draw uniform over all pairs with u < v
    for (;;) {
        int u = int(rng.uniform_index(uint64_t(n)));
        int v = int(rng.uniform_index(uint64_t(n)));
        if (u < v) return {u, v};
        if (v < u) return {v, u};
    }
}

float behavior_matching_loss(const Vecf& z, const Vecf& target) {
    require(z.size() == target.size(), "behavior_matching_loss: width mismatch");
    return (z - target).squaredNorm();
}

Value behavior_matching_loss(Tape& t, Value z, Mat targets) {
    require(t.rows(z) == int(targets.rows()) && t.cols(z) == int(targets.cols()),
            "behavior_matching_loss: shape mismatch");
    Value diff = t.sub(z, t.input(std::move(targets)));
    return t.mean_all(t.sum_rows(t.mul(diff, diff)));
}

Value contrastive_loss(Tape& t, Value z_complete, Value z_cropped, float temperature) {
    require(temperature > 0.0f, "contrastive_loss: temperature must be positive");
    const int K = t.rows(z_complete);
    require(K >= 2, "contrastive_loss: need at least two pairs");
    require(t.rows(z_cropped) == K && t.cols(z_cropped) == t.cols(z_complete),
            "contrastive_loss: shape mismatch");
    if (t.val(z_complete).rowwise().norm().minCoeff() < 1e-9f ||
        t.val(z_cropped).rowwise().norm().minCoeff() < 1e-9f)
        fail("contrastive_loss: zero-norm representation");

    const float inv_tau = 1.0f / temperature;
    Value nc = t.l2norm_rows(z_complete);
    Value nx = t.l2norm_rows(z_cropped);
    // positive similarity per anchor
    Value pos = t.scale(t.sum_rows(t.mul(nc, nx)), inv_tau);  // [K,1]
    // similarities between complete representations; diagonal excluded
    Value sims = t.scale(t.matmul_nt(nc, nc), inv_tau);  // [K,K]
    Mat off_diag = Mat::Ones(K, K);
    off_diag.diagonal().setZero();
    Value negs = t.sum_rows(t.mul(t.exp(sims), t.input(std::move(off_diag))));
    Value denom = t.add(negs, t.exp(pos));
    return t.mean_all(t.sub(t.log(denom), pos));
}

Value ssl_loss(Tape& t, Value bm, Value contrastive) { return t.add(bm, contrastive); }

void SslBuffer::push(SslSample s) {
    items_.push_back(std::move(s));
    if (items_.size() > capacity_) items_.pop_front();
}

std::vector<size_t> SslBuffer::sample(size_t k, RandomStream& rng) const {
    require(k >= 1 && k <= items_.size(), "ssl buffer: not enough samples");
    std::unordered_set<size_t> seen;
    std::vector<size_t> out;
    out.reserve(k);
    while (out.size() < k) {
        size_t i = rng.uniform_index(items_.size());
        if (seen.insert(i).second) out.push_back(i);
    }
    return out;
}

}  // namespace mtrl
