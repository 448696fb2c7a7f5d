#pragma once

#include <deque>

#include "mtrl/encoders.hpp"

namespace mtrl {

// Task inference network: maps a demonstration embedding to a task
// representation the policy is conditioned on.
class TaskInferenceNet {
public:
    TaskInferenceNet() = default;
    TaskInferenceNet(int in_width, int hidden, int z_width, RandomStream& rng);

    int in_width() const { return net_.in_width(); }
    int z_width() const { return net_.out_width(); }

    Vecf infer(const Vecf& demo_embed) const;
    Mat infer(const Mat& demo_embeds) const;
    Value forward(Tape& t, Value demo_embeds, bool train = true) const;

    std::vector<nn::Param*> params() { return net_.params(); }
    nn::Mlp& net() { return net_; }
    const nn::Mlp& net() const { return net_; }

private:
    nn::Mlp net_;
};

// uniform over integer pairs 0 <= u < v <= n-1
std::pair<int, int> temporal_crop(int n, RandomStream& rng);

// ||z - g||^2 for a single pair; the batch loss is the mean over rows.
float behavior_matching_loss(const Vecf& z, const Vecf& target);
Value behavior_matching_loss(Tape& t, Value z, Mat targets);

// Normalized-temperature contrastive loss. Anchor i is the complete
// representation z_i; its positive is the cropped z_j of the same
// demonstration; negatives are the complete representations of the other
// batch entries. Similarity is cosine. Returns the mean over anchors.
Value contrastive_loss(Tape& t, Value z_complete, Value z_cropped, float temperature);

Value ssl_loss(Tape& t, Value bm, Value contrastive);

struct SslSample {
    size_t demo_index = 0;  // reference into the demo store
    int crop_lo = 0, crop_hi = 0;
    Vecf behavior_target;  // snapshot at insertion time, immutable afterwards
};

class SslBuffer {
public:
    explicit SslBuffer(size_t capacity = 100000) : capacity_(capacity) {}

    size_t size() const { return items_.size(); }
    size_t capacity() const { return capacity_; }
    void push(SslSample s);
    const SslSample& at(size_t i) const { return items_.at(i); }

    // uniform sample of k distinct buffer slots
    std::vector<size_t> sample(size_t k, RandomStream& rng) const;

private:
    size_t capacity_;
    std::deque<SslSample> items_;
};

}  // namespace mtrl
