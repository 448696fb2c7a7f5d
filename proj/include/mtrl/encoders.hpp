#pragma once

#include <span>

#include "mtrl/nn/adam.hpp"
#include "mtrl/nn/layers.hpp"
#include "mtrl/tablesim.hpp"

namespace mtrl {

using nn::Mat;
using nn::Tape;
using nn::Value;

struct EncoderConfig {
    int obs_width = kObsWidth;
    int state_feat = 32;   // F
    int demo_hidden = 64;  // H
    // Embeddings fed to the self-organizing nets are unit-normalized and then
    // scaled; the scales put typical distances into the regime the activity
    // thresholds expect.
    float demo_embed_scale = 1.0f;
    float state_embed_scale = 1.0f;
};

// State encoder f_x and demonstration encoder f_d. The state path is a small
// MLP over the structured observation; the demonstration path runs the
// per-frame features through a gated recurrent cell.
class Encoders {
public:
    Encoders() = default;
    Encoders(const EncoderConfig& cfg, RandomStream& rng,
             const std::string& name_prefix = "");

    const EncoderConfig& config() const { return cfg_; }
    int state_feat_width() const { return cfg_.state_feat; }
    int demo_hidden_width() const { return cfg_.demo_hidden; }

    // ---- evaluation paths (no gradients) ----
    Mat state_features(const Mat& obs) const;  // [B,obs] -> [B,F]
    Vecf state_features(const Observation& obs) const;
    // raw hidden state after frames [lo, hi] of the demonstration
    Vecf demo_latent(const Demonstration& d, int lo, int hi) const;
    // unit-normalized, scaled embeddings for the self-organizing nets
    Vecf demo_embed(const Demonstration& d, int lo, int hi) const;
    Vecf state_embed(const Observation& obs) const;

    // ---- traced paths ----
    Value state_features(Tape& t, Value obs, bool train = true) const;

    struct DemoRange {
        const Demonstration* demo = nullptr;
        int lo = 0, hi = 0;  // inclusive frame range
    };
    // Encodes a batch of (possibly overlapping) demo ranges in one pass;
    // returns [B,H] unit-normalized scaled embeddings. Per-frame features of
    // a demonstration are computed once and shared between its ranges.
    Value demo_embed_batch(Tape& t, std::span<const DemoRange> ranges,
                           bool train = true) const;

    std::vector<nn::Param*> params();

    nn::Mlp& fx() { return fx_; }
    const nn::Mlp& fx() const { return fx_; }
    nn::LstmCell& fd() { return fd_; }
    const nn::LstmCell& fd() const { return fd_; }

private:
    EncoderConfig cfg_;
    nn::Mlp fx_;
    nn::LstmCell fd_;
};

Mat obs_to_row(const Observation& obs);
Mat frames_to_mat(const Demonstration& d, int lo, int hi);

}  // namespace mtrl
