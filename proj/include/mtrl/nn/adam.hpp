#pragma once

#include <map>
#include <span>

#include "mtrl/nn/tensor.hpp"

namespace mtrl::nn {

// Bias-corrected Adam. Moment estimates are kept per parameter name; the step
// counter is shared and strictly increasing.
class Adam {
public:
    float lr = 1e-3f;
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float eps = 1e-8f;

    Adam() = default;
    explicit Adam(float learning_rate) : lr(learning_rate) {}

    int64_t step_count() const { return t_; }

    // Applies one update from Param::grad and zeroes the gradients.
    void step(std::span<Param* const> params);
    void step(std::initializer_list<Param*> params) {
        step(std::span<Param* const>(params.begin(), params.size()));
    }

private:
    struct Moments {
        Mat m, v;
    };
    std::map<std::string, Moments> moments_;
    int64_t t_ = 0;
};

}  // namespace mtrl::nn
