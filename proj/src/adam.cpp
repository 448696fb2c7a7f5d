#include "mtrl/nn/adam.hpp"

#include <cmath>

namespace mtrl::nn {

void Adam::step(std::span<Param* const> params) {
    ++t_;
    const float bc1 = 1.0f - std::pow(beta1, float(t_));
    const float bc2 = 1.0f - std::pow(beta2, float(t_));
    for (Param* p : params) {
        if (!p->grad.allFinite())
            fail("adam: non-finite gradient for parameter '" + p->name + "'");
        auto [it, inserted] = moments_.try_emplace(p->name);
        Moments& mo = it->second;
        if (inserted) {
            mo.m = Mat::Zero(p->value.rows(), p->value.cols());
            mo.v = Mat::Zero(p->value.rows(), p->value.cols());
        }
        mo.m = beta1 * mo.m + (1.0f - beta1) * p->grad;
        mo.v = beta2 * mo.v.array() + (1.0f - beta2) * p->grad.array().square();
        Mat mhat = mo.m / bc1;
        Mat vhat = mo.v / bc2;
        p->value.array() -= lr * mhat.array() / (vhat.array().sqrt() + eps);
        p->zero_grad();
    }
}

}  // namespace mtrl::nn
