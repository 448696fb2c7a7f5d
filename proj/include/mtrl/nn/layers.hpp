#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mtrl/nn/tensor.hpp"

namespace mtrl::nn {

enum class Act { Linear, Relu, Tanh, Sigmoid };

Value apply_act(Tape& t, Value x, Act act);

// uniform(-sqrt(6/(fan_in+fan_out)), +...) weight init
Mat glorot(int rows, int cols, int fan_in, int fan_out, RandomStream& rng);

struct Dense {
    Param w;  // [in, out]
    Param b;  // [1, out]
    Act act = Act::Linear;

    Dense() = default;
    Dense(const std::string& name, int in, int out, Act a, RandomStream& rng);

    int in_width() const { return int(w.value.rows()); }
    int out_width() const { return int(w.value.cols()); }

    // traced forward; with train=false parameters enter as constants
    Value forward(Tape& t, Value x, bool train = true) const;
    // plain evaluation without a tape; identical arithmetic to forward()
    Mat eval(const Mat& x) const;

    std::vector<Param*> params() { return {&w, &b}; }
};

struct Mlp {
    std::vector<Dense> layers;

    Mlp() = default;
    // hidden layers all use `hidden_act`, output layer uses `out_act`
    Mlp(const std::string& name, const std::vector<int>& widths, Act hidden_act,
        Act out_act, RandomStream& rng);

    int in_width() const { return layers.front().in_width(); }
    int out_width() const { return layers.back().out_width(); }

    Value forward(Tape& t, Value x, bool train = true) const;
    Mat eval(const Mat& x) const;
    std::vector<Param*> params();
};

// Gated recurrent cell with input/forget/output gates and a tanh candidate.
// Gate blocks are packed [i | f | g | o] along the output axis.
struct LstmCell {
    Param wx;  // [in, 4H]
    Param wh;  // [H, 4H]
    Param b;   // [1, 4H]
    int hidden = 0;

    LstmCell() = default;
    LstmCell(const std::string& name, int in, int H, RandomStream& rng);

    int in_width() const { return int(wx.value.rows()); }

    struct State {
        Value h, c;
    };
    struct EvalState {
        Mat h, c;
    };

    State initial(Tape& t, int batch) const;
    EvalState initial_eval(int batch) const;

    // One step. `mask` is [batch,1] with entries in {0,1}; rows with 0 keep
    // their previous state. Pass an invalid Value for an all-ones mask.
    State step(Tape& t, Value x, State s, Value mask, bool train = true) const;
    EvalState step_eval(const Mat& x, const EvalState& s, const float* mask) const;

    std::vector<Param*> params() { return {&wx, &wh, &b}; }
};

// Runs the cell over a sequence and returns the hidden state after the last
// unmasked element. Masked (padded) steps leave the state unchanged, so
// appending padding never changes the result.
Mat recurrent_encode(const LstmCell& cell, const std::vector<Mat>& seq,
                     const std::vector<int>& mask);

std::string shape_str(const Mat& m);

}  // namespace mtrl::nn
