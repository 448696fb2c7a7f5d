#include "mtrl/nn/layers.hpp"

#include <cmath>

namespace mtrl::nn {

std::string shape_str(const Mat& m) {
    return "[" + std::to_string(m.rows()) + "," + std::to_string(m.cols()) + "]";
}

Value apply_act(Tape& t, Value x, Act act) {
    switch (act) {
        case Act::Linear: return x;
        case Act::Relu: return t.relu(x);
        case Act::Tanh: return t.tanh(x);
        case Act::Sigmoid: return t.sigmoid(x);
    }
    fail("unknown activation");
}

static Mat eval_act(Mat y, Act act) {
    switch (act) {
        case Act::Linear: return y;
        case Act::Relu: return y.cwiseMax(0.0f);
        case Act::Tanh: return y.array().tanh().matrix();
        case Act::Sigmoid: return (1.0f / (1.0f + (-y.array()).exp())).matrix();
    }
    fail("unknown activation");
}

Mat glorot(int rows, int cols, int fan_in, int fan_out, RandomStream& rng) {
    float limit = std::sqrt(6.0f / float(fan_in + fan_out));
    Mat m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = rng.uniformf(-limit, limit);
    return m;
}

Dense::Dense(const std::string& name, int in, int out, Act a, RandomStream& rng)
    : w(name + ".w", glorot(in, out, in, out, rng)),
      b(name + ".b", Mat::Zero(1, out)),
      act(a) {}

Value Dense::forward(Tape& t, Value x, bool train) const {
    if (t.cols(x) != in_width())
        fail("dense " + w.name + ": input width " + std::to_string(t.cols(x)) +
             " != " + std::to_string(in_width()));
    Value wv = train ? t.leaf(const_cast<Param&>(w)) : t.input(w.value);
    Value bv = train ? t.leaf(const_cast<Param&>(b)) : t.input(b.value);
    return apply_act(t, t.add_row(t.matmul(x, wv), bv), act);
}

Mat Dense::eval(const Mat& x) const {
    if (x.cols() != in_width())
        fail("dense " + w.name + ": input width " + std::to_string(x.cols()) +
             " != " + std::to_string(in_width()));
    Mat y = x * w.value;
    y.rowwise() += b.value.row(0);
    return eval_act(std::move(y), act);
}

Mlp::Mlp(const std::string& name, const std::vector<int>& widths, Act hidden_act,
         Act out_act, RandomStream& rng) {
    require(widths.size() >= 2, "mlp needs at least input and output widths");
    for (size_t i = 0; i + 1 < widths.size(); ++i) {
        Act a = (i + 2 == widths.size()) ? out_act : hidden_act;
        layers.emplace_back(name + ".l" + std::to_string(i), widths[i], widths[i + 1],
                            a, rng);
    }
}

Value Mlp::forward(Tape& t, Value x, bool train) const {
    for (const auto& l : layers) x = l.forward(t, x, train);
    return x;
}

Mat Mlp::eval(const Mat& x) const {
    Mat y = x;
    for (const auto& l : layers) y = l.eval(y);
    return y;
}

std::vector<Param*> Mlp::params() {
    std::vector<Param*> out;
    for (auto& l : layers)
        for (auto* p : l.params()) out.push_back(p);
    return out;
}

LstmCell::LstmCell(const std::string& name, int in, int H, RandomStream& rng)
    : wx(name + ".wx", glorot(in, 4 * H, in, H, rng)),
      wh(name + ".wh", glorot(H, 4 * H, H, H, rng)),
      b(name + ".b", Mat::Zero(1, 4 * H)),
      hidden(H) {
    // forget-gate bias starts at 1 so the cell initially retains state
    b.value.middleCols(H, H).setConstant(1.0f);
}

LstmCell::State LstmCell::initial(Tape& t, int batch) const {
    return {t.input(Mat::Zero(batch, hidden)), t.input(Mat::Zero(batch, hidden))};
}

LstmCell::EvalState LstmCell::initial_eval(int batch) const {
    return {Mat::Zero(batch, hidden), Mat::Zero(batch, hidden)};
}

LstmCell::State LstmCell::step(Tape& t, Value x, State s, Value mask, bool train) const {
    if (t.cols(x) != in_width()) fail("lstm " + wx.name + ": input width mismatch");
    const int H = hidden;
    Value wxv = train ? t.leaf(const_cast<Param&>(wx)) : t.input(wx.value);
    Value whv = train ? t.leaf(const_cast<Param&>(wh)) : t.input(wh.value);
    Value bv = train ? t.leaf(const_cast<Param&>(b)) : t.input(b.value);

    Value z = t.add_row(t.add(t.matmul(x, wxv), t.matmul(s.h, whv)), bv);
    Value ig = t.sigmoid(t.slice_cols(z, 0, H));
    Value fg = t.sigmoid(t.slice_cols(z, H, 2 * H));
    Value gc = t.tanh(t.slice_cols(z, 2 * H, 3 * H));
    Value og = t.sigmoid(t.slice_cols(z, 3 * H, 4 * H));

    Value c_new = t.add(t.mul(fg, s.c), t.mul(ig, gc));
    Value h_new = t.mul(og, t.tanh(c_new));

    if (!mask.valid()) return {h_new, c_new};
    // rows with mask 0 carry the previous state through
    Value c = t.add(s.c, t.mul_col(t.sub(c_new, s.c), mask));
    Value h = t.add(s.h, t.mul_col(t.sub(h_new, s.h), mask));
    return {h, c};
}

LstmCell::EvalState LstmCell::step_eval(const Mat& x, const EvalState& s,
                                        const float* mask) const {
    if (x.cols() != in_width()) fail("lstm " + wx.name + ": input width mismatch");
    const int H = hidden;
    Mat z = x * wx.value;
    z.noalias() += s.h * wh.value;
    z.rowwise() += b.value.row(0);
    Mat ig = (1.0f / (1.0f + (-z.middleCols(0, H).array()).exp())).matrix();
    Mat fg = (1.0f / (1.0f + (-z.middleCols(H, H).array()).exp())).matrix();
    Mat gc = z.middleCols(2 * H, H).array().tanh().matrix();
    Mat og = (1.0f / (1.0f + (-z.middleCols(3 * H, H).array()).exp())).matrix();
    Mat c_new = fg.cwiseProduct(s.c) + ig.cwiseProduct(gc);
    Mat h_new = og.cwiseProduct(c_new.array().tanh().matrix());
    if (!mask) return {std::move(h_new), std::move(c_new)};
    EvalState out = s;
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        if (mask[r] != 0.0f) {
            out.c.row(r) = c_new.row(r);
            out.h.row(r) = h_new.row(r);
        }
    }
    return out;
}

Mat recurrent_encode(const LstmCell& cell, const std::vector<Mat>& seq,
                     const std::vector<int>& mask) {
    require(!seq.empty(), "recurrent_encode: empty sequence");
    require(mask.size() == seq.size(), "recurrent_encode: mask length != sequence length");
    bool any = false;
    for (int m : mask) any = any || (m != 0);
    require(any, "recurrent_encode: all steps masked");

    auto s = cell.initial_eval(int(seq.front().rows()));
    for (size_t i = 0; i < seq.size(); ++i) {
        if (!mask[i]) continue;  // padded step: state carried through
        s = cell.step_eval(seq[i], s, nullptr);
    }
    return s.h;
}

}  // namespace mtrl::nn
