#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "mtrl/common.hpp"

namespace mtrl::nn {

// Row-major so a row is one sample; rows = batch, cols = feature width.
using Mat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Param {
    std::string name;
    Mat value;
    Mat grad;

    Param() = default;
    Param(std::string n, Mat v) : name(std::move(n)), value(std::move(v)) {
        grad = Mat::Zero(value.rows(), value.cols());
    }
    void zero_grad() { grad.setZero(); }
};

class Tape;

struct Value {
    Tape* tape = nullptr;
    int id = -1;
    bool valid() const { return tape && id >= 0; }
};

// Records primitive ops in execution order; backward replays them in exact
// reverse order, accumulating gradients additively at fan-out points.
class Tape {
public:
    Tape() { nodes_.reserve(1024); }

    // constant input, never receives gradient
    Value input(Mat v);
    // tracked parameter leaf; repeated registration returns the same node
    Value leaf(Param& p);
    // detached copy of an existing node's value
    Value detach(Value v) { return input(val(v)); }

    Value matmul(Value a, Value b);     // [m,k] x [k,n]
    Value matmul_nt(Value a, Value b);  // a * b^T : [m,k] x [n,k]
    Value add(Value a, Value b);
    Value sub(Value a, Value b);
    Value mul(Value a, Value b);  // elementwise
    Value add_row(Value x, Value bias);  // bias [1,n] broadcast down rows
    Value mul_col(Value x, Value m);     // m [rows,1] broadcast across cols
    Value scale(Value x, float s);
    Value add_const(Value x, float c);
    Value relu(Value x);
    Value tanh(Value x);
    Value sigmoid(Value x);
    Value exp(Value x);
    Value log(Value x);
    Value concat_cols(Value a, Value b);
    Value slice_cols(Value x, int c0, int c1);  // [c0, c1)
    Value gather_rows(Value x, std::vector<int> idx);
    Value l2norm_rows(Value x);  // rows scaled to unit length
    Value sum_rows(Value x);     // [m,n] -> [m,1]
    Value sum_all(Value x);      // -> [1,1]
    Value mean_all(Value x);     // -> [1,1]

    // Backpropagates from a scalar loss; parameter gradients accumulate into
    // Param::grad. Parameters not reachable from the loss are left untouched.
    void backward(Value loss);

    const Mat& val(Value v) const;
    const Mat& grad_of(Value v) const;  // zero matrix if never reached
    int rows(Value v) const { return int(val(v).rows()); }
    int cols(Value v) const { return int(val(v).cols()); }
    float scalar(Value v) const;

    size_t size() const { return nodes_.size(); }
    void set_check_finite(bool on) { check_finite_ = on; }

private:
    enum class Op : uint8_t {
        Input, Leaf, MatMul, MatMulNT, Add, Sub, Mul, AddRow, MulCol, Scale,
        AddConst, Relu, Tanh, Sigmoid, Exp, Log, ConcatCols, SliceCols,
        GatherRows, L2NormRows, SumRows, SumAll, MeanAll
    };

    struct Node {
        Op op;
        int a = -1, b = -1;
        Mat v;
        Mat g;            // allocated lazily during backward
        bool needs = false;
        Param* param = nullptr;
        float c = 0.0f;   // scalar operand
        int i0 = 0, i1 = 0;
        std::vector<int> idx;
    };

    Value push(Node n);
    Node& at(Value v);
    const Node& at(Value v) const;
    void check(Value v) const;
    Mat& ensure_grad(int id);

    std::vector<Node> nodes_;
    std::unordered_map<const Param*, int> leaves_;
    bool check_finite_ = true;
    mutable Mat zero_;
};

}  // namespace mtrl::nn
