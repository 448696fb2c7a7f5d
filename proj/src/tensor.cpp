#include "mtrl/nn/tensor.hpp"

namespace mtrl::nn {

namespace {
constexpr float kNormEps = 1e-12f;
}

void Tape::check(Value v) const {
    if (!v.valid() || v.tape != this || v.id >= int(nodes_.size()))
        fail("tape: value does not belong to this tape");
}

Tape::Node& Tape::at(Value v) {
    check(v);
    return nodes_[size_t(v.id)];
}

const Tape::Node& Tape::at(Value v) const {
    check(v);
    return nodes_[size_t(v.id)];
}

Value Tape::push(Node n) {
    if (check_finite_ && !n.v.allFinite())
        fail("tape: non-finite values produced by op");
    nodes_.push_back(std::move(n));
    return Value{this, int(nodes_.size()) - 1};
}

Value Tape::input(Mat v) {
    Node n;
    n.op = Op::Input;
    n.v = std::move(v);
    return push(std::move(n));
}

Value Tape::leaf(Param& p) {
    auto it = leaves_.find(&p);
    if (it != leaves_.end()) return Value{this, it->second};
    Node n;
    n.op = Op::Leaf;
    n.v = p.value;
    n.needs = true;
    n.param = &p;
    Value v = push(std::move(n));
    leaves_[&p] = v.id;
    return v;
}

Value Tape::matmul(Value a, Value b) {
    const Node &na = at(a), &nb = at(b);
    if (na.v.cols() != nb.v.rows()) fail("matmul: inner dimensions disagree");
    Node n;
    n.op = Op::MatMul;
    n.a = a.id;
    n.b = b.id;
    n.needs = na.needs || nb.needs;
    n.v.noalias() = na.v * nb.v;
    return push(std::move(n));
}

Value Tape::matmul_nt(Value a, Value b) {
    const Node &na = at(a), &nb = at(b);
    if (na.v.cols() != nb.v.cols()) fail("matmul_nt: widths disagree");
    Node n;
    n.op = Op::MatMulNT;
    n.a = a.id;
    n.b = b.id;
    n.needs = na.needs || nb.needs;
    n.v.noalias() = na.v * nb.v.transpose();
    return push(std::move(n));
}

static void same_shape(const Mat& a, const Mat& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        fail(std::string(op) + ": shapes disagree");
}

Value Tape::add(Value a, Value b) {
    const Node &na = at(a), &nb = at(b);
    same_shape(na.v, nb.v, "add");
    Node n;
    n.op = Op::Add;
    n.a = a.id;
    n.b = b.id;
    n.needs = na.needs || nb.needs;
    n.v = na.v + nb.v;
    return push(std::move(n));
}

Value Tape::sub(Value a, Value b) {
    const Node &na = at(a), &nb = at(b);
    same_shape(na.v, nb.v, "sub");
    Node n;
    n.op = Op::Sub;
    n.a = a.id;
    n.b = b.id;
    n.needs = na.needs || nb.needs;
    n.v = na.v - nb.v;
    return push(std::move(n));
}

Value Tape::mul(Value a, Value b) {
    const Node &na = at(a), &nb = at(b);
    same_shape(na.v, nb.v, "mul");
    Node n;
    n.op = Op::Mul;
    n.a = a.id;
    n.b = b.id;
    n.needs = na.needs || nb.needs;
    n.v = na.v.cwiseProduct(nb.v);
    return push(std::move(n));
}

Value Tape::add_row(Value x, Value bias) {
    const Node &nx = at(x), &nb = at(bias);
    if (nb.v.rows() != 1 || nb.v.cols() != nx.v.cols())
        fail("add_row: bias must be [1, cols(x)]");
    Node n;
    n.op = Op::AddRow;
    n.a = x.id;
    n.b = bias.id;
    n.needs = nx.needs || nb.needs;
    n.v = nx.v.rowwise() + nb.v.row(0);
    return push(std::move(n));
}

Value Tape::mul_col(Value x, Value m) {
    const Node &nx = at(x), &nm = at(m);
    if (nm.v.cols() != 1 || nm.v.rows() != nx.v.rows())
        fail("mul_col: multiplier must be [rows(x), 1]");
    Node n;
    n.op = Op::MulCol;
    n.a = x.id;
    n.b = m.id;
    n.needs = nx.needs || nm.needs;
    n.v = nx.v.array().colwise() * nm.v.col(0).array();
    return push(std::move(n));
}

Value Tape::scale(Value x, float s) {
    const Node& nx = at(x);
    Node n;
    n.op = Op::Scale;
    n.a = x.id;
    n.c = s;
    n.needs = nx.needs;
    n.v = nx.v * s;
    return push(std::move(n));
}

Value Tape::add_const(Value x, float c) {
    const Node& nx = at(x);
    Node n;
    n.op = Op::AddConst;
    n.a = x.id;
    n.c = c;
    n.needs = nx.needs;
    n.v = nx.v.array() + c;
    return push(std::move(n));
}

Value Tape::relu(Value x) {
    const Node& nx = at(x);
    Node n;
    n.op = Op::Relu;
    n.a = x.id;
    n.needs = nx.needs;
    n.v = nx.v.cwiseMax(0.0f);
    return push(std::move(n));
}

Value Tape::tanh(Value x) {
    const Node& nx = at(x);
    Node n;
    n.op = Op::Tanh;
    n.a = x.id;
    n.needs = nx.needs;
    n.v = nx.v.array().tanh();
    return push(std::move(n));
}

Value Tape::sigmoid(Value x) {
    const Node& nx = at(x);
    Node n;
    n.op = Op::Sigmoid;
    n.a = x.id;
    n.needs = nx.needs;
    n.v = (1.0f / (1.0f + (-nx.v.array()).exp())).matrix();
    return push(std::move(n));
}

Value Tape::exp(Value x) {
    const Node& nx = at(x);
    Node n;
    n.op = Op::Exp;
    n.a = x.id;
    n.needs = nx.needs;
    n.v = nx.v.array().exp().matrix();
    return push(std::move(n));
}

Value Tape::log(Value x) {
    const Node& nx = at(x);
    if ((nx.v.array() <= 0.0f).any()) fail("log: non-positive input");
    Node n;
    n.op = Op::Log;
    n.a = x.id;
    n.needs = nx.needs;
    n.v = nx.v.array().log().matrix();
    return push(std::move(n));
}

Value Tape::concat_cols(Value a, Value b) {
    const Node &na = at(a), &nb = at(b);
    if (na.v.rows() != nb.v.rows()) fail("concat_cols: row counts disagree");
    Node n;
    n.op = Op::ConcatCols;
    n.a = a.id;
    n.b = b.id;
    n.needs = na.needs || nb.needs;
    n.i0 = int(na.v.cols());
    n.v.resize(na.v.rows(), na.v.cols() + nb.v.cols());
    n.v.leftCols(na.v.cols()) = na.v;
    n.v.rightCols(nb.v.cols()) = nb.v;
    return push(std::move(n));
}

Value Tape::slice_cols(Value x, int c0, int c1) {
    const Node& nx = at(x);
    if (c0 < 0 || c1 > nx.v.cols() || c0 >= c1) fail("slice_cols: bad range");
    Node n;
    n.op = Op::SliceCols;
    n.a = x.id;
    n.i0 = c0;
    n.i1 = c1;
    n.needs = nx.needs;
    n.v = nx.v.middleCols(c0, c1 - c0);
    return push(std::move(n));
}

Value Tape::gather_rows(Value x, std::vector<int> idx) {
    const Node& nx = at(x);
    Node n;
    n.op = Op::GatherRows;
    n.a = x.id;
    n.needs = nx.needs;
    n.v.resize(Eigen::Index(idx.size()), nx.v.cols());
    for (size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] < 0 || idx[i] >= nx.v.rows()) fail("gather_rows: index out of range");
        n.v.row(Eigen::Index(i)) = nx.v.row(idx[i]);
    }
    n.idx = std::move(idx);
    return push(std::move(n));
}

Value Tape::l2norm_rows(Value x) {
    const Node& nx = at(x);
    Node n;
    n.op = Op::L2NormRows;
    n.a = x.id;
    n.needs = nx.needs;
    Eigen::ArrayXf norms = nx.v.rowwise().norm().array().max(kNormEps);
    n.v = (nx.v.array().colwise() / norms).matrix();
    return push(std::move(n));
}

Value Tape::sum_rows(Value x) {
    const Node& nx = at(x);
    Node n;
    n.op = Op::SumRows;
    n.a = x.id;
    n.needs = nx.needs;
    n.v = nx.v.rowwise().sum();
    return push(std::move(n));
}

Value Tape::sum_all(Value x) {
    const Node& nx = at(x);
    Node n;
    n.op = Op::SumAll;
    n.a = x.id;
    n.needs = nx.needs;
    n.v = Mat::Constant(1, 1, nx.v.sum());
    return push(std::move(n));
}

Value Tape::mean_all(Value x) {
    const Node& nx = at(x);
    Node n;
    n.op = Op::MeanAll;
    n.a = x.id;
    n.needs = nx.needs;
    n.v = Mat::Constant(1, 1, nx.v.mean());
    return push(std::move(n));
}

const Mat& Tape::val(Value v) const { return at(v).v; }

const Mat& Tape::grad_of(Value v) const {
    const Node& n = at(v);
    if (n.g.size() == 0) {
        zero_ = Mat::Zero(n.v.rows(), n.v.cols());
        return zero_;
    }
    return n.g;
}

float Tape::scalar(Value v) const {
    const Node& n = at(v);
    if (n.v.rows() != 1 || n.v.cols() != 1) fail("scalar: value is not 1x1");
    return n.v(0, 0);
}

Mat& Tape::ensure_grad(int id) {
    Node& n = nodes_[size_t(id)];
    if (n.g.size() == 0) n.g = Mat::Zero(n.v.rows(), n.v.cols());
    return n.g;
}

void Tape::backward(Value loss) {
    Node& ln = at(loss);
    if (ln.v.rows() != 1 || ln.v.cols() != 1) fail("backward: loss must be scalar");
    ensure_grad(loss.id)(0, 0) += 1.0f;

    for (int i = loss.id; i >= 0; --i) {
        Node& n = nodes_[size_t(i)];
        if (!n.needs || n.g.size() == 0) continue;
        const Mat& g = n.g;
        switch (n.op) {
            case Op::Input:
                break;
            case Op::Leaf:
                n.param->grad += g;
                break;
            case Op::MatMul: {
                Node& a = nodes_[size_t(n.a)];
                Node& b = nodes_[size_t(n.b)];
                if (a.needs) ensure_grad(n.a).noalias() += g * b.v.transpose();
                if (b.needs) ensure_grad(n.b).noalias() += a.v.transpose() * g;
                break;
            }
            case Op::MatMulNT: {
                Node& a = nodes_[size_t(n.a)];
                Node& b = nodes_[size_t(n.b)];
                if (a.needs) ensure_grad(n.a).noalias() += g * b.v;
                if (b.needs) ensure_grad(n.b).noalias() += g.transpose() * a.v;
                break;
            }
            case Op::Add: {
                if (nodes_[size_t(n.a)].needs) ensure_grad(n.a) += g;
                if (nodes_[size_t(n.b)].needs) ensure_grad(n.b) += g;
                break;
            }
            case Op::Sub: {
                if (nodes_[size_t(n.a)].needs) ensure_grad(n.a) += g;
                if (nodes_[size_t(n.b)].needs) ensure_grad(n.b) -= g;
                break;
            }
            case Op::Mul: {
                Node& a = nodes_[size_t(n.a)];
                Node& b = nodes_[size_t(n.b)];
                if (a.needs) ensure_grad(n.a) += g.cwiseProduct(b.v);
                if (b.needs) ensure_grad(n.b) += g.cwiseProduct(a.v);
                break;
            }
            case Op::AddRow: {
                if (nodes_[size_t(n.a)].needs) ensure_grad(n.a) += g;
                if (nodes_[size_t(n.b)].needs) ensure_grad(n.b) += g.colwise().sum();
                break;
            }
            case Op::MulCol: {
                Node& a = nodes_[size_t(n.a)];
                Node& b = nodes_[size_t(n.b)];
                if (a.needs)
                    ensure_grad(n.a) += (g.array().colwise() * b.v.col(0).array()).matrix();
                if (b.needs) ensure_grad(n.b) += g.cwiseProduct(a.v).rowwise().sum();
                break;
            }
            case Op::Scale:
                if (nodes_[size_t(n.a)].needs) ensure_grad(n.a) += g * n.c;
                break;
            case Op::AddConst:
                if (nodes_[size_t(n.a)].needs) ensure_grad(n.a) += g;
                break;
            case Op::Relu: {
                Node& a = nodes_[size_t(n.a)];
                if (a.needs)
                    ensure_grad(n.a).array() +=
                        g.array() * (a.v.array() > 0.0f).cast<float>();
                break;
            }
            case Op::Tanh:
                if (nodes_[size_t(n.a)].needs)
                    ensure_grad(n.a).array() += g.array() * (1.0f - n.v.array().square());
                break;
            case Op::Sigmoid:
                if (nodes_[size_t(n.a)].needs)
                    ensure_grad(n.a).array() +=
                        g.array() * n.v.array() * (1.0f - n.v.array());
                break;
            case Op::Exp:
                if (nodes_[size_t(n.a)].needs)
                    ensure_grad(n.a).array() += g.array() * n.v.array();
                break;
            case Op::Log: {
                Node& a = nodes_[size_t(n.a)];
                if (a.needs) ensure_grad(n.a).array() += g.array() / a.v.array();
                break;
            }
            case Op::ConcatCols: {
                Node& a = nodes_[size_t(n.a)];
                Node& b = nodes_[size_t(n.b)];
                if (a.needs) ensure_grad(n.a) += g.leftCols(n.i0);
                if (b.needs) ensure_grad(n.b) += g.rightCols(g.cols() - n.i0);
                break;
            }
            case Op::SliceCols:
                if (nodes_[size_t(n.a)].needs)
                    ensure_grad(n.a).middleCols(n.i0, n.i1 - n.i0) += g;
                break;
            case Op::GatherRows: {
                if (nodes_[size_t(n.a)].needs) {
                    Mat& ga = ensure_grad(n.a);
                    for (size_t r = 0; r < n.idx.size(); ++r)
                        ga.row(n.idx[r]) += g.row(Eigen::Index(r));
                }
                break;
            }
            case Op::L2NormRows: {
                Node& a = nodes_[size_t(n.a)];
                if (a.needs) {
                    Mat& ga = ensure_grad(n.a);
                    Eigen::ArrayXf norms = a.v.rowwise().norm().array().max(kNormEps);
                    Eigen::ArrayXf dots = (g.cwiseProduct(n.v)).rowwise().sum().array();
                    ga.array() += (g.array() - n.v.array().colwise() * dots).colwise() / norms;
                }
                break;
            }
            case Op::SumRows: {
                if (nodes_[size_t(n.a)].needs) {
                    Mat& ga = ensure_grad(n.a);
                    ga.array().colwise() += g.col(0).array();
                }
                break;
            }
            case Op::SumAll:
                if (nodes_[size_t(n.a)].needs) ensure_grad(n.a).array() += g(0, 0);
                break;
            case Op::MeanAll: {
                Node& a = nodes_[size_t(n.a)];
                if (a.needs)
                    ensure_grad(n.a).array() += g(0, 0) / float(a.v.size());
                break;
            }
        }
    }
}

}  // namespace mtrl::nn
