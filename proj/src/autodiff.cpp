#include "gmvae/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>
#include <utility>

#include "gmvae/special_functions.hpp"

namespace gmvae::ad {

Tensor::Tensor(int rows, int cols, double fill)
    : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {
    if (rows < 0 || cols < 0) throw domain_error("Tensor: negative dimensions");
}

Tensor Tensor::scalar(double v) {
    Tensor t(1, 1);
    t(0, 0) = v;
    return t;
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

namespace {

void gemm_nn_acc(Tensor& c, const Tensor& a, const Tensor& b) {
    const int m = a.rows(), k = a.cols(), n = b.cols();
    for (int i = 0; i < m; ++i) {
        double* crow = c.data() + static_cast<std::size_t>(i) * n;
        for (int p = 0; p < k; ++p) {
            const double av = a(i, p);
            const double* brow = b.data() + static_cast<std::size_t>(p) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// c += a * b^T
void gemm_nt_acc(Tensor& c, const Tensor& a, const Tensor& b) {
    const int m = a.rows(), k = a.cols(), n = b.rows();
    for (int i = 0; i < m; ++i) {
        const double* arow = a.data() + static_cast<std::size_t>(i) * k;
        for (int j = 0; j < n; ++j) {
            const double* brow = b.data() + static_cast<std::size_t>(j) * k;
            double s = 0.0;
            for (int p = 0; p < k; ++p) s += arow[p] * brow[p];
            c(i, j) += s;
        }
    }
}

// c += a^T * b
void gemm_tn_acc(Tensor& c, const Tensor& a, const Tensor& b) {
    const int k = a.rows(), m = a.cols(), n = b.cols();
    for (int p = 0; p < k; ++p) {
        const double* arow = a.data() + static_cast<std::size_t>(p) * m;
        const double* brow = b.data() + static_cast<std::size_t>(p) * n;
        for (int i = 0; i < m; ++i) {
            const double av = arow[i];
            double* crow = c.data() + static_cast<std::size_t>(i) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

NodePtr make_node(Tensor value, std::vector<NodePtr> inputs, const char* op,
                  std::function<void(Node&)> backprop) {
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    node->inputs = std::move(inputs);
    node->op = op;
    for (const auto& in : node->inputs) {
        if (in->requires_grad) {
            node->requires_grad = true;
            break;
        }
    }
    if (node->requires_grad) node->backprop = std::move(backprop);
    return node;
}

void ensure_grad(Node& n) {
    if (!n.grad.same_shape(n.value)) {
        n.grad = Tensor(n.value.rows(), n.value.cols());
    } else {
        n.grad.fill(0.0);
    }
}

template <class F, class DF>
NodePtr unary(const NodePtr& a, const char* op, F f, DF df) {
    Tensor out(a->value.rows(), a->value.cols());
    const double* x = a->value.data();
    double* y = out.data();
    const int n = out.size();
    for (int i = 0; i < n; ++i) y[i] = f(x[i]);
    return make_node(std::move(out), {a}, op, [df](Node& self) {
        Node& in = *self.inputs[0];
        if (!in.requires_grad) return;
        const int n = self.value.size();
        for (int i = 0; i < n; ++i) {
            in.grad.data()[i] +=
                self.grad.data()[i] * df(in.value.data()[i], self.value.data()[i]);
        }
    });
}

void check_same_shape(const NodePtr& a, const NodePtr& b, const char* op) {
    if (!a->value.same_shape(b->value)) {
        throw domain_error(std::string(op) + ": shape mismatch");
    }
}

double stable_softplus(double x) {
    if (x > 0.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

double stable_sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

NodePtr constant(Tensor v) { return make_node(std::move(v), {}, "const", nullptr); }

NodePtr parameter(Tensor v) {
    auto node = make_node(std::move(v), {}, "param", nullptr);
    node->requires_grad = true;
    node->grad = Tensor(node->value.rows(), node->value.cols());
    return node;
}

NodePtr matmul(const NodePtr& a, const NodePtr& b) {
    if (a->value.cols() != b->value.rows()) throw domain_error("matmul: shape mismatch");
    Tensor out(a->value.rows(), b->value.cols());
    gemm_nn_acc(out, a->value, b->value);
    return make_node(std::move(out), {a, b}, "matmul", [](Node& self) {
        Node& a = *self.inputs[0];
        Node& b = *self.inputs[1];
        if (a.requires_grad) gemm_nt_acc(a.grad, self.grad, b.value);
        if (b.requires_grad) gemm_tn_acc(b.grad, a.value, self.grad);
    });
}

NodePtr add(const NodePtr& a, const NodePtr& b) {
    check_same_shape(a, b, "add");
    Tensor out(a->value.rows(), a->value.cols());
    const int n = out.size();
    for (int i = 0; i < n; ++i) out.data()[i] = a->value.data()[i] + b->value.data()[i];
    return make_node(std::move(out), {a, b}, "add", [](Node& self) {
        const int n = self.value.size();
        for (int k = 0; k < 2; ++k) {
            Node& in = *self.inputs[k];
            if (!in.requires_grad) continue;
            for (int i = 0; i < n; ++i) in.grad.data()[i] += self.grad.data()[i];
        }
    });
}

NodePtr sub(const NodePtr& a, const NodePtr& b) {
    check_same_shape(a, b, "sub");
    Tensor out(a->value.rows(), a->value.cols());
    const int n = out.size();
    for (int i = 0; i < n; ++i) out.data()[i] = a->value.data()[i] - b->value.data()[i];
    return make_node(std::move(out), {a, b}, "sub", [](Node& self) {
        const int n = self.value.size();
        Node& a = *self.inputs[0];
        Node& b = *self.inputs[1];
        if (a.requires_grad) {
            for (int i = 0; i < n; ++i) a.grad.data()[i] += self.grad.data()[i];
        }
        if (b.requires_grad) {
            for (int i = 0; i < n; ++i) b.grad.data()[i] -= self.grad.data()[i];
        }
    });
}

NodePtr mul(const NodePtr& a, const NodePtr& b) {
    check_same_shape(a, b, "mul");
    Tensor out(a->value.rows(), a->value.cols());
    const int n = out.size();
    for (int i = 0; i < n; ++i) out.data()[i] = a->value.data()[i] * b->value.data()[i];
    return make_node(std::move(out), {a, b}, "mul", [](Node& self) {
        const int n = self.value.size();
        Node& a = *self.inputs[0];
        Node& b = *self.inputs[1];
        if (a.requires_grad) {
            for (int i = 0; i < n; ++i) {
                a.grad.data()[i] += self.grad.data()[i] * b.value.data()[i];
            }
        }
        if (b.requires_grad) {
            for (int i = 0; i < n; ++i) {
                b.grad.data()[i] += self.grad.data()[i] * a.value.data()[i];
            }
        }
    });
}

NodePtr div(const NodePtr& a, const NodePtr& b) {
    check_same_shape(a, b, "div");
    Tensor out(a->value.rows(), a->value.cols());
    const int n = out.size();
    for (int i = 0; i < n; ++i) out.data()[i] = a->value.data()[i] / b->value.data()[i];
    return make_node(std::move(out), {a, b}, "div", [](Node& self) {
        const int n = self.value.size();
        Node& a = *self.inputs[0];
        Node& b = *self.inputs[1];
        for (int i = 0; i < n; ++i) {
            const double inv = 1.0 / b.value.data()[i];
            const double g = self.grad.data()[i];
            if (a.requires_grad) a.grad.data()[i] += g * inv;
            if (b.requires_grad) b.grad.data()[i] -= g * self.value.data()[i] * inv;
        }
    });
}

NodePtr add_rowvec(const NodePtr& a, const NodePtr& b) {
    if (b->value.rows() != 1 || b->value.cols() != a->value.cols()) {
        throw domain_error("add_rowvec: bias must be [1 x cols]");
    }
    Tensor out(a->value.rows(), a->value.cols());
    for (int i = 0; i < out.rows(); ++i) {
        for (int j = 0; j < out.cols(); ++j) out(i, j) = a->value(i, j) + b->value(0, j);
    }
    return make_node(std::move(out), {a, b}, "add_rowvec", [](Node& self) {
        Node& a = *self.inputs[0];
        Node& b = *self.inputs[1];
        const int rows = self.value.rows(), cols = self.value.cols();
        if (a.requires_grad) {
            const int n = self.value.size();
            for (int i = 0; i < n; ++i) a.grad.data()[i] += self.grad.data()[i];
        }
        if (b.requires_grad) {
            for (int i = 0; i < rows; ++i) {
                for (int j = 0; j < cols; ++j) b.grad(0, j) += self.grad(i, j);
            }
        }
    });
}

NodePtr affine(const NodePtr& x, const NodePtr& w, const NodePtr& b) {
    return add_rowvec(matmul(x, w), b);
}

NodePtr scale(const NodePtr& a, double s) {
    return unary(
        a, "scale", [s](double x) { return s * x; },
        [s](double, double) { return s; });
}

NodePtr add_scalar(const NodePtr& a, double s) {
    return unary(
        a, "add_scalar", [s](double x) { return x + s; },
        [](double, double) { return 1.0; });
}

NodePtr neg(const NodePtr& a) { return scale(a, -1.0); }

NodePtr tanh_op(const NodePtr& a) {
    return unary(
        a, "tanh", [](double x) { return std::tanh(x); },
        [](double, double y) { return 1.0 - y * y; });
}

NodePtr sigmoid(const NodePtr& a) {
    return unary(
        a, "sigmoid", [](double x) { return stable_sigmoid(x); },
        [](double, double y) { return y * (1.0 - y); });
}

NodePtr softplus(const NodePtr& a) {
    return unary(
        a, "softplus", [](double x) { return stable_softplus(x); },
        [](double x, double) { return stable_sigmoid(x); });
}

NodePtr exp_op(const NodePtr& a) {
    return unary(
        a, "exp", [](double x) { return std::exp(x); },
        [](double, double y) { return y; });
}

NodePtr log_op(const NodePtr& a) {
    return unary(
        a, "log",
        [](double x) {
            if (!(x > 0.0)) throw domain_error("log: argument must be > 0");
            return std::log(x);
        },
        [](double x, double) { return 1.0 / x; });
}

NodePtr sqrt_op(const NodePtr& a) {
    return unary(
        a, "sqrt",
        [](double x) {
            if (x < 0.0) throw domain_error("sqrt: argument must be >= 0");
            return std::sqrt(x);
        },
        [](double, double y) { return 0.5 / y; });
}

NodePtr square(const NodePtr& a) {
    return unary(
        a, "square", [](double x) { return x * x; },
        [](double x, double) { return 2.0 * x; });
}

NodePtr lgamma_op(const NodePtr& a) {
    return unary(
        a, "lgamma",
        [](double x) {
            if (!(x > 0.0)) throw domain_error("lgamma: argument must be > 0");
            return std::lgamma(x);
        },
        [](double x, double) { return sf::digamma(x); });
}

NodePtr digamma_op(const NodePtr& a) {
    return unary(
        a, "digamma", [](double x) { return sf::digamma(x); },
        [](double x, double) { return sf::trigamma(x); });
}

NodePtr cosh_sqrt_op(const NodePtr& a) {
    return unary(
        a, "cosh_sqrt", [](double x) { return sf::cosh_sqrt(x); },
        [](double x, double) { return sf::cosh_sqrt_deriv(x); });
}

NodePtr sinhc_sqrt_op(const NodePtr& a) {
    return unary(
        a, "sinhc_sqrt", [](double x) { return sf::sinhc_sqrt(x); },
        [](double x, double) { return sf::sinhc_sqrt_deriv(x); });
}

NodePtr acosh_ratio_op(const NodePtr& a) {
    return unary(
        a, "acosh_ratio", [](double x) { return sf::acosh_ratio(x); },
        [](double x, double) { return sf::acosh_ratio_deriv(x); });
}

NodePtr clamp(const NodePtr& a, double lo, double hi) {
    if (!(lo < hi)) throw domain_error("clamp: lo must be < hi");
    return unary(
        a, "clamp",
        [lo, hi](double x) { return std::min(std::max(x, lo), hi); },
        [lo, hi](double x, double) { return (x > lo && x < hi) ? 1.0 : 0.0; });
}

NodePtr slice_cols(const NodePtr& a, int j0, int j1) {
    if (j0 < 0 || j1 > a->value.cols() || j0 >= j1) {
        throw domain_error("slice_cols: bad column range");
    }
    Tensor out(a->value.rows(), j1 - j0);
    for (int i = 0; i < out.rows(); ++i) {
        for (int j = 0; j < out.cols(); ++j) out(i, j) = a->value(i, j0 + j);
    }
    return make_node(std::move(out), {a}, "slice_cols", [j0](Node& self) {
        Node& in = *self.inputs[0];
        if (!in.requires_grad) return;
        for (int i = 0; i < self.value.rows(); ++i) {
            for (int j = 0; j < self.value.cols(); ++j) {
                in.grad(i, j0 + j) += self.grad(i, j);
            }
        }
    });
}

NodePtr concat_cols(const std::vector<NodePtr>& parts) {
    if (parts.empty()) throw domain_error("concat_cols: empty input");
    const int rows = parts[0]->value.rows();
    int cols = 0;
    for (const auto& p : parts) {
        if (p->value.rows() != rows) throw domain_error("concat_cols: row mismatch");
        cols += p->value.cols();
    }
    Tensor out(rows, cols);
    int off = 0;
    for (const auto& p : parts) {
        for (int i = 0; i < rows; ++i) {
            for (int j = 0; j < p->value.cols(); ++j) out(i, off + j) = p->value(i, j);
        }
        off += p->value.cols();
    }
    return make_node(std::move(out), parts, "concat_cols", [](Node& self) {
        int off = 0;
        for (auto& inp : self.inputs) {
            Node& in = *inp;
            if (in.requires_grad) {
                for (int i = 0; i < in.value.rows(); ++i) {
                    for (int j = 0; j < in.value.cols(); ++j) {
                        in.grad(i, j) += self.grad(i, off + j);
                    }
                }
            }
            off += in.value.cols();
        }
    });
}

NodePtr sum_all(const NodePtr& a) {
    double s = 0.0;
    const int n = a->value.size();
    for (int i = 0; i < n; ++i) s += a->value.data()[i];
    return make_node(Tensor::scalar(s), {a}, "sum_all", [](Node& self) {
        Node& in = *self.inputs[0];
        if (!in.requires_grad) return;
        const double g = self.grad(0, 0);
        const int n = in.value.size();
        for (int i = 0; i < n; ++i) in.grad.data()[i] += g;
    });
}

NodePtr bernoulli_ll(const NodePtr& logits, const Tensor& targets) {
    if (!logits->value.same_shape(targets)) {
        throw domain_error("bernoulli_ll: shape mismatch");
    }
    Tensor out(logits->value.rows(), logits->value.cols());
    const int n = out.size();
    for (int i = 0; i < n; ++i) {
        const double z = logits->value.data()[i];
        out.data()[i] = targets.data()[i] * z - stable_softplus(z);
    }
    Tensor t = targets;
    return make_node(std::move(out), {logits}, "bernoulli_ll", [t = std::move(t)](Node& self) {
        Node& in = *self.inputs[0];
        if (!in.requires_grad) return;
        const int n = self.value.size();
        for (int i = 0; i < n; ++i) {
            const double z = in.value.data()[i];
            in.grad.data()[i] += self.grad.data()[i] * (t.data()[i] - stable_sigmoid(z));
        }
    });
}

namespace {

// dX/da at a sampled/quantile point, by the implicit rule.
double implicit_gamma_deriv(double a, double x) {
    if (a > 1e7) {
        // Gamma(a,1) ~ a + sqrt(a) Z: dX/da = 1 + Z/(2 sqrt(a)).
        return 1.0 + (x - a) / (2.0 * a);
    }
    const double h = 1e-4 * std::max(1.0, a);
    const double dFda = (sf::reg_lower_gamma(a + h, x) - sf::reg_lower_gamma(a - h, x)) /
                        (2.0 * h);
    const double log_pdf = (a - 1.0) * std::log(x) - x - std::lgamma(a);
    return -dFda * std::exp(-log_pdf);
}

NodePtr gamma_node(const NodePtr& a, Tensor values, Tensor coeffs, const char* op) {
    return make_node(std::move(values), {a}, op,
                     [coeffs = std::move(coeffs)](Node& self) {
                         Node& in = *self.inputs[0];
                         if (!in.requires_grad) return;
                         const int n = self.value.size();
                         for (int i = 0; i < n; ++i) {
                             in.grad.data()[i] += self.grad.data()[i] * coeffs.data()[i];
                         }
                     });
}

}  // namespace

NodePtr gamma_sample(const NodePtr& a, Rng& rng) {
    Tensor values(a->value.rows(), a->value.cols());
    Tensor coeffs(a->value.rows(), a->value.cols());
    const int n = values.size();
    for (int i = 0; i < n; ++i) {
        const double shape = a->value.data()[i];
        const double x = rng.gamma(shape);
        values.data()[i] = x;
        coeffs.data()[i] = a->requires_grad ? implicit_gamma_deriv(shape, x) : 0.0;
    }
    return gamma_node(a, std::move(values), std::move(coeffs), "gamma_sample");
}

NodePtr gamma_frozen(const NodePtr& a, const Tensor& ustar) {
    if (!a->value.same_shape(ustar)) throw domain_error("gamma_frozen: shape mismatch");
    Tensor values(a->value.rows(), a->value.cols());
    Tensor coeffs(a->value.rows(), a->value.cols());
    const int n = values.size();
    for (int i = 0; i < n; ++i) {
        const double shape = a->value.data()[i];
        const double x = sf::gamma_quantile(shape, ustar.data()[i]);
        values.data()[i] = x;
        coeffs.data()[i] = a->requires_grad ? implicit_gamma_deriv(shape, x) : 0.0;
    }
    return gamma_node(a, std::move(values), std::move(coeffs), "gamma_frozen");
}

void backward(const NodePtr& root) {
    if (!root) throw domain_error("backward: null root");
    if (root->value.rows() != 1 || root->value.cols() != 1) {
        throw domain_error("backward: root must be a scalar");
    }
    if (!root->requires_grad) return;

    // Iterative post-order DFS; children are visited in input order, so the
    // topological order (and therefore all float accumulation orders) is
    // reproducible run to run.
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.emplace_back(root.get(), 0);
    seen.insert(root.get());
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->inputs.size()) {
            Node* next = node->inputs[idx].get();
            ++idx;
            if (next->requires_grad && seen.insert(next).second) {
                stack.emplace_back(next, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    for (Node* node : order) ensure_grad(*node);
    root->grad(0, 0) = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if ((*it)->backprop) (*it)->backprop(**it);
    }
}

Adam::Adam(std::vector<NodePtr> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const auto& p : params_) {
        if (!p || !p->requires_grad) throw domain_error("Adam: parameters must require grad");
        m_.emplace_back(p->value.rows(), p->value.cols());
        v_.emplace_back(p->value.rows(), p->value.cols());
    }
}

void Adam::step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
    const double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
    for (std::size_t k = 0; k < params_.size(); ++k) {
        Node& p = *params_[k];
        if (!p.grad.same_shape(p.value)) {
            throw domain_error("Adam::step: gradient shape mismatch");
        }
        const int n = p.value.size();
        for (int i = 0; i < n; ++i) {
            const double g = p.grad.data()[i];
            double& m = m_[k].data()[i];
            double& v = v_[k].data()[i];
            m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * g;
            v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * g * g;
            const double mhat = m / bc1;
            const double vhat = v / bc2;
            p.value.data()[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

}  // namespace gmvae::ad
