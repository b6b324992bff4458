#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "gmvae/errors.hpp"
#include "gmvae/rng.hpp"

namespace gmvae::ad {

/// Dense 2-D tensor of 64-bit reals, row-major. The leading dimension is the
/// batch dimension wherever one exists.
class Tensor {
public:
    Tensor() = default;
    Tensor(int rows, int cols, double fill = 0.0);
    static Tensor scalar(double v);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    int size() const { return rows_ * cols_; }

    double& operator()(int i, int j) { return data_[static_cast<std::size_t>(i) * cols_ + j]; }
    double operator()(int i, int j) const {
        return data_[static_cast<std::size_t>(i) * cols_ + j];
    }
    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    bool same_shape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
    void fill(double v);

private:
    int rows_ = 0, cols_ = 0;
    std::vector<double> data_;
};

struct Node;
using NodePtr = std::shared_ptr<Node>;

/// One vertex of the computation graph: cached forward value, gradient
/// accumulator, input edges and the pull-back rule. Graphs are acyclic and
/// confined to a single thread.
struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    std::vector<NodePtr> inputs;
    std::function<void(Node&)> backprop;
    const char* op = "leaf";

    double scalar() const { return value(0, 0); }
};

NodePtr constant(Tensor v);
NodePtr parameter(Tensor v);

NodePtr matmul(const NodePtr& a, const NodePtr& b);
NodePtr add(const NodePtr& a, const NodePtr& b);
NodePtr sub(const NodePtr& a, const NodePtr& b);
NodePtr mul(const NodePtr& a, const NodePtr& b);
NodePtr div(const NodePtr& a, const NodePtr& b);
/// [m x n] plus a [1 x n] row vector broadcast over rows (bias add).
NodePtr add_rowvec(const NodePtr& a, const NodePtr& b);
NodePtr affine(const NodePtr& x, const NodePtr& w, const NodePtr& b);

NodePtr scale(const NodePtr& a, double s);
NodePtr add_scalar(const NodePtr& a, double s);
NodePtr neg(const NodePtr& a);

NodePtr tanh_op(const NodePtr& a);
NodePtr sigmoid(const NodePtr& a);
NodePtr softplus(const NodePtr& a);
NodePtr exp_op(const NodePtr& a);
NodePtr log_op(const NodePtr& a);
NodePtr sqrt_op(const NodePtr& a);
NodePtr square(const NodePtr& a);
NodePtr lgamma_op(const NodePtr& a);
NodePtr digamma_op(const NodePtr& a);
/// cosh(sqrt(s)), sinh(sqrt(s))/sqrt(s), acosh(b)/sqrt(b^2-1): the stable
/// scalar kernels of the manifold heads, differentiable through s = 0 / b = 1.
NodePtr cosh_sqrt_op(const NodePtr& a);
NodePtr sinhc_sqrt_op(const NodePtr& a);
NodePtr acosh_ratio_op(const NodePtr& a);
NodePtr clamp(const NodePtr& a, double lo, double hi);

NodePtr slice_cols(const NodePtr& a, int j0, int j1);
NodePtr concat_cols(const std::vector<NodePtr>& parts);
NodePtr sum_all(const NodePtr& a);

/// Elementwise Bernoulli log-likelihood of targets under logits:
/// t*z - softplus(z), the log-sum-exp-stable form.
NodePtr bernoulli_ll(const NodePtr& logits, const Tensor& targets);

/// Elementwise X ~ Gamma(a, 1). The pathwise derivative dX/da follows the
/// implicit reparameterization rule dX/da = -(dF/da)/(dF/dX), with dF/da by
/// central differences of the regularized lower incomplete gamma
/// (step 1e-4 * max(1, a)).
NodePtr gamma_sample(const NodePtr& a, Rng& rng);
/// Frozen-noise variant: X = Q(ustar; a) via the gamma quantile, same
/// backward rule. Used by finite-difference checks of the full graph.
NodePtr gamma_frozen(const NodePtr& a, const Tensor& ustar);

/// Reverse-mode sweep from a scalar root. Gradients of every reachable
/// requires_grad node are zeroed, then accumulated in reverse topological
/// order, visiting each node exactly once.
void backward(const NodePtr& root);

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Adam with bias correction over a fixed parameter list.
class Adam {
public:
    explicit Adam(std::vector<NodePtr> params, AdamConfig cfg = {});

    void step();
    int steps() const { return t_; }

    // Checkpointing access: first/second moments in parameter order.
    std::vector<Tensor>& moments1() { return m_; }
    std::vector<Tensor>& moments2() { return v_; }
    void set_steps(int t) { t_ = t; }
    const std::vector<NodePtr>& params() const { return params_; }

private:
    std::vector<NodePtr> params_;
    std::vector<Tensor> m_, v_;
    AdamConfig cfg_;
    int t_ = 0;
};

}  // namespace gmvae::ad
