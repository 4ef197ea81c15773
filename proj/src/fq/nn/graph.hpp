// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "fq/core/tensor.hpp"

namespace fq::nn {

struct Node;
using NodePtr = std::shared_ptr<Node>;

// One vertex of the reverse-mode tape. Ops allocate a Node per output and
// record a closure that pushes the output gradient into the parents.
struct Node {
    Tensor value;
    Tensor grad;  // allocated on demand, zero-initialized
    bool requires_grad = false;
    bool is_param = false;
    std::string name;
    std::vector<NodePtr> parents;
    std::function<void(Node&)> backward_fn;

    Tensor& ensure_grad() {
        if (grad.numel() != value.numel()) grad = Tensor(value.shape());
        return grad;
    }
    void zero_grad() {
        if (grad.numel()) grad.fill(0.0f);
    }
};

// Value-semantics handle over a tape node.
class Var {
public:
    Var() = default;
    explicit Var(NodePtr n) : node_(std::move(n)) {}

    static Var leaf(Tensor value, bool requires_grad = false);
    static Var param(std::string name, Tensor value);
    static Var constant(Tensor value) { return leaf(std::move(value), false); }

    bool defined() const { return node_ != nullptr; }
    const Tensor& val() const { return node_->value; }
    Tensor& val() { return node_->value; }
    Tensor& grad() { return node_->ensure_grad(); }
    bool requires_grad() const { return node_ && node_->requires_grad; }
    const NodePtr& node() const { return node_; }

    const std::vector<int>& shape() const { return node_->value.shape(); }
    int dim(int i) const { return node_->value.dim(i); }
    int64_t numel() const { return node_->value.numel(); }
    float scalar_value() const;

private:
    NodePtr node_;
};

// Reverse pass from a scalar loss. Gradients accumulate into leaves; call the
// optimizer's zero_grad between steps.
void backward(const Var& loss);

}  // namespace fq::nn
