// SPDX-License-Identifier: Apache-2.0
#include "fq/nn/graph.hpp"

#include <unordered_set>

namespace fq::nn {

Var Var::leaf(Tensor value, bool requires_grad) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->requires_grad = requires_grad;
    return Var(std::move(n));
}

Var Var::param(std::string name, Tensor value) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->requires_grad = true;
    n->is_param = true;
    n->name = std::move(name);
    return Var(std::move(n));
}

float Var::scalar_value() const {
    check_shape(node_ && node_->value.numel() == 1, "scalar_value on non-scalar");
    return node_->value.at(0);
}

namespace {

// Iterative post-order DFS; recursion would overflow on long chains.
void topo_sort(const NodePtr& root, std::vector<Node*>& order) {
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, size_t>> stack;
    stack.emplace_back(root.get(), 0);
    visited.insert(root.get());
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->parents.size()) {
            Node* p = node->parents[idx].get();
            ++idx;
            if (p->requires_grad && !visited.count(p)) {
                visited.insert(p);
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
}

}  // namespace

void backward(const Var& loss) {
    check_shape(loss.defined() && loss.numel() == 1, "backward requires a scalar loss");
    if (!loss.requires_grad()) return;

    std::vector<Node*> order;
    topo_sort(loss.node(), order);

    loss.node()->ensure_grad().fill(1.0f);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backward_fn && n->grad.numel()) n->backward_fn(*n);
    }
}

}  // namespace fq::nn
