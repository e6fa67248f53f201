#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "pcp/errors.hpp"

namespace pcp {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) os << ',';
        os << s[i];
    }
    os << ']';
    return os.str();
}

namespace detail {

struct TensorNode {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;  // sized lazily; empty means "no grad yet"
    bool requires_grad = false;
    bool backward_ran = false;
    std::uint64_t id = 0;
    std::vector<std::shared_ptr<TensorNode>> parents;
    // Pulls this node's grad into the parents' grads. Captures raw node
    // pointers only; lifetime is guaranteed by the parents vector above.
    std::function<void()> backprop;
};

inline std::uint64_t next_node_id() {
    thread_local std::uint64_t counter = 0;
    return ++counter;
}

}  // namespace detail

// Thread-local toggle for gradient recording (RAII guard below).
inline bool& grad_mode_enabled() {
    thread_local bool enabled = true;
    return enabled;
}

struct NoGradGuard {
    bool prev;
    NoGradGuard() : prev(grad_mode_enabled()) { grad_mode_enabled() = false; }
    ~NoGradGuard() { grad_mode_enabled() = prev; }
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;
};

// Checked mode: ops scan their outputs and raise NumericError on NaN/Inf.
inline bool& numeric_checks_enabled() {
    thread_local bool enabled = true;
    return enabled;
}

class Tensor {
public:
    Tensor() = default;

    Tensor(Shape shape, std::vector<double> data, bool requires_grad = false) {
        if (shape_numel(shape) != data.size())
            throw ShapeError("tensor: shape " + shape_str(shape) + " implies " +
                             std::to_string(shape_numel(shape)) + " elements, got " +
                             std::to_string(data.size()));
        node_ = std::make_shared<detail::TensorNode>();
        node_->shape = std::move(shape);
        node_->value = std::move(data);
        node_->requires_grad = requires_grad;
        node_->id = detail::next_node_id();
    }

    static Tensor zeros(Shape shape, bool requires_grad = false) {
        std::vector<double> v(shape_numel(shape), 0.0);
        return Tensor(std::move(shape), std::move(v), requires_grad);
    }

    static Tensor full(Shape shape, double fill, bool requires_grad = false) {
        std::vector<double> v(shape_numel(shape), fill);
        return Tensor(std::move(shape), std::move(v), requires_grad);
    }

    static Tensor scalar(double v, bool requires_grad = false) {
        return Tensor(Shape{}, std::vector<double>{v}, requires_grad);
    }

    bool defined() const { return node_ != nullptr; }

    const Shape& shape() const { return node_->shape; }
    std::size_t ndim() const { return node_->shape.size(); }
    std::size_t dim(std::size_t i) const { return node_->shape[i]; }
    std::size_t numel() const { return node_->value.size(); }

    std::vector<double>& data() { return node_->value; }
    const std::vector<double>& data() const { return node_->value; }
    double* ptr() { return node_->value.data(); }
    const double* ptr() const { return node_->value.data(); }

    double item() const {
        if (numel() != 1) throw UsageError("item: tensor has " + std::to_string(numel()) + " elements");
        return node_->value[0];
    }

    bool requires_grad() const { return node_->requires_grad; }

    Tensor& set_requires_grad(bool v) {
        node_->requires_grad = v;
        return *this;
    }

    bool has_grad() const { return !node_->grad.empty(); }

    const std::vector<double>& grad() const {
        if (node_->grad.empty()) throw UsageError("grad: no gradient has been computed");
        return node_->grad;
    }

    void zero_grad() { node_->grad.assign(node_->value.size(), 0.0); }

    detail::TensorNode* node() const { return node_.get(); }
    const std::shared_ptr<detail::TensorNode>& node_ptr() const { return node_; }

private:
    std::shared_ptr<detail::TensorNode> node_;
};

namespace detail {

inline void check_finite(const char* op, const std::vector<double>& values) {
    if (!numeric_checks_enabled()) return;
    for (double v : values) {
        if (!std::isfinite(v))
            throw NumericError(std::string(op) + ": produced a non-finite value");
    }
}

inline bool recording(std::initializer_list<const Tensor*> inputs) {
    if (!grad_mode_enabled()) return false;
    for (const Tensor* t : inputs)
        if (t->requires_grad()) return true;
    return false;
}

// Creates the output tensor of an op; wires parents when grad is recorded.
// The caller attaches the backprop closure afterwards.
inline Tensor make_result(const char* op, Shape shape, std::vector<double> value,
                          std::initializer_list<const Tensor*> inputs) {
    check_finite(op, value);
    Tensor out(std::move(shape), std::move(value));
    if (recording(inputs)) {
        out.set_requires_grad(true);
        for (const Tensor* t : inputs) out.node()->parents.push_back(t->node_ptr());
    }
    return out;
}

inline std::vector<double>& grad_of(TensorNode* n) { return n->grad; }

}  // namespace detail

// Reverse pass from a scalar root. Leaf gradients accumulate across calls
// (reset with zero_grad); intermediate gradients are scratch and re-zeroed
// here. A second backward through the same root requires accumulate=true.
inline void backward(const Tensor& root, bool accumulate = false) {
    if (!root.defined()) throw UsageError("backward: undefined tensor");
    if (root.numel() != 1)
        throw UsageError("backward: root must be a scalar, got shape " + shape_str(root.shape()));
    detail::TensorNode* root_node = root.node();
    if (root_node->backward_ran && !accumulate)
        throw UsageError("backward: already ran for this root; pass accumulate=true to add");

    // Reachable subgraph, then creation order descending = topological order.
    std::vector<detail::TensorNode*> order;
    {
        std::unordered_set<detail::TensorNode*> seen;
        std::vector<detail::TensorNode*> stack{root_node};
        seen.insert(root_node);
        while (!stack.empty()) {
            detail::TensorNode* n = stack.back();
            stack.pop_back();
            order.push_back(n);
            for (const auto& p : n->parents) {
                if (seen.insert(p.get()).second) stack.push_back(p.get());
            }
        }
        std::sort(order.begin(), order.end(),
                  [](const detail::TensorNode* a, const detail::TensorNode* b) { return a->id > b->id; });
    }

    for (detail::TensorNode* n : order) {
        if (!n->requires_grad) continue;
        if (n->backprop) {
            n->grad.assign(n->value.size(), 0.0);  // intermediate: scratch
        } else if (n->grad.empty()) {
            n->grad.assign(n->value.size(), 0.0);  // leaf: accumulate across calls
        }
    }

    if (!root_node->requires_grad) {
        root_node->backward_ran = true;
        return;  // nothing in the graph requires grad
    }
    if (root_node->grad.empty()) root_node->grad.assign(1, 0.0);
    root_node->grad[0] += 1.0;

    for (detail::TensorNode* n : order) {
        if (n->requires_grad && n->backprop) n->backprop();
    }
    root_node->backward_ran = true;
}

}  // namespace pcp
