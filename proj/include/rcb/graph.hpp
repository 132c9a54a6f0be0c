#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "rcb/tensor.hpp"

namespace rcb::diff {

// Define-by-run reverse-mode tape. Every operation allocates a Node holding
// its value and a closure that pushes the node's gradient into its parents.
// Graphs are rebuilt per loss evaluation; nothing is retained across steps.
struct Node;
using Value = std::shared_ptr<Node>;

struct Node {
    Tensor val;
    Tensor grad;  // allocated lazily in backward()
    bool requires_grad = false;
    bool grad_ready = false;
    std::vector<Value> parents;
    std::function<void(Node&)> pull;  // distributes grad into parents

    Tensor& ensure_grad();
};

Value constant(Tensor t);
Value leaf(Tensor t);  // gradient-carrying input

// Elementwise; shapes must match exactly (no broadcasting).
Value add(const Value& a, const Value& b);
Value sub(const Value& a, const Value& b);
Value mul(const Value& a, const Value& b);
Value neg(const Value& a);

Value scale(const Value& a, double s);
Value add_const(const Value& a, double s);

// W: [m x n], x: [n] -> [m]
Value matvec(const Value& w, const Value& x);

Value tanh_v(const Value& a);
Value sigmoid(const Value& a);
Value exp_v(const Value& a);
Value log_v(const Value& a);
Value square(const Value& a);
Value sqrt_v(const Value& a);
// Hard clamp with pass-through gradient strictly inside [lo, hi].
Value clamp(const Value& a, double lo, double hi);

Value sum(const Value& a);   // -> scalar
Value mean(const Value& a);  // -> scalar
Value dot(const Value& a, const Value& b);
Value concat(const std::vector<Value>& parts);  // vectors -> vector
Value slice(const Value& a, int offset, int len);

// Identity on values, blocks gradient flow.
Value detach(const Value& a);

// Reverse-mode sweep from a scalar root. Gradients accumulate in the
// `grad` member of every reachable node with requires_grad set.
void backward(const Value& root);

}  // namespace rcb::diff
