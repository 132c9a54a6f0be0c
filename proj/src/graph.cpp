#include "rcb/graph.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace rcb::diff {

namespace {

Value make_node(Tensor val, std::vector<Value> parents, std::function<void(Node&)> pull) {
    auto n = std::make_shared<Node>();
    n->val = std::move(val);
    bool any = false;
    for (const auto& p : parents) any = any || p->requires_grad;
    n->requires_grad = any;
    if (any) {
        n->parents = std::move(parents);
        n->pull = std::move(pull);
    }
    return n;
}

void check_same_shape(const Value& a, const Value& b, const char* op) {
    if (!a->val.same_shape(b->val)) {
        throw std::invalid_argument(std::string(op) + ": shape mismatch");
    }
}

void accumulate(Node& dst, const Tensor& g) {
    Tensor& t = dst.ensure_grad();
    for (int i = 0; i < t.size(); ++i) t[i] += g[i];
}

}  // namespace

Tensor& Node::ensure_grad() {
    if (!grad_ready) {
        grad = Tensor::zeros_like(val);
        grad_ready = true;
    }
    return grad;
}

Value constant(Tensor t) {
    auto n = std::make_shared<Node>();
    n->val = std::move(t);
    return n;
}

Value leaf(Tensor t) {
    auto n = std::make_shared<Node>();
    n->val = std::move(t);
    n->requires_grad = true;
    return n;
}

Value add(const Value& a, const Value& b) {
    check_same_shape(a, b, "add");
    Tensor out = a->val;
    for (int i = 0; i < out.size(); ++i) out[i] += b->val[i];
    return make_node(std::move(out), {a, b}, [](Node& n) {
        if (n.parents[0]->requires_grad) accumulate(*n.parents[0], n.grad);
        if (n.parents[1]->requires_grad) accumulate(*n.parents[1], n.grad);
    });
}

Value sub(const Value& a, const Value& b) {
    check_same_shape(a, b, "sub");
    Tensor out = a->val;
    for (int i = 0; i < out.size(); ++i) out[i] -= b->val[i];
    return make_node(std::move(out), {a, b}, [](Node& n) {
        if (n.parents[0]->requires_grad) accumulate(*n.parents[0], n.grad);
        if (n.parents[1]->requires_grad) {
            Tensor& t = n.parents[1]->ensure_grad();
            for (int i = 0; i < t.size(); ++i) t[i] -= n.grad[i];
        }
    });
}

Value mul(const Value& a, const Value& b) {
    check_same_shape(a, b, "mul");
    Tensor out = a->val;
    for (int i = 0; i < out.size(); ++i) out[i] *= b->val[i];
    return make_node(std::move(out), {a, b}, [](Node& n) {
        Node& pa = *n.parents[0];
        Node& pb = *n.parents[1];
        if (pa.requires_grad) {
            Tensor& t = pa.ensure_grad();
            for (int i = 0; i < t.size(); ++i) t[i] += n.grad[i] * pb.val[i];
        }
        if (pb.requires_grad) {
            Tensor& t = pb.ensure_grad();
            for (int i = 0; i < t.size(); ++i) t[i] += n.grad[i] * pa.val[i];
        }
    });
}

Value neg(const Value& a) { return scale(a, -1.0); }

Value scale(const Value& a, double s) {
    Tensor out = a->val;
    for (int i = 0; i < out.size(); ++i) out[i] *= s;
    return make_node(std::move(out), {a}, [s](Node& n) {
        Tensor& t = n.parents[0]->ensure_grad();
        for (int i = 0; i < t.size(); ++i) t[i] += s * n.grad[i];
    });
}

Value add_const(const Value& a, double s) {
    Tensor out = a->val;
    for (int i = 0; i < out.size(); ++i) out[i] += s;
    return make_node(std::move(out), {a}, [](Node& n) { accumulate(*n.parents[0], n.grad); });
}

Value matvec(const Value& w, const Value& x) {
    if (w->val.shape().size() != 2 || x->val.shape().size() != 1 ||
        w->val.cols() != static_cast<int>(x->val.size())) {
        throw std::invalid_argument("matvec: shape mismatch");
    }
    const int m = w->val.rows();
    const int k = w->val.cols();
    Tensor out{{m}};
    const double* wd = w->val.data();
    const double* xd = x->val.data();
    for (int r = 0; r < m; ++r) {
        double acc = 0.0;
        const double* row = wd + static_cast<std::size_t>(r) * k;
        for (int c = 0; c < k; ++c) acc += row[c] * xd[c];
        out[r] = acc;
    }
    return make_node(std::move(out), {w, x}, [m, k](Node& n) {
        Node& pw = *n.parents[0];
        Node& px = *n.parents[1];
        if (pw.requires_grad) {
            Tensor& gw = pw.ensure_grad();
            for (int r = 0; r < m; ++r) {
                const double g = n.grad[r];
                double* row = gw.data() + static_cast<std::size_t>(r) * k;
                const double* xd = px.val.data();
                for (int c = 0; c < k; ++c) row[c] += g * xd[c];
            }
        }
        if (px.requires_grad) {
            Tensor& gx = px.ensure_grad();
            const double* wd = pw.val.data();
            for (int r = 0; r < m; ++r) {
                const double g = n.grad[r];
                const double* row = wd + static_cast<std::size_t>(r) * k;
                for (int c = 0; c < k; ++c) gx[c] += g * row[c];
            }
        }
    });
}

Value tanh_v(const Value& a) {
    Tensor out = a->val;
    for (int i = 0; i < out.size(); ++i) out[i] = std::tanh(out[i]);
    Tensor cached = out;
    return make_node(std::move(out), {a}, [cached](Node& n) {
        Tensor& t = n.parents[0]->ensure_grad();
        for (int i = 0; i < t.size(); ++i) t[i] += n.grad[i] * (1.0 - cached[i] * cached[i]);
    });
}

Value sigmoid(const Value& a) {
    Tensor out = a->val;
    for (int i = 0; i < out.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-out[i]));
    Tensor cached = out;
    return make_node(std::move(out), {a}, [cached](Node& n) {
        Tensor& t = n.parents[0]->ensure_grad();
        for (int i = 0; i < t.size(); ++i) t[i] += n.grad[i] * cached[i] * (1.0 - cached[i]);
    });
}

Value exp_v(const Value& a) {
    Tensor out = a->val;
    for (int i = 0; i < out.size(); ++i) out[i] = std::exp(out[i]);
    Tensor cached = out;
    return make_node(std::move(out), {a}, [cached](Node& n) {
        Tensor& t = n.parents[0]->ensure_grad();
        for (int i = 0; i < t.size(); ++i) t[i] += n.grad[i] * cached[i];
    });
}

Value log_v(const Value& a) {
    Tensor out = a->val;
    for (int i = 0; i < out.size(); ++i) out[i] = std::log(out[i]);
    return make_node(std::move(out), {a}, [](Node& n) {
        Tensor& t = n.parents[0]->ensure_grad();
        for (int i = 0; i < t.size(); ++i) t[i] += n.grad[i] / n.parents[0]->val[i];
    });
}

Value square(const Value& a) {
    Tensor out = a->val;
    for (int i = 0; i < out.size(); ++i) out[i] *= out[i];
    return make_node(std::move(out), {a}, [](Node& n) {
        Tensor& t = n.parents[0]->ensure_grad();
        for (int i = 0; i < t.size(); ++i) t[i] += 2.0 * n.grad[i] * n.parents[0]->val[i];
    });
}

Value sqrt_v(const Value& a) {
    Tensor out = a->val;
    for (int i = 0; i < out.size(); ++i) out[i] = std::sqrt(out[i]);
    Tensor cached = out;
    return make_node(std::move(out), {a}, [cached](Node& n) {
        Tensor& t = n.parents[0]->ensure_grad();
        for (int i = 0; i < t.size(); ++i) t[i] += n.grad[i] * 0.5 / cached[i];
    });
}

Value clamp(const Value& a, double lo, double hi) {
    Tensor out = a->val;
    for (int i = 0; i < out.size(); ++i) out[i] = std::min(hi, std::max(lo, out[i]));
    return make_node(std::move(out), {a}, [lo, hi](Node& n) {
        Tensor& t = n.parents[0]->ensure_grad();
        for (int i = 0; i < t.size(); ++i) {
            const double v = n.parents[0]->val[i];
            if (v > lo && v < hi) t[i] += n.grad[i];
        }
    });
}

Value sum(const Value& a) {
    double acc = 0.0;
    for (int i = 0; i < a->val.size(); ++i) acc += a->val[i];
    return make_node(Tensor::scalar(acc), {a}, [](Node& n) {
        Tensor& t = n.parents[0]->ensure_grad();
        const double g = n.grad[0];
        for (int i = 0; i < t.size(); ++i) t[i] += g;
    });
}

Value mean(const Value& a) {
    const int k = a->val.size();
    if (k == 0) throw std::invalid_argument("mean of empty tensor");
    return scale(sum(a), 1.0 / k);
}

Value dot(const Value& a, const Value& b) {
    check_same_shape(a, b, "dot");
    double acc = 0.0;
    for (int i = 0; i < a->val.size(); ++i) acc += a->val[i] * b->val[i];
    return make_node(Tensor::scalar(acc), {a, b}, [](Node& n) {
        Node& pa = *n.parents[0];
        Node& pb = *n.parents[1];
        const double g = n.grad[0];
        if (pa.requires_grad) {
            Tensor& t = pa.ensure_grad();
            for (int i = 0; i < t.size(); ++i) t[i] += g * pb.val[i];
        }
        if (pb.requires_grad) {
            Tensor& t = pb.ensure_grad();
            for (int i = 0; i < t.size(); ++i) t[i] += g * pa.val[i];
        }
    });
}

Value concat(const std::vector<Value>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat of nothing");
    int total = 0;
    for (const auto& p : parts) {
        if (p->val.shape().size() > 1) throw std::invalid_argument("concat: vectors only");
        total += p->val.size();
    }
    Tensor out{{total}};
    int off = 0;
    for (const auto& p : parts) {
        for (int i = 0; i < p->val.size(); ++i) out[off + i] = p->val[i];
        off += p->val.size();
    }
    return make_node(std::move(out), parts, [](Node& n) {
        int off = 0;
        for (auto& p : n.parents) {
            if (p->requires_grad) {
                Tensor& t = p->ensure_grad();
                for (int i = 0; i < t.size(); ++i) t[i] += n.grad[off + i];
            }
            off += p->val.size();
        }
    });
}

Value slice(const Value& a, int offset, int len) {
    if (offset < 0 || len < 0 || offset + len > a->val.size()) {
        throw std::invalid_argument("slice out of range");
    }
    Tensor out{{len}};
    for (int i = 0; i < len; ++i) out[i] = a->val[offset + i];
    return make_node(std::move(out), {a}, [offset, len](Node& n) {
        Tensor& t = n.parents[0]->ensure_grad();
        for (int i = 0; i < len; ++i) t[offset + i] += n.grad[i];
    });
}

Value detach(const Value& a) { return constant(a->val); }

void backward(const Value& root) {
    if (!root->val.is_scalar()) throw std::invalid_argument("backward: root must be scalar");
    if (!root->requires_grad) return;

    // Iterative post-order topological sort.
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, std::size_t>> stack;
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

    root->ensure_grad()[0] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->pull && n->grad_ready) n->pull(*n);
    }
}

}  // namespace rcb::diff
