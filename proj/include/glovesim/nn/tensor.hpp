#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <unordered_set>
#include <vector>

#include "glovesim/error.hpp"
#include "glovesim/rng.hpp"

namespace glovesim::nn {

// Reverse-mode tape node. Ops build a DAG of these; backward() walks it in
// reverse topological order. Scalar type is a template parameter so the
// same kernels run in float (shipped) and double (finite-difference
// verification).
template <typename T>
struct TensorNode {
    std::array<int, 3> dims{1, 1, 1};
    int rank = 1;
    std::vector<T> val;
    std::vector<T> grad;  // allocated on demand, same length as val
    bool requires_grad = false;
    std::vector<std::shared_ptr<TensorNode>> parents;
    std::function<void()> backward_fn;

    std::size_t size() const { return val.size(); }
    void ensure_grad() {
        if (grad.size() != val.size()) grad.assign(val.size(), T(0));
    }
};

// Graph recording switch: inside a NoGradGuard ops compute values only.
inline thread_local bool g_grad_enabled = true;

inline bool grad_enabled() { return g_grad_enabled; }

struct NoGradGuard {
    bool saved;
    NoGradGuard() : saved(g_grad_enabled) { g_grad_enabled = false; }
    ~NoGradGuard() { g_grad_enabled = saved; }
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;
};

template <typename T>
class BasicTensor {
public:
    BasicTensor() : node_(std::make_shared<TensorNode<T>>()) { node_->val.assign(1, T(0)); }
    explicit BasicTensor(std::shared_ptr<TensorNode<T>> n) : node_(std::move(n)) {}

    static BasicTensor zeros(std::initializer_list<int> dims) {
        return filled(dims, T(0));
    }
    static BasicTensor filled(std::initializer_list<int> dims, T value) {
        auto n = make_node(dims);
        n->val.assign(checked_size(n->dims, n->rank), value);
        return BasicTensor(std::move(n));
    }
    static BasicTensor from(std::vector<T> values, std::initializer_list<int> dims) {
        auto n = make_node(dims);
        if (values.size() != checked_size(n->dims, n->rank)) {
            throw shape_error("value count does not match requested shape");
        }
        n->val = std::move(values);
        return BasicTensor(std::move(n));
    }
    // All-uniform init in [lo, hi); the workhorse for weight initialization.
    static BasicTensor uniform(Rng& rng, T lo, T hi, std::initializer_list<int> dims) {
        auto n = make_node(dims);
        const std::size_t sz = checked_size(n->dims, n->rank);
        n->val.resize(sz);
        for (auto& v : n->val) v = static_cast<T>(rng.uniform(double(lo), double(hi)));
        return BasicTensor(std::move(n));
    }

    int rank() const { return node_->rank; }
    int dim(int i) const { return node_->dims[static_cast<std::size_t>(i)]; }
    std::size_t size() const { return node_->size(); }

    const std::vector<T>& values() const { return node_->val; }
    std::vector<T>& values() { return node_->val; }
    const T* data() const { return node_->val.data(); }
    T* data() { return node_->val.data(); }

    T item() const {
        if (size() != 1) throw shape_error("item() requires a single-element tensor");
        return node_->val[0];
    }

    bool requires_grad() const { return node_->requires_grad; }
    BasicTensor& set_requires_grad(bool on) {
        node_->requires_grad = on;
        if (on) node_->ensure_grad();
        return *this;
    }
    const std::vector<T>& grad() const { return node_->grad; }
    void zero_grad() { node_->grad.assign(node_->val.size(), T(0)); }

    std::shared_ptr<TensorNode<T>>& node() { return node_; }
    const std::shared_ptr<TensorNode<T>>& node() const { return node_; }

    // Reverse-mode sweep from a scalar root.
    void backward() {
        if (size() != 1) throw shape_error("backward() requires a scalar root");
        std::vector<TensorNode<T>*> order;
        std::unordered_set<TensorNode<T>*> seen;
        topo(node_.get(), seen, order);
        node_->ensure_grad();
        node_->grad[0] = T(1);
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            if ((*it)->backward_fn) (*it)->backward_fn();
        }
    }

private:
    std::shared_ptr<TensorNode<T>> node_;

    static std::shared_ptr<TensorNode<T>> make_node(std::initializer_list<int> dims) {
        if (dims.size() < 1 || dims.size() > 3) {
            throw shape_error("tensors are rank 1 to 3");
        }
        auto n = std::make_shared<TensorNode<T>>();
        n->rank = static_cast<int>(dims.size());
        int i = 0;
        for (int d : dims) n->dims[static_cast<std::size_t>(i++)] = d;
        return n;
    }
    static std::size_t checked_size(const std::array<int, 3>& dims, int rank) {
        std::size_t sz = 1;
        for (int i = 0; i < rank; ++i) {
            if (dims[static_cast<std::size_t>(i)] <= 0) {
                throw shape_error("tensor dimensions must be positive");
            }
            sz *= static_cast<std::size_t>(dims[static_cast<std::size_t>(i)]);
        }
        return sz;
    }
    static void topo(TensorNode<T>* n, std::unordered_set<TensorNode<T>*>& seen,
                     std::vector<TensorNode<T>*>& order) {
        if (seen.count(n)) return;
        seen.insert(n);
        for (const auto& p : n->parents) topo(p.get(), seen, order);
        order.push_back(n);
    }
};

using Tensor = BasicTensor<float>;

// Every op funnels its result through this: the all-finite invariant is
// enforced at creation time so a NaN/Inf surfaces where it was produced.
template <typename T>
void check_finite(const TensorNode<T>& n, const char* op) {
    for (const T v : n.val) {
        if (!std::isfinite(double(v))) {
            throw numeric_error(std::string(op) + " produced a non-finite value");
        }
    }
}

}  // namespace glovesim::nn
