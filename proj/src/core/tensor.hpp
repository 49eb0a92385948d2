// Copyright 2026 AVRFN Contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "core/common.hpp"

namespace avrfn {

// Axis order is (batch, height, width, channels). Element (n, y, x, c) lives
// at ((n*H + y)*W + x)*C + c in the flat array, so one batch sample and one
// pixel's channel vector are both contiguous.
struct Shape {
    int n = 0;
    int h = 0;
    int w = 0;
    int c = 0;

    std::size_t elems() const { return std::size_t(n) * h * w * std::size_t(c); }
    std::size_t index(int ni, int y, int x, int ci) const
    {
        return ((std::size_t(ni) * h + y) * w + x) * c + ci;
    }
    bool operator==(const Shape&) const = default;
    std::string str() const;
};

class Graph;

namespace detail {

struct TensorImpl {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad; // leaf gradient accumulator, empty until populated
    bool requires_grad = false;

    // node registration cache, valid only for the recording identified by epoch
    Graph* graph = nullptr;
    int node = -1;
    uint64_t graph_epoch = 0;
};

} // namespace detail

// Value-semantic handle to an immutable dense array. Copies share storage.
// The only sanctioned mutations are gradient accumulation (via Graph) and
// whole-array replacement through assign(), which the optimizer owns.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape s, bool requires_grad = false);
    static Tensor full(Shape s, double v, bool requires_grad = false);
    static Tensor from_data(Shape s, std::vector<double> data, bool requires_grad = false);
    static Tensor scalar(double v, bool requires_grad = false);

    bool defined() const { return impl_ != nullptr; }
    const Shape& shape() const;
    std::size_t size() const { return shape().elems(); }
    std::span<const double> data() const;
    double at(int ni, int y, int x, int ci) const;
    double item() const; // single-element tensors only
    bool requires_grad() const;

    bool has_grad() const;
    std::span<const double> grad() const; // error if never populated
    void zero_grad();

    void assign(std::span<const double> v);

    detail::TensorImpl* impl() const { return impl_.get(); }
    std::shared_ptr<detail::TensorImpl> impl_ptr() const { return impl_; }

private:
    explicit Tensor(std::shared_ptr<detail::TensorImpl> impl) : impl_(std::move(impl)) {}
    std::shared_ptr<detail::TensorImpl> impl_;
    friend class Graph;
};

// Reverse-mode tape. Ops append nodes while a Recording scope is open on the
// current thread; backward() replays the backward rules newest-to-oldest and
// accumulates into every reachable requires_grad leaf. Node operands always
// precede the node itself, so one reverse sweep visits each contribution
// exactly once per use.
class Graph {
public:
    Graph();
    ~Graph();
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    // loss must be a single-element tensor recorded on this graph (a registered
    // leaf counts as trivially recorded). Repeated calls accumulate.
    void backward(const Tensor& loss);

    std::size_t node_count() const { return nodes_.size(); }

    static Graph* current();

    class Recording {
    public:
        explicit Recording(Graph& g);
        ~Recording();
        Recording(const Recording&) = delete;
        Recording& operator=(const Recording&) = delete;

    private:
        Graph* prev_;
    };

    // --- recording interface, used by the op implementations ---

    // parent id -1 marks an operand that needs no gradient; backward rules
    // receive a matching nullptr slot.
    using BackwardFn = std::function<void(std::span<const double> out_grad,
                                          const std::vector<double*>& parent_grads)>;

    int record(std::vector<int> parents, std::size_t out_elems, BackwardFn fn);
    // registers (or reuses) a leaf node for a requires_grad tensor
    int leaf_id(const Tensor& t);
    // node id of t on this graph, or -1 when untracked here
    int tracked_id(const Tensor& t) const;
    void attach(const Tensor& out, int node) const;

private:
    struct Node {
        std::vector<int> parents;
        std::size_t out_elems = 0;
        BackwardFn fn; // empty for leaves
        std::shared_ptr<detail::TensorImpl> leaf; // set for leaves only
    };

    std::vector<Node> nodes_;
    uint64_t epoch_;
};

// Helper collecting operand node ids while an op builds its node.
struct OpArgs {
    Graph* g = Graph::current();
    bool tracked = false;

    int arg(const Tensor& t)
    {
        if (!g)
            return -1;
        int id = g->tracked_id(t);
        if (id < 0 && t.requires_grad())
            id = g->leaf_id(t);
        if (id >= 0)
            tracked = true;
        return id;
    }

    void finish(const Tensor& out, std::vector<int> parents, Graph::BackwardFn fn) const
    {
        if (g && tracked)
            g->attach(out, g->record(std::move(parents), out.size(), std::move(fn)));
    }
};

// Error if any element is non-finite; every public op runs this on its output.
void ensure_finite(std::span<const double> v, const char* op_name);

} // namespace avrfn
