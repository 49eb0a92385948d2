// Copyright 2026 AVRFN Contributors
// SPDX-License-Identifier: Apache-2.0

#include "core/tensor.hpp"

#include <atomic>
#include <cmath>
#include <sstream>

namespace avrfn {

std::string Shape::str() const
{
    std::ostringstream os;
    os << '(' << n << ',' << h << ',' << w << ',' << c << ')';
    return os.str();
}

namespace {

thread_local Graph* g_current_graph = nullptr;
std::atomic<uint64_t> g_graph_epoch{1};

std::shared_ptr<detail::TensorImpl> make_impl(Shape s, std::vector<double> v, bool requires_grad)
{
    require(s.n >= 0 && s.h >= 0 && s.w >= 0 && s.c >= 0, ErrorCode::invalid_argument,
            "tensor shape must be non-negative: " + s.str());
    require(v.size() == s.elems(), ErrorCode::shape_mismatch,
            "tensor data length " + std::to_string(v.size()) + " does not match shape " + s.str());
    auto impl = std::make_shared<detail::TensorImpl>();
    impl->shape = s;
    impl->value = std::move(v);
    impl->requires_grad = requires_grad;
    return impl;
}

} // namespace

void ensure_finite(std::span<const double> v, const char* op_name)
{
    for (double x : v) {
        if (!std::isfinite(x))
            fail(ErrorCode::numeric, std::string(op_name) + ": non-finite element in result");
    }
}

Tensor Tensor::zeros(Shape s, bool requires_grad)
{
    return Tensor(make_impl(s, std::vector<double>(s.elems(), 0.0), requires_grad));
}

Tensor Tensor::full(Shape s, double v, bool requires_grad)
{
    require(std::isfinite(v), ErrorCode::numeric, "Tensor::full: non-finite fill value");
    return Tensor(make_impl(s, std::vector<double>(s.elems(), v), requires_grad));
}

Tensor Tensor::from_data(Shape s, std::vector<double> data, bool requires_grad)
{
    ensure_finite(data, "Tensor::from_data");
    return Tensor(make_impl(s, std::move(data), requires_grad));
}

Tensor Tensor::scalar(double v, bool requires_grad)
{
    return full(Shape{1, 1, 1, 1}, v, requires_grad);
}

const Shape& Tensor::shape() const
{
    require(defined(), ErrorCode::invalid_argument, "use of an undefined tensor");
    return impl_->shape;
}

std::span<const double> Tensor::data() const
{
    require(defined(), ErrorCode::invalid_argument, "use of an undefined tensor");
    return impl_->value;
}

double Tensor::at(int ni, int y, int x, int ci) const
{
    const Shape& s = shape();
    require(ni >= 0 && ni < s.n && y >= 0 && y < s.h && x >= 0 && x < s.w && ci >= 0 && ci < s.c,
            ErrorCode::invalid_argument, "Tensor::at: index out of range for " + s.str());
    return impl_->value[s.index(ni, y, x, ci)];
}

double Tensor::item() const
{
    require(size() == 1, ErrorCode::shape_mismatch,
            "Tensor::item: tensor has " + std::to_string(size()) + " elements");
    return impl_->value[0];
}

bool Tensor::requires_grad() const
{
    return defined() && impl_->requires_grad;
}

bool Tensor::has_grad() const
{
    return defined() && !impl_->grad.empty();
}

std::span<const double> Tensor::grad() const
{
    require(has_grad(), ErrorCode::invalid_argument, "Tensor::grad: gradient never populated");
    return impl_->grad;
}

void Tensor::zero_grad()
{
    require(defined(), ErrorCode::invalid_argument, "use of an undefined tensor");
    impl_->grad.assign(size(), 0.0);
}

void Tensor::assign(std::span<const double> v)
{
    require(defined(), ErrorCode::invalid_argument, "use of an undefined tensor");
    require(v.size() == size(), ErrorCode::shape_mismatch,
            "Tensor::assign: length " + std::to_string(v.size()) + " vs shape " + shape().str());
    ensure_finite(v, "Tensor::assign");
    impl_->value.assign(v.begin(), v.end());
}

Graph::Graph() : epoch_(g_graph_epoch.fetch_add(1)) {}

Graph::~Graph() = default;

Graph* Graph::current()
{
    return g_current_graph;
}

Graph::Recording::Recording(Graph& g) : prev_(g_current_graph)
{
    g_current_graph = &g;
}

Graph::Recording::~Recording()
{
    g_current_graph = prev_;
}

int Graph::record(std::vector<int> parents, std::size_t out_elems, BackwardFn fn)
{
    Node node;
    node.parents = std::move(parents);
    node.out_elems = out_elems;
    node.fn = std::move(fn);
    nodes_.push_back(std::move(node));
    return int(nodes_.size()) - 1;
}

int Graph::leaf_id(const Tensor& t)
{
    int id = tracked_id(t);
    if (id >= 0)
        return id;
    Node node;
    node.out_elems = t.size();
    node.leaf = t.impl_ptr();
    nodes_.push_back(std::move(node));
    id = int(nodes_.size()) - 1;
    attach(t, id);
    return id;
}

int Graph::tracked_id(const Tensor& t) const
{
    if (!t.defined())
        return -1;
    const auto* impl = t.impl();
    if (impl->graph == this && impl->graph_epoch == epoch_)
        return impl->node;
    return -1;
}

void Graph::attach(const Tensor& out, int node) const
{
    auto* impl = out.impl();
    impl->graph = const_cast<Graph*>(this);
    impl->node = node;
    impl->graph_epoch = epoch_;
}

void Graph::backward(const Tensor& loss)
{
    require(loss.defined() && loss.size() == 1, ErrorCode::shape_mismatch,
            "backward: loss must be a single-element tensor");
    int root = tracked_id(loss);
    require(root >= 0, ErrorCode::invalid_argument,
            "backward: loss is not recorded on this graph");

    std::vector<std::vector<double>> node_grad(nodes_.size());
    node_grad[root].assign(1, 1.0);

    std::vector<double*> parent_ptrs;
    for (int i = root; i >= 0; --i) {
        auto& g = node_grad[i];
        if (g.empty())
            continue; // unreachable from the loss: gradient stays zero
        const Node& node = nodes_[i];
        if (node.fn) {
            parent_ptrs.clear();
            for (int p : node.parents) {
                if (p < 0) {
                    parent_ptrs.push_back(nullptr);
                } else {
                    if (node_grad[p].empty())
                        node_grad[p].assign(nodes_[p].out_elems, 0.0);
                    parent_ptrs.push_back(node_grad[p].data());
                }
            }
            node.fn(g, parent_ptrs);
        } else if (node.leaf && node.leaf->requires_grad) {
            auto& acc = node.leaf->grad;
            if (acc.empty())
                acc.assign(node.out_elems, 0.0);
            for (std::size_t k = 0; k < node.out_elems; ++k)
                acc[k] += g[k];
        }
        g.clear();
        g.shrink_to_fit();
    }
}

} // namespace avrfn
