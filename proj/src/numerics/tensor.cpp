#include "dmvcr/tensor.hpp"

#include <atomic>
#include <cmath>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "dmvcr/errors.hpp"

namespace dmvcr {
namespace {

std::atomic<std::uint64_t> next_node_id{1};
thread_local bool no_grad_active = false;

std::shared_ptr<detail::Node> make_leaf(Shape shape, std::vector<double> values,
                                        bool requires_grad) {
  if (numel(shape) != values.size()) {
    throw DimensionError("tensor of shape " + to_string(shape) + " cannot hold " +
                         std::to_string(values.size()) + " values");
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw NumericError("non-finite value in tensor data");
  }
  auto node = std::make_shared<detail::Node>();
  node->id = next_node_id.fetch_add(1, std::memory_order_relaxed);
  node->shape = std::move(shape);
  node->data = std::move(values);
  node->requires_grad = requires_grad;
  if (requires_grad) node->grad.assign(node->data.size(), 0.0);
  return node;
}

}  // namespace

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  auto n = dmvcr::numel(shape);
  return Tensor(make_leaf(std::move(shape), std::vector<double>(n, 0.0), requires_grad));
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  auto n = dmvcr::numel(shape);
  return Tensor(make_leaf(std::move(shape), std::vector<double>(n, value), requires_grad));
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  return Tensor(make_leaf(std::move(shape), std::move(values), requires_grad));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return Tensor(make_leaf({}, {value}, requires_grad));
}

Tensor Tensor::wrap(std::shared_ptr<detail::Node> node) {
  if (node->id == 0) node->id = next_node_id.fetch_add(1, std::memory_order_relaxed);
  return Tensor(std::move(node));
}

detail::Node& Tensor::node() const {
  if (!node_) throw ContractError("use of an undefined tensor");
  return *node_;
}

const Shape& Tensor::shape() const { return node().shape; }

std::size_t Tensor::dim(std::size_t axis) const {
  const auto& s = shape();
  if (axis >= s.size()) {
    throw IndexError("axis " + std::to_string(axis) + " out of range for shape " +
                     to_string(s));
  }
  return s[axis];
}

void Tensor::zero_grad() {
  auto& n = node();
  if (n.requires_grad) std::fill(n.grad.begin(), n.grad.end(), 0.0);
}

double Tensor::item() const {
  if (numel() != 1) {
    throw ContractError("item() on tensor of shape " + to_string(shape()));
  }
  return node().data[0];
}

double Tensor::at(std::size_t row, std::size_t col) const {
  const auto& s = shape();
  if (s.size() != 2) throw DimensionError("at(row, col) needs a matrix, got " + to_string(s));
  if (row >= s[0] || col >= s[1]) throw IndexError("matrix index out of range");
  return node().data[row * s[1] + col];
}

Tensor Tensor::detach() const {
  return Tensor(make_leaf(shape(), node().data, false));
}

Tape Tape::record(const Tensor& root) {
  Tape tape;
  if (!root.requires_grad()) return tape;
  // Iterative post-order DFS; inputs always land before their consumers.
  std::unordered_set<const detail::Node*> seen;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(&root.node(), 0);
  seen.insert(&root.node());
  std::vector<detail::Node*> order;
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      detail::Node* child = node->inputs[next++].get();
      if (child->requires_grad && seen.insert(child).second) stack.emplace_back(child, 0);
      continue;
    }
    order.push_back(node);
    stack.pop_back();
  }
  // Recover owning pointers: the root is owned by the caller's handle, every
  // other node by one of its consumers.
  std::unordered_map<const detail::Node*, std::shared_ptr<detail::Node>> owners;
  owners.emplace(&root.node(), root.node_ptr());
  for (auto* n : order) {
    for (auto& in : n->inputs) owners.emplace(in.get(), in);
  }
  tape.nodes_.reserve(order.size());
  for (auto* n : order) tape.nodes_.push_back(owners.at(n));
  return tape;
}

std::size_t Tape::run_backward(const Tensor& root) const {
  if (nodes_.empty()) return 0;
  for (const auto& n : nodes_) n->pending.assign(n->data.size(), 0.0);
  root.node().pending[0] = 1.0;

  std::size_t executed = 0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    detail::Node& n = **it;
    for (double g : n.pending) {
      if (!std::isfinite(g)) {
        throw NumericError(std::string("non-finite gradient at output of ") + n.op);
      }
    }
    if (n.backward_fn) {
      n.backward_fn(n);
      ++executed;
    } else {
      for (std::size_t i = 0; i < n.grad.size(); ++i) n.grad[i] += n.pending[i];
    }
    n.pending.clear();
    n.pending.shrink_to_fit();
  }
  return executed;
}

NoGradGuard::NoGradGuard() : previous_(no_grad_active) { no_grad_active = true; }
NoGradGuard::~NoGradGuard() { no_grad_active = previous_; }
bool NoGradGuard::active() { return no_grad_active; }

void backward(const Tensor& root) {
  if (root.numel() != 1) {
    throw ContractError("backward() needs a scalar root, got shape " +
                        to_string(root.shape()));
  }
  Tape::record(root).run_backward(root);
}

}  // namespace dmvcr
