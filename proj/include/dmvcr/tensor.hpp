#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace dmvcr {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

namespace detail {

// One vertex of the differentiation graph. `pending` is scratch space that only
// lives for the duration of a backward traversal; `grad` is the persistent
// accumulator and exists only for nodes that require gradients.
struct Node {
  std::uint64_t id = 0;
  const char* op = "leaf";
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;
  std::vector<double> pending;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward_fn;
};

}  // namespace detail

/// Handle to an f64 n-d array that may participate in reverse-mode
/// differentiation. Copies share the underlying storage.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values,
                     bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const noexcept { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const { return node().data.size(); }

  std::span<const double> data() const { return node().data; }
  /// In-place access for optimizers and finite differencing. Never call on a
  /// tensor whose graph is still going to be differentiated.
  std::span<double> mutable_data() { return node().data; }

  bool requires_grad() const { return node().requires_grad; }
  std::span<const double> grad() const { return node().grad; }
  std::span<double> mutable_grad() { return node().grad; }
  void zero_grad();

  double item() const;
  double at(std::size_t row, std::size_t col) const;

  std::uint64_t id() const { return node().id; }
  const char* op() const { return node().op; }
  bool is_leaf() const { return !node().backward_fn; }

  /// Detached copy of the values (fresh leaf, no gradient).
  Tensor detach() const;

  detail::Node& node() const;
  const std::shared_ptr<detail::Node>& node_ptr() const { return node_; }

  static Tensor wrap(std::shared_ptr<detail::Node> node);

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::Node> node_;
};

/// Topologically ordered record of the operations reachable from a root.
class Tape {
 public:
  static Tape record(const Tensor& root);

  const std::vector<std::shared_ptr<detail::Node>>& nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }

  /// Propagates d(root)/d(node) through every recorded node in reverse order and
  /// adds the result into each gradient-tracking leaf. Returns the number of
  /// backward rules executed.
  std::size_t run_backward(const Tensor& root) const;

 private:
  std::vector<std::shared_ptr<detail::Node>> nodes_;
};

/// While alive on a thread, ops on that thread record no graph (inference).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

  static bool active();

 private:
  bool previous_;
};

/// Accumulates d(root)/d(leaf) into `grad` of every leaf with requires_grad.
/// Root must hold exactly one element. Gradients accumulate across calls.
void backward(const Tensor& root);

}  // namespace dmvcr
