#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rcnet/ops.hpp"
#include "rcnet/tensor.hpp"

namespace rcnet {

enum class OpKind {
  input,
  conv3d,
  retro_conv,
  temporal_avg_pool,
  deconv2x2,
  relu,
  sigmoid,
  maxpool2,
  concat,
};

std::string_view op_name(OpKind kind);

/// Named parameter tensors in insertion order.
template <typename T> class ParamStore {
public:
  std::size_t add(std::string name, Tensor5<T> value);
  std::size_t index(std::string_view name) const;
  bool contains(std::string_view name) const;

  std::size_t size() const { return values_.size(); }
  const std::string &name(std::size_t k) const { return names_[k]; }
  Tensor5<T> &operator[](std::size_t k) { return values_[k]; }
  const Tensor5<T> &operator[](std::size_t k) const { return values_[k]; }
  Tensor5<T> &operator[](std::string_view name) { return values_[index(name)]; }
  const Tensor5<T> &operator[](std::string_view name) const {
    return values_[index(name)];
  }

  template <typename U> ParamStore<U> cast() const {
    ParamStore<U> out;
    for (std::size_t k = 0; k < size(); ++k)
      out.add(names_[k], values_[k].template cast<U>());
    return out;
  }
  bool operator==(const ParamStore &) const = default;

private:
  std::vector<std::string> names_;
  std::vector<Tensor5<T>> values_;
};

struct Node {
  OpKind kind = OpKind::input;
  std::string name;
  std::vector<std::size_t> inputs; // node ids, all smaller than this node's id
  std::vector<std::size_t> params; // [weight, bias] for conv-like ops
  ConvGeometry geom;               // conv3d only
  std::size_t dilation = 1;        // retro_conv only
};

/// What forward() accepts: channel count, minimum clip length and the
/// factor spatial dims must be divisible by.
struct InputSignature {
  std::size_t channels = 1;
  std::size_t min_length = 1;
  std::size_t spatial_multiple = 1;
};

/// Activations of one forward pass, indexed by node id.
template <typename T> struct Trace {
  std::vector<Tensor5<T>> outputs;
  bool valid() const { return !outputs.empty(); }
};

/// Gradients for every parameter (same order and dims as the store) plus the
/// graph input.
template <typename T> struct GradStore {
  std::vector<std::string> names;
  std::vector<Tensor5<T>> grads;
  Tensor5<T> input;

  const Tensor5<T> &operator[](std::string_view name) const;
};

/// Static operator graph. Nodes are appended in topological order; node 0 is
/// the input. forward/backward are const, so one graph may serve concurrent
/// callers as long as each keeps its own Trace.
template <typename T> class Graph {
public:
  explicit Graph(InputSignature sig = {});

  std::size_t input_node() const { return 0; }

  std::size_t add_conv3d(std::string name, std::size_t in, std::size_t weight,
                         std::size_t bias, const ConvGeometry &geom);
  std::size_t add_retro_conv(std::string name, std::size_t in,
                             std::size_t weight, std::size_t bias,
                             std::size_t dilation);
  std::size_t add_temporal_avg_pool(std::string name, std::size_t in);
  std::size_t add_deconv2x2(std::string name, std::size_t in,
                            std::size_t weight, std::size_t bias);
  std::size_t add_relu(std::string name, std::size_t in);
  std::size_t add_sigmoid(std::string name, std::size_t in);
  std::size_t add_maxpool2(std::string name, std::size_t in);
  std::size_t add_concat(std::string name, std::vector<std::size_t> ins);

  /// Output node; defaults to the most recently added node.
  void set_output(std::size_t node);
  std::size_t output_node() const { return output_ ? *output_ : nodes_.size() - 1; }

  ParamStore<T> &params() { return params_; }
  const ParamStore<T> &params() const { return params_; }
  const std::vector<Node> &nodes() const { return nodes_; }
  const InputSignature &signature() const { return sig_; }
  std::size_t count(OpKind kind) const;

  /// Runs every node; shape failures surface as GraphError naming the node.
  Trace<T> forward(const Tensor5<T> &x) const;
  Tensor5<T> run(const Tensor5<T> &x) const {
    Trace<T> t = forward(x);
    return std::move(t.outputs[output_node()]);
  }
  /// Reverse sweep in node order. StateError without a forward trace.
  GradStore<T> backward(const Trace<T> &trace, const Tensor5<T> &dy) const;

  /// Test hook: corrupts the backward rule of one op kind (scales its
  /// gradients by 1.5) so gradient checks can be shown to catch it.
  void inject_backward_fault(std::optional<OpKind> kind) { fault_ = kind; }

  /// Same structure with parameters converted to U.
  template <typename U> Graph<U> cast() const;

private:
  template <typename U> friend class Graph;

  std::size_t push(Node node);
  void check_param(std::size_t p) const;
  void check_input(const Tensor5<T> &x) const;

  InputSignature sig_;
  std::vector<Node> nodes_;
  ParamStore<T> params_;
  std::optional<std::size_t> output_;
  std::optional<OpKind> fault_;
};

template <typename T>
template <typename U>
Graph<U> Graph<T>::cast() const {
  Graph<U> g(sig_);
  g.nodes_ = nodes_;
  g.params_ = params_.template cast<U>();
  g.output_ = output_;
  return g;
}

} // namespace rcnet
