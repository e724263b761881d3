#include "rcnet/graph.hpp"

#include <algorithm>

namespace rcnet {

std::string_view op_name(OpKind kind) {
  switch (kind) {
  case OpKind::input:
    return "input";
  case OpKind::conv3d:
    return "conv3d";
  case OpKind::retro_conv:
    return "retro_conv";
  case OpKind::temporal_avg_pool:
    return "temporal_avg_pool";
  case OpKind::deconv2x2:
    return "deconv2x2";
  case OpKind::relu:
    return "relu";
  case OpKind::sigmoid:
    return "sigmoid";
  case OpKind::maxpool2:
    return "maxpool2";
  case OpKind::concat:
    return "concat_channels";
  }
  return "?";
}

template <typename T>
std::size_t ParamStore<T>::add(std::string name, Tensor5<T> value) {
  if (contains(name))
    throw ConfigError("duplicate parameter '" + name + "'");
  names_.push_back(std::move(name));
  values_.push_back(std::move(value));
  return values_.size() - 1;
}

template <typename T>
std::size_t ParamStore<T>::index(std::string_view name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end())
    throw ConfigError("unknown parameter '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - names_.begin());
}

template <typename T>
bool ParamStore<T>::contains(std::string_view name) const {
  return std::find(names_.begin(), names_.end(), name) != names_.end();
}

template <typename T>
const Tensor5<T> &GradStore<T>::operator[](std::string_view name) const {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end())
    throw ConfigError("no gradient for '" + std::string(name) + "'");
  return grads[static_cast<std::size_t>(it - names.begin())];
}

template <typename T> Graph<T>::Graph(InputSignature sig) : sig_(sig) {
  nodes_.push_back(Node{OpKind::input, "input", {}, {}, {}, 1});
}

template <typename T> std::size_t Graph<T>::push(Node node) {
  for (std::size_t in : node.inputs)
    if (in >= nodes_.size())
      throw ConfigError("node '" + node.name + "' references node " +
                        std::to_string(in) + " that does not precede it");
  for (std::size_t p : node.params)
    check_param(p);
  nodes_.push_back(std::move(node));
  return nodes_.size() - 1;
}

template <typename T> void Graph<T>::check_param(std::size_t p) const {
  if (p >= params_.size())
    throw ConfigError("parameter id " + std::to_string(p) + " does not exist");
}

template <typename T>
std::size_t Graph<T>::add_conv3d(std::string name, std::size_t in,
                                 std::size_t weight, std::size_t bias,
                                 const ConvGeometry &geom) {
  Node n{OpKind::conv3d, std::move(name), {in}, {weight, bias}, geom, 1};
  return push(std::move(n));
}

template <typename T>
std::size_t Graph<T>::add_retro_conv(std::string name, std::size_t in,
                                     std::size_t weight, std::size_t bias,
                                     std::size_t dilation) {
  Node n{OpKind::retro_conv, std::move(name), {in}, {weight, bias}, {}, dilation};
  return push(std::move(n));
}

template <typename T>
std::size_t Graph<T>::add_temporal_avg_pool(std::string name, std::size_t in) {
  return push(Node{OpKind::temporal_avg_pool, std::move(name), {in}, {}, {}, 1});
}

template <typename T>
std::size_t Graph<T>::add_deconv2x2(std::string name, std::size_t in,
                                    std::size_t weight, std::size_t bias) {
  return push(
      Node{OpKind::deconv2x2, std::move(name), {in}, {weight, bias}, {}, 1});
}

template <typename T>
std::size_t Graph<T>::add_relu(std::string name, std::size_t in) {
  return push(Node{OpKind::relu, std::move(name), {in}, {}, {}, 1});
}

template <typename T>
std::size_t Graph<T>::add_sigmoid(std::string name, std::size_t in) {
  return push(Node{OpKind::sigmoid, std::move(name), {in}, {}, {}, 1});
}

template <typename T>
std::size_t Graph<T>::add_maxpool2(std::string name, std::size_t in) {
  return push(Node{OpKind::maxpool2, std::move(name), {in}, {}, {}, 1});
}

template <typename T>
std::size_t Graph<T>::add_concat(std::string name, std::vector<std::size_t> ins) {
  if (ins.empty())
    throw ConfigError("concat node '" + name + "' has no inputs");
  return push(Node{OpKind::concat, std::move(name), std::move(ins), {}, {}, 1});
}

template <typename T> void Graph<T>::set_output(std::size_t node) {
  if (node >= nodes_.size())
    throw ConfigError("output node " + std::to_string(node) + " does not exist");
  output_ = node;
}

template <typename T> std::size_t Graph<T>::count(OpKind kind) const {
  return static_cast<std::size_t>(std::count_if(
      nodes_.begin(), nodes_.end(), [&](const Node &n) { return n.kind == kind; }));
}

template <typename T> void Graph<T>::check_input(const Tensor5<T> &x) const {
  const Dims5 &d = x.dims();
  if (x.empty())
    throw GraphError("input", "empty input tensor");
  if (d.c != sig_.channels)
    throw GraphError("input", "expected " + std::to_string(sig_.channels) +
                                  " channels, got " + d.str());
  if (d.l < sig_.min_length)
    throw GraphError("input", "clip length " + std::to_string(d.l) +
                                  " below minimum " +
                                  std::to_string(sig_.min_length));
  if (d.h % sig_.spatial_multiple != 0 || d.w % sig_.spatial_multiple != 0)
    throw GraphError("input", "spatial dims " + d.str() +
                                  " not divisible by " +
                                  std::to_string(sig_.spatial_multiple));
}

template <typename T> Trace<T> Graph<T>::forward(const Tensor5<T> &x) const {
  check_input(x);
  Trace<T> tr;
  tr.outputs.resize(nodes_.size());
  tr.outputs[0] = x;
  for (std::size_t k = 1; k < nodes_.size(); ++k) {
    const Node &n = nodes_[k];
    const Tensor5<T> &in = tr.outputs[n.inputs[0]];
    try {
      switch (n.kind) {
      case OpKind::input:
        tr.outputs[k] = in;
        break;
      case OpKind::conv3d:
        tr.outputs[k] =
            conv3d(in, params_[n.params[0]], params_[n.params[1]], n.geom);
        break;
      case OpKind::retro_conv:
        tr.outputs[k] = retro_conv(in, params_[n.params[0]],
                                   params_[n.params[1]], n.dilation);
        break;
      case OpKind::temporal_avg_pool:
        tr.outputs[k] = temporal_avg_pool(in);
        break;
      case OpKind::deconv2x2:
        tr.outputs[k] = deconv2x2(in, params_[n.params[0]], params_[n.params[1]]);
        break;
      case OpKind::relu:
        tr.outputs[k] = relu(in);
        break;
      case OpKind::sigmoid:
        tr.outputs[k] = sigmoid(in);
        break;
      case OpKind::maxpool2:
        tr.outputs[k] = maxpool2(in);
        break;
      case OpKind::concat: {
        Tensor5<T> acc = in;
        for (std::size_t q = 1; q < n.inputs.size(); ++q)
          acc = concat_channels(acc, tr.outputs[n.inputs[q]]);
        tr.outputs[k] = std::move(acc);
        break;
      }
      }
    } catch (const GraphError &) {
      throw;
    } catch (const Error &e) {
      throw GraphError(n.name, e.what());
    }
  }
  return tr;
}

namespace {

template <typename T> void add_into(Tensor5<T> &acc, const Tensor5<T> &g) {
  if (acc.empty()) {
    acc = g;
    return;
  }
  T *a = acc.data();
  const T *b = g.data();
  for (std::size_t k = 0; k < acc.size(); ++k)
    a[k] += b[k];
}

template <typename T> void scale(Tensor5<T> &t, T s) {
  for (T &v : t.flat())
    v *= s;
}

} // namespace

template <typename T>
GradStore<T> Graph<T>::backward(const Trace<T> &trace,
                                const Tensor5<T> &dy) const {
  if (!trace.valid() || trace.outputs.size() != nodes_.size())
    throw StateError("backward called without a matching forward trace");
  const std::size_t out = output_node();
  if (dy.dims() != trace.outputs[out].dims())
    throw ShapeError("loss gradient dims " + dy.dims().str() +
                     " do not match output " + trace.outputs[out].dims().str());

  GradStore<T> gs;
  for (std::size_t p = 0; p < params_.size(); ++p) {
    gs.names.push_back(params_.name(p));
    gs.grads.emplace_back(params_[p].dims());
  }
  std::vector<Tensor5<T>> node_grad(nodes_.size());
  node_grad[out] = dy;

  for (std::size_t k = out; k >= 1; --k) {
    if (node_grad[k].empty())
      continue;
    const Node &n = nodes_[k];
    Tensor5<T> &g = node_grad[k];
    const Tensor5<T> &in = trace.outputs[n.inputs[0]];
    const bool faulty = fault_ && *fault_ == n.kind;
    switch (n.kind) {
    case OpKind::input:
      add_into(node_grad[n.inputs[0]], g);
      break;
    case OpKind::conv3d:
    case OpKind::retro_conv:
    case OpKind::deconv2x2: {
      ConvGrads<T> cg =
          n.kind == OpKind::conv3d
              ? conv3d_backward(in, params_[n.params[0]], n.geom, g)
          : n.kind == OpKind::retro_conv
              ? retro_conv_backward(in, params_[n.params[0]], n.dilation, g)
              : deconv2x2_backward(in, params_[n.params[0]], g);
      if (faulty) {
        scale(cg.dx, T(1.5));
        scale(cg.dweight, T(1.5));
        scale(cg.dbias, T(1.5));
      }
      add_into(gs.grads[n.params[0]], cg.dweight);
      add_into(gs.grads[n.params[1]], cg.dbias.reshaped(params_[n.params[1]].dims()));
      add_into(node_grad[n.inputs[0]], cg.dx);
      break;
    }
    default: {
      Tensor5<T> dx;
      switch (n.kind) {
      case OpKind::temporal_avg_pool:
        dx = temporal_avg_pool_backward(in.dims(), g);
        break;
      case OpKind::relu:
        dx = relu_backward(in, g);
        break;
      case OpKind::sigmoid:
        dx = sigmoid_backward(trace.outputs[k], g);
        break;
      case OpKind::maxpool2:
        dx = maxpool2_backward(in, g);
        break;
      case OpKind::concat: {
        std::size_t first = 0;
        for (std::size_t q = 0; q < n.inputs.size(); ++q) {
          const std::size_t cq = trace.outputs[n.inputs[q]].dims().c;
          Tensor5<T> part = slice_channels(g, first, cq);
          if (faulty)
            scale(part, T(1.5));
          add_into(node_grad[n.inputs[q]], part);
          first += cq;
        }
        break;
      }
      default:
        break;
      }
      if (n.kind != OpKind::concat) {
        if (faulty)
          scale(dx, T(1.5));
        add_into(node_grad[n.inputs[0]], dx);
      }
      break;
    }
    }
    g = Tensor5<T>(); // release early
  }
  gs.input = node_grad[0].empty() ? Tensor5<T>(trace.outputs[0].dims())
                                  : std::move(node_grad[0]);
  return gs;
}

template class ParamStore<float>;
template class ParamStore<double>;
template struct GradStore<float>;
template struct GradStore<double>;
template class Graph<float>;
template class Graph<double>;
template class ParamStore<long double>;
template struct GradStore<long double>;
template class Graph<long double>;

} // namespace rcnet
