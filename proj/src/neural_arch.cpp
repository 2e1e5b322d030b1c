#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <Eigen/QR>

#include "strokenet/errors.hpp"
#include "strokenet/neural.hpp"
#include "strokenet/rng.hpp"

namespace strokenet::nn {

std::string to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::Conv1d: return "conv1d";
    case LayerKind::DenseFlatten: return "dense_flatten";
    case LayerKind::DenseTimeDistributed: return "dense_timedistributed";
    case LayerKind::Gru: return "gru";
    case LayerKind::Bgru: return "bgru";
  }
  return "?";
}

std::string to_string(Activation act) {
  switch (act) {
    case Activation::Relu: return "ReLU";
    case Activation::Tanh: return "tanh";
    case Activation::Linear: return "linear";
  }
  return "?";
}

namespace {

std::string keras_name(const std::string& base, int index) {
  return index == 0 ? base : base + "_" + std::to_string(index);
}

// blocks: filter count and number of layers, input to output.
ArchitectureSpec conv_stack(std::string name, const std::vector<std::pair<std::size_t, int>>& blocks,
                            bool dense_head) {
  ArchitectureSpec spec{std::move(name), 1000, {}};
  std::size_t channels = 1;
  int conv_index = 0;
  int block = 0;
  for (const auto& [filters, repeat] : blocks) {
    for (int i = 0; i < repeat; ++i) {
      spec.layers.push_back({keras_name("conv1d", conv_index++), LayerKind::Conv1d, channels,
                             filters, Activation::Relu, block});
      channels = filters;
    }
    ++block;
  }
  if (dense_head) {
    spec.layers.push_back(
        {"dense", LayerKind::DenseFlatten, channels, spec.window_length, Activation::Linear, block});
  } else {
    spec.layers.push_back({keras_name("conv1d", conv_index), LayerKind::Conv1d, channels, 1,
                           Activation::Linear, block, 1});
  }
  return spec;
}

ArchitectureSpec recurrent_stack(std::string name, LayerKind kind, std::size_t units, int depth) {
  ArchitectureSpec spec{std::move(name), 1000, {}};
  const std::string base = kind == LayerKind::Gru ? "gru" : "bidirectional";
  const std::size_t width = kind == LayerKind::Gru ? units : 2 * units;
  std::size_t channels = 1;
  for (int i = 0; i < depth; ++i) {
    spec.layers.push_back({keras_name(base, i), kind, channels, units, Activation::Tanh, 0});
    channels = width;
  }
  spec.layers.push_back(
      {"dense", LayerKind::DenseTimeDistributed, channels, 1, Activation::Linear, 1});
  return spec;
}

std::string normalize_name(std::string_view name) {
  std::string out;
  for (char c : name) {
    if (c == '+' || c == '_' || c == '-' || c == ' ') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

}  // namespace

const std::vector<std::string>& architecture_names() {
  static const std::vector<std::string> names = {"CNN+dense", "CNNc1",  "CNNc2",  "CNNc3",
                                                 "GRUc1",     "BGRUc1", "BGRUc2", "BGRUc3"};
  return names;
}

ArchitectureSpec build_architecture(std::string_view name) {
  const std::string key = normalize_name(name);
  if (key == "cnndense")
    return conv_stack("CNN+dense", {{64, 2}, {128, 1}, {256, 1}, {512, 2}}, true);
  if (key == "cnnc1") return conv_stack("CNNc1", {{64, 2}, {128, 1}, {256, 1}, {512, 2}}, false);
  if (key == "cnnc2")
    return conv_stack("CNNc2", {{64, 2}, {128, 2}, {256, 2}, {512, 2}, {1024, 2}}, false);
  if (key == "cnnc3")
    return conv_stack("CNNc3", {{64, 3}, {128, 3}, {256, 3}, {512, 3}, {1024, 3}}, false);
  if (key == "gruc1") return recurrent_stack("GRUc1", LayerKind::Gru, 64, 2);
  if (key == "bgruc1") return recurrent_stack("BGRUc1", LayerKind::Bgru, 64, 2);
  if (key == "bgruc2") return recurrent_stack("BGRUc2", LayerKind::Bgru, 64, 4);
  if (key == "bgruc3") return recurrent_stack("BGRUc3", LayerKind::Bgru, 128, 4);
  throw ConfigError("unknown architecture '" + std::string(name) + "'");
}

std::size_t output_channels(const LayerSpec& layer) {
  switch (layer.kind) {
    case LayerKind::Bgru: return 2 * layer.out_units;
    case LayerKind::DenseFlatten: return 1;
    default: return layer.out_units;
  }
}

std::size_t count_params(const LayerSpec& layer, std::size_t time_steps) {
  const std::size_t in = layer.in_channels;
  const std::size_t out = layer.out_units;
  switch (layer.kind) {
    case LayerKind::Conv1d: return layer.kernel_size * in * out + out;
    case LayerKind::DenseFlatten: return time_steps * in * out + out;
    case LayerKind::DenseTimeDistributed: return in * out + out;
    case LayerKind::Gru: return 3 * out * (in + out) + 6 * out;
    case LayerKind::Bgru: return 2 * (3 * out * (in + out) + 6 * out);
  }
  return 0;
}

std::size_t count_params(const ArchitectureSpec& spec) {
  std::size_t total = 0;
  for (const auto& layer : spec.layers) total += count_params(layer, spec.window_length);
  return total;
}

std::string format_count(std::size_t v) {
  std::string digits = std::to_string(v);
  std::string out;
  const int n = static_cast<int>(digits.size());
  for (int i = 0; i < n; ++i) {
    out.push_back(digits[static_cast<std::size_t>(i)]);
    if ((n - i - 1) % 3 == 0 && i != n - 1) out.push_back(',');
  }
  return out;
}

namespace {

std::string keras_type(LayerKind kind) {
  switch (kind) {
    case LayerKind::Conv1d: return "Conv1D";
    case LayerKind::DenseFlatten:
    case LayerKind::DenseTimeDistributed: return "Dense";
    case LayerKind::Gru: return "GRU";
    case LayerKind::Bgru: return "BGRU";
  }
  return "?";
}

}  // namespace

std::string summary_table(const ArchitectureSpec& spec) {
  std::ostringstream os;
  char line[160];
  const auto rule = std::string(78, '-') + "\n";
  os << spec.name << "\n" << rule;
  std::snprintf(line, sizeof line, "%-32s %-20s %14s  %s\n", "layer (type)", "output shape",
                "# parameters", "activation");
  os << line << rule;
  int block = spec.layers.empty() ? 0 : spec.layers.front().block;
  const std::size_t T = spec.window_length;
  for (const auto& layer : spec.layers) {
    if (layer.block != block) {
      os << rule;
      block = layer.block;
    }
    const std::string label = layer.name + " (" + keras_type(layer.kind) + ")";
    if (layer.kind == LayerKind::DenseFlatten) {
      const std::string shape = "(None, " + std::to_string(T * layer.in_channels) + ")";
      std::snprintf(line, sizeof line, "%-32s %-20s %14zu  %s\n", "flatten (Flatten)",
                    shape.c_str(), std::size_t{0}, "-");
      os << line;
      const std::string out_shape = "(None, " + std::to_string(layer.out_units) + ")";
      std::snprintf(line, sizeof line, "%-32s %-20s %14zu  %s\n", label.c_str(), out_shape.c_str(),
                    count_params(layer, T), to_string(layer.activation).c_str());
    } else {
      const std::string shape =
          "(None, " + std::to_string(T) + ", " + std::to_string(output_channels(layer)) + ")";
      std::snprintf(line, sizeof line, "%-32s %-20s %14zu  %s\n", label.c_str(), shape.c_str(),
                    count_params(layer, T), to_string(layer.activation).c_str());
    }
    os << line;
  }
  os << rule << "parameters: " << format_count(count_params(spec)) << "\n";
  return os.str();
}

// ---------------------------------------------------------------------------

std::vector<ParamShape> param_layout(const ArchitectureSpec& spec) {
  std::vector<ParamShape> out;
  for (const auto& layer : spec.layers) {
    const std::size_t in = layer.in_channels;
    const std::size_t units = layer.out_units;
    switch (layer.kind) {
      case LayerKind::Conv1d:
        out.push_back({layer.name + "/kernel", {layer.kernel_size, in, units}});
        out.push_back({layer.name + "/bias", {units}});
        break;
      case LayerKind::DenseFlatten:
        out.push_back({layer.name + "/kernel", {spec.window_length * in, units}});
        out.push_back({layer.name + "/bias", {units}});
        break;
      case LayerKind::DenseTimeDistributed:
        out.push_back({layer.name + "/kernel", {in, units}});
        out.push_back({layer.name + "/bias", {units}});
        break;
      case LayerKind::Gru:
      case LayerKind::Bgru: {
        const std::vector<std::string> dirs =
            layer.kind == LayerKind::Gru ? std::vector<std::string>{""}
                                         : std::vector<std::string>{"forward/", "backward/"};
        for (const auto& dir : dirs) {
          const std::string p = layer.name + "/" + dir;
          out.push_back({p + "W", {in, 3 * units}});
          out.push_back({p + "U", {units, 3 * units}});
          out.push_back({p + "b_w", {3 * units}});
          out.push_back({p + "b_u", {3 * units}});
        }
        break;
      }
    }
  }
  return out;
}

ModelParams::ModelParams(std::vector<ParamArray> arrays) : arrays_(std::move(arrays)) {
  rebuild_index();
}

void ModelParams::rebuild_index() {
  index_.clear();
  for (std::size_t i = 0; i < arrays_.size(); ++i) {
    if (!index_.emplace(arrays_[i].name, i).second)
      throw DataError("duplicate parameter array '" + arrays_[i].name + "'");
  }
}

const ParamArray& ModelParams::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw DataError("missing parameter array '" + name + "'");
  return arrays_[it->second];
}

ParamArray& ModelParams::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw DataError("missing parameter array '" + name + "'");
  return arrays_[it->second];
}

std::size_t ModelParams::total_size() const {
  std::size_t n = 0;
  for (const auto& a : arrays_) n += a.size();
  return n;
}

void ModelParams::set_zero() {
  for (auto& a : arrays_) std::fill(a.data.begin(), a.data.end(), 0.0);
}

void ModelParams::add_scaled(const ModelParams& other, double scale) {
  if (other.arrays_.size() != arrays_.size()) throw DataError("parameter layouts differ");
  for (std::size_t i = 0; i < arrays_.size(); ++i) {
    auto& dst = arrays_[i].data;
    const auto& src = other.arrays_[i].data;
    if (dst.size() != src.size()) throw DataError("parameter layouts differ");
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += scale * src[j];
  }
}

namespace {

std::size_t product(const std::vector<std::size_t>& dims) {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

void guard_size(const ArchitectureSpec& spec, bool allow_large) {
  const auto n = count_params(spec);
  if (n > kLargeModelParams && !allow_large)
    throw ConfigError(spec.name + " has " + std::to_string(n) +
                      " parameters; instantiation requires allow_large");
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

ModelParams ModelParams::zeros(const ArchitectureSpec& spec, bool allow_large) {
  guard_size(spec, allow_large);
  std::vector<ParamArray> arrays;
  for (auto& shape : param_layout(spec))
    arrays.push_back({shape.name, shape.dims, std::vector<double>(product(shape.dims), 0.0)});
  return ModelParams(std::move(arrays));
}

ModelParams init_params(const ArchitectureSpec& spec, std::uint64_t seed, bool allow_large) {
  ModelParams params = ModelParams::zeros(spec, allow_large);
  std::uint64_t stream = 0;
  for (auto& a : params.arrays()) {
    Rng rng(mix_seed(seed, stream++));
    if (a.dims.size() == 1) continue;  // biases stay zero
    if (ends_with(a.name, "/U")) {
      // Orthogonal (h, 3h): Q factor of a Gaussian (3h, h) matrix, transposed.
      const auto h = static_cast<Eigen::Index>(a.dims[0]);
      const auto cols = static_cast<Eigen::Index>(a.dims[1]);
      Eigen::MatrixXd g(cols, h);
      for (Eigen::Index i = 0; i < cols; ++i)
        for (Eigen::Index j = 0; j < h; ++j) g(i, j) = rng.normal();
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
      Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(cols, h);
      // Sign fix makes the factorization unique.
      const Eigen::MatrixXd rmat = qr.matrixQR();
      for (Eigen::Index j = 0; j < h; ++j)
        if (rmat(j, j) < 0) q.col(j) *= -1.0;
      for (Eigen::Index i = 0; i < h; ++i)
        for (Eigen::Index j = 0; j < cols; ++j)
          a.data[static_cast<std::size_t>(i * cols + j)] = q(j, i);
      continue;
    }
    // Glorot uniform; conv kernels count the receptive field in both fans.
    double fan_in, fan_out;
    if (a.dims.size() == 3) {
      fan_in = static_cast<double>(a.dims[0] * a.dims[1]);
      fan_out = static_cast<double>(a.dims[0] * a.dims[2]);
    } else {
      fan_in = static_cast<double>(a.dims[0]);
      fan_out = static_cast<double>(a.dims[1]);
    }
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (auto& v : a.data) v = rng.uniform(-limit, limit);
  }
  return params;
}

void check_params(const ArchitectureSpec& spec, const ModelParams& params) {
  const auto layout = param_layout(spec);
  if (layout.size() != params.arrays().size())
    throw DataError(spec.name + ": expected " + std::to_string(layout.size()) +
                    " parameter arrays, got " + std::to_string(params.arrays().size()));
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const auto& a = params.arrays()[i];
    if (a.name != layout[i].name || a.dims != layout[i].dims ||
        a.data.size() != product(layout[i].dims))
      throw DataError(spec.name + ": parameter array '" + a.name + "' does not match '" +
                      layout[i].name + "'");
  }
}

}  // namespace strokenet::nn
