#include "strokenet/weights_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <nlohmann/json.hpp>

#include "strokenet/errors.hpp"

namespace strokenet::nn {

namespace {

static_assert(std::endian::native == std::endian::little,
              "weights codec assumes a little-endian host");

template <typename T>
void put(std::vector<std::uint8_t>& out, T value) {
  std::uint8_t raw[sizeof(T)];
  std::memcpy(raw, &value, sizeof(T));
  out.insert(out.end(), raw, raw + sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::string get_string(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw DataError("weights file truncated");
  }

  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

std::string dtype_name(DType d) { return d == DType::F32 ? "f32" : "f64"; }

}  // namespace

std::vector<std::uint8_t> encode_weights(const ModelParams& params, DType dtype) {
  std::vector<std::uint8_t> out{'S', 'S', 'N', 'W'};
  put<std::uint32_t>(out, kWeightsVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.arrays().size()));
  for (const auto& a : params.arrays()) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(a.name.size()));
    out.insert(out.end(), a.name.begin(), a.name.end());
    put<std::uint8_t>(out, static_cast<std::uint8_t>(dtype));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(a.dims.size()));
    for (auto d : a.dims) put<std::uint64_t>(out, d);
    for (double v : a.data) {
      if (dtype == DType::F32)
        put<float>(out, static_cast<float>(v));
      else
        put<double>(out, v);
    }
  }
  return out;
}

ModelParams decode_weights(const std::vector<std::uint8_t>& bytes) {
  Reader in(bytes);
  if (in.get_string(4) != "SSNW") throw DataError("not a weights file (bad magic)");
  const auto version = in.get<std::uint32_t>();
  if (version != kWeightsVersion)
    throw DataError("unsupported weights version " + std::to_string(version));
  const auto count = in.get<std::uint32_t>();
  std::vector<ParamArray> arrays;
  for (std::uint32_t i = 0; i < count; ++i) {
    ParamArray a;
    a.name = in.get_string(in.get<std::uint32_t>());
    const auto dtype = in.get<std::uint8_t>();
    if (dtype != 1 && dtype != 2) throw DataError("unknown dtype code in weights file");
    const auto rank = in.get<std::uint32_t>();
    std::size_t n = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
      a.dims.push_back(static_cast<std::size_t>(in.get<std::uint64_t>()));
      n *= a.dims.back();
    }
    a.data.resize(n);
    for (auto& v : a.data)
      v = dtype == 1 ? static_cast<double>(in.get<float>()) : in.get<double>();
    arrays.push_back(std::move(a));
  }
  if (!in.done()) throw DataError("trailing bytes in weights file");
  return ModelParams(std::move(arrays));
}

void save_weights(const std::filesystem::path& path, const ModelParams& params, DType dtype) {
  const auto bytes = encode_weights(params, dtype);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

ModelParams load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_weights(bytes);
}

std::string weights_to_json(const ModelParams& params, DType dtype) {
  nlohmann::ordered_json doc;
  doc["format"] = "SSNW";
  doc["version"] = kWeightsVersion;
  doc["arrays"] = nlohmann::ordered_json::array();
  for (const auto& a : params.arrays()) {
    nlohmann::ordered_json entry;
    entry["name"] = a.name;
    entry["dtype"] = dtype_name(dtype);
    entry["dims"] = a.dims;
    if (dtype == DType::F32) {
      std::vector<float> narrow(a.data.begin(), a.data.end());
      entry["data"] = narrow;
    } else {
      entry["data"] = a.data;
    }
    doc["arrays"].push_back(std::move(entry));
  }
  return doc.dump();
}

ModelParams weights_from_json(const std::string& text) {
  const auto doc = nlohmann::json::parse(text);
  if (doc.value("format", "") != "SSNW") throw DataError("not a weights JSON document");
  std::vector<ParamArray> arrays;
  for (const auto& entry : doc.at("arrays")) {
    ParamArray a;
    a.name = entry.at("name").get<std::string>();
    a.dims = entry.at("dims").get<std::vector<std::size_t>>();
    a.data = entry.at("data").get<std::vector<double>>();
    std::size_t n = 1;
    for (auto d : a.dims) n *= d;
    if (n != a.data.size()) throw DataError("array '" + a.name + "' data/dims mismatch");
    arrays.push_back(std::move(a));
  }
  return ModelParams(std::move(arrays));
}

}  // namespace strokenet::nn
