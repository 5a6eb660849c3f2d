#pragma once

// Model artifact container, kind "CKPT", version 1:
//   u32 meta count, then (str key, str value) pairs
//   u32 tensor count, then per tensor: str name, u8 dtype (4 = f32, 8 = f64),
//   u32 rows, u32 cols, row-major values

#include <map>
#include <string>

#include "intertraj/ad/nn.hpp"

namespace intertraj {

class Checkpoint {
 public:
  std::map<std::string, std::string> meta;

  template <typename S>
  void put(const std::string& name, const ad::Tensor<S>& t) {
    static_assert(std::is_same_v<S, float> || std::is_same_v<S, double>);
    Entry e;
    e.dtype = sizeof(S);
    e.rows = t.rows();
    e.cols = t.cols();
    e.bytes.assign(reinterpret_cast<const char*>(t.data()), sizeof(S) * static_cast<std::size_t>(t.size()));
    tensors_[name] = std::move(e);
  }

  // Values converted to S; throws FormatError when absent.
  template <typename S>
  ad::Tensor<S> get(const std::string& name) const {
    const Entry& e = entry(name);
    ad::Tensor<S> out(e.rows, e.cols);
    if (e.dtype == 4) {
      out = Eigen::Map<const ad::Tensor<float>>(reinterpret_cast<const float*>(e.bytes.data()), e.rows, e.cols)
                .template cast<S>();
    } else {
      out = Eigen::Map<const ad::Tensor<double>>(reinterpret_cast<const double*>(e.bytes.data()), e.rows, e.cols)
                .template cast<S>();
    }
    return out;
  }

  bool has(const std::string& name) const { return tensors_.count(name) > 0; }
  std::size_t tensor_count() const { return tensors_.size(); }

  template <typename S>
  void put_parameters(const ad::ParameterList<S>& params) {
    for (const auto& p : params) put(p.name, p.param->value);
  }

  // Fills every parameter by name; shapes must match exactly.
  template <typename S>
  void get_parameters(const ad::ParameterList<S>& params) const {
    for (const auto& p : params) {
      const Entry& e = entry(p.name);
      if (e.rows != p.param->value.rows() || e.cols != p.param->value.cols())
        throw FormatError("checkpoint tensor '" + p.name + "' has shape " + std::to_string(e.rows) + "x" +
                          std::to_string(e.cols) + ", model expects " + std::to_string(p.param->value.rows()) + "x" +
                          std::to_string(p.param->value.cols()));
      p.param->value = get<S>(p.name);
      p.param->zero_grad();
    }
  }

  const std::string& meta_at(const std::string& key) const;

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);

 private:
  struct Entry {
    std::uint8_t dtype = 4;
    Eigen::Index rows = 0, cols = 0;
    std::string bytes;
  };
  const Entry& entry(const std::string& name) const;
  std::map<std::string, Entry> tensors_;
};

}  // namespace intertraj
