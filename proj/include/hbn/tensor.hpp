#ifndef HBN_TENSOR_HPP_
#define HBN_TENSOR_HPP_

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace hbn {

/// Dense row-major float tensor. The only numeric container the library
/// passes around; shape is a plain dimension list.
struct RealTensor {
  std::vector<std::uint64_t> shape;
  std::vector<float> data;

  RealTensor() = default;
  explicit RealTensor(std::vector<std::uint64_t> dims)
      : shape(std::move(dims)), data(element_count_of(shape), 0.0f) {}
  RealTensor(std::vector<std::uint64_t> dims, std::vector<float> values)
      : shape(std::move(dims)), data(std::move(values)) {
    if (data.size() != element_count_of(shape))
      throw std::invalid_argument("RealTensor: data length does not match shape");
  }

  static std::uint64_t element_count_of(const std::vector<std::uint64_t>& dims) {
    std::uint64_t n = 1;
    for (auto d : dims) n *= d;
    return n;
  }

  std::uint64_t size() const { return data.size(); }
  std::uint64_t dim(std::size_t i) const { return shape.at(i); }
  std::size_t rank() const { return shape.size(); }

  float& at(std::uint64_t i) { return data[i]; }
  float at(std::uint64_t i) const { return data[i]; }
};

inline std::string shape_to_string(const std::vector<std::uint64_t>& dims) {
  std::string s = "(";
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(dims[i]);
  }
  s += ")";
  return s;
}

}  // namespace hbn

#endif  // HBN_TENSOR_HPP_
