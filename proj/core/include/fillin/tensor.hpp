#pragma once

#include <cstddef>
#include <vector>

namespace fillin {

/// Dense channel-major 3-D tensor (channels x height x width).
struct Tensor3 {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> data;

  Tensor3() = default;
  Tensor3(int c, int h, int w)
      : channels(c), height(h), width(w), data(static_cast<std::size_t>(c) * h * w, 0.0) {}

  std::size_t index(int c, int y, int x) const {
    return (static_cast<std::size_t>(c) * height + y) * width + x;
  }
  double& at(int c, int y, int x) { return data[index(c, y, x)]; }
  double at(int c, int y, int x) const { return data[index(c, y, x)]; }
  std::size_t size() const { return data.size(); }

  friend bool operator==(const Tensor3&, const Tensor3&) = default;
};

}  // namespace fillin
