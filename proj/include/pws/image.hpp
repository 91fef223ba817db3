#pragma once

#include <cstddef>
#include <vector>

namespace pws {

/// K x H x W float image stored channel-major, then row, then column.
struct Image {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<float> data;

  Image() = default;
  Image(int k, int h, int w, float fill = 0.0f)
      : channels(k), height(h), width(w),
        data(static_cast<std::size_t>(k) * static_cast<std::size_t>(h) * static_cast<std::size_t>(w), fill) {}

  std::size_t plane_size() const { return static_cast<std::size_t>(height) * static_cast<std::size_t>(width); }
  std::size_t index(int k, int row, int col) const {
    return static_cast<std::size_t>(k) * plane_size() + static_cast<std::size_t>(row) * width + col;
  }
  float& at(int k, int row, int col) { return data[index(k, row, col)]; }
  float at(int k, int row, int col) const { return data[index(k, row, col)]; }

  bool same_shape(const Image& other) const {
    return channels == other.channels && height == other.height && width == other.width;
  }

  friend bool operator==(const Image&, const Image&) = default;
};

}  // namespace pws
