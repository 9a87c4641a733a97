#pragma once

#include <cstddef>
#include <stdexcept>

#include "ccnn/layers.hpp"

namespace ccnn {

// Window enumeration shared by the pooling layers. Output cell o of a
// (channels, out_h, out_w) result covers a per-channel window of the input.
struct PoolGeometry {
  std::size_t channels = 0, in_h = 0, in_w = 0;
  std::size_t win_h = 0, win_w = 0, stride = 1;
  std::size_t out_h = 0, out_w = 0;

  static PoolGeometry of(const Shape& input, const PoolSpec& p) {
    if (input.size() != 3) throw std::invalid_argument("pooling expects (channels, rows, cols), got " + shape_to_string(input));
    PoolGeometry g;
    g.channels = input[0];
    g.in_h = input[1];
    g.in_w = input[2];
    if (p.kind == PoolKind::global_max_by_magnitude) {
      g.win_h = g.in_h;
      g.win_w = g.in_w;
      g.stride = 1;
    } else {
      g.win_h = p.window_h;
      g.win_w = p.window_w;
      g.stride = p.stride;
    }
    if (g.win_h > g.in_h || g.win_w > g.in_w) {
      throw std::invalid_argument("pool window larger than input " + shape_to_string(input));
    }
    g.out_h = (g.in_h - g.win_h) / g.stride + 1;
    g.out_w = (g.in_w - g.win_w) / g.stride + 1;
    return g;
  }

  std::size_t output_size() const { return channels * out_h * out_w; }

  /// Calls f(flat input index) for every cell of output o's window, row-major.
  template <typename F>
  void for_each_in_window(std::size_t o, F&& f) const {
    const std::size_t per_channel = out_h * out_w;
    const std::size_t c = o / per_channel;
    const std::size_t oy = (o % per_channel) / out_w;
    const std::size_t ox = o % out_w;
    for (std::size_t r = 0; r < win_h; ++r)
      for (std::size_t col = 0; col < win_w; ++col) f((c * in_h + oy * stride + r) * in_w + ox * stride + col);
  }
};

/// Pooling that keeps the window element with the largest key; ties go to the
/// first element in row-major scan order.
template <typename T, typename Key>
PoolResult<T> argmax_pool(const Tensor<T>& input, const PoolSpec& p, Key key) {
  const PoolGeometry g = PoolGeometry::of(input.shape(), p);
  PoolResult<T> res;
  res.input_shape = input.shape();
  res.output = Tensor<T>({g.channels, g.out_h, g.out_w});
  res.argmax.resize(g.output_size());
  const T* in = input.data().data();
  std::size_t o = 0;
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t oy = 0; oy < g.out_h; ++oy) {
      for (std::size_t ox = 0; ox < g.out_w; ++ox, ++o) {
        const std::size_t corner = (c * g.in_h + oy * g.stride) * g.in_w + ox * g.stride;
        std::size_t best = corner;
        double best_key = key(in[corner]);
        for (std::size_t r = 0; r < g.win_h; ++r) {
          const std::size_t row = corner + r * g.in_w;
          for (std::size_t col = r == 0 ? 1 : 0; col < g.win_w; ++col) {
            const double k = key(in[row + col]);
            if (k > best_key) {
              best = row + col;
              best_key = k;
            }
          }
        }
        res.argmax[o] = best;
        res.output[o] = in[best];
      }
    }
  }
  return res;
}

}  // namespace ccnn
