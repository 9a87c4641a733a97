#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ccnn/layers.hpp"
#include "ccnn/tensor.hpp"

namespace ccnn {

enum class Domain { complex, real };
enum class LayerKind { conv, relu, pool, projection, affine };

/// One layer of a network description. Only the fields of its kind are read.
struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  // conv
  std::size_t kernels = 0;
  std::size_t kernel_h = 0;
  std::size_t kernel_w = 0;
  std::size_t stride = 1;
  // affine
  std::size_t out_features = 0;
  PoolSpec pool;
  ProjectionKind projection = ProjectionKind::squared_magnitude;
  SectorParams sector;

  static LayerSpec conv(std::size_t kernels, std::size_t size, std::size_t stride = 1);
  static LayerSpec relu(SectorParams sector = {});
  static LayerSpec max_pool(std::size_t window, std::size_t stride);
  static LayerSpec global_pool();
  static LayerSpec softmax_pool(std::size_t window, std::size_t stride, double alpha, bool dual);
  static LayerSpec project(ProjectionKind kind = ProjectionKind::squared_magnitude);
  static LayerSpec affine(std::size_t out_features);

  bool operator==(const LayerSpec&) const;
};

struct NetworkSpec {
  Domain domain = Domain::complex;
  Shape input;  // (channels, rows, cols)
  std::vector<LayerSpec> layers;

  /// Shape after every layer; index 0 is the input. Throws on any inconsistency.
  std::vector<Shape> shapes() const;
  /// Number of class scores produced by the last layer.
  std::size_t classes() const;
  /// Number of real coordinates in all trainable tensors.
  std::size_t real_parameter_count() const;

  /// Line-oriented text form, stable across runs (used in checkpoints).
  std::string to_text() const;
  static NetworkSpec from_text(const std::string& text);

  bool operator==(const NetworkSpec&) const;
};

struct CellNetOptions {
  std::size_t patch_size = 15;
  std::size_t conv1_kernels = 8;
  std::size_t conv2_kernels = 2;
  std::size_t kernel_size = 5;
  std::size_t pool_window = 2;
  std::size_t pool_stride = 1;
};

/**
 * Complex cell-detection network: conv, sector ReLU, max-by-magnitude pool,
 * conv, sector ReLU, global max-by-magnitude pool, squared-magnitude
 * projection. The class count is the number of second-layer kernels.
 */
NetworkSpec cell_detection_spec(const CellNetOptions& opt = {});

const char* to_string(Domain d);
const char* to_string(LayerKind k);

}  // namespace ccnn
