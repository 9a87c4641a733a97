#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ccnn/optim.hpp"
#include "ccnn/tensor.hpp"

namespace ccnn {

/// Parameters of the synthetic fluorescence-cell generator.
struct CellImageParams {
  std::size_t image_size = 150;
  std::size_t patch_size = 15;
  std::size_t cell_count_min = 15;
  std::size_t cell_count_max = 30;
  double radius_min = 4.0;
  double radius_max = 6.0;
  double intensity_min = 0.5;
  double intensity_max = 1.0;
  double falloff = 0.3;  // relative intensity drop from a cell's center to its rim
  double noise_sigma = 0.02;
  std::size_t label_threshold = 10;
  std::uint64_t seed = 2017;

  void validate() const;
};

struct Cell {
  double cx = 0.0, cy = 0.0;  // pixel coordinates of the center (col, row)
  double radius = 5.0;
  double intensity = 1.0;
};

/// Grayscale image (rows, cols) in [0, 1] and the per-pixel cell mask.
struct CellImage {
  RealTensor gray;
  std::vector<std::uint8_t> mask;

  std::size_t mask_count() const;
};

enum class PatchLabel : std::uint8_t { no_cell = 0, cell = 1 };

struct LabeledPatch {
  ComplexTensor gradients;  // (1, patch, patch): Ix + i Iy, normalized
  PatchLabel label = PatchLabel::no_cell;
  std::uint16_t cell_pixel_count = 0;
};

enum class Split : std::uint8_t { train = 0, test = 1 };

/// Generator parameters plus what was derived from them.
struct Provenance {
  CellImageParams params;
  Split split = Split::train;
  std::size_t images = 0;
  double norm_min = 0.0;  // raw gradient value mapped to 0
  double norm_max = 1.0;  // raw gradient value mapped to 1
};

struct Dataset {
  std::vector<LabeledPatch> patches;
  Provenance provenance;

  std::size_t cell_count() const;
};

/// Stacked-real view: each patch is (2, patch, patch) with channels [Re, Im].
struct RealDataset {
  std::vector<RealTensor> inputs;
  std::vector<PatchLabel> labels;
};

/**
 * Renders discs with anti-aliased edges and a soft radial intensity falloff,
 * combined by maximum, plus clamped Gaussian noise. A pixel belongs to the
 * mask when its center lies within a disc's radius.
 */
CellImage render_cells(std::size_t image_size, const std::vector<Cell>& cells, double noise_sigma, Rng& rng,
                       double falloff = 0.3);

/// Random cells at positions fully inside the image.
CellImage generate_cell_image(const CellImageParams& p, Rng& rng);

/// 3x3 Sobel correlation with edge replication; outputs are the input size.
struct Gradients {
  RealTensor ix;
  RealTensor iy;
};
Gradients sobel_gradients(const RealTensor& gray);

PatchLabel label_for(std::size_t cell_pixels, std::size_t threshold);

/// Seed for image `index` of a split: disjoint streams for train and test.
std::uint64_t image_seed(std::uint64_t seed, Split split, std::size_t index);

/**
 * Images of one split tiled into non-overlapping patches, labeled from the
 * mask, with all gradient components (Re and Im jointly) mapped to [0, 1]
 * by one dataset-wide affine map.
 */
Dataset make_dataset(std::size_t images, const CellImageParams& p, Split split = Split::train);

RealDataset to_real_stacked(const Dataset& d);

// Binary dataset file ("CCDS") and its key=value provenance sidecar.
void write_dataset(const Dataset& d, const std::filesystem::path& path);
Dataset read_dataset(const std::filesystem::path& path);
std::string provenance_to_text(const Provenance& p);
Provenance provenance_from_text(const std::string& text);
/// Sidecar path for a dataset file: "<stem>.params.txt" next to it.
std::filesystem::path provenance_path(const std::filesystem::path& dataset_path);

}  // namespace ccnn
