#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ccnn/checkpoint.hpp"
#include "ccnn/tensor.hpp"

namespace ccnn {

/// e^{iC} conj(Z) / ||Z||: the unit-norm kernel maximizing |Z . W|.
ComplexTensor phase_matched_kernel(const ComplexTensor& z, double c = 0.0);

/// C* = -arg(sum of entries), the global phase maximizing sum Re(e^{iC} z).
double best_global_phase(const ComplexTensor& entries);

double mean_magnitude(const ComplexTensor& z);

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};

/**
 * Fixed hue wheel: hue = (phase + pi) / 2pi, full saturation, value =
 * |z| / max_magnitude (black when max_magnitude is 0).
 */
Rgb phase_color(const Complex& z, double max_magnitude);
/// Phase encoded by a phase_color pixel, in (-pi, pi]; NaN for black.
double decode_phase(const Rgb& c);

/// 8-bit binary PGM (P5) or PPM (P6).
struct Pixmap {
  std::size_t width = 0, height = 0;
  std::size_t channels = 1;
  std::vector<std::uint8_t> pixels;

  std::string encode() const;
  static Pixmap decode(const std::string& bytes);
};

/**
 * Display files for one kernel of shape (C, kh, kw), channels stacked
 * vertically. Like the usual figures, they show the conjugated entries,
 * which are what the kernel matches: the response to a patch Z is largest
 * when Z's phases follow conj(kernel).
 */
struct KernelRendering {
  ComplexTensor displayed;  // conj(kernel)
  double mean_magnitude = 0.0;
  double max_magnitude = 0.0;
  double global_phase = 0.0;  // C* of the displayed entries
  std::string csv;            // channel,row,col,re,im of the displayed entries
  Pixmap magnitude;           // gray, |z| / max
  Pixmap phase;               // phase_color of the displayed entries
  Pixmap phase_normalized;    // same after multiplying by e^{iC*}
  Pixmap magnitude_normalized;
  std::string sidecar;        // key=value summary
};

KernelRendering render_kernel(const ComplexTensor& kernel);

/// Entries back from a rendering's CSV text.
ComplexTensor parse_kernel_csv(const std::string& csv);

/**
 * Writes kernel_<k>.csv, kernel_<k>_magnitude.pgm, kernel_<k>_phase.ppm,
 * kernel_<k>_phase_normalized.ppm and kernel_<k>.txt for every kernel of the
 * first convolution in the checkpoint. Returns the written paths.
 */
std::vector<std::filesystem::path> export_kernels(const Checkpoint& c, const std::filesystem::path& out_dir);

}  // namespace ccnn
