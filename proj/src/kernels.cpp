#include "ccnn/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "ccnn/experiment.hpp"
#include "ccnn/text_format.hpp"

namespace ccnn {

namespace {

constexpr double kPi = std::numbers::pi;

std::uint8_t to_byte(double unit) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(unit, 0.0, 1.0) * 255.0));
}

Pixmap magnitude_map(const ComplexTensor& z, std::size_t width, double max_mag) {
  Pixmap p{width, z.size() / width, 1, {}};
  for (const auto& v : z.values()) p.pixels.push_back(max_mag > 0.0 ? to_byte(std::abs(v) / max_mag) : 0);
  return p;
}

Pixmap phase_map(const ComplexTensor& z, std::size_t width, double max_mag) {
  Pixmap p{width, z.size() / width, 3, {}};
  for (const auto& v : z.values()) {
    const Rgb c = phase_color(v, max_mag);
    p.pixels.insert(p.pixels.end(), {c.r, c.g, c.b});
  }
  return p;
}

}  // namespace

ComplexTensor phase_matched_kernel(const ComplexTensor& z, double c) {
  const double norm = frobenius_norm(z);
  if (norm == 0.0) throw std::invalid_argument("phase_matched_kernel: zero patch has no matching kernel");
  ComplexTensor w = conjugated(z);
  w *= std::polar(1.0 / norm, c);
  return w;
}

double best_global_phase(const ComplexTensor& entries) {
  Complex sum{};
  for (const auto& v : entries.values()) sum += v;
  return -phase(sum);
}

double mean_magnitude(const ComplexTensor& z) {
  double s = 0.0;
  for (const auto& v : z.values()) s += std::abs(v);
  return s / static_cast<double>(z.size());
}

Rgb phase_color(const Complex& z, double max_magnitude) {
  if (!(max_magnitude > 0.0)) return {};
  const double v = std::clamp(std::abs(z) / max_magnitude, 0.0, 1.0);
  const double h = (phase(z) + kPi) / (2.0 * kPi) * 6.0;  // [0, 6]
  const double sector = std::floor(h);
  const double f = h - sector;
  const double p = 0.0, q = v * (1.0 - f), t = v * f;
  double r = 0, g = 0, b = 0;
  switch (static_cast<int>(sector) % 6) {
    case 0: r = v, g = t, b = p; break;
    case 1: r = q, g = v, b = p; break;
    case 2: r = p, g = v, b = t; break;
    case 3: r = p, g = q, b = v; break;
    case 4: r = t, g = p, b = v; break;
    default: r = v, g = p, b = q; break;
  }
  return {to_byte(r), to_byte(g), to_byte(b)};
}

double decode_phase(const Rgb& c) {
  const double r = c.r, g = c.g, b = c.b;
  const double mx = std::max({r, g, b}), mn = std::min({r, g, b});
  if (mx == 0.0) return std::numeric_limits<double>::quiet_NaN();
  const double d = mx - mn;
  double h = 0.0;  // in sixths of a turn
  if (d == 0.0) h = 0.0;
  else if (mx == r) h = std::fmod((g - b) / d + 6.0, 6.0);
  else if (mx == g) h = (b - r) / d + 2.0;
  else h = (r - g) / d + 4.0;
  double ph = h / 6.0 * 2.0 * kPi - kPi;
  if (ph <= -kPi) ph += 2.0 * kPi;
  return ph;
}

std::string Pixmap::encode() const {
  if (channels != 1 && channels != 3) throw std::invalid_argument("pixmap must have 1 or 3 channels");
  if (pixels.size() != width * height * channels) throw std::invalid_argument("pixmap size mismatch");
  std::string out = (channels == 1 ? "P5\n" : "P6\n") + std::to_string(width) + ' ' + std::to_string(height) + "\n255\n";
  out.append(pixels.begin(), pixels.end());
  return out;
}

Pixmap Pixmap::decode(const std::string& bytes) {
  std::istringstream is(bytes, std::ios::binary);
  std::string magic;
  std::size_t w = 0, h = 0, maxval = 0;
  is >> magic >> w >> h >> maxval;
  if (!is || (magic != "P5" && magic != "P6") || maxval != 255 || w == 0 || h == 0) {
    throw std::runtime_error("not an 8-bit binary PGM/PPM");
  }
  is.get();  // the single whitespace byte before the raster
  Pixmap p{w, h, magic == "P5" ? 1u : 3u, {}};
  p.pixels.resize(w * h * p.channels);
  if (!is.read(reinterpret_cast<char*>(p.pixels.data()), static_cast<std::streamsize>(p.pixels.size()))) {
    throw std::runtime_error("truncated pixmap raster");
  }
  return p;
}

KernelRendering render_kernel(const ComplexTensor& kernel) {
  if (kernel.rank() != 3) throw std::invalid_argument("kernel must be (channels, rows, cols), got " +
                                                      shape_to_string(kernel.shape()));
  KernelRendering k;
  k.displayed = conjugated(kernel);
  const std::size_t width = kernel.dim(2);
  for (const auto& v : k.displayed.values()) k.max_magnitude = std::max(k.max_magnitude, std::abs(v));
  k.mean_magnitude = mean_magnitude(k.displayed);
  k.global_phase = best_global_phase(k.displayed);

  std::ostringstream csv;
  csv << "channel,row,col,re,im\n";
  for (std::size_t c = 0; c < kernel.dim(0); ++c)
    for (std::size_t r = 0; r < kernel.dim(1); ++r)
      for (std::size_t q = 0; q < kernel.dim(2); ++q) {
        const Complex v = k.displayed.at(c, r, q);
        csv << c << ',' << r << ',' << q << ',' << text::format_double(v.real()) << ','
            << text::format_double(v.imag()) << '\n';
      }
  k.csv = csv.str();

  ComplexTensor normalized = k.displayed;
  normalized *= std::polar(1.0, k.global_phase);
  k.magnitude = magnitude_map(k.displayed, width, k.max_magnitude);
  k.phase = phase_map(k.displayed, width, k.max_magnitude);
  k.magnitude_normalized = magnitude_map(normalized, width, k.max_magnitude);
  k.phase_normalized = phase_map(normalized, width, k.max_magnitude);

  k.sidecar = "shape=" + shape_to_string(kernel.shape()) + "\nmean_magnitude=" + text::format_double(k.mean_magnitude) +
              "\nmax_magnitude=" + text::format_double(k.max_magnitude) +
              "\nglobal_phase=" + text::format_double(k.global_phase) + '\n';
  return k;
}

ComplexTensor parse_kernel_csv(const std::string& csv) {
  std::istringstream is(csv);
  std::string line;
  std::getline(is, line);
  if (line != "channel,row,col,re,im") throw std::runtime_error("unexpected kernel CSV header '" + line + "'");
  struct Entry {
    std::size_t c, r, q;
    Complex v;
  };
  std::vector<Entry> entries;
  std::size_t nc = 0, nr = 0, nq = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (f.size() != 5) throw std::runtime_error("bad kernel CSV row '" + line + "'");
    Entry e{text::parse_number<std::size_t>("channel", f[0]), text::parse_number<std::size_t>("row", f[1]),
            text::parse_number<std::size_t>("col", f[2]),
            Complex{text::parse_number<double>("re", f[3]), text::parse_number<double>("im", f[4])}};
    nc = std::max(nc, e.c + 1), nr = std::max(nr, e.r + 1), nq = std::max(nq, e.q + 1);
    entries.push_back(e);
  }
  if (entries.size() != nc * nr * nq) throw std::runtime_error("kernel CSV does not cover a full grid");
  ComplexTensor z({nc, nr, nq});
  for (const auto& e : entries) z.at(e.c, e.r, e.q) = e.v;
  return z;
}

std::vector<std::filesystem::path> export_kernels(const Checkpoint& c, const std::filesystem::path& out_dir) {
  const auto it = std::find_if(c.spec.layers.begin(), c.spec.layers.end(),
                               [](const LayerSpec& l) { return l.kind == LayerKind::conv; });
  if (it == c.spec.layers.end()) throw std::invalid_argument("checkpoint network has no convolution layer");
  if (c.params.empty()) throw std::invalid_argument("checkpoint holds no parameters");
  // The first convolution's kernels are the first parameter tensor: (K, C, kh, kw).
  const ComplexTensor& kernels = c.params.front();
  if (kernels.rank() != 4) throw std::invalid_argument("first parameter tensor is not a kernel bank");
  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> written;
  const std::size_t per = kernels.size() / kernels.dim(0);
  for (std::size_t k = 0; k < kernels.dim(0); ++k) {
    std::vector<Complex> vals(kernels.values().begin() + static_cast<std::ptrdiff_t>(k * per),
                              kernels.values().begin() + static_cast<std::ptrdiff_t>((k + 1) * per));
    const auto r = render_kernel(ComplexTensor({kernels.dim(1), kernels.dim(2), kernels.dim(3)}, std::move(vals)));
    const std::string stem = "kernel_" + std::to_string(k);
    const std::pair<std::string, std::string> files[] = {
        {stem + ".csv", r.csv},
        {stem + "_magnitude.pgm", r.magnitude.encode()},
        {stem + "_phase.ppm", r.phase.encode()},
        {stem + "_phase_normalized.ppm", r.phase_normalized.encode()},
        {stem + ".txt", r.sidecar},
    };
    for (const auto& [name, bytes] : files) {
      write_text_file(out_dir / name, bytes);
      written.push_back(out_dir / name);
    }
  }
  return written;
}

}  // namespace ccnn
