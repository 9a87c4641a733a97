#include "ccnn/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>

#include "ccnn/binary_io.hpp"
#include "ccnn/text_format.hpp"

namespace ccnn {

namespace {

constexpr char kDatasetMagic[5] = "CCDS";
constexpr std::uint32_t kDatasetVersion = 1;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

void CellImageParams::validate() const {
  if (patch_size == 0 || image_size == 0) throw std::invalid_argument("image_size and patch_size must be positive");
  if (image_size % patch_size != 0) {
    throw std::invalid_argument("image_size (" + std::to_string(image_size) + ") must be divisible by patch_size (" +
                                std::to_string(patch_size) + ")");
  }
  if (image_size < 3) throw std::invalid_argument("image_size must be at least 3 for Sobel gradients");
  if (cell_count_min > cell_count_max) throw std::invalid_argument("cell_count_min exceeds cell_count_max");
  if (!(radius_min >= 1.0) || radius_min > radius_max) throw std::invalid_argument("radii must satisfy 1 <= min <= max");
  if (2.0 * radius_max >= static_cast<double>(image_size)) throw std::invalid_argument("cells do not fit the image");
  if (!(intensity_min >= 0.0 && intensity_min <= intensity_max && intensity_max <= 1.0)) {
    throw std::invalid_argument("intensity range must lie in [0, 1]");
  }
  if (!(falloff >= 0.0 && falloff <= 1.0)) throw std::invalid_argument("falloff must lie in [0, 1]");
  if (!(noise_sigma >= 0.0)) throw std::invalid_argument("noise_sigma must be non-negative");
  if (label_threshold > patch_size * patch_size) throw std::invalid_argument("label_threshold exceeds patch area");
}

std::size_t CellImage::mask_count() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

std::size_t Dataset::cell_count() const {
  return static_cast<std::size_t>(
      std::count_if(patches.begin(), patches.end(), [](const auto& p) { return p.label == PatchLabel::cell; }));
}

CellImage render_cells(std::size_t image_size, const std::vector<Cell>& cells, double noise_sigma, Rng& rng,
                       double falloff) {
  if (!(falloff >= 0.0 && falloff <= 1.0)) throw std::invalid_argument("falloff must lie in [0, 1]");
  CellImage img;
  img.gray = RealTensor({image_size, image_size});
  img.mask.assign(image_size * image_size, 0);
  for (const Cell& c : cells) {
    const double reach = c.radius + 1.0;
    const auto lo_r = static_cast<std::ptrdiff_t>(std::max(0.0, std::floor(c.cy - reach)));
    const auto hi_r = static_cast<std::ptrdiff_t>(std::min<double>(image_size - 1, std::ceil(c.cy + reach)));
    const auto lo_c = static_cast<std::ptrdiff_t>(std::max(0.0, std::floor(c.cx - reach)));
    const auto hi_c = static_cast<std::ptrdiff_t>(std::min<double>(image_size - 1, std::ceil(c.cx + reach)));
    for (auto r = lo_r; r <= hi_r; ++r) {
      for (auto col = lo_c; col <= hi_c; ++col) {
        const double d = std::hypot(static_cast<double>(col) - c.cx, static_cast<double>(r) - c.cy);
        const double coverage = std::clamp(c.radius + 0.5 - d, 0.0, 1.0);
        if (coverage <= 0.0) continue;
        const double rel = std::min(d / c.radius, 1.0);
        const double value = c.intensity * coverage * (1.0 - falloff * rel * rel);
        const std::size_t idx = static_cast<std::size_t>(r) * image_size + static_cast<std::size_t>(col);
        img.gray[idx] = std::max(img.gray[idx], value);
        if (d <= c.radius) img.mask[idx] = 1;
      }
    }
  }
  if (noise_sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, noise_sigma);
    for (auto& v : img.gray.values()) v = std::clamp(v + noise(rng), 0.0, 1.0);
  }
  return img;
}

CellImage generate_cell_image(const CellImageParams& p, Rng& rng) {
  p.validate();
  std::uniform_int_distribution<std::size_t> count(p.cell_count_min, p.cell_count_max);
  std::uniform_real_distribution<double> radius(p.radius_min, p.radius_max);
  std::uniform_real_distribution<double> intensity(p.intensity_min, p.intensity_max);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t n = count(rng);
  std::vector<Cell> cells(n);
  const double size = static_cast<double>(p.image_size - 1);
  for (auto& c : cells) {
    c.radius = radius(rng);
    c.intensity = intensity(rng);
    c.cx = c.radius + unit(rng) * (size - 2.0 * c.radius);
    c.cy = c.radius + unit(rng) * (size - 2.0 * c.radius);
  }
  return render_cells(p.image_size, cells, p.noise_sigma, rng, p.falloff);
}

Gradients sobel_gradients(const RealTensor& gray) {
  if (gray.rank() != 2 || gray.dim(0) < 3 || gray.dim(1) < 3) {
    throw std::invalid_argument("sobel_gradients needs a 2-D image of at least 3x3, got " +
                                shape_to_string(gray.shape()));
  }
  const std::size_t rows = gray.dim(0), cols = gray.dim(1);
  auto px = [&](std::ptrdiff_t r, std::ptrdiff_t c) {
    r = std::clamp<std::ptrdiff_t>(r, 0, static_cast<std::ptrdiff_t>(rows) - 1);
    c = std::clamp<std::ptrdiff_t>(c, 0, static_cast<std::ptrdiff_t>(cols) - 1);
    return gray.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
  };
  static constexpr int gx[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
  Gradients g{RealTensor({rows, cols}), RealTensor({rows, cols})};
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      double sx = 0.0, sy = 0.0;
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
          const double v = px(static_cast<std::ptrdiff_t>(r) + i - 1, static_cast<std::ptrdiff_t>(c) + j - 1);
          sx += gx[i][j] * v;
          sy += gx[j][i] * v;  // Gy = Gx^T
        }
      }
      g.ix.at(r, c) = sx;
      g.iy.at(r, c) = sy;
    }
  }
  return g;
}

PatchLabel label_for(std::size_t cell_pixels, std::size_t threshold) {
  return cell_pixels >= threshold ? PatchLabel::cell : PatchLabel::no_cell;
}

std::uint64_t image_seed(std::uint64_t seed, Split split, std::size_t index) {
  const std::uint64_t stream = splitmix64(seed ^ splitmix64(0x5eed0000ULL + static_cast<std::uint64_t>(split)));
  return splitmix64(stream + static_cast<std::uint64_t>(index));
}

Dataset make_dataset(std::size_t images, const CellImageParams& p, Split split) {
  p.validate();
  const std::size_t ps = p.patch_size, tiles = p.image_size / ps;
  Dataset d;
  d.provenance.params = p;
  d.provenance.split = split;
  d.provenance.images = images;
  d.patches.reserve(images * tiles * tiles);
  for (std::size_t n = 0; n < images; ++n) {
    Rng rng(image_seed(p.seed, split, n));
    const CellImage img = generate_cell_image(p, rng);
    const Gradients g = sobel_gradients(img.gray);
    for (std::size_t tr = 0; tr < tiles; ++tr) {
      for (std::size_t tc = 0; tc < tiles; ++tc) {
        LabeledPatch patch;
        patch.gradients = ComplexTensor({1, ps, ps});
        std::size_t count = 0;
        for (std::size_t r = 0; r < ps; ++r) {
          for (std::size_t c = 0; c < ps; ++c) {
            const std::size_t y = tr * ps + r, x = tc * ps + c;
            patch.gradients.at(0, r, c) = Complex{g.ix.at(y, x), g.iy.at(y, x)};
            count += img.mask[y * p.image_size + x];
          }
        }
        patch.cell_pixel_count = static_cast<std::uint16_t>(count);
        patch.label = label_for(count, p.label_threshold);
        d.patches.push_back(std::move(patch));
      }
    }
  }
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& patch : d.patches) {
    for (const auto& z : patch.gradients.values()) {
      lo = std::min({lo, z.real(), z.imag()});
      hi = std::max({hi, z.real(), z.imag()});
    }
  }
  if (d.patches.empty() || !(hi > lo)) {
    lo = 0.0;
    hi = 1.0;
  }
  d.provenance.norm_min = lo;
  d.provenance.norm_max = hi;
  const double scale = 1.0 / (hi - lo);
  for (auto& patch : d.patches) {
    for (auto& z : patch.gradients.values()) z = Complex{(z.real() - lo) * scale, (z.imag() - lo) * scale};
  }
  return d;
}

RealDataset to_real_stacked(const Dataset& d) {
  RealDataset out;
  out.inputs.reserve(d.patches.size());
  for (const auto& p : d.patches) {
    const std::size_t h = p.gradients.dim(1), w = p.gradients.dim(2);
    RealTensor t({2, h, w});
    for (std::size_t i = 0; i < h * w; ++i) {
      t[i] = p.gradients[i].real();
      t[h * w + i] = p.gradients[i].imag();
    }
    out.inputs.push_back(std::move(t));
    out.labels.push_back(p.label);
  }
  return out;
}

using text::parse_number;

namespace {
std::string fmt(double v) { return text::format_double(v); }
}  // namespace

std::string provenance_to_text(const Provenance& p) {
  std::ostringstream os;
  const auto& q = p.params;
  os << "split=" << (p.split == Split::train ? "train" : "test") << '\n'
     << "images=" << p.images << '\n'
     << "image_size=" << q.image_size << '\n'
     << "patch_size=" << q.patch_size << '\n'
     << "cell_count_min=" << q.cell_count_min << '\n'
     << "cell_count_max=" << q.cell_count_max << '\n'
     << "radius_min=" << fmt(q.radius_min) << '\n'
     << "radius_max=" << fmt(q.radius_max) << '\n'
     << "intensity_min=" << fmt(q.intensity_min) << '\n'
     << "intensity_max=" << fmt(q.intensity_max) << '\n'
     << "falloff=" << fmt(q.falloff) << '\n'
     << "noise_sigma=" << fmt(q.noise_sigma) << '\n'
     << "label_threshold=" << q.label_threshold << '\n'
     << "seed=" << q.seed << '\n'
     << "norm_min=" << fmt(p.norm_min) << '\n'
     << "norm_max=" << fmt(p.norm_max) << '\n';
  return os.str();
}

Provenance provenance_from_text(const std::string& text) {
  Provenance p;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("malformed provenance line '" + line + "'");
    const std::string key = line.substr(0, eq), val = line.substr(eq + 1);
    auto& q = p.params;
    if (key == "split") {
      if (val != "train" && val != "test") throw std::invalid_argument("bad split '" + val + "'");
      p.split = val == "train" ? Split::train : Split::test;
    } else if (key == "images") p.images = parse_number<std::size_t>(key, val);
    else if (key == "image_size") q.image_size = parse_number<std::size_t>(key, val);
    else if (key == "patch_size") q.patch_size = parse_number<std::size_t>(key, val);
    else if (key == "cell_count_min") q.cell_count_min = parse_number<std::size_t>(key, val);
    else if (key == "cell_count_max") q.cell_count_max = parse_number<std::size_t>(key, val);
    else if (key == "radius_min") q.radius_min = parse_number<double>(key, val);
    else if (key == "radius_max") q.radius_max = parse_number<double>(key, val);
    else if (key == "intensity_min") q.intensity_min = parse_number<double>(key, val);
    else if (key == "intensity_max") q.intensity_max = parse_number<double>(key, val);
    else if (key == "falloff") q.falloff = parse_number<double>(key, val);
    else if (key == "noise_sigma") q.noise_sigma = parse_number<double>(key, val);
    else if (key == "label_threshold") q.label_threshold = parse_number<std::size_t>(key, val);
    else if (key == "seed") q.seed = parse_number<std::uint64_t>(key, val);
    else if (key == "norm_min") p.norm_min = parse_number<double>(key, val);
    else if (key == "norm_max") p.norm_max = parse_number<double>(key, val);
    else throw std::invalid_argument("unknown provenance key '" + key + "'");
  }
  return p;
}

std::filesystem::path provenance_path(const std::filesystem::path& dataset_path) {
  auto p = dataset_path;
  p.replace_extension(".params.txt");
  return p;
}

void write_dataset(const Dataset& d, const std::filesystem::path& path) {
  const std::size_t ps = d.provenance.params.patch_size;
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os.write(kDatasetMagic, 4);
  io::put_u32(os, kDatasetVersion);
  io::put_u64(os, d.patches.size());
  io::put_u32(os, static_cast<std::uint32_t>(ps));
  io::put_u32(os, static_cast<std::uint32_t>(d.provenance.params.label_threshold));
  for (const auto& p : d.patches) {
    if (p.gradients.size() != ps * ps) throw std::invalid_argument("patch size does not match provenance");
    for (const auto& z : p.gradients.values()) {
      io::put_f64(os, z.real());
      io::put_f64(os, z.imag());
    }
    io::put_u8(os, static_cast<std::uint8_t>(p.label));
    io::put_u16(os, p.cell_pixel_count);
  }
  if (!os) throw std::runtime_error("write failed for " + path.string());
  std::ofstream side(provenance_path(path), std::ios::trunc);
  side << provenance_to_text(d.provenance);
  if (!side) throw std::runtime_error("cannot write provenance next to " + path.string());
}

Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open dataset " + path.string());
  io::expect_magic(is, kDatasetMagic);
  const std::uint32_t version = io::get_u32(is);
  if (version != kDatasetVersion) throw std::runtime_error("unsupported dataset version " + std::to_string(version));
  const std::uint64_t count = io::get_u64(is);
  const std::uint32_t ps = io::get_u32(is);
  const std::uint32_t threshold = io::get_u32(is);
  if (ps == 0 || ps > 4096) throw std::runtime_error("implausible patch size in dataset header");
  Dataset d;
  const auto side = provenance_path(path);
  if (std::filesystem::exists(side)) {
    std::ifstream s(side);
    std::stringstream buf;
    buf << s.rdbuf();
    d.provenance = provenance_from_text(buf.str());
  }
  d.provenance.params.patch_size = ps;
  d.provenance.params.label_threshold = threshold;
  d.patches.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, 1u << 20)));
  for (std::uint64_t n = 0; n < count; ++n) {
    LabeledPatch p;
    p.gradients = ComplexTensor({1, ps, ps});
    for (auto& z : p.gradients.values()) {
      const double re = io::get_f64(is);
      const double im = io::get_f64(is);
      z = Complex{re, im};
    }
    const std::uint8_t label = io::get_u8(is);
    if (label > 1) throw std::runtime_error("bad label byte in dataset");
    p.label = static_cast<PatchLabel>(label);
    p.cell_pixel_count = io::get_u16(is);
    d.patches.push_back(std::move(p));
  }
  return d;
}

}  // namespace ccnn
