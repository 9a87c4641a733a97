#include "ccnn/network_spec.hpp"

#include <charconv>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>

#include "ccnn/pool_windows.hpp"

namespace ccnn {

LayerSpec LayerSpec::conv(std::size_t kernels, std::size_t size, std::size_t stride) {
  LayerSpec l;
  l.kind = LayerKind::conv;
  l.kernels = kernels;
  l.kernel_h = l.kernel_w = size;
  l.stride = stride;
  return l;
}

LayerSpec LayerSpec::relu(SectorParams sector) {
  LayerSpec l;
  l.kind = LayerKind::relu;
  l.sector = sector;
  return l;
}

LayerSpec LayerSpec::max_pool(std::size_t window, std::size_t stride) {
  LayerSpec l;
  l.kind = LayerKind::pool;
  l.pool = PoolSpec{window, window, stride, PoolKind::max_by_magnitude, 0.0};
  return l;
}

LayerSpec LayerSpec::global_pool() {
  LayerSpec l;
  l.kind = LayerKind::pool;
  l.pool = PoolSpec{1, 1, 1, PoolKind::global_max_by_magnitude, 0.0};
  return l;
}

LayerSpec LayerSpec::softmax_pool(std::size_t window, std::size_t stride, double alpha, bool dual) {
  LayerSpec l;
  l.kind = LayerKind::pool;
  l.pool = PoolSpec{window, window, stride, dual ? PoolKind::dual_softmax : PoolKind::softmax, alpha};
  return l;
}

LayerSpec LayerSpec::project(ProjectionKind kind) {
  LayerSpec l;
  l.kind = LayerKind::projection;
  l.projection = kind;
  return l;
}

LayerSpec LayerSpec::affine(std::size_t out_features) {
  LayerSpec l;
  l.kind = LayerKind::affine;
  l.out_features = out_features;
  return l;
}

bool LayerSpec::operator==(const LayerSpec& o) const {
  if (kind != o.kind) return false;
  switch (kind) {
    case LayerKind::conv:
      return kernels == o.kernels && kernel_h == o.kernel_h && kernel_w == o.kernel_w && stride == o.stride;
    case LayerKind::relu:
      return sector == o.sector;
    case LayerKind::pool:
      return pool == o.pool;
    case LayerKind::projection:
      return projection == o.projection;
    case LayerKind::affine:
      return out_features == o.out_features;
  }
  return false;
}

bool NetworkSpec::operator==(const NetworkSpec& o) const {
  return domain == o.domain && input == o.input && layers == o.layers;
}

const char* to_string(Domain d) { return d == Domain::complex ? "complex" : "real"; }

const char* to_string(LayerKind k) {
  switch (k) {
    case LayerKind::conv: return "conv";
    case LayerKind::relu: return "relu";
    case LayerKind::pool: return "pool";
    case LayerKind::projection: return "projection";
    case LayerKind::affine: return "affine";
  }
  return "?";
}

std::vector<Shape> NetworkSpec::shapes() const {
  if (input.size() != 3) throw std::invalid_argument("network input must be (channels, rows, cols)");
  for (auto e : input)
    if (e == 0) throw std::invalid_argument("network input extents must be >= 1");
  std::vector<Shape> out{input};
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    const Shape& in = out.back();
    const std::string where = "layer " + std::to_string(i) + " (" + to_string(l.kind) + "): ";
    switch (l.kind) {
      case LayerKind::conv: {
        if (l.kernels == 0 || l.kernel_h == 0 || l.kernel_w == 0 || l.stride == 0) {
          throw std::invalid_argument(where + "kernel count, extents and stride must be >= 1");
        }
        if (l.kernel_h > in[1] || l.kernel_w > in[2]) {
          throw std::invalid_argument(where + "kernel larger than input " + shape_to_string(in));
        }
        out.push_back({l.kernels, (in[1] - l.kernel_h) / l.stride + 1, (in[2] - l.kernel_w) / l.stride + 1});
        break;
      }
      case LayerKind::relu:
        out.push_back(in);
        break;
      case LayerKind::pool: {
        l.pool.validate();
        if (domain == Domain::real && (l.pool.kind == PoolKind::softmax || l.pool.kind == PoolKind::dual_softmax)) {
          throw std::invalid_argument(where + "softmax pooling is only available in complex networks");
        }
        const PoolGeometry g = PoolGeometry::of(in, l.pool);
        out.push_back({g.channels, g.out_h, g.out_w});
        break;
      }
      case LayerKind::projection:
        if (domain != Domain::complex) throw std::invalid_argument(where + "projection needs a complex network");
        out.push_back(in);
        break;
      case LayerKind::affine:
        if (l.out_features == 0) throw std::invalid_argument(where + "out_features must be >= 1");
        out.push_back({l.out_features, 1, 1});
        break;
    }
  }
  return out;
}

std::size_t NetworkSpec::classes() const {
  const auto s = shapes();
  if (domain == Domain::complex) {
    bool projected = false;
    for (const auto& l : layers) projected = projected || l.kind == LayerKind::projection;
    if (layers.empty() || layers.back().kind != LayerKind::projection || !projected) {
      throw std::invalid_argument("a complex network must end with a projection layer to produce real scores");
    }
  }
  return Tensor<double>::count(s.back());
}

std::size_t NetworkSpec::real_parameter_count() const {
  const auto s = shapes();
  const std::size_t per = domain == Domain::complex ? 2 : 1;
  std::size_t n = 0;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    if (l.kind == LayerKind::conv) n += per * (l.kernels * s[i][0] * l.kernel_h * l.kernel_w + l.kernels);
    if (l.kind == LayerKind::affine) n += per * (l.out_features * Tensor<double>::count(s[i]) + l.out_features);
  }
  return n;
}

namespace {

std::string fmt_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw std::invalid_argument("bad number '" + s + "'");
  return v;
}

std::size_t parse_size(const std::string& s) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw std::invalid_argument("bad integer '" + s + "'");
  return v;
}

std::pair<std::size_t, std::size_t> parse_extent(const std::string& s) {
  const auto x = s.find('x');
  if (x == std::string::npos) throw std::invalid_argument("bad extent '" + s + "', expected HxW");
  return {parse_size(s.substr(0, x)), parse_size(s.substr(x + 1))};
}

const char* pool_kind_name(PoolKind k) {
  switch (k) {
    case PoolKind::max_by_magnitude: return "max";
    case PoolKind::softmax: return "softmax";
    case PoolKind::dual_softmax: return "dual_softmax";
    case PoolKind::global_max_by_magnitude: return "global";
  }
  return "?";
}

PoolKind parse_pool_kind(const std::string& s) {
  if (s == "max") return PoolKind::max_by_magnitude;
  if (s == "softmax") return PoolKind::softmax;
  if (s == "dual_softmax") return PoolKind::dual_softmax;
  if (s == "global") return PoolKind::global_max_by_magnitude;
  throw std::invalid_argument("unknown pool kind '" + s + "'");
}

}  // namespace

std::string NetworkSpec::to_text() const {
  std::ostringstream os;
  os << "domain " << to_string(domain) << '\n';
  os << "input " << input.at(0) << ' ' << input.at(1) << ' ' << input.at(2) << '\n';
  for (const auto& l : layers) {
    os << "layer " << to_string(l.kind);
    switch (l.kind) {
      case LayerKind::conv:
        os << " kernels=" << l.kernels << " size=" << l.kernel_h << 'x' << l.kernel_w << " stride=" << l.stride;
        break;
      case LayerKind::relu:
        os << " theta1=" << fmt_double(l.sector.theta1) << " theta2=" << fmt_double(l.sector.theta2);
        break;
      case LayerKind::pool:
        os << " kind=" << pool_kind_name(l.pool.kind) << " window=" << l.pool.window_h << 'x' << l.pool.window_w
           << " stride=" << l.pool.stride << " alpha=" << fmt_double(l.pool.alpha);
        break;
      case LayerKind::projection:
        os << " kind=" << (l.projection == ProjectionKind::squared_magnitude ? "squared_magnitude" : "magnitude");
        break;
      case LayerKind::affine:
        os << " out=" << l.out_features;
        break;
    }
    os << '\n';
  }
  return os.str();
}

NetworkSpec NetworkSpec::from_text(const std::string& text) {
  NetworkSpec spec;
  std::istringstream is(text);
  std::string line;
  bool have_domain = false, have_input = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string head;
    ls >> head;
    if (head == "domain") {
      std::string d;
      ls >> d;
      if (d == "complex") spec.domain = Domain::complex;
      else if (d == "real") spec.domain = Domain::real;
      else throw std::invalid_argument("unknown domain '" + d + "'");
      have_domain = true;
    } else if (head == "input") {
      std::size_t c = 0, h = 0, w = 0;
      if (!(ls >> c >> h >> w)) throw std::invalid_argument("malformed input line");
      spec.input = {c, h, w};
      have_input = true;
    } else if (head == "layer") {
      std::string kind;
      ls >> kind;
      std::map<std::string, std::string> kv;
      std::string tok;
      while (ls >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("malformed layer field '" + tok + "'");
        kv[tok.substr(0, eq)] = tok.substr(eq + 1);
      }
      auto get = [&](const char* key) -> const std::string& {
        auto it = kv.find(key);
        if (it == kv.end()) throw std::invalid_argument("layer " + kind + " missing field " + key);
        return it->second;
      };
      LayerSpec l;
      if (kind == "conv") {
        const auto [h, w] = parse_extent(get("size"));
        l = LayerSpec::conv(parse_size(get("kernels")), h, parse_size(get("stride")));
        l.kernel_w = w;
      } else if (kind == "relu") {
        l = LayerSpec::relu(SectorParams(parse_double(get("theta1")), parse_double(get("theta2"))));
      } else if (kind == "pool") {
        const auto [h, w] = parse_extent(get("window"));
        l.kind = LayerKind::pool;
        l.pool = PoolSpec{h, w, parse_size(get("stride")), parse_pool_kind(get("kind")), parse_double(get("alpha"))};
      } else if (kind == "projection") {
        const auto& k = get("kind");
        if (k != "squared_magnitude" && k != "magnitude") throw std::invalid_argument("unknown projection " + k);
        l = LayerSpec::project(k == "magnitude" ? ProjectionKind::magnitude : ProjectionKind::squared_magnitude);
      } else if (kind == "affine") {
        l = LayerSpec::affine(parse_size(get("out")));
      } else {
        throw std::invalid_argument("unknown layer kind '" + kind + "'");
      }
      spec.layers.push_back(l);
    } else {
      throw std::invalid_argument("unknown network spec line '" + line + "'");
    }
  }
  if (!have_domain || !have_input) throw std::invalid_argument("network spec needs domain and input lines");
  spec.shapes();
  return spec;
}

NetworkSpec cell_detection_spec(const CellNetOptions& opt) {
  NetworkSpec s;
  s.domain = Domain::complex;
  s.input = {1, opt.patch_size, opt.patch_size};
  s.layers = {
      LayerSpec::conv(opt.conv1_kernels, opt.kernel_size),
      LayerSpec::relu(),
      LayerSpec::max_pool(opt.pool_window, opt.pool_stride),
      LayerSpec::conv(opt.conv2_kernels, opt.kernel_size),
      LayerSpec::relu(),
      LayerSpec::global_pool(),
      LayerSpec::project(ProjectionKind::squared_magnitude),
  };
  s.shapes();
  return s;
}

}  // namespace ccnn
