#include "ccnn/checkpoint.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ccnn/binary_io.hpp"

namespace ccnn {

namespace {

constexpr char kMagic[5] = "CCNN";

void put_tensors(std::ostream& os, const std::vector<ComplexTensor>& ts, bool complex) {
  io::put_u32(os, static_cast<std::uint32_t>(ts.size()));
  for (const auto& t : ts) {
    io::put_u32(os, static_cast<std::uint32_t>(t.rank()));
    for (auto e : t.shape()) io::put_u64(os, e);
    for (const auto& z : t.values()) {
      io::put_f64(os, z.real());
      if (complex) io::put_f64(os, z.imag());
    }
  }
}

std::vector<ComplexTensor> get_tensors(std::istream& is, bool complex) {
  const std::uint32_t n = io::get_u32(is);
  if (n > 4096) throw std::runtime_error("implausible tensor count in checkpoint");
  std::vector<ComplexTensor> out;
  for (std::uint32_t k = 0; k < n; ++k) {
    const std::uint32_t rank = io::get_u32(is);
    if (rank == 0 || rank > 8) throw std::runtime_error("implausible tensor rank in checkpoint");
    Shape shape(rank);
    std::uint64_t total = 1;
    for (auto& e : shape) {
      e = io::get_u64(is);
      if (e == 0 || e > (1u << 24)) throw std::runtime_error("implausible tensor extent in checkpoint");
      total *= e;
      if (total > (1u << 26)) throw std::runtime_error("implausible tensor size in checkpoint");
    }
    ComplexTensor t(shape);
    for (auto& z : t.values()) {
      const double re = io::get_f64(is);
      const double im = complex ? io::get_f64(is) : 0.0;
      z = Complex{re, im};
    }
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace

bool MetricsRow::same_values(const MetricsRow& o) const {
  return iteration == o.iteration && epoch == o.epoch && train_loss == o.train_loss && test_loss == o.test_loss &&
         train_acc == o.train_acc && test_acc == o.test_acc;
}

std::string rng_to_text(const Rng& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

Rng rng_from_text(const std::string& text) {
  Rng rng;
  std::istringstream is(text);
  is >> rng;
  if (!is) throw std::runtime_error("malformed rng state");
  return rng;
}

std::string Checkpoint::to_bytes() const {
  const bool complex = spec.domain == Domain::complex;
  std::ostringstream os(std::ios::binary);
  os.write(kMagic, 4);
  io::put_u32(os, kVersion);
  io::put_string(os, spec.to_text());
  io::put_string(os, config_text);
  io::put_u64(os, iteration);
  io::put_string(os, rng_state);
  io::put_u8(os, static_cast<std::uint8_t>(status));
  io::put_string(os, message);
  put_tensors(os, params, complex);
  put_tensors(os, velocity, complex);
  io::put_u64(os, metrics.size());
  for (const auto& m : metrics) {
    io::put_u64(os, m.iteration);
    io::put_u64(os, m.epoch);
    io::put_f64(os, m.train_loss);
    io::put_f64(os, m.test_loss);
    io::put_f64(os, m.train_acc);
    io::put_f64(os, m.test_acc);
  }
  return os.str();
}

Checkpoint Checkpoint::from_bytes(const std::string& bytes) {
  std::istringstream is(bytes, std::ios::binary);
  io::expect_magic(is, kMagic);
  const std::uint32_t version = io::get_u32(is);
  if (version != kVersion) {
    throw std::runtime_error("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                             std::to_string(kVersion) + ")");
  }
  Checkpoint c;
  c.spec = NetworkSpec::from_text(io::get_string(is));
  c.config_text = io::get_string(is);
  c.iteration = io::get_u64(is);
  c.rng_state = io::get_string(is);
  rng_from_text(c.rng_state);
  const std::uint8_t status = io::get_u8(is);
  if (status > 2) throw std::runtime_error("bad run status in checkpoint");
  c.status = static_cast<RunStatus>(status);
  c.message = io::get_string(is);
  const bool complex = c.spec.domain == Domain::complex;
  c.params = get_tensors(is, complex);
  c.velocity = get_tensors(is, complex);
  const std::uint64_t rows = io::get_u64(is);
  if (rows > (1u << 24)) throw std::runtime_error("implausible metrics row count in checkpoint");
  for (std::uint64_t r = 0; r < rows; ++r) {
    MetricsRow m;
    m.iteration = io::get_u64(is);
    m.epoch = io::get_u64(is);
    m.train_loss = io::get_f64(is);
    m.test_loss = io::get_f64(is);
    m.train_acc = io::get_f64(is);
    m.test_acc = io::get_f64(is);
    c.metrics.push_back(m);
  }
  if (is.peek() != std::char_traits<char>::eof()) throw std::runtime_error("trailing bytes after checkpoint");
  if (c.velocity.size() != c.params.size()) throw std::runtime_error("momentum state does not match weights");
  for (std::size_t k = 0; k < c.params.size(); ++k) {
    if (c.params[k].shape() != c.velocity[k].shape()) throw std::runtime_error("momentum tensor shape mismatch");
  }
  return c;
}

void Checkpoint::save(const std::filesystem::path& path) const {
  const std::string bytes = to_bytes();
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return from_bytes(buf.str());
  } catch (const std::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

template <typename T>
std::vector<ComplexTensor> widen(const Parameters<T>& p) {
  std::vector<ComplexTensor> out;
  out.reserve(p.size());
  for (const auto& t : p) {
    ComplexTensor c(t.shape());
    for (std::size_t i = 0; i < t.size(); ++i) c[i] = Complex(t[i]);
    out.push_back(std::move(c));
  }
  return out;
}

template <typename T>
Parameters<T> narrow(const std::vector<ComplexTensor>& p) {
  Parameters<T> out;
  out.reserve(p.size());
  for (const auto& c : p) {
    Tensor<T> t(c.shape());
    for (std::size_t i = 0; i < c.size(); ++i) {
      if constexpr (std::is_same_v<T, Complex>) {
        t[i] = c[i];
      } else {
        if (c[i].imag() != 0.0) throw std::invalid_argument("real model tensor has an imaginary part");
        t[i] = c[i].real();
      }
    }
    out.push_back(std::move(t));
  }
  return out;
}

template std::vector<ComplexTensor> widen(const Parameters<double>&);
template std::vector<ComplexTensor> widen(const Parameters<Complex>&);
template Parameters<double> narrow(const std::vector<ComplexTensor>&);
template Parameters<Complex> narrow(const std::vector<ComplexTensor>&);

}  // namespace ccnn
