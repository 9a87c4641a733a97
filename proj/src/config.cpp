#include "ccnn/config.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "ccnn/text_format.hpp"

namespace ccnn {

namespace {

using text::format_double;

template <typename N>
N number(const std::string& key, const std::string& value) {
  try {
    return text::parse_number<N>(key, value);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

// One table drives both parsing and printing so the two cannot drift apart.
struct Field {
  std::function<void(ExperimentConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <typename N, typename Member>
Field numeric(Member member) {
  return {[member](ExperimentConfig& c, const std::string& k, const std::string& v) { member(c) = number<N>(k, v); },
          [member](const ExperimentConfig& c) {
            if constexpr (std::is_floating_point_v<N>) {
              return format_double(member(c));
            } else {
              return std::to_string(member(c));
            }
          }};
}

#define CCNN_FIELD(type, expr) numeric<type>([](auto& c) -> auto& { return expr; })

const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      {"image_size", CCNN_FIELD(std::size_t, c.data.image_size)},
      {"patch_size", CCNN_FIELD(std::size_t, c.data.patch_size)},
      {"cell_count_min", CCNN_FIELD(std::size_t, c.data.cell_count_min)},
      {"cell_count_max", CCNN_FIELD(std::size_t, c.data.cell_count_max)},
      {"radius_min", CCNN_FIELD(double, c.data.radius_min)},
      {"radius_max", CCNN_FIELD(double, c.data.radius_max)},
      {"intensity_min", CCNN_FIELD(double, c.data.intensity_min)},
      {"intensity_max", CCNN_FIELD(double, c.data.intensity_max)},
      {"falloff", CCNN_FIELD(double, c.data.falloff)},
      {"noise_sigma", CCNN_FIELD(double, c.data.noise_sigma)},
      {"label_threshold", CCNN_FIELD(std::size_t, c.data.label_threshold)},
      {"data_seed", CCNN_FIELD(std::uint64_t, c.data.seed)},
      {"images", CCNN_FIELD(std::size_t, c.images)},
      {"conv1_kernels", CCNN_FIELD(std::size_t, c.net.conv1_kernels)},
      {"conv2_kernels", CCNN_FIELD(std::size_t, c.net.conv2_kernels)},
      {"kernel_size", CCNN_FIELD(std::size_t, c.net.kernel_size)},
      {"pool_window", CCNN_FIELD(std::size_t, c.net.pool_window)},
      {"pool_stride", CCNN_FIELD(std::size_t, c.net.pool_stride)},
      {"iterations", CCNN_FIELD(std::size_t, c.iterations)},
      {"batch_size", CCNN_FIELD(std::size_t, c.batch_size)},
      {"momentum", CCNN_FIELD(double, c.momentum)},
      {"complex_lr",
       {[](ExperimentConfig& c, const std::string&, const std::string& v) { c.complex_lr = parse_schedule(v); },
        [](const ExperimentConfig& c) { return schedule_to_text(c.complex_lr); }}},
      {"real_lr",
       {[](ExperimentConfig& c, const std::string&, const std::string& v) { c.real_lr = parse_schedule(v); },
        [](const ExperimentConfig& c) { return schedule_to_text(c.real_lr); }}},
      {"seed", CCNN_FIELD(std::uint64_t, c.seed)},
      {"trials", CCNN_FIELD(std::size_t, c.trials)},
      {"converge_threshold", CCNN_FIELD(double, c.converge_threshold)},
      {"checkpoint_every", CCNN_FIELD(std::size_t, c.checkpoint_every)},
      {"threads", CCNN_FIELD(unsigned, c.threads)},
      {"out_dir",
       {[](ExperimentConfig& c, const std::string&, const std::string& v) { c.out_dir = v; },
        [](const ExperimentConfig& c) { return c.out_dir; }}},
  };
  return table;
}

#undef CCNN_FIELD

}  // namespace

LrSchedule parse_schedule(const std::string& s) {
  LrSchedule out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto t = text::trim(item);
    const auto colon = t.find(':');
    if (colon == std::string_view::npos) {
      throw ConfigError("learning-rate step '" + std::string(t) + "' is not of the form iteration:rate");
    }
    out.steps.emplace_back(number<std::size_t>("lr step", std::string(text::trim(t.substr(0, colon)))),
                           number<double>("lr rate", std::string(text::trim(t.substr(colon + 1)))));
  }
  try {
    out.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return out;
}

std::string schedule_to_text(const LrSchedule& s) {
  std::string out;
  for (const auto& [start, rate] : s.steps) {
    if (!out.empty()) out += ',';
    out += std::to_string(start) + ':' + format_double(rate);
  }
  return out;
}

void ExperimentConfig::apply_paper_scale() {
  images = 100;
  iterations = 20000;
  complex_lr = LrSchedule{{{0, 0.01}, {2000, 0.001}}};
  real_lr = LrSchedule{{{0, 0.1}}};
}

void ExperimentConfig::validate() const {
  try {
    data.validate();
    if (images == 0) throw std::invalid_argument("images must be positive");
    if (net.conv1_kernels == 0 || net.conv2_kernels < 2) {
      throw std::invalid_argument("conv1_kernels must be >= 1 and conv2_kernels (the class count) >= 2");
    }
    CellNetOptions o = net;
    o.patch_size = data.patch_size;
    cell_detection_spec(o);
    train_config(Domain::complex).validate();
    train_config(Domain::real).validate();
    const std::size_t patches = images * (data.image_size / data.patch_size) * (data.image_size / data.patch_size);
    if (batch_size > patches) {
      throw std::invalid_argument("batch_size " + std::to_string(batch_size) + " exceeds the " +
                                  std::to_string(patches) + " training patches");
    }
    if (trials == 0) throw std::invalid_argument("trials must be positive");
    if (threads == 0) throw std::invalid_argument("threads must be positive");
    if (out_dir.empty()) throw std::invalid_argument("out_dir is empty");
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

TrainConfig ExperimentConfig::train_config(Domain domain) const {
  TrainConfig t;
  t.momentum = momentum;
  t.schedule = domain == Domain::complex ? complex_lr : real_lr;
  t.batch_size = batch_size;
  t.iterations = iterations;
  t.seed = seed;
  return t;
}

std::string ExperimentConfig::to_text() const {
  std::string out;
  for (const auto& [key, field] : fields()) out += key + '=' + field.get(*this) + '\n';
  return out;
}

ExperimentConfig ExperimentConfig::from_text(const std::string& text) {
  ExperimentConfig c;
  std::set<std::string> seen;
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto t = text::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key=value, got '" + std::string(t) + "'");
    }
    const std::string key(text::trim(t.substr(0, eq)));
    const std::string value(text::trim(t.substr(eq + 1)));
    const auto& table = fields();
    auto it = std::find_if(table.begin(), table.end(), [&](const auto& f) { return f.first == key; });
    if (it == table.end()) throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    if (!seen.insert(key).second) throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    it->second.set(c, key, value);
  }
  c.net.patch_size = c.data.patch_size;
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_text(buf.str());
}

}  // namespace ccnn
