#include "panograph/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <variant>

namespace panograph {

namespace {

using Field = std::variant<std::filesystem::path PipelineConfig::*, std::string PipelineConfig::*,
                           std::size_t PipelineConfig::*, double PipelineConfig::*,
                           bool PipelineConfig::*, int PipelineConfig::*>;

static_assert(std::is_same_v<std::size_t, std::uint64_t>, "seed fields share the size_t slot");

struct Entry {
  const char* key;
  Field field;
};

const std::vector<Entry>& entries() {
  using C = PipelineConfig;
  static const std::vector<Entry> table = {
      {"class_table", &C::class_table},
      {"synth_count", &C::synth_count},
      {"synth_seed", &C::synth_seed},
      {"synth_crowding", &C::synth_crowding},
      {"cluster_method", &C::cluster_method},
      {"hdbscan_min_cluster_size", &C::hdbscan_min_cluster_size},
      {"hdbscan_min_samples", &C::hdbscan_min_samples},
      {"dbscan_eps", &C::dbscan_eps},
      {"dbscan_min_points", &C::dbscan_min_points},
      {"meanshift_bandwidth", &C::meanshift_bandwidth},
      {"cluster_per_class", &C::cluster_per_class},
      {"voxel_size", &C::voxel_size},
      {"normal_neighbors", &C::normal_neighbors},
      {"tau", &C::tau},
      {"assign_noise_to_nearest", &C::assign_noise_to_nearest},
      {"learning_rate", &C::learning_rate},
      {"momentum", &C::momentum},
      {"weight_decay", &C::weight_decay},
      {"epochs", &C::epochs},
      {"seed", &C::seed},
      {"class_weights", &C::class_weights},
      {"ignore_class", &C::ignore_class},
      {"min_stuff_points", &C::min_stuff_points},
  };
  return table;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError("invalid value '" + value + "' for " + key);
  return out;
}

double parse_double(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != value.size() || value.empty() || !std::isfinite(v)) {
    throw ConfigError("invalid value '" + value + "' for " + key);
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("invalid value '" + value + "' for " + key + " (expected true or false)");
}

std::string format_double(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

}  // namespace

void PipelineConfig::set(const std::string& key, const std::string& raw) {
  const std::string value = trim(raw);
  for (const auto& e : entries()) {
    if (key != e.key) continue;
    std::visit(
        [&](auto member) {
          using T = std::remove_cvref_t<decltype(this->*member)>;
          if constexpr (std::is_same_v<T, std::filesystem::path> || std::is_same_v<T, std::string>) {
            this->*member = value;
          } else if constexpr (std::is_same_v<T, bool>) {
            this->*member = parse_bool(key, value);
          } else if constexpr (std::is_same_v<T, double>) {
            this->*member = parse_double(key, value);
          } else {
            this->*member = parse_number<T>(key, value);
          }
        },
        e.field);
    return;
  }
  throw ConfigError("unknown config key '" + key + "'");
}

PipelineConfig PipelineConfig::parse(const std::string& text) {
  PipelineConfig c;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    try {
      c.set(trim(t.substr(0, eq)), t.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  c.validate();
  return c;
}

void PipelineConfig::validate() const {
  (void)oversegment();
  if (!(voxel_size > 0.0)) throw ConfigError("voxel_size must be positive");
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("tau must lie in (0, 1)");
  if (normal_neighbors < 3) throw ConfigError("normal_neighbors must be at least 3");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("momentum must lie in [0, 1)");
  if (weight_decay < 0.0) throw ConfigError("weight_decay must be non-negative");
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse(text.str());
}

std::string PipelineConfig::to_text() const {
  std::ostringstream out;
  for (const auto& e : entries()) {
    out << e.key << " = ";
    std::visit(
        [&](auto member) {
          using T = std::remove_cvref_t<decltype(this->*member)>;
          if constexpr (std::is_same_v<T, std::filesystem::path>) {
            out << (this->*member).string();
          } else if constexpr (std::is_same_v<T, bool>) {
            out << (this->*member ? "true" : "false");
          } else if constexpr (std::is_same_v<T, double>) {
            out << format_double(this->*member);
          } else {
            out << this->*member;
          }
        },
        e.field);
    out << '\n';
  }
  return out.str();
}

std::vector<std::string> PipelineConfig::keys() {
  std::vector<std::string> k;
  for (const auto& e : entries()) k.emplace_back(e.key);
  return k;
}

ClassTable PipelineConfig::classes() const {
  return class_table.empty() ? synthetic_class_table() : ClassTable::load(class_table);
}

OversegmentParams PipelineConfig::oversegment() const {
  OversegmentParams p;
  p.method = parse_cluster_method(cluster_method);
  p.min_cluster_size = hdbscan_min_cluster_size;
  p.min_samples = hdbscan_min_samples;
  p.dbscan_eps = dbscan_eps;
  p.dbscan_min_pts = dbscan_min_points;
  p.meanshift_bandwidth = meanshift_bandwidth;
  p.per_class = cluster_per_class;
  return p;
}

PipelineOptions PipelineConfig::pipeline() const {
  PipelineOptions o;
  o.cluster = oversegment();
  o.features.voxel_size = voxel_size;
  o.features.normal_neighbors = normal_neighbors;
  o.tau = tau;
  o.fusion.assign_noise_to_nearest = assign_noise_to_nearest;
  return o;
}

Hyperparameters PipelineConfig::hyperparameters() const { return {learning_rate, momentum, weight_decay}; }

EvalOptions PipelineConfig::eval() const {
  EvalOptions e;
  if (ignore_class >= 0) e.ignore_class = static_cast<std::uint16_t>(ignore_class);
  else e.ignore_class = std::nullopt;
  e.min_stuff_points = min_stuff_points;
  return e;
}

}  // namespace panograph
