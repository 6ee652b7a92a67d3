#include "panograph/scene_io.hpp"

#include "panograph/rng.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>
#include <sstream>

namespace panograph {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<char> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& path, const std::vector<char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

std::uint32_t load_u32_le(const char* p) {
  std::uint32_t v = 0;
  for (int b = 3; b >= 0; --b) v = (v << 8) | static_cast<unsigned char>(p[b]);
  return v;
}

void store_u32_le(char* p, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) p[b] = static_cast<char>((v >> (8 * b)) & 0xFFu);
}

}  // namespace

// ---------------------------------------------------------------------------
// ClassTable

ClassTable::ClassTable(std::vector<ClassInfo> classes) {
  for (auto& c : classes) {
    if (c.id >= by_id_.size()) by_id_.resize(static_cast<std::size_t>(c.id) + 1);
    if (by_id_[c.id]) throw ConfigError("duplicate class id " + std::to_string(c.id));
    by_id_[c.id] = std::move(c);
  }
}

ClassTable ClassTable::parse(std::string_view text) {
  std::vector<ClassInfo> classes;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(body);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(trim(field));
    if (fields.size() != 3) {
      throw ConfigError("class table line " + std::to_string(line_no) + ": expected id,name,thing|stuff");
    }
    ClassInfo info;
    try {
      std::size_t used = 0;
      const long id = std::stol(fields[0], &used);
      if (used != fields[0].size() || id < 0 || id > 0xFFFF) throw std::out_of_range("id");
      info.id = static_cast<std::uint16_t>(id);
    } catch (const std::exception&) {
      throw ConfigError("class table line " + std::to_string(line_no) + ": bad class id '" + fields[0] + "'");
    }
    info.name = fields[1];
    if (fields[2] == "thing") {
      info.kind = ClassKind::thing;
    } else if (fields[2] == "stuff") {
      info.kind = ClassKind::stuff;
    } else {
      throw ConfigError("class table line " + std::to_string(line_no) + ": kind must be thing or stuff");
    }
    classes.push_back(std::move(info));
  }
  return ClassTable(std::move(classes));
}

ClassTable ClassTable::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open class table " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string ClassTable::to_text() const {
  std::ostringstream out;
  for (const auto& c : by_id_) {
    if (!c) continue;
    out << c->id << ',' << c->name << ',' << (c->kind == ClassKind::thing ? "thing" : "stuff") << '\n';
  }
  return out.str();
}

void ClassTable::save(const fs::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << to_text();
}

const ClassInfo& ClassTable::info(std::uint16_t id) const {
  if (!contains(id)) throw DataError("unknown class id " + std::to_string(id));
  return *by_id_[id];
}

std::vector<std::uint16_t> ClassTable::ids() const {
  std::vector<std::uint16_t> out;
  for (const auto& c : by_id_)
    if (c) out.push_back(c->id);
  return out;
}

std::vector<std::uint16_t> ClassTable::thing_ids() const {
  std::vector<std::uint16_t> out;
  for (const auto& c : by_id_)
    if (c && c->kind == ClassKind::thing) out.push_back(c->id);
  return out;
}

std::vector<std::uint16_t> ClassTable::stuff_ids() const {
  std::vector<std::uint16_t> out;
  for (const auto& c : by_id_)
    if (c && c->kind == ClassKind::stuff) out.push_back(c->id);
  return out;
}

// ---------------------------------------------------------------------------
// .bin / .label

std::vector<Point> read_points(const fs::path& bin_path) {
  const auto bytes = read_bytes(bin_path);
  if (bytes.size() % 16 != 0) {
    throw FormatError(bin_path.string() + ": size " + std::to_string(bytes.size()) + " is not a multiple of 16");
  }
  std::vector<Point> points(bytes.size() / 16);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const char* p = bytes.data() + 16 * i;
    float v[4];
    for (int k = 0; k < 4; ++k) v[k] = std::bit_cast<float>(load_u32_le(p + 4 * k));
    if (!std::isfinite(v[0]) || !std::isfinite(v[1]) || !std::isfinite(v[2]) || !std::isfinite(v[3])) {
      throw DataError(bin_path.string() + ": non-finite value at point " + std::to_string(i));
    }
    points[i] = {v[0], v[1], v[2], v[3]};
  }
  return points;
}

std::vector<std::uint32_t> read_label_words(const fs::path& label_path) {
  const auto bytes = read_bytes(label_path);
  if (bytes.size() % 4 != 0) {
    throw FormatError(label_path.string() + ": size " + std::to_string(bytes.size()) + " is not a multiple of 4");
  }
  std::vector<std::uint32_t> words(bytes.size() / 4);
  for (std::size_t i = 0; i < words.size(); ++i) words[i] = load_u32_le(bytes.data() + 4 * i);
  return words;
}

void write_points(const std::vector<Point>& points, const fs::path& bin_path) {
  std::vector<char> bytes(points.size() * 16);
  for (std::size_t i = 0; i < points.size(); ++i) {
    char* p = bytes.data() + 16 * i;
    const float v[4] = {points[i].x, points[i].y, points[i].z, points[i].intensity};
    for (int k = 0; k < 4; ++k) store_u32_le(p + 4 * k, std::bit_cast<std::uint32_t>(v[k]));
  }
  write_bytes(bin_path, bytes);
}

void write_label_words(const std::vector<std::uint32_t>& words, const fs::path& label_path) {
  std::vector<char> bytes(words.size() * 4);
  for (std::size_t i = 0; i < words.size(); ++i) store_u32_le(bytes.data() + 4 * i, words[i]);
  write_bytes(label_path, bytes);
}

void read_labels(const fs::path& label_path, std::vector<std::uint16_t>& semantic,
                 std::vector<std::uint16_t>& instance) {
  const auto words = read_label_words(label_path);
  semantic.resize(words.size());
  instance.resize(words.size());
  for (std::size_t i = 0; i < words.size(); ++i) {
    semantic[i] = label_semantic(words[i]);
    instance[i] = label_instance(words[i]);
  }
}

void write_labels(const std::vector<std::uint16_t>& semantic, const std::vector<std::uint16_t>& instance,
                  const fs::path& label_path) {
  if (semantic.size() != instance.size()) throw InputError("semantic/instance length mismatch");
  std::vector<std::uint32_t> words(semantic.size());
  for (std::size_t i = 0; i < words.size(); ++i) words[i] = encode_label(semantic[i], instance[i]);
  write_label_words(words, label_path);
}

PointCloudFrame read_frame(const fs::path& bin_path, const fs::path& label_path) {
  PointCloudFrame frame;
  frame.points = read_points(bin_path);
  read_labels(label_path, frame.semantic, frame.instance);
  if (frame.semantic.size() != frame.points.size()) {
    throw FormatError("label count " + std::to_string(frame.semantic.size()) + " does not match point count " +
                      std::to_string(frame.points.size()) + " (" + label_path.string() + ")");
  }
  return frame;
}

void write_frame(const PointCloudFrame& frame, const fs::path& bin_path, const fs::path& label_path) {
  if (frame.semantic.size() != frame.points.size() || frame.instance.size() != frame.points.size()) {
    throw InputError("frame arrays are not length-aligned");
  }
  write_points(frame.points, bin_path);
  write_labels(frame.semantic, frame.instance, label_path);
}

void validate_frame(const PointCloudFrame& frame, const ClassTable& classes) {
  const std::size_t n = frame.points.size();
  if (frame.semantic.size() != n || frame.instance.size() != n) throw DataError("frame arrays are not length-aligned");
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = frame.points[i];
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z) || !std::isfinite(p.intensity)) {
      throw DataError("non-finite point " + std::to_string(i));
    }
    if (!classes.contains(frame.semantic[i])) {
      throw DataError("point " + std::to_string(i) + " has unknown class " + std::to_string(frame.semantic[i]));
    }
    if (frame.instance[i] != 0 && !classes.is_thing(frame.semantic[i])) {
      throw DataError("stuff point " + std::to_string(i) + " carries instance " + std::to_string(frame.instance[i]));
    }
  }
}

// ---------------------------------------------------------------------------
// Synthetic scenes

ClassTable synthetic_class_table() {
  return ClassTable({{synthetic_class::unlabeled, "unlabeled", ClassKind::stuff},
                     {synthetic_class::car, "car", ClassKind::thing},
                     {synthetic_class::truck, "truck", ClassKind::thing},
                     {synthetic_class::pedestrian, "pedestrian", ClassKind::thing},
                     {synthetic_class::road, "road", ClassKind::stuff},
                     {synthetic_class::building, "building", ClassKind::stuff}});
}

namespace {

struct Box {
  // Local frame: x along length, y along width; `offset` is the box centre in
  // the owning object's frame.
  double cx = 0.0, cy = 0.0;
  double half_length = 0.0, half_width = 0.0, height = 0.0;
};

enum class Shape { boxes, cylinder };

struct Member {
  std::uint16_t cls = 0;
  Shape shape = Shape::boxes;
  std::vector<Box> boxes;  // in member-local frame
  double radius = 0.0;     // cylinder
  double height = 0.0;     // cylinder
  double half_length = 0.0, half_width = 0.0;  // footprint extent in member frame
  double ox = 0.0, oy = 0.0;                   // member offset inside its group
};

struct Group {
  std::vector<Member> members;
  double radius = 0.0;
  double x = 0.0, y = 0.0, yaw = 0.0;
};

void check_range(const Range& r, const char* name, bool positive = true) {
  if (!(r.lo <= r.hi) || !std::isfinite(r.lo) || !std::isfinite(r.hi) || (positive && r.lo <= 0.0)) {
    throw ConfigError(std::string("synthetic config: invalid range for ") + name);
  }
}

void check_config(const SyntheticSceneConfig& c) {
  if (c.num_cars < 0 || c.num_pedestrians < 0 || c.num_trucks < 0) throw ConfigError("synthetic config: negative object count");
  check_range(c.car_length, "car_length");
  check_range(c.car_width, "car_width");
  check_range(c.car_height, "car_height");
  check_range(c.pedestrian_radius, "pedestrian_radius");
  check_range(c.pedestrian_height, "pedestrian_height");
  check_range(c.truck_length, "truck_length");
  check_range(c.truck_width, "truck_width");
  check_range(c.truck_height, "truck_height");
  check_range(c.truck_gap, "truck_gap", false);
  check_range(c.crowd_gap, "crowd_gap", false);
  if (c.truck_segments_max < 1) throw ConfigError("synthetic config: truck_segments_max must be >= 1");
  if (!(c.ground_extent > 0.0)) throw ConfigError("synthetic config: ground_extent must be positive");
  if (!(c.ground_density > 0.0) || !(c.object_density > 0.0)) throw ConfigError("synthetic config: densities must be positive");
  if (!(c.noise_sigma >= 0.0)) throw ConfigError("synthetic config: noise_sigma must be >= 0");
  if (!(c.min_range >= 0.0) || !(c.min_range < c.max_range)) throw ConfigError("synthetic config: need 0 <= min_range < max_range");
  if (c.max_range >= c.ground_extent) throw ConfigError("synthetic config: max_range must lie inside the ground extent");
  if (!(c.min_separation >= 0.0)) throw ConfigError("synthetic config: min_separation must be >= 0");
}

Member make_car(Rng& rng, const SyntheticSceneConfig& c) {
  Member m;
  m.cls = synthetic_class::car;
  Box b;
  b.half_length = 0.5 * rng.uniform(c.car_length.lo, c.car_length.hi);
  b.half_width = 0.5 * rng.uniform(c.car_width.lo, c.car_width.hi);
  b.height = rng.uniform(c.car_height.lo, c.car_height.hi);
  m.boxes.push_back(b);
  m.half_length = b.half_length;
  m.half_width = b.half_width;
  return m;
}

Member make_truck(Rng& rng, const SyntheticSceneConfig& c) {
  Member m;
  m.cls = synthetic_class::truck;
  const double length = rng.uniform(c.truck_length.lo, c.truck_length.hi);
  const double half_width = 0.5 * rng.uniform(c.truck_width.lo, c.truck_width.hi);
  const double height = rng.uniform(c.truck_height.lo, c.truck_height.hi);
  const int segments = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(c.truck_segments_max)));
  // Cab plus trailer pieces laid out along +x, separated by gaps.
  std::vector<double> lengths;
  const double cab = std::min(2.4, 0.3 * length);
  lengths.push_back(cab);
  const double trailer = length - cab;
  for (int s = 0; s < segments; ++s) lengths.push_back(trailer / segments);
  std::vector<double> gaps(lengths.size() - 1);
  for (auto& g : gaps) g = rng.uniform(c.truck_gap.lo, c.truck_gap.hi);
  double total = 0.0;
  for (double l : lengths) total += l;
  for (double g : gaps) total += g;
  double cursor = -0.5 * total;
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    Box b;
    b.half_length = 0.5 * lengths[i];
    b.half_width = half_width;
    b.height = i == 0 ? 0.85 * height : height;
    b.cx = cursor + b.half_length;
    m.boxes.push_back(b);
    cursor += lengths[i] + (i < gaps.size() ? gaps[i] : 0.0);
  }
  m.half_length = 0.5 * total;
  m.half_width = half_width;
  return m;
}

Member make_pedestrian(Rng& rng, const SyntheticSceneConfig& c) {
  Member m;
  m.cls = synthetic_class::pedestrian;
  m.shape = Shape::cylinder;
  m.radius = rng.uniform(c.pedestrian_radius.lo, c.pedestrian_radius.hi);
  m.height = rng.uniform(c.pedestrian_height.lo, c.pedestrian_height.hi);
  m.half_length = m.radius;
  m.half_width = m.radius;
  return m;
}

// Lays members side by side along the group's local y axis.
Group make_group(std::vector<Member> members, Rng& rng, const SyntheticSceneConfig& c) {
  Group g;
  double cursor = 0.0;
  for (std::size_t i = 0; i < members.size(); ++i) {
    if (i > 0) cursor += rng.uniform(c.crowd_gap.lo, c.crowd_gap.hi);
    members[i].oy = cursor + members[i].half_width;
    cursor += 2.0 * members[i].half_width;
  }
  for (auto& m : members) m.oy -= 0.5 * cursor;
  for (const auto& m : members) {
    g.radius = std::max(g.radius, std::hypot(std::abs(m.oy) + m.half_width, m.half_length));
  }
  g.members = std::move(members);
  return g;
}

struct Emitter {
  PointCloudFrame& frame;
  Rng& rng;
  double sigma;

  void emit(const Vec3& p, std::uint16_t cls, std::uint16_t inst, double intensity) {
    const Vec3 q = p + Vec3(rng.normal(0.0, sigma), rng.normal(0.0, sigma), rng.normal(0.0, sigma));
    const double in = std::clamp(intensity + rng.normal(0.0, 0.03), 0.0, 1.0);
    frame.points.push_back({static_cast<float>(q.x()), static_cast<float>(q.y()), static_cast<float>(q.z()),
                            static_cast<float>(in)});
    frame.semantic.push_back(cls);
    frame.instance.push_back(inst);
  }
};

std::size_t count_for(double area, double density) {
  return static_cast<std::size_t>(std::llround(area * density));
}

// Samples the faces of a box that face the sensor at the origin.
void sample_box(Emitter& out, const Box& b, double gx, double gy, double yaw, double base_z, double density,
                std::uint16_t cls, std::uint16_t inst, double intensity) {
  const double cs = std::cos(yaw), sn = std::sin(yaw);
  const auto to_world = [&](double lx, double ly, double z) {
    return Vec3(gx + cs * lx - sn * ly, gy + sn * lx + cs * ly, z);
  };
  const auto dir = [&](double lx, double ly) { return Vec3(cs * lx - sn * ly, sn * lx + cs * ly, 0.0); };
  struct Face {
    Vec3 normal;
    Vec3 center;
  };
  const double top = base_z + b.height;
  const double mid = base_z + 0.5 * b.height;
  const Face faces[5] = {
      {dir(1, 0), to_world(b.cx + b.half_length, b.cy, mid)},
      {dir(-1, 0), to_world(b.cx - b.half_length, b.cy, mid)},
      {dir(0, 1), to_world(b.cx, b.cy + b.half_width, mid)},
      {dir(0, -1), to_world(b.cx, b.cy - b.half_width, mid)},
      {Vec3(0, 0, 1), to_world(b.cx, b.cy, top)},
  };
  for (int f = 0; f < 5; ++f) {
    if (faces[f].normal.dot(-faces[f].center) <= 0.0) continue;
    double area = 0.0;
    if (f < 2) area = 2.0 * b.half_width * b.height;
    else if (f < 4) area = 2.0 * b.half_length * b.height;
    else area = 4.0 * b.half_length * b.half_width;
    const std::size_t n = count_for(area, density);
    for (std::size_t k = 0; k < n; ++k) {
      const double u = out.rng.uniform(-1.0, 1.0);
      const double v = out.rng.uniform(0.0, 1.0);
      double lx = b.cx, ly = b.cy, z = base_z + v * b.height;
      switch (f) {
        case 0: lx += b.half_length; ly += u * b.half_width; break;
        case 1: lx -= b.half_length; ly += u * b.half_width; break;
        case 2: ly += b.half_width; lx += u * b.half_length; break;
        case 3: ly -= b.half_width; lx += u * b.half_length; break;
        default:
          lx += u * b.half_length;
          ly += (2.0 * v - 1.0) * b.half_width;
          z = top;
          break;
      }
      out.emit(to_world(lx, ly, z), cls, inst, intensity);
    }
  }
}

void sample_cylinder(Emitter& out, double cx, double cy, double radius, double height, double base_z, double density,
                     std::uint16_t cls, std::uint16_t inst, double intensity) {
  // Half of the lateral surface faces the sensor.
  const std::size_t n = count_for(std::numbers::pi * radius * height, density);
  const double facing = std::atan2(-cy, -cx);
  for (std::size_t k = 0; k < n; ++k) {
    const double phi = facing + out.rng.uniform(-0.5, 0.5) * std::numbers::pi;
    const double z = base_z + out.rng.uniform(0.0, height);
    out.emit(Vec3(cx + radius * std::cos(phi), cy + radius * std::sin(phi), z), cls, inst, intensity);
  }
  if (base_z + height < 0.0) {
    const std::size_t m = count_for(std::numbers::pi * radius * radius, density);
    for (std::size_t k = 0; k < m; ++k) {
      const double r = radius * std::sqrt(out.rng.uniform());
      const double phi = out.rng.uniform(0.0, 2.0 * std::numbers::pi);
      out.emit(Vec3(cx + r * std::cos(phi), cy + r * std::sin(phi), base_z + height), cls, inst, intensity);
    }
  }
}

}  // namespace

PointCloudFrame generate_synthetic_scene(const SyntheticSceneConfig& config) {
  check_config(config);
  Rng rng(config.seed);
  PointCloudFrame frame;

  // Object groups; with crowding, pedestrians gather in crowds of 2-4 and
  // cars park in pairs, separated by less than a clustering radius.
  std::vector<Member> cars, peds, trucks;
  for (int i = 0; i < config.num_cars; ++i) cars.push_back(make_car(rng, config));
  for (int i = 0; i < config.num_trucks; ++i) trucks.push_back(make_truck(rng, config));
  for (int i = 0; i < config.num_pedestrians; ++i) peds.push_back(make_pedestrian(rng, config));

  std::vector<Group> groups;
  const auto add_groups = [&](std::vector<Member>& members, std::size_t min_size, std::size_t max_size) {
    std::size_t i = 0;
    while (i < members.size()) {
      std::size_t size = 1;
      if (config.crowding) {
        size = min_size + static_cast<std::size_t>(rng.below(max_size - min_size + 1));
        size = std::min(size, members.size() - i);
      }
      std::vector<Member> chunk(members.begin() + static_cast<std::ptrdiff_t>(i),
                                members.begin() + static_cast<std::ptrdiff_t>(i + size));
      groups.push_back(make_group(std::move(chunk), rng, config));
      i += size;
    }
  };
  add_groups(trucks, 1, 1);
  add_groups(cars, 1, 2);
  add_groups(peds, 2, 4);

  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    auto& g = groups[gi];
    bool placed = false;
    for (int attempt = 0; attempt < 500 && !placed; ++attempt) {
      const double r = rng.uniform(config.min_range, config.max_range);
      const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
      g.x = r * std::cos(theta);
      g.y = r * std::sin(theta);
      g.yaw = rng.uniform(0.0, std::numbers::pi);
      if (std::hypot(g.x, g.y) < g.radius + 1.0) continue;
      if (std::abs(g.x) + g.radius > config.ground_extent - 2.0 || std::abs(g.y) + g.radius > config.ground_extent - 2.0) continue;
      placed = true;
      for (std::size_t pj = 0; pj < gi; ++pj) {
        const auto& o = groups[pj];
        if (std::hypot(g.x - o.x, g.y - o.y) < g.radius + o.radius + config.min_separation) {
          placed = false;
          break;
        }
      }
    }
    if (!placed) throw ConfigError("synthetic config: objects do not fit in the scene; lower counts or widen ranges");
  }

  Emitter out{frame, rng, config.noise_sigma};
  std::uint16_t next_instance = 1;
  for (const auto& g : groups) {
    const double cs = std::cos(g.yaw), sn = std::sin(g.yaw);
    for (const auto& m : g.members) {
      const double mx = g.x + cs * m.ox - sn * m.oy;
      const double my = g.y + sn * m.ox + cs * m.oy;
      const std::uint16_t inst = next_instance++;
      double intensity = 0.0;
      switch (m.cls) {
        case synthetic_class::car: intensity = rng.uniform(0.2, 0.45); break;
        case synthetic_class::truck: intensity = rng.uniform(0.3, 0.55); break;
        default: intensity = rng.uniform(0.05, 0.2); break;
      }
      if (m.shape == Shape::cylinder) {
        sample_cylinder(out, mx, my, m.radius, m.height, config.ground_z, config.object_density, m.cls, inst, intensity);
      } else {
        for (const auto& b : m.boxes) {
          sample_box(out, b, mx, my, g.yaw, config.ground_z, config.object_density, m.cls, inst, intensity);
        }
      }
    }
  }

  const double e = config.ground_extent;
  const std::size_t ground_points = count_for(4.0 * e * e, config.ground_density);
  for (std::size_t k = 0; k < ground_points; ++k) {
    out.emit(Vec3(rng.uniform(-e, e), rng.uniform(-e, e), config.ground_z), synthetic_class::road, 0,
             rng.uniform(0.0, 0.15));
  }

  if (config.buildings) {
    // Two facades along the far +x and +y edges, facing the sensor.
    const double height = 4.0;
    const double density = 0.15 * config.object_density;
    const std::size_t n = count_for(2.0 * e * height, density);
    for (int wall = 0; wall < 2; ++wall) {
      for (std::size_t k = 0; k < n; ++k) {
        const double t = rng.uniform(-e, e);
        const double z = config.ground_z + rng.uniform(0.0, height);
        const Vec3 p = wall == 0 ? Vec3(e - 0.5, t, z) : Vec3(t, e - 0.5, z);
        out.emit(p, synthetic_class::building, 0, rng.uniform(0.3, 0.6));
      }
    }
  }
  return frame;
}

}  // namespace panograph
