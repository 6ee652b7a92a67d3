#pragma once

#include "panograph/common.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace panograph {

struct Point {
  float x = 0.0f;
  float y = 0.0f;
  float z = 0.0f;
  float intensity = 0.0f;
};

// One LiDAR sweep. `semantic` and `instance` are aligned with `points`;
// instance 0 means "no instance" and is the only legal value on stuff points.
struct PointCloudFrame {
  std::vector<Point> points;
  std::vector<std::uint16_t> semantic;
  std::vector<std::uint16_t> instance;

  std::size_t size() const { return points.size(); }
  Vec3 position(std::size_t i) const { return {points[i].x, points[i].y, points[i].z}; }
};

enum class ClassKind { thing, stuff };

struct ClassInfo {
  std::uint16_t id = 0;
  std::string name;
  ClassKind kind = ClassKind::stuff;
};

// Class id -> {thing|stuff, name}. Text form is one `id,name,thing|stuff`
// entry per line; blank lines and `#` comments are skipped.
class ClassTable {
 public:
  ClassTable() = default;
  explicit ClassTable(std::vector<ClassInfo> classes);

  static ClassTable parse(std::string_view text);
  static ClassTable load(const std::filesystem::path& path);
  std::string to_text() const;
  void save(const std::filesystem::path& path) const;

  // One past the largest class id.
  std::size_t num_classes() const { return by_id_.size(); }
  bool contains(std::uint16_t id) const { return id < by_id_.size() && by_id_[id].has_value(); }
  bool is_thing(std::uint16_t id) const { return contains(id) && by_id_[id]->kind == ClassKind::thing; }
  bool is_stuff(std::uint16_t id) const { return contains(id) && by_id_[id]->kind == ClassKind::stuff; }
  const ClassInfo& info(std::uint16_t id) const;
  std::vector<std::uint16_t> ids() const;
  std::vector<std::uint16_t> thing_ids() const;
  std::vector<std::uint16_t> stuff_ids() const;

 private:
  std::vector<std::optional<ClassInfo>> by_id_;
};

// Label word layout: bits 0-15 semantic, bits 16-31 instance.
constexpr std::uint32_t encode_label(std::uint16_t semantic, std::uint16_t instance) {
  return static_cast<std::uint32_t>(semantic) | (static_cast<std::uint32_t>(instance) << 16);
}
constexpr std::uint16_t label_semantic(std::uint32_t word) { return static_cast<std::uint16_t>(word & 0xFFFFu); }
constexpr std::uint16_t label_instance(std::uint32_t word) { return static_cast<std::uint16_t>(word >> 16); }

std::vector<Point> read_points(const std::filesystem::path& bin_path);
std::vector<std::uint32_t> read_label_words(const std::filesystem::path& label_path);
void write_points(const std::vector<Point>& points, const std::filesystem::path& bin_path);
void write_label_words(const std::vector<std::uint32_t>& words, const std::filesystem::path& label_path);

// Reads a frame in the SemanticKITTI layout. Throws FormatError on size
// mismatches and DataError on non-finite coordinates.
PointCloudFrame read_frame(const std::filesystem::path& bin_path, const std::filesystem::path& label_path);

// Reads only a `.label` file into (semantic, instance) arrays.
void read_labels(const std::filesystem::path& label_path, std::vector<std::uint16_t>& semantic,
                 std::vector<std::uint16_t>& instance);
void write_labels(const std::vector<std::uint16_t>& semantic, const std::vector<std::uint16_t>& instance,
                  const std::filesystem::path& label_path);

void write_frame(const PointCloudFrame& frame, const std::filesystem::path& bin_path,
                 const std::filesystem::path& label_path);

// Throws DataError if the frame violates its invariants against `classes`.
void validate_frame(const PointCloudFrame& frame, const ClassTable& classes);

// Reflectance clamped to [0, 1]; the stored value is left untouched so that
// read/write stays bit-exact.
inline float normalized_intensity(float raw) { return raw < 0.0f ? 0.0f : (raw > 1.0f ? 1.0f : raw); }

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct SyntheticSceneConfig {
  std::uint64_t seed = 0;

  int num_cars = 3;
  int num_pedestrians = 4;
  int num_trucks = 1;

  Range car_length{3.8, 4.8};
  Range car_width{1.6, 1.9};
  Range car_height{1.4, 1.7};
  Range pedestrian_radius{0.22, 0.32};
  Range pedestrian_height{1.55, 1.9};
  // Trucks are built from a cab and one or more trailer boxes separated by a gap.
  Range truck_length{8.0, 11.0};
  Range truck_width{2.3, 2.6};
  Range truck_height{3.0, 3.6};
  int truck_segments_max = 3;
  Range truck_gap{0.8, 1.2};

  double ground_extent = 20.0;  // half-width of the square ground patch (m)
  double ground_z = -1.73;      // ground height relative to the sensor (m)
  double ground_density = 1.5;  // points per m^2
  double object_density = 30.0;  // points per m^2 of visible surface
  double noise_sigma = 0.02;

  double min_range = 4.0;
  double max_range = 17.0;
  double min_separation = 2.5;  // footprint clearance between unrelated objects (m)

  bool crowding = false;
  Range crowd_gap{0.45, 0.65};  // surface-to-surface gap inside a crowd (m)
  bool buildings = true;
};

// Class table used by the synthetic generator.
ClassTable synthetic_class_table();

namespace synthetic_class {
inline constexpr std::uint16_t unlabeled = 0;
inline constexpr std::uint16_t car = 1;
inline constexpr std::uint16_t truck = 2;
inline constexpr std::uint16_t pedestrian = 3;
inline constexpr std::uint16_t road = 4;
inline constexpr std::uint16_t building = 5;
}  // namespace synthetic_class

// Deterministic in `config.seed`. Throws ConfigError on degenerate extents.
PointCloudFrame generate_synthetic_scene(const SyntheticSceneConfig& config);

}  // namespace panograph
