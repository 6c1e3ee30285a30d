#pragma once

#include <string>
#include <vector>

namespace qaa {

/// One detected instance as a run-length-encoded binary bitmap. Runs are
/// row-major and alternate 0-run / 1-run, starting with a 0-run; they must
/// sum to height * width.
struct InstanceMask {
  std::string image_id;
  int height = 0;
  int width = 0;
  std::vector<long long> runs;
  double confidence = 1.0;

  void validate() const;
  std::vector<std::uint8_t> decode() const;  // row-major bitmap of 0/1
  static std::vector<long long> encode_runs(const std::vector<std::uint8_t>& bitmap);
};

struct GridSpec {
  int rows = 14;
  int cols = 14;

  int cells() const { return rows * cols; }
  bool operator==(const GridSpec&) const = default;
};

/// Binary occupancy over the spatial grid: bit i = 1 iff some object
/// instance occupies cell i.
struct ObjectMap {
  GridSpec grid;
  std::vector<std::uint8_t> bits;

  static ObjectMap zeros(GridSpec grid) {
    return ObjectMap{grid, std::vector<std::uint8_t>(static_cast<std::size_t>(grid.cells()), 0)};
  }
  static ObjectMap ones(GridSpec grid) {
    return ObjectMap{grid, std::vector<std::uint8_t>(static_cast<std::size_t>(grid.cells()), 1)};
  }
  int set_count() const;
};

// Cell assignment for pixel (r, c) in an H x W image: row cell is
// floor(r * rows / H), column cell is floor(c * cols / W).
inline int cell_of_pixel(int r, int c, int height, int width, const GridSpec& grid) {
  long long cr = static_cast<long long>(r) * grid.rows / height;
  long long cc = static_cast<long long>(c) * grid.cols / width;
  return static_cast<int>(cr) * grid.cols + static_cast<int>(cc);
}

/// Unions all masks with confidence >= min_confidence and sets cell bits
/// where the covered fraction of the cell's pixels exceeds occupancy_fraction
/// (default 0: any overlap marks the cell).
ObjectMap rasterize_instances(const std::vector<InstanceMask>& masks, const GridSpec& grid,
                              double occupancy_fraction = 0.0, double min_confidence = 0.5);

/// Parses a JSON Lines mask file; one instance per line with keys
/// image_id, h, w, runs, score. Errors carry the 1-based line number.
std::vector<InstanceMask> load_masks(const std::string& path);

ObjectMap object_map_union(const std::vector<ObjectMap>& maps);

std::string object_map_to_json(const ObjectMap& map);
ObjectMap object_map_from_json(const std::string& line);

}  // namespace qaa
