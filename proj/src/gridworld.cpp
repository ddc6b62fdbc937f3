#include "pril/gridworld.hpp"

#include <fstream>
#include <sstream>

namespace pril {

int GridMap::goal_index() const {
  for (int i = 0; i < n_cells(); ++i) {
    if (tile(i) == TileKind::Goal) return i;
  }
  return -1;
}

GridMap parse_map(std::string_view text) {
  std::vector<std::string_view> rows;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view row = text.substr(pos, end - pos);
    if (!row.empty() && row.back() == '\r') row.remove_suffix(1);
    rows.push_back(row);
    pos = end + 1;
  }
  // A single trailing newline is allowed; blank lines elsewhere are not.
  while (!rows.empty() && rows.back().empty()) rows.pop_back();
  if (rows.empty() || rows.front().empty()) throw Error(ErrorKind::EmptyMap, "map has no rows");

  GridMap map;
  map.width = static_cast<int>(rows.front().size());
  map.height = static_cast<int>(rows.size());
  map.tiles.reserve(static_cast<std::size_t>(map.width * map.height));

  int goals = 0;
  int starts = 0;
  for (int r = 0; r < map.height; ++r) {
    const std::string_view row = rows[static_cast<std::size_t>(r)];
    if (static_cast<int>(row.size()) != map.width) {
      throw Error(ErrorKind::RaggedRows, "row " + std::to_string(r + 1) + " has length " +
                                             std::to_string(row.size()) + ", expected " +
                                             std::to_string(map.width));
    }
    for (int c = 0; c < map.width; ++c) {
      TileKind kind;
      switch (row[static_cast<std::size_t>(c)]) {
        case 'S': kind = TileKind::Safe; break;
        case 'F': kind = TileKind::Frozen; break;
        case 'H': kind = TileKind::Hole; break;
        case 'A': kind = TileKind::HighReward; break;
        case 'G': kind = TileKind::Goal; ++goals; break;
        case 'Y':
          kind = TileKind::Safe;
          map.start_index = r * map.width + c;
          ++starts;
          break;
        default: throw BadCharError(r + 1, c + 1, row[static_cast<std::size_t>(c)]);
      }
      map.tiles.push_back(kind);
    }
  }
  if (goals == 0) throw Error(ErrorKind::MissingGoal, "map has no goal tile");
  if (goals > 1) throw Error(ErrorKind::MultipleGoals, "map has " + std::to_string(goals) + " goal tiles");
  if (starts == 0) throw Error(ErrorKind::MissingStart, "map has no start cell");
  if (starts > 1) throw Error(ErrorKind::MultipleStarts, "map has " + std::to_string(starts) + " start cells");
  return map;
}

std::string serialize_map(const GridMap& map) {
  std::string out;
  out.reserve(static_cast<std::size_t>((map.width + 1) * map.height));
  for (int i = 0; i < map.n_cells(); ++i) {
    char c = '?';
    switch (map.tile(i)) {
      case TileKind::Safe: c = 'S'; break;
      case TileKind::Frozen: c = 'F'; break;
      case TileKind::Hole: c = 'H'; break;
      case TileKind::HighReward: c = 'A'; break;
      case TileKind::Goal: c = 'G'; break;
    }
    if (i == map.start_index) c = 'Y';
    out.push_back(c);
    if (map.col_of(i) == map.width - 1) out.push_back('\n');
  }
  return out;
}

GridMap load_map(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open map file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_map(buf.str());
}

}  // namespace pril
