#pragma once
// Placement of cascade chains onto the physical 8 x 50 tile grid.
//
// Step 1 matches chains into links of one common length (chains shorter than
// the link share it, first-fit decreasing). Step 2 stacks links bottom to top
// in bands of that width, bands left to right. Cascade streams flow left to
// right in even rows and right to left in odd rows, so links in odd rows are
// laid out mirrored.

#include <cstddef>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tilemul/mulengine.hpp"

namespace tilemul {

enum class CascadeDirection { LeftToRight, RightToLeft };

struct PhysicalGrid {
  std::size_t rows = 8;
  std::size_t cols = 50;

  std::size_t capacity() const { return rows * cols; }
  CascadeDirection direction(std::size_t row) const {
    return row % 2 == 0 ? CascadeDirection::LeftToRight : CascadeDirection::RightToLeft;
  }
};

/// Cascade chains of one task, replicated `task_count` times.
struct LogicalArray {
  std::vector<std::size_t> chain_lengths;
  std::size_t task_count = 1;

  static LogicalArray uniform(std::size_t chain_count, std::size_t chain_length, std::size_t tasks);
  /// One chain per anti-diagonal of the tile grid.
  static LogicalArray from_tile_grid(const TileGrid& grid, std::size_t tasks);

  std::size_t cells_per_task() const;
  std::size_t cell_count() const { return cells_per_task() * task_count; }
};

struct LogicalCell {
  std::size_t task = 0;
  std::size_t chain = 0;
  std::size_t position = 0;
};

struct PhysicalCell {
  std::size_t row = 0;
  std::size_t col = 0;
};

struct Assignment {
  LogicalCell logical;
  PhysicalCell physical;
};

struct PlacementResult {
  std::vector<Assignment> assignments;  // ordered by (task, chain, position)
  std::size_t link_length = 0;
  std::size_t link_count = 0;

  std::size_t occupied_count() const { return assignments.size(); }
};

class PlacementError : public std::runtime_error {
 public:
  enum class Kind { Unplaceable, Capacity };
  PlacementError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Throws PlacementError: Unplaceable when a chain is longer than a row,
/// Capacity when the cells do not fit.
PlacementResult place(const LogicalArray& logical, const PhysicalGrid& grid = {});

struct Violation {
  enum class Kind { OutOfBounds, Collision, NotAdjacent, WrongDirection };
  Kind kind;
  LogicalCell at;
  std::string message;
};

std::vector<Violation> validate_placement(const PlacementResult& p, const PhysicalGrid& grid = {});

/// Streams per task: operand-A segments are broadcast along rows and operand-B
/// segments along the anti-diagonals, and each cascade chain has one output.
struct PlioPlan {
  std::size_t inputs_per_task = 0;
  std::size_t outputs_per_task = 0;
  std::size_t total = 0;  // (2*P_intra0 + 2*P_intra1 - 1) * P_inter
};

PlioPlan plan_broadcast(const ArrayConfig& cfg);

/// One character per cell, top row first: '.' for a free cell, otherwise the
/// task index in base 36.
std::string render_grid(const PlacementResult& p, const PhysicalGrid& grid = {});

/// CSV with header `task,chain,pos,row,col`.
void write_assignments_csv(std::ostream& out, const PlacementResult& p);

}  // namespace tilemul
