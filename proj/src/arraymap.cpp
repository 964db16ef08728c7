#include "tilemul/arraymap.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "tilemul/errors.hpp"

namespace tilemul {

LogicalArray LogicalArray::uniform(std::size_t chain_count, std::size_t chain_length, std::size_t tasks) {
  return LogicalArray{std::vector<std::size_t>(chain_count, chain_length), tasks};
}

LogicalArray LogicalArray::from_tile_grid(const TileGrid& grid, std::size_t tasks) {
  LogicalArray la;
  la.task_count = tasks;
  for (const auto& chain : grid.chains) la.chain_lengths.push_back(chain.tiles.size());
  return la;
}

std::size_t LogicalArray::cells_per_task() const {
  return std::accumulate(chain_lengths.begin(), chain_lengths.end(), std::size_t{0});
}

namespace {

struct ChainRef {
  std::size_t task;
  std::size_t chain;
  std::size_t length;
};

// First-fit decreasing into bins of `capacity` cells. Ties keep logical order.
std::vector<std::vector<ChainRef>> form_links(std::vector<ChainRef> chains, std::size_t capacity) {
  std::stable_sort(chains.begin(), chains.end(),
                   [](const ChainRef& x, const ChainRef& y) { return x.length > y.length; });
  std::vector<std::vector<ChainRef>> links;
  std::vector<std::size_t> fill;
  for (const auto& ch : chains) {
    std::size_t i = 0;
    while (i < links.size() && fill[i] + ch.length > capacity) ++i;
    if (i == links.size()) {
      links.emplace_back();
      fill.push_back(0);
    }
    links[i].push_back(ch);
    fill[i] += ch.length;
  }
  return links;
}

}  // namespace

PlacementResult place(const LogicalArray& logical, const PhysicalGrid& grid) {
  if (logical.task_count == 0) throw ArgumentError("place: task count must be >= 1");
  std::vector<ChainRef> chains;
  std::size_t longest = 0;
  for (std::size_t t = 0; t < logical.task_count; ++t) {
    for (std::size_t c = 0; c < logical.chain_lengths.size(); ++c) {
      const std::size_t len = logical.chain_lengths[c];
      if (len == 0) continue;
      chains.push_back({t, c, len});
      longest = std::max(longest, len);
    }
  }
  if (longest > grid.cols)
    throw PlacementError(PlacementError::Kind::Unplaceable,
                         "chain of length " + std::to_string(longest) + " exceeds the " +
                             std::to_string(grid.cols) + "-cell row");
  if (logical.cell_count() > grid.capacity())
    throw PlacementError(PlacementError::Kind::Capacity,
                         std::to_string(logical.cell_count()) + " cells requested, grid holds " +
                             std::to_string(grid.capacity()));

  PlacementResult result;
  if (chains.empty()) return result;

  // Step 1: shortest common link length whose links fit as a rectangle of bands.
  std::vector<std::vector<ChainRef>> links;
  std::size_t link_length = 0;
  for (std::size_t len = longest; len <= grid.cols; ++len) {
    auto candidate = form_links(chains, len);
    if (candidate.size() <= grid.rows * (grid.cols / len)) {
      links = std::move(candidate);
      link_length = len;
      break;
    }
  }
  if (links.empty())
    throw PlacementError(PlacementError::Kind::Capacity,
                         "chains cannot be packed into whole rows of the grid");

  // Step 2: link s goes to row s % rows of band s / rows; odd rows run mirrored.
  for (std::size_t s = 0; s < links.size(); ++s) {
    const std::size_t row = s % grid.rows;
    const std::size_t start = (s / grid.rows) * link_length;
    const bool mirrored = grid.direction(row) == CascadeDirection::RightToLeft;
    std::size_t offset = 0;
    for (const auto& ch : links[s]) {
      for (std::size_t p = 0; p < ch.length; ++p, ++offset) {
        const std::size_t col = mirrored ? start + link_length - 1 - offset : start + offset;
        result.assignments.push_back({{ch.task, ch.chain, p}, {row, col}});
      }
    }
  }
  std::sort(result.assignments.begin(), result.assignments.end(), [](const auto& x, const auto& y) {
    return std::tie(x.logical.task, x.logical.chain, x.logical.position) <
           std::tie(y.logical.task, y.logical.chain, y.logical.position);
  });
  result.link_length = link_length;
  result.link_count = links.size();
  return result;
}

std::vector<Violation> validate_placement(const PlacementResult& p, const PhysicalGrid& grid) {
  std::vector<Violation> out;
  std::map<std::pair<std::size_t, std::size_t>, const Assignment*> occupied;
  std::map<std::tuple<std::size_t, std::size_t, std::size_t>, const Assignment*> by_logical;

  auto describe = [](const LogicalCell& l) {
    return "task " + std::to_string(l.task) + " chain " + std::to_string(l.chain) + " pos " +
           std::to_string(l.position);
  };

  for (const auto& a : p.assignments) {
    if (a.physical.row >= grid.rows || a.physical.col >= grid.cols) {
      out.push_back({Violation::Kind::OutOfBounds, a.logical, describe(a.logical) + " is outside the grid"});
      continue;
    }
    auto [it, fresh] = occupied.emplace(std::pair{a.physical.row, a.physical.col}, &a);
    if (!fresh)
      out.push_back({Violation::Kind::Collision, a.logical,
                     describe(a.logical) + " shares a cell with " + describe(it->second->logical)});
    by_logical[{a.logical.task, a.logical.chain, a.logical.position}] = &a;
  }

  for (const auto& [key, a] : by_logical) {
    auto [task, chain, pos] = key;
    auto next = by_logical.find({task, chain, pos + 1});
    if (next == by_logical.end()) continue;
    const auto& here = a->physical;
    const auto& there = next->second->physical;
    const auto dc = static_cast<std::ptrdiff_t>(there.col) - static_cast<std::ptrdiff_t>(here.col);
    if (here.row != there.row || (dc != 1 && dc != -1)) {
      out.push_back({Violation::Kind::NotAdjacent, a->logical,
                     describe(a->logical) + " is not next to its successor"});
      continue;
    }
    const std::ptrdiff_t expected = grid.direction(here.row) == CascadeDirection::LeftToRight ? 1 : -1;
    if (dc != expected)
      out.push_back({Violation::Kind::WrongDirection, a->logical,
                     describe(a->logical) + " cascades against the row direction"});
  }
  return out;
}

PlioPlan plan_broadcast(const ArrayConfig& cfg) {
  cfg.validate();
  PlioPlan plan;
  plan.inputs_per_task = cfg.intra0 + cfg.intra1;
  plan.outputs_per_task = cfg.intra0 + cfg.intra1 - 1;
  plan.total = (plan.inputs_per_task + plan.outputs_per_task) * cfg.inter;
  return plan;
}

std::string render_grid(const PlacementResult& p, const PhysicalGrid& grid) {
  static constexpr char kSymbols[] = "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ";
  std::vector<std::string> rows(grid.rows, std::string(grid.cols, '.'));
  for (const auto& a : p.assignments) {
    if (a.physical.row < grid.rows && a.physical.col < grid.cols)
      rows[a.physical.row][a.physical.col] = kSymbols[a.logical.task % 36];
  }
  std::string out;
  for (std::size_t r = grid.rows; r-- > 0;) out += rows[r] + '\n';
  return out;
}

void write_assignments_csv(std::ostream& out, const PlacementResult& p) {
  out << "task,chain,pos,row,col\n";
  for (const auto& a : p.assignments)
    out << a.logical.task << ',' << a.logical.chain << ',' << a.logical.position << ','
        << a.physical.row << ',' << a.physical.col << '\n';
}

}  // namespace tilemul
