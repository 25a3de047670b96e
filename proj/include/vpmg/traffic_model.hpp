#pragma once

#include <cstdint>
#include <list>
#include <stdexcept>
#include <unordered_map>

#include "vpmg/dof_map.hpp"
#include "vpmg/laplace_operator.hpp"
#include "vpmg/mesh_hierarchy.hpp"
#include "vpmg/patch_inverse.hpp"
#include "vpmg/smoothers.hpp"
#include "vpmg/trace.hpp"

namespace vpmg {

/// Fully associative LRU cache with write-allocate and write-back,
/// measured in lines of line_elems doubles.
struct CacheConfig {
  std::size_t capacity_lines = 4096;
  std::size_t line_elems = 8; // 64 bytes of 8-byte reals

  void validate() const {
    if (capacity_lines < 1 || line_elems < 1)
      throw std::invalid_argument("CacheConfig: capacity and line size must be positive");
  }
};

struct TrafficReport {
  std::uint64_t lines_loaded = 0;
  std::uint64_t lines_written_back = 0;
  double doubles_per_dof = 0.0;
};

/// Replays an access trace through the cache model. A miss loads the
/// line, evicting the least recently used one (counting a write-back if
/// dirty); remaining dirty lines are flushed at the end.
inline TrafficReport simulate_lru(const AccessTrace& trace, const CacheConfig& config,
                                  std::size_t n_dofs) {
  config.validate();

  std::list<std::uint64_t> lru; // front = most recently used
  struct Entry {
    std::list<std::uint64_t>::iterator pos;
    bool dirty;
  };
  std::unordered_map<std::uint64_t, Entry> lines;
  lines.reserve(std::min<std::size_t>(config.capacity_lines, std::size_t{1} << 22));

  TrafficReport report;
  for (const TraceRecord& r : trace.records()) {
    const std::uint64_t key = (static_cast<std::uint64_t>(r.array_id) << 56) |
                              (static_cast<std::uint64_t>(r.index) / config.line_elems);
    const bool is_write = r.kind == static_cast<std::uint8_t>(AccessKind::write);
    auto found = lines.find(key);
    if (found != lines.end()) {
      lru.splice(lru.begin(), lru, found->second.pos);
      found->second.dirty |= is_write;
      continue;
    }
    ++report.lines_loaded;
    if (lines.size() >= config.capacity_lines) {
      const std::uint64_t victim = lru.back();
      auto v = lines.find(victim);
      if (v->second.dirty)
        ++report.lines_written_back;
      lines.erase(v);
      lru.pop_back();
    }
    lru.push_front(key);
    lines.emplace(key, Entry{lru.begin(), is_write});
  }
  for (const auto& [key, entry] : lines)
    if (entry.dirty)
      ++report.lines_written_back;

  report.doubles_per_dof =
      static_cast<double>((report.lines_loaded + report.lines_written_back) * config.line_elems) /
      static_cast<double>(n_dofs);
  return report;
}

struct TraceOptions {
  std::size_t max_records = 50'000'000;
  bool include_index_metadata = false;
  std::uint64_t seed = 42;
};

/// Replays one smoothing sweep with instrumented vectors and returns the
/// element-access stream. The replay always runs the sequential
/// equivalent of the schedule, which touches the same data in the same
/// per-patch order as any conforming parallel execution.
inline AccessTrace record_trace(SmootherVariant variant, PatchOrdering ordering, std::size_t n_b,
                                int dim, int degree, int level, const TraceOptions& opts = {}) {
  const MeshHierarchy mesh(dim, level + 1);
  const DofGrid grid(dim, degree, level);
  const LaplaceOperator op(grid);
  const FdmDecomposition fdm = build_fdm(degree, grid.cell_size(), dim);

  const bool single_batch = variant == SmootherVariant::separated_colorized ||
                            variant == SmootherVariant::combined_colorized;
  const Schedule schedule = build_schedule(mesh, level, ordering, single_batch ? 0 : n_b);

  DofVector u(grid.size());
  randomize_interior(u, grid, opts.seed);
  DofVector b = op.assemble_rhs(1.0);

  AccessTrace trace(opts.max_records);
  u.bind_trace(&trace, trace_array::solution);
  b.bind_trace(&trace, trace_array::rhs);

  SmootherContext ctx;
  ctx.grid = &grid;
  ctx.op = &op;
  ctx.fdm = &fdm;
  ctx.trace = &trace;
  MetadataModel metadata{&trace, &grid};
  if (opts.include_index_metadata)
    ctx.metadata = &metadata;

  smooth(variant, u, b, schedule, ctx);
  return trace;
}

} // namespace vpmg
