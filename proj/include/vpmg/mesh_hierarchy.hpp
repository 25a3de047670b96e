#pragma once

#include <algorithm>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vpmg/common.hpp"

namespace vpmg {

/// Nested uniform Cartesian meshes of the unit hypercube. Level l has
/// 2^(l+1) cells per direction, so level 0 consists of a single vertex
/// patch and each refinement doubles the cell count.
struct MeshHierarchy {
  int dim = 2;
  int n_levels = 1; // levels 0 .. n_levels-1

  MeshHierarchy(int dim_, int n_levels_) : dim(dim_), n_levels(n_levels_) {
    check_dim(dim);
    if (n_levels < 1)
      throw std::invalid_argument("MeshHierarchy: need at least one level");
  }

  int finest_level() const { return n_levels - 1; }

  int cells_per_dim(int level) const {
    require_level(level);
    return 1 << (level + 1);
  }

  double cell_size(int level) const { return 1.0 / cells_per_dim(level); }

  /// Interior vertices per direction, i.e. vertex patches per direction.
  int patches_per_dim(int level) const { return cells_per_dim(level) - 1; }

  std::size_t n_patches(int level) const {
    return ipow(static_cast<std::size_t>(patches_per_dim(level)), dim);
  }

  void require_level(int level) const {
    if (level < 0 || level >= n_levels)
      throw std::invalid_argument("level " + std::to_string(level) + " outside [0," +
                                  std::to_string(n_levels - 1) + "]");
  }
};

/// A vertex patch: the 2^d cells around one interior vertex of a level.
/// Vertex coordinates are 1-based cell-grid coordinates, strictly inside
/// (0, cells_per_dim).
struct PatchId {
  int level = 0;
  Index3 vertex{};

  friend bool operator==(const PatchId& a, const PatchId& b) {
    return a.level == b.level && a.vertex == b.vertex;
  }
};

enum class PatchOrdering { z_curve, hierarchical };

inline const char* to_string(PatchOrdering o) {
  return o == PatchOrdering::z_curve ? "z_curve" : "hierarchical";
}

inline PatchOrdering ordering_from_string(const std::string& s) {
  if (s == "z_curve")
    return PatchOrdering::z_curve;
  if (s == "hierarchical")
    return PatchOrdering::hierarchical;
  throw std::invalid_argument("unknown ordering '" + s + "'");
}

/// All patches of a level in lexicographic vertex order.
inline std::vector<PatchId> enumerate_patches(const MeshHierarchy& mesh, int level) {
  mesh.require_level(level);
  const int n = mesh.patches_per_dim(level);
  std::vector<PatchId> patches;
  patches.reserve(mesh.n_patches(level));
  Index3 v{};
  for (int k = 0; k < mesh.dim; ++k)
    v[k] = 1;
  while (true) {
    patches.push_back(PatchId{level, v});
    int k = 0;
    for (; k < mesh.dim; ++k) {
      if (++v[k] <= n)
        break;
      v[k] = 1;
    }
    if (k == mesh.dim)
      break;
  }
  return patches;
}

/// Morton code of the zero-based vertex coordinates, x-fastest bit
/// interleave: bit b of coordinate k lands at position b*dim + k.
inline std::uint64_t morton_code(const PatchId& patch, int dim) {
  std::uint64_t code = 0;
  for (int k = 0; k < dim; ++k) {
    const std::uint64_t c = static_cast<std::uint64_t>(patch.vertex[k] - 1);
    for (int b = 0; b * dim + k < 63; ++b) {
      if (c >> b == 0)
        break;
      code |= ((c >> b) & 1u) << (b * dim + k);
    }
  }
  return code;
}

inline std::vector<PatchId> morton_order(std::vector<PatchId> patches, int dim) {
  std::stable_sort(patches.begin(), patches.end(), [dim](const PatchId& a, const PatchId& b) {
    return morton_code(a, dim) < morton_code(b, dim);
  });
  return patches;
}

/// Coarsest level on which the vertex already exists: the vertex survives
/// coarsening as long as every coordinate stays even.
inline int coarsest_level_of_vertex(const PatchId& patch, int dim) {
  int shift = patch.level; // cannot go below level 0
  for (int k = 0; k < dim; ++k) {
    int s = 0;
    int v = patch.vertex[k];
    while (s < shift && (v & 1) == 0) {
      v >>= 1;
      ++s;
    }
    shift = std::min(shift, s);
  }
  return patch.level - shift;
}

/// Groups patches by the coarsest level at which their vertex exists,
/// coarsest first, Morton order inside each group.
inline std::vector<PatchId> hierarchical_order(std::vector<PatchId> patches, int dim) {
  std::stable_sort(patches.begin(), patches.end(), [dim](const PatchId& a, const PatchId& b) {
    const int la = coarsest_level_of_vertex(a, dim);
    const int lb = coarsest_level_of_vertex(b, dim);
    if (la != lb)
      return la < lb;
    return morton_code(a, dim) < morton_code(b, dim);
  });
  return patches;
}

/// Parity color of a patch: bit k set when vertex coordinate k is odd.
/// Patches sharing a color are pairwise cell-disjoint.
inline int patch_color(const PatchId& patch, int dim) {
  int color = 0;
  for (int k = 0; k < dim; ++k)
    color |= (patch.vertex[k] & 1) << k;
  return color;
}

inline std::vector<int> color_patches(const std::vector<PatchId>& patches, int dim) {
  std::vector<int> colors(patches.size());
  for (std::size_t i = 0; i < patches.size(); ++i)
    colors[i] = patch_color(patches[i], dim);
  return colors;
}

/// Loop structure for the smoothers: batches of per-color patch runs.
/// batches[b][k] holds the b-th run of color k in the global order;
/// concatenating the runs of one color over all batches reproduces the
/// color subsequence of `global`.
struct Schedule {
  PatchOrdering ordering = PatchOrdering::z_curve;
  std::size_t batch_size = 0;
  std::vector<PatchId> global;
  std::vector<std::vector<std::vector<PatchId>>> batches;

  std::size_t n_batches() const { return batches.size(); }
  std::size_t n_colors() const { return batches.empty() ? 0 : batches.front().size(); }

  std::size_t max_color_size() const {
    std::vector<std::size_t> sizes(n_colors(), 0);
    for (const auto& batch : batches)
      for (std::size_t k = 0; k < batch.size(); ++k)
        sizes[k] += batch[k].size();
    std::size_t m = 0;
    for (std::size_t s : sizes)
      m = std::max(m, s);
    return m;
  }

  /// Same patches with every traversal level reversed. Used for the
  /// post-smoothing sweeps.
  Schedule reversed() const {
    Schedule r;
    r.ordering = ordering;
    r.batch_size = batch_size;
    r.global.assign(global.rbegin(), global.rend());
    r.batches.assign(batches.rbegin(), batches.rend());
    for (auto& batch : r.batches) {
      std::reverse(batch.begin(), batch.end());
      for (auto& run : batch)
        std::reverse(run.begin(), run.end());
    }
    return r;
  }

  /// Diagnostic text format, one line per (batch, color) entry.
  std::string to_text(int dim) const {
    std::ostringstream os;
    os << "schedule ordering=" << vpmg::to_string(ordering) << " n_B=" << batch_size << "\n";
    for (std::size_t b = 0; b < batches.size(); ++b) {
      for (std::size_t k = 0; k < batches[b].size(); ++k) {
        os << "batch " << b << " color " << k << ":";
        for (const PatchId& p : batches[b][k]) {
          os << " (";
          for (int d = 0; d < dim; ++d)
            os << (d ? "," : "") << p.vertex[d];
          os << ")";
        }
        os << "\n";
      }
    }
    return os.str();
  }
};

/// Splits an ordered patch list into the batch/color/run structure: color
/// subsequences keep the global order and are cut into runs of n_B
/// patches, the last run of a color possibly shorter.
inline Schedule make_schedule(const std::vector<PatchId>& ordered_patches, int dim,
                              std::size_t n_b) {
  if (n_b == 0)
    throw std::invalid_argument("make_schedule: batch size must be positive");
  check_dim(dim);

  const std::size_t n_colors = std::size_t{1} << dim;
  std::vector<std::vector<PatchId>> by_color(n_colors);
  for (const PatchId& p : ordered_patches)
    by_color[patch_color(p, dim)].push_back(p);

  std::size_t max_color = 0;
  for (const auto& c : by_color)
    max_color = std::max(max_color, c.size());
  const std::size_t n_batches = max_color == 0 ? 0 : (max_color + n_b - 1) / n_b;

  Schedule s;
  s.batch_size = n_b;
  s.global = ordered_patches;
  s.batches.resize(n_batches);
  for (std::size_t b = 0; b < n_batches; ++b) {
    s.batches[b].resize(n_colors);
    for (std::size_t k = 0; k < n_colors; ++k) {
      const auto& color = by_color[k];
      const std::size_t lo = std::min(b * n_b, color.size());
      const std::size_t hi = std::min(lo + n_b, color.size());
      s.batches[b][k].assign(color.begin() + lo, color.begin() + hi);
    }
  }
  return s;
}

/// Convenience builder: enumerate, order, and batch the patches of one
/// level. n_b == 0 selects one batch per color (color-by-color execution).
inline Schedule build_schedule(const MeshHierarchy& mesh, int level, PatchOrdering ordering,
                               std::size_t n_b = 0) {
  std::vector<PatchId> patches = enumerate_patches(mesh, level);
  patches = ordering == PatchOrdering::z_curve ? morton_order(std::move(patches), mesh.dim)
                                               : hierarchical_order(std::move(patches), mesh.dim);
  std::size_t effective = n_b;
  if (effective == 0) {
    std::vector<std::size_t> sizes(std::size_t{1} << mesh.dim, 0);
    for (const PatchId& p : patches)
      ++sizes[patch_color(p, mesh.dim)];
    for (std::size_t s : sizes)
      effective = std::max(effective, s);
    effective = std::max<std::size_t>(effective, 1);
  }
  Schedule s = make_schedule(patches, mesh.dim, effective);
  s.ordering = ordering;
  return s;
}

} // namespace vpmg
