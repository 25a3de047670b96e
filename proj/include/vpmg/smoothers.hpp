#pragma once

#include <stdexcept>
#include <string>

#include "vpmg/common.hpp"
#include "vpmg/dof_map.hpp"
#include "vpmg/laplace_operator.hpp"
#include "vpmg/mesh_hierarchy.hpp"
#include "vpmg/parallel.hpp"
#include "vpmg/patch_inverse.hpp"

namespace vpmg {

enum class SmootherVariant {
  naive,               // global residual before every local solve
  combined,            // local residual fused with the local solve
  separated_colorized, // one global residual per color
  combined_colorized,  // local residuals, color loop
  batched,             // batch/color/patch triple loop, thread-parallel
  richardson
};

inline const char* to_string(SmootherVariant v) {
  switch (v) {
  case SmootherVariant::naive:
    return "naive";
  case SmootherVariant::combined:
    return "combined";
  case SmootherVariant::separated_colorized:
    return "separated_colorized";
  case SmootherVariant::combined_colorized:
    return "combined_colorized";
  case SmootherVariant::batched:
    return "batched";
  case SmootherVariant::richardson:
    return "richardson";
  }
  return "?";
}

inline SmootherVariant variant_from_string(const std::string& s) {
  for (SmootherVariant v :
       {SmootherVariant::naive, SmootherVariant::combined, SmootherVariant::separated_colorized,
        SmootherVariant::combined_colorized, SmootherVariant::batched, SmootherVariant::richardson})
    if (s == to_string(v))
      return v;
  throw std::invalid_argument("unknown smoother variant '" + s + "'");
}

enum class SweepDirection { forward, reverse };

/// Optional model of the per-patch index tables: one read per closure
/// entry against a dedicated trace array, laid out patch by patch.
struct MetadataModel {
  AccessTrace* trace = nullptr;
  const DofGrid* grid = nullptr;

  void on_patch(const PatchId& patch) const {
    if (!trace)
      return;
    const int per_dim = grid->cells_per_dim() - 1;
    std::size_t rank = 0;
    for (int k = grid->dim(); k-- > 0;)
      rank = rank * per_dim + static_cast<std::size_t>(patch.vertex[k] - 1);
    const std::size_t n_closure = ipow(2 * grid->degree() + 1, grid->dim());
    for (std::size_t i = 0; i < n_closure; ++i)
      trace->append(trace_array::metadata, rank * n_closure + i, AccessKind::read);
  }
};

/// Shared, read-only state for one level's smoothing sweeps.
struct SmootherContext {
  const DofGrid* grid = nullptr;
  const LaplaceOperator* op = nullptr;
  const FdmDecomposition* fdm = nullptr;
  WorkerPool* pool = nullptr;       // batched variant only
  AccessTrace* trace = nullptr;     // binds smoother-internal temporaries
  const MetadataModel* metadata = nullptr;
};

/// u += embedding of A_j^{-1} (restriction of r to the patch interior).
/// Only interior entries of the patch change.
inline void local_solve(const PatchId& patch, const DofVector& r, DofVector& u,
                        const SmootherContext& ctx) {
  if (ctx.metadata)
    ctx.metadata->on_patch(patch);
  const PatchIndexSets sets = patch_index_sets(*ctx.grid, patch);
  double rj[max_patch_closure];
  double dj[max_patch_closure];
  gather(r, sets.interior, rj);
  apply_fdm(*ctx.fdm, rj, dj);
  const std::size_t n = sets.interior_size();
  for (std::size_t i = 0; i < n; ++i)
    u.add(sets.interior[i], dj[i]);
}

/// Gauss-Seidel style update: the local residual is computed from the
/// current u immediately before the local solve, then scattered through
/// the cell-wise ownership masks.
inline void local_update(const PatchId& patch, DofVector& u, const DofVector& b,
                         const SmootherContext& ctx) {
  if (ctx.metadata)
    ctx.metadata->on_patch(patch);
  const PatchIndexSets sets = patch_index_sets(*ctx.grid, patch);
  double rj[max_patch_closure];
  double dj[max_patch_closure];
  double dj_closure[max_patch_closure];
  ctx.op->patch_residual(sets, u, b, rj);
  apply_fdm(*ctx.fdm, rj, dj);

  const std::size_t n_closure = sets.closure_size();
  for (std::size_t i = 0; i < n_closure; ++i)
    dj_closure[i] = 0.0;
  const std::size_t n = sets.interior_size();
  for (std::size_t i = 0; i < n; ++i)
    dj_closure[sets.interior_in_closure[i]] = dj[i];
  scatter_add_masked(u, sets, dj_closure);
}

/// u += omega * (b - A u).
inline void richardson(DofVector& u, const DofVector& b, double omega,
                       const SmootherContext& ctx) {
  if (omega < 0.0)
    throw std::invalid_argument("richardson: relaxation must be non-negative");
  DofVector r(u.size());
  r.bind_trace(ctx.trace, trace_array::residual);
  ctx.op->residual(r, u, b);
  for (std::size_t i = 0; i < u.size(); ++i)
    u.add(i, omega * r.get(i));
}

namespace detail {

template <typename Container, typename Fn>
void for_each_directed(const Container& c, SweepDirection dir, Fn&& fn) {
  if (dir == SweepDirection::forward) {
    for (const auto& e : c)
      fn(e);
  } else {
    for (auto it = c.rbegin(); it != c.rend(); ++it)
      fn(*it);
  }
}

} // namespace detail

/// One multiplicative smoothing sweep over the schedule. All variants
/// apply the same mathematical operation and differ in how residuals are
/// refreshed and how the patch loop is arranged.
inline void smooth(SmootherVariant variant, DofVector& u, const DofVector& b,
                   const Schedule& schedule, const SmootherContext& ctx,
                   SweepDirection dir = SweepDirection::forward,
                   double relaxation = 1.0) {
  switch (variant) {
  case SmootherVariant::naive: {
    // one full residual per patch; quadratic cost, oracle use only
    if (ctx.grid->size() > 10'000)
      throw std::invalid_argument("naive smoother is restricted to levels with <= 10^4 DoFs");
    DofVector r(u.size());
    r.bind_trace(ctx.trace, trace_array::residual);
    detail::for_each_directed(schedule.global, dir, [&](const PatchId& j) {
      ctx.op->residual(r, u, b);
      local_solve(j, r, u, ctx);
    });
    return;
  }
  case SmootherVariant::combined: {
    detail::for_each_directed(schedule.global, dir,
                              [&](const PatchId& j) { local_update(j, u, b, ctx); });
    return;
  }
  case SmootherVariant::separated_colorized: {
    if (schedule.n_batches() != 1)
      throw std::invalid_argument("separated_colorized requires a single-batch schedule");
    DofVector r(u.size());
    r.bind_trace(ctx.trace, trace_array::residual);
    detail::for_each_directed(schedule.batches.front(), dir, [&](const auto& color) {
      if (color.empty())
        return;
      ctx.op->residual(r, u, b);
      detail::for_each_directed(color, dir, [&](const PatchId& j) { local_solve(j, r, u, ctx); });
    });
    return;
  }
  case SmootherVariant::combined_colorized: {
    if (schedule.n_batches() != 1)
      throw std::invalid_argument("combined_colorized requires a single-batch schedule");
    detail::for_each_directed(schedule.batches.front(), dir, [&](const auto& color) {
      detail::for_each_directed(color, dir, [&](const PatchId& j) { local_update(j, u, b, ctx); });
    });
    return;
  }
  case SmootherVariant::batched: {
    // patches inside one (batch, color) entry are cell-disjoint, so they
    // may run concurrently; the pool joins between colors
    detail::for_each_directed(schedule.batches, dir, [&](const auto& batch) {
      detail::for_each_directed(batch, dir, [&](const auto& color) {
        if (color.empty())
          return;
        if (ctx.pool && ctx.pool->thread_count() > 1) {
          ctx.pool->run(color.size(), [&](std::size_t lo, std::size_t hi) {
            for (std::size_t i = lo; i < hi; ++i)
              local_update(dir == SweepDirection::forward ? color[i]
                                                          : color[color.size() - 1 - i],
                           u, b, ctx);
          });
        } else {
          detail::for_each_directed(color, dir,
                                    [&](const PatchId& j) { local_update(j, u, b, ctx); });
        }
      });
    });
    return;
  }
  case SmootherVariant::richardson:
    richardson(u, b, relaxation, ctx);
    return;
  }
  throw std::invalid_argument("unhandled smoother variant");
}

} // namespace vpmg
