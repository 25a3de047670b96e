#pragma once

// Umbrella header for the vertex-patch multigrid library.

#include "vpmg/common.hpp"
#include "vpmg/dense_matrix.hpp"
#include "vpmg/dense_oracle.hpp"
#include "vpmg/dof_map.hpp"
#include "vpmg/laplace_operator.hpp"
#include "vpmg/mesh_hierarchy.hpp"
#include "vpmg/multigrid.hpp"
#include "vpmg/parallel.hpp"
#include "vpmg/patch_inverse.hpp"
#include "vpmg/quadrature.hpp"
#include "vpmg/reference_element.hpp"
#include "vpmg/shape_data.hpp"
#include "vpmg/smoothers.hpp"
#include "vpmg/tensor_kernels.hpp"
#include "vpmg/trace.hpp"
#include "vpmg/traffic_model.hpp"
