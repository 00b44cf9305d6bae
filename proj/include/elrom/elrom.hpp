#pragma once

// Component-based model order reduction for 2D linear time-domain
// elastodynamics: FE truth solvers, PR-RBC offline training and online Schur
// assembly, and the two-level frequency-to-time reduction with a Strong
// Greedy basis.

#include "elrom/archetype.hpp"
#include "elrom/bench.hpp"
#include "elrom/common.hpp"
#include "elrom/fespace.hpp"
#include "elrom/forms.hpp"
#include "elrom/grid.hpp"
#include "elrom/io.hpp"
#include "elrom/library_io.hpp"
#include "elrom/merge.hpp"
#include "elrom/mesh.hpp"
#include "elrom/offline.hpp"
#include "elrom/online.hpp"
#include "elrom/parallel.hpp"
#include "elrom/pod.hpp"
#include "elrom/quadrature.hpp"
#include "elrom/system.hpp"
#include "elrom/truth.hpp"
#include "elrom/twolevel.hpp"
