#pragma once

// Everything at once.

#include "waistlab/errors.hpp"
#include "waistlab/surface.hpp"
#include "waistlab/quadrature.hpp"
#include "waistlab/geodesics.hpp"
#include "waistlab/busemann.hpp"
#include "waistlab/grid.hpp"
#include "waistlab/weakkam.hpp"
#include "waistlab/diffusion.hpp"
#include "waistlab/parallel.hpp"
#include "waistlab/ldp.hpp"
#include "waistlab/comparison.hpp"
#include "waistlab/config.hpp"
#include "waistlab/csv.hpp"
#include "waistlab/acceptance.hpp"
#include "waistlab/pipeline.hpp"
