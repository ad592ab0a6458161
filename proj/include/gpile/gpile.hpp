#pragma once

// Umbrella header for the gpile library: focus-aware Gaussian fitting,
// rendering, compression, and voxelization of slice-stack volumes.

#include "gpile/backward.hpp"
#include "gpile/checkpoint.hpp"
#include "gpile/container.hpp"
#include "gpile/core.hpp"
#include "gpile/errors.hpp"
#include "gpile/grad_chain.hpp"
#include "gpile/image.hpp"
#include "gpile/loss.hpp"
#include "gpile/metrics.hpp"
#include "gpile/morton.hpp"
#include "gpile/optimize.hpp"
#include "gpile/parallel.hpp"
#include "gpile/phantom.hpp"
#include "gpile/psf.hpp"
#include "gpile/quant.hpp"
#include "gpile/render.hpp"
#include "gpile/rng.hpp"
#include "gpile/vec.hpp"
#include "gpile/volume_io.hpp"
#include "gpile/voxelize.hpp"
