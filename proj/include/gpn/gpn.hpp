#pragma once

// Gaussian-proposal localization toolkit: bounding ellipses as 2D
// Gaussians, the rotated KL divergence loss with analytic gradients,
// anchor encoding, rasterized ellipse IoU, NMS, FROC evaluation, synthetic
// scenes, and the gradient-descent fitting harness.

#include "gpn/anchors.hpp"
#include "gpn/common.hpp"
#include "gpn/eval.hpp"
#include "gpn/fit.hpp"
#include "gpn/geometry.hpp"
#include "gpn/io.hpp"
#include "gpn/kl_loss.hpp"
#include "gpn/raster.hpp"
#include "gpn/rng.hpp"
#include "gpn/synth.hpp"
