#pragma once

// Multimodal trajectory optimization for planar kinematic chains: alternates
// cost-weighted density estimation over sampled trajectories with covariant
// gradient refinement and constraint projection.

#include "smto/arm.hpp"
#include "smto/common.hpp"
#include "smto/cost.hpp"
#include "smto/eigenmap.hpp"
#include "smto/io.hpp"
#include "smto/modes.hpp"
#include "smto/optimizer.hpp"
#include "smto/parallel.hpp"
#include "smto/rng.hpp"
#include "smto/sampling.hpp"
#include "smto/scene.hpp"
#include "smto/svg.hpp"
#include "smto/trajectory.hpp"
#include "smto/vbem.hpp"
#include "smto/weights.hpp"
