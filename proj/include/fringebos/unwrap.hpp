#pragma once

#include "fringebos/field.hpp"

namespace fringebos::unwrap {

/// Per-pixel reliability 1 / (H^2 + V^2 + D1^2 + D2^2) from wrapped second
/// differences; border pixels use mirrored neighbours.
RealField reliability(const RealField& wrapped);

/// Reliability-sorted, non-continuous-path 2D unwrapping. Edges between
/// 4-neighbours are processed in decreasing summed reliability (ties: lower
/// edge index first); groups merge through union-find, the smaller group
/// being shifted by 2 pi k. The global piston is left free.
RealField unwrap2d(const RealField& wrapped);

}  // namespace fringebos::unwrap
