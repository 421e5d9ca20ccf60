#pragma once

#include "pdipc/mesh.hpp"

#include <vector>

namespace pdipc::ipc {

struct CcdOptions {
    double slack = 0.9;
    int max_advancements = 64;
};

// Largest conservative step alpha in (0, 1] such that the linear motion
// s + t ds, t in [0, alpha], keeps every non-adjacent primitive pair apart.
// Uses conservative advancement: each pass advances by
// slack * (d_k - floor) / rate_k minimized over candidate pairs, where rate_k
// bounds the relative speed of the pair and floor = (1 - slack) * d_min(0).
// Throws GeometryError if the current state already touches or intersects.
double ccd_max_step(const EmbeddedSurface& surface, const std::vector<Vec3>& s, const std::vector<Vec3>& ds,
                    const CcdOptions& options = {});

}  // namespace pdipc::ipc
