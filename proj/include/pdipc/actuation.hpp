#pragma once

#include "pdipc/mesh.hpp"

#include <filesystem>
#include <iosfwd>
#include <vector>

namespace pdipc {

// Per-element symmetric strain targets for one animation frame.
struct ActuationFrame {
    std::vector<Mat3> matrices;

    static ActuationFrame identity(int num_elements);
    // Throws GeometryError unless every matrix is symmetric with positive determinant.
    void validate() const;
};

struct ActuationSequence {
    int num_elements = 0;
    std::vector<ActuationFrame> frames;
};

// Text format: "frames <T> elems <m>" then T*m lines of 9 row-major floats.
ActuationSequence parse_actuation(std::istream& in);
ActuationSequence load_actuation(const std::filesystem::path& path);
void write_actuation(const ActuationSequence& seq, std::ostream& out);
void save_actuation(const ActuationSequence& seq, const std::filesystem::path& path);

// Rotation factor of the polar decomposition of F * A, computed by SVD. When
// the product is orientation-reversing the axis of the smallest singular value
// is flipped so the result is a proper rotation.
Mat3 extract_rotation(const Mat3& F, const Mat3& A);

struct ElementProjection {
    Vec9 p;  // flatten(R * A)
    Mat3 rotation;
};

// Per-element projections for state x. Elements are independent.
std::vector<ElementProjection> local_step(const TetMesh& mesh, const VecX& x, const ActuationFrame& frame);

// min over R in SO(3) of ||F - R A||_F^2 (unweighted).
double element_energy(const Mat3& F, const Mat3& A);

}  // namespace pdipc
