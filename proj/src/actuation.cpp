#include "pdipc/actuation.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

namespace pdipc {

ActuationFrame ActuationFrame::identity(int num_elements)
{
    return ActuationFrame{std::vector<Mat3>(num_elements, Mat3::Identity())};
}

void ActuationFrame::validate() const
{
    for (std::size_t e = 0; e < matrices.size(); ++e) {
        const Mat3& A = matrices[e];
        if (!A.allFinite()) {
            throw GeometryError("actuation matrix " + std::to_string(e) + " is not finite");
        }
        if ((A - A.transpose()).cwiseAbs().maxCoeff() >= 1e-9) {
            throw GeometryError("actuation matrix " + std::to_string(e) + " is not symmetric");
        }
        if (!(A.determinant() > 0)) {
            throw GeometryError("actuation matrix " + std::to_string(e) + " has non-positive determinant");
        }
    }
}

ActuationSequence parse_actuation(std::istream& in)
{
    std::string w1, w2;
    long frames = -1, elems = -1;
    if (!(in >> w1 >> frames >> w2 >> elems) || w1 != "frames" || w2 != "elems" || frames < 0 ||
        elems < 0) {
        throw ParseError("actuation header must be 'frames <T> elems <m>'");
    }
    ActuationSequence seq;
    seq.num_elements = static_cast<int>(elems);
    seq.frames.resize(frames);
    for (long t = 0; t < frames; ++t) {
        auto& mats = seq.frames[t].matrices;
        mats.resize(elems);
        for (long e = 0; e < elems; ++e) {
            for (int r = 0; r < 3; ++r) {
                for (int c = 0; c < 3; ++c) {
                    if (!(in >> mats[e](r, c))) {
                        throw ParseError("truncated actuation data at frame " + std::to_string(t) +
                                         ", element " + std::to_string(e));
                    }
                }
            }
        }
        seq.frames[t].validate();
    }
    std::string trailing;
    if (in >> trailing) {
        throw ParseError("unexpected trailing token '" + trailing + "' in actuation file");
    }
    return seq;
}

ActuationSequence load_actuation(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open actuation file '" + path.string() + "'");
    }
    return parse_actuation(in);
}

void write_actuation(const ActuationSequence& seq, std::ostream& out)
{
    out << "frames " << seq.frames.size() << " elems " << seq.num_elements << '\n';
    out << std::setprecision(17);
    for (const auto& frame : seq.frames) {
        for (const auto& A : frame.matrices) {
            for (int r = 0; r < 3; ++r) {
                for (int c = 0; c < 3; ++c) {
                    out << A(r, c) << (r == 2 && c == 2 ? '\n' : ' ');
                }
            }
        }
    }
}

void save_actuation(const ActuationSequence& seq, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out) {
        throw ParseError("cannot write '" + path.string() + "'");
    }
    write_actuation(seq, out);
}

Mat3 extract_rotation(const Mat3& F, const Mat3& A)
{
    if (!F.allFinite()) {
        throw NumericalError("non-finite deformation gradient");
    }
    const Mat3 M = F * A;
    // Scaled Newton iteration for the polar factor; it converges to the
    // nearest rotation whenever det(M) is safely positive.
    const double scale = M.squaredNorm();
    if (scale > 0 && M.determinant() > 1e-6 * scale * std::sqrt(scale)) {
        Mat3 X = M;
        for (int k = 0; k < 30; ++k) {
            const Mat3 Xinv = X.inverse();
            const double gamma = std::sqrt(std::sqrt(Xinv.squaredNorm() / X.squaredNorm()));
            const Mat3 next = 0.5 * (gamma * X + Xinv.transpose() / gamma);
            const double change = (next - X).squaredNorm();
            X = next;
            if (change < 1e-26) {
                return X;
            }
        }
    }
    const Eigen::JacobiSVD<Mat3> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 U = svd.matrixU();
    const Mat3& V = svd.matrixV();
    if ((U * V.transpose()).determinant() < 0) {
        // singular values are sorted decreasingly; the last one is the smallest
        U.col(2) *= -1.0;
    }
    return U * V.transpose();
}

std::vector<ElementProjection> local_step(const TetMesh& mesh, const VecX& x, const ActuationFrame& frame)
{
    if (static_cast<int>(frame.matrices.size()) != mesh.num_elements()) {
        throw ContractError("actuation frame has wrong element count");
    }
    std::vector<ElementProjection> out(mesh.num_elements());
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const Mat3 F = mesh.deformation_gradient(e, x);
        const Mat3& A = frame.matrices[e];
        const Mat3 R = extract_rotation(F, A);
        out[e].rotation = R;
        out[e].p = flatten(R * A);
    }
    return out;
}

double element_energy(const Mat3& F, const Mat3& A)
{
    const Mat3 R = extract_rotation(F, A);
    return (F - R * A).squaredNorm();
}

}  // namespace pdipc
