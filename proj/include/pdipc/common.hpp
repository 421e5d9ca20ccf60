#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <stdexcept>
#include <string>

namespace pdipc {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Vec9 = Eigen::Matrix<double, 9, 1>;
using Vec12 = Eigen::Matrix<double, 12, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat12 = Eigen::Matrix<double, 12, 12>;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input files or configuration.
class ParseError : public Error {
public:
    using Error::Error;
};

// Invalid geometry: inverted elements, out-of-range indices, points outside the mesh.
class GeometryError : public Error {
public:
    using Error::Error;
};

// Factorization failures, non-finite values, indefinite systems.
class NumericalError : public Error {
public:
    using Error::Error;
};

// A caller broke a documented precondition (e.g. barrier evaluated at d <= 0).
class ContractError : public Error {
public:
    using Error::Error;
};

inline Vec3 vertex(const VecX& x, int v) { return x.segment<3>(3 * v); }

}  // namespace pdipc
