#pragma once

namespace pdipc::ipc {

// Clamped log barrier b(d) = -(d - d0)^2 ln(d / d0) on (0, d0), zero beyond.
// C2 at d = d0; diverges as d -> 0. Throws ContractError for d <= 0.
double barrier(double d, double d0);
double barrier_first_derivative(double d, double d0);
double barrier_second_derivative(double d, double d0);

}  // namespace pdipc::ipc
