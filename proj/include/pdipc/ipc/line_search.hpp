#pragma once

#include "pdipc/common.hpp"

#include <functional>

namespace pdipc::ipc {

class LineSearchStall : public NumericalError {
public:
    using NumericalError::NumericalError;
};

struct LineSearchResult {
    double alpha = 0;
    double energy = 0;
    int halvings = 0;
};

// Halving backtracking from alpha_max until energy(alpha) < energy0.
// `slope` is the directional derivative g^T dx; a non-negative slope is
// rejected with ContractError. Throws LineSearchStall after max_halvings.
LineSearchResult backtracking_line_search(const std::function<double(double)>& energy, double energy0,
                                          double slope, double alpha_max, int max_halvings = 30);

}  // namespace pdipc::ipc
