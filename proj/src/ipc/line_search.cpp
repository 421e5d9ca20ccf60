#include "pdipc/ipc/line_search.hpp"

#include <cmath>
#include <string>

namespace pdipc::ipc {

LineSearchResult backtracking_line_search(const std::function<double(double)>& energy, double energy0,
                                          double slope, double alpha_max, int max_halvings)
{
    if (!(slope < 0)) {
        throw ContractError("line search: direction is not a descent direction (g.dx = " +
                            std::to_string(slope) + ")");
    }
    if (!(alpha_max > 0)) {
        throw ContractError("line search: maximum step must be positive");
    }
    double alpha = alpha_max;
    for (int k = 0; k <= max_halvings; ++k) {
        const double e = energy(alpha);
        if (std::isfinite(e) && e < energy0) {
            return {alpha, e, k};
        }
        alpha *= 0.5;
    }
    throw LineSearchStall("line search: no decrease after " + std::to_string(max_halvings) + " halvings");
}

}  // namespace pdipc::ipc
