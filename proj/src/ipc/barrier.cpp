#include "pdipc/ipc/barrier.hpp"

#include "pdipc/common.hpp"

#include <cmath>

namespace pdipc::ipc {

namespace {

void check_distance(double d)
{
    if (!(d > 0)) {
        throw ContractError("barrier evaluated at non-positive distance");
    }
}

}  // namespace

double barrier(double d, double d0)
{
    check_distance(d);
    if (d >= d0) {
        return 0.0;
    }
    const double diff = d - d0;
    return -diff * diff * std::log(d / d0);
}

double barrier_first_derivative(double d, double d0)
{
    check_distance(d);
    if (d >= d0) {
        return 0.0;
    }
    const double diff = d - d0;
    return -2.0 * diff * std::log(d / d0) - diff * diff / d;
}

double barrier_second_derivative(double d, double d0)
{
    check_distance(d);
    if (d >= d0) {
        return 0.0;
    }
    const double diff = d - d0;
    return -2.0 * std::log(d / d0) - 4.0 * diff / d + diff * diff / (d * d);
}

}  // namespace pdipc::ipc
