#include "rejopt/kernel.hpp"

#include <cmath>

#include "rejopt/error.hpp"
#include "rejopt/matrix.hpp"

namespace rejopt {

Kernel::Kernel(KernelSpec spec, std::size_t linear_tail) : spec_(spec), linear_tail_(linear_tail)
{
    if (spec_.type == KernelType::Rbf) {
        require(spec_.gamma > 0.0 && std::isfinite(spec_.gamma), "RBF width gamma must be positive");
    }
}

double Kernel::operator()(std::span<const double> a, std::span<const double> b) const
{
    if (spec_.type == KernelType::Linear) {
        return dot(a, b);
    }
    const std::size_t head = a.size() - linear_tail_;
    double d2 = 0.0;
    for (std::size_t i = 0; i < head; ++i) {
        const double d = a[i] - b[i];
        d2 += d * d;
    }
    return std::exp(-spec_.gamma * d2) + dot(a.subspan(head), b.subspan(head));
}

}  // namespace rejopt
