#pragma once

#include <cstddef>
#include <span>

namespace rejopt {

enum class KernelType { Linear, Rbf };

struct KernelSpec {
    KernelType type = KernelType::Linear;
    double gamma = 1.0;

    static KernelSpec linear() { return {KernelType::Linear, 1.0}; }
    static KernelSpec rbf(double gamma) { return {KernelType::Rbf, gamma}; }

    friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

/// Kernel over vectors whose last `linear_tail` coordinates always enter through a
/// plain dot product: k(a, b) = base(a_head, b_head) + <a_tail, b_tail>.
/// With linear_tail == 0 the base kernel sees the whole vector.
class Kernel {
public:
    Kernel(KernelSpec spec, std::size_t linear_tail = 0);

    [[nodiscard]] double operator()(std::span<const double> a, std::span<const double> b) const;

    [[nodiscard]] const KernelSpec& spec() const noexcept { return spec_; }
    [[nodiscard]] std::size_t linear_tail() const noexcept { return linear_tail_; }

    /// True when the decision function is affine in the whole input vector.
    [[nodiscard]] bool is_linear() const noexcept { return spec_.type == KernelType::Linear; }

private:
    KernelSpec spec_;
    std::size_t linear_tail_;
};

}  // namespace rejopt
