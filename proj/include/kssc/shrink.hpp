#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <type_traits>

namespace kssc {

/// Soft threshold sign(v) * max(|v| - tau, 0), the proximal map of tau * |.|.
template <typename Scalar, typename = std::enable_if_t<std::is_floating_point_v<Scalar>>>
constexpr Scalar shrink(Scalar v, Scalar tau) {
    const Scalar mag = std::max(std::abs(v) - tau, Scalar(0));
    return v < 0 ? -mag : mag;
}

/// Elementwise soft threshold. Works on vectors and matrices alike.
template <typename Derived>
typename Derived::PlainObject shrink(const Eigen::MatrixBase<Derived>& v,
                                     typename Derived::Scalar tau) {
    using Scalar = typename Derived::Scalar;
    return v.unaryExpr([tau](Scalar a) { return shrink(a, tau); });
}

}  // namespace kssc
