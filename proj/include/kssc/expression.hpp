#pragma once

#include "kssc/common.hpp"

#include <map>
#include <string>

namespace kssc {

using Bindings = std::map<std::string, double>;

/// Evaluates an arithmetic expression with + - * /, parentheses, unary minus
/// and the functions min, max, floor, ceil. Identifiers resolve through
/// `bindings`; the middle dot is accepted as multiplication.
double evaluate_expression(const std::string& text, const Bindings& bindings);

/// Neighbour count from a rule such as "min(N_i/2, 1.5*D)": floored and
/// clamped to [1, n - 1].
Index evaluate_k_rule(const std::string& rule, const Bindings& bindings, Index n);

}  // namespace kssc
