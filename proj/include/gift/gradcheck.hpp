#ifndef GIFT_GRADCHECK_HPP
#define GIFT_GRADCHECK_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "gift/stgcn.hpp"

namespace gift {

struct GradCheckCase {
  std::string name;
  GradCheckResult result;
  int attempts = 0;  // draws needed to avoid a ReLU kink
};

/// Double-precision gradient checks of every layer type in isolation and of
/// the full objective at embed 16, tau 5, T 12 over two synthetic clips.
std::vector<GradCheckCase> gradcheck_suite(std::uint64_t seed, bool include_full_model = true);

}  // namespace gift

#endif  // GIFT_GRADCHECK_HPP
