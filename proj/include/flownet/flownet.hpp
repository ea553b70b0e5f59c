#pragma once

#include "error.hpp"
#include "types.hpp"
#include "topology.hpp"
#include "flowfuncs.hpp"
#include "policies.hpp"
#include "dynamics.hpp"
#include "analysis.hpp"
#include "resilience.hpp"
#include "io.hpp"

namespace flownet {

inline constexpr const char *version = "0.1.0";

} // namespace flownet
