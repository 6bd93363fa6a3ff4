#pragma once

#include "ema/rig.hpp"

#include <string>
#include <string_view>

namespace ema {

// Self-contained JSON rig document; doubles are written with round-trip
// precision so a reloaded rig animates bit-identically.
std::string write_rig(const Rig& rig);
Rig parse_rig(std::string_view text);

}  // namespace ema
