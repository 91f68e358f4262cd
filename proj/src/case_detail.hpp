#pragma once

// Shared case-geometry diagnostics: parse_case reports these with a
// "case:" anchor, materialize_case re-checks programmatically built specs
// with the same wording.

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vadose/driver.hpp"

namespace vadose::detail_case {

extern const char* const kSideNames[6];

// Direction index for a side name ("x_min".."z_max"); -1 when unknown.
int side_of_name(std::string_view s);

// The two non-face axes of a face direction, ascending.
std::pair<int, int> transverse(int axis);

// Empty when zones tile the grid exactly once. On success and when paint
// is given, fills it with the zone index per global cell.
std::vector<std::string> zone_errors(const GridSpec& g,
                                     const std::vector<ZoneSpec>& zones,
                                     std::vector<int>* paint);

// Empty when every exterior face is covered by exactly one patch, free
// drainage sits on the gravity-low face, and series indexes are in range.
std::vector<std::string> patch_errors(const GridSpec& g,
                                      const std::vector<Patch>& patches,
                                      std::size_t series_count);

}  // namespace vadose::detail_case
