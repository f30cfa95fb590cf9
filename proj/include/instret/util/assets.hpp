#pragma once

#include <string_view>
#include <vector>

namespace instret::assets {

/// Contents of a file bundled from assets/ (e.g. "templates/judge.v1.txt").
std::string_view get(std::string_view name);
std::vector<std::string_view> names();

}  // namespace instret::assets
