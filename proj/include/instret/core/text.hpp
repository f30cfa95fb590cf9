#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace instret::text {

/// Fields separated by runs of spaces or tabs; trailing CR is ignored.
std::vector<std::string_view> split_fields(std::string_view line);

bool parse_int(std::string_view token, long long& out);
bool parse_double(std::string_view token, double& out);

/// Fixed six-decimal formatting used for every serialized score.
std::string format_score(double score);

}  // namespace instret::text
