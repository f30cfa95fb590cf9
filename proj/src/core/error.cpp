#include "instret/core/error.hpp"

#include <utility>

namespace instret {

namespace {
std::string format_parse_message(std::size_t line, const std::string& field, const std::string& message,
                                 ParseError::Location location)
{
    std::string out = (location == ParseError::Location::Line ? "line " : "byte offset ") + std::to_string(line);
    if (!field.empty()) {
        out += ", field '" + field + "'";
    }
    return out + ": " + message;
}
}  // namespace

ParseError::ParseError(std::size_t line, std::string field, const std::string& message, Location location)
    : ValidationError(format_parse_message(line, field, message, location)),
      line_(line),
      field_(std::move(field)),
      location_(location)
{}

}  // namespace instret
