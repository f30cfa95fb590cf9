#pragma once

#include <cstddef>
#include <functional>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "instret/core/types.hpp"

namespace instret {

using Json = nlohmann::ordered_json;

/// Calls `visit` for each non-blank line parsed as JSON. Syntax errors are
/// reported as ParseError with the line number.
void for_each_json_line(std::istream& in, const std::function<void(const Json&, std::size_t)>& visit);

/// Compact single-line dump, UTF-8 kept as-is.
std::string dump_line(const Json& value);

// Field readers used by every JSONL schema; they throw ParseError naming the field.
const Json& require_field(const Json& object, const char* field, std::size_t line);
std::string require_string(const Json& object, const char* field, std::size_t line);
std::optional<std::string> optional_string(const Json& object, const char* field, std::size_t line);

Json to_json(const Passage& passage);
Passage passage_from_json(const Json& value, std::size_t line, const std::string& where = {});

Json to_json(const InstructedQuery& query);
InstructedQuery query_from_json(const Json& value, std::size_t line);

Json to_json(const TrainInstance& instance);
TrainInstance train_from_json(const Json& value, std::size_t line);

/// `{"doc_id", "title", "text"}` per line; doc ids must be unique.
std::vector<Passage> parse_corpus(std::istream& in);
void write_corpus(std::span<const Passage> corpus, std::ostream& out);

std::vector<InstructedQuery> parse_queries(std::istream& in);
void write_queries(std::span<const InstructedQuery> queries, std::ostream& out);

/// Every instance is checked with validate(TrainInstance).
std::vector<TrainInstance> parse_train(std::istream& in);
void write_train(std::span<const TrainInstance> instances, std::ostream& out);

}  // namespace instret
