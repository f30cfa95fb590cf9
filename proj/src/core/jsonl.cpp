#include "instret/core/jsonl.hpp"

#include <unordered_set>

#include "instret/core/error.hpp"

namespace instret {

void for_each_json_line(std::istream& in, const std::function<void(const Json&, std::size_t)>& visit)
{
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.find_first_not_of(" \t") == std::string::npos) {
            continue;
        }
        Json value;
        try {
            value = Json::parse(line);
        } catch (const Json::parse_error& e) {
            throw ParseError(line_no, "", std::string("invalid JSON: ") + e.what());
        }
        if (!value.is_object()) {
            throw ParseError(line_no, "", "expected a JSON object");
        }
        visit(value, line_no);
    }
}

std::string dump_line(const Json& value)
{
    return value.dump(-1, ' ', false, Json::error_handler_t::strict);
}

const Json& require_field(const Json& object, const char* field, std::size_t line)
{
    auto it = object.find(field);
    if (it == object.end()) {
        throw ParseError(line, field, "missing");
    }
    return *it;
}

std::string require_string(const Json& object, const char* field, std::size_t line)
{
    const auto& value = require_field(object, field, line);
    if (!value.is_string()) {
        throw ParseError(line, field, "expected a string");
    }
    return value.get<std::string>();
}

std::optional<std::string> optional_string(const Json& object, const char* field, std::size_t line)
{
    auto it = object.find(field);
    if (it == object.end() || it->is_null()) {
        return std::nullopt;
    }
    if (!it->is_string()) {
        throw ParseError(line, field, "expected a string or null");
    }
    return it->get<std::string>();
}

Json to_json(const Passage& passage)
{
    Json out = Json::object();
    out["doc_id"] = passage.doc_id;
    out["title"] = passage.title;
    out["text"] = passage.text;
    return out;
}

Passage passage_from_json(const Json& value, std::size_t line, const std::string& where)
{
    auto prefixed = [&](const char* field) { return where.empty() ? std::string(field) : where + "." + field; };
    if (!value.is_object()) {
        throw ParseError(line, where, "expected a passage object");
    }
    Passage passage;
    for (const char* field : {"doc_id", "text"}) {
        auto it = value.find(field);
        if (it == value.end()) {
            throw ParseError(line, prefixed(field), "missing");
        }
        if (!it->is_string()) {
            throw ParseError(line, prefixed(field), "expected a string");
        }
    }
    passage.doc_id = value["doc_id"].get<std::string>();
    passage.text = value["text"].get<std::string>();
    if (auto it = value.find("title"); it != value.end() && !it->is_null()) {
        if (!it->is_string()) {
            throw ParseError(line, prefixed("title"), "expected a string");
        }
        passage.title = it->get<std::string>();
    }
    if (passage.doc_id.empty()) {
        throw ParseError(line, prefixed("doc_id"), "must be non-empty");
    }
    return passage;
}

namespace {

template <typename Tag, typename Parse>
std::optional<Tag> optional_tag(const Json& value, const char* field, std::size_t line, Parse parse)
{
    auto name = optional_string(value, field, line);
    if (!name) {
        return std::nullopt;
    }
    try {
        return parse(*name);
    } catch (const ValidationError& e) {
        throw ParseError(line, field, e.what());
    }
}

Json optional_to_json(const std::optional<std::string>& value)
{
    return value ? Json(*value) : Json(nullptr);
}

}  // namespace

Json to_json(const InstructedQuery& query)
{
    Json out = Json::object();
    out["query_id"] = query.query_id;
    out["query"] = query.query;
    out["instruction"] = optional_to_json(query.instruction);
    out["style"] = query.style ? Json(std::string(to_string(*query.style))) : Json(nullptr);
    out["length"] = query.length ? Json(std::string(to_string(*query.length))) : Json(nullptr);
    return out;
}

InstructedQuery query_from_json(const Json& value, std::size_t line)
{
    InstructedQuery query;
    query.query_id = require_string(value, "query_id", line);
    query.query = require_string(value, "query", line);
    query.instruction = optional_string(value, "instruction", line);
    query.style = optional_tag<InstructionStyle>(value, "style", line, parse_style);
    query.length = optional_tag<LengthFormat>(value, "length", line, parse_length);
    try {
        validate(query);
    } catch (const ValidationError& e) {
        throw ParseError(line, "query", e.what());
    }
    return query;
}

Json to_json(const TrainInstance& instance)
{
    Json out = Json::object();
    out["query_id"] = instance.query_id;
    out["query"] = instance.query;
    out["instruction"] = optional_to_json(instance.instruction);
    out["style"] = instance.style ? Json(std::string(to_string(*instance.style))) : Json(nullptr);
    out["length"] = instance.length ? Json(std::string(to_string(*instance.length))) : Json(nullptr);
    out["positive"] = to_json(instance.positive);
    Json negatives = Json::array();
    for (const auto& negative : instance.negatives) {
        Json entry = to_json(negative.passage);
        entry["source"] = std::string(to_string(negative.source));
        negatives.push_back(std::move(entry));
    }
    out["negatives"] = std::move(negatives);
    return out;
}

TrainInstance train_from_json(const Json& value, std::size_t line)
{
    TrainInstance instance;
    instance.query_id = require_string(value, "query_id", line);
    instance.query = require_string(value, "query", line);
    instance.instruction = optional_string(value, "instruction", line);
    instance.style = optional_tag<InstructionStyle>(value, "style", line, parse_style);
    instance.length = optional_tag<LengthFormat>(value, "length", line, parse_length);
    instance.positive = passage_from_json(require_field(value, "positive", line), line, "positive");

    const auto& negatives = require_field(value, "negatives", line);
    if (!negatives.is_array()) {
        throw ParseError(line, "negatives", "expected an array");
    }
    for (std::size_t i = 0; i < negatives.size(); ++i) {
        auto where = "negatives[" + std::to_string(i) + "]";
        TrainNegative negative;
        negative.passage = passage_from_json(negatives[i], line, where);
        auto source = optional_string(negatives[i], "source", line);
        if (!source) {
            throw ParseError(line, where + ".source", "missing");
        }
        try {
            negative.source = parse_negative_source(*source);
        } catch (const ValidationError& e) {
            throw ParseError(line, where + ".source", e.what());
        }
        instance.negatives.push_back(std::move(negative));
    }
    try {
        validate(instance);
    } catch (const ValidationError& e) {
        throw ParseError(line, "negatives", e.what());
    }
    return instance;
}

std::vector<Passage> parse_corpus(std::istream& in)
{
    std::vector<Passage> corpus;
    std::unordered_set<std::string> seen;
    for_each_json_line(in, [&](const Json& value, std::size_t line) {
        auto passage = passage_from_json(value, line);
        if (!seen.insert(passage.doc_id).second) {
            throw ParseError(line, "doc_id", "duplicate doc_id '" + passage.doc_id + "'");
        }
        corpus.push_back(std::move(passage));
    });
    return corpus;
}

void write_corpus(std::span<const Passage> corpus, std::ostream& out)
{
    for (const auto& passage : corpus) {
        out << dump_line(to_json(passage)) << '\n';
    }
}

std::vector<InstructedQuery> parse_queries(std::istream& in)
{
    std::vector<InstructedQuery> queries;
    std::unordered_set<std::string> seen;
    for_each_json_line(in, [&](const Json& value, std::size_t line) {
        auto query = query_from_json(value, line);
        if (!seen.insert(query.query_id).second) {
            throw ParseError(line, "query_id", "duplicate query_id '" + query.query_id + "'");
        }
        queries.push_back(std::move(query));
    });
    return queries;
}

void write_queries(std::span<const InstructedQuery> queries, std::ostream& out)
{
    for (const auto& query : queries) {
        out << dump_line(to_json(query)) << '\n';
    }
}

std::vector<TrainInstance> parse_train(std::istream& in)
{
    std::vector<TrainInstance> instances;
    for_each_json_line(in, [&](const Json& value, std::size_t line) { instances.push_back(train_from_json(value, line)); });
    return instances;
}

void write_train(std::span<const TrainInstance> instances, std::ostream& out)
{
    for (const auto& instance : instances) {
        validate(instance);
        out << dump_line(to_json(instance)) << '\n';
    }
}

}  // namespace instret
