#include "instret/datagen/backend.hpp"

#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>

#include "instret/util/files.hpp"
#include "instret/util/hash.hpp"

namespace instret::datagen {

std::string cache_key(const std::string& model, const DecodingParams& params, const LmRequest& request)
{
    Json canonical = Json::object();
    canonical["model"] = model;
    canonical["system"] = request.system;
    canonical["prompt"] = request.prompt;
    canonical["temperature"] = params.temperature;
    canonical["max_tokens"] = params.max_tokens;
    return util::sha256_hex(dump_line(canonical));
}

// --- HTTP ------------------------------------------------------------------

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config))
{
    const auto& url = config_.base_url;
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw ValidationError("backend base URL needs a scheme: '" + url + "'");
    }
    const auto path_start = url.find('/', scheme_end + 3);
    scheme_host_port_ = url.substr(0, path_start);
    path_ = path_start == std::string::npos ? std::string() : url.substr(path_start);
    while (!path_.empty() && path_.back() == '/') {
        path_.pop_back();
    }
    path_ += "/chat/completions";
    if (config_.model.empty()) {
        throw ValidationError("HTTP backend needs a model name");
    }
}

std::string HttpBackend::complete(const LmRequest& request)
{
    ++calls_;
    httplib::Client client(scheme_host_port_);
    client.set_connection_timeout(config_.timeout);
    client.set_read_timeout(config_.timeout);
    client.set_write_timeout(config_.timeout);

    httplib::Headers headers;
    if (const char* key = std::getenv(config_.api_key_env.c_str()); key != nullptr && *key != '\0') {
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    Json body = Json::object();
    body["model"] = config_.model;
    body["messages"] = Json::array({Json{{"role", "system"}, {"content", request.system}},
                                    Json{{"role", "user"}, {"content", request.prompt}}});
    body["temperature"] = config_.params.temperature;
    body["max_tokens"] = config_.params.max_tokens;

    auto result = client.Post(path_, headers, body.dump(), "application/json");
    if (!result) {
        throw BackendCallError("request to " + scheme_host_port_ + path_ + " failed: " + httplib::to_string(result.error()),
                               true);
    }
    const int status = result->status;
    if (status != 200) {
        const bool retryable = status == 408 || status == 429 || status >= 500;
        throw BackendCallError("backend returned HTTP " + std::to_string(status) + ": " + result->body.substr(0, 500),
                               retryable);
    }
    try {
        auto response = Json::parse(result->body);
        const auto& content = response.at("choices").at(0).at("message").at("content");
        if (!content.is_string()) {
            throw BackendCallError("backend response content is not a string", false);
        }
        return content.get<std::string>();
    } catch (const Json::exception& e) {
        throw BackendCallError(std::string("malformed chat-completions response: ") + e.what(), false);
    }
}

// --- Mock ------------------------------------------------------------------

MockBackend::MockBackend(std::vector<Row> rows, std::string model, DecodingParams params)
    : rows_(std::move(rows)), model_(std::move(model)), params_(params)
{
    for (std::size_t i = 0; i < rows_.size(); ++i) {
        const auto& match = rows_[i].match;
        auto task = match.find("task");
        auto query = match.find("query_id");
        if (task != match.end() && query != match.end()) {
            keyed_[{task->second, query->second}].push_back(i);
        } else {
            generic_.push_back(i);
        }
    }
}

std::vector<MockBackend::Row> MockBackend::parse_table(std::istream& in)
{
    std::vector<Row> rows;
    for_each_json_line(in, [&](const Json& value, std::size_t line) {
        Row row;
        if (auto it = value.find("match"); it != value.end()) {
            if (!it->is_object()) {
                throw ParseError(line, "match", "expected an object");
            }
            for (const auto& [key, v] : it->items()) {
                if (!v.is_string()) {
                    throw ParseError(line, "match." + key, "expected a string");
                }
                row.match.emplace(key, v.get<std::string>());
            }
        }
        if (auto it = value.find("contains"); it != value.end()) {
            if (it->is_string()) {
                row.contains.push_back(it->get<std::string>());
            } else if (it->is_array()) {
                for (const auto& v : *it) {
                    if (!v.is_string()) {
                        throw ParseError(line, "contains", "expected strings");
                    }
                    row.contains.push_back(v.get<std::string>());
                }
            } else {
                throw ParseError(line, "contains", "expected a string or array of strings");
            }
        }
        row.response = optional_string(value, "response", line);
        if (auto error = optional_string(value, "error", line)) {
            row.error = *error;
        }
        if (!row.response && row.error.empty()) {
            throw ParseError(line, "response", "row needs a response or an error");
        }
        rows.push_back(std::move(row));
    });
    return rows;
}

MockBackend MockBackend::from_jsonl(const std::filesystem::path& path, std::string model)
{
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open mock table '" + path.string() + "'");
    }
    return MockBackend(parse_table(in), std::move(model));
}

bool MockBackend::matches(const Row& row, const LmRequest& request) const
{
    for (const auto& [key, value] : row.match) {
        auto it = request.meta.find(key);
        if (it == request.meta.end() || it->second != value) {
            return false;
        }
    }
    for (const auto& needle : row.contains) {
        if (request.prompt.find(needle) == std::string::npos) {
            return false;
        }
    }
    return true;
}

std::string MockBackend::complete(const LmRequest& request)
{
    ++calls_;
    const std::vector<std::size_t>* keyed = nullptr;
    auto task = request.meta.find("task");
    auto query = request.meta.find("query_id");
    if (task != request.meta.end() && query != request.meta.end()) {
        if (auto it = keyed_.find({task->second, query->second}); it != keyed_.end()) {
            keyed = &it->second;
        }
    }
    // Walk keyed and generic candidates together in file order.
    std::size_t a = 0;
    std::size_t b = 0;
    const std::size_t keyed_size = keyed == nullptr ? 0 : keyed->size();
    while (a < keyed_size || b < generic_.size()) {
        std::size_t index = 0;
        if (b == generic_.size() || (a < keyed_size && (*keyed)[a] < generic_[b])) {
            index = (*keyed)[a++];
        } else {
            index = generic_[b++];
        }
        const auto& row = rows_[index];
        if (!matches(row, request)) {
            continue;
        }
        if (!row.error.empty()) {
            throw BackendCallError("mock row " + std::to_string(index + 1) + " simulates error '" + row.error + "'",
                                   row.error != "fatal");
        }
        return *row.response;
    }
    std::string described;
    for (const auto& [key, value] : request.meta) {
        described += (described.empty() ? "" : ", ") + key + "=" + value;
    }
    throw BackendCallError("mock table has no row for request {" + described + "}", false);
}

// --- Function --------------------------------------------------------------

FunctionBackend::FunctionBackend(Handler handler, std::string model, DecodingParams params)
    : handler_(std::move(handler)), model_(std::move(model)), params_(params)
{}

std::string FunctionBackend::complete(const LmRequest& request)
{
    ++calls_;
    return handler_(request);
}

// --- Retry -----------------------------------------------------------------

RetryingBackend::RetryingBackend(std::shared_ptr<LmBackend> inner, RetryPolicy policy, Sleeper sleeper)
    : inner_(std::move(inner)), policy_(policy), sleeper_(std::move(sleeper))
{
    if (!sleeper_) {
        sleeper_ = [](std::chrono::milliseconds delay) { std::this_thread::sleep_for(delay); };
    }
    if (policy_.max_attempts < 1) {
        throw ValidationError("retry policy needs at least one attempt");
    }
}

std::string RetryingBackend::complete(const LmRequest& request)
{
    auto delay = policy_.initial_backoff;
    for (int attempt = 1;; ++attempt) {
        try {
            return inner_->complete(request);
        } catch (const BackendCallError& e) {
            if (!e.retryable() || attempt >= policy_.max_attempts) {
                throw BackendCallError(e.what() + std::string(" (after ") + std::to_string(attempt) + " attempt"
                                           + (attempt == 1 ? "" : "s") + ")",
                                       false);
            }
        }
        sleeper_(delay);
        delay = std::chrono::milliseconds(static_cast<long long>(static_cast<double>(delay.count()) * policy_.multiplier));
    }
}

// --- Cache -----------------------------------------------------------------

ResponseCache::ResponseCache(std::filesystem::path directory) : directory_(std::move(directory))
{
    std::filesystem::create_directories(directory_);
}

std::filesystem::path ResponseCache::path_for(const std::string& key) const
{
    return directory_ / key.substr(0, 2) / (key + ".json");
}

std::optional<std::string> ResponseCache::get(const std::string& key) const
{
    const auto path = path_for(key);
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) {
        return std::nullopt;
    }
    try {
        auto stored = Json::parse(util::read_file(path));
        return stored.at("response").get<std::string>();
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

void ResponseCache::put(const std::string& key, const Json& request, const std::string& response) const
{
    const auto path = path_for(key);
    std::filesystem::create_directories(path.parent_path());
    Json stored = Json::object();
    stored["key"] = key;
    stored["request"] = request;
    stored["response"] = response;
    util::write_file_atomic(path, stored.dump(2) + "\n");
}

CachedBackend::CachedBackend(std::shared_ptr<LmBackend> inner, std::filesystem::path cache_dir)
    : inner_(std::move(inner)), cache_(std::move(cache_dir))
{}

std::shared_ptr<std::mutex> CachedBackend::key_lock(const std::string& key)
{
    std::lock_guard guard(locks_mutex_);
    auto& slot = locks_[key];
    if (!slot) {
        slot = std::make_shared<std::mutex>();
    }
    return slot;
}

std::string CachedBackend::complete(const LmRequest& request)
{
    const auto params = inner_->params();
    const auto key = cache_key(inner_->model(), params, request);
    auto lock = key_lock(key);
    std::lock_guard guard(*lock);
    if (auto hit = cache_.get(key)) {
        ++hits_;
        return *hit;
    }
    auto response = inner_->complete(request);
    Json described = Json::object();
    described["model"] = inner_->model();
    described["system"] = request.system;
    described["prompt"] = request.prompt;
    described["temperature"] = params.temperature;
    described["max_tokens"] = params.max_tokens;
    cache_.put(key, described, response);
    return response;
}

// --- Factory ---------------------------------------------------------------

std::shared_ptr<LmBackend> make_backend(const std::string& spec, const BackendOptions& options)
{
    std::shared_ptr<LmBackend> backend;
    if (spec.rfind("mock:", 0) == 0) {
        auto table_path = spec.substr(5);
        std::ifstream in(table_path);
        if (!in) {
            throw ValidationError("cannot open mock table '" + table_path + "'");
        }
        backend = std::make_shared<MockBackend>(MockBackend::parse_table(in), "mock:" + table_path, options.params);
    } else if (spec.rfind("openai:", 0) == 0) {
        HttpBackendConfig config;
        auto rest = spec.substr(7);
        if (auto at = rest.find('@'); at != std::string::npos) {
            config.model = rest.substr(0, at);
            config.base_url = rest.substr(at + 1);
        } else {
            config.model = rest;
        }
        config.api_key_env = options.api_key_env;
        config.params = options.params;
        config.timeout = options.timeout;
        backend = std::make_shared<HttpBackend>(config);
    } else {
        throw ValidationError("unknown backend spec '" + spec + "' (expected mock:<table> or openai:<model>[@url])");
    }
    backend = std::make_shared<RetryingBackend>(backend, options.retry);
    if (!options.cache_dir.empty()) {
        backend = std::make_shared<CachedBackend>(backend, options.cache_dir);
    }
    return backend;
}

}  // namespace instret::datagen
