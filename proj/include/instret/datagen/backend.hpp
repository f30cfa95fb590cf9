#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "instret/core/error.hpp"
#include "instret/core/jsonl.hpp"

namespace instret::datagen {

struct DecodingParams {
    double temperature = 0.0;
    int max_tokens = 2048;
};

/// One chat completion. `meta` carries routing hints (task, query_id,
/// doc_id, ...) used by mock tables and audit logs; it is neither sent over
/// the wire nor part of the cache key.
struct LmRequest {
    std::string system;
    std::string prompt;
    std::map<std::string, std::string> meta;
};

/// A failed call. Retryable failures (timeouts, 429, 5xx) are retried by
/// RetryingBackend; others surface immediately.
class BackendCallError : public BackendError {
  public:
    BackendCallError(const std::string& message, bool retryable) : BackendError(message), retryable_(retryable) {}
    bool retryable() const noexcept { return retryable_; }

  private:
    bool retryable_;
};

class LmBackend {
  public:
    virtual ~LmBackend() = default;

    /// Thread-safe. Throws BackendCallError.
    virtual std::string complete(const LmRequest& request) = 0;
    virtual const std::string& model() const = 0;
    virtual DecodingParams params() const = 0;

    /// Requests that reached the underlying model (network or mock table).
    virtual std::size_t call_count() const = 0;
};

/// SHA-256 over the canonical JSON of (model, system, prompt, params).
std::string cache_key(const std::string& model, const DecodingParams& params, const LmRequest& request);

/// OpenAI-compatible chat-completions client. The API key, when the named
/// environment variable is set, goes in an `Authorization: Bearer` header.
struct HttpBackendConfig {
    std::string base_url = "https://api.openai.com/v1";
    std::string model;
    std::string api_key_env = "OPENAI_API_KEY";
    DecodingParams params;
    std::chrono::seconds timeout{120};
};

class HttpBackend final : public LmBackend {
  public:
    explicit HttpBackend(HttpBackendConfig config);

    std::string complete(const LmRequest& request) override;
    const std::string& model() const override { return config_.model; }
    DecodingParams params() const override { return config_.params; }
    std::size_t call_count() const override { return calls_.load(); }

  private:
    HttpBackendConfig config_;
    std::string scheme_host_port_;
    std::string path_;
    std::atomic<std::size_t> calls_{0};
};

/// Offline backend answering from a JSONL response table. Each row is
///   {"match": {meta key: value, ...}, "contains": [substr, ...],
///    "response": "..."}  or  {..., "error": "timeout" | "fatal"}
/// and the first row (in file order) whose `match` entries all equal the
/// request meta and whose `contains` substrings all occur in the prompt
/// wins. No matching row is a non-retryable error.
class MockBackend final : public LmBackend {
  public:
    struct Row {
        std::map<std::string, std::string> match;
        std::vector<std::string> contains;
        std::optional<std::string> response;
        std::string error;
    };

    explicit MockBackend(std::vector<Row> rows, std::string model = "mock", DecodingParams params = {});
    static MockBackend from_jsonl(const std::filesystem::path& path, std::string model = "mock");
    static std::vector<Row> parse_table(std::istream& in);

    std::string complete(const LmRequest& request) override;
    const std::string& model() const override { return model_; }
    DecodingParams params() const override { return params_; }
    std::size_t call_count() const override { return calls_.load(); }

  private:
    bool matches(const Row& row, const LmRequest& request) const;

    std::vector<Row> rows_;
    std::string model_;
    DecodingParams params_;
    // Rows bucketed by (task, query_id) when both are matched on; others are generic.
    std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> keyed_;
    std::vector<std::size_t> generic_;
    std::atomic<std::size_t> calls_{0};
};

/// In-process backend driven by a callback; used for tests and adapters.
class FunctionBackend final : public LmBackend {
  public:
    using Handler = std::function<std::string(const LmRequest&)>;

    explicit FunctionBackend(Handler handler, std::string model = "function", DecodingParams params = {});

    std::string complete(const LmRequest& request) override;
    const std::string& model() const override { return model_; }
    DecodingParams params() const override { return params_; }
    std::size_t call_count() const override { return calls_.load(); }

  private:
    Handler handler_;
    std::string model_;
    DecodingParams params_;
    std::atomic<std::size_t> calls_{0};
};

struct RetryPolicy {
    int max_attempts = 4;
    std::chrono::milliseconds initial_backoff{1000};
    double multiplier = 2.0;
};

/// Retries retryable failures with exponential backoff, then rethrows.
class RetryingBackend final : public LmBackend {
  public:
    using Sleeper = std::function<void(std::chrono::milliseconds)>;

    RetryingBackend(std::shared_ptr<LmBackend> inner, RetryPolicy policy, Sleeper sleeper = {});

    std::string complete(const LmRequest& request) override;
    const std::string& model() const override { return inner_->model(); }
    DecodingParams params() const override { return inner_->params(); }
    std::size_t call_count() const override { return inner_->call_count(); }

  private:
    std::shared_ptr<LmBackend> inner_;
    RetryPolicy policy_;
    Sleeper sleeper_;
};

/// Content-addressed response store: one JSON file per key under
/// `<dir>/<key[0:2]>/<key>.json`, written atomically.
class ResponseCache {
  public:
    explicit ResponseCache(std::filesystem::path directory);

    std::optional<std::string> get(const std::string& key) const;
    void put(const std::string& key, const Json& request, const std::string& response) const;
    const std::filesystem::path& directory() const noexcept { return directory_; }

  private:
    std::filesystem::path path_for(const std::string& key) const;

    std::filesystem::path directory_;
};

/// Serves repeated requests from a ResponseCache. Concurrent requests for the
/// same key are serialized so the inner backend is asked at most once.
class CachedBackend final : public LmBackend {
  public:
    CachedBackend(std::shared_ptr<LmBackend> inner, std::filesystem::path cache_dir);

    std::string complete(const LmRequest& request) override;
    const std::string& model() const override { return inner_->model(); }
    DecodingParams params() const override { return inner_->params(); }
    std::size_t call_count() const override { return inner_->call_count(); }
    std::size_t hit_count() const { return hits_.load(); }

  private:
    std::shared_ptr<std::mutex> key_lock(const std::string& key);

    std::shared_ptr<LmBackend> inner_;
    ResponseCache cache_;
    std::mutex locks_mutex_;
    std::map<std::string, std::shared_ptr<std::mutex>> locks_;
    std::atomic<std::size_t> hits_{0};
};

/// Builds a backend from a CLI spec: `mock:<table.jsonl>` or
/// `openai:<model>[@<base_url>]`, wrapped in retries and, when cache_dir is
/// non-empty, a response cache.
struct BackendOptions {
    std::filesystem::path cache_dir;
    RetryPolicy retry;
    DecodingParams params;
    std::string api_key_env = "OPENAI_API_KEY";
    std::chrono::seconds timeout{120};
};
std::shared_ptr<LmBackend> make_backend(const std::string& spec, const BackendOptions& options);

}  // namespace instret::datagen
