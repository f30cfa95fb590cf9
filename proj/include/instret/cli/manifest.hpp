#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "instret/core/jsonl.hpp"

namespace instret::cli {

/// Provenance record for one invocation: command, effective configuration,
/// and SHA-256 of every input and output file. No timestamps or absolute
/// paths, so equal runs give byte-equal manifests.
class Manifest {
  public:
    explicit Manifest(std::string command);

    void set_config(Json config) { config_ = std::move(config); }
    void add_input(const std::string& role, const std::filesystem::path& path);
    void add_output(const std::string& role, const std::filesystem::path& path);
    /// Output that went to stdout rather than a file; recorded with path "-".
    void add_stdout(const std::string& role, std::string_view content);
    void set_summary(Json summary) { summary_ = std::move(summary); }

    Json to_json() const;
    /// Pretty-printed JSON plus trailing newline, written atomically.
    void write(const std::filesystem::path& path) const;

    static std::filesystem::path default_path(const std::filesystem::path& output);

  private:
    struct Entry {
        std::string role;
        std::string path;
        std::string sha256;
    };
    static Entry hashed(const std::string& role, const std::filesystem::path& path);

    std::string command_;
    Json config_ = Json::object();
    std::vector<Entry> inputs_;
    std::vector<Entry> outputs_;
    Json summary_ = Json::object();
};

}  // namespace instret::cli
