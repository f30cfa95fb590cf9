#include "instret/cli/manifest.hpp"

#include "instret/util/files.hpp"
#include "instret/util/hash.hpp"

namespace instret::cli {

Manifest::Manifest(std::string command) : command_(std::move(command)) {}

Manifest::Entry Manifest::hashed(const std::string& role, const std::filesystem::path& path)
{
    return {role, path.generic_string(), util::sha256_file_hex(path)};
}

void Manifest::add_input(const std::string& role, const std::filesystem::path& path)
{
    inputs_.push_back(hashed(role, path));
}

void Manifest::add_output(const std::string& role, const std::filesystem::path& path)
{
    outputs_.push_back(hashed(role, path));
}

void Manifest::add_stdout(const std::string& role, std::string_view content)
{
    outputs_.push_back({role, "-", util::sha256_hex(content)});
}

Json Manifest::to_json() const
{
    auto entries = [](const std::vector<Entry>& list) {
        Json out = Json::array();
        for (const auto& e : list) {
            out.push_back({{"role", e.role}, {"path", e.path}, {"sha256", e.sha256}});
        }
        return out;
    };
    Json out = Json::object();
    out["manifest_version"] = 1;
    out["command"] = command_;
    out["config"] = config_;
    out["inputs"] = entries(inputs_);
    out["outputs"] = entries(outputs_);
    out["summary"] = summary_;
    return out;
}

void Manifest::write(const std::filesystem::path& path) const
{
    util::write_file_atomic(path, to_json().dump(2) + "\n");
}

std::filesystem::path Manifest::default_path(const std::filesystem::path& output)
{
    auto path = output;
    path += ".manifest.json";
    return path;
}

}  // namespace instret::cli
