#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "instret/core/judgments.hpp"
#include "instret/core/run.hpp"
#include "instret/core/types.hpp"
#include "instret/datagen/backend.hpp"
#include "instret/util/random.hpp"

namespace support {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
  public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const noexcept { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

  private:
    std::filesystem::path path_;
};

struct RandomCase {
    instret::RunList run;
    instret::Judgments qrels;
};

/// Up to `max_queries` queries, up to `max_docs` retrieved docs each, grades
/// 0..3 on a random subset (some judged docs are never retrieved). Scores
/// are drawn from a small grid so ties occur.
RandomCase random_case(instret::util::Rng& rng, std::size_t max_queries = 10, std::size_t max_docs = 50);

/// Source instances q0000.. with a positive and `hard_pool` hard negatives.
std::vector<instret::TrainInstance> make_sources(std::size_t queries, std::size_t hard_pool = 30);

/// Marker placed in the one candidate negative the mock judge accepts as
/// relevant (so it is discarded).
inline constexpr const char* kRejectMarker = "REJECTME";

/// Reply with one instruction positive and three instruction negatives; the
/// second negative carries kRejectMarker.
std::string candidate_reply(const std::string& query_id);

/// Mock table: every instruction/candidate request answered; the judge keeps
/// the original positive except for queries in `reject_positive`, keeps the
/// generated positive, and rejects exactly the marked negative.
std::vector<instret::datagen::MockBackend::Row> mock_rows(const std::vector<std::string>& query_ids,
                                                          const std::vector<std::string>& reject_positive);

/// Serializes rows in the mock table JSONL format.
void write_mock_table(const std::filesystem::path& path, const std::vector<instret::datagen::MockBackend::Row>& rows);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace support
