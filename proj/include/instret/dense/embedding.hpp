#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace instret::dense {

/// Row-major id-aligned float vectors. `normalized()` reports whether every
/// row has unit L2 norm to within kUnitNormTolerance.
class EmbeddingMatrix {
  public:
    static constexpr double kUnitNormTolerance = 1e-4;

    EmbeddingMatrix() = default;
    /// Throws ValidationError when values.size() != ids.size() * dim, ids
    /// repeat or are empty, or rows exist with dim == 0.
    EmbeddingMatrix(std::vector<std::string> ids, std::size_t dim, std::vector<float> values);

    std::size_t rows() const noexcept { return ids_.size(); }
    std::size_t dim() const noexcept { return dim_; }
    bool normalized() const noexcept { return normalized_; }
    const std::vector<std::string>& ids() const noexcept { return ids_; }
    std::span<const float> values() const noexcept { return values_; }
    std::span<const float> row(std::size_t i) const { return std::span<const float>(values_).subspan(i * dim_, dim_); }

    bool operator==(const EmbeddingMatrix&) const = default;

  private:
    std::vector<std::string> ids_;
    std::size_t dim_ = 0;
    std::vector<float> values_;
    bool normalized_ = false;
};

/// EMB1 payload: "EMB1", u32 count, u32 dim (little-endian), then
/// count*dim little-endian float32 values.
std::string encode_emb1(const EmbeddingMatrix& matrix);
/// Parses an EMB1 payload against its id list. Errors carry the byte offset.
EmbeddingMatrix decode_emb1(std::string_view bytes, std::vector<std::string> ids);

/// Companion id file: the payload path with its extension replaced by `.ids`.
std::filesystem::path ids_path_for(const std::filesystem::path& path);

EmbeddingMatrix load_embeddings(const std::filesystem::path& path);
void save_embeddings(const EmbeddingMatrix& matrix, const std::filesystem::path& path);

/// Divides every row by its L2 norm (computed in double). Throws
/// ValidationError naming the id of a zero row.
EmbeddingMatrix normalize(const EmbeddingMatrix& matrix);

}  // namespace instret::dense
