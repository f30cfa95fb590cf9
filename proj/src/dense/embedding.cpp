#include "instret/dense/embedding.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <unordered_set>

#include "instret/core/error.hpp"
#include "instret/util/files.hpp"

namespace instret::dense {

namespace {

constexpr char kMagic[4] = {'E', 'M', 'B', '1'};
constexpr std::size_t kHeaderBytes = 12;
constexpr auto kAt = ParseError::Location::ByteOffset;

void put_u32(std::string& out, std::uint32_t value)
{
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
    }
}

std::uint32_t get_u32(std::string_view bytes, std::size_t offset)
{
    std::uint32_t value = 0;
    for (int i = 0; i < 4; ++i) {
        value |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[offset + i])) << (8 * i);
    }
    return value;
}

bool rows_are_unit(std::span<const float> values, std::size_t rows, std::size_t dim)
{
    if (rows == 0) {
        return true;
    }
    for (std::size_t r = 0; r < rows; ++r) {
        double squares = 0.0;
        for (std::size_t d = 0; d < dim; ++d) {
            const double v = values[r * dim + d];
            squares += v * v;
        }
        if (std::abs(std::sqrt(squares) - 1.0) > EmbeddingMatrix::kUnitNormTolerance) {
            return false;
        }
    }
    return true;
}

}  // namespace

EmbeddingMatrix::EmbeddingMatrix(std::vector<std::string> ids, std::size_t dim, std::vector<float> values)
    : ids_(std::move(ids)), dim_(dim), values_(std::move(values))
{
    if (!ids_.empty() && dim_ == 0) {
        throw ValidationError("embedding matrix with rows must have dim >= 1");
    }
    if (values_.size() != ids_.size() * dim_) {
        throw ValidationError("embedding matrix has " + std::to_string(values_.size()) + " values, expected "
                              + std::to_string(ids_.size()) + " x " + std::to_string(dim_));
    }
    std::unordered_set<std::string> seen;
    for (const auto& id : ids_) {
        if (id.empty()) {
            throw ValidationError("embedding matrix has an empty id");
        }
        if (!seen.insert(id).second) {
            throw ValidationError("embedding matrix repeats id '" + id + "'");
        }
    }
    normalized_ = rows_are_unit(values_, ids_.size(), dim_);
}

std::string encode_emb1(const EmbeddingMatrix& matrix)
{
    std::string out(kMagic, sizeof(kMagic));
    put_u32(out, static_cast<std::uint32_t>(matrix.rows()));
    put_u32(out, static_cast<std::uint32_t>(matrix.dim()));
    out.reserve(kHeaderBytes + matrix.values().size() * 4);
    for (float value : matrix.values()) {
        put_u32(out, std::bit_cast<std::uint32_t>(value));
    }
    return out;
}

EmbeddingMatrix decode_emb1(std::string_view bytes, std::vector<std::string> ids)
{
    if (bytes.size() < kHeaderBytes) {
        throw ParseError(bytes.size(), "header", "truncated EMB1 header: " + std::to_string(bytes.size()) + " of "
                                                     + std::to_string(kHeaderBytes) + " bytes", kAt);
    }
    if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
        throw ParseError(0, "magic", "bad magic, expected \"EMB1\"", kAt);
    }
    const std::uint64_t count = get_u32(bytes, 4);
    const std::uint64_t dim = get_u32(bytes, 8);
    if (count > 0 && dim == 0) {
        throw ParseError(8, "dim", "dim must be >= 1 when count > 0", kAt);
    }
    const std::uint64_t expected = kHeaderBytes + count * dim * 4;
    if (bytes.size() < expected) {
        throw ParseError(bytes.size(), "values",
                         "truncated: header declares " + std::to_string(count) + " x " + std::to_string(dim)
                             + " floats (" + std::to_string(expected) + " bytes) but file ends at byte "
                             + std::to_string(bytes.size()), kAt);
    }
    if (bytes.size() > expected) {
        throw ParseError(expected, "values", "trailing bytes after " + std::to_string(count) + " x "
                                                 + std::to_string(dim) + " floats", kAt);
    }
    if (ids.size() != count) {
        throw ParseError(4, "count", "header count " + std::to_string(count) + " does not match "
                                         + std::to_string(ids.size()) + " ids", kAt);
    }
    std::vector<float> values(count * dim);
    for (std::size_t i = 0; i < values.size(); ++i) {
        values[i] = std::bit_cast<float>(get_u32(bytes, kHeaderBytes + 4 * i));
    }
    return EmbeddingMatrix(std::move(ids), dim, std::move(values));
}

std::filesystem::path ids_path_for(const std::filesystem::path& path)
{
    auto ids = path;
    ids.replace_extension(".ids");
    return ids;
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path)
{
    auto bytes = util::read_file(path);
    auto ids = util::split_lines(util::read_file(ids_path_for(path)));
    try {
        return decode_emb1(bytes, std::move(ids));
    } catch (const ParseError& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

void save_embeddings(const EmbeddingMatrix& matrix, const std::filesystem::path& path)
{
    std::string ids;
    for (const auto& id : matrix.ids()) {
        if (id.find_first_of("\r\n") != std::string::npos) {
            throw ValidationError("embedding id '" + id + "' contains a line break");
        }
        ids += id;
        ids += '\n';
    }
    util::write_file_atomic(path, encode_emb1(matrix));
    util::write_file_atomic(ids_path_for(path), ids);
}

EmbeddingMatrix normalize(const EmbeddingMatrix& matrix)
{
    std::vector<float> values(matrix.values().begin(), matrix.values().end());
    const auto dim = matrix.dim();
    for (std::size_t r = 0; r < matrix.rows(); ++r) {
        double squares = 0.0;
        for (std::size_t d = 0; d < dim; ++d) {
            const double v = values[r * dim + d];
            squares += v * v;
        }
        const double norm = std::sqrt(squares);
        if (!(norm > 0.0) || !std::isfinite(norm)) {
            throw ValidationError("cannot normalize row '" + matrix.ids()[r] + "': zero or non-finite norm");
        }
        for (std::size_t d = 0; d < dim; ++d) {
            values[r * dim + d] = static_cast<float>(static_cast<double>(values[r * dim + d]) / norm);
        }
    }
    return EmbeddingMatrix(matrix.ids(), dim, std::move(values));
}

}  // namespace instret::dense
