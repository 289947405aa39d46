#ifndef MVAE_MATRIX_IO_HPP
#define MVAE_MATRIX_IO_HPP

#include <cstdint>
#include <filesystem>
#include <vector>

#include "mvae/matrix.hpp"

namespace mvae {

// Feature matrix file: magic "MVF1", then rows and cols as u32 little
// endian, then rows*cols IEEE-754 float32 little endian, row-major.
Matrix load_feature_matrix(const std::filesystem::path& path);
// Values are narrowed to float32 on write.
void write_feature_matrix(const std::filesystem::path& path, const Matrix& m);

// Label file: magic "MVL1", then count as u32 little endian, then count
// u32 little endian class ids.
std::vector<std::uint32_t> load_labels(const std::filesystem::path& path);
void write_labels(const std::filesystem::path& path,
                  const std::vector<std::uint32_t>& labels);

// In-memory codecs behind the file functions, exposed for tests.
std::vector<std::uint8_t> encode_feature_matrix(const Matrix& m);
Matrix decode_feature_matrix(const std::vector<std::uint8_t>& bytes,
                             const std::string& origin);
// Reads one matrix record starting at offset and advances it, for files
// that embed a sequence of records.
Matrix decode_feature_matrix_at(const std::vector<std::uint8_t>& bytes,
                                std::size_t& offset, const std::string& origin);
std::vector<std::uint8_t> encode_labels(const std::vector<std::uint32_t>& labels);
std::vector<std::uint32_t> decode_labels(const std::vector<std::uint8_t>& bytes,
                                         const std::string& origin);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path,
                      const std::vector<std::uint8_t>& bytes);

// Round toward float32 precision without leaving double storage.
inline double quantize_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

}  // namespace mvae

#endif
