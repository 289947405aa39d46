#include "mvae/matrix_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "mvae/errors.hpp"

namespace mvae {

namespace {

constexpr char FEATURE_MAGIC[4] = {'M', 'V', 'F', '1'};
constexpr char LABEL_MAGIC[4] = {'M', 'V', 'L', '1'};

void put_u32le(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xFF));
    out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xFF));
}

std::uint32_t get_u32le(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) |
           (static_cast<std::uint32_t>(p[3]) << 24);
}

void check_magic(const std::vector<std::uint8_t>& bytes, const char magic[4],
                 const std::string& origin, const char* kind) {
    if (bytes.size() < 4) {
        throw TruncationError(origin + ": file shorter than the 4-byte magic");
    }
    if (std::memcmp(bytes.data(), magic, 4) != 0) {
        throw FormatError(origin + ": bad magic, expected " + std::string(magic, 4) +
                          " for a " + kind + " file");
    }
}

}  // namespace

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string() + " for reading");
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (in.bad()) {
        throw IoError("read failed on " + path.string());
    }
    return bytes;
}

void write_file_bytes(const std::filesystem::path& path,
                      const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw IoError("write failed on " + path.string());
    }
}

std::vector<std::uint8_t> encode_feature_matrix(const Matrix& m) {
    std::vector<std::uint8_t> out;
    out.reserve(12 + 4 * m.size());
    out.insert(out.end(), FEATURE_MAGIC, FEATURE_MAGIC + 4);
    put_u32le(out, static_cast<std::uint32_t>(m.rows()));
    put_u32le(out, static_cast<std::uint32_t>(m.cols()));
    for (std::size_t i = 0; i < m.size(); ++i) {
        const float f = static_cast<float>(m.data()[i]);
        put_u32le(out, std::bit_cast<std::uint32_t>(f));
    }
    return out;
}

Matrix decode_feature_matrix_at(const std::vector<std::uint8_t>& bytes,
                                std::size_t& offset, const std::string& origin) {
    if (bytes.size() < offset + 12) {
        throw TruncationError(origin + ": matrix record at offset " +
                              std::to_string(offset) + " needs a 12-byte header, " +
                              std::to_string(bytes.size() - offset) + " bytes remain");
    }
    if (std::memcmp(bytes.data() + offset, FEATURE_MAGIC, 4) != 0) {
        throw FormatError(origin + ": bad magic at offset " + std::to_string(offset) +
                          ", expected MVF1");
    }
    const std::uint32_t rows = get_u32le(bytes.data() + offset + 4);
    const std::uint32_t cols = get_u32le(bytes.data() + offset + 8);
    const std::size_t expected = static_cast<std::size_t>(rows) * cols * 4;
    if (bytes.size() - offset - 12 < expected) {
        throw TruncationError(origin + ": record at offset " + std::to_string(offset) +
                              " claims " + std::to_string(rows) + "x" +
                              std::to_string(cols) + " (" + std::to_string(expected) +
                              " payload bytes) but only " +
                              std::to_string(bytes.size() - offset - 12) + " remain");
    }
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i) {
        const std::uint32_t u = get_u32le(bytes.data() + offset + 12 + 4 * i);
        const float f = std::bit_cast<float>(u);
        if (!std::isfinite(f)) {
            throw DataError(origin + ": non-finite value at entry " + std::to_string(i) +
                            " (row " + std::to_string(i / cols) + ", col " +
                            std::to_string(i % cols) + ")");
        }
        m.data()[i] = static_cast<double>(f);
    }
    offset += 12 + expected;
    return m;
}

Matrix decode_feature_matrix(const std::vector<std::uint8_t>& bytes,
                             const std::string& origin) {
    check_magic(bytes, FEATURE_MAGIC, origin, "feature matrix");
    std::size_t offset = 0;
    Matrix m = decode_feature_matrix_at(bytes, offset, origin);
    if (offset != bytes.size()) {
        throw TruncationError(origin + ": header claims " + m.shape_str() + " (" +
                              std::to_string(4 * m.size()) +
                              " payload bytes) but file holds " +
                              std::to_string(bytes.size() - 12));
    }
    return m;
}

std::vector<std::uint8_t> encode_labels(const std::vector<std::uint32_t>& labels) {
    std::vector<std::uint8_t> out;
    out.reserve(8 + 4 * labels.size());
    out.insert(out.end(), LABEL_MAGIC, LABEL_MAGIC + 4);
    put_u32le(out, static_cast<std::uint32_t>(labels.size()));
    for (std::uint32_t v : labels) put_u32le(out, v);
    return out;
}

std::vector<std::uint32_t> decode_labels(const std::vector<std::uint8_t>& bytes,
                                         const std::string& origin) {
    check_magic(bytes, LABEL_MAGIC, origin, "label");
    if (bytes.size() < 8) {
        throw TruncationError(origin + ": header needs 8 bytes, file holds " +
                              std::to_string(bytes.size()));
    }
    const std::uint32_t count = get_u32le(bytes.data() + 4);
    const std::size_t expected = static_cast<std::size_t>(count) * 4;
    const std::size_t payload = bytes.size() - 8;
    if (payload != expected) {
        throw TruncationError(origin + ": header claims " + std::to_string(count) +
                              " labels (" + std::to_string(expected) +
                              " payload bytes) but file holds " +
                              std::to_string(payload));
    }
    std::vector<std::uint32_t> labels(count);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        labels[i] = get_u32le(bytes.data() + 8 + 4 * i);
    }
    return labels;
}

Matrix load_feature_matrix(const std::filesystem::path& path) {
    return decode_feature_matrix(read_file_bytes(path), path.string());
}

void write_feature_matrix(const std::filesystem::path& path, const Matrix& m) {
    if (!m.all_finite()) {
        throw NumericError("refusing to write non-finite values to " + path.string());
    }
    write_file_bytes(path, encode_feature_matrix(m));
}

std::vector<std::uint32_t> load_labels(const std::filesystem::path& path) {
    return decode_labels(read_file_bytes(path), path.string());
}

void write_labels(const std::filesystem::path& path,
                  const std::vector<std::uint32_t>& labels) {
    write_file_bytes(path, encode_labels(labels));
}

}  // namespace mvae
