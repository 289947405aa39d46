#include "mvae/fingerprint.hpp"

#include <array>
#include <bit>
#include <cstdio>

#include "mvae/matrix_io.hpp"

namespace mvae {

namespace {

constexpr std::uint64_t FNV_PRIME = 0x100000001B3ULL;

std::uint64_t hash_u64(std::uint64_t h, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        h ^= (v >> (8 * i)) & 0xFF;
        h *= FNV_PRIME;
    }
    return h;
}

std::uint64_t hash_matrix(std::uint64_t h, const Matrix& m) {
    h = hash_u64(h, m.rows());
    h = hash_u64(h, m.cols());
    for (std::size_t i = 0; i < m.size(); ++i) {
        h = hash_u64(h, std::bit_cast<std::uint64_t>(m.data()[i]));
    }
    return h;
}

template <typename T>
std::uint64_t hash_vector(std::uint64_t h, const std::vector<T>& v) {
    h = hash_u64(h, v.size());
    for (T x : v) h = hash_u64(h, static_cast<std::uint64_t>(x));
    return h;
}

}  // namespace

std::uint64_t fnv1a(const std::uint8_t* data, std::size_t n, std::uint64_t hash) {
    for (std::size_t i = 0; i < n; ++i) {
        hash ^= data[i];
        hash *= FNV_PRIME;
    }
    return hash;
}

std::uint64_t fnv1a_str(const std::string& s, std::uint64_t hash) {
    return fnv1a(reinterpret_cast<const std::uint8_t*>(s.data()), s.size(), hash);
}

std::uint64_t fingerprint_dataset_dir(const std::filesystem::path& dir) {
    static const std::array<const char*, 8> names = {
        "features.mvf",       "labels.mvl",          "attributes.mvf",
        "seen_classes.txt",   "novel_classes.txt",   "train_indices.txt",
        "test_seen_indices.txt", "test_novel_indices.txt"};
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (const char* name : names) {
        h = fnv1a_str(name, h);
        const auto path = dir / name;
        if (std::filesystem::exists(path)) {
            const auto bytes = read_file_bytes(path);
            h = fnv1a(bytes.data(), bytes.size(), h);
        }
    }
    return h;
}

std::uint64_t fingerprint_dataset(const FeatureDataset& ds) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    h = hash_matrix(h, ds.features);
    h = hash_vector(h, ds.labels);
    h = hash_matrix(h, ds.attributes);
    h = hash_vector(h, ds.seen_classes);
    h = hash_vector(h, ds.novel_classes);
    h = hash_vector(h, ds.train_seen);
    h = hash_vector(h, ds.test_seen);
    h = hash_vector(h, ds.test_novel);
    return h;
}

std::string hex16(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace mvae
