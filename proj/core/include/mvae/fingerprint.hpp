#ifndef MVAE_FINGERPRINT_HPP
#define MVAE_FINGERPRINT_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mvae/dataset.hpp"

namespace mvae {

// FNV-1a over a byte stream.
std::uint64_t fnv1a(const std::uint8_t* data, std::size_t n,
                    std::uint64_t hash = 0xCBF29CE484222325ULL);
std::uint64_t fnv1a_str(const std::string& s, std::uint64_t hash = 0xCBF29CE484222325ULL);

// Hash of the dataset files in a fixed filename order; missing optional
// files contribute their name only.
std::uint64_t fingerprint_dataset_dir(const std::filesystem::path& dir);

// Hash of the in-memory dataset content, independent of any files.
std::uint64_t fingerprint_dataset(const FeatureDataset& ds);

std::string hex16(std::uint64_t v);

}  // namespace mvae

#endif
