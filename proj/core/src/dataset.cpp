#include "mvae/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <unordered_set>

#include "mvae/errors.hpp"
#include "mvae/matrix_io.hpp"
#include "mvae/rng.hpp"

namespace mvae {

namespace {

// Substream tags for the synthetic generator.
constexpr std::uint64_t TAG_SYNTH_ATTRS = 11;
constexpr std::uint64_t TAG_SYNTH_PROJ = 12;
constexpr std::uint64_t TAG_SYNTH_NOISE = 13;

bool contains_sorted(const std::vector<std::uint32_t>& sorted, std::uint32_t v) {
    return std::binary_search(sorted.begin(), sorted.end(), v);
}

std::vector<std::uint64_t> load_number_list(const std::filesystem::path& path,
                                            const char* kind) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::vector<std::uint64_t> values;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto begin = line.find_first_not_of(" \t\r");
        if (begin == std::string::npos) continue;
        const auto end = line.find_last_not_of(" \t\r");
        const std::string token = line.substr(begin, end - begin + 1);
        std::uint64_t v = 0;
        const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
        if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
            throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                                  ": '" + token + "' is not a " + kind);
        }
        values.push_back(v);
    }
    return values;
}

void write_number_list(const std::filesystem::path& path,
                       const std::vector<std::uint64_t>& values) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    for (std::uint64_t v : values) out << v << "\n";
    if (!out) {
        throw IoError("write failed on " + path.string());
    }
}

std::vector<std::uint32_t> load_class_list(const std::filesystem::path& path) {
    const auto raw = load_number_list(path, "class id");
    std::vector<std::uint32_t> classes;
    classes.reserve(raw.size());
    for (std::uint64_t v : raw) {
        if (v > 0xFFFFFFFFULL) {
            throw ValidationError(path.string() + ": class id " + std::to_string(v) +
                                  " exceeds 32 bits");
        }
        classes.push_back(static_cast<std::uint32_t>(v));
    }
    std::sort(classes.begin(), classes.end());
    const auto dup = std::adjacent_find(classes.begin(), classes.end());
    if (dup != classes.end()) {
        throw ValidationError(path.string() + ": duplicate class id " +
                              std::to_string(*dup));
    }
    return classes;
}

std::vector<std::size_t> load_index_list(const std::filesystem::path& path) {
    const auto raw = load_number_list(path, "sample index");
    std::vector<std::size_t> idx(raw.begin(), raw.end());
    std::sort(idx.begin(), idx.end());
    return idx;
}

void validate_classes(const FeatureDataset& ds) {
    if (ds.features.rows() != ds.labels.size()) {
        throw ValidationError("feature row count " + std::to_string(ds.features.rows()) +
                              " differs from label count " +
                              std::to_string(ds.labels.size()));
    }
    if (ds.attributes.rows() == 0) {
        throw DegenerateDataError("attribute table has no classes");
    }
    for (std::uint32_t c : ds.seen_classes) {
        if (c >= ds.n_classes()) {
            throw ValidationError("seen class " + std::to_string(c) +
                                  " outside attribute table with " +
                                  std::to_string(ds.n_classes()) + " rows");
        }
        if (contains_sorted(ds.novel_classes, c)) {
            throw ValidationError("class " + std::to_string(c) +
                                  " appears in both seen and novel lists");
        }
    }
    for (std::uint32_t c : ds.novel_classes) {
        if (c >= ds.n_classes()) {
            throw ValidationError("novel class " + std::to_string(c) +
                                  " outside attribute table with " +
                                  std::to_string(ds.n_classes()) + " rows");
        }
    }
    for (std::size_t i = 0; i < ds.labels.size(); ++i) {
        const std::uint32_t c = ds.labels[i];
        if (!contains_sorted(ds.seen_classes, c) && !contains_sorted(ds.novel_classes, c)) {
            throw ValidationError("label " + std::to_string(c) + " of sample " +
                                  std::to_string(i) +
                                  " belongs to neither the seen nor the novel set");
        }
    }
}

void check_split(const FeatureDataset& ds, const std::vector<std::size_t>& split,
                 const char* name, bool wants_seen) {
    std::unordered_set<std::size_t> uniq;
    for (std::size_t i : split) {
        if (i >= ds.n_samples()) {
            throw ValidationError(std::string(name) + ": sample index " +
                                  std::to_string(i) + " outside dataset with " +
                                  std::to_string(ds.n_samples()) + " samples");
        }
        if (!uniq.insert(i).second) {
            throw ValidationError(std::string(name) + ": duplicate sample index " +
                                  std::to_string(i));
        }
        const std::uint32_t c = ds.labels[i];
        const bool seen = contains_sorted(ds.seen_classes, c);
        if (seen != wants_seen) {
            throw ValidationError(std::string(name) + ": sample " + std::to_string(i) +
                                  " has " + (seen ? "seen" : "novel") + " class " +
                                  std::to_string(c));
        }
    }
}

void validate_splits(const FeatureDataset& ds) {
    check_split(ds, ds.train_seen, "train_seen", true);
    check_split(ds, ds.test_seen, "test_seen", true);
    check_split(ds, ds.test_novel, "test_novel", false);
}

std::vector<std::size_t> seen_sample_indices(const FeatureDataset& ds) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < ds.labels.size(); ++i) {
        if (contains_sorted(ds.seen_classes, ds.labels[i])) out.push_back(i);
    }
    return out;
}

std::vector<std::size_t> complement_within(const std::vector<std::size_t>& all,
                                           const std::vector<std::size_t>& taken) {
    std::unordered_set<std::size_t> taken_set(taken.begin(), taken.end());
    std::vector<std::size_t> out;
    for (std::size_t i : all) {
        if (!taken_set.count(i)) out.push_back(i);
    }
    return out;
}

}  // namespace

bool FeatureDataset::is_seen_class(std::uint32_t c) const {
    return contains_sorted(seen_classes, c);
}

bool FeatureDataset::is_novel_class(std::uint32_t c) const {
    return contains_sorted(novel_classes, c);
}

void apply_default_split(FeatureDataset& ds) {
    ds.train_seen.clear();
    ds.test_seen.clear();
    ds.test_novel.clear();
    for (std::uint32_t c : ds.seen_classes) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < ds.labels.size(); ++i) {
            if (ds.labels[i] == c) members.push_back(i);
        }
        const std::size_t n_train = members.size() * 4 / 5;
        for (std::size_t k = 0; k < members.size(); ++k) {
            (k < n_train ? ds.train_seen : ds.test_seen).push_back(members[k]);
        }
    }
    for (std::size_t i = 0; i < ds.labels.size(); ++i) {
        if (contains_sorted(ds.novel_classes, ds.labels[i])) ds.test_novel.push_back(i);
    }
    std::sort(ds.train_seen.begin(), ds.train_seen.end());
    std::sort(ds.test_seen.begin(), ds.test_seen.end());
    std::sort(ds.test_novel.begin(), ds.test_novel.end());
}

FeatureDataset generate_synthetic(const SyntheticSpec& spec) {
    if (spec.seen_classes < 1 || spec.novel_classes < 1 || spec.samples_per_class < 1 ||
        spec.d_img < 1 || spec.d_attr < 1) {
        throw ValidationError("synthetic spec: all counts must be at least 1");
    }
    if (!(spec.spread > 0.0)) {
        throw ValidationError("synthetic spec: spread must be positive");
    }

    SeededRng root(spec.seed);
    SeededRng attr_rng = root.substream(TAG_SYNTH_ATTRS);
    SeededRng proj_rng = root.substream(TAG_SYNTH_PROJ);
    SeededRng noise_rng = root.substream(TAG_SYNTH_NOISE);

    const std::size_t n_classes = spec.seen_classes + spec.novel_classes;

    // Class attribute prototypes are drawn from a shared low-rank semantic
    // basis, so every novel-class attribute lies in the span of the seen-class
    // attributes and semantic transfer to novel classes is well posed.
    const std::size_t sem_rank =
        std::min(spec.d_attr, std::max<std::size_t>(1, spec.seen_classes / 2));
    Matrix basis = gaussian_sample(attr_rng, sem_rank, spec.d_attr);
    const double basis_scale = 1.0 / std::sqrt(static_cast<double>(sem_rank));
    for (std::size_t i = 0; i < basis.size(); ++i) basis.data()[i] *= basis_scale;
    const Matrix coords = gaussian_sample(attr_rng, n_classes, sem_rank);

    FeatureDataset ds;
    ds.attributes = matmul(coords, basis);
    for (std::size_t i = 0; i < ds.attributes.size(); ++i) {
        ds.attributes.data()[i] = quantize_f32(ds.attributes.data()[i]);
    }

    // Shared projection from attribute space to feature space; the
    // 1/sqrt(d_attr) scale keeps class centers near unit size.
    Matrix proj = gaussian_sample(proj_rng, spec.d_attr, spec.d_img);
    const double proj_scale = 1.0 / std::sqrt(static_cast<double>(spec.d_attr));
    for (std::size_t i = 0; i < proj.size(); ++i) proj.data()[i] *= proj_scale;

    const Matrix centers = matmul(ds.attributes, proj);

    ds.features = Matrix(n_classes * spec.samples_per_class, spec.d_img);
    ds.labels.reserve(ds.features.rows());
    std::size_t row = 0;
    for (std::size_t c = 0; c < n_classes; ++c) {
        for (std::size_t s = 0; s < spec.samples_per_class; ++s, ++row) {
            for (std::size_t j = 0; j < spec.d_img; ++j) {
                const double v = centers(c, j) + spec.spread * noise_rng.next_normal();
                ds.features(row, j) = quantize_f32(v);
            }
            ds.labels.push_back(static_cast<std::uint32_t>(c));
        }
    }

    for (std::size_t c = 0; c < spec.seen_classes; ++c) {
        ds.seen_classes.push_back(static_cast<std::uint32_t>(c));
    }
    for (std::size_t c = spec.seen_classes; c < n_classes; ++c) {
        ds.novel_classes.push_back(static_cast<std::uint32_t>(c));
    }

    apply_default_split(ds);
    validate_dataset(ds);
    return ds;
}

FeatureDataset load_gzsl_dataset(const std::filesystem::path& dir) {
    FeatureDataset ds;
    ds.features = load_feature_matrix(dir / "features.mvf");
    ds.labels = load_labels(dir / "labels.mvl");
    ds.attributes = load_feature_matrix(dir / "attributes.mvf");
    ds.seen_classes = load_class_list(dir / "seen_classes.txt");
    ds.novel_classes = load_class_list(dir / "novel_classes.txt");
    validate_classes(ds);

    const auto train_path = dir / "train_indices.txt";
    const auto test_seen_path = dir / "test_seen_indices.txt";
    const auto test_novel_path = dir / "test_novel_indices.txt";
    const bool has_train = std::filesystem::exists(train_path);
    const bool has_test_seen = std::filesystem::exists(test_seen_path);

    if (has_train && has_test_seen) {
        ds.train_seen = load_index_list(train_path);
        ds.test_seen = load_index_list(test_seen_path);
    } else if (has_train) {
        ds.train_seen = load_index_list(train_path);
        ds.test_seen = complement_within(seen_sample_indices(ds), ds.train_seen);
    } else if (has_test_seen) {
        ds.test_seen = load_index_list(test_seen_path);
        ds.train_seen = complement_within(seen_sample_indices(ds), ds.test_seen);
    } else {
        FeatureDataset tmp = ds;
        apply_default_split(tmp);
        ds.train_seen = std::move(tmp.train_seen);
        ds.test_seen = std::move(tmp.test_seen);
    }

    if (std::filesystem::exists(test_novel_path)) {
        ds.test_novel = load_index_list(test_novel_path);
    } else {
        for (std::size_t i = 0; i < ds.labels.size(); ++i) {
            if (contains_sorted(ds.novel_classes, ds.labels[i])) ds.test_novel.push_back(i);
        }
    }

    validate_splits(ds);
    return ds;
}

void write_gzsl_dataset(const std::filesystem::path& dir, const FeatureDataset& ds) {
    std::filesystem::create_directories(dir);
    write_feature_matrix(dir / "features.mvf", ds.features);
    write_labels(dir / "labels.mvl", ds.labels);
    write_feature_matrix(dir / "attributes.mvf", ds.attributes);
    write_number_list(dir / "seen_classes.txt",
                      {ds.seen_classes.begin(), ds.seen_classes.end()});
    write_number_list(dir / "novel_classes.txt",
                      {ds.novel_classes.begin(), ds.novel_classes.end()});
    write_number_list(dir / "train_indices.txt",
                      {ds.train_seen.begin(), ds.train_seen.end()});
    write_number_list(dir / "test_seen_indices.txt",
                      {ds.test_seen.begin(), ds.test_seen.end()});
    write_number_list(dir / "test_novel_indices.txt",
                      {ds.test_novel.begin(), ds.test_novel.end()});
}

void validate_dataset(const FeatureDataset& ds) {
    validate_classes(ds);
    validate_splits(ds);
}

}  // namespace mvae
