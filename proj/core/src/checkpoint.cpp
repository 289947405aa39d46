#include "mvae/checkpoint.hpp"

#include <charconv>
#include <map>
#include <cstring>
#include <sstream>

#include "mvae/errors.hpp"
#include "mvae/matrix_io.hpp"

namespace mvae {

namespace {

constexpr char CHECKPOINT_MAGIC[4] = {'M', 'V', 'M', '1'};

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

std::vector<std::uint8_t> encode_container(const std::string& echo,
                                           const std::vector<ParamBlock>& blocks) {
    std::vector<std::uint8_t> out;
    out.insert(out.end(), CHECKPOINT_MAGIC, CHECKPOINT_MAGIC + 4);
    put_u32le(out, static_cast<std::uint32_t>(echo.size()));
    out.insert(out.end(), echo.begin(), echo.end());
    for (const ParamBlock& b : blocks) {
        const auto rec = encode_feature_matrix(*b.value);
        out.insert(out.end(), rec.begin(), rec.end());
    }
    return out;
}

struct Container {
    std::string echo;
    std::vector<std::uint8_t> bytes;
    std::size_t offset = 0;
};

Container open_container(const std::filesystem::path& path) {
    Container c;
    c.bytes = read_file_bytes(path);
    const std::string origin = path.string();
    if (c.bytes.size() < 8) {
        throw TruncationError(origin + ": shorter than the 8-byte checkpoint header");
    }
    if (std::memcmp(c.bytes.data(), CHECKPOINT_MAGIC, 4) != 0) {
        throw FormatError(origin + ": bad magic, expected MVM1");
    }
    const std::uint32_t echo_len = get_u32le(c.bytes.data() + 4);
    if (c.bytes.size() < 8 + static_cast<std::size_t>(echo_len)) {
        throw TruncationError(origin + ": config echo claims " +
                              std::to_string(echo_len) + " bytes, only " +
                              std::to_string(c.bytes.size() - 8) + " remain");
    }
    c.echo.assign(c.bytes.begin() + 8, c.bytes.begin() + 8 + echo_len);
    c.offset = 8 + echo_len;
    return c;
}

// Splits bookkeeping lines out of the echo so the remainder parses as a
// plain config. Returns the extras as key -> value.
std::map<std::string, std::string> split_extras(std::string& echo,
                                                std::initializer_list<const char*> keys) {
    std::map<std::string, std::string> extras;
    std::istringstream in(echo);
    std::ostringstream rest;
    std::string line;
    while (std::getline(in, line)) {
        bool matched = false;
        for (const char* key : keys) {
            const std::string prefix = std::string(key) + " = ";
            if (line.rfind(prefix, 0) == 0) {
                extras[key] = line.substr(prefix.size());
                matched = true;
                break;
            }
        }
        if (!matched) rest << line << "\n";
    }
    echo = rest.str();
    return extras;
}

std::uint64_t extra_u64(const std::map<std::string, std::string>& extras,
                        const char* key, const std::string& origin) {
    const auto it = extras.find(key);
    if (it == extras.end()) {
        throw FormatError(origin + ": config echo is missing '" + std::string(key) + "'");
    }
    std::uint64_t v = 0;
    const auto res =
        std::from_chars(it->second.data(), it->second.data() + it->second.size(), v);
    if (res.ec != std::errc() || res.ptr != it->second.data() + it->second.size()) {
        throw FormatError(origin + ": cannot parse echo value '" + it->second +
                          "' for '" + std::string(key) + "'");
    }
    return v;
}

void fill_blocks(Container& c, std::vector<ParamBlock> blocks,
                 const std::string& origin) {
    for (ParamBlock& b : blocks) {
        const Matrix m = decode_feature_matrix_at(c.bytes, c.offset, origin);
        if (!m.same_shape(*b.value)) {
            throw FormatError(origin + ": block '" + b.name + "' has shape " +
                              m.shape_str() + ", expected " + b.value->shape_str());
        }
        *b.value = m;
    }
    if (c.offset != c.bytes.size()) {
        throw FormatError(origin + ": " + std::to_string(c.bytes.size() - c.offset) +
                          " trailing bytes after the last parameter block");
    }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, MvaeModel& model) {
    std::ostringstream echo;
    echo << serialize_config(model.config());
    echo << "d_attr = " << model.d_attr() << "\n";
    echo << "trained = " << (model.trained() ? "true" : "false") << "\n";
    write_file_bytes(path, encode_container(echo.str(), model.parameter_blocks()));
}

MvaeModel load_checkpoint(const std::filesystem::path& path) {
    Container c = open_container(path);
    const std::string origin = path.string();
    auto extras = split_extras(c.echo, {"d_attr", "trained"});
    const std::size_t d_attr =
        static_cast<std::size_t>(extra_u64(extras, "d_attr", origin));
    const auto trained_it = extras.find("trained");
    if (trained_it == extras.end()) {
        throw FormatError(origin + ": config echo is missing 'trained'");
    }
    const ModelConfig cfg = parse_config_text(c.echo, origin + " (config echo)");

    SeededRng init_rng(0);
    MvaeModel model(cfg, d_attr, init_rng);
    fill_blocks(c, model.parameter_blocks(), origin);
    if (trained_it->second == "true") model.mark_trained();
    return model;
}

void save_classifier(const std::filesystem::path& path, MlpClassifier& clf,
                     const ModelConfig& cfg) {
    std::ostringstream echo;
    echo << serialize_config(cfg);
    echo << "classifier_input_dim = " << clf.in_dim() << "\n";
    echo << "classifier_classes = " << clf.n_classes() << "\n";
    write_file_bytes(path, encode_container(echo.str(), clf.parameter_blocks()));
}

MlpClassifier load_classifier(const std::filesystem::path& path) {
    Container c = open_container(path);
    const std::string origin = path.string();
    auto extras = split_extras(c.echo, {"classifier_input_dim", "classifier_classes"});
    const std::size_t in_dim =
        static_cast<std::size_t>(extra_u64(extras, "classifier_input_dim", origin));
    const std::size_t n_classes =
        static_cast<std::size_t>(extra_u64(extras, "classifier_classes", origin));
    const ModelConfig cfg = parse_config_text(c.echo, origin + " (config echo)");

    SeededRng init_rng(0);
    MlpClassifier clf(in_dim, cfg.classifier_hidden1, cfg.classifier_hidden2, n_classes,
                      init_rng);
    fill_blocks(c, clf.parameter_blocks(), origin);
    return clf;
}

}  // namespace mvae
