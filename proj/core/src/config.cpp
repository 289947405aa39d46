#include "mvae/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "mvae/errors.hpp"

namespace mvae {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

[[noreturn]] void fail(const std::string& origin, std::size_t line, const std::string& what) {
    throw ConfigError(origin + ":" + std::to_string(line) + ": " + what);
}

double parse_double(const std::string& v, const std::string& origin, std::size_t line,
                    const std::string& key) {
    double out = 0.0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
        fail(origin, line, key + ": cannot parse '" + v + "' as a number");
    }
    return out;
}

std::uint64_t parse_u64(const std::string& v, const std::string& origin, std::size_t line,
                        const std::string& key) {
    std::uint64_t out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
        fail(origin, line, key + ": cannot parse '" + v + "' as a non-negative integer");
    }
    return out;
}

std::size_t parse_count(const std::string& v, const std::string& origin, std::size_t line,
                        const std::string& key) {
    const std::uint64_t out = parse_u64(v, origin, line, key);
    if (out == 0) fail(origin, line, key + ": must be at least 1");
    return static_cast<std::size_t>(out);
}

bool parse_bool(const std::string& v, const std::string& origin, std::size_t line,
                const std::string& key) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    fail(origin, line, key + ": expected true or false, got '" + v + "'");
}

void check_choice(const std::string& v, std::initializer_list<const char*> allowed,
                  const std::string& origin, std::size_t line, const std::string& key) {
    for (const char* a : allowed) {
        if (v == a) return;
    }
    std::string msg = key + ": '" + v + "' is not one of {";
    bool first = true;
    for (const char* a : allowed) {
        if (!first) msg += ", ";
        msg += a;
        first = false;
    }
    msg += "}";
    fail(origin, line, msg);
}

void apply_key(ModelConfig& cfg, const std::string& key, const std::string& value,
               const std::string& origin, std::size_t line) {
    if (key == "d_img") cfg.d_img = parse_count(value, origin, line, key);
    else if (key == "embed_hidden") cfg.embed_hidden = parse_count(value, origin, line, key);
    else if (key == "d_attr_embed") cfg.d_attr_embed = parse_count(value, origin, line, key);
    else if (key == "vae_hidden") cfg.vae_hidden = parse_count(value, origin, line, key);
    else if (key == "latent") cfg.latent = parse_count(value, origin, line, key);
    else if (key == "epochs") cfg.epochs = parse_count(value, origin, line, key);
    else if (key == "batch") cfg.batch = parse_count(value, origin, line, key);
    else if (key == "alpha") {
        cfg.alpha = parse_double(value, origin, line, key);
        if (cfg.alpha < 0) fail(origin, line, "alpha: must be non-negative");
    } else if (key == "gamma") {
        cfg.gamma = parse_double(value, origin, line, key);
        if (cfg.gamma < 0) fail(origin, line, "gamma: must be non-negative");
    } else if (key == "beta") {
        cfg.beta = parse_double(value, origin, line, key);
        if (cfg.beta < 0) fail(origin, line, "beta: must be non-negative");
    } else if (key == "lr") {
        cfg.lr = parse_double(value, origin, line, key);
        if (!(cfg.lr > 0)) fail(origin, line, "lr: must be positive");
    } else if (key == "optimizer") {
        check_choice(value, {"adam", "sgd"}, origin, line, key);
        cfg.optimizer = value;
    } else if (key == "variant") {
        check_choice(value, {"mvae", "baseline1", "baseline2"}, origin, line, key);
        cfg.variant = value;
    } else if (key == "wasserstein_mode") {
        check_choice(value, {"quantile-1d", "gaussian-diag"}, origin, line, key);
        cfg.wasserstein_mode = value;
    } else if (key == "embed_final_relu") {
        cfg.embed_final_relu = parse_bool(value, origin, line, key);
    } else if (key == "classifier_space") {
        check_choice(value, {"reconstruction", "latent"}, origin, line, key);
        cfg.classifier_space = value;
    } else if (key == "n_syn_per_novel") {
        cfg.n_syn_per_novel = parse_count(value, origin, line, key);
    } else if (key == "classifier_hidden1") {
        cfg.classifier_hidden1 = parse_count(value, origin, line, key);
    } else if (key == "classifier_hidden2") {
        cfg.classifier_hidden2 = parse_count(value, origin, line, key);
    } else if (key == "classifier_epochs") {
        cfg.classifier_epochs = parse_count(value, origin, line, key);
    } else if (key == "classifier_seen_unmasked") {
        cfg.classifier_seen_unmasked = parse_bool(value, origin, line, key);
    } else if (key == "seed") {
        cfg.seed = parse_u64(value, origin, line, key);
    } else {
        fail(origin, line, "unknown key '" + key + "'");
    }
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace

ModelConfig parse_config_text(const std::string& text, const std::string& origin) {
    ModelConfig cfg;
    std::istringstream stream(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(stream, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            fail(origin, lineno, "expected 'key = value', got '" + line + "'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) fail(origin, lineno, "empty key");
        apply_key(cfg, key, value, origin, lineno);
    }
    return cfg;
}

ModelConfig parse_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open config " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), path.string());
}

std::string serialize_config(const ModelConfig& cfg) {
    std::ostringstream out;
    out << "d_img = " << cfg.d_img << "\n";
    out << "embed_hidden = " << cfg.embed_hidden << "\n";
    out << "d_attr_embed = " << cfg.d_attr_embed << "\n";
    out << "vae_hidden = " << cfg.vae_hidden << "\n";
    out << "latent = " << cfg.latent << "\n";
    out << "epochs = " << cfg.epochs << "\n";
    out << "batch = " << cfg.batch << "\n";
    out << "alpha = " << format_double(cfg.alpha) << "\n";
    out << "gamma = " << format_double(cfg.gamma) << "\n";
    out << "beta = " << format_double(cfg.beta) << "\n";
    out << "lr = " << format_double(cfg.lr) << "\n";
    out << "optimizer = " << cfg.optimizer << "\n";
    out << "variant = " << cfg.variant << "\n";
    out << "wasserstein_mode = " << cfg.wasserstein_mode << "\n";
    out << "embed_final_relu = " << (cfg.embed_final_relu ? "true" : "false") << "\n";
    out << "classifier_space = " << cfg.classifier_space << "\n";
    out << "n_syn_per_novel = " << cfg.n_syn_per_novel << "\n";
    out << "classifier_hidden1 = " << cfg.classifier_hidden1 << "\n";
    out << "classifier_hidden2 = " << cfg.classifier_hidden2 << "\n";
    out << "classifier_epochs = " << cfg.classifier_epochs << "\n";
    out << "classifier_seen_unmasked = " << (cfg.classifier_seen_unmasked ? "true" : "false") << "\n";
    out << "seed = " << cfg.seed << "\n";
    return out.str();
}

}  // namespace mvae
