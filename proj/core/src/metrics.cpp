#include "mvae/metrics.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mvae/errors.hpp"

namespace mvae {

namespace {

constexpr const char* HEADER =
    "run_id,variant,epoch,loss_total,loss_recon,loss_kl,loss_wass,"
    "seen_acc,novel_acc,harmonic_mean";

std::string fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

void check_field(const std::string& v, const char* name) {
    if (v.find(',') != std::string::npos || v.find('\n') != std::string::npos) {
        throw ValidationError(std::string("metrics ") + name +
                              " must not contain commas or newlines: '" + v + "'");
    }
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.push_back("");
    return fields;
}

double parse_field_double(const std::string& v, const std::string& origin,
                          std::size_t lineno) {
    double out = 0.0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
        throw FormatError(origin + ":" + std::to_string(lineno) +
                          ": cannot parse '" + v + "' as a number");
    }
    return out;
}

}  // namespace

std::string metrics_csv_text(const std::vector<GzslMetrics>& rows) {
    std::ostringstream out;
    out << HEADER << "\n";
    for (const GzslMetrics& r : rows) {
        check_field(r.run_id, "run_id");
        check_field(r.variant, "variant");
        out << r.run_id << "," << r.variant << "," << r.epoch << ","
            << fixed6(r.loss_total) << "," << fixed6(r.loss_recon) << ","
            << fixed6(r.loss_kl) << "," << fixed6(r.loss_wass) << ","
            << fixed6(r.seen_acc) << "," << fixed6(r.novel_acc) << ","
            << fixed6(r.harmonic_mean) << "\n";
    }
    return out.str();
}

void write_metrics_csv(const std::filesystem::path& path,
                       const std::vector<GzslMetrics>& rows) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    out << metrics_csv_text(rows);
    if (!out) {
        throw IoError("write failed on " + path.string());
    }
}

std::vector<GzslMetrics> read_metrics_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) {
        throw FormatError(path.string() + ": empty metrics file");
    }
    ++lineno;
    if (line != HEADER) {
        throw FormatError(path.string() + ": unexpected header '" + line + "'");
    }
    std::vector<GzslMetrics> rows;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 10) {
            throw FormatError(path.string() + ":" + std::to_string(lineno) +
                              ": expected 10 fields, got " +
                              std::to_string(fields.size()));
        }
        GzslMetrics r;
        r.run_id = fields[0];
        r.variant = fields[1];
        r.epoch = static_cast<std::size_t>(
            parse_field_double(fields[2], path.string(), lineno));
        r.loss_total = parse_field_double(fields[3], path.string(), lineno);
        r.loss_recon = parse_field_double(fields[4], path.string(), lineno);
        r.loss_kl = parse_field_double(fields[5], path.string(), lineno);
        r.loss_wass = parse_field_double(fields[6], path.string(), lineno);
        r.seen_acc = parse_field_double(fields[7], path.string(), lineno);
        r.novel_acc = parse_field_double(fields[8], path.string(), lineno);
        r.harmonic_mean = parse_field_double(fields[9], path.string(), lineno);
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace mvae
