#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "predkit/errors.hpp"
#include "predkit/estimators.hpp"
#include "predkit/matrix.hpp"

namespace predkit {

// All numeric output (JSON and CSV) goes through the JSON dumper so the same
// double serializes to the same bytes in every file.
inline std::string number_string(double v) {
    return nlohmann::json(v).dump();
}

inline std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace detail {

inline double parse_double(std::string_view field, const std::string& where) {
    double v = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last || !std::isfinite(v)) {
        throw InvalidInput(where + ": expected a finite decimal, got '" + std::string(field) + "'");
    }
    return v;
}

inline long parse_int(std::string_view field, const std::string& where) {
    long v = 0;
    auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
        throw InvalidInput(where + ": expected an integer, got '" + std::string(field) + "'");
    }
    return v;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return out;
}

inline std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

}  // namespace detail

// A parsed prediction CSV: n x k score matrix and optional labels.
struct PredictionFile {
    Matrix values;
    std::optional<std::vector<int>> labels;
};

// Reads the `score_0,...,score_{k-1}[,label]` CSV format. Errors carry
// file:line positions.
inline PredictionFile read_prediction_file(const std::string& path,
                                           const std::string& label_column = "label") {
    std::ifstream in(path);
    if (!in) throw InvalidInput(path + ": cannot open file");

    std::string line;
    if (!std::getline(in, line)) throw InvalidInput(path + ":1: empty file");
    line = detail::strip_cr(line);

    const auto header = detail::split_csv_line(line);
    std::size_t k = 0;
    bool has_label = false;
    for (std::size_t i = 0; i < header.size(); ++i) {
        const std::string expect = "score_" + std::to_string(i);
        if (header[i] == expect) {
            ++k;
            continue;
        }
        if (i == header.size() - 1 && header[i] == label_column) {
            has_label = true;
            break;
        }
        throw InvalidInput(path + ":1: unexpected column '" + std::string(header[i]) +
                           "' (expected '" + expect + "' or trailing '" + label_column + "')");
    }
    if (k < 2) throw InvalidInput(path + ":1: need at least two score columns");

    std::vector<double> values;
    std::vector<int> labels;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        line = detail::strip_cr(line);
        if (line.empty()) continue;
        const auto fields = detail::split_csv_line(line);
        const std::size_t expected = k + (has_label ? 1 : 0);
        const std::string where = path + ":" + std::to_string(lineno);
        if (fields.size() != expected) {
            throw InvalidInput(where + ": expected " + std::to_string(expected) + " fields, got " +
                               std::to_string(fields.size()));
        }
        for (std::size_t j = 0; j < k; ++j) values.push_back(detail::parse_double(fields[j], where));
        if (has_label) {
            const long y = detail::parse_int(fields[k], where);
            if (y < 0 || static_cast<std::size_t>(y) >= k) {
                throw InvalidInput(where + ": label " + std::to_string(y) + " outside [0," +
                                   std::to_string(k) + ")");
            }
            labels.push_back(static_cast<int>(y));
        }
    }
    const std::size_t n = values.size() / k;
    if (n == 0) throw InvalidInput(path + ": no data rows");

    PredictionFile out;
    out.values = Matrix(n, k, std::move(values));
    if (has_label) out.labels = std::move(labels);
    return out;
}

inline void write_prediction_file(const std::string& path, const Matrix& values,
                                  const std::vector<int>* labels = nullptr) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInput(path + ": cannot open file for writing");
    for (std::size_t j = 0; j < values.cols(); ++j) {
        if (j) out << ',';
        out << "score_" << j;
    }
    if (labels) out << ",label";
    out << '\n';
    for (std::size_t i = 0; i < values.rows(); ++i) {
        for (std::size_t j = 0; j < values.cols(); ++j) {
            if (j) out << ',';
            out << format_double(values(i, j));
        }
        if (labels) out << ',' << (*labels)[i];
        out << '\n';
    }
    if (!out) throw InvalidInput(path + ": write failed");
}

inline const char* confidence_score_name(ConfidenceScore kind) {
    return kind == ConfidenceScore::MaxConfidence ? "max-conf" : "neg-entropy";
}

inline ConfidenceScore parse_confidence_score(const std::string& name) {
    if (name == "max-conf") return ConfidenceScore::MaxConfidence;
    if (name == "neg-entropy") return ConfidenceScore::NegativeEntropy;
    throw InvalidParameter("unknown score kind '" + name + "' (use max-conf or neg-entropy)");
}

// Calibration file: the ATC/DoC profile plus (optionally) the source
// confusion counts that let downstream consumers run BBSE.
struct CalibrationFile {
    CalibrationProfile profile;
    std::optional<Matrix> confusion;
};

inline void write_calibration_file(const std::string& path, const CalibrationProfile& cal,
                                   const Matrix* confusion = nullptr) {
    nlohmann::ordered_json j;
    j["atc_threshold"] = cal.atc_threshold;
    j["score_kind"] = confidence_score_name(cal.score_kind);
    j["val_accuracy"] = cal.val_accuracy;
    j["val_average_confidence"] = cal.val_average_confidence;
    j["temperature"] = cal.temperature;
    if (confusion) {
        nlohmann::ordered_json rows = nlohmann::ordered_json::array();
        for (std::size_t i = 0; i < confusion->rows(); ++i) {
            nlohmann::ordered_json row = nlohmann::ordered_json::array();
            for (std::size_t jj = 0; jj < confusion->cols(); ++jj) row.push_back((*confusion)(i, jj));
            rows.push_back(std::move(row));
        }
        j["confusion"] = std::move(rows);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInput(path + ": cannot open file for writing");
    out << j.dump(2) << '\n';
    if (!out) throw InvalidInput(path + ": write failed");
}

inline CalibrationFile read_calibration_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput(path + ": cannot open file");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(path + ": invalid JSON: " + e.what());
    }
    CalibrationFile out;
    try {
        out.profile.atc_threshold = j.at("atc_threshold").get<double>();
        out.profile.score_kind = parse_confidence_score(j.at("score_kind").get<std::string>());
        out.profile.val_accuracy = j.at("val_accuracy").get<double>();
        out.profile.val_average_confidence = j.at("val_average_confidence").get<double>();
        out.profile.temperature = j.at("temperature").get<double>();
        if (j.contains("confusion")) {
            const auto& rows = j.at("confusion");
            const std::size_t k = rows.size();
            Matrix m(k, k);
            for (std::size_t i = 0; i < k; ++i) {
                if (rows[i].size() != k) throw InvalidInput(path + ": confusion matrix is not square");
                for (std::size_t jj = 0; jj < k; ++jj) m(i, jj) = rows[i][jj].get<double>();
            }
            out.confusion = std::move(m);
        }
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(path + ": bad calibration file: " + e.what());
    }
    if (out.profile.temperature <= 0.0) throw InvalidInput(path + ": non-positive temperature");
    return out;
}

}  // namespace predkit
