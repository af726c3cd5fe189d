#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "scbl/common.hpp"

namespace scbl {

/// Round-trip text for a double: 17 significant digits, "nan"/"inf" spelled
/// out.
std::string format_number(double x);

/// Parses text written by format_number back to the same bits.
double parse_number(const std::string& text);

/// Space-separated numbers; used for cache payloads.
std::string pack_numbers(const std::vector<double>& values);
std::vector<double> unpack_numbers(const std::string& text);

/// JSON text with every floating-point value written by format_number and
/// non-finite values as null. Object keys keep nlohmann's sorted order.
/// indent <= 0 gives compact output.
std::string dump_json(const nlohmann::json& value, int indent = 2);

class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

    /// Cells are preformatted so callers control integer vs real output.
    void add_row(std::vector<std::string> cells);
    std::string str() const;
    std::size_t rows() const { return rows_.size(); }

private:
    std::vector<std::string> columns_;
    std::vector<std::vector<std::string>> rows_;
};

/// Writes via a temporary file and rename, so readers never see a partial file.
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    bool markers = true;  // false draws a polyline
};

struct PlotSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_x = false;
    bool log_y = false;
    std::vector<PlotSeries> series;
};

/// Minimal standalone SVG line/scatter plot with deterministic output.
std::string render_svg(const PlotSpec& spec);

}  // namespace scbl
