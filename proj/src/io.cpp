#include "scbl/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace scbl {

std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    if (x == 0.0) return std::signbit(x) ? "-0" : "0";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

double parse_number(const std::string& text) {
    if (text == "nan") return std::nan("");
    if (text == "inf") return INFINITY;
    if (text == "-inf") return -INFINITY;
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (end == text.c_str() || *end != '\0') throw ConfigError("cli", "parse_number", "not a number: " + text);
    return v;
}

std::string pack_numbers(const std::vector<double>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ' ';
        out += format_number(values[i]);
    }
    return out;
}

std::vector<double> unpack_numbers(const std::string& text) {
    std::istringstream in(text);
    std::vector<double> out;
    std::string tok;
    while (in >> tok) out.push_back(parse_number(tok));
    return out;
}

namespace {

void dump_into(const nlohmann::json& v, int indent, int depth, std::string& out) {
    const std::string pad(indent * (depth + 1), ' '), close(indent * depth, ' ');
    const char* nl = indent > 0 ? "\n" : "";
    switch (v.type()) {
        case nlohmann::json::value_t::number_float: {
            const double x = v.get<double>();
            out += std::isfinite(x) ? format_number(x) : "null";
            break;
        }
        case nlohmann::json::value_t::object: {
            if (v.empty()) {
                out += "{}";
                break;
            }
            out += "{";
            out += nl;
            bool first = true;
            for (auto it = v.begin(); it != v.end(); ++it) {
                if (!first) out += std::string(",") + nl;
                first = false;
                out += pad + nlohmann::json(it.key()).dump() + (indent > 0 ? ": " : ":");
                dump_into(it.value(), indent, depth + 1, out);
            }
            out += nl + close + "}";
            break;
        }
        case nlohmann::json::value_t::array: {
            if (v.empty()) {
                out += "[]";
                break;
            }
            // short arrays of scalars stay on one line
            const bool flat = v.size() <= 8 && std::all_of(v.begin(), v.end(), [](const auto& e) { return e.is_primitive(); });
            out += "[";
            if (!flat) out += nl;
            for (std::size_t i = 0; i < v.size(); ++i) {
                if (i) out += flat ? ", " : std::string(",") + nl;
                if (!flat) out += pad;
                dump_into(v[i], indent, depth + 1, out);
            }
            if (!flat) out += nl + close;
            out += "]";
            break;
        }
        default:
            out += v.dump();
    }
}

}  // namespace

std::string dump_json(const nlohmann::json& value, int indent) {
    std::string out;
    dump_into(value, std::max(indent, 0), 0, out);
    out += '\n';
    return out;
}

void CsvTable::add_row(std::vector<std::string> cells) {
    if (cells.size() != columns_.size()) throw Error("cli", "csv", "row width does not match the header");
    rows_.push_back(std::move(cells));
}

std::string CsvTable::str() const {
    std::string out;
    auto line = [&out](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += cells[i];
        }
        out += '\n';
    };
    line(columns_);
    for (const auto& r : rows_) line(r);
    return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cli", "write", "cannot open " + tmp.string());
        out << text;
        if (!out.flush()) throw Error("cli", "write", "write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cli", "read", "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

namespace {

std::string esc(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", x);
    return buf;
}

std::string tick_label(double v, bool log) {
    char buf[32];
    if (log)
        std::snprintf(buf, sizeof buf, "%.3g", std::pow(10.0, v));
    else
        std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

}  // namespace

std::string render_svg(const PlotSpec& spec) {
    constexpr double width = 640, height = 420, left = 80, right = 160, top = 40, bottom = 60;
    const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"};

    auto tx = [&](double v) { return spec.log_x ? std::log10(v) : v; };
    auto ty = [&](double v) { return spec.log_y ? std::log10(v) : v; };
    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    for (const auto& s : spec.series)
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            const double u = tx(s.x[i]), v = ty(s.y[i]);
            if (!std::isfinite(u) || !std::isfinite(v)) continue;
            x0 = std::min(x0, u), x1 = std::max(x1, u), y0 = std::min(y0, v), y1 = std::max(y1, v);
        }
    if (!(x0 <= x1)) x0 = 0, x1 = 1;
    if (!(y0 <= y1)) y0 = 0, y1 = 1;
    if (x1 - x0 < 1e-300) x0 -= 0.5, x1 += 0.5;
    if (y1 - y0 < 1e-300) y0 -= 0.5, y1 += 0.5;
    const double px = 0.05 * (x1 - x0), py = 0.08 * (y1 - y0);
    x0 -= px, x1 += px, y0 -= py, y1 += py;
    const double pw = width - left - right, ph = height - top - bottom;
    auto sx = [&](double u) { return left + (u - x0) / (x1 - x0) * pw; };
    auto sy = [&](double v) { return top + (y1 - v) / (y1 - y0) * ph; };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << fmt(width / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << esc(spec.title)
      << "</text>\n";
    o << "<rect x=\"" << fmt(left) << "\" y=\"" << fmt(top) << "\" width=\"" << fmt(pw) << "\" height=\"" << fmt(ph)
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double u = x0 + (x1 - x0) * k / 4.0, v = y0 + (y1 - y0) * k / 4.0;
        o << "<text x=\"" << fmt(sx(u)) << "\" y=\"" << fmt(top + ph + 18) << "\" text-anchor=\"middle\">"
          << tick_label(u, spec.log_x) << "</text>\n";
        o << "<text x=\"" << fmt(left - 6) << "\" y=\"" << fmt(sy(v) + 4) << "\" text-anchor=\"end\">"
          << tick_label(v, spec.log_y) << "</text>\n";
    }
    o << "<text x=\"" << fmt(left + pw / 2) << "\" y=\"" << fmt(height - 16) << "\" text-anchor=\"middle\">"
      << esc(spec.x_label) << "</text>\n";
    o << "<text transform=\"translate(18," << fmt(top + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
      << esc(spec.y_label) << "</text>\n";
    for (std::size_t k = 0; k < spec.series.size(); ++k) {
        const auto& s = spec.series[k];
        const char* color = palette[k % 6];
        std::string pts;
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            const double u = tx(s.x[i]), v = ty(s.y[i]);
            if (!std::isfinite(u) || !std::isfinite(v)) continue;
            if (s.markers)
                o << "<circle cx=\"" << fmt(sx(u)) << "\" cy=\"" << fmt(sy(v)) << "\" r=\"3.5\" fill=\"" << color
                  << "\"/>\n";
            else
                pts += fmt(sx(u)) + "," + fmt(sy(v)) + " ";
        }
        if (!s.markers && !pts.empty())
            o << "<polyline points=\"" << pts << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\"/>\n";
        const double ly = top + 14 + 18.0 * k;
        o << "<rect x=\"" << fmt(width - right + 12) << "\" y=\"" << fmt(ly - 9) << "\" width=\"10\" height=\"10\" fill=\""
          << color << "\"/>\n";
        o << "<text x=\"" << fmt(width - right + 28) << "\" y=\"" << fmt(ly) << "\">" << esc(s.label) << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

}  // namespace scbl
