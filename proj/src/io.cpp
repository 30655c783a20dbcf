#include "freqlab/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "freqlab/errors.hpp"

namespace freqlab::io {

namespace {

constexpr char kMagic[8] = {'F', 'Q', 'L', 'G', 'R', 'I', 'D', '\0'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::string& out, T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.append(buf, sizeof(T));
}

template <class T>
T get(std::istream& in, const char* what) {
    T v;
    if (!in.read(reinterpret_cast<char*>(&v), sizeof(T)))
        throw ConfigError(std::string("binary grid: truncated ") + what);
    return v;
}

std::string escape_xml(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvTable::add_row(std::vector<std::string> cells) {
    if (cells.size() != header_.size()) throw Error("csv: row width does not match header");
    rows_.push_back(std::move(cells));
}

void CsvTable::add_row(const std::vector<double>& values) {
    std::vector<std::string> cells;
    cells.reserve(values.size());
    for (double v : values) cells.push_back(format_double(v));
    add_row(std::move(cells));
}

std::string CsvTable::quote(const std::string& cell) {
    if (cell.find_first_of(",\"\r\n") == std::string::npos) return cell;
    std::string out = "\"";
    for (char c : cell) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string CsvTable::str() const {
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += quote(cells[i]);
        }
        out += "\r\n";
    };
    line(header_);
    for (const auto& r : rows_) line(r);
    return out;
}

void write_atomic(const std::filesystem::path& path, const std::string& contents) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open " + tmp.string() + " for writing");
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) throw Error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string dump_json(const nlohmann::json& j) { return j.dump(2) + "\n"; }

nlohmann::json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return nlohmann::json::parse(ss.str());
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

std::string render_svg(const SvgPlot& plot) {
    constexpr double W = 640, H = 420, L = 70, R = 20, T = 40, B = 50;
    auto tx = [&](double v) { return plot.log_x ? std::log10(v) : v; };
    auto ty = [&](double v) { return plot.log_y ? std::log10(v) : v; };
    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    for (const auto& s : plot.series)
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            const double a = tx(s.x[i]), b = ty(s.y[i]);
            if (!std::isfinite(a) || !std::isfinite(b)) continue;
            x0 = std::min(x0, a), x1 = std::max(x1, a), y0 = std::min(y0, b), y1 = std::max(y1, b);
        }
    if (!(x0 < x1)) x0 -= 0.5, x1 += 0.5;
    if (!(y0 < y1)) y0 -= 0.5, y1 += 0.5;
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad, y1 += pad;
    auto px = [&](double a) { return L + (a - x0) / (x1 - x0) * (W - L - R); };
    auto py = [&](double b) { return H - B - (b - y0) / (y1 - y0) * (H - T - B); };

    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << escape_xml(plot.title)
      << "</text>\n";
    o << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double a = x0 + (x1 - x0) * k / 4.0, b = y0 + (y1 - y0) * k / 4.0;
        const std::string la = format_double(std::round((plot.log_x ? std::pow(10.0, a) : a) * 1e4) / 1e4);
        const std::string lb = format_double(std::round((plot.log_y ? std::pow(10.0, b) : b) * 1e4) / 1e4);
        o << "<text x=\"" << px(a) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\" font-size=\"11\">"
          << la << "</text>\n";
        o << "<text x=\"" << L - 6 << "\" y=\"" << py(b) + 4 << "\" text-anchor=\"end\" font-size=\"11\">" << lb
          << "</text>\n";
    }
    o << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\" font-size=\"12\">"
      << escape_xml(plot.x_label) << "</text>\n";
    o << "<text x=\"14\" y=\"" << (T + H - B) / 2 << "\" transform=\"rotate(-90 14 " << (T + H - B) / 2
      << ")\" text-anchor=\"middle\" font-size=\"12\">" << escape_xml(plot.y_label) << "</text>\n";
    for (std::size_t si = 0; si < plot.series.size(); ++si) {
        const auto& s = plot.series[si];
        const char* c = colors[si % 6];
        o << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            const double a = tx(s.x[i]), b = ty(s.y[i]);
            if (!std::isfinite(a) || !std::isfinite(b)) continue;
            o << format_double(std::round(px(a) * 100) / 100) << ',' << format_double(std::round(py(b) * 100) / 100)
              << ' ';
        }
        o << "\"/>\n";
        o << "<text x=\"" << L + 10 << "\" y=\"" << T + 16 + 14 * si << "\" font-size=\"11\" fill=\"" << c << "\">"
          << escape_xml(s.label) << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

std::size_t BinaryGrid::expected_size() const {
    std::size_t count = 1;
    for (auto s : shape) count *= static_cast<std::size_t>(s);
    if (layout == GridLayout::Polar) count += 1;
    return count * components;
}

std::string serialize_binary_grid(const BinaryGrid& g) {
    if (g.shape.empty() || g.bbox_lo.size() != g.shape.size() || g.bbox_hi.size() != g.shape.size())
        throw Error("binary grid: inconsistent header");
    if (g.data.size() != g.expected_size()) throw Error("binary grid: data size does not match shape");
    std::string out(kMagic, sizeof kMagic);
    put<std::uint32_t>(out, kVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(g.shape.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(g.layout));
    put<std::uint32_t>(out, g.components);
    for (auto s : g.shape) put<std::uint64_t>(out, s);
    for (double v : g.bbox_lo) put<double>(out, v);
    for (double v : g.bbox_hi) put<double>(out, v);
    for (double v : g.data) put<double>(out, v);
    return out;
}

void write_binary_grid(const std::filesystem::path& path, const BinaryGrid& grid) {
    write_atomic(path, serialize_binary_grid(grid));
}

BinaryGrid read_binary_grid(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open grid file " + path.string());
    char magic[8];
    if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) throw ConfigError("binary grid: bad magic");
    if (get<std::uint32_t>(in, "version") != kVersion) throw ConfigError("binary grid: unsupported version");
    BinaryGrid g;
    const auto n = get<std::uint32_t>(in, "dimension");
    if (n == 0 || n > 3) throw ConfigError("binary grid: dimension must be 1..3");
    const auto layout = get<std::uint32_t>(in, "layout");
    if (layout > 1) throw ConfigError("binary grid: unknown layout");
    g.layout = static_cast<GridLayout>(layout);
    g.components = get<std::uint32_t>(in, "components");
    for (std::uint32_t i = 0; i < n; ++i) g.shape.push_back(get<std::uint64_t>(in, "shape"));
    for (std::uint32_t i = 0; i < n; ++i) g.bbox_lo.push_back(get<double>(in, "bbox"));
    for (std::uint32_t i = 0; i < n; ++i) g.bbox_hi.push_back(get<double>(in, "bbox"));
    const std::size_t count = g.expected_size();
    g.data.resize(count);
    if (!in.read(reinterpret_cast<char*>(g.data.data()), static_cast<std::streamsize>(count * sizeof(double))))
        throw ConfigError("binary grid: truncated data");
    return g;
}

}  // namespace freqlab::io
