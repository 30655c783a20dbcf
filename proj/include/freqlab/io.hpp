#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace freqlab::io {

/// Shortest round-trip decimal form of x; identical across runs and platforms with IEEE doubles.
std::string format_double(double x);

/// RFC-4180 CSV table held in memory.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header);

    void add_row(std::vector<std::string> cells);
    void add_row(const std::vector<double>& values);

    std::string str() const;
    std::size_t rows() const { return rows_.size(); }

    static std::string quote(const std::string& cell);

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

/// Writes to a sibling temp file and renames over `path`.
void write_atomic(const std::filesystem::path& path, const std::string& contents);

std::string dump_json(const nlohmann::json& j);

nlohmann::json read_json_file(const std::filesystem::path& path);

struct SvgSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

struct SvgPlot {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_x = false;
    bool log_y = false;
    std::vector<SvgSeries> series;
};

std::string render_svg(const SvgPlot& plot);

enum class GridLayout : std::uint32_t { Cartesian = 0, Polar = 1 };

/// Binary grid file: magic "FQLGRID\0", u32 version, u32 n, u32 layout, u32 components,
/// u64 shape[n], f64 bbox_lo[n], f64 bbox_hi[n], then row-major f64 data with the component index fastest.
/// Polar grids append one extra record per component for the center node.
struct BinaryGrid {
    GridLayout layout = GridLayout::Cartesian;
    std::uint32_t components = 1;
    std::vector<std::uint64_t> shape;
    std::vector<double> bbox_lo;
    std::vector<double> bbox_hi;
    std::vector<double> data;

    std::size_t expected_size() const;
};

void write_binary_grid(const std::filesystem::path& path, const BinaryGrid& grid);
BinaryGrid read_binary_grid(const std::filesystem::path& path);

std::string serialize_binary_grid(const BinaryGrid& grid);

}  // namespace freqlab::io
