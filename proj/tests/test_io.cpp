#include <filesystem>
#include <cstdlib>
#include <fstream>

#include <gtest/gtest.h>

#include "freqlab/errors.hpp"
#include "freqlab/io.hpp"

using namespace freqlab;

TEST(Csv, QuotesPerRfc4180) {
    EXPECT_EQ(io::CsvTable::quote("plain"), "plain");
    EXPECT_EQ(io::CsvTable::quote("a,b"), "\"a,b\"");
    EXPECT_EQ(io::CsvTable::quote("say \"hi\""), "\"say \"\"hi\"\"\"");
    io::CsvTable t({"name", "value"});
    t.add_row(std::vector<std::string>{"x,y", "1"});
    t.add_row(std::vector<double>{0.5, 1e-300});
    EXPECT_EQ(t.str(), "name,value\r\n\"x,y\",1\r\n0.5,1e-300\r\n");
    EXPECT_THROW(t.add_row(std::vector<double>{1.0}), Error);
}

TEST(Format, RoundTrips) {
    for (double x : {0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-310, 0.0}) {
        EXPECT_EQ(std::strtod(io::format_double(x).c_str(), nullptr), x);
    }
    EXPECT_EQ(io::format_double(0.1), "0.1");
}

TEST(BinaryGrid, RoundTrip) {
    io::BinaryGrid g;
    g.layout = io::GridLayout::Polar;
    g.components = 2;
    g.shape = {3, 4};
    g.bbox_lo = {0.01, 0.0};
    g.bbox_hi = {1.0, 6.28};
    for (std::size_t i = 0; i < g.expected_size(); ++i) g.data.push_back(0.5 * static_cast<double>(i));
    EXPECT_EQ(g.expected_size(), (3u * 4u + 1u) * 2u);
    const auto path = std::filesystem::temp_directory_path() / "freqlab_grid_test.bin";
    io::write_binary_grid(path, g);
    const auto back = io::read_binary_grid(path);
    EXPECT_EQ(back.layout, g.layout);
    EXPECT_EQ(back.components, 2u);
    EXPECT_EQ(back.shape, g.shape);
    EXPECT_EQ(back.bbox_hi, g.bbox_hi);
    EXPECT_EQ(back.data, g.data);
    std::filesystem::remove(path);
}

TEST(BinaryGrid, RejectsGarbage) {
    const auto path = std::filesystem::temp_directory_path() / "freqlab_grid_bad.bin";
    {
        std::ofstream out(path, std::ios::binary);
        out << "NOTAGRID";
    }
    EXPECT_THROW(io::read_binary_grid(path), ConfigError);
    std::filesystem::remove(path);
}

TEST(Svg, ContainsSeries) {
    io::SvgPlot p;
    p.title = "N(r) <test>";
    p.series.push_back({"N", {0.1, 0.2, 0.4}, {1, 1.5, 2}});
    const auto s = io::render_svg(p);
    EXPECT_NE(s.find("<polyline"), std::string::npos);
    EXPECT_NE(s.find("&lt;test&gt;"), std::string::npos);
}

TEST(Atomic, WritesAndReplaces) {
    const auto path = std::filesystem::temp_directory_path() / "freqlab_atomic" / "out.txt";
    io::write_atomic(path, "one");
    io::write_atomic(path, "two");
    std::ifstream in(path);
    std::string s;
    in >> s;
    EXPECT_EQ(s, "two");
    EXPECT_FALSE(std::filesystem::exists(path.string() + ".tmp"));
    std::filesystem::remove_all(path.parent_path());
}
