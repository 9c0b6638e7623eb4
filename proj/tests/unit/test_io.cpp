#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "specpc/error.hpp"
#include "specpc/io.hpp"

using namespace specpc;
namespace fs = std::filesystem;

namespace {

std::string error_of(const std::string& text) {
    std::istringstream in(text);
    try {
        io::read_table(in);
    } catch (const ValidationError& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST(ReadTable, ParsesHeaderAndRows) {
    std::istringstream in("a, b\n1,2\n-3.5e2 , +4\n\n5,6\r\n");
    const auto t = io::read_table(in);
    EXPECT_EQ(t.header, (std::vector<std::string>{"a", "b"}));
    ASSERT_EQ(t.values.rows(), 3);
    EXPECT_EQ(t.values(1, 0), -350.0);
    EXPECT_EQ(t.values(1, 1), 4.0);
    EXPECT_EQ(t.values(2, 1), 6.0);
}

TEST(ReadTable, NonNumericCellNamesRow) {
    const std::string msg = error_of("x,y\n1,2\n3,4\n5,6\n7,8\n9,10\n11,abc\n");
    EXPECT_NE(msg.find("row 7"), std::string::npos) << msg;
    EXPECT_NE(msg.find("column 2"), std::string::npos) << msg;
}

TEST(ReadTable, RaggedRowNamesRow) {
    const std::string msg = error_of("x,y\n1,2\n3\n");
    EXPECT_NE(msg.find("row 3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("expected 2"), std::string::npos) << msg;
}

TEST(ReadTable, RejectsEmptyAndNonFinite) {
    EXPECT_FALSE(error_of("").empty());
    EXPECT_FALSE(error_of("x\nnan\n").empty());
    EXPECT_FALSE(error_of("x\ninf\n").empty());
    EXPECT_FALSE(error_of("x\n1,\n").empty());
    EXPECT_FALSE(error_of("x\n\"1\"\n").empty());
}

TEST(FormatNumber, TwelveSignificantDigits) {
    EXPECT_EQ(io::format_number(0.0), "0");
    EXPECT_EQ(io::format_number(-0.0), "0");
    EXPECT_EQ(io::format_number(550), "550");
    EXPECT_EQ(io::format_number(1.0 / 3.0), "0.333333333333");
    EXPECT_EQ(io::format_number(57.98105), "57.98105");
    EXPECT_EQ(io::format_number(1e-20), "1e-20");
    EXPECT_EQ(io::format_number(123456789012345.0), "1.23456789012e+14");
}

TEST(Csv, RoundTripThroughParser) {
    Eigen::MatrixXd m(3, 2);
    m << 1.5, -2, 1e-7, 3.25, 1.0 / 7.0, 100;
    std::istringstream in(io::to_csv({"p", "q"}, m));
    const auto t = io::read_table(in);
    EXPECT_EQ(t.header, (std::vector<std::string>{"p", "q"}));
    EXPECT_LT((t.values - m).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Files, AtomicWriteAndSeriesRead) {
    const fs::path dir = fs::temp_directory_path() / "specpc_io_test" / "nested";
    fs::remove_all(dir.parent_path());
    io::write_file_atomic(dir / "s.csv", "a\n1\n2\n3\n4\n");
    EXPECT_FALSE(fs::exists(dir / "s.csv.tmp"));
    const auto s = io::read_series(dir / "s.csv", 250.0);
    EXPECT_EQ(s.length(), 4);
    EXPECT_EQ(s.sampling_rate, 250.0);
    EXPECT_EQ(s.channel_names, std::vector<std::string>{"a"});
    io::write_file_atomic(dir / "short.csv", "a\n1\n2\n");
    EXPECT_THROW(io::read_series(dir / "short.csv"), ValidationError);
    EXPECT_THROW(io::read_series(dir / "missing.csv"), ValidationError);
    fs::remove_all(dir.parent_path());
}

TEST(Files, ConfigParsing) {
    const fs::path p = fs::temp_directory_path() / "specpc_cfg_test.conf";
    {
        std::ofstream out(p);
        out << "# comment\nscenario = I\n  B=100 # trailing\n\nband = 8,12\n";
    }
    const auto cfg = io::read_config(p);
    EXPECT_EQ(cfg.at("scenario"), "I");
    EXPECT_EQ(cfg.at("B"), "100");
    EXPECT_EQ(cfg.at("band"), "8,12");
    {
        std::ofstream out(p);
        out << "novalue\n";
    }
    EXPECT_THROW(io::read_config(p), ValidationError);
    fs::remove(p);
}
