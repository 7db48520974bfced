#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "sbl/io.hpp"

using namespace sbl;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("sbl_io_test_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

IntensityTrace make_trace(std::uint64_t seed, std::size_t n = 1000) {
    std::mt19937_64 engine(seed);
    std::exponential_distribution<double> exp_dist(1e-6);
    std::vector<double> samples(n);
    for (auto& v : samples) v = exp_dist(engine);
    return IntensityTrace(1.25e-7, std::move(samples));
}

PhotonStream make_stream(std::uint64_t seed, std::size_t n = 2000) {
    // picosecond-quantized timestamps so text round trips are exact
    std::mt19937_64 engine(seed);
    std::uniform_int_distribution<std::uint64_t> gap_ps(1, 2000000);
    std::vector<double> ts;
    std::uint64_t t = 0;
    for (std::size_t i = 0; i < n; ++i) {
        t += gap_ps(engine);
        ts.push_back(static_cast<double>(t) * 1e-12);
    }
    const double begin = ts.front();
    const double end = ts.back();
    return PhotonStream(1, begin, end, std::move(ts));
}

} // namespace

TEST_CASE("trace binary round trip is exact") {
    TempDir dir;
    const auto trace = make_trace(1);
    const auto path = dir.path / "trace.sbit";
    export_trace_binary(trace, path);
    const auto back = import_trace_binary(path);
    CHECK(back.dt() == trace.dt());
    CHECK(back.samples() == trace.samples());
}

TEST_CASE("trace CSV round trip is exact with full precision output") {
    TempDir dir;
    const auto trace = make_trace(2, 300);
    const auto path = dir.path / "trace.csv";
    export_trace_csv(trace, path);
    const auto back = import_trace_csv(path);
    CHECK(back.dt() == doctest::Approx(trace.dt()).epsilon(1e-12));
    REQUIRE(back.size() == trace.size());
    for (std::size_t i = 0; i < trace.size(); ++i)
        CHECK(back.samples()[i] == trace.samples()[i]);
}

TEST_CASE("trace CSV import validates header and grid") {
    TempDir dir;
    {
        std::ofstream f(dir.path / "bad_header.csv");
        f << "time,value\n0,1\n";
    }
    CHECK_THROWS_AS(import_trace_csv(dir.path / "bad_header.csv"), ParseError);
    {
        std::ofstream f(dir.path / "bad_grid.csv");
        f << "t_seconds,intensity_hz\n0,1\n1e-6,2\n3e-6,3\n";
    }
    try {
        import_trace_csv(dir.path / "bad_grid.csv");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("4") != std::string::npos); // line number
    }
    CHECK_THROWS_AS(import_trace_csv(dir.path / "missing.csv"), ParseError);
}

TEST_CASE("trace binary import rejects bad magic and version") {
    TempDir dir;
    const auto trace = make_trace(3, 10);
    const auto path = dir.path / "trace.sbit";
    export_trace_binary(trace, path);

    auto corrupt = [&](std::size_t offset, char byte, const char* name) {
        std::vector<char> bytes;
        {
            std::ifstream f(path, std::ios::binary);
            bytes.assign(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
        }
        bytes[offset] = byte;
        const auto p = dir.path / name;
        std::ofstream(p, std::ios::binary).write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        return p;
    };
    CHECK_THROWS_AS(import_trace_binary(corrupt(0, 'X', "magic.sbit")), ParseError);
    CHECK_THROWS_AS(import_trace_binary(corrupt(4, 9, "version.sbit")), ParseError);
}

TEST_CASE("time tags text round trip is exact for picosecond-quantized streams") {
    TempDir dir;
    const auto stream = make_stream(4);
    const auto path = dir.path / "tags.txt";
    export_timetags_text(stream, path);
    const auto back = import_timetags_text(path);
    CHECK(back.channel_id() == stream.channel_id());
    REQUIRE(back.size() == stream.size());
    for (std::size_t i = 0; i < stream.size(); ++i)
        CHECK(back.timestamps()[i] == doctest::Approx(stream.timestamps()[i]).epsilon(1e-15));
}

TEST_CASE("time tags binary round trip is exact") {
    TempDir dir;
    const auto stream = make_stream(5);
    const auto path = dir.path / "tags.sbtt";
    export_timetags_binary(stream, path);
    const auto back = import_timetags_binary(path);
    CHECK(back.channel_id() == stream.channel_id());
    REQUIRE(back.size() == stream.size());
    for (std::size_t i = 0; i < stream.size(); ++i)
        CHECK(back.timestamps()[i] == doctest::Approx(stream.timestamps()[i]).epsilon(1e-15));
}

TEST_CASE("time tags import rejects out-of-order timestamps with a line number") {
    TempDir dir;
    const auto path = dir.path / "bad.txt";
    {
        std::ofstream f(path);
        f << "# sbtt v1\n# channel 1\n1000\n3000\n2000\n";
    }
    try {
        import_timetags_text(path);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("5") != std::string::npos);
    }
}

TEST_CASE("time tags import rejects malformed headers and garbage lines") {
    TempDir dir;
    {
        std::ofstream f(dir.path / "no_header.txt");
        f << "1000\n2000\n";
    }
    CHECK_THROWS_AS(import_timetags_text(dir.path / "no_header.txt"), ParseError);
    {
        std::ofstream f(dir.path / "garbage.txt");
        f << "# sbtt v1\n# channel 1\n1000\nabc\n";
    }
    CHECK_THROWS_AS(import_timetags_text(dir.path / "garbage.txt"), ParseError);
    CHECK_THROWS_AS(import_timetags_binary(dir.path / "missing.sbtt"), ParseError);
}

TEST_CASE("histogram and correlation CSV strings are well formed") {
    const CountHistogram hist(1e-6, {6, 2});
    const auto hcsv = histogram_csv(hist);
    CHECK(hcsv.rfind("n,count,probability\n", 0) == 0);
    CHECK(hcsv.find("0,6,0.75") != std::string::npos);
    CHECK(hcsv.find("1,2,0.25") != std::string::npos);

    CorrelationFunction cf;
    cf.bin_width = 1e-6;
    cf.lags = {-0.5e-6, 0.5e-6};
    cf.values = {1.0, 2.0};
    cf.stderrs = {0.1, 0.2};
    const auto ccsv = correlation_csv(cf);
    CHECK(ccsv.rfind("lag_seconds,g2,stderr\n", 0) == 0);
    CHECK(ccsv.find("2") != std::string::npos);
}

TEST_CASE("write_file_atomic replaces content") {
    TempDir dir;
    const auto path = dir.path / "out.txt";
    write_file_atomic(path, "first");
    write_file_atomic(path, "second");
    std::ifstream f(path);
    std::string content((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    CHECK(content == "second");
}
