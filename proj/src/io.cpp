#include "sbl/io.hpp"

#include <charconv>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace sbl {

namespace {

constexpr std::uint32_t kFormatVersion = 1;

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void append_raw(std::string& out, const void* p, std::size_t n) {
    out.append(static_cast<const char*>(p), n);
}

template <typename T>
T read_raw(const std::string& data, std::size_t& off, const std::filesystem::path& path) {
    if (off + sizeof(T) > data.size())
        throw ParseError(path.string() + ": truncated file");
    T v;
    std::memcpy(&v, data.data() + off, sizeof(T));
    off += sizeof(T);
    return v;
}

std::string read_whole_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path.string() + ": cannot open file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw std::runtime_error("short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

void export_trace_csv(const IntensityTrace& trace, const std::filesystem::path& path) {
    std::string out = "t_seconds,intensity_hz\n";
    for (std::size_t i = 0; i < trace.size(); ++i) {
        out += fmt_double(trace.origin() + static_cast<double>(i) * trace.dt());
        out += ',';
        out += fmt_double(trace[i]);
        out += '\n';
    }
    write_file_atomic(path, out);
}

IntensityTrace import_trace_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path.string() + ": cannot open file");
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) throw ParseError(path.string() + ": empty file");
    ++lineno;
    if (line != "t_seconds,intensity_hz")
        throw ParseError(path.string() + ":1: expected header 't_seconds,intensity_hz'");

    std::vector<double> times, values;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        double t = 0.0, v = 0.0;
        if (std::sscanf(line.c_str(), "%lf,%lf", &t, &v) != 2)
            throw ParseError(path.string() + ":" + std::to_string(lineno) + ": malformed row");
        times.push_back(t);
        values.push_back(v);
    }
    if (values.empty()) throw ParseError(path.string() + ": no samples");
    double dt = 1.0;
    if (times.size() > 1) {
        dt = times[1] - times[0];
        for (std::size_t i = 1; i < times.size(); ++i) {
            const double step = times[i] - times[i - 1];
            if (std::abs(step - dt) > 1e-6 * std::abs(dt))
                throw ParseError(path.string() + ":" + std::to_string(i + 2) +
                                 ": non-uniform time grid");
        }
    }
    return IntensityTrace(dt, std::move(values), times.front());
}

void export_trace_binary(const IntensityTrace& trace, const std::filesystem::path& path) {
    std::string out;
    out.reserve(24 + trace.size() * 8);
    out += "SBIT";
    const std::uint32_t version = kFormatVersion;
    append_raw(out, &version, 4);
    const double dt = trace.dt();
    append_raw(out, &dt, 8);
    const std::uint64_t count = trace.size();
    append_raw(out, &count, 8);
    append_raw(out, trace.samples().data(), trace.size() * 8);
    write_file_atomic(path, out);
}

IntensityTrace import_trace_binary(const std::filesystem::path& path) {
    const std::string data = read_whole_file(path);
    std::size_t off = 0;
    if (data.size() < 4 || data.compare(0, 4, "SBIT") != 0)
        throw ParseError(path.string() + ": bad magic, expected SBIT");
    off = 4;
    const auto version = read_raw<std::uint32_t>(data, off, path);
    if (version != kFormatVersion)
        throw ParseError(path.string() + ": unsupported SBIT version " + std::to_string(version));
    const auto dt = read_raw<double>(data, off, path);
    const auto count = read_raw<std::uint64_t>(data, off, path);
    if (off + count * 8 > data.size()) throw ParseError(path.string() + ": truncated samples");
    std::vector<double> samples(count);
    std::memcpy(samples.data(), data.data() + off, count * 8);
    return IntensityTrace(dt, std::move(samples));
}

void export_timetags_text(const PhotonStream& stream, const std::filesystem::path& path) {
    std::string out = "# sbtt v1\n# channel " + std::to_string(stream.channel_id()) + "\n";
    char buf[32];
    for (double t : stream.timestamps()) {
        const auto ps = static_cast<std::int64_t>(std::llround(t * 1e12));
        std::snprintf(buf, sizeof(buf), "%" PRId64 "\n", ps);
        out += buf;
    }
    write_file_atomic(path, out);
}

PhotonStream import_timetags_text(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path.string() + ": cannot open file");
    std::string line;
    std::size_t lineno = 0;
    int channel = 0;
    bool have_version = false;
    std::vector<double> ts;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (!have_version) {
            if (line != "# sbtt v1")
                throw ParseError(path.string() + ":" + std::to_string(lineno) +
                                 ": expected '# sbtt v1' header");
            have_version = true;
            continue;
        }
        if (line[0] == '#') {
            std::istringstream hdr(line.substr(1));
            std::string key;
            hdr >> key;
            if (key == "channel") hdr >> channel;
            continue;
        }
        std::int64_t ps = 0;
        const auto* begin = line.data();
        const auto* end = line.data() + line.size();
        auto [ptr, ec] = std::from_chars(begin, end, ps);
        if (ec != std::errc{} || ptr != end)
            throw ParseError(path.string() + ":" + std::to_string(lineno) +
                             ": expected integer picosecond timestamp");
        const double t = static_cast<double>(ps) * 1e-12;
        if (!ts.empty() && t <= ts.back())
            throw ParseError(path.string() + ":" + std::to_string(lineno) +
                             ": timestamps out of order");
        ts.push_back(t);
    }
    const double begin = ts.empty() ? 0.0 : ts.front();
    const double end = ts.empty() ? 0.0 : ts.back();
    return PhotonStream(channel, begin, end, std::move(ts));
}

void export_timetags_binary(const PhotonStream& stream, const std::filesystem::path& path) {
    std::string out;
    out.reserve(18 + stream.size() * 8);
    out += "SBTT";
    const std::uint32_t version = kFormatVersion;
    append_raw(out, &version, 4);
    const auto channel = static_cast<std::uint16_t>(stream.channel_id());
    append_raw(out, &channel, 2);
    const std::uint64_t count = stream.size();
    append_raw(out, &count, 8);
    for (double t : stream.timestamps()) {
        const auto ps = static_cast<std::uint64_t>(std::llround(t * 1e12));
        append_raw(out, &ps, 8);
    }
    write_file_atomic(path, out);
}

PhotonStream import_timetags_binary(const std::filesystem::path& path) {
    const std::string data = read_whole_file(path);
    if (data.size() < 4 || data.compare(0, 4, "SBTT") != 0)
        throw ParseError(path.string() + ": bad magic, expected SBTT");
    std::size_t off = 4;
    const auto version = read_raw<std::uint32_t>(data, off, path);
    if (version != kFormatVersion)
        throw ParseError(path.string() + ": unsupported SBTT version " + std::to_string(version));
    const auto channel = read_raw<std::uint16_t>(data, off, path);
    const auto count = read_raw<std::uint64_t>(data, off, path);
    std::vector<double> ts;
    ts.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        const auto ps = read_raw<std::uint64_t>(data, off, path);
        const double t = static_cast<double>(ps) * 1e-12;
        if (!ts.empty() && t <= ts.back())
            throw ParseError(path.string() + ": timestamp " + std::to_string(i) +
                             " out of order");
        ts.push_back(t);
    }
    const double begin = ts.empty() ? 0.0 : ts.front();
    const double end = ts.empty() ? 0.0 : ts.back();
    return PhotonStream(channel, begin, end, std::move(ts));
}

std::string histogram_csv(const CountHistogram& hist) {
    std::string out = "n,count,probability\n";
    const auto& c = hist.counts_per_n();
    for (std::size_t n = 0; n < c.size(); ++n) {
        out += std::to_string(n);
        out += ',';
        out += std::to_string(c[n]);
        out += ',';
        out += fmt_double(hist.probability(n));
        out += '\n';
    }
    return out;
}

std::string correlation_csv(const CorrelationFunction& cf) {
    std::string out = "lag_seconds,g2,stderr\n";
    for (std::size_t i = 0; i < cf.lags.size(); ++i) {
        out += fmt_double(cf.lags[i]);
        out += ',';
        out += fmt_double(cf.values[i]);
        out += ',';
        out += fmt_double(cf.stderrs[i]);
        out += '\n';
    }
    return out;
}

} // namespace sbl
