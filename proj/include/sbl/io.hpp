#pragma once

#include <filesystem>
#include <string>

#include "sbl/detection.hpp"
#include "sbl/statistics.hpp"
#include "sbl/trace.hpp"

namespace sbl {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Writes content to path via a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

// Intensity traces: CSV with header "t_seconds,intensity_hz", and a binary
// format (magic "SBIT", u32 version, f64 dt, u64 count, f64 samples,
// little-endian).
void export_trace_csv(const IntensityTrace& trace, const std::filesystem::path& path);
IntensityTrace import_trace_csv(const std::filesystem::path& path);
void export_trace_binary(const IntensityTrace& trace, const std::filesystem::path& path);
IntensityTrace import_trace_binary(const std::filesystem::path& path);

// Time tags: text (header lines "# sbtt v1" / "# channel <id>", then one
// integer picosecond timestamp per line) and binary (magic "SBTT", u32
// version, u16 channel, u64 count, u64 picosecond timestamps, little-endian).
void export_timetags_text(const PhotonStream& stream, const std::filesystem::path& path);
PhotonStream import_timetags_text(const std::filesystem::path& path);
void export_timetags_binary(const PhotonStream& stream, const std::filesystem::path& path);
PhotonStream import_timetags_binary(const std::filesystem::path& path);

// Plot-ready CSV artifacts.
std::string histogram_csv(const CountHistogram& hist);
std::string correlation_csv(const CorrelationFunction& cf);

} // namespace sbl
