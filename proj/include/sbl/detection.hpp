#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "sbl/trace.hpp"

namespace sbl {

/// Time-tagged photon arrivals from one detector channel.
class PhotonStream {
public:
    PhotonStream(int channel_id, double span_begin, double span_end,
                 std::vector<double> timestamps);

    int channel_id() const { return channel_id_; }
    double span_begin() const { return span_begin_; }
    double span_end() const { return span_end_; }
    std::size_t size() const { return timestamps_.size(); }
    bool empty() const { return timestamps_.empty(); }
    const std::vector<double>& timestamps() const { return timestamps_; }

private:
    int channel_id_;
    double span_begin_;
    double span_end_;
    std::vector<double> timestamps_; // strictly increasing, within span
};

struct DetectorParams {
    double dead_time = 35e-9;    // seconds
    double jitter_rms = 0.35e-9; // seconds
    double efficiency = 1.0;     // in [0,1]
    double dark_rate = 0.0;      // homogeneous dark counts, photons/second
};

void validate(const DetectorParams& params);

/// Inhomogeneous Poisson arrivals with rate efficiency * I(t), generated by
/// thinning against the per-chunk running maximum of the trace (chunks of
/// 2^16 samples). Deterministic given the seed; chunks use derived sub-seeds
/// so they could be drawn independently.
PhotonStream sample_arrivals(const IntensityTrace& trace, double efficiency, std::uint64_t seed);

/// Keeps an event iff it is >= dead_time after the last kept event (ties keep;
/// the first event is always kept).
PhotonStream apply_dead_time(const PhotonStream& stream, double dead_time);

/// Adds iid zero-mean Gaussian offsets of the given RMS and re-sorts.
PhotonStream apply_jitter(const PhotonStream& stream, double jitter_rms, std::uint64_t seed);

/// Routes each event to channel 1 with probability p_transmit, else channel 2.
/// The union of the outputs is exactly the input.
std::pair<PhotonStream, PhotonStream> beam_split(const PhotonStream& stream, double p_transmit,
                                                 std::uint64_t seed);

/// Merges homogeneous Poisson dark counts at the given rate into the stream.
PhotonStream add_dark_counts(const PhotonStream& stream, double dark_rate, std::uint64_t seed);

} // namespace sbl
