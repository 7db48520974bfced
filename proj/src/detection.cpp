#include "sbl/detection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "sbl/rng.hpp"

namespace sbl {

namespace {

constexpr std::size_t kThinningChunk = 1u << 16;

void check_probability(double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0))
        throw std::invalid_argument(std::string(what) + " must be in [0,1]");
}

std::vector<double> homogeneous_poisson(double rate, double t0, double t1,
                                        std::mt19937_64& engine) {
    std::vector<double> out;
    if (rate <= 0.0 || t1 <= t0) return out;
    std::exponential_distribution<double> gap(rate);
    double t = t0 + gap(engine);
    while (t < t1) {
        out.push_back(t);
        t += gap(engine);
    }
    return out;
}

} // namespace

PhotonStream::PhotonStream(int channel_id, double span_begin, double span_end,
                           std::vector<double> timestamps)
    : channel_id_(channel_id),
      span_begin_(span_begin),
      span_end_(span_end),
      timestamps_(std::move(timestamps)) {
    if (!(span_end_ >= span_begin_))
        throw std::invalid_argument("PhotonStream: span_end must be >= span_begin");
    for (std::size_t i = 0; i < timestamps_.size(); ++i) {
        const double t = timestamps_[i];
        if (!(t >= span_begin_ && t <= span_end_))
            throw std::invalid_argument("PhotonStream: timestamp outside span");
        if (i > 0 && !(t > timestamps_[i - 1]))
            throw std::invalid_argument("PhotonStream: timestamps must be strictly increasing");
    }
}

void validate(const DetectorParams& params) {
    if (!(params.dead_time >= 0.0))
        throw std::invalid_argument("DetectorParams: dead_time must be >= 0");
    if (!(params.jitter_rms >= 0.0))
        throw std::invalid_argument("DetectorParams: jitter_rms must be >= 0");
    check_probability(params.efficiency, "DetectorParams: efficiency");
    if (!(params.dark_rate >= 0.0))
        throw std::invalid_argument("DetectorParams: dark_rate must be >= 0");
}

PhotonStream sample_arrivals(const IntensityTrace& trace, double efficiency, std::uint64_t seed) {
    check_probability(efficiency, "sample_arrivals: efficiency");

    const double dt = trace.dt();
    const double t0 = trace.origin();
    const std::size_t n = trace.size();
    std::vector<double> events;
    events.reserve(static_cast<std::size_t>(efficiency * trace.mean() * trace.duration() * 1.1) +
                   16);

    for (std::size_t chunk_begin = 0, chunk_index = 0; chunk_begin < n;
         chunk_begin += kThinningChunk, ++chunk_index) {
        const std::size_t chunk_end = std::min(chunk_begin + kThinningChunk, n);
        double peak = 0.0;
        for (std::size_t i = chunk_begin; i < chunk_end; ++i) peak = std::max(peak, trace[i]);
        const double envelope = efficiency * peak;
        if (envelope <= 0.0) continue;

        auto engine = make_engine(derive_seed(seed, chunk_index));
        std::exponential_distribution<double> gap(envelope);
        std::uniform_real_distribution<double> uniform(0.0, 1.0);
        const double ta = t0 + static_cast<double>(chunk_begin) * dt;
        const double tb = t0 + static_cast<double>(chunk_end) * dt;
        double t = ta + gap(engine);
        while (t < tb) {
            const auto idx = static_cast<std::size_t>((t - t0) / dt);
            const double rate = efficiency * trace[std::min(idx, n - 1)];
            if (uniform(engine) * envelope < rate) events.push_back(t);
            t += gap(engine);
        }
    }
    return PhotonStream(0, t0, t0 + trace.duration(), std::move(events));
}

PhotonStream apply_dead_time(const PhotonStream& stream, double dead_time) {
    if (!(dead_time >= 0.0)) throw std::invalid_argument("apply_dead_time: dead_time must be >= 0");
    if (dead_time == 0.0 || stream.empty()) return stream;
    std::vector<double> kept;
    kept.reserve(stream.size());
    double last = -std::numeric_limits<double>::infinity();
    for (double t : stream.timestamps()) {
        if (t - last >= dead_time) {
            kept.push_back(t);
            last = t;
        }
    }
    return PhotonStream(stream.channel_id(), stream.span_begin(), stream.span_end(),
                        std::move(kept));
}

PhotonStream apply_jitter(const PhotonStream& stream, double jitter_rms, std::uint64_t seed) {
    if (!(jitter_rms >= 0.0)) throw std::invalid_argument("apply_jitter: jitter_rms must be >= 0");
    if (jitter_rms == 0.0 || stream.empty()) return stream;
    auto engine = make_engine(seed);
    std::normal_distribution<double> offset(0.0, jitter_rms);
    std::vector<double> ts(stream.timestamps());
    for (double& t : ts) t += offset(engine);
    std::sort(ts.begin(), ts.end());
    const double begin = std::min(stream.span_begin(), ts.front());
    const double end = std::max(stream.span_end(), ts.back());
    return PhotonStream(stream.channel_id(), begin, end, std::move(ts));
}

std::pair<PhotonStream, PhotonStream> beam_split(const PhotonStream& stream, double p_transmit,
                                                 std::uint64_t seed) {
    check_probability(p_transmit, "beam_split: p_transmit");
    auto engine = make_engine(seed);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::vector<double> ch1, ch2;
    ch1.reserve(stream.size());
    ch2.reserve(stream.size());
    for (double t : stream.timestamps()) {
        if (uniform(engine) < p_transmit)
            ch1.push_back(t);
        else
            ch2.push_back(t);
    }
    return {PhotonStream(1, stream.span_begin(), stream.span_end(), std::move(ch1)),
            PhotonStream(2, stream.span_begin(), stream.span_end(), std::move(ch2))};
}

PhotonStream add_dark_counts(const PhotonStream& stream, double dark_rate, std::uint64_t seed) {
    if (!(dark_rate >= 0.0)) throw std::invalid_argument("add_dark_counts: dark_rate must be >= 0");
    if (dark_rate == 0.0) return stream;
    auto engine = make_engine(seed);
    const auto dark = homogeneous_poisson(dark_rate, stream.span_begin(), stream.span_end(), engine);
    std::vector<double> merged;
    merged.reserve(stream.size() + dark.size());
    std::merge(stream.timestamps().begin(), stream.timestamps().end(), dark.begin(), dark.end(),
               std::back_inserter(merged));
    return PhotonStream(stream.channel_id(), stream.span_begin(), stream.span_end(),
                        std::move(merged));
}

} // namespace sbl
