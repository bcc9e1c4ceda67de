#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "flowconf/flow_model.hpp"
#include "flowconf/rng.hpp"

namespace flowconf {

// ---------------------------------------------------------------------------
// Network impairments

struct ImpairmentConfig {
    double drop_probability = 0.0;
    IpdvDistribution ipdv = IpdvDistribution::zero();
    std::uint64_t seed = 0;

    void validate() const;
};

/// Removes each packet independently with probability p, keeps survivor
/// order and re-normalizes. An empty result is legal.
Trace drop_packets(const Trace& t, double p, Rng& rng);

/// Adds an independent IPDV draw to every timestamp, re-sorts by the new
/// times (observers see arrival order) and re-normalizes.
Trace apply_jitter(const Trace& t, const IpdvDistribution& dist, Rng& rng);

/// Drop, then jitter; the stream is seeded from (cfg.seed, t.id()).
Trace impair(const Trace& t, const ImpairmentConfig& cfg);
FlowSet impair_flowset(const FlowSet& flows, const ImpairmentConfig& cfg);

// ---------------------------------------------------------------------------
// Adaptive padding

enum class ApMode : std::uint8_t { kBurst = 0, kGap = 1 };

/// Token counts over inter-arrival gaps. Gaps outside the edge range are
/// clamped into the first or last bin.
struct Histogram {
    std::vector<double> edges;           // bins + 1, strictly increasing, edges[0] > 0
    std::vector<std::uint64_t> counts;   // raw tokens, one per observed gap

    std::size_t bins() const noexcept { return counts.size(); }
    std::uint64_t total() const noexcept;
    std::size_t bin_of(double gap) const;

    /// Picks a bin in proportion to its tokens (uniformly when the histogram
    /// holds none), then a log-uniform value inside it.
    double sample(Rng& rng) const;

    void validate() const;
    bool operator==(const Histogram&) const = default;
};

struct ApHistograms {
    // Indexed [direction][mode]; direction 0 = outgoing, 1 = incoming.
    std::array<std::array<Histogram, 2>, 2> hist;

    Histogram& at(Direction d, ApMode m) { return hist[d == Direction::kOutgoing ? 0 : 1][static_cast<int>(m)]; }
    const Histogram& at(Direction d, ApMode m) const {
        return hist[d == Direction::kOutgoing ? 0 : 1][static_cast<int>(m)];
    }

    void validate() const;
    bool operator==(const ApHistograms&) const = default;
};

/// bins + 1 geometrically spaced edges from lo to hi.
std::vector<double> exponential_edges(double lo, double hi, int bins);

struct HistogramConfig {
    std::vector<double> edges = exponential_edges(0.001, 10.0, 20);
    double split_threshold = 0.1;  // gaps below go to the burst histogram
};

/// Per-direction histograms of consecutive inter-arrival gaps; each gap is
/// one token in either the burst or the gap histogram.
ApHistograms build_histograms(const FlowSet& corpus, const HistogramConfig& cfg = {});

/// `direction,mode,bin_lo,bin_hi,count` lines, e.g. `out,burst,0.001,0.0015848931924611134,12`.
std::string format_histograms(const ApHistograms& h);
ApHistograms parse_histograms(std::string_view text);
void write_histograms(const std::filesystem::path& file, const ApHistograms& h);
ApHistograms read_histograms(const std::filesystem::path& file);

enum class PaddingRateDefinition { kDummyPerReal, kDummyPerTotal };

struct ApConfig {
    ApHistograms histograms;
    double target_padding_rate = 0.54;
    double rate_scale = 1.0;                // sampled delays are divided by this
    double burst_inject_probability = 0.5;  // chance a burst-mode expiry emits a dummy
    int max_dummies_per_gap = 100;
    PaddingRateDefinition rate_definition = PaddingRateDefinition::kDummyPerReal;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Pads each direction independently. Between consecutive real packets of a
/// direction the padder runs this machine, starting in burst mode:
///
///   burst: delay = burst_hist.sample() / rate_scale. If the next real packet
///          arrives first, stop. Otherwise emit a dummy with probability
///          burst_inject_probability and enter gap mode.
///   gap:   delay = gap_hist.sample() / rate_scale. If the next real packet
///          arrives first, stop. Otherwise emit a dummy and return to burst mode.
///
/// Timers restart from the expiry instant. Nothing is added after the last
/// real packet, and real packets are never moved.
Trace adaptive_pad(const Trace& t, const ApConfig& cfg, Rng& rng);

/// Pads every flow with a stream seeded from (cfg.seed, flow id).
FlowSet pad_flowset(const FlowSet& flows, const ApConfig& cfg);

/// Corpus-level rate: total dummies over total real (or total) packets.
double padding_rate(const FlowSet& padded, PaddingRateDefinition def = PaddingRateDefinition::kDummyPerReal);

struct Calibration {
    double rate_scale = 1.0;
    double achieved_rate = 0.0;
    int evaluations = 0;
};

/// Searches rate_scale (log-space bisection in [1e-6, 1e6]) until the corpus
/// padding rate is within `tolerance` of cfg.target_padding_rate. Throws
/// CalibrationError when the target cannot be reached.
Calibration calibrate_padding_rate(const FlowSet& corpus, const ApConfig& cfg, double tolerance = 0.01);

}  // namespace flowconf
