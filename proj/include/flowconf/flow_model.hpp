#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "flowconf/rng.hpp"

namespace flowconf {

enum class Direction : std::int8_t { kOutgoing = 1, kIncoming = -1 };

struct PacketEvent {
    double timestamp = 0.0;  // seconds since flow start
    Direction direction = Direction::kOutgoing;
    bool is_dummy = false;  // set only by adaptive padding

    bool operator==(const PacketEvent&) const = default;
};

struct FlowId {
    int site = 0;
    int instance = 0;

    auto operator<=>(const FlowId&) const = default;
};

/// "<site>-<instance>"
std::string to_string(const FlowId& id);

/// A packet sequence sorted by time whose first packet sits at t = 0.
/// The constructor checks both properties; use Trace::normalize to build
/// one from arbitrary timestamps.
class Trace {
public:
    Trace() = default;
    Trace(FlowId id, std::vector<PacketEvent> packets);

    /// Stable-sorts by timestamp and shifts so the earliest packet is at 0.
    static Trace normalize(FlowId id, std::vector<PacketEvent> packets);

    const FlowId& id() const noexcept { return id_; }
    const std::vector<PacketEvent>& packets() const noexcept { return packets_; }
    std::size_t size() const noexcept { return packets_.size(); }
    bool empty() const noexcept { return packets_.empty(); }

    /// Timestamp of the last packet (0 for an empty trace).
    double duration() const noexcept;

    /// Timestamps of the packets travelling in one direction, still
    /// measured from the start of the whole flow.
    std::vector<double> timestamps(Direction d) const;
    std::vector<double> timestamps() const;

    std::size_t count_dummies() const noexcept;

    /// Copy with padding packets removed. Timing is not re-normalized.
    Trace without_dummies() const;

    bool operator==(const Trace&) const = default;

private:
    FlowId id_;
    std::vector<PacketEvent> packets_;
};

class FlowSet {
public:
    FlowSet() = default;
    explicit FlowSet(std::vector<Trace> traces);

    const std::vector<Trace>& traces() const noexcept { return traces_; }
    std::size_t size() const noexcept { return traces_.size(); }
    bool empty() const noexcept { return traces_.empty(); }
    const Trace& operator[](std::size_t i) const { return traces_[i]; }

    auto begin() const noexcept { return traces_.begin(); }
    auto end() const noexcept { return traces_.end(); }

    /// Number of distinct sites.
    std::size_t site_count() const;

    /// Index of the trace with this id, or size() when absent.
    std::size_t find(const FlowId& id) const;

    bool operator==(const FlowSet&) const = default;

private:
    std::vector<Trace> traces_;
};

// ---------------------------------------------------------------------------
// Inter-packet delay variation

struct EmpiricalIpdv {
    std::vector<double> samples;
};

struct NormalIpdv {
    double mean = 0.021;
    double stddev = 0.150;
    double min_clip = -1.418;
    double max_clip = 1.735;
};

class IpdvDistribution {
public:
    struct Summary {
        double min = 0.0;
        double mean = 0.0;
        double max = 0.0;
    };

    explicit IpdvDistribution(EmpiricalIpdv e);
    explicit IpdvDistribution(NormalIpdv n);

    static IpdvDistribution zero() { return IpdvDistribution(EmpiricalIpdv{{0.0}}); }

    /// Parses "none", "normal:mean,sd[,min,max]" or "empirical:<path>".
    /// Any other text is treated as a path to an empirical sample file.
    static IpdvDistribution parse(std::string_view spec);

    double sample(Rng& rng) const;

    const Summary& summary() const noexcept { return summary_; }
    bool is_empirical() const noexcept { return std::holds_alternative<EmpiricalIpdv>(kind_); }
    const std::variant<EmpiricalIpdv, NormalIpdv>& kind() const noexcept { return kind_; }

    /// Canonical text form, round-trips through parse() for the normal kind.
    std::string describe() const;

private:
    std::variant<EmpiricalIpdv, NormalIpdv> kind_;
    Summary summary_;
};

// ---------------------------------------------------------------------------
// Ingestion

/// Parses `<timestamp>\t<+1|-1>` lines. Throws DataError naming the line.
Trace parse_trace_file(std::string_view content, FlowId id);

/// Inverse of parse_trace_file: `%f\t%+d\n` per packet.
std::string serialize_trace(const Trace& t);

struct DatasetLoad {
    FlowSet flows;
    std::size_t skipped = 0;  // files whose names are not <site>-<instance>
    std::vector<std::string> warnings;
};

/// Loads every `<site>-<instance>` file under root, ordered by (site, instance).
DatasetLoad load_dataset(const std::filesystem::path& root);

/// Manifest lines: `<site> <instance> <path>`; relative paths resolve
/// against the manifest's directory. Blank lines and '#' comments ignored.
DatasetLoad load_dataset_manifest(const std::filesystem::path& manifest);

/// Writes one `<site>-<instance>` file per trace (dummy flags are not stored).
void save_dataset(const FlowSet& flows, const std::filesystem::path& root);

std::vector<double> load_ipdv_samples(const std::filesystem::path& file);
void save_ipdv_samples(const IpdvDistribution& dist, const std::filesystem::path& file);

// ---------------------------------------------------------------------------
// Synthetic corpus

/// Knobs of the bursty page-load surrogate. Each site draws a template of
/// bursts; every instance perturbs the template.
struct BurstModelParams {
    int min_bursts = 6;
    int max_bursts = 18;
    int min_burst_packets = 20;
    int max_burst_packets = 220;
    double intra_burst_gap_mean = 0.004;  // seconds, exponential
    double min_idle_gap = 0.15;           // seconds between bursts
    double max_idle_gap = 1.6;
    double outgoing_fraction = 0.15;      // share of client->server cells inside a burst
    double size_jitter = 0.12;            // relative sd of burst sizes across instances
    double gap_jitter = 0.12;             // relative sd of idle gaps across instances
    double burst_skip_probability = 0.04; // chance an instance omits a burst
};

FlowSet generate_synthetic_corpus(int n_sites, int n_instances, const BurstModelParams& params,
                                  std::uint64_t seed);

/// Per-packet difference of inter-arrival deltas between two vantage points.
/// Flows are paired by FlowId.
IpdvDistribution build_ipdv_distribution(const FlowSet& client, const FlowSet& server);

}  // namespace flowconf
