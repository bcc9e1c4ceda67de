#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "flowconf/flow_model.hpp"

namespace flowconf {

/// Where inside a window its representative time is taken.
enum class WindowAnchor { kMidpoint, kStart };

struct HashConfig {
    int n_windows = 256;
    int hash_bits = 256;
    std::uint64_t basis_seed = 0;
    // Basis arguments are window times multiplied by this (1 = seconds, 1000 = ms).
    double time_scale = 1.0;
    WindowAnchor anchor = WindowAnchor::kMidpoint;
    // Ablation: multiply the first window's basis values by its packet count.
    bool weight_first_window = false;

    void validate() const;
};

/// The m sinusoidal bases
///     R_a(x) = sin(x + a) / 5 + sin((x + a) * r_a) * r_a,   a = 1..m
/// with coefficients r_a drawn in order a = 1..m from std::mt19937_64(seed):
/// r = 2 * (draw >> 11) * 2^-53 - 1, redrawing the (never observed) value -1.
class BasisSet {
public:
    static BasisSet generate(int m, std::uint64_t seed);

    /// Explicit coefficients; used by conformance tests.
    static BasisSet from_coefficients(std::vector<double> r);

    int m() const noexcept { return static_cast<int>(r_.size()); }
    std::uint64_t seed() const noexcept { return seed_; }
    const std::vector<double>& coefficients() const noexcept { return r_; }

    /// R_a(x) for 1-based a. Throws UsageError when a is outside 1..m.
    double value(int a, double x) const;

private:
    std::vector<double> r_;
    std::uint64_t seed_ = 0;
};

double basis_value(int a, double x, const BasisSet& b);

struct WindowCounts {
    std::vector<double> rep_times;          // representative time per window
    std::vector<std::int64_t> cumulative;   // packets up to and including window i
    std::vector<std::int64_t> deltas;       // packets inside window i
};

/// Window i of a flow lasting D seconds is [iD/N, (i+1)D/N), the last one
/// closed; a packet at t falls in floor(t*N/D) clamped to N-1. Both
/// directions are counted together. Throws DiscardFlow when the trace has
/// fewer than N packets (or none).
WindowCounts windowize(const Trace& t, int n_windows, WindowAnchor anchor = WindowAnchor::kMidpoint);

class FlowHash {
public:
    FlowHash() = default;
    FlowHash(FlowId id, int m);

    const FlowId& id() const noexcept { return id_; }
    int m() const noexcept { return m_; }

    /// Bit for basis a = i + 1.
    bool bit(int i) const { return (words_[static_cast<std::size_t>(i) >> 6] >> (i & 63)) & 1U; }
    void set_bit(int i, bool v);

    const std::vector<std::uint64_t>& words() const noexcept { return words_; }

    /// Little-endian: byte k holds bits 8k..8k+7 with bit 8k in its LSB;
    /// bytes are written in order as lowercase hex pairs.
    std::string to_hex() const;
    static FlowHash from_hex(FlowId id, int m, std::string_view hex);

    /// Real-valued projections H, kept only when requested.
    std::optional<std::vector<double>> accumulator;

    bool operator==(const FlowHash& o) const { return id_ == o.id_ && m_ == o.m_ && words_ == o.words_; }

private:
    FlowId id_;
    int m_ = 0;
    std::vector<std::uint64_t> words_;
};

FlowHash compute_hash(const Trace& t, const HashConfig& cfg, const BasisSet& basis, bool keep_accumulator = false);

/// Number of differing bits. Throws UsageError on length mismatch.
int hamming(const FlowHash& a, const FlowHash& b);

struct HashedFlows {
    std::vector<FlowHash> hashes;
    std::vector<FlowId> discarded;  // flows with fewer packets than windows
};

HashedFlows hash_flowset(const FlowSet& flows, const HashConfig& cfg, const BasisSet& basis);

/// `<site>-<instance>,<m>,<hex>` per line; lines starting with '#' are comments.
void write_hash_library(const std::filesystem::path& file, const std::vector<FlowHash>& hashes,
                        std::string_view header_comment = {});
std::string format_hash_library(const std::vector<FlowHash>& hashes, std::string_view header_comment = {});
std::vector<FlowHash> parse_hash_library(std::string_view text);
std::vector<FlowHash> read_hash_library(const std::filesystem::path& file);

}  // namespace flowconf
