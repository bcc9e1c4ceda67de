#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "flowconf/flow_model.hpp"
#include "flowconf/hashing.hpp"

namespace flowconf {

enum class MatchKind { kPerfect, kWebsite, kMiss, kNoPrediction };

const char* to_string(MatchKind k) noexcept;

struct MatchOutcome {
    FlowId query;
    MatchKind kind = MatchKind::kNoPrediction;
    std::vector<FlowId> matched_ids;
    int score = 0;      // minimum Hamming distance, or in+out SCC score
    int score_in = 0;   // adapted-SCC only
    int score_out = 0;
};

// ---------------------------------------------------------------------------
// Hash matching

/// True iff hamming(query, candidate) < tau ("below the threshold").
bool threshold_match(const FlowHash& query, const FlowHash& candidate, int tau);

struct RocPoint {
    int tau = 0;
    double tpr = 0.0;
    double fpr = 0.0;
};

/// One point per tau in 0..m.
std::vector<RocPoint> roc_curve(const std::vector<std::pair<FlowHash, FlowHash>>& true_pairs,
                                const std::vector<std::pair<FlowHash, FlowHash>>& impostor_pairs);

/// Same curve from precomputed distances.
std::vector<RocPoint> roc_from_distances(std::span<const int> true_distances, std::span<const int> impostor_distances,
                                         int m);

/// Trapezoidal area under the curve, closed at (0,0) and (1,1).
double roc_auc(const std::vector<RocPoint>& curve);

/// All library entries at the minimum distance are kept. The query's own id
/// names its true counterpart.
MatchOutcome nearest_match(const FlowHash& query, std::span<const FlowHash> library);

// ---------------------------------------------------------------------------
// Adapted selective cross-correlation

struct SccConfig {
    double window_length = 0.05;  // seconds

    void validate() const;
};

/// Packets per window [jk, (j+1)k) for j < floor(last/k) + 1; empty input
/// spans no windows. Counts saturate at 65535.
std::vector<std::uint16_t> scc_window_counts(std::span<const double> timestamps, double k);

/// Number of windows, inside both flows' spans, holding equal packet counts.
int scc_score(std::span<const double> u, std::span<const double> p, double k);
int scc_score(const Trace& u, const Trace& p, double k);

/// Per-direction window counts of a padded flow set, for repeated queries.
class SccIndex {
public:
    SccIndex(const FlowSet& padded, const SccConfig& cfg);

    /// Adds more candidates. Ids may repeat those already present.
    void append(const FlowSet& more);

    std::size_t size() const noexcept { return ids_.size(); }
    const FlowId& id(std::size_t i) const { return ids_[i]; }
    double window_length() const noexcept { return k_; }

    /// Score of one unpadded direction against every candidate.
    std::vector<int> scores(std::span<const double> unpadded, Direction d) const;

private:
    double k_;
    std::vector<FlowId> ids_;
    std::vector<std::vector<std::uint16_t>> out_;
    std::vector<std::vector<std::uint16_t>> in_;
};

/// Scores the unpadded flow against every candidate per direction and
/// predicts a flow only when the two directions' argmax sets intersect in
/// exactly one flow id.
MatchOutcome adapted_scc(const Trace& unpadded, const SccIndex& padded);
MatchOutcome adapted_scc(const Trace& unpadded, const FlowSet& padded, const SccConfig& cfg);

// ---------------------------------------------------------------------------
// Reporting

struct MatchSummary {
    std::size_t queries = 0;
    std::size_t perfect = 0;
    std::size_t website = 0;  // same site, true counterpart absent
    std::size_t miss = 0;
    std::size_t no_prediction = 0;

    void add(const MatchOutcome& o);
    double perfect_rate() const;
    /// Queries attributed to the right site (perfect matches included).
    double website_rate() const;
    double miss_rate() const;
    double no_prediction_rate() const;
    /// Predictions that named a wrong flow, as a share of all predictions.
    double false_match_rate() const;
};

/// `query_site,query_instance,outcome,matched_ids,score` with ids joined by ';'.
std::string format_match_report(const std::vector<MatchOutcome>& outcomes, const std::string& header_comment = {});
std::string format_roc(const std::vector<RocPoint>& curve, const std::string& header_comment = {});

}  // namespace flowconf
