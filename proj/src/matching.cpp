#include "flowconf/matching.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "flowconf/error.hpp"

namespace flowconf {

const char* to_string(MatchKind k) noexcept {
    switch (k) {
        case MatchKind::kPerfect: return "perfect";
        case MatchKind::kWebsite: return "website";
        case MatchKind::kMiss: return "miss";
        case MatchKind::kNoPrediction: return "no_prediction";
    }
    return "unknown";
}

namespace {

MatchKind classify(const FlowId& query, const std::vector<FlowId>& matched) {
    if (matched.empty()) return MatchKind::kNoPrediction;
    if (std::find(matched.begin(), matched.end(), query) != matched.end()) return MatchKind::kPerfect;
    for (const auto& id : matched)
        if (id.site == query.site) return MatchKind::kWebsite;
    return MatchKind::kMiss;
}

}  // namespace

// ===== Hash matching =====

bool threshold_match(const FlowHash& query, const FlowHash& candidate, int tau) {
    if (tau < 0 || tau > query.m()) throw UsageError("tau must lie in [0, m]");
    return hamming(query, candidate) < tau;
}

std::vector<RocPoint> roc_from_distances(std::span<const int> true_distances, std::span<const int> impostor_distances,
                                         int m) {
    if (true_distances.empty() || impostor_distances.empty())
        throw UsageError("ROC needs at least one true pair and one impostor pair");
    auto histogram = [m](std::span<const int> ds) {
        std::vector<std::size_t> h(static_cast<std::size_t>(m) + 1, 0);
        for (int d : ds) {
            if (d < 0 || d > m) throw UsageError("distance outside [0, m]");
            ++h[static_cast<std::size_t>(d)];
        }
        return h;
    };
    const auto ht = histogram(true_distances);
    const auto hi = histogram(impostor_distances);

    std::vector<RocPoint> curve;
    curve.reserve(static_cast<std::size_t>(m) + 1);
    std::size_t below_t = 0;
    std::size_t below_i = 0;
    for (int tau = 0; tau <= m; ++tau) {
        if (tau > 0) {
            below_t += ht[static_cast<std::size_t>(tau - 1)];
            below_i += hi[static_cast<std::size_t>(tau - 1)];
        }
        curve.push_back({tau, static_cast<double>(below_t) / static_cast<double>(true_distances.size()),
                         static_cast<double>(below_i) / static_cast<double>(impostor_distances.size())});
    }
    return curve;
}

std::vector<RocPoint> roc_curve(const std::vector<std::pair<FlowHash, FlowHash>>& true_pairs,
                                const std::vector<std::pair<FlowHash, FlowHash>>& impostor_pairs) {
    if (true_pairs.empty() || impostor_pairs.empty())
        throw UsageError("ROC needs at least one true pair and one impostor pair");
    const int m = true_pairs.front().first.m();
    std::vector<int> dt, di;
    dt.reserve(true_pairs.size());
    di.reserve(impostor_pairs.size());
    for (const auto& [a, b] : true_pairs) dt.push_back(hamming(a, b));
    for (const auto& [a, b] : impostor_pairs) {
        if (a.m() != m) throw UsageError("hash length mismatch across ROC pairs");
        di.push_back(hamming(a, b));
    }
    return roc_from_distances(dt, di, m);
}

double roc_auc(const std::vector<RocPoint>& curve) {
    double area = 0.0;
    double px = 0.0, py = 0.0;
    for (const auto& p : curve) {
        area += (p.fpr - px) * (p.tpr + py) / 2.0;
        px = p.fpr;
        py = p.tpr;
    }
    area += (1.0 - px) * (1.0 + py) / 2.0;
    return area;
}

MatchOutcome nearest_match(const FlowHash& query, std::span<const FlowHash> library) {
    if (library.empty()) throw UsageError("nearest match needs a non-empty library");
    MatchOutcome out;
    out.query = query.id();
    int best = query.m() + 1;
    for (const auto& cand : library) {
        const int d = hamming(query, cand);
        if (d < best) {
            best = d;
            out.matched_ids.clear();
        }
        if (d == best) out.matched_ids.push_back(cand.id());
    }
    out.score = best;
    out.kind = classify(out.query, out.matched_ids);
    return out;
}

// ===== Adapted SCC =====

void SccConfig::validate() const {
    if (!(window_length > 0.0) || !std::isfinite(window_length)) throw UsageError("SCC window length must be > 0");
}

std::vector<std::uint16_t> scc_window_counts(std::span<const double> timestamps, double k) {
    if (!(k > 0.0)) throw UsageError("SCC window length must be > 0");
    if (timestamps.empty()) return {};
    const double last = *std::max_element(timestamps.begin(), timestamps.end());
    const auto n = static_cast<std::size_t>(std::floor(last / k)) + 1;
    std::vector<std::uint16_t> counts(n, 0);
    for (double t : timestamps) {
        const auto j = std::min(static_cast<std::size_t>(std::floor(std::max(t, 0.0) / k)), n - 1);
        if (counts[j] != UINT16_MAX) ++counts[j];
    }
    return counts;
}

namespace {

int equal_windows(const std::vector<std::uint16_t>& a, const std::vector<std::uint16_t>& b) {
    const std::size_t n = std::min(a.size(), b.size());
    int s = 0;
    for (std::size_t j = 0; j < n; ++j) s += a[j] == b[j];
    return s;
}

}  // namespace

int scc_score(std::span<const double> u, std::span<const double> p, double k) {
    return equal_windows(scc_window_counts(u, k), scc_window_counts(p, k));
}

int scc_score(const Trace& u, const Trace& p, double k) {
    const auto tu = u.timestamps();
    const auto tp = p.timestamps();
    return scc_score(tu, tp, k);
}

SccIndex::SccIndex(const FlowSet& padded, const SccConfig& cfg) : k_(cfg.window_length) {
    cfg.validate();
    append(padded);
}

void SccIndex::append(const FlowSet& more) {
    ids_.reserve(ids_.size() + more.size());
    out_.reserve(out_.size() + more.size());
    in_.reserve(in_.size() + more.size());
    for (const auto& t : more) {
        ids_.push_back(t.id());
        out_.push_back(scc_window_counts(t.timestamps(Direction::kOutgoing), k_));
        in_.push_back(scc_window_counts(t.timestamps(Direction::kIncoming), k_));
    }
}

std::vector<int> SccIndex::scores(std::span<const double> unpadded, Direction d) const {
    const auto q = scc_window_counts(unpadded, k_);
    const auto& table = d == Direction::kOutgoing ? out_ : in_;
    std::vector<int> s(table.size());
    for (std::size_t i = 0; i < table.size(); ++i) s[i] = equal_windows(q, table[i]);
    return s;
}

MatchOutcome adapted_scc(const Trace& unpadded, const SccIndex& padded) {
    if (padded.size() == 0) throw UsageError("adapted-SCC needs at least one candidate flow");
    const auto s_in = padded.scores(unpadded.timestamps(Direction::kIncoming), Direction::kIncoming);
    const auto s_out = padded.scores(unpadded.timestamps(Direction::kOutgoing), Direction::kOutgoing);
    const int max_in = *std::max_element(s_in.begin(), s_in.end());
    const int max_out = *std::max_element(s_out.begin(), s_out.end());

    MatchOutcome out;
    out.query = unpadded.id();
    out.score_in = max_in;
    out.score_out = max_out;
    out.score = max_in + max_out;
    std::vector<FlowId> agreed;
    for (std::size_t i = 0; i < padded.size(); ++i) {
        if (s_in[i] == max_in && s_out[i] == max_out) agreed.push_back(padded.id(i));
    }
    std::sort(agreed.begin(), agreed.end());
    agreed.erase(std::unique(agreed.begin(), agreed.end()), agreed.end());
    if (agreed.size() == 1) out.matched_ids = std::move(agreed);
    out.kind = classify(out.query, out.matched_ids);
    return out;
}

MatchOutcome adapted_scc(const Trace& unpadded, const FlowSet& padded, const SccConfig& cfg) {
    return adapted_scc(unpadded, SccIndex(padded, cfg));
}

// ===== Reporting =====

void MatchSummary::add(const MatchOutcome& o) {
    ++queries;
    switch (o.kind) {
        case MatchKind::kPerfect: ++perfect; break;
        case MatchKind::kWebsite: ++website; break;
        case MatchKind::kMiss: ++miss; break;
        case MatchKind::kNoPrediction: ++no_prediction; break;
    }
}

namespace {
double ratio(std::size_t a, std::size_t b) { return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b); }
}  // namespace

double MatchSummary::perfect_rate() const { return ratio(perfect, queries); }
double MatchSummary::website_rate() const { return ratio(perfect + website, queries); }
double MatchSummary::miss_rate() const { return ratio(miss, queries); }
double MatchSummary::no_prediction_rate() const { return ratio(no_prediction, queries); }
double MatchSummary::false_match_rate() const { return ratio(website + miss, queries - no_prediction); }

std::string format_match_report(const std::vector<MatchOutcome>& outcomes, const std::string& header_comment) {
    std::ostringstream out;
    if (!header_comment.empty()) out << "# " << header_comment << '\n';
    out << "query_site,query_instance,outcome,matched_ids,score\n";
    for (const auto& o : outcomes) {
        out << o.query.site << ',' << o.query.instance << ',' << to_string(o.kind) << ',';
        for (std::size_t i = 0; i < o.matched_ids.size(); ++i) {
            if (i) out << ';';
            out << to_string(o.matched_ids[i]);
        }
        out << ',' << o.score << '\n';
    }
    return out.str();
}

std::string format_roc(const std::vector<RocPoint>& curve, const std::string& header_comment) {
    std::string out;
    if (!header_comment.empty()) out += "# " + header_comment + "\n";
    out += "tau,tpr,fpr\n";
    char buf[96];
    for (const auto& p : curve) {
        std::snprintf(buf, sizeof buf, "%d,%.6f,%.6f\n", p.tau, p.tpr, p.fpr);
        out += buf;
    }
    return out;
}

}  // namespace flowconf
