#include "flowconf/impairments.hpp"

#include <algorithm>
#include <cmath>

#include "flowconf/error.hpp"

namespace flowconf {

void ImpairmentConfig::validate() const {
    if (!(drop_probability >= 0.0 && drop_probability <= 1.0))
        throw UsageError("drop probability must lie in [0, 1]");
}

Trace drop_packets(const Trace& t, double p, Rng& rng) {
    if (!(p >= 0.0 && p <= 1.0)) throw UsageError("drop probability must lie in [0, 1]");
    std::vector<PacketEvent> kept;
    kept.reserve(t.size());
    for (const auto& pkt : t.packets()) {
        if (!rng.bernoulli(p)) kept.push_back(pkt);
    }
    return Trace::normalize(t.id(), std::move(kept));
}

Trace apply_jitter(const Trace& t, const IpdvDistribution& dist, Rng& rng) {
    std::vector<PacketEvent> moved = t.packets();
    for (auto& pkt : moved) pkt.timestamp += dist.sample(rng);
    return Trace::normalize(t.id(), std::move(moved));
}

Trace impair(const Trace& t, const ImpairmentConfig& cfg) {
    cfg.validate();
    // Drop decisions and delays come from separate streams, one draw per
    // original packet each, so the surviving packets see the same delays
    // whatever the drop probability. Equivalent in law to drop_packets
    // followed by apply_jitter.
    const std::uint64_t flow_seed = derive_seed(cfg.seed, t.id().site, t.id().instance);
    Rng drop_rng(derive_seed(flow_seed, "drop"));
    Rng delay_rng(derive_seed(flow_seed, "jitter"));
    std::vector<PacketEvent> out;
    out.reserve(t.size());
    for (const auto& pkt : t.packets()) {
        const bool dropped = drop_rng.bernoulli(cfg.drop_probability);
        const double delay = cfg.ipdv.sample(delay_rng);
        if (dropped) continue;
        out.push_back(pkt);
        out.back().timestamp += delay;
    }
    return Trace::normalize(t.id(), std::move(out));
}

FlowSet impair_flowset(const FlowSet& flows, const ImpairmentConfig& cfg) {
    std::vector<Trace> out;
    out.reserve(flows.size());
    for (const auto& t : flows) out.push_back(impair(t, cfg));
    return FlowSet(std::move(out));
}

}  // namespace flowconf
