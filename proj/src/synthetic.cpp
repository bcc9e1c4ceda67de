#include <algorithm>
#include <cmath>

#include "flowconf/error.hpp"
#include "flowconf/flow_model.hpp"

namespace flowconf {

namespace {

struct BurstTemplate {
    int packets;
    double idle_before;  // seconds of silence preceding the burst
    double gap_mean;     // mean spacing inside the burst
};

int uniform_int(Rng& rng, int lo, int hi) {
    return lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
}

double exponential(Rng& rng, double mean) { return -mean * std::log1p(-rng.uniform01()); }

std::vector<BurstTemplate> site_template(const BurstModelParams& p, Rng& rng) {
    const int n = uniform_int(rng, p.min_bursts, p.max_bursts);
    std::vector<BurstTemplate> bursts;
    bursts.reserve(static_cast<std::size_t>(n));
    for (int b = 0; b < n; ++b) {
        BurstTemplate t;
        t.packets = uniform_int(rng, p.min_burst_packets, p.max_burst_packets);
        t.idle_before = b == 0 ? 0.0 : rng.uniform(p.min_idle_gap, p.max_idle_gap);
        t.gap_mean = p.intra_burst_gap_mean * std::exp2(rng.uniform(-1.0, 1.0));
        bursts.push_back(t);
    }
    return bursts;
}

void validate(int n_sites, int n_instances, const BurstModelParams& p) {
    if (n_sites < 1 || n_instances < 1) throw UsageError("synthetic corpus needs at least one site and instance");
    if (p.min_bursts < 1 || p.max_bursts < p.min_bursts || p.min_burst_packets < 1 ||
        p.max_burst_packets < p.min_burst_packets)
        throw UsageError("burst model counts must be positive with min <= max");
    if (!(p.intra_burst_gap_mean > 0.0) || !(p.min_idle_gap >= 0.0) || !(p.max_idle_gap >= p.min_idle_gap))
        throw UsageError("burst model gaps must be positive with min <= max");
    if (!(p.outgoing_fraction >= 0.0 && p.outgoing_fraction <= 1.0) ||
        !(p.burst_skip_probability >= 0.0 && p.burst_skip_probability < 1.0) || !(p.size_jitter >= 0.0) ||
        !(p.gap_jitter >= 0.0))
        throw UsageError("burst model probabilities out of range");
}

}  // namespace

FlowSet generate_synthetic_corpus(int n_sites, int n_instances, const BurstModelParams& params,
                                  std::uint64_t seed) {
    validate(n_sites, n_instances, params);
    std::vector<Trace> traces;
    traces.reserve(static_cast<std::size_t>(n_sites) * static_cast<std::size_t>(n_instances));

    for (int site = 0; site < n_sites; ++site) {
        Rng site_rng(derive_seed(seed, site, -1));
        const auto bursts = site_template(params, site_rng);

        for (int inst = 0; inst < n_instances; ++inst) {
            Rng rng(derive_seed(seed, site, inst));
            std::vector<PacketEvent> packets;
            double t = 0.0;
            bool first = true;
            for (const auto& b : bursts) {
                // The first burst is never skipped so every flow has a request.
                if (!first && rng.bernoulli(params.burst_skip_probability)) continue;
                const double idle = b.idle_before * std::max(0.05, 1.0 + params.gap_jitter * rng.normal());
                const int size = std::max(
                    1, static_cast<int>(std::lround(b.packets * (1.0 + params.size_jitter * rng.normal()))));
                t += idle;
                for (int k = 0; k < size; ++k) {
                    if (k > 0) t += exponential(rng, b.gap_mean);
                    // Each burst opens with a client request.
                    const bool out = k == 0 || rng.bernoulli(params.outgoing_fraction);
                    packets.push_back({t, out ? Direction::kOutgoing : Direction::kIncoming, false});
                }
                first = false;
            }
            traces.push_back(Trace::normalize(FlowId{site, inst}, std::move(packets)));
        }
    }
    return FlowSet(std::move(traces));
}

}  // namespace flowconf
