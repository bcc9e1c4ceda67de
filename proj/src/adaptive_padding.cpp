#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "flowconf/error.hpp"
#include "flowconf/impairments.hpp"

namespace flowconf {

// ===== Histogram =====

std::vector<double> exponential_edges(double lo, double hi, int bins) {
    if (!(lo > 0.0) || !(hi > lo) || bins < 1) throw UsageError("exponential edges need 0 < lo < hi and bins >= 1");
    std::vector<double> edges(static_cast<std::size_t>(bins) + 1);
    const double ratio = std::log(hi / lo);
    for (int i = 0; i <= bins; ++i) edges[static_cast<std::size_t>(i)] = lo * std::exp(ratio * i / bins);
    edges.front() = lo;
    edges.back() = hi;
    return edges;
}

std::uint64_t Histogram::total() const noexcept {
    std::uint64_t s = 0;
    for (auto c : counts) s += c;
    return s;
}

std::size_t Histogram::bin_of(double gap) const {
    // upper_bound finds the first edge strictly above gap; bins are [lo, hi).
    const auto it = std::upper_bound(edges.begin(), edges.end(), gap);
    if (it == edges.begin()) return 0;
    const auto idx = static_cast<std::size_t>(it - edges.begin()) - 1;
    return std::min(idx, counts.size() - 1);
}

double Histogram::sample(Rng& rng) const {
    const std::uint64_t tot = total();
    std::size_t bin = 0;
    if (tot == 0) {
        bin = rng.below(counts.size());
    } else {
        std::uint64_t pick = rng.below(tot);
        while (pick >= counts[bin]) pick -= counts[bin++];
    }
    const double lo = edges[bin];
    const double hi = edges[bin + 1];
    return lo * std::exp(rng.uniform01() * std::log(hi / lo));
}

void Histogram::validate() const {
    if (counts.empty() || edges.size() != counts.size() + 1) throw DataError("histogram needs bins + 1 edges");
    if (!(edges.front() > 0.0)) throw DataError("histogram edges must be positive");
    for (std::size_t i = 1; i < edges.size(); ++i)
        if (!(edges[i] > edges[i - 1])) throw DataError("histogram edges must be strictly increasing");
}

void ApHistograms::validate() const {
    for (const auto& per_dir : hist)
        for (const auto& h : per_dir) h.validate();
}

ApHistograms build_histograms(const FlowSet& corpus, const HistogramConfig& cfg) {
    if (corpus.empty()) throw DataError("cannot build histograms from an empty corpus");
    ApHistograms out;
    for (auto& per_dir : out.hist)
        for (auto& h : per_dir) {
            h.edges = cfg.edges;
            h.counts.assign(cfg.edges.size() - 1, 0);
        }
    out.validate();

    std::uint64_t gaps = 0;
    for (const auto& t : corpus) {
        for (Direction d : {Direction::kOutgoing, Direction::kIncoming}) {
            const auto ts = t.timestamps(d);
            for (std::size_t i = 1; i < ts.size(); ++i) {
                const double gap = ts[i] - ts[i - 1];
                Histogram& h = out.at(d, gap < cfg.split_threshold ? ApMode::kBurst : ApMode::kGap);
                ++h.counts[h.bin_of(gap)];
                ++gaps;
            }
        }
    }
    if (gaps == 0) throw DataError("corpus has no inter-arrival gaps (every flow has fewer than 2 packets)");
    return out;
}

// ===== Histogram files =====

std::string format_histograms(const ApHistograms& h) {
    std::string out;
    char buf[160];
    for (Direction d : {Direction::kOutgoing, Direction::kIncoming}) {
        for (ApMode m : {ApMode::kBurst, ApMode::kGap}) {
            const Histogram& hist = h.at(d, m);
            for (std::size_t i = 0; i < hist.bins(); ++i) {
                std::snprintf(buf, sizeof buf, "%s,%s,%.17g,%.17g,%llu\n",
                              d == Direction::kOutgoing ? "out" : "in", m == ApMode::kBurst ? "burst" : "gap",
                              hist.edges[i], hist.edges[i + 1], static_cast<unsigned long long>(hist.counts[i]));
                out += buf;
            }
        }
    }
    return out;
}

ApHistograms parse_histograms(std::string_view text) {
    std::map<std::pair<int, int>, std::vector<std::array<double, 3>>> rows;
    std::size_t line_no = 0;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        const std::string where = "histogram line " + std::to_string(line_no);
        std::vector<std::string> f;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) f.push_back(cell);
        if (f.size() != 5) throw DataError(where + ": expected direction,mode,bin_lo,bin_hi,count");
        int dir = f[0] == "out" ? 0 : f[0] == "in" ? 1 : -1;
        int mode = f[1] == "burst" ? 0 : f[1] == "gap" ? 1 : -1;
        if (dir < 0 || mode < 0) throw DataError(where + ": unknown direction or mode");
        try {
            std::size_t used = 0;
            const double lo = std::stod(f[2]);
            const double hi = std::stod(f[3]);
            const unsigned long long c = std::stoull(f[4], &used);
            if (used != f[4].size() || f[4].front() == '-') throw std::invalid_argument("count");
            rows[{dir, mode}].push_back({lo, hi, static_cast<double>(c)});
        } catch (const std::logic_error&) {
            throw DataError(where + ": malformed number");
        }
    }
    ApHistograms out;
    for (int dir = 0; dir < 2; ++dir) {
        for (int mode = 0; mode < 2; ++mode) {
            auto it = rows.find({dir, mode});
            if (it == rows.end()) throw DataError("histogram file lacks a block for every direction and mode");
            Histogram& h = out.hist[static_cast<std::size_t>(dir)][static_cast<std::size_t>(mode)];
            const auto& r = it->second;
            h.edges.push_back(r.front()[0]);
            for (std::size_t i = 0; i < r.size(); ++i) {
                if (i > 0 && r[i][0] != r[i - 1][1]) throw DataError("histogram bins are not contiguous");
                h.edges.push_back(r[i][1]);
                h.counts.push_back(static_cast<std::uint64_t>(r[i][2]));
            }
        }
    }
    out.validate();
    return out;
}

void write_histograms(const std::filesystem::path& file, const ApHistograms& h) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + file.string());
    out << format_histograms(h);
}

ApHistograms read_histograms(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw DataError("cannot read " + file.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_histograms(ss.str());
}

// ===== Padding =====

void ApConfig::validate() const {
    histograms.validate();
    if (!(rate_scale > 0.0)) throw UsageError("rate_scale must be > 0");
    if (!(target_padding_rate > 0.0 && target_padding_rate < 2.0))
        throw UsageError("target padding rate must lie in (0, 2)");
    if (!(burst_inject_probability >= 0.0 && burst_inject_probability <= 1.0))
        throw UsageError("burst_inject_probability must lie in [0, 1]");
    if (max_dummies_per_gap < 0) throw UsageError("max_dummies_per_gap must be >= 0");
}

namespace {

void pad_direction(const std::vector<double>& reals, Direction d, const ApConfig& cfg, Rng& rng,
                   std::vector<PacketEvent>& dummies) {
    const Histogram& burst = cfg.histograms.at(d, ApMode::kBurst);
    const Histogram& gap = cfg.histograms.at(d, ApMode::kGap);
    for (std::size_t j = 0; j + 1 < reals.size(); ++j) {
        const double next = reals[j + 1];
        double cursor = reals[j];
        ApMode mode = ApMode::kBurst;
        int injected = 0;
        while (injected < cfg.max_dummies_per_gap) {
            const Histogram& h = mode == ApMode::kBurst ? burst : gap;
            const double fire = cursor + h.sample(rng) / cfg.rate_scale;
            if (!(fire < next)) break;
            if (mode == ApMode::kBurst) {
                if (rng.bernoulli(cfg.burst_inject_probability)) {
                    dummies.push_back({fire, d, true});
                    ++injected;
                }
                mode = ApMode::kGap;
            } else {
                dummies.push_back({fire, d, true});
                ++injected;
                mode = ApMode::kBurst;
            }
            cursor = fire;
        }
    }
}

}  // namespace

Trace adaptive_pad(const Trace& t, const ApConfig& cfg, Rng& rng) {
    if (!(cfg.rate_scale > 0.0)) throw UsageError("rate_scale must be > 0");
    std::vector<PacketEvent> dummies;
    for (Direction d : {Direction::kOutgoing, Direction::kIncoming}) {
        std::vector<double> reals;
        for (const auto& p : t.packets())
            if (p.direction == d && !p.is_dummy) reals.push_back(p.timestamp);
        pad_direction(reals, d, cfg, rng, dummies);
    }
    std::vector<PacketEvent> all = t.packets();
    all.insert(all.end(), dummies.begin(), dummies.end());
    // Stable: real packets keep their order and precede dummies on ties.
    std::stable_sort(all.begin(), all.end(),
                     [](const PacketEvent& a, const PacketEvent& b) { return a.timestamp < b.timestamp; });
    return Trace(t.id(), std::move(all));
}

namespace {

FlowSet pad_all(const FlowSet& flows, const ApConfig& cfg) {
    std::vector<Trace> out;
    out.reserve(flows.size());
    for (const auto& t : flows) {
        Rng rng(derive_seed(cfg.seed, t.id().site, t.id().instance));
        out.push_back(adaptive_pad(t, cfg, rng));
    }
    return FlowSet(std::move(out));
}

}  // namespace

FlowSet pad_flowset(const FlowSet& flows, const ApConfig& cfg) {
    cfg.validate();
    return pad_all(flows, cfg);
}

double padding_rate(const FlowSet& padded, PaddingRateDefinition def) {
    std::uint64_t dummies = 0;
    std::uint64_t total = 0;
    for (const auto& t : padded) {
        dummies += t.count_dummies();
        total += t.size();
    }
    const std::uint64_t denom = def == PaddingRateDefinition::kDummyPerReal ? total - dummies : total;
    return denom == 0 ? 0.0 : static_cast<double>(dummies) / static_cast<double>(denom);
}

Calibration calibrate_padding_rate(const FlowSet& corpus, const ApConfig& cfg, double tolerance) {
    constexpr double kMinScale = 1e-6;
    constexpr double kMaxScale = 1e6;
    constexpr double kStep = 4.0;
    if (corpus.empty()) throw DataError("cannot calibrate on an empty corpus");
    cfg.histograms.validate();
    const double target = cfg.target_padding_rate;

    ApConfig trial = cfg;
    Calibration best{1.0, 0.0, 0};
    double best_err = INFINITY;
    auto eval = [&](double scale) {
        trial.rate_scale = scale;
        const double r = padding_rate(pad_all(corpus, trial), cfg.rate_definition);
        ++best.evaluations;
        const double err = std::abs(r - target);
        if (err < best_err) {
            best_err = err;
            best.rate_scale = scale;
            best.achieved_rate = r;
        }
        return r;
    };
    auto unreachable = [&](double scale, double rate) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "padding rate %.4f unreachable: achieved %.4f at rate_scale %.3g", target, rate,
                      scale);
        return CalibrationError(buf, rate, scale);
    };

    if (!(target > 0.0)) throw unreachable(kMinScale, eval(kMinScale));

    // Bracket the target by stepping geometrically away from scale 1.
    double lo = 1.0;
    double hi = 1.0;
    double r = eval(1.0);
    if (std::abs(r - target) <= tolerance) return best;
    if (r < target) {
        for (;;) {
            lo = hi;
            hi = std::min(hi * kStep, kMaxScale);
            r = eval(hi);
            if (std::abs(r - target) <= tolerance) return best;
            if (r > target) break;
            if (hi == kMaxScale) throw unreachable(hi, r);
        }
    } else {
        for (;;) {
            hi = lo;
            lo = std::max(lo / kStep, kMinScale);
            r = eval(lo);
            if (std::abs(r - target) <= tolerance) return best;
            if (r < target) break;
            if (lo == kMinScale) throw unreachable(lo, r);
        }
    }

    for (int it = 0; it < 80 && hi / lo > 1.0 + 1e-9; ++it) {
        const double mid = std::sqrt(lo * hi);
        r = eval(mid);
        if (std::abs(r - target) <= tolerance) return best;
        (r < target ? lo : hi) = mid;
    }
    if (best_err <= tolerance) return best;
    throw unreachable(best.rate_scale, best.achieved_rate);
}

}  // namespace flowconf
