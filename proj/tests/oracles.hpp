// Reference implementations used only by the tests. They share no code with
// the library beyond the plain data types.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "flowconf/flow_model.hpp"

namespace oracle {

inline std::vector<double> basis_coefficients(int m, std::uint64_t seed) {
    std::mt19937_64 g(seed);
    std::vector<double> r;
    while (static_cast<int>(r.size()) < m) {
        double v = 2.0 * (static_cast<double>(g() >> 11) / 9007199254740992.0) - 1.0;
        if (v > -1.0) r.push_back(v);
    }
    return r;
}

// The hash written out directly: windows by floor(t*N/D), midpoint times,
// window 0 unweighted, later windows weighted by their packet count.
inline std::vector<double> accumulate(const std::vector<double>& ts, int N, const std::vector<double>& r) {
    const int m = static_cast<int>(r.size());
    const double D = ts.back();
    std::vector<long> count(N, 0);
    for (double t : ts) {
        int i = D > 0 ? static_cast<int>(std::floor(t * N / D)) : 0;
        if (i > N - 1) i = N - 1;
        count[i]++;
    }
    std::vector<double> H(m, 0.0);
    for (int i = 0; i < N; i++) {
        double T = (i + 0.5) * D / N;
        double w = i == 0 ? 1.0 : static_cast<double>(count[i]);
        for (int a = 1; a <= m; a++) {
            double ra = r[a - 1];
            H[a - 1] += w * (std::sin(T + a) / 5.0 + std::sin((T + a) * ra) * ra);
        }
    }
    return H;
}

// Lowercase hex, byte k = bits 8k..8k+7 with bit 8k as the least significant.
inline std::string hash_hex(const std::vector<double>& H) {
    const char* digits = "0123456789abcdef";
    std::string out;
    for (std::size_t k = 0; k * 8 < H.size(); k++) {
        unsigned byte = 0;
        for (std::size_t b = 0; b < 8 && 8 * k + b < H.size(); b++)
            if (H[8 * k + b] > 0) byte |= 1u << b;
        out += digits[byte >> 4];
        out += digits[byte & 15];
    }
    return out;
}

// Sorted timestamps starting at 0 with exponential gaps; directions alternate
// in short runs.
inline flowconf::Trace random_trace(std::uint64_t seed, int packets, double mean_gap) {
    std::mt19937_64 g(seed);
    std::exponential_distribution<double> gap(1.0 / mean_gap);
    std::vector<flowconf::PacketEvent> p;
    double t = 0.0;
    for (int i = 0; i < packets; i++) {
        if (i > 0) t += gap(g);
        const bool out = (g() % 5) == 0;
        p.push_back({t, out ? flowconf::Direction::kOutgoing : flowconf::Direction::kIncoming, false});
    }
    return flowconf::Trace({0, 0}, std::move(p));
}

inline int popcount_distance(const std::vector<bool>& a, const std::vector<bool>& b) {
    int d = 0;
    for (std::size_t i = 0; i < a.size(); i++) d += a[i] != b[i];
    return d;
}

// Every library id at minimum distance.
inline std::set<flowconf::FlowId> nearest(const std::vector<bool>& q,
                                          const std::vector<std::pair<flowconf::FlowId, std::vector<bool>>>& lib) {
    int best = 1 << 30;
    for (const auto& [id, h] : lib) best = std::min(best, popcount_distance(q, h));
    std::set<flowconf::FlowId> ids;
    for (const auto& [id, h] : lib)
        if (popcount_distance(q, h) == best) ids.insert(id);
    return ids;
}

// Windows [jk, (j+1)k) counted over each flow's own span; equal counts over
// the shorter span.
inline int scc(const std::vector<double>& u, const std::vector<double>& p, double k) {
    if (u.empty() || p.empty()) return 0;
    auto span = [k](const std::vector<double>& x) {
        return static_cast<long>(std::floor(*std::max_element(x.begin(), x.end()) / k)) + 1;
    };
    const long n = std::min(span(u), span(p));
    int score = 0;
    for (long j = 0; j < n; j++) {
        long cu = 0, cp = 0;
        for (double t : u) cu += static_cast<long>(std::floor(t / k)) == j;
        for (double t : p) cp += static_cast<long>(std::floor(t / k)) == j;
        score += cu == cp;
    }
    return score;
}

// Prediction or nothing: the single flow id at the top of both directions.
inline std::set<flowconf::FlowId> adapted_scc(const flowconf::Trace& u, const flowconf::FlowSet& padded, double k) {
    using flowconf::Direction;
    std::vector<int> sin, sout;
    for (const auto& p : padded) {
        sin.push_back(scc(u.timestamps(Direction::kIncoming), p.timestamps(Direction::kIncoming), k));
        sout.push_back(scc(u.timestamps(Direction::kOutgoing), p.timestamps(Direction::kOutgoing), k));
    }
    const int mi = *std::max_element(sin.begin(), sin.end());
    const int mo = *std::max_element(sout.begin(), sout.end());
    std::set<flowconf::FlowId> both;
    for (std::size_t i = 0; i < padded.size(); i++)
        if (sin[i] == mi && sout[i] == mo) both.insert(padded[i].id());
    if (both.size() != 1) both.clear();
    return both;
}

}  // namespace oracle
