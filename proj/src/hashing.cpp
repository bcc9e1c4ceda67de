#include "flowconf/hashing.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "flowconf/error.hpp"

namespace flowconf {

void HashConfig::validate() const {
    if (n_windows < 1) throw UsageError("n_windows must be >= 1");
    if (hash_bits < 1) throw UsageError("hash_bits must be >= 1");
    if (!(time_scale > 0.0) || !std::isfinite(time_scale)) throw UsageError("time_scale must be positive");
}

// ===== BasisSet =====

BasisSet BasisSet::generate(int m, std::uint64_t seed) {
    if (m < 1) throw UsageError("basis size must be >= 1");
    std::mt19937_64 engine(seed);
    BasisSet b;
    b.seed_ = seed;
    b.r_.reserve(static_cast<std::size_t>(m));
    while (static_cast<int>(b.r_.size()) < m) {
        const double u = static_cast<double>(engine() >> 11) * 0x1.0p-53;
        const double r = 2.0 * u - 1.0;
        if (r == -1.0) continue;
        b.r_.push_back(r);
    }
    return b;
}

BasisSet BasisSet::from_coefficients(std::vector<double> r) {
    if (r.empty()) throw UsageError("basis size must be >= 1");
    for (double x : r)
        if (!(x > -1.0 && x < 1.0)) throw UsageError("basis coefficients must lie in (-1, 1)");
    BasisSet b;
    b.r_ = std::move(r);
    return b;
}

double BasisSet::value(int a, double x) const {
    if (a < 1 || a > m()) throw UsageError("basis index " + std::to_string(a) + " outside 1.." + std::to_string(m()));
    const double r = r_[static_cast<std::size_t>(a - 1)];
    const double xa = x + static_cast<double>(a);
    return std::sin(xa) / 5.0 + std::sin(xa * r) * r;
}

double basis_value(int a, double x, const BasisSet& b) { return b.value(a, x); }

// ===== Windows =====

WindowCounts windowize(const Trace& t, int n_windows, WindowAnchor anchor) {
    if (n_windows < 1) throw UsageError("n_windows must be >= 1");
    if (t.empty()) throw DiscardFlow("flow " + to_string(t.id()) + " is empty");
    if (t.size() < static_cast<std::size_t>(n_windows))
        throw DiscardFlow("flow " + to_string(t.id()) + " has " + std::to_string(t.size()) +
                          " packets, fewer than " + std::to_string(n_windows) + " windows");

    const auto n = static_cast<std::size_t>(n_windows);
    const double duration = t.duration();
    WindowCounts w;
    w.rep_times.resize(n);
    w.cumulative.assign(n, 0);
    w.deltas.assign(n, 0);

    for (const auto& p : t.packets()) {
        std::size_t idx = 0;
        if (duration > 0.0) {
            const double pos = std::floor(p.timestamp * static_cast<double>(n_windows) / duration);
            idx = pos >= static_cast<double>(n - 1) ? n - 1 : static_cast<std::size_t>(pos);
        }
        ++w.deltas[idx];
    }
    std::int64_t running = 0;
    const double offset = anchor == WindowAnchor::kMidpoint ? 0.5 : 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        running += w.deltas[i];
        w.cumulative[i] = running;
        w.rep_times[i] = (static_cast<double>(i) + offset) * duration / static_cast<double>(n_windows);
    }
    return w;
}

// ===== FlowHash =====

FlowHash::FlowHash(FlowId id, int m) : id_(id), m_(m) {
    if (m < 1) throw UsageError("hash length must be >= 1");
    words_.assign((static_cast<std::size_t>(m) + 63) / 64, 0);
}

void FlowHash::set_bit(int i, bool v) {
    if (i < 0 || i >= m_) throw UsageError("bit index out of range");
    const std::uint64_t mask = std::uint64_t{1} << (i & 63);
    auto& w = words_[static_cast<std::size_t>(i) >> 6];
    w = v ? (w | mask) : (w & ~mask);
}

std::string FlowHash::to_hex() const {
    static constexpr char kDigits[] = "0123456789abcdef";
    const std::size_t n_bytes = (static_cast<std::size_t>(m_) + 7) / 8;
    std::string out;
    out.reserve(n_bytes * 2);
    for (std::size_t k = 0; k < n_bytes; ++k) {
        const auto byte = static_cast<unsigned>((words_[k / 8] >> (8 * (k % 8))) & 0xffU);
        out.push_back(kDigits[byte >> 4]);
        out.push_back(kDigits[byte & 0xf]);
    }
    return out;
}

FlowHash FlowHash::from_hex(FlowId id, int m, std::string_view hex) {
    FlowHash h(id, m);
    const std::size_t n_bytes = (static_cast<std::size_t>(m) + 7) / 8;
    if (hex.size() != 2 * n_bytes)
        throw DataError("hash " + to_string(id) + ": expected " + std::to_string(2 * n_bytes) + " hex digits for m=" +
                        std::to_string(m));
    auto nibble = [&](char c) -> unsigned {
        if (c >= '0' && c <= '9') return static_cast<unsigned>(c - '0');
        if (c >= 'a' && c <= 'f') return static_cast<unsigned>(c - 'a' + 10);
        if (c >= 'A' && c <= 'F') return static_cast<unsigned>(c - 'A' + 10);
        throw DataError("hash " + to_string(id) + ": invalid hex digit");
    };
    for (std::size_t k = 0; k < n_bytes; ++k) {
        const std::uint64_t byte = (nibble(hex[2 * k]) << 4) | nibble(hex[2 * k + 1]);
        for (std::size_t b = 0; b < 8; ++b) {
            const std::size_t bit = 8 * k + b;
            if (!((byte >> b) & 1U)) continue;
            if (bit >= static_cast<std::size_t>(m))
                throw DataError("hash " + to_string(id) + ": padding bits beyond m must be zero");
            h.words_[bit >> 6] |= std::uint64_t{1} << (bit & 63);
        }
    }
    return h;
}

// ===== Hash computation =====

FlowHash compute_hash(const Trace& t, const HashConfig& cfg, const BasisSet& basis, bool keep_accumulator) {
    cfg.validate();
    if (basis.m() != cfg.hash_bits)
        throw UsageError("basis has " + std::to_string(basis.m()) + " functions but hash_bits is " +
                         std::to_string(cfg.hash_bits));
    const WindowCounts w = windowize(t, cfg.n_windows, cfg.anchor);

    const int m = cfg.hash_bits;
    std::vector<double> acc(static_cast<std::size_t>(m), 0.0);
    for (std::size_t i = 0; i < w.deltas.size(); ++i) {
        const double x = w.rep_times[i] * cfg.time_scale;
        // The first window contributes its basis values unweighted.
        const bool unweighted = i == 0 && !cfg.weight_first_window;
        const double weight = static_cast<double>(w.deltas[i]);
        for (int a = 1; a <= m; ++a) {
            const double r = basis.value(a, x);
            acc[static_cast<std::size_t>(a - 1)] += unweighted ? r : weight * r;
        }
    }

    FlowHash h(t.id(), m);
    for (int a = 0; a < m; ++a) h.set_bit(a, acc[static_cast<std::size_t>(a)] > 0.0);
    if (keep_accumulator) h.accumulator = std::move(acc);
    return h;
}

int hamming(const FlowHash& a, const FlowHash& b) {
    if (a.m() != b.m())
        throw UsageError("hash length mismatch: " + std::to_string(a.m()) + " vs " + std::to_string(b.m()));
    int d = 0;
    const auto& wa = a.words();
    const auto& wb = b.words();
    for (std::size_t i = 0; i < wa.size(); ++i) d += std::popcount(wa[i] ^ wb[i]);
    return d;
}

HashedFlows hash_flowset(const FlowSet& flows, const HashConfig& cfg, const BasisSet& basis) {
    HashedFlows out;
    out.hashes.reserve(flows.size());
    for (const auto& t : flows) {
        try {
            out.hashes.push_back(compute_hash(t, cfg, basis));
        } catch (const DiscardFlow&) {
            out.discarded.push_back(t.id());
        }
    }
    return out;
}

// ===== Library files =====

std::string format_hash_library(const std::vector<FlowHash>& hashes, std::string_view header_comment) {
    std::ostringstream out;
    if (!header_comment.empty()) out << "# " << header_comment << '\n';
    for (const auto& h : hashes) out << to_string(h.id()) << ',' << h.m() << ',' << h.to_hex() << '\n';
    return out.str();
}

void write_hash_library(const std::filesystem::path& file, const std::vector<FlowHash>& hashes,
                        std::string_view header_comment) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + file.string());
    out << format_hash_library(hashes, header_comment);
}

std::vector<FlowHash> parse_hash_library(std::string_view text) {
    std::vector<FlowHash> out;
    std::size_t line_no = 0;
    while (!text.empty()) {
        auto nl = text.find('\n');
        std::string line(text.substr(0, nl));
        text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;

        const std::string where = "hash library line " + std::to_string(line_no);
        const auto c1 = line.find(',');
        const auto c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
        if (c2 == std::string::npos) throw DataError(where + ": expected <site>-<instance>,<m>,<hex>");
        const std::string name = line.substr(0, c1);
        const auto dash = name.find('-');
        FlowId id;
        int m = 0;
        try {
            std::size_t used = 0;
            if (dash == std::string::npos) throw std::invalid_argument("id");
            id.site = std::stoi(name.substr(0, dash), &used);
            if (used != dash) throw std::invalid_argument("id");
            id.instance = std::stoi(name.substr(dash + 1), &used);
            if (used != name.size() - dash - 1) throw std::invalid_argument("id");
            const std::string ms = line.substr(c1 + 1, c2 - c1 - 1);
            m = std::stoi(ms, &used);
            if (used != ms.size() || m < 1) throw std::invalid_argument("m");
        } catch (const std::logic_error&) {
            throw DataError(where + ": malformed id or length");
        }
        out.push_back(FlowHash::from_hex(id, m, std::string_view(line).substr(c2 + 1)));
    }
    return out;
}

std::vector<FlowHash> read_hash_library(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw DataError("cannot read " + file.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_hash_library(ss.str());
}

}  // namespace flowconf
