#include "flowconf/flow_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "flowconf/error.hpp"

namespace flowconf {

namespace fs = std::filesystem;

std::string to_string(const FlowId& id) {
    return std::to_string(id.site) + "-" + std::to_string(id.instance);
}

// ===== Trace =====

Trace::Trace(FlowId id, std::vector<PacketEvent> packets) : id_(id), packets_(std::move(packets)) {
    if (packets_.empty()) return;
    if (packets_.front().timestamp != 0.0)
        throw DataError("trace " + to_string(id_) + ": first packet must be at t=0");
    for (std::size_t i = 1; i < packets_.size(); ++i) {
        if (!(packets_[i].timestamp >= packets_[i - 1].timestamp))
            throw DataError("trace " + to_string(id_) + ": packets not sorted by timestamp");
    }
}

Trace Trace::normalize(FlowId id, std::vector<PacketEvent> packets) {
    for (const auto& p : packets) {
        if (!std::isfinite(p.timestamp))
            throw DataError("trace " + to_string(id) + ": non-finite timestamp");
    }
    std::stable_sort(packets.begin(), packets.end(),
                     [](const PacketEvent& a, const PacketEvent& b) { return a.timestamp < b.timestamp; });
    if (!packets.empty()) {
        const double t0 = packets.front().timestamp;
        for (auto& p : packets) p.timestamp -= t0;
    }
    return Trace(id, std::move(packets));
}

double Trace::duration() const noexcept {
    return packets_.empty() ? 0.0 : packets_.back().timestamp;
}

std::vector<double> Trace::timestamps(Direction d) const {
    std::vector<double> out;
    for (const auto& p : packets_)
        if (p.direction == d) out.push_back(p.timestamp);
    return out;
}

std::vector<double> Trace::timestamps() const {
    std::vector<double> out;
    out.reserve(packets_.size());
    for (const auto& p : packets_) out.push_back(p.timestamp);
    return out;
}

std::size_t Trace::count_dummies() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(packets_.begin(), packets_.end(), [](const PacketEvent& p) { return p.is_dummy; }));
}

Trace Trace::without_dummies() const {
    Trace out;
    out.id_ = id_;
    std::copy_if(packets_.begin(), packets_.end(), std::back_inserter(out.packets_),
                 [](const PacketEvent& p) { return !p.is_dummy; });
    return out;
}

// ===== FlowSet =====

FlowSet::FlowSet(std::vector<Trace> traces) : traces_(std::move(traces)) {
    std::set<FlowId> seen;
    for (const auto& t : traces_) {
        if (!seen.insert(t.id()).second) throw DataError("duplicate flow id " + to_string(t.id()));
    }
}

std::size_t FlowSet::site_count() const {
    std::set<int> sites;
    for (const auto& t : traces_) sites.insert(t.id().site);
    return sites.size();
}

std::size_t FlowSet::find(const FlowId& id) const {
    for (std::size_t i = 0; i < traces_.size(); ++i)
        if (traces_[i].id() == id) return i;
    return traces_.size();
}

// ===== IpdvDistribution =====

IpdvDistribution::IpdvDistribution(EmpiricalIpdv e) : kind_(std::move(e)) {
    const auto& s = std::get<EmpiricalIpdv>(kind_).samples;
    if (s.empty()) throw DataError("empirical IPDV distribution needs at least one sample");
    for (double x : s)
        if (!std::isfinite(x)) throw DataError("non-finite IPDV sample");
    summary_.min = *std::min_element(s.begin(), s.end());
    summary_.max = *std::max_element(s.begin(), s.end());
    summary_.mean = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
}

IpdvDistribution::IpdvDistribution(NormalIpdv n) : kind_(n) {
    if (!(n.stddev >= 0.0) || !(n.min_clip <= n.mean) || !(n.mean <= n.max_clip))
        throw UsageError("normal IPDV requires stddev >= 0 and min_clip <= mean <= max_clip");
    summary_ = {n.min_clip, n.mean, n.max_clip};
}

namespace {

double parse_double(std::string_view s, const std::string& context) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '+')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
        throw DataError(context + ": cannot parse number '" + std::string(s) + "'");
    return v;
}

}  // namespace

IpdvDistribution IpdvDistribution::parse(std::string_view spec) {
    if (spec == "none" || spec == "zero") return zero();
    if (spec.starts_with("normal:")) {
        spec.remove_prefix(7);
        std::vector<double> v;
        while (!spec.empty()) {
            auto comma = spec.find(',');
            try {
                v.push_back(parse_double(spec.substr(0, comma), "ipdv spec"));
            } catch (const DataError& e) {
                throw UsageError(e.what());
            }
            if (comma == std::string_view::npos) break;
            spec.remove_prefix(comma + 1);
        }
        if (v.size() != 2 && v.size() != 4)
            throw UsageError("ipdv spec must be normal:mean,sd or normal:mean,sd,min,max");
        NormalIpdv n;
        n.mean = v[0];
        n.stddev = v[1];
        if (v.size() == 4) {
            n.min_clip = v[2];
            n.max_clip = v[3];
        }
        return IpdvDistribution(n);
    }
    if (spec.starts_with("empirical:")) spec.remove_prefix(10);
    return IpdvDistribution(EmpiricalIpdv{load_ipdv_samples(fs::path(std::string(spec)))});
}

double IpdvDistribution::sample(Rng& rng) const {
    if (const auto* e = std::get_if<EmpiricalIpdv>(&kind_)) {
        return e->samples[rng.below(e->samples.size())];
    }
    const auto& n = std::get<NormalIpdv>(kind_);
    return std::clamp(n.mean + n.stddev * rng.normal(), n.min_clip, n.max_clip);
}

std::string IpdvDistribution::describe() const {
    char buf[160];
    if (const auto* n = std::get_if<NormalIpdv>(&kind_)) {
        std::snprintf(buf, sizeof buf, "normal:%.17g,%.17g,%.17g,%.17g", n->mean, n->stddev, n->min_clip,
                      n->max_clip);
    } else {
        std::snprintf(buf, sizeof buf, "empirical(n=%zu,min=%.17g,mean=%.17g,max=%.17g)",
                      std::get<EmpiricalIpdv>(kind_).samples.size(), summary_.min, summary_.mean, summary_.max);
    }
    return buf;
}

// ===== Ingestion =====

Trace parse_trace_file(std::string_view content, FlowId id) {
    std::vector<PacketEvent> packets;
    std::size_t line_no = 0;
    while (!content.empty()) {
        auto nl = content.find('\n');
        std::string_view line = content.substr(0, nl);
        content.remove_prefix(nl == std::string_view::npos ? content.size() : nl + 1);
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

        const std::string where = "trace " + to_string(id) + " line " + std::to_string(line_no);
        auto sep = line.find_first_of("\t ");
        if (sep == std::string_view::npos) throw DataError(where + ": malformed line (expected 2 fields)");
        std::string_view ts_field = line.substr(0, sep);
        std::string_view dir_field = line.substr(sep + 1);
        while (!dir_field.empty() && (dir_field.front() == '\t' || dir_field.front() == ' '))
            dir_field.remove_prefix(1);
        while (!dir_field.empty() && (dir_field.back() == '\t' || dir_field.back() == ' '))
            dir_field.remove_suffix(1);
        if (dir_field.find_first_of("\t ") != std::string_view::npos)
            throw DataError(where + ": malformed line (expected 2 fields)");

        double ts = 0.0;
        auto [tp, tec] = std::from_chars(ts_field.data(), ts_field.data() + ts_field.size(), ts);
        if (tec != std::errc() || tp != ts_field.data() + ts_field.size() || !std::isfinite(ts))
            throw DataError(where + ": malformed timestamp '" + std::string(ts_field) + "'");

        std::string_view digits = dir_field;
        if (!digits.empty() && digits.front() == '+') digits.remove_prefix(1);
        long dir = 0;
        auto [dp, dec] = std::from_chars(digits.data(), digits.data() + digits.size(), dir);
        if (dec != std::errc() || dp != digits.data() + digits.size() || digits.empty())
            throw DataError(where + ": malformed direction '" + std::string(dir_field) + "'");
        if (dir != 1 && dir != -1) throw DataError(where + ": direction not in {+1,-1}");

        packets.push_back({ts, dir == 1 ? Direction::kOutgoing : Direction::kIncoming, false});
    }
    if (packets.empty()) throw DataError("trace " + to_string(id) + ": empty file");
    return Trace::normalize(id, std::move(packets));
}

std::string serialize_trace(const Trace& t) {
    std::string out;
    out.reserve(t.size() * 14);
    char buf[64];
    for (const auto& p : t.packets()) {
        int n = std::snprintf(buf, sizeof buf, "%f\t%+d\n", p.timestamp, static_cast<int>(p.direction));
        out.append(buf, static_cast<std::size_t>(n));
    }
    return out;
}

namespace {

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw DataError("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw DataError("cannot read " + p.string());
    return ss.str();
}

bool parse_index(std::string_view s, int& out) {
    if (s.empty() || s.size() > 9) return false;
    for (char c : s)
        if (c < '0' || c > '9') return false;
    std::from_chars(s.data(), s.data() + s.size(), out);
    return true;
}

bool parse_flow_name(std::string_view name, FlowId& id) {
    auto dash = name.find('-');
    if (dash == std::string_view::npos) return false;
    return parse_index(name.substr(0, dash), id.site) && parse_index(name.substr(dash + 1), id.instance);
}

DatasetLoad finish_load(std::vector<Trace> traces, std::size_t skipped, std::vector<std::string> warnings) {
    if (traces.empty()) throw DataError("no traces found");
    std::sort(traces.begin(), traces.end(), [](const Trace& a, const Trace& b) { return a.id() < b.id(); });
    for (std::size_t i = 1; i < traces.size(); ++i) {
        if (traces[i].id() == traces[i - 1].id())
            throw DataError("duplicate flow id " + to_string(traces[i].id()));
    }
    return DatasetLoad{FlowSet(std::move(traces)), skipped, std::move(warnings)};
}

}  // namespace

DatasetLoad load_dataset(const fs::path& root) {
    std::error_code ec;
    if (!fs::is_directory(root, ec)) throw DataError("not a directory: " + root.string());

    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());

    std::vector<Trace> traces;
    std::vector<std::string> warnings;
    std::size_t skipped = 0;
    for (const auto& f : files) {
        FlowId id;
        if (!parse_flow_name(f.filename().string(), id)) {
            ++skipped;
            warnings.push_back("skipping non-conforming file name: " + f.filename().string());
            continue;
        }
        traces.push_back(parse_trace_file(read_file(f), id));
    }
    return finish_load(std::move(traces), skipped, std::move(warnings));
}

DatasetLoad load_dataset_manifest(const fs::path& manifest) {
    const std::string text = read_file(manifest);
    std::istringstream in(text);
    std::string line;
    std::vector<Trace> traces;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line.front() == '#') continue;
        std::istringstream ls(line);
        FlowId id;
        std::string rel;
        if (!(ls >> id.site >> id.instance >> rel) || id.site < 0 || id.instance < 0)
            throw DataError(manifest.string() + " line " + std::to_string(line_no) + ": malformed manifest entry");
        fs::path p = rel;
        if (p.is_relative()) p = manifest.parent_path() / p;
        traces.push_back(parse_trace_file(read_file(p), id));
    }
    return finish_load(std::move(traces), 0, {});
}

void save_dataset(const FlowSet& flows, const fs::path& root) {
    fs::create_directories(root);
    for (const auto& t : flows) {
        const fs::path p = root / to_string(t.id());
        std::ofstream out(p, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write " + p.string());
        out << serialize_trace(t);
    }
}

std::vector<double> load_ipdv_samples(const fs::path& file) {
    const std::string text = read_file(file);
    std::istringstream in(text);
    std::string line;
    std::vector<double> out;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos || line.front() == '#') continue;
        out.push_back(parse_double(line, file.string() + " line " + std::to_string(line_no)));
    }
    if (out.empty()) throw DataError(file.string() + ": no IPDV samples");
    return out;
}

void save_ipdv_samples(const IpdvDistribution& dist, const fs::path& file) {
    const auto* e = std::get_if<EmpiricalIpdv>(&dist.kind());
    if (!e) throw UsageError("only empirical IPDV distributions can be written as sample files");
    std::ofstream out(file, std::ios::trunc);
    if (!out) throw DataError("cannot write " + file.string());
    char buf[40];
    for (double x : e->samples) {
        std::snprintf(buf, sizeof buf, "%.17g\n", x);
        out << buf;
    }
}

// ===== IPDV from paired captures =====

IpdvDistribution build_ipdv_distribution(const FlowSet& client, const FlowSet& server) {
    std::vector<double> samples;
    for (const auto& c : client) {
        const std::size_t j = server.find(c.id());
        if (j == server.size()) throw DataError("unpaired flow " + to_string(c.id()) + " (missing server side)");
        const Trace& s = server[j];
        if (s.size() != c.size())
            throw DataError("packet-count mismatch for flow " + to_string(c.id()) + ": " +
                            std::to_string(c.size()) + " vs " + std::to_string(s.size()));
        const auto& cp = c.packets();
        const auto& sp = s.packets();
        for (std::size_t i = 1; i < cp.size(); ++i) {
            const double client_delta = cp[i].timestamp - cp[i - 1].timestamp;
            const double server_delta = sp[i].timestamp - sp[i - 1].timestamp;
            samples.push_back(server_delta - client_delta);
        }
    }
    for (const auto& s : server) {
        if (client.find(s.id()) == client.size())
            throw DataError("unpaired flow " + to_string(s.id()) + " (missing client side)");
    }
    if (samples.empty()) throw DataError("paired captures yield no inter-arrival deltas");
    return IpdvDistribution(EmpiricalIpdv{std::move(samples)});
}

}  // namespace flowconf
