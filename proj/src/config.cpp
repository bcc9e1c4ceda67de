#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "flowconf/error.hpp"
#include "flowconf/experiment.hpp"

namespace flowconf {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

template <class T>
T parse_number(std::string_view key, std::string_view v) {
    v = trim(v);
    if (!v.empty() && v.front() == '+') v.remove_prefix(1);
    T out{};
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size() || v.empty())
        throw UsageError("config key '" + std::string(key) + "': cannot parse '" + std::string(v) + "'");
    return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
    v = trim(v);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw UsageError("config key '" + std::string(key) + "': expected a boolean");
}

template <class T>
std::vector<T> parse_list(std::string_view key, std::string_view v) {
    std::vector<T> out;
    v = trim(v);
    while (!v.empty()) {
        const auto comma = v.find(',');
        out.push_back(parse_number<T>(key, v.substr(0, comma)));
        if (comma == std::string_view::npos) break;
        v.remove_prefix(comma + 1);
    }
    return out;
}

std::string fmt(double x) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, p);
}

template <class T>
std::string fmt_list(const std::vector<T>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        if constexpr (std::is_floating_point_v<T>)
            out += fmt(v[i]);
        else
            out += std::to_string(v[i]);
    }
    return out;
}

}  // namespace

void ExperimentConfig::set(std::string_view key, std::string_view value) {
    key = trim(key);
    value = trim(value);
    const std::string v(value);
    if (key == "dataset") dataset_dir = v;
    else if (key == "manifest") manifest = v;
    else if (key == "synthetic.sites") synthetic_sites = parse_number<int>(key, value);
    else if (key == "synthetic.instances") synthetic_instances = parse_number<int>(key, value);
    else if (key == "synthetic.seed") synthetic_seed = parse_number<std::uint64_t>(key, value);
    else if (key == "synthetic.min_bursts") burst.min_bursts = parse_number<int>(key, value);
    else if (key == "synthetic.max_bursts") burst.max_bursts = parse_number<int>(key, value);
    else if (key == "synthetic.min_burst_packets") burst.min_burst_packets = parse_number<int>(key, value);
    else if (key == "synthetic.max_burst_packets") burst.max_burst_packets = parse_number<int>(key, value);
    else if (key == "synthetic.intra_burst_gap") burst.intra_burst_gap_mean = parse_number<double>(key, value);
    else if (key == "synthetic.min_idle_gap") burst.min_idle_gap = parse_number<double>(key, value);
    else if (key == "synthetic.max_idle_gap") burst.max_idle_gap = parse_number<double>(key, value);
    else if (key == "synthetic.outgoing_fraction") burst.outgoing_fraction = parse_number<double>(key, value);
    else if (key == "synthetic.size_jitter") burst.size_jitter = parse_number<double>(key, value);
    else if (key == "synthetic.gap_jitter") burst.gap_jitter = parse_number<double>(key, value);
    else if (key == "synthetic.burst_skip_probability") burst.burst_skip_probability = parse_number<double>(key, value);
    else if (key == "hash.n_windows") hash.n_windows = parse_number<int>(key, value);
    else if (key == "hash.bits") hash.hash_bits = parse_number<int>(key, value);
    else if (key == "hash.basis_seed") hash.basis_seed = parse_number<std::uint64_t>(key, value);
    else if (key == "hash.time_scale") hash.time_scale = parse_number<double>(key, value);
    else if (key == "hash.anchor") {
        if (value == "midpoint") hash.anchor = WindowAnchor::kMidpoint;
        else if (value == "start") hash.anchor = WindowAnchor::kStart;
        else throw UsageError("hash.anchor must be 'midpoint' or 'start'");
    }
    else if (key == "hash.weight_first_window") hash.weight_first_window = parse_bool(key, value);
    else if (key == "impair.drop_grid") drop_grid = parse_list<double>(key, value);
    else if (key == "impair.ipdv") ipdv = v;
    else if (key == "unpadded.library_sites") library_sites = parse_list<int>(key, value);
    else if (key == "unpadded.repetitions") repetitions = parse_number<int>(key, value);
    else if (key == "unpadded.nearest") nearest = parse_bool(key, value);
    else if (key == "ap.histograms") histograms_file = v;
    else if (key == "ap.split_threshold") histogram.split_threshold = parse_number<double>(key, value);
    else if (key == "ap.bin_edges") histogram.edges = parse_list<double>(key, value);
    else if (key == "ap.target_rate") target_padding_rate = parse_number<double>(key, value);
    else if (key == "ap.rate_definition") {
        if (value == "dummy_per_real") rate_definition = PaddingRateDefinition::kDummyPerReal;
        else if (value == "dummy_per_total") rate_definition = PaddingRateDefinition::kDummyPerTotal;
        else throw UsageError("ap.rate_definition must be 'dummy_per_real' or 'dummy_per_total'");
    }
    else if (key == "ap.rate_scale") rate_scale = parse_number<double>(key, value);
    else if (key == "ap.burst_inject_probability") burst_inject_probability = parse_number<double>(key, value);
    else if (key == "ap.max_dummies_per_gap") max_dummies_per_gap = parse_number<int>(key, value);
    else if (key == "scc.windows") scc_windows = parse_list<double>(key, value);
    else if (key == "scc.ipdv_means") scc_ipdv_means = parse_list<double>(key, value);
    else if (key == "scc.self_inclusion") scc_self_inclusion = parse_bool(key, value);
    else if (key == "scc.queries") scc_queries = parse_number<std::size_t>(key, value);
    else if (key == "output") output_dir = v;
    else if (key == "seed") master_seed = parse_number<std::uint64_t>(key, value);
    else if (key == "record_timings") record_timings = parse_bool(key, value);
    else throw UsageError("unknown config key '" + std::string(key) + "'");
}

void ExperimentConfig::validate() const {
    hash.validate();
    if (dataset_dir.empty() && manifest.empty() && (synthetic_sites < 1 || synthetic_instances < 1))
        throw UsageError("synthetic corpus needs sites and instances >= 1");
    if (drop_grid.empty()) throw UsageError("impair.drop_grid must not be empty");
    for (double p : drop_grid)
        if (!(p >= 0.0 && p <= 1.0)) throw UsageError("drop probabilities must lie in [0, 1]");
    for (int s : library_sites)
        if (s < 1) throw UsageError("library sizes must be >= 1 site");
    if (repetitions < 1) throw UsageError("unpadded.repetitions must be >= 1");
    if (scc_windows.empty() || scc_ipdv_means.empty()) throw UsageError("SCC grids must not be empty");
    for (double k : scc_windows)
        if (!(k > 0.0)) throw UsageError("SCC window lengths must be > 0");
    for (double mu : scc_ipdv_means)
        if (!(mu >= 0.0)) throw UsageError("SCC IPDV means must be >= 0");
    if (!(target_padding_rate > 0.0 && target_padding_rate < 2.0))
        throw UsageError("ap.target_rate must lie in (0, 2)");
    if (!(histogram.split_threshold > 0.0)) throw UsageError("ap.split_threshold must be > 0");
    if (histogram.edges.size() < 2) throw UsageError("ap.bin_edges needs at least two edges");
}

ExperimentConfig parse_config(std::string_view text) {
    ExperimentConfig cfg;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
        ++line_no;
        line = trim(line);
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw UsageError("config line " + std::to_string(line_no) + ": expected 'key = value'");
        cfg.set(line.substr(0, eq), line.substr(eq + 1));
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw DataError("cannot read config " + file.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

namespace {

std::string format_results_keys(const ExperimentConfig& c) {
    std::ostringstream o;
    o << "dataset = " << c.dataset_dir << '\n'
      << "manifest = " << c.manifest << '\n'
      << "synthetic.sites = " << c.synthetic_sites << '\n'
      << "synthetic.instances = " << c.synthetic_instances << '\n'
      << "synthetic.seed = " << c.synthetic_seed << '\n'
      << "synthetic.min_bursts = " << c.burst.min_bursts << '\n'
      << "synthetic.max_bursts = " << c.burst.max_bursts << '\n'
      << "synthetic.min_burst_packets = " << c.burst.min_burst_packets << '\n'
      << "synthetic.max_burst_packets = " << c.burst.max_burst_packets << '\n'
      << "synthetic.intra_burst_gap = " << fmt(c.burst.intra_burst_gap_mean) << '\n'
      << "synthetic.min_idle_gap = " << fmt(c.burst.min_idle_gap) << '\n'
      << "synthetic.max_idle_gap = " << fmt(c.burst.max_idle_gap) << '\n'
      << "synthetic.outgoing_fraction = " << fmt(c.burst.outgoing_fraction) << '\n'
      << "synthetic.size_jitter = " << fmt(c.burst.size_jitter) << '\n'
      << "synthetic.gap_jitter = " << fmt(c.burst.gap_jitter) << '\n'
      << "synthetic.burst_skip_probability = " << fmt(c.burst.burst_skip_probability) << '\n'
      << "hash.n_windows = " << c.hash.n_windows << '\n'
      << "hash.bits = " << c.hash.hash_bits << '\n'
      << "hash.basis_seed = " << c.hash.basis_seed << '\n'
      << "hash.time_scale = " << fmt(c.hash.time_scale) << '\n'
      << "hash.anchor = " << (c.hash.anchor == WindowAnchor::kMidpoint ? "midpoint" : "start") << '\n'
      << "hash.weight_first_window = " << (c.hash.weight_first_window ? "true" : "false") << '\n'
      << "impair.drop_grid = " << fmt_list(c.drop_grid) << '\n'
      << "impair.ipdv = " << c.ipdv << '\n'
      << "unpadded.library_sites = " << fmt_list(c.library_sites) << '\n'
      << "unpadded.repetitions = " << c.repetitions << '\n'
      << "unpadded.nearest = " << (c.nearest ? "true" : "false") << '\n'
      << "ap.histograms = " << c.histograms_file << '\n'
      << "ap.split_threshold = " << fmt(c.histogram.split_threshold) << '\n'
      << "ap.bin_edges = " << fmt_list(c.histogram.edges) << '\n'
      << "ap.target_rate = " << fmt(c.target_padding_rate) << '\n'
      << "ap.rate_definition = "
      << (c.rate_definition == PaddingRateDefinition::kDummyPerReal ? "dummy_per_real" : "dummy_per_total") << '\n'
      << "ap.rate_scale = " << fmt(c.rate_scale) << '\n'
      << "ap.burst_inject_probability = " << fmt(c.burst_inject_probability) << '\n'
      << "ap.max_dummies_per_gap = " << c.max_dummies_per_gap << '\n'
      << "scc.windows = " << fmt_list(c.scc_windows) << '\n'
      << "scc.ipdv_means = " << fmt_list(c.scc_ipdv_means) << '\n'
      << "scc.self_inclusion = " << (c.scc_self_inclusion ? "true" : "false") << '\n'
      << "scc.queries = " << c.scc_queries << '\n'
      << "seed = " << c.master_seed << '\n';
    return o.str();
}

}  // namespace

std::string format_config(const ExperimentConfig& cfg) {
    return format_results_keys(cfg) + "output = " + cfg.output_dir + "\n" +
           "record_timings = " + (cfg.record_timings ? "true" : "false") + "\n";
}

std::string config_hash(const ExperimentConfig& cfg) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(format_results_keys(cfg))));
    return buf;
}

}  // namespace flowconf
