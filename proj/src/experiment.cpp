#include "flowconf/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <charconv>
#include <fstream>
#include <numeric>
#include <optional>
#include <set>

#include "json.hpp"

#include "flowconf/error.hpp"

namespace flowconf {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double x) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, p);
}

double best_tpr_at(const std::vector<RocPoint>& roc, double max_fpr) {
    double best = 0.0;
    for (const auto& p : roc)
        if (p.fpr <= max_fpr) best = std::max(best, p.tpr);
    return best;
}

}  // namespace

bool ExperimentReport::has_failures() const {
    return std::any_of(unpadded.begin(), unpadded.end(), [](const auto& c) { return !c.error.empty(); }) ||
           std::any_of(padded.begin(), padded.end(), [](const auto& c) { return !c.error.empty(); });
}

IpdvDistribution scale_ipdv(const IpdvDistribution& base, double factor) {
    if (!(factor >= 0.0) || !std::isfinite(factor)) throw UsageError("IPDV scale factor must be finite and >= 0");
    if (const auto* n = std::get_if<NormalIpdv>(&base.kind())) {
        return IpdvDistribution(NormalIpdv{n->mean * factor, n->stddev * factor, n->min_clip * factor,
                                           n->max_clip * factor});
    }
    auto samples = std::get<EmpiricalIpdv>(base.kind()).samples;
    for (auto& s : samples) s *= factor;
    return IpdvDistribution(EmpiricalIpdv{std::move(samples)});
}

DatasetLoad load_corpus(const ExperimentConfig& cfg) {
    if (!cfg.manifest.empty()) return load_dataset_manifest(cfg.manifest);
    if (!cfg.dataset_dir.empty()) return load_dataset(cfg.dataset_dir);
    return DatasetLoad{generate_synthetic_corpus(cfg.synthetic_sites, cfg.synthetic_instances, cfg.burst,
                                                 cfg.synthetic_seed),
                       0,
                       {}};
}

namespace {

ExperimentReport new_report(const ExperimentConfig& cfg, const FlowSet& corpus, const char* kind) {
    ExperimentReport r;
    r.kind = kind;
    r.config_text = format_config(cfg);
    r.config_hash = config_hash(cfg);
    r.flows = corpus.size();
    r.sites = corpus.site_count();
    return r;
}

void run_unpadded_cell(UnpaddedCell& cell, const ExperimentConfig& cfg, const FlowSet& corpus,
                       const std::vector<std::optional<FlowHash>>& originals, const IpdvDistribution& ipdv,
                       const BasisSet& basis) {
    // Cells along the drop axis share one stream per repetition (common random
    // numbers): the same packets get the same delays and a packet dropped at a
    // lower rate is also dropped at every higher one.
    const std::uint64_t seed = derive_seed(cfg.master_seed, "unpadded/rep=" + std::to_string(cell.repetition));
    const ImpairmentConfig icfg{cell.drop, ipdv, seed};

    std::vector<std::optional<FlowHash>> impaired(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        try {
            impaired[i] = compute_hash(impair(corpus[i], icfg), cfg.hash, basis);
        } catch (const DiscardFlow&) {
            ++cell.discarded_impaired;
        }
    }
    std::vector<std::size_t> usable;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        if (!originals[i]) ++cell.discarded_original;
        if (originals[i] && impaired[i]) usable.push_back(i);
    }
    if (usable.size() < 2) throw DataError("fewer than two flows survive the window discard rule");

    // One uniformly drawn impostor (a different flow's modified hash) per query.
    Rng pick(derive_seed(seed, "impostor"));
    std::vector<int> true_d, impostor_d;
    true_d.reserve(usable.size());
    impostor_d.reserve(usable.size());
    for (std::size_t q = 0; q < usable.size(); ++q) {
        const std::size_t i = usable[q];
        std::size_t other = pick.below(usable.size() - 1);
        if (other >= q) ++other;
        true_d.push_back(hamming(*originals[i], *impaired[i]));
        impostor_d.push_back(hamming(*originals[i], *impaired[usable[other]]));
    }
    cell.roc = roc_from_distances(true_d, impostor_d, cfg.hash.hash_bits);
    cell.auc = roc_auc(cell.roc);
    cell.mean_true_distance = std::accumulate(true_d.begin(), true_d.end(), 0.0) / static_cast<double>(true_d.size());
    cell.mean_impostor_distance =
        std::accumulate(impostor_d.begin(), impostor_d.end(), 0.0) / static_cast<double>(impostor_d.size());

    if (!cfg.nearest) return;

    std::vector<int> sites;
    for (std::size_t i : usable) sites.push_back(corpus[i].id().site);
    std::sort(sites.begin(), sites.end());
    sites.erase(std::unique(sites.begin(), sites.end()), sites.end());

    std::set<int> sizes;
    for (int s : cfg.library_sites)
        if (static_cast<std::size_t>(s) < sites.size()) sizes.insert(s);
    sizes.insert(static_cast<int>(sites.size()));

    for (int s : sizes) {
        const int last_site = sites[static_cast<std::size_t>(s) - 1];
        std::vector<FlowHash> library;
        std::vector<std::size_t> queries;
        for (std::size_t i : usable) {
            if (corpus[i].id().site > last_site) continue;
            library.push_back(*impaired[i]);
            queries.push_back(i);
        }
        LibraryResult lr;
        lr.sites = s;
        lr.flows = library.size();
        const bool keep = s == static_cast<int>(sites.size());
        for (std::size_t i : queries) {
            auto o = nearest_match(*originals[i], library);
            lr.summary.add(o);
            if (keep) cell.outcomes.push_back(std::move(o));
        }
        cell.libraries.push_back(lr);
    }
}

}  // namespace

ExperimentReport run_unpadded_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto t0 = Clock::now();
    DatasetLoad load = load_corpus(cfg);
    const double load_seconds = seconds_since(t0);
    auto report = run_unpadded_experiment(cfg, load.flows);
    report.skipped_files = load.skipped;
    report.setup_seconds += load_seconds;
    return report;
}

ExperimentReport run_unpadded_experiment(const ExperimentConfig& cfg, const FlowSet& corpus) {
    cfg.validate();
    if (corpus.empty()) throw DataError("no traces found");
    const auto t0 = Clock::now();
    ExperimentReport report = new_report(cfg, corpus, "unpadded");
    const BasisSet basis = BasisSet::generate(cfg.hash.hash_bits, cfg.hash.basis_seed);
    const IpdvDistribution ipdv = IpdvDistribution::parse(cfg.ipdv);

    std::vector<std::optional<FlowHash>> originals(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        try {
            originals[i] = compute_hash(corpus[i], cfg.hash, basis);
        } catch (const DiscardFlow&) {
        }
    }
    report.setup_seconds = seconds_since(t0);

    for (double drop : cfg.drop_grid) {
        for (int rep = 0; rep < cfg.repetitions; ++rep) {
            UnpaddedCell cell;
            cell.drop = drop;
            cell.repetition = rep;
            cell.name = "drop" + fmt(drop) + (cfg.repetitions > 1 ? "_rep" + std::to_string(rep) : "");
            const auto c0 = Clock::now();
            try {
                run_unpadded_cell(cell, cfg, corpus, originals, ipdv, basis);
            } catch (const std::exception& e) {
                cell.error = e.what();
            }
            cell.seconds = seconds_since(c0);
            report.unpadded.push_back(std::move(cell));
        }
    }
    return report;
}

ExperimentReport run_padded_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto t0 = Clock::now();
    DatasetLoad load = load_corpus(cfg);
    const double load_seconds = seconds_since(t0);
    auto report = run_padded_experiment(cfg, load.flows);
    report.skipped_files = load.skipped;
    report.setup_seconds += load_seconds;
    return report;
}

ExperimentReport run_padded_experiment(const ExperimentConfig& cfg, const FlowSet& corpus) {
    cfg.validate();
    if (corpus.empty()) throw DataError("no traces found");
    const auto t0 = Clock::now();
    ExperimentReport report = new_report(cfg, corpus, "padded");

    ApConfig ap;
    ap.histograms = cfg.histograms_file.empty() ? build_histograms(corpus, cfg.histogram)
                                                : read_histograms(cfg.histograms_file);
    ap.target_padding_rate = cfg.target_padding_rate;
    ap.rate_definition = cfg.rate_definition;
    ap.burst_inject_probability = cfg.burst_inject_probability;
    ap.max_dummies_per_gap = cfg.max_dummies_per_gap;
    ap.seed = derive_seed(cfg.master_seed, "padding");
    ap.rate_scale = cfg.rate_scale > 0.0 ? cfg.rate_scale : calibrate_padding_rate(corpus, ap).rate_scale;

    const FlowSet padded = pad_flowset(corpus, ap);
    report.rate_scale = ap.rate_scale;
    report.padding_rate = padding_rate(padded, ap.rate_definition);

    std::vector<std::size_t> queries(corpus.size());
    std::iota(queries.begin(), queries.end(), std::size_t{0});
    if (cfg.scc_queries > 0 && cfg.scc_queries < corpus.size()) {
        Rng pick(derive_seed(cfg.master_seed, "scc-queries"));
        for (std::size_t i = queries.size() - 1; i > 0; --i) std::swap(queries[i], queries[pick.below(i + 1)]);
        queries.resize(cfg.scc_queries);
        std::sort(queries.begin(), queries.end());
    }

    const IpdvDistribution base = IpdvDistribution::parse(cfg.ipdv);
    const double base_mean = base.summary().mean;
    std::vector<std::vector<Trace>> jittered(cfg.scc_ipdv_means.size());
    std::vector<std::string> jitter_errors(cfg.scc_ipdv_means.size());
    for (std::size_t m = 0; m < cfg.scc_ipdv_means.size(); ++m) {
        const double mu = cfg.scc_ipdv_means[m];
        try {
            double factor = 0.0;
            if (mu != 0.0) {
                if (base_mean == 0.0) throw UsageError("base IPDV has zero mean; cannot rescale to " + fmt(mu));
                factor = mu / base_mean;
            }
            const ImpairmentConfig icfg{0.0, scale_ipdv(base, factor),
                                        derive_seed(cfg.master_seed, "padded/ipdv=" + fmt(mu))};
            for (std::size_t q : queries) jittered[m].push_back(impair(corpus[q], icfg));
        } catch (const std::exception& e) {
            jitter_errors[m] = e.what();
        }
    }
    report.setup_seconds = seconds_since(t0);

    for (double k : cfg.scc_windows) {
        std::optional<SccIndex> index;
        std::string index_error;
        try {
            index.emplace(padded, SccConfig{k});
            if (cfg.scc_self_inclusion) index->append(corpus);
        } catch (const std::exception& e) {
            index_error = e.what();
        }
        for (std::size_t m = 0; m < cfg.scc_ipdv_means.size(); ++m) {
            PaddedCell cell;
            cell.window_length = k;
            cell.ipdv_mean = cfg.scc_ipdv_means[m];
            cell.name = "k" + fmt(k) + "_ipdv" + fmt(cell.ipdv_mean);
            const auto c0 = Clock::now();
            if (!index_error.empty()) {
                cell.error = index_error;
            } else if (!jitter_errors[m].empty()) {
                cell.error = jitter_errors[m];
            } else {
                try {
                    for (const auto& u : jittered[m]) {
                        auto o = adapted_scc(u, *index);
                        cell.summary.add(o);
                        cell.outcomes.push_back(std::move(o));
                    }
                } catch (const std::exception& e) {
                    cell.error = e.what();
                }
            }
            cell.seconds = seconds_since(c0);
            report.padded.push_back(std::move(cell));
        }
    }
    return report;
}

// ===== Output =====

std::string summary_json(const ExperimentReport& r, bool with_timings) {
    using json = nlohmann::ordered_json;
    json j;
    j["experiment"] = r.kind;
    j["config_hash"] = r.config_hash;
    j["flows"] = r.flows;
    j["sites"] = r.sites;
    j["skipped_files"] = r.skipped_files;
    j["failed"] = r.has_failures();

    json timings;
    timings["setup_seconds"] = r.setup_seconds;
    if (r.kind == "unpadded") {
        json cells = json::array();
        for (const auto& c : r.unpadded) {
            json cj;
            cj["cell"] = c.name;
            cj["drop"] = c.drop;
            cj["repetition"] = c.repetition;
            cj["status"] = c.error.empty() ? "ok" : "failed";
            if (!c.error.empty()) cj["error"] = c.error;
            cj["discarded_original"] = c.discarded_original;
            cj["discarded_impaired"] = c.discarded_impaired;
            if (c.error.empty()) {
                cj["auc"] = c.auc;
                cj["mean_true_distance"] = c.mean_true_distance;
                cj["mean_impostor_distance"] = c.mean_impostor_distance;
                cj["best_tpr_fpr_le_0.02"] = best_tpr_at(c.roc, 0.02);
                cj["best_tpr_fpr_le_0.03"] = best_tpr_at(c.roc, 0.03);
                json libs = json::array();
                for (const auto& l : c.libraries) {
                    json lj;
                    lj["sites"] = l.sites;
                    lj["flows"] = l.flows;
                    lj["perfect_rate"] = l.summary.perfect_rate();
                    lj["website_rate"] = l.summary.website_rate();
                    lj["miss_rate"] = l.summary.miss_rate();
                    lj["no_prediction_rate"] = l.summary.no_prediction_rate();
                    libs.push_back(lj);
                }
                cj["libraries"] = libs;
            }
            cells.push_back(cj);
            timings[c.name] = c.seconds;
        }
        j["cells"] = cells;
    } else {
        j["rate_scale"] = r.rate_scale;
        j["padding_rate"] = r.padding_rate;
        json cells = json::array();
        for (const auto& c : r.padded) {
            json cj;
            cj["cell"] = c.name;
            cj["window_length"] = c.window_length;
            cj["ipdv_mean"] = c.ipdv_mean;
            cj["status"] = c.error.empty() ? "ok" : "failed";
            if (!c.error.empty()) cj["error"] = c.error;
            cj["queries"] = c.summary.queries;
            cj["match_rate"] = c.summary.perfect_rate();
            cj["no_prediction_rate"] = c.summary.no_prediction_rate();
            cj["false_match_rate"] = c.summary.false_match_rate();
            cj["wrong_prediction_rate"] =
                c.summary.queries == 0 ? 0.0
                                       : static_cast<double>(c.summary.website + c.summary.miss) /
                                             static_cast<double>(c.summary.queries);
            cells.push_back(cj);
            timings[c.name] = c.seconds;
        }
        j["cells"] = cells;
    }
    if (with_timings) j["timings"] = timings;
    return j.dump(2) + "\n";
}

namespace {

void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + p.string());
    out << text;
}

}  // namespace

void write_report(const ExperimentReport& r, const std::filesystem::path& dir, bool with_timings) {
    std::filesystem::create_directories(dir);
    const std::string tag = "config_hash=" + r.config_hash;
    if (r.kind == "unpadded") {
        std::string table = "# " + tag + "\ncell,drop,sites,flows,perfect_rate,website_rate\n";
        for (const auto& c : r.unpadded) {
            if (!c.error.empty()) continue;
            write_text(dir / ("roc_" + c.name + ".csv"), format_roc(c.roc, tag + " cell=" + c.name));
            if (!c.outcomes.empty())
                write_text(dir / ("match_" + c.name + ".csv"),
                           format_match_report(c.outcomes, tag + " cell=" + c.name));
            for (const auto& l : c.libraries) {
                table += c.name + "," + fmt(c.drop) + "," + std::to_string(l.sites) + "," + std::to_string(l.flows) +
                         "," + fmt(l.summary.perfect_rate()) + "," + fmt(l.summary.website_rate()) + "\n";
            }
        }
        write_text(dir / "match_summary.csv", table);
    } else {
        std::string table =
            "# " + tag + "\ncell,window_length,ipdv_mean,match_rate,no_prediction_rate,false_match_rate\n";
        for (const auto& c : r.padded) {
            if (!c.error.empty()) continue;
            write_text(dir / ("scc_" + c.name + ".csv"), format_match_report(c.outcomes, tag + " cell=" + c.name));
            table += c.name + "," + fmt(c.window_length) + "," + fmt(c.ipdv_mean) + "," +
                     fmt(c.summary.perfect_rate()) + "," + fmt(c.summary.no_prediction_rate()) + "," +
                     fmt(c.summary.false_match_rate()) + "\n";
        }
        write_text(dir / "scc_summary.csv", table);
    }
    write_text(dir / "config.txt", r.config_text);
    write_text(dir / "summary.json", summary_json(r, with_timings));
}

}  // namespace flowconf
