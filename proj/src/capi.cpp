#include "flowconf.h"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <string>

#include "flowconf/error.hpp"
#include "flowconf/experiment.hpp"
#include "flowconf/rng.hpp"

using namespace flowconf;

struct fc_flowset {
    FlowSet flows;
    std::size_t skipped = 0;
};

struct fc_hashes {
    std::vector<FlowHash> hashes;
    std::size_t discarded = 0;
};

struct fc_experiment {
    ExperimentConfig cfg;
};

namespace {

thread_local std::string g_last_error;

fc_status fail(fc_status s, const char* what) {
    g_last_error = what;
    return s;
}

template <class F>
fc_status guarded(F&& f) {
    try {
        f();
        return FC_OK;
    } catch (const Error& e) {
        return fail(static_cast<fc_status>(e.code()), e.what());
    } catch (const std::filesystem::filesystem_error& e) {
        return fail(FC_ERR_DATA, e.what());
    } catch (const std::bad_alloc&) {
        return fail(FC_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(FC_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(FC_ERR_INTERNAL, "unknown error");
    }
}

#define FC_REQUIRE(cond)                                                   \
    do {                                                                   \
        if (!(cond)) return fail(FC_ERR_USAGE, "null argument: " #cond); \
    } while (0)

char* dup_string(const std::string& s) {
    char* p = new char[s.size() + 1];
    std::memcpy(p, s.c_str(), s.size() + 1);
    return p;
}

HashConfig to_hash_config(const fc_hash_params& p) {
    HashConfig c;
    c.n_windows = p.n_windows;
    c.hash_bits = p.hash_bits;
    c.basis_seed = p.basis_seed;
    c.time_scale = p.time_scale;
    if (p.anchor != FC_ANCHOR_MIDPOINT && p.anchor != FC_ANCHOR_START) throw UsageError("unknown window anchor");
    c.anchor = p.anchor == FC_ANCHOR_START ? WindowAnchor::kStart : WindowAnchor::kMidpoint;
    c.weight_first_window = p.weight_first_window != 0;
    return c;
}

void fill_summary(const MatchSummary& s, fc_match_summary* out) {
    if (!out) return;
    out->queries = s.queries;
    out->perfect = s.perfect;
    out->website = s.website;
    out->miss = s.miss;
    out->no_prediction = s.no_prediction;
    out->perfect_rate = s.perfect_rate();
    out->website_rate = s.website_rate();
    out->false_match_rate = s.false_match_rate();
}

void write_text(const char* path, const std::string& text) {
    if (!path) return;
    std::FILE* f = std::fopen(path, "wb");
    if (!f) throw DataError(std::string("cannot write ") + path);
    const bool ok = std::fwrite(text.data(), 1, text.size(), f) == text.size();
    if (std::fclose(f) != 0 || !ok) throw DataError(std::string("cannot write ") + path);
}

}  // namespace

extern "C" {

const char* fc_last_error(void) { return g_last_error.c_str(); }
const char* fc_version(void) { return "0.1.0"; }
void fc_string_free(char* s) { delete[] s; }

// ---- flow sets ----

fc_status fc_flowset_load(const char* dir, fc_flowset** out) {
    FC_REQUIRE(dir && out);
    return guarded([&] {
        auto load = load_dataset(dir);
        *out = new fc_flowset{std::move(load.flows), load.skipped};
    });
}

fc_status fc_flowset_load_manifest(const char* manifest, fc_flowset** out) {
    FC_REQUIRE(manifest && out);
    return guarded([&] {
        auto load = load_dataset_manifest(manifest);
        *out = new fc_flowset{std::move(load.flows), load.skipped};
    });
}

fc_status fc_flowset_synthesize(int sites, int instances, uint64_t seed, fc_flowset** out) {
    FC_REQUIRE(out);
    return guarded([&] { *out = new fc_flowset{generate_synthetic_corpus(sites, instances, {}, seed), 0}; });
}

fc_status fc_flowset_save(const fc_flowset* fs, const char* dir) {
    FC_REQUIRE(fs && dir);
    return guarded([&] { save_dataset(fs->flows, dir); });
}

void fc_flowset_free(fc_flowset* fs) { delete fs; }

size_t fc_flowset_size(const fc_flowset* fs) { return fs ? fs->flows.size() : 0; }
size_t fc_flowset_sites(const fc_flowset* fs) { return fs ? fs->flows.site_count() : 0; }
size_t fc_flowset_skipped(const fc_flowset* fs) { return fs ? fs->skipped : 0; }

size_t fc_flowset_packets(const fc_flowset* fs) {
    std::size_t n = 0;
    if (fs)
        for (const auto& t : fs->flows) n += t.size();
    return n;
}

size_t fc_flowset_dummies(const fc_flowset* fs) {
    std::size_t n = 0;
    if (fs)
        for (const auto& t : fs->flows) n += t.count_dummies();
    return n;
}

fc_status fc_flowset_trace_info(const fc_flowset* fs, size_t index, int* site, int* instance, size_t* packets,
                                double* duration) {
    FC_REQUIRE(fs);
    if (index >= fs->flows.size()) return fail(FC_ERR_USAGE, "trace index out of range");
    const Trace& t = fs->flows[index];
    if (site) *site = t.id().site;
    if (instance) *instance = t.id().instance;
    if (packets) *packets = t.size();
    if (duration) *duration = t.duration();
    return FC_OK;
}

// ---- impairments and padding ----

fc_status fc_flowset_impair(const fc_flowset* fs, double drop_probability, const char* ipdv_spec, uint64_t seed,
                            fc_flowset** out) {
    FC_REQUIRE(fs && out);
    return guarded([&] {
        ImpairmentConfig cfg{drop_probability,
                             ipdv_spec ? IpdvDistribution::parse(ipdv_spec) : IpdvDistribution::zero(), seed};
        *out = new fc_flowset{impair_flowset(fs->flows, cfg), 0};
    });
}

fc_status fc_ipdv_build(const fc_flowset* client, const fc_flowset* server, const char* out_path, double* min,
                        double* mean, double* max) {
    FC_REQUIRE(client && server);
    return guarded([&] {
        const auto dist = build_ipdv_distribution(client->flows, server->flows);
        if (out_path) save_ipdv_samples(dist, out_path);
        if (min) *min = dist.summary().min;
        if (mean) *mean = dist.summary().mean;
        if (max) *max = dist.summary().max;
    });
}

fc_status fc_histograms_build(const fc_flowset* corpus, double split_threshold, const char* out_path) {
    FC_REQUIRE(corpus && out_path);
    return guarded([&] {
        HistogramConfig hc;
        if (split_threshold > 0.0) hc.split_threshold = split_threshold;
        write_histograms(out_path, build_histograms(corpus->flows, hc));
    });
}

void fc_pad_params_default(fc_pad_params* p) {
    if (!p) return;
    const ApConfig d;
    p->histograms_path = nullptr;
    p->target_rate = d.target_padding_rate;
    p->rate_scale = 0.0;
    p->burst_inject_probability = d.burst_inject_probability;
    p->max_dummies_per_gap = d.max_dummies_per_gap;
    p->rate_definition = FC_RATE_DUMMY_PER_REAL;
    p->seed = 0;
}

fc_status fc_flowset_pad(const fc_flowset* fs, const fc_pad_params* params, fc_flowset** out,
                         double* rate_scale_used, double* achieved_rate) {
    FC_REQUIRE(fs && params && out);
    return guarded([&] {
        ApConfig ap;
        ap.histograms = params->histograms_path ? read_histograms(params->histograms_path)
                                                : build_histograms(fs->flows);
        ap.target_padding_rate = params->target_rate;
        ap.burst_inject_probability = params->burst_inject_probability;
        ap.max_dummies_per_gap = params->max_dummies_per_gap;
        if (params->rate_definition != FC_RATE_DUMMY_PER_REAL && params->rate_definition != FC_RATE_DUMMY_PER_TOTAL)
            throw UsageError("unknown padding rate definition");
        ap.rate_definition = params->rate_definition == FC_RATE_DUMMY_PER_TOTAL ? PaddingRateDefinition::kDummyPerTotal
                                                                                 : PaddingRateDefinition::kDummyPerReal;
        ap.seed = params->seed;
        ap.rate_scale = params->rate_scale > 0.0 ? params->rate_scale : calibrate_padding_rate(fs->flows, ap).rate_scale;
        FlowSet padded = pad_flowset(fs->flows, ap);
        if (rate_scale_used) *rate_scale_used = ap.rate_scale;
        if (achieved_rate) *achieved_rate = padding_rate(padded, ap.rate_definition);
        *out = new fc_flowset{std::move(padded), 0};
    });
}

// ---- hashing ----

void fc_hash_params_default(fc_hash_params* p) {
    if (!p) return;
    const HashConfig d;
    p->n_windows = d.n_windows;
    p->hash_bits = d.hash_bits;
    p->basis_seed = d.basis_seed;
    p->time_scale = d.time_scale;
    p->anchor = FC_ANCHOR_MIDPOINT;
    p->weight_first_window = 0;
}

fc_status fc_hashes_compute(const fc_flowset* fs, const fc_hash_params* params, fc_hashes** out) {
    FC_REQUIRE(fs && params && out);
    return guarded([&] {
        const HashConfig cfg = to_hash_config(*params);
        cfg.validate();
        auto hashed = hash_flowset(fs->flows, cfg, BasisSet::generate(cfg.hash_bits, cfg.basis_seed));
        *out = new fc_hashes{std::move(hashed.hashes), hashed.discarded.size()};
    });
}

fc_status fc_hashes_load(const char* path, fc_hashes** out) {
    FC_REQUIRE(path && out);
    return guarded([&] { *out = new fc_hashes{read_hash_library(path), 0}; });
}

fc_status fc_hashes_save(const fc_hashes* h, const char* path, const char* header) {
    FC_REQUIRE(h && path);
    return guarded([&] { write_hash_library(path, h->hashes, header ? header : ""); });
}

void fc_hashes_free(fc_hashes* h) { delete h; }
size_t fc_hashes_size(const fc_hashes* h) { return h ? h->hashes.size() : 0; }
size_t fc_hashes_discarded(const fc_hashes* h) { return h ? h->discarded : 0; }

fc_status fc_hashes_get(const fc_hashes* h, size_t index, int* site, int* instance, int* bits, char* buf,
                        size_t buf_len) {
    FC_REQUIRE(h);
    if (index >= h->hashes.size()) return fail(FC_ERR_USAGE, "hash index out of range");
    const FlowHash& fh = h->hashes[index];
    if (site) *site = fh.id().site;
    if (instance) *instance = fh.id().instance;
    if (bits) *bits = fh.m();
    if (buf) {
        const std::string hex = fh.to_hex();
        if (buf_len < hex.size() + 1) return fail(FC_ERR_USAGE, "buffer too small for hex hash");
        std::memcpy(buf, hex.c_str(), hex.size() + 1);
    }
    return FC_OK;
}

fc_status fc_hashes_hamming(const fc_hashes* a, size_t i, const fc_hashes* b, size_t j, int* distance) {
    FC_REQUIRE(a && b && distance);
    if (i >= a->hashes.size() || j >= b->hashes.size()) return fail(FC_ERR_USAGE, "hash index out of range");
    return guarded([&] { *distance = hamming(a->hashes[i], b->hashes[j]); });
}

// ---- matching ----

fc_status fc_match_nearest(const fc_hashes* queries, const fc_hashes* library, const char* report_path,
                           fc_match_summary* out) {
    FC_REQUIRE(queries && library);
    return guarded([&] {
        MatchSummary s;
        std::vector<MatchOutcome> outcomes;
        for (const auto& q : queries->hashes) {
            outcomes.push_back(nearest_match(q, library->hashes));
            s.add(outcomes.back());
        }
        write_text(report_path, format_match_report(outcomes));
        fill_summary(s, out);
    });
}

fc_status fc_match_threshold(const fc_hashes* queries, const fc_hashes* library, int tau, const char* report_path,
                             fc_match_summary* out) {
    FC_REQUIRE(queries && library);
    return guarded([&] {
        MatchSummary s;
        std::vector<MatchOutcome> outcomes;
        for (const auto& q : queries->hashes) {
            MatchOutcome o;
            o.query = q.id();
            o.score = q.m() + 1;
            for (const auto& c : library->hashes) {
                if (threshold_match(q, c, tau)) {
                    o.matched_ids.push_back(c.id());
                    o.score = std::min(o.score, hamming(q, c));
                }
            }
            if (o.matched_ids.empty()) {
                o.kind = MatchKind::kNoPrediction;
                o.score = 0;
            } else if (std::find(o.matched_ids.begin(), o.matched_ids.end(), o.query) != o.matched_ids.end()) {
                o.kind = MatchKind::kPerfect;
            } else if (std::any_of(o.matched_ids.begin(), o.matched_ids.end(),
                                   [&](const FlowId& id) { return id.site == o.query.site; })) {
                o.kind = MatchKind::kWebsite;
            } else {
                o.kind = MatchKind::kMiss;
            }
            s.add(o);
            outcomes.push_back(std::move(o));
        }
        write_text(report_path, format_match_report(outcomes));
        fill_summary(s, out);
    });
}

fc_status fc_match_scc(const fc_flowset* unpadded, const fc_flowset* padded, double window_length,
                       const char* report_path, fc_match_summary* out) {
    FC_REQUIRE(unpadded && padded);
    return guarded([&] {
        const SccIndex index(padded->flows, SccConfig{window_length});
        MatchSummary s;
        std::vector<MatchOutcome> outcomes;
        for (const auto& u : unpadded->flows) {
            outcomes.push_back(adapted_scc(u, index));
            s.add(outcomes.back());
        }
        write_text(report_path, format_match_report(outcomes));
        fill_summary(s, out);
    });
}

fc_status fc_roc(const fc_hashes* originals, const fc_hashes* modified, uint64_t seed, const char* csv_path,
                 double* auc) {
    FC_REQUIRE(originals && modified);
    return guarded([&] {
        // Pair by flow id; each original also gets one random other modified hash.
        std::vector<std::pair<FlowHash, FlowHash>> genuine, impostor;
        for (const auto& o : originals->hashes) {
            for (const auto& m : modified->hashes)
                if (m.id() == o.id()) genuine.emplace_back(o, m);
        }
        if (genuine.empty() || modified->hashes.size() < 2)
            throw DataError("ROC needs at least one matching id pair and two modified hashes");
        Rng pick(seed);
        for (const auto& [o, m] : genuine) {
            const FlowHash* other = nullptr;
            do {
                other = &modified->hashes[pick.below(modified->hashes.size())];
            } while (other->id() == o.id());
            impostor.emplace_back(o, *other);
        }
        const auto curve = roc_curve(genuine, impostor);
        write_text(csv_path, format_roc(curve));
        if (auc) *auc = roc_auc(curve);
    });
}

// ---- experiments ----

fc_status fc_experiment_load(const char* config_path, fc_experiment** out) {
    FC_REQUIRE(out);
    return guarded([&] {
        auto e = new fc_experiment{};
        if (config_path) {
            try {
                e->cfg = load_config(config_path);
            } catch (...) {
                delete e;
                throw;
            }
        }
        *out = e;
    });
}

fc_status fc_experiment_set(fc_experiment* e, const char* key, const char* value) {
    FC_REQUIRE(e && key && value);
    return guarded([&] { e->cfg.set(key, value); });
}

fc_status fc_experiment_config_text(const fc_experiment* e, char** out) {
    FC_REQUIRE(e && out);
    return guarded([&] { *out = dup_string(format_config(e->cfg)); });
}

fc_status fc_experiment_run(const fc_experiment* e, int kind, char** summary_json_out) {
    FC_REQUIRE(e);
    fc_status status = FC_OK;
    const fc_status s = guarded([&] {
        ExperimentConfig cfg = e->cfg;
        ExperimentReport report;
        switch (kind) {
            case FC_RUN_UNPADDED: report = run_unpadded_experiment(cfg); break;
            case FC_EVAL_ROC:
                cfg.nearest = false;
                report = run_unpadded_experiment(cfg);
                break;
            case FC_RUN_PADDED: report = run_padded_experiment(cfg); break;
            case FC_EVAL_SCC:
                cfg.scc_windows = {*std::min_element(cfg.scc_windows.begin(), cfg.scc_windows.end())};
                report = run_padded_experiment(cfg);
                break;
            default: throw UsageError("unknown experiment kind");
        }
        write_report(report, cfg.output_dir, cfg.record_timings);
        if (summary_json_out) *summary_json_out = dup_string(summary_json(report, cfg.record_timings));
        if (report.has_failures()) {
            status = FC_ERR_CELL;
            g_last_error = "one or more experiment cells failed; see summary.json";
        }
    });
    return s != FC_OK ? s : status;
}

void fc_experiment_free(fc_experiment* e) { delete e; }

}  // extern "C"
