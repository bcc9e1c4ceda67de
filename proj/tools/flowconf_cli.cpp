// flowconf command-line front end. Talks to the library only through flowconf.h.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "flowconf.h"

namespace {

// Thrown after a failing C call; carries the status for the exit code.
struct CallFailed {
    fc_status status;
};

void check(fc_status s) {
    if (s != FC_OK) throw CallFailed{s};
}

int exit_code(fc_status s) {
    switch (s) {
        case FC_ERR_USAGE: return 1;
        case FC_ERR_CELL: return 3;
        default: return 2;
    }
}

template <class T, void (*Free)(T*)>
struct Handle {
    T* p = nullptr;
    Handle() = default;
    Handle(const Handle&) = delete;
    Handle& operator=(const Handle&) = delete;
    ~Handle() { Free(p); }
    T** out() { return &p; }
    T* get() const { return p; }
};

using FlowSetH = Handle<fc_flowset, fc_flowset_free>;
using HashesH = Handle<fc_hashes, fc_hashes_free>;
using ExperimentH = Handle<fc_experiment, fc_experiment_free>;

void load_flows(FlowSetH& fs, const std::string& dataset) {
    if (std::filesystem::is_regular_file(dataset))
        check(fc_flowset_load_manifest(dataset.c_str(), fs.out()));
    else
        check(fc_flowset_load(dataset.c_str(), fs.out()));
}

void print_summary(const fc_match_summary& s) {
    std::printf("queries=%zu perfect=%zu website=%zu miss=%zu no_prediction=%zu\n", s.queries, s.perfect, s.website,
                s.miss, s.no_prediction);
    std::printf("perfect_rate=%.6f website_rate=%.6f false_match_rate=%.6f\n", s.perfect_rate, s.website_rate,
                s.false_match_rate);
}

struct ExperimentArgs {
    std::string config;
    std::vector<std::string> sets;
    std::string out;
    bool print_config = false;
};

void add_experiment(CLI::App& app, const char* name, const char* help, fc_experiment_kind kind,
                    ExperimentArgs& args, int& rc) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", args.config, "key = value config file (defaults when omitted)")
        ->check(CLI::ExistingFile);
    sub->add_option("--set", args.sets, "override one key, e.g. --set seed=7")->type_name("KEY=VALUE");
    sub->add_option("--out", args.out, "output directory (overrides the 'output' key)");
    sub->add_flag("--print-config", args.print_config, "print the resolved config and exit");
    sub->callback([&args, &rc, kind] {
        ExperimentH e;
        check(fc_experiment_load(args.config.empty() ? nullptr : args.config.c_str(), e.out()));
        for (const auto& kv : args.sets) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) throw CLI::ValidationError("--set", "expected KEY=VALUE, got '" + kv + "'");
            check(fc_experiment_set(e.get(), kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str()));
        }
        if (!args.out.empty()) check(fc_experiment_set(e.get(), "output", args.out.c_str()));
        if (args.print_config) {
            char* text = nullptr;
            check(fc_experiment_config_text(e.get(), &text));
            std::fputs(text, stdout);
            fc_string_free(text);
            return;
        }
        char* json = nullptr;
        const fc_status s = fc_experiment_run(e.get(), kind, &json);
        if (json) {
            std::puts(json);
            fc_string_free(json);
        }
        if (s != FC_OK) {
            std::fprintf(stderr, "error: code=%d message=%s\n", static_cast<int>(s), fc_last_error());
            rc = exit_code(s);
        }
    });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Flow hashing, impairment simulation and traffic-confirmation evaluation"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(fc_version()));
    int rc = 0;

    // ingest
    std::string ingest_dir;
    auto* ingest = app.add_subcommand("ingest", "validate a trace directory (or manifest) and print counts");
    ingest->add_option("dir", ingest_dir, "dataset directory or manifest file")->required();
    ingest->callback([&] {
        FlowSetH fs;
        load_flows(fs, ingest_dir);
        std::printf("traces=%zu sites=%zu packets=%zu dummies=%zu skipped_files=%zu\n", fc_flowset_size(fs.get()),
                    fc_flowset_sites(fs.get()), fc_flowset_packets(fs.get()), fc_flowset_dummies(fs.get()),
                    fc_flowset_skipped(fs.get()));
    });

    // gen-synth
    int sites = 10, instances = 10;
    uint64_t synth_seed = 1;
    std::string synth_out;
    auto* gen = app.add_subcommand("gen-synth", "write a synthetic burst-model corpus");
    gen->add_option("--sites", sites)->check(CLI::PositiveNumber);
    gen->add_option("--instances", instances)->check(CLI::PositiveNumber);
    gen->add_option("--seed", synth_seed);
    gen->add_option("--out", synth_out)->required();
    gen->callback([&] {
        FlowSetH fs;
        check(fc_flowset_synthesize(sites, instances, synth_seed, fs.out()));
        check(fc_flowset_save(fs.get(), synth_out.c_str()));
        std::printf("traces=%zu packets=%zu\n", fc_flowset_size(fs.get()), fc_flowset_packets(fs.get()));
    });

    // hash
    fc_hash_params hp;
    fc_hash_params_default(&hp);
    std::string hash_dataset, hash_out, anchor = "midpoint";
    bool weight_first = false;
    auto* hash = app.add_subcommand("hash", "hash every flow of a dataset");
    hash->add_option("--dataset", hash_dataset)->required();
    hash->add_option("--n-windows", hp.n_windows)->capture_default_str();
    hash->add_option("--bits", hp.hash_bits)->capture_default_str();
    hash->add_option("--basis-seed", hp.basis_seed)->capture_default_str();
    hash->add_option("--time-scale", hp.time_scale, "multiplier from seconds to basis units")->capture_default_str();
    hash->add_option("--anchor", anchor, "window time: midpoint or start")
        ->check(CLI::IsMember({"midpoint", "start"}))
        ->capture_default_str();
    hash->add_flag("--weight-first-window", weight_first, "weight window 0 by its count like the others");
    hash->add_option("--out", hash_out)->required();
    hash->callback([&] {
        hp.anchor = anchor == "start" ? FC_ANCHOR_START : FC_ANCHOR_MIDPOINT;
        hp.weight_first_window = weight_first ? 1 : 0;
        FlowSetH fs;
        load_flows(fs, hash_dataset);
        HashesH h;
        check(fc_hashes_compute(fs.get(), &hp, h.out()));
        const std::string header = "n_windows=" + std::to_string(hp.n_windows) +
                                   " bits=" + std::to_string(hp.hash_bits) +
                                   " basis_seed=" + std::to_string(hp.basis_seed) + " anchor=" + anchor;
        check(fc_hashes_save(h.get(), hash_out.c_str(), header.c_str()));
        std::printf("hashed=%zu discarded=%zu\n", fc_hashes_size(h.get()), fc_hashes_discarded(h.get()));
    });

    // impair
    std::string imp_dataset, imp_out, imp_ipdv = "none";
    double drop = 0.0;
    uint64_t imp_seed = 1;
    auto* impair = app.add_subcommand("impair", "drop and jitter packets");
    impair->add_option("--dataset", imp_dataset)->required();
    impair->add_option("--drop", drop, "drop probability")->check(CLI::Range(0.0, 1.0));
    impair->add_option("--ipdv", imp_ipdv, "none | normal:mean,sd[,min,max] | sample file")->capture_default_str();
    impair->add_option("--seed", imp_seed);
    impair->add_option("--out", imp_out)->required();
    impair->callback([&] {
        FlowSetH fs, out;
        load_flows(fs, imp_dataset);
        check(fc_flowset_impair(fs.get(), drop, imp_ipdv.c_str(), imp_seed, out.out()));
        check(fc_flowset_save(out.get(), imp_out.c_str()));
        std::printf("traces=%zu packets_in=%zu packets_out=%zu\n", fc_flowset_size(out.get()),
                    fc_flowset_packets(fs.get()), fc_flowset_packets(out.get()));
    });

    // pad
    fc_pad_params pp;
    fc_pad_params_default(&pp);
    std::string pad_dataset, pad_out, pad_hist, rate_def = "dummy-per-real";
    auto* pad = app.add_subcommand("pad", "apply Adaptive Padding");
    pad->add_option("--dataset", pad_dataset)->required();
    pad->add_option("--histograms", pad_hist, "histogram file (built from the dataset when omitted)")
        ->check(CLI::ExistingFile);
    pad->add_option("--rate", pp.target_rate, "target padding rate")->capture_default_str();
    pad->add_option("--rate-scale", pp.rate_scale, "fixed delay divisor; skips calibration when > 0");
    pad->add_option("--rate-definition", rate_def)
        ->check(CLI::IsMember({"dummy-per-real", "dummy-per-total"}))
        ->capture_default_str();
    pad->add_option("--burst-inject", pp.burst_inject_probability)->check(CLI::Range(0.0, 1.0));
    pad->add_option("--max-dummies-per-gap", pp.max_dummies_per_gap)->check(CLI::PositiveNumber);
    pad->add_option("--seed", pp.seed);
    pad->add_option("--out", pad_out)->required();
    pad->callback([&] {
        if (!pad_hist.empty()) pp.histograms_path = pad_hist.c_str();
        pp.rate_definition = rate_def == "dummy-per-total" ? FC_RATE_DUMMY_PER_TOTAL : FC_RATE_DUMMY_PER_REAL;
        FlowSetH fs, out;
        load_flows(fs, pad_dataset);
        double scale = 0.0, achieved = 0.0;
        check(fc_flowset_pad(fs.get(), &pp, out.out(), &scale, &achieved));
        check(fc_flowset_save(out.get(), pad_out.c_str()));
        std::printf("traces=%zu dummies=%zu rate_scale=%.6g padding_rate=%.6f\n", fc_flowset_size(out.get()),
                    fc_flowset_dummies(out.get()), scale, achieved);
    });

    // build-hist
    std::string bh_dataset, bh_out;
    double split = 0.1;
    auto* bh = app.add_subcommand("build-hist", "build burst/gap histograms from a corpus");
    bh->add_option("--dataset", bh_dataset)->required();
    bh->add_option("--split", split, "gap threshold in seconds between burst and gap mode")->capture_default_str();
    bh->add_option("--out", bh_out)->required();
    bh->callback([&] {
        FlowSetH fs;
        load_flows(fs, bh_dataset);
        check(fc_histograms_build(fs.get(), split, bh_out.c_str()));
    });

    // ipdv
    std::string ip_client, ip_server, ip_out;
    auto* ipdv = app.add_subcommand("ipdv", "empirical IPDV samples from client and server captures");
    ipdv->add_option("--client", ip_client)->required();
    ipdv->add_option("--server", ip_server)->required();
    ipdv->add_option("--out", ip_out)->required();
    ipdv->callback([&] {
        FlowSetH c, s;
        load_flows(c, ip_client);
        load_flows(s, ip_server);
        double lo = 0.0, mean = 0.0, hi = 0.0;
        check(fc_ipdv_build(c.get(), s.get(), ip_out.c_str(), &lo, &mean, &hi));
        std::printf("min=%.6f mean=%.6f max=%.6f\n", lo, mean, hi);
    });

    // match
    std::string m_queries, m_library, m_out, m_padded, m_unpadded, m_roc;
    std::optional<int> tau;
    bool nearest = false;
    double scc_k = 0.0;
    uint64_t roc_seed = 1;
    auto* match = app.add_subcommand("match", "match query flows against a library");
    match->add_option("--queries", m_queries, "query hash file");
    match->add_option("--library", m_library, "library hash file");
    auto* tau_opt = match->add_option("--tau", tau, "Hamming threshold (strictly below matches)");
    auto* nn_opt = match->add_flag("--nearest", nearest, "minimum-distance prediction");
    auto* scc_opt = match->add_option("--scc", scc_k, "adapted-SCC window length in seconds (flow directories)");
    tau_opt->excludes(nn_opt)->excludes(scc_opt);
    nn_opt->excludes(scc_opt);
    match->add_option("--unpadded", m_unpadded, "unpadded flows for --scc");
    match->add_option("--padded", m_padded, "padded flows for --scc");
    match->add_option("--roc", m_roc, "also write tau,tpr,fpr for queries vs library");
    match->add_option("--roc-seed", roc_seed, "impostor selection seed for --roc");
    match->add_option("--out", m_out, "per-query report CSV");
    match->callback([&] {
        fc_match_summary s{};
        if (*scc_opt) {
            if (m_unpadded.empty() || m_padded.empty())
                throw CLI::ValidationError("--scc", "needs --unpadded and --padded");
            FlowSetH u, p;
            load_flows(u, m_unpadded);
            load_flows(p, m_padded);
            check(fc_match_scc(u.get(), p.get(), scc_k, m_out.empty() ? nullptr : m_out.c_str(), &s));
            print_summary(s);
            return;
        }
        if (m_queries.empty() || m_library.empty())
            throw CLI::ValidationError("match", "needs --queries and --library");
        if (!tau && !nearest) throw CLI::ValidationError("match", "one of --tau, --nearest or --scc is required");
        HashesH q, l;
        check(fc_hashes_load(m_queries.c_str(), q.out()));
        check(fc_hashes_load(m_library.c_str(), l.out()));
        const char* report = m_out.empty() ? nullptr : m_out.c_str();
        if (nearest)
            check(fc_match_nearest(q.get(), l.get(), report, &s));
        else
            check(fc_match_threshold(q.get(), l.get(), *tau, report, &s));
        print_summary(s);
        if (!m_roc.empty()) {
            double auc = 0.0;
            check(fc_roc(l.get(), q.get(), roc_seed, m_roc.c_str(), &auc));
            std::printf("auc=%.6f\n", auc);
        }
    });

    ExperimentArgs a_unp, a_roc, a_pad, a_scc;
    add_experiment(app, "run-unpadded", "drop grid: ROC and nearest-neighbour sweep", FC_RUN_UNPADDED, a_unp, rc);
    add_experiment(app, "eval-roc", "drop grid: ROC cells only", FC_EVAL_ROC, a_roc, rc);
    add_experiment(app, "run-padded", "Adaptive Padding and the adapted-SCC grid", FC_RUN_PADDED, a_pad, rc);
    add_experiment(app, "eval-scc", "adapted-SCC at the smallest window only", FC_EVAL_SCC, a_scc, rc);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::fprintf(stderr, "error: code=1 message=%s\n", e.what());
        return 1;
    } catch (const CallFailed& f) {
        std::fprintf(stderr, "error: code=%d message=%s\n", static_cast<int>(f.status), fc_last_error());
        return exit_code(f.status);
    }
    return rc;
}
