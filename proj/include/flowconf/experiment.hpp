#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "flowconf/flow_model.hpp"
#include "flowconf/hashing.hpp"
#include "flowconf/impairments.hpp"
#include "flowconf/matching.hpp"

namespace flowconf {

/// Every knob of an experiment run. Text form is `key = value` lines; see
/// format_config for the full key list.
struct ExperimentConfig {
    // Dataset: a directory of <site>-<instance> files, a manifest, or (when
    // both are empty) a synthetic corpus.
    std::string dataset_dir;
    std::string manifest;
    int synthetic_sites = 10;
    int synthetic_instances = 10;
    std::uint64_t synthetic_seed = 7;
    BurstModelParams burst;

    HashConfig hash;

    // Unpadded attack.
    std::vector<double> drop_grid{0.01, 0.05, 0.10, 0.30};
    std::string ipdv = "normal:0.021,0.15,-1.418,1.735";
    std::vector<int> library_sites{10, 25, 50, 100};
    int repetitions = 1;
    bool nearest = true;

    // Padded attack.
    std::string histograms_file;  // empty: build from the corpus
    HistogramConfig histogram;
    double target_padding_rate = 0.54;
    PaddingRateDefinition rate_definition = PaddingRateDefinition::kDummyPerReal;
    double rate_scale = 0.0;  // <= 0: calibrate to target_padding_rate
    double burst_inject_probability = 0.5;
    int max_dummies_per_gap = 100;
    std::vector<double> scc_windows{0.05, 0.1, 0.2, 0.5};
    // Mean IPDV values; each cell rescales the base ipdv distribution so its
    // mean equals the grid value.
    std::vector<double> scc_ipdv_means{0.021, 0.1, 0.2};
    bool scc_self_inclusion = false;
    std::size_t scc_queries = 0;  // 0: every flow is queried

    std::string output_dir = "results";
    std::uint64_t master_seed = 1;
    bool record_timings = true;

    /// Applies one `key = value` assignment. Throws UsageError for unknown keys.
    void set(std::string_view key, std::string_view value);
    void validate() const;
};

ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& file);

/// Fully resolved config, one `key = value` per line in a fixed order.
std::string format_config(const ExperimentConfig& cfg);

/// Fingerprint of everything that influences results (output location and
/// timing flags excluded), as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

/// Scales a distribution by a constant factor (mean, spread and clip bounds alike).
IpdvDistribution scale_ipdv(const IpdvDistribution& base, double factor);

struct LibraryResult {
    int sites = 0;
    std::size_t flows = 0;
    MatchSummary summary;
};

struct UnpaddedCell {
    std::string name;
    double drop = 0.0;
    int repetition = 0;
    std::string error;  // non-empty when the cell failed
    std::size_t discarded_original = 0;
    std::size_t discarded_impaired = 0;
    std::vector<RocPoint> roc;
    double auc = 0.0;
    double mean_true_distance = 0.0;
    double mean_impostor_distance = 0.0;
    std::vector<LibraryResult> libraries;
    std::vector<MatchOutcome> outcomes;  // largest library
    double seconds = 0.0;
};

struct PaddedCell {
    std::string name;
    double window_length = 0.0;
    double ipdv_mean = 0.0;
    std::string error;
    MatchSummary summary;
    std::vector<MatchOutcome> outcomes;
    double seconds = 0.0;
};

struct ExperimentReport {
    std::string kind;  // "unpadded" or "padded"
    std::string config_text;
    std::string config_hash;
    std::size_t flows = 0;
    std::size_t sites = 0;
    std::size_t skipped_files = 0;
    std::vector<UnpaddedCell> unpadded;
    std::vector<PaddedCell> padded;
    double rate_scale = 0.0;
    double padding_rate = 0.0;
    double setup_seconds = 0.0;

    bool has_failures() const;
};

/// Loads (or synthesizes) the corpus a config describes.
DatasetLoad load_corpus(const ExperimentConfig& cfg);

/// Drop-rate grid: ROC per cell plus nearest-neighbour match rates over the
/// library-size sweep.
ExperimentReport run_unpadded_experiment(const ExperimentConfig& cfg);
ExperimentReport run_unpadded_experiment(const ExperimentConfig& cfg, const FlowSet& corpus);

/// Pads the corpus, then runs adapted-SCC for every (window, mean IPDV) cell.
ExperimentReport run_padded_experiment(const ExperimentConfig& cfg);
ExperimentReport run_padded_experiment(const ExperimentConfig& cfg, const FlowSet& corpus);

/// summary.json text; timings are included only when requested.
std::string summary_json(const ExperimentReport& r, bool with_timings);

/// Writes roc_<cell>.csv, match_<cell>.csv, scc_<cell>.csv and summary.json.
void write_report(const ExperimentReport& r, const std::filesystem::path& dir, bool with_timings);

}  // namespace flowconf
