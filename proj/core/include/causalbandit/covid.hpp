#pragma once

// Regional case-count workflow: ingest a daily panel, smooth it, reconstruct
// region-specific cases from a no-travel calibration window, estimate a
// (possibly cyclic) influence graph with the directed-total-variation penalty
// under a 10:1 blocked validation split, then compare SEM-UCB region choices
// against ranking regions by their overall cases.

#include <causalbandit/graph_learn.hpp>
#include <causalbandit/harness.hpp>
#include <causalbandit/policies.hpp>

#include <chrono>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace causalbandit {

using Day = std::chrono::sys_days;

// Strict YYYY-MM-DD.
Day parse_iso_date(std::string_view text);
std::string format_iso_date(Day day);

struct RegionPanel {
    // Identifiers as they appear in the input (e.g. abbreviations).
    std::vector<std::string> regions;
    // Full names when a mapping file was applied; empty otherwise.
    std::vector<std::string> region_names;
    std::vector<Day> dates;
    // N x T overall daily cases.
    Matrix overall_cases;
    // N x T reconstructed region-specific cases.
    std::optional<Matrix> region_specific_cases;
    // Negative counts clipped to zero during ingestion.
    std::size_t clipped_negatives = 0;

    std::size_t n_regions() const { return regions.size(); }
    std::size_t n_days() const { return dates.size(); }
    void validate() const;
    // Index of `day` in `dates`; throws DataError when absent.
    std::size_t day_index(Day day) const;
};

// CSV with header `date,region,new_cases`, one row per (date, region).
RegionPanel parse_panel_csv(std::istream& in);
RegionPanel ingest_csv(const std::filesystem::path& path);
void write_panel_csv(const RegionPanel& panel, std::ostream& out);
void write_panel_csv(const RegionPanel& panel, const std::filesystem::path& path);

// `abbreviation,name` rows (a header line is optional).
std::map<std::string, std::string> load_region_names(const std::filesystem::path& path);
void apply_region_names(RegionPanel& panel, const std::map<std::string, std::string>& names);

// Trailing mean over the last min(window, t + 1) observations.
Vector moving_average(const Vector& series, std::size_t window = 7);
RegionPanel smooth_panel(const RegionPanel& panel, std::size_t window = 7);

// Gaussian kernel density over a region's calibration values, Silverman
// bandwidth, draws clipped to [0, clip_factor * max value].
class KernelDensitySampler {
public:
    explicit KernelDensitySampler(std::vector<double> values, double clip_factor = 1.5);

    double bandwidth() const { return bandwidth_; }
    double upper_clip() const { return upper_; }
    double mean() const;
    double sample(Rng& rng) const;

private:
    std::vector<double> values_;
    double bandwidth_ = 0.0;
    double upper_ = 0.0;
};

inline constexpr std::size_t kMinCalibrationDays = 7;

// Fits one sampler per region on the smoothed overall cases of the inclusive
// window [first, last], during which overall = region-specific cases.
std::vector<KernelDensitySampler> estimate_region_distribution(const RegionPanel& panel, Day first, Day last,
                                                               std::size_t window = 7);

struct CvSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
    // Half-open [begin, end) day ranges of the 11-day blocks.
    std::vector<std::pair<std::size_t, std::size_t>> blocks;
};

inline constexpr std::size_t kCvBlockLength = 11;

// floor(T / 11) consecutive blocks, one uniformly drawn validation day per
// block; tail days go to train.
CvSplit make_cv_split(std::size_t n_days, Rng& rng);

struct PredictionErrors {
    std::vector<std::size_t> days;
    std::vector<double> errors;
    double mean = 0.0;
};

// Per validation day i: ||y_i - (I - A_hat)^{-1} z_i||_1 / N.
PredictionErrors prediction_error(const Matrix& overall, const Matrix& region_specific, const AdjacencyMatrix& estimate,
                                  std::span<const std::size_t> days);
PredictionErrors prediction_error(const RegionPanel& panel, const AdjacencyMatrix& estimate, const CvSplit& split);

// 1^T (I - A_hat)^{-1} diag(1_S) z.
double contribution(const AdjacencyMatrix& estimate, const DecisionVector& selection, const Vector& region_specific);

struct RatioRow {
    std::size_t day = 0;
    std::optional<double> semucb;
    std::optional<double> naive;
};

// Naive rule: the s regions with the largest overall cases that day. Both
// ratios divide the selected contribution by the day's total overall cases.
std::vector<RatioRow> naive_comparison(const Matrix& overall, const Matrix& region_specific,
                                       const AdjacencyMatrix& estimate, const std::vector<DecisionVector>& selections,
                                       std::size_t budget);

// Replays region-specific cases day by day as instantaneous rewards (scaled by
// 1 / scale) through the SEM defined by `estimate`.
class PanelEnvironment final : public BanditEnvironment {
public:
    PanelEnvironment(Matrix region_specific, AdjacencyMatrix estimate, double scale);

    std::size_t size() const override { return estimate_.size(); }
    Observation play(const DecisionVector& x) override;

private:
    Matrix rewards_;
    AdjacencyMatrix estimate_;
    std::size_t day_ = 0;
};

struct CovidOptions {
    Day calibration_first{};
    Day calibration_last{};
    Day study_first{};
    Day study_last{};
    std::size_t window = 7;
    std::size_t budget = 6;
    std::vector<double> lambda_grid = default_lambda_grid();
    SolverSettings solver{5000, 1e-9, FeasibleSet::NonnegZeroDiagonal, true, false};
    std::uint64_t seed = 1;
};

struct CovidResult {
    // Smoothed study-window panel with the sampled region-specific cases.
    RegionPanel study;
    CvSplit split;
    GridResult grid;
    AdjacencyMatrix estimate;
    bool estimate_rescaled = false;
    PredictionErrors errors;
    PredictionErrors baseline_errors;
    std::vector<DecisionVector> selections;
    std::vector<RatioRow> ratios;
    double mean_semucb_ratio = 0.0;
    double mean_naive_ratio = 0.0;
};

CovidResult run_covid_pipeline(const RegionPanel& raw, const CovidOptions& options);

// panel_smoothed.csv, errors.csv, selections.csv, ratios.csv, covid_summary.json.
void emit_covid_reports(const CovidResult& result, const std::filesystem::path& dir);

struct SyntheticPanelSpec {
    std::size_t calibration_days = 30;
    std::size_t study_days = 66;
    // Mean region-specific daily cases per region.
    std::vector<double> base_rates{30.0, 45.0, 40.0, 35.0, 25.0};
    // Relative day-to-day spread of region-specific cases.
    double relative_spread = 0.15;
    Day first_day = parse_iso_date("2020-04-20");
    std::uint64_t seed = 7;
};

// Cyclic five-region influence graph with spectral radius 0.5: region 1 seeds
// every other region, region 5 feeds back into region 1.
Matrix synthetic_cyclic_adjacency();

struct SyntheticPanel {
    RegionPanel panel;
    Matrix adjacency;
    // Calibration days run without coupling; the study window starts after.
    Day calibration_first{};
    Day calibration_last{};
    Day study_first{};
    Day study_last{};
};

SyntheticPanel make_synthetic_panel(const SyntheticPanelSpec& spec, const Matrix& adjacency);

}  // namespace causalbandit
