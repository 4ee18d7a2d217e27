#include <causalbandit/covid.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace causalbandit {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(trim(line.substr(start)));
            return fields;
        }
        fields.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
}

double parse_double(std::string_view text, std::size_t line_no) {
    double value = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size() || !std::isfinite(value)) {
        throw DataError("line " + std::to_string(line_no) + ": bad number '" + std::string(text) + "'");
    }
    return value;
}

Matrix select_columns(const Matrix& m, std::span<const std::size_t> cols) {
    Matrix out(m.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = m.col(static_cast<Eigen::Index>(cols[k]));
    return out;
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Dates

Day parse_iso_date(std::string_view text) {
    text = trim(text);
    int y = 0;
    unsigned m = 0;
    unsigned d = 0;
    const bool shape = text.size() == 10 && text[4] == '-' && text[7] == '-';
    auto field = [&](std::size_t pos, std::size_t len, auto& out) {
        const auto res = std::from_chars(text.data() + pos, text.data() + pos + len, out);
        return res.ec == std::errc{} && res.ptr == text.data() + pos + len;
    };
    if (!shape || !field(0, 4, y) || !field(5, 2, m) || !field(8, 2, d)) {
        throw DataError("bad ISO date '" + std::string(text) + "'");
    }
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!ymd.ok()) throw DataError("invalid calendar date '" + std::string(text) + "'");
    return Day{ymd};
}

std::string format_iso_date(Day day) {
    const std::chrono::year_month_day ymd{day};
    char buffer[16];
    std::snprintf(buffer, sizeof(buffer), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buffer;
}

// ---------------------------------------------------------------------------
// Panel I/O

void RegionPanel::validate() const {
    const auto n = static_cast<Eigen::Index>(regions.size());
    const auto t = static_cast<Eigen::Index>(dates.size());
    if (overall_cases.rows() != n || overall_cases.cols() != t) throw DimensionError("panel matrix shape mismatch");
    if (region_specific_cases &&
        (region_specific_cases->rows() != n || region_specific_cases->cols() != t)) {
        throw DimensionError("region-specific cases must match the overall panel shape");
    }
    for (std::size_t k = 1; k < dates.size(); ++k) {
        if (dates[k] - dates[k - 1] != std::chrono::days{1}) throw DataError("panel dates must be consecutive days");
    }
    if ((overall_cases.array() < 0.0).any()) throw DataError("overall cases must be nonnegative");
}

std::size_t RegionPanel::day_index(Day day) const {
    const auto it = std::find(dates.begin(), dates.end(), day);
    if (it == dates.end()) throw DataError("date " + format_iso_date(day) + " is outside the panel");
    return static_cast<std::size_t>(it - dates.begin());
}

RegionPanel parse_panel_csv(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw DataError("empty panel CSV");
    ++line_no;
    const auto header = split_fields(line);
    if (header.size() != 3 || header[0] != "date" || header[1] != "region" || header[2] != "new_cases") {
        throw DataError("panel CSV header must be 'date,region,new_cases'");
    }

    struct Cell {
        Day day;
        std::size_t region;
        double value;
    };
    std::vector<Cell> cells;
    RegionPanel panel;
    std::unordered_map<std::string, std::size_t> region_index;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() != 3) {
            throw DataError("line " + std::to_string(line_no) + ": expected 3 fields, got " + std::to_string(fields.size()));
        }
        Day day;
        try {
            day = parse_iso_date(fields[0]);
        } catch (const DataError& e) {
            throw DataError("line " + std::to_string(line_no) + ": " + e.what());
        }
        if (fields[1].empty()) throw DataError("line " + std::to_string(line_no) + ": empty region");
        const std::string region(fields[1]);
        auto [it, inserted] = region_index.emplace(region, panel.regions.size());
        if (inserted) panel.regions.push_back(region);
        double value = parse_double(fields[2], line_no);
        if (value < 0.0) {
            value = 0.0;
            ++panel.clipped_negatives;
        }
        cells.push_back({day, it->second, value});
    }
    if (cells.empty()) throw DataError("panel CSV has no data rows");

    auto [lo, hi] = std::minmax_element(cells.begin(), cells.end(),
                                        [](const Cell& a, const Cell& b) { return a.day < b.day; });
    const Day first = lo->day;
    const auto span_days = static_cast<std::size_t>((hi->day - first).count()) + 1;
    const std::size_t n = panel.regions.size();
    Matrix values = Matrix::Constant(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(span_days),
                                     std::numeric_limits<double>::quiet_NaN());
    std::vector<bool> seen_day(span_days, false);
    for (const Cell& c : cells) {
        const auto t = static_cast<std::size_t>((c.day - first).count());
        double& slot = values(static_cast<Eigen::Index>(c.region), static_cast<Eigen::Index>(t));
        if (!std::isnan(slot)) {
            throw DataError("duplicate cell for " + format_iso_date(c.day) + ", region " + panel.regions[c.region]);
        }
        slot = c.value;
        seen_day[t] = true;
    }
    for (std::size_t t = 0; t < span_days; ++t) {
        if (!seen_day[t]) {
            throw DataError("non-daily gap: no rows for " + format_iso_date(first + std::chrono::days{t}));
        }
    }
    for (std::size_t t = 0; t < span_days; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            if (std::isnan(values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)))) {
                throw DataError("missing cell for " + format_iso_date(first + std::chrono::days{t}) + ", region " +
                                panel.regions[i]);
            }
        }
    }
    panel.overall_cases = std::move(values);
    panel.dates.reserve(span_days);
    for (std::size_t t = 0; t < span_days; ++t) panel.dates.push_back(first + std::chrono::days{t});
    return panel;
}

RegionPanel ingest_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    return parse_panel_csv(in);
}

void write_panel_csv(const RegionPanel& panel, std::ostream& out) {
    out << "date,region,new_cases\n";
    for (std::size_t t = 0; t < panel.n_days(); ++t) {
        const std::string day = format_iso_date(panel.dates[t]);
        for (std::size_t i = 0; i < panel.n_regions(); ++i) {
            out << day << ',' << panel.regions[i] << ','
                << format_number(panel.overall_cases(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t))) << '\n';
        }
    }
}

void write_panel_csv(const RegionPanel& panel, const std::filesystem::path& path) {
    auto out = open_output(path);
    write_panel_csv(panel, out);
}

std::map<std::string, std::string> load_region_names(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    std::map<std::string, std::string> names;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const std::size_t comma = line.find(',');
        if (comma == std::string::npos) throw DataError("regions file line " + std::to_string(line_no) + ": missing comma");
        const std::string abbreviation(trim(std::string_view(line).substr(0, comma)));
        const std::string name(trim(std::string_view(line).substr(comma + 1)));
        if (line_no == 1 && abbreviation == "abbreviation") continue;
        names[abbreviation] = name;
    }
    return names;
}

void apply_region_names(RegionPanel& panel, const std::map<std::string, std::string>& names) {
    panel.region_names.clear();
    for (const auto& r : panel.regions) {
        const auto it = names.find(r);
        panel.region_names.push_back(it == names.end() ? r : it->second);
    }
}

// ---------------------------------------------------------------------------
// Smoothing and reconstruction

Vector moving_average(const Vector& series, std::size_t window) {
    if (window < 1) throw ParameterError("moving-average window must be at least 1");
    Vector out(series.size());
    double running = 0.0;
    const auto w = static_cast<Eigen::Index>(window);
    for (Eigen::Index t = 0; t < series.size(); ++t) {
        running += series[t];
        if (t >= w) running -= series[t - w];
        const Eigen::Index count = std::min(t + 1, w);
        out[t] = running / static_cast<double>(count);
    }
    return out;
}

RegionPanel smooth_panel(const RegionPanel& panel, std::size_t window) {
    RegionPanel out = panel;
    for (Eigen::Index i = 0; i < panel.overall_cases.rows(); ++i) {
        out.overall_cases.row(i) = moving_average(panel.overall_cases.row(i).transpose(), window).transpose();
    }
    return out;
}

KernelDensitySampler::KernelDensitySampler(std::vector<double> values, double clip_factor)
    : values_(std::move(values)) {
    if (values_.empty()) throw DataError("kernel density needs at least one value");
    const double n = static_cast<double>(values_.size());
    const double mean = std::accumulate(values_.begin(), values_.end(), 0.0) / n;
    double var = 0.0;
    for (double v : values_) var += (v - mean) * (v - mean);
    const double sd = values_.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;

    std::vector<double> sorted = values_;
    std::sort(sorted.begin(), sorted.end());
    auto quantile = [&](double q) {
        const double pos = q * (n - 1.0);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const auto hi = std::min(lo + 1, sorted.size() - 1);
        return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
    };
    const double iqr = quantile(0.75) - quantile(0.25);
    double spread = sd;
    if (iqr > 0.0) spread = std::min(sd, iqr / 1.34);
    bandwidth_ = 0.9 * spread * std::pow(n, -0.2);
    const double max_value = sorted.back();
    if (!(bandwidth_ > 0.0)) {
        // Constant calibration data: keep a narrow kernel around the value.
        bandwidth_ = 1e-3 * std::max(std::abs(max_value), 1.0);
    }
    upper_ = clip_factor * max_value;
}

double KernelDensitySampler::mean() const {
    return std::accumulate(values_.begin(), values_.end(), 0.0) / static_cast<double>(values_.size());
}

double KernelDensitySampler::sample(Rng& rng) const {
    std::uniform_int_distribution<std::size_t> pick(0, values_.size() - 1);
    std::normal_distribution<double> kernel(0.0, bandwidth_);
    const double draw = values_[pick(rng)] + kernel(rng);
    return std::clamp(draw, 0.0, std::max(upper_, 0.0));
}

std::vector<KernelDensitySampler> estimate_region_distribution(const RegionPanel& panel, Day first, Day last,
                                                               std::size_t window) {
    const std::size_t begin = panel.day_index(first);
    const std::size_t end = panel.day_index(last);
    if (end < begin) throw DataError("calibration window ends before it starts");
    const std::size_t length = end - begin + 1;
    if (length < kMinCalibrationDays) {
        throw DataError("calibration window has " + std::to_string(length) + " days; at least " +
                        std::to_string(kMinCalibrationDays) + " required");
    }
    const RegionPanel smoothed = smooth_panel(panel, window);
    std::vector<KernelDensitySampler> samplers;
    samplers.reserve(panel.n_regions());
    for (std::size_t i = 0; i < panel.n_regions(); ++i) {
        std::vector<double> values(length);
        for (std::size_t k = 0; k < length; ++k) {
            values[k] = smoothed.overall_cases(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(begin + k));
        }
        samplers.emplace_back(std::move(values));
    }
    return samplers;
}

// ---------------------------------------------------------------------------
// Validation split and errors

CvSplit make_cv_split(std::size_t n_days, Rng& rng) {
    if (n_days < kCvBlockLength) throw ParameterError("cross-validation needs at least 11 days");
    CvSplit split;
    const std::size_t n_blocks = n_days / kCvBlockLength;
    std::uniform_int_distribution<std::size_t> offset(0, kCvBlockLength - 1);
    for (std::size_t b = 0; b < n_blocks; ++b) {
        const std::size_t begin = b * kCvBlockLength;
        split.blocks.emplace_back(begin, begin + kCvBlockLength);
        const std::size_t held_out = begin + offset(rng);
        for (std::size_t d = begin; d < begin + kCvBlockLength; ++d) {
            (d == held_out ? split.validation : split.train).push_back(d);
        }
    }
    for (std::size_t d = n_blocks * kCvBlockLength; d < n_days; ++d) split.train.push_back(d);
    return split;
}

PredictionErrors prediction_error(const Matrix& overall, const Matrix& region_specific, const AdjacencyMatrix& estimate,
                                  std::span<const std::size_t> days) {
    if (overall.rows() != region_specific.rows() || overall.cols() != region_specific.cols()) {
        throw DimensionError("prediction_error: panel shape mismatch");
    }
    if (static_cast<std::size_t>(overall.rows()) != estimate.size()) {
        throw DimensionError("prediction_error: graph size mismatch");
    }
    PredictionErrors out;
    const auto n = static_cast<double>(overall.rows());
    double total = 0.0;
    for (std::size_t day : days) {
        const auto k = static_cast<Eigen::Index>(day);
        if (k >= overall.cols()) throw DimensionError("validation day outside the panel");
        const Vector predicted = solve_sem(estimate, region_specific.col(k));
        const double err = (overall.col(k) - predicted).lpNorm<1>() / n;
        out.days.push_back(day);
        out.errors.push_back(err);
        total += err;
    }
    out.mean = days.empty() ? 0.0 : total / static_cast<double>(days.size());
    return out;
}

PredictionErrors prediction_error(const RegionPanel& panel, const AdjacencyMatrix& estimate, const CvSplit& split) {
    if (!panel.region_specific_cases) throw DataError("prediction error needs region-specific cases");
    return prediction_error(panel.overall_cases, *panel.region_specific_cases, estimate, split.validation);
}

double contribution(const AdjacencyMatrix& estimate, const DecisionVector& selection, const Vector& region_specific) {
    const Vector c = payoff_weights(estimate);
    double total = 0.0;
    for (std::size_t i : selection.indices()) {
        const auto k = static_cast<Eigen::Index>(i);
        total += c[k] * region_specific[k];
    }
    return total;
}

std::vector<RatioRow> naive_comparison(const Matrix& overall, const Matrix& region_specific,
                                       const AdjacencyMatrix& estimate, const std::vector<DecisionVector>& selections,
                                       std::size_t budget) {
    if (overall.rows() != region_specific.rows() || overall.cols() != region_specific.cols()) {
        throw DimensionError("naive_comparison: panel shape mismatch");
    }
    if (selections.size() != static_cast<std::size_t>(overall.cols())) {
        throw DimensionError("naive_comparison: one selection per day required");
    }
    const Vector c = payoff_weights(estimate);
    auto contribution_of = [&](const DecisionVector& x, Eigen::Index day) {
        double total = 0.0;
        for (std::size_t i : x.indices()) total += c[static_cast<Eigen::Index>(i)] * region_specific(static_cast<Eigen::Index>(i), day);
        return total;
    };
    std::vector<RatioRow> rows;
    rows.reserve(selections.size());
    for (std::size_t t = 0; t < selections.size(); ++t) {
        const auto k = static_cast<Eigen::Index>(t);
        RatioRow row;
        row.day = t;
        const double total = overall.col(k).sum();
        if (total > 0.0) {
            const DecisionVector naive = top_s(overall.col(k), budget);
            row.semucb = contribution_of(selections[t], k) / total;
            row.naive = contribution_of(naive, k) / total;
        }
        rows.push_back(row);
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Bandit over the panel

PanelEnvironment::PanelEnvironment(Matrix region_specific, AdjacencyMatrix estimate, double scale)
    : rewards_(std::move(region_specific)), estimate_(std::move(estimate)) {
    if (!(scale > 0.0)) throw ParameterError("reward scale must be positive");
    if (static_cast<std::size_t>(rewards_.rows()) != estimate_.size()) throw DimensionError("panel/graph size mismatch");
    rewards_ /= scale;
}

Observation PanelEnvironment::play(const DecisionVector& x) {
    if (day_ >= static_cast<std::size_t>(rewards_.cols())) throw DataError("panel environment ran past its last day");
    const Vector b = rewards_.col(static_cast<Eigen::Index>(day_++));
    Observation obs;
    obs.z = compute_exogenous(b, x);
    obs.y = solve_sem(estimate_, obs.z);
    return obs;
}

CovidResult run_covid_pipeline(const RegionPanel& raw, const CovidOptions& options) {
    raw.validate();
    const std::size_t n = raw.n_regions();
    if (options.budget < 1 || options.budget > n) throw ConfigError("budget must lie in [1, number of regions]");

    const RegionPanel smoothed = smooth_panel(raw, options.window);
    const auto samplers =
        estimate_region_distribution(raw, options.calibration_first, options.calibration_last, options.window);

    const std::size_t begin = raw.day_index(options.study_first);
    const std::size_t end = raw.day_index(options.study_last);
    if (end < begin) throw ConfigError("study window ends before it starts");
    const std::size_t days = end - begin + 1;
    if (days < kCvBlockLength) throw DataError("study window needs at least 11 days");
    if (days < n) throw DataError("study window shorter than the warm-up of one round per region");

    CovidResult result;
    RegionPanel& study = result.study;
    study.regions = raw.regions;
    study.region_names = raw.region_names;
    study.dates.assign(raw.dates.begin() + static_cast<std::ptrdiff_t>(begin),
                       raw.dates.begin() + static_cast<std::ptrdiff_t>(end + 1));
    study.overall_cases = smoothed.overall_cases.middleCols(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(days));

    Rng rng(options.seed);
    Matrix sampled(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(days));
    for (Eigen::Index t = 0; t < sampled.cols(); ++t) {
        for (Eigen::Index i = 0; i < sampled.rows(); ++i) sampled(i, t) = samplers[static_cast<std::size_t>(i)].sample(rng);
    }
    study.region_specific_cases = sampled;
    const Matrix& y = study.overall_cases;
    const Matrix& z = *study.region_specific_cases;

    result.split = make_cv_split(days, rng);
    const Matrix z_train = select_columns(z, result.split.train);
    const Matrix y_train = select_columns(y, result.split.train);
    const RegressionData train = RegressionData::from_history(z_train, y_train);

    SolverSettings solver = options.solver;
    solver.feasible_set = FeasibleSet::NonnegZeroDiagonal;
    auto fit = [&](double lambda) { return estimate_adjacency(train, {RegularizerKind::Dtv, lambda}, solver); };
    result.grid = grid_search(options.lambda_grid, [&](double lambda) {
        return prediction_error(y, z, fit(lambda).adjacency, result.split.validation).mean;
    });
    SolveResult final_fit = fit(result.grid.best_lambda);
    result.estimate = std::move(final_fit.adjacency);
    result.estimate_rescaled = final_fit.rescaled;
    result.errors = prediction_error(y, z, result.estimate, result.split.validation);
    result.baseline_errors =
        prediction_error(y, z, AdjacencyMatrix::zeros(n, StructureMode::GeneralDirected), result.split.validation);

    // Rewards are rescaled into [0, 1]; the DTV weight follows so the
    // penalty keeps its strength relative to the residual.
    const double scale = std::max(z.maxCoeff(), std::numeric_limits<double>::min());
    PanelEnvironment env(z, result.estimate, scale);
    SemUcbOptions bandit;
    bandit.regularizer = {RegularizerKind::Dtv, result.grid.best_lambda / scale};
    bandit.solver = solver;
    SemUcbPolicy policy(n, options.budget, bandit, rng);
    for (std::size_t t = 1; t <= days; ++t) result.selections.push_back(play_round(policy, t, env));

    result.ratios = naive_comparison(y, z, result.estimate, result.selections, options.budget);
    double semucb_total = 0.0;
    double naive_total = 0.0;
    std::size_t counted = 0;
    for (const RatioRow& row : result.ratios) {
        if (row.day < n || !row.semucb || !row.naive) continue;
        semucb_total += *row.semucb;
        naive_total += *row.naive;
        ++counted;
    }
    if (counted > 0) {
        result.mean_semucb_ratio = semucb_total / static_cast<double>(counted);
        result.mean_naive_ratio = naive_total / static_cast<double>(counted);
    }
    return result;
}

void emit_covid_reports(const CovidResult& result, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
    const RegionPanel& study = result.study;

    write_panel_csv(study, dir / "panel_smoothed.csv");
    {
        auto out = open_output(dir / "errors.csv");
        out << "day,error\n";
        for (std::size_t k = 0; k < result.errors.days.size(); ++k) {
            out << format_iso_date(study.dates[result.errors.days[k]]) << ',' << format_number(result.errors.errors[k])
                << '\n';
        }
    }
    {
        auto out = open_output(dir / "selections.csv");
        out << "day,region,selected\n";
        for (std::size_t t = 0; t < result.selections.size(); ++t) {
            for (std::size_t i = 0; i < study.n_regions(); ++i) {
                out << format_iso_date(study.dates[t]) << ',' << study.regions[i] << ','
                    << (result.selections[t].selected(i) ? 1 : 0) << '\n';
            }
        }
    }
    {
        auto out = open_output(dir / "ratios.csv");
        out << "day,semucb_ratio,naive_ratio\n";
        for (const RatioRow& row : result.ratios) {
            out << format_iso_date(study.dates[row.day]) << ',' << (row.semucb ? format_number(*row.semucb) : "") << ','
                << (row.naive ? format_number(*row.naive) : "") << '\n';
        }
    }

    nlohmann::json summary;
    summary["regions"] = study.regions;
    if (!study.region_names.empty()) summary["region_names"] = study.region_names;
    summary["best_lambda"] = result.grid.best_lambda;
    nlohmann::json grid = nlohmann::json::array();
    for (const auto& row : result.grid.table) grid.push_back({{"lambda", row.lambda}, {"mean_error", row.score}});
    summary["lambda_table"] = std::move(grid);
    summary["mean_error"] = result.errors.mean;
    summary["baseline_mean_error"] = result.baseline_errors.mean;
    summary["estimate_rescaled"] = result.estimate_rescaled;
    summary["mean_semucb_ratio"] = result.mean_semucb_ratio;
    summary["mean_naive_ratio"] = result.mean_naive_ratio;
    summary["contribution_definition"] =
        "interpretation: contribution of a set S on day t is 1^T (I - A_hat)^{-1} diag(1_S) z_t";
    const Matrix& a = result.estimate.weights();
    nlohmann::json adjacency = nlohmann::json::array();
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        std::vector<double> row(static_cast<std::size_t>(a.cols()));
        for (Eigen::Index j = 0; j < a.cols(); ++j) row[static_cast<std::size_t>(j)] = a(i, j);
        adjacency.push_back(row);
    }
    summary["estimated_adjacency"] = std::move(adjacency);
    auto out = open_output(dir / "covid_summary.json");
    out << summary.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Synthetic panel

Matrix synthetic_cyclic_adjacency() {
    Matrix a = Matrix::Zero(5, 5);
    a(1, 0) = 0.35;
    a(2, 0) = 0.30;
    a(3, 0) = 0.30;
    a(4, 0) = 0.25;
    a(2, 1) = 0.10;
    a(3, 2) = 0.10;
    a(1, 3) = 0.10;
    a(0, 4) = 0.20;
    return a * (0.5 / spectral_radius(a));
}

SyntheticPanel make_synthetic_panel(const SyntheticPanelSpec& spec, const Matrix& adjacency) {
    const std::size_t n = spec.base_rates.size();
    if (static_cast<std::size_t>(adjacency.rows()) != n || static_cast<std::size_t>(adjacency.cols()) != n) {
        throw DimensionError("synthetic panel: adjacency size differs from the number of base rates");
    }
    const AdjacencyMatrix graph(adjacency, StructureMode::GeneralDirected);
    const std::size_t total = spec.calibration_days + spec.study_days;
    Rng rng(spec.seed);
    std::normal_distribution<double> noise(0.0, 1.0);

    SyntheticPanel out;
    RegionPanel& panel = out.panel;
    for (std::size_t i = 0; i < n; ++i) panel.regions.push_back("R" + std::to_string(i + 1));
    panel.overall_cases.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(total));
    Matrix specific(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(total));
    for (std::size_t t = 0; t < total; ++t) {
        panel.dates.push_back(spec.first_day + std::chrono::days{t});
        Vector z(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) {
            const double base = spec.base_rates[i];
            z[static_cast<Eigen::Index>(i)] = std::max(0.0, base * (1.0 + spec.relative_spread * noise(rng)));
        }
        const auto k = static_cast<Eigen::Index>(t);
        specific.col(k) = z;
        panel.overall_cases.col(k) = t < spec.calibration_days ? z : solve_sem(graph, z);
    }
    panel.region_specific_cases = std::move(specific);
    out.adjacency = adjacency;
    out.calibration_first = panel.dates.front();
    out.calibration_last = panel.dates[spec.calibration_days - 1];
    out.study_first = panel.dates[spec.calibration_days];
    out.study_last = panel.dates.back();
    return out;
}

}  // namespace causalbandit
