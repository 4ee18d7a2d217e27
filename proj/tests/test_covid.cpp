#include "support.hpp"

#include <causalbandit/covid.hpp>

#include <doctest.h>

#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

using namespace cbtest;

namespace {

std::string panel_csv(std::size_t regions, std::size_t days) {
    std::ostringstream out;
    out << "date,region,new_cases\n";
    const Day first = parse_iso_date("2020-08-10");
    for (std::size_t t = 0; t < days; ++t) {
        for (std::size_t i = 0; i < regions; ++i) {
            out << format_iso_date(first + std::chrono::days{t}) << ",R" << i << ',' << (t * 3 + i) << '\n';
        }
    }
    return out.str();
}

RegionPanel parse(const std::string& text) {
    std::istringstream in(text);
    return parse_panel_csv(in);
}

Vector series(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index k = 0;
    for (double x : v) out[k++] = x;
    return out;
}

}  // namespace

TEST_SUITE("ingestion") {
    TEST_CASE("dense panel shape") {
        const RegionPanel p = parse(panel_csv(21, 66));
        CHECK(p.n_regions() == 21);
        CHECK(p.n_days() == 66);
        CHECK(p.overall_cases.rows() == 21);
        CHECK(p.overall_cases.cols() == 66);
        CHECK(p.clipped_negatives == 0);
        CHECK_NOTHROW(p.validate());
    }

    TEST_CASE("missing cell names the date and region") {
        std::string text = panel_csv(3, 4);
        const std::string row = "2020-08-12,R1,7\n";
        text.erase(text.find(row), row.size());
        try {
            parse(text);
            FAIL("expected a data error");
        } catch (const DataError& e) {
            const std::string msg = e.what();
            CHECK(msg.find("2020-08-12") != std::string::npos);
            CHECK(msg.find("R1") != std::string::npos);
        }
    }

    TEST_CASE("negative counts are clipped and counted") {
        std::string text = panel_csv(2, 3);
        const std::string row = "2020-08-11,R0,3\n";
        text.replace(text.find(row), row.size(), "2020-08-11,R0,-5\n");
        const RegionPanel p = parse(text);
        CHECK(p.clipped_negatives == 1);
        CHECK(p.overall_cases(0, 1) == 0.0);
    }

    TEST_CASE("malformed inputs") {
        CHECK_THROWS_AS(parse("day,region,cases\n"), DataError);
        CHECK_THROWS_AS(parse("date,region,new_cases\n"), DataError);
        CHECK_THROWS_AS(parse("date,region,new_cases\n2020-13-01,A,1\n"), DataError);
        CHECK_THROWS_AS(parse("date,region,new_cases\n2020-01-01,A,x\n"), DataError);
        CHECK_THROWS_AS(parse("date,region,new_cases\n2020-01-01,A,1\n2020-01-01,A,2\n"), DataError);
        // Non-daily gap.
        CHECK_THROWS_AS(parse("date,region,new_cases\n2020-01-01,A,1\n2020-01-03,A,2\n"), DataError);
    }

    TEST_CASE("round trip through the writer") {
        const RegionPanel p = parse(panel_csv(4, 9));
        std::ostringstream out;
        write_panel_csv(p, out);
        const RegionPanel back = parse(out.str());
        CHECK(back.regions == p.regions);
        CHECK(back.dates == p.dates);
        CHECK(back.overall_cases == p.overall_cases);
    }

    TEST_CASE("region names") {
        RegionPanel p = parse(panel_csv(2, 2));
        const auto dir = scratch_dir("regions");
        {
            std::ofstream f(dir / "regions.csv");
            f << "abbreviation,name\nR0,Region Zero\n";
        }
        apply_region_names(p, load_region_names(dir / "regions.csv"));
        CHECK(p.region_names == std::vector<std::string>{"Region Zero", "R1"});
    }

    TEST_CASE("ISO dates") {
        CHECK(format_iso_date(parse_iso_date("2020-02-29")) == "2020-02-29");
        CHECK_THROWS_AS(parse_iso_date("2021-02-29"), DataError);
        CHECK_THROWS_AS(parse_iso_date("2020-2-01"), DataError);
    }
}

TEST_SUITE("smoothing") {
    TEST_CASE("constant series is unchanged") {
        const Vector v = Vector::Constant(12, 4.0);
        CHECK(moving_average(v, 7) == v);
    }

    TEST_CASE("partial windows") {
        const Vector out = moving_average(series({0, 7, 14}), 7);
        CHECK(out[0] == 0.0);
        CHECK(out[1] == doctest::Approx(3.5));
        CHECK(out[2] == doctest::Approx(7.0));
    }

    TEST_CASE("impulse leaves the window") {
        const Vector out = moving_average(series({7, 0, 0, 0, 0, 0, 0, 0}), 7);
        CHECK(out[6] == doctest::Approx(1.0));
        CHECK(out[7] == doctest::Approx(0.0).epsilon(1e-15));
    }
}

TEST_SUITE("kernel density") {
    TEST_CASE("constant calibration values concentrate the sampler") {
        const KernelDensitySampler k(std::vector<double>(20, 12.0));
        Rng rng(1);
        double sum = 0.0;
        double sum_sq = 0.0;
        const int draws = 10000;
        for (int i = 0; i < draws; ++i) {
            const double v = k.sample(rng);
            sum += v;
            sum_sq += v * v;
        }
        const double mean = sum / draws;
        const double sd = std::sqrt(std::max(0.0, sum_sq / draws - mean * mean));
        CHECK(sd < k.bandwidth() * 1.1);
        CHECK(mean == doctest::Approx(12.0).epsilon(1e-3));
    }

    TEST_CASE("draws are nonnegative and clipped") {
        const KernelDensitySampler k({0.0, 0.5, 1.0, 0.1, 3.0, 0.0, 0.2});
        Rng rng(2);
        for (int i = 0; i < 10000; ++i) {
            const double v = k.sample(rng);
            CHECK(v >= 0.0);
            CHECK(v <= k.upper_clip());
        }
        CHECK(k.upper_clip() == doctest::Approx(4.5));
    }

    TEST_CASE("sample mean follows the calibration mean") {
        Rng rng(3);
        std::uniform_real_distribution<double> u(10.0, 20.0);
        std::vector<double> values(45);
        for (auto& v : values) v = u(rng);
        const KernelDensitySampler k(values);
        double sum = 0.0;
        for (int i = 0; i < 100000; ++i) sum += k.sample(rng);
        CHECK(std::abs(sum / 100000.0 - k.mean()) < 0.02 * k.mean());
    }

    TEST_CASE("calibration window must span a week") {
        const RegionPanel p = parse(panel_csv(3, 20));
        CHECK_THROWS_AS(estimate_region_distribution(p, p.dates[0], p.dates[5]), DataError);
        CHECK(estimate_region_distribution(p, p.dates[0], p.dates[6]).size() == 3);
    }
}

TEST_SUITE("validation split") {
    TEST_CASE("sixty-six days") {
        Rng rng(4);
        const CvSplit s = make_cv_split(66, rng);
        CHECK(s.blocks.size() == 6);
        CHECK(s.validation.size() == 6);
        CHECK(s.train.size() == 60);
    }

    TEST_CASE("single block") {
        Rng rng(5);
        const CvSplit s = make_cv_split(11, rng);
        CHECK(s.blocks.size() == 1);
        CHECK(s.train.size() == 10);
        CHECK(s.validation.size() == 1);
    }

    TEST_CASE("one validation day per block across many draws") {
        Rng rng(6);
        for (int k = 0; k < 1000; ++k) {
            const CvSplit s = make_cv_split(66, rng);
            for (std::size_t b = 0; b < s.blocks.size(); ++b) {
                CHECK(s.validation[b] >= s.blocks[b].first);
                CHECK(s.validation[b] < s.blocks[b].second);
                if (b > 0) CHECK(s.validation[b] - s.validation[b - 1] >= 1);
            }
        }
    }

    TEST_CASE("train and validation partition every horizon") {
        Rng rng(7);
        for (std::size_t t = 11; t <= 200; ++t) {
            const CvSplit s = make_cv_split(t, rng);
            std::set<std::size_t> all(s.train.begin(), s.train.end());
            for (std::size_t d : s.validation) {
                CHECK(all.count(d) == 0);
                all.insert(d);
            }
            CHECK(all.size() == t);
            CHECK(s.blocks.size() == t / 11);
            CHECK(s.validation.size() == t / 11);
        }
        CHECK_THROWS_AS(make_cv_split(10, rng), ParameterError);
    }
}

TEST_SUITE("prediction error and contributions") {
    TEST_CASE("generating graph on exact data gives zero error") {
        const Matrix a = synthetic_cyclic_adjacency();
        const SyntheticPanel sp = make_synthetic_panel({}, a);
        const AdjacencyMatrix graph(a, StructureMode::GeneralDirected);
        const std::size_t begin = sp.panel.day_index(sp.study_first);
        const Matrix y = sp.panel.overall_cases.rightCols(66);
        const Matrix z = sp.panel.region_specific_cases->rightCols(66);
        CHECK(begin == 30);
        std::vector<std::size_t> days(66);
        std::iota(days.begin(), days.end(), std::size_t{0});
        CHECK(prediction_error(y, z, graph, days).mean < 1e-10);
    }

    TEST_CASE("zero graph measures the raw gap") {
        const Matrix y = (Matrix(2, 2) << 3.0, 5.0, 1.0, 2.0).finished();
        const Matrix z = (Matrix(2, 2) << 1.0, 5.0, 1.0, 0.0).finished();
        const std::vector<std::size_t> days{0, 1};
        const PredictionErrors e = prediction_error(y, z, AdjacencyMatrix::zeros(2, StructureMode::GeneralDirected), days);
        CHECK(e.errors[0] == doctest::Approx(1.0));
        CHECK(e.errors[1] == doctest::Approx(1.0));
        CHECK(e.mean == doctest::Approx(1.0));
    }

    TEST_CASE("single cell reduces to an absolute error") {
        const Matrix y = Matrix::Constant(1, 1, 4.0);
        const Matrix z = Matrix::Constant(1, 1, 6.5);
        const std::vector<std::size_t> days{0};
        CHECK(prediction_error(y, z, AdjacencyMatrix::zeros(1, StructureMode::GeneralDirected), days).mean ==
              doctest::Approx(2.5));
    }

    TEST_CASE("contributions of all regions sum to the predicted total") {
        const AdjacencyMatrix graph(synthetic_cyclic_adjacency(), StructureMode::GeneralDirected);
        const Vector z = series({30, 45, 40, 35, 25});
        DecisionVector all(5, 5);
        for (std::size_t i = 0; i < 5; ++i) all.select(i);
        CHECK(contribution(graph, all, z) == doctest::Approx(solve_sem(graph, z).sum()).epsilon(1e-12));
    }

    TEST_CASE("zero graph: naive ranking attains the best ratio") {
        Rng rng(8);
        Matrix z(4, 10);
        for (auto& v : z.reshaped()) v = std::uniform_real_distribution<double>(1.0, 9.0)(rng);
        std::vector<DecisionVector> picks;
        for (int t = 0; t < 10; ++t) picks.push_back(random_subset(4, 2, rng));
        const auto rows = naive_comparison(z, z, AdjacencyMatrix::zeros(4, StructureMode::GeneralDirected), picks, 2);
        for (const auto& r : rows) {
            REQUIRE(r.naive.has_value());
            CHECK(*r.naive >= *r.semucb - 1e-15);
        }
    }

    TEST_CASE("ratios stay in the unit interval on consistent data") {
        const Matrix a = synthetic_cyclic_adjacency();
        const SyntheticPanel sp = make_synthetic_panel({}, a);
        const AdjacencyMatrix graph(a, StructureMode::GeneralDirected);
        const Matrix y = sp.panel.overall_cases.rightCols(66);
        const Matrix z = sp.panel.region_specific_cases->rightCols(66);
        Rng rng(9);
        std::vector<DecisionVector> picks;
        for (int t = 0; t < 66; ++t) picks.push_back(random_subset(5, 2, rng));
        for (const auto& r : naive_comparison(y, z, graph, picks, 2)) {
            CHECK(*r.semucb >= 0.0);
            CHECK(*r.semucb <= 1.0 + 1e-12);
            CHECK(*r.naive <= 1.0 + 1e-12);
        }
    }

    TEST_CASE("a day without cases has no ratio") {
        const Matrix y = Matrix::Zero(2, 1);
        const Matrix z = Matrix::Zero(2, 1);
        const std::vector<DecisionVector> picks{DecisionVector::from_indices(2, 1, std::vector<std::size_t>{0})};
        const auto rows = naive_comparison(y, z, AdjacencyMatrix::zeros(2, StructureMode::GeneralDirected), picks, 1);
        CHECK_FALSE(rows[0].semucb.has_value());
        CHECK_FALSE(rows[0].naive.has_value());
    }
}

TEST_SUITE("pipeline") {
    TEST_CASE("synthetic cyclic panel") {
        const Matrix a = synthetic_cyclic_adjacency();
        CHECK(spectral_radius(a) == doctest::Approx(0.5).epsilon(1e-12));
        SyntheticPanel sp = make_synthetic_panel({}, a);
        sp.panel.region_specific_cases.reset();
        CovidOptions o;
        o.calibration_first = sp.calibration_first;
        o.calibration_last = sp.calibration_last;
        o.study_first = sp.study_first;
        o.study_last = sp.study_last;
        o.budget = 2;
        const CovidResult r = run_covid_pipeline(sp.panel, o);
        CHECK(r.study.n_days() == 66);
        CHECK(r.split.validation.size() == 6);
        CHECK(r.grid.table.size() == o.lambda_grid.size());
        CHECK(r.errors.mean < r.baseline_errors.mean);
        CHECK(r.mean_semucb_ratio > r.mean_naive_ratio);
        CHECK(r.selections.size() == 66);
        CHECK(r.estimate.weights().diagonal().isZero(0.0));

        const auto dir = scratch_dir("covid");
        emit_covid_reports(r, dir);
        for (const char* f : {"panel_smoothed.csv", "errors.csv", "selections.csv", "ratios.csv", "covid_summary.json"}) {
            CHECK(std::filesystem::exists(dir / f));
        }
    }

    TEST_CASE("study window shorter than the warm-up") {
        const RegionPanel p = parse(panel_csv(21, 40));
        CovidOptions o;
        o.calibration_first = p.dates[0];
        o.calibration_last = p.dates[9];
        o.study_first = p.dates[20];
        o.study_last = p.dates[39];
        CHECK_THROWS_AS(run_covid_pipeline(p, o), DataError);
    }
}
