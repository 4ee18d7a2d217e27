// cbandit: command-line front end for the causal semi-bandit toolkit.

#include <causalbandit/covid.hpp>
#include <causalbandit/envgen.hpp>
#include <causalbandit/errors.hpp>
#include <causalbandit/harness.hpp>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace cb = causalbandit;
using nlohmann::json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct CommonFlags {
    std::string config;
    std::string out;
    std::vector<std::uint64_t> seeds;
    std::vector<std::string> policies;
    std::size_t horizon = 0;
    bool quiet = false;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config, "JSON configuration file");
    cmd->add_option("--out", flags.out, "Output directory");
    cmd->add_option("--seeds", flags.seeds, "Comma-separated run seeds")->delimiter(',');
    cmd->add_option("--policy", flags.policies, "Comma-separated policy names")->delimiter(',');
    cmd->add_option("--horizon", flags.horizon, "Number of rounds T");
    cmd->add_flag("--quiet", flags.quiet, "Suppress progress output");
}

cb::ExperimentConfig resolve_config(const CommonFlags& flags) {
    cb::ExperimentConfig config = flags.config.empty() ? cb::ExperimentConfig{} : cb::load_config(flags.config);
    if (!flags.seeds.empty()) config.seeds = flags.seeds;
    if (!flags.policies.empty()) config.policies = flags.policies;
    if (flags.horizon > 0) config.horizon = flags.horizon;
    if (!flags.out.empty()) config.output_dir = flags.out;
    config.validate();
    return config;
}

int cmd_gen_env(const CommonFlags& flags, std::optional<std::size_t> n_arms, std::optional<double> density,
                std::optional<std::uint64_t> seed) {
    cb::ExperimentConfig config = flags.config.empty() ? cb::ExperimentConfig{} : cb::load_config(flags.config);
    cb::EnvSpec spec = config.env_spec.value_or(cb::EnvSpec{});
    if (n_arms) spec.n_arms = *n_arms;
    if (density) spec.edge_density = *density;
    if (seed) spec.seed = *seed;
    spec.validate();
    const cb::Environment env = cb::generate_environment(spec);
    const std::filesystem::path path = flags.out.empty() ? "environment.json" : flags.out;
    cb::save_environment(env, path);
    if (!flags.quiet) {
        std::cout << "wrote " << path.string() << " (N=" << env.size()
                  << ", longest path=" << cb::longest_path_length(env.model.adjacency()) << ")\n";
    }
    return 0;
}

int cmd_run(const CommonFlags& flags) {
    const cb::ExperimentConfig config = resolve_config(flags);
    if (!flags.quiet) {
        std::cout << "running " << config.policies.size() << " policies x " << config.seeds.size()
                  << " seeds, T=" << config.horizon << '\n';
    }
    const cb::ExperimentResult result = cb::run_experiment(config);
    cb::emit_reports(result, config, config.output_dir);
    if (!flags.quiet) {
        for (const auto& s : result.summaries()) {
            std::cout << s.policy << ": final regret " << s.mean_final_regret << " +/- " << s.std_final_regret << '\n';
        }
        std::cout << "reports in " << config.output_dir.string() << '\n';
    }
    return 0;
}

int cmd_grid(const CommonFlags& flags) {
    const cb::ExperimentConfig config = resolve_config(flags);
    const cb::GridResult grid = cb::grid_search_lambda(config);
    std::filesystem::create_directories(config.output_dir);
    std::ofstream out(config.output_dir / "grid.csv", std::ios::binary);
    if (!out) throw cb::IoError("cannot write grid.csv");
    out << "lambda,score\n";
    for (const auto& row : grid.table) out << cb::format_number(row.lambda) << ',' << cb::format_number(row.score) << '\n';
    if (!flags.quiet) {
        for (const auto& row : grid.table) std::cout << "lambda " << row.lambda << "  mse " << row.score << '\n';
        std::cout << "best lambda " << grid.best_lambda << '\n';
    }
    return 0;
}

int cmd_bound(const CommonFlags& flags, const std::string& env_path, std::size_t budget,
              std::optional<double> w_max) {
    if (env_path.empty()) throw cb::ConfigError("bound needs --env");
    const cb::Environment env = cb::load_environment(env_path);
    const auto& model = env.model;
    if (budget < 1 || budget > env.size()) throw cb::ConfigError("--budget must lie in [1, N]");
    const std::size_t horizon = flags.horizon > 0 ? flags.horizon : 4000;

    const cb::GapStatistics gaps = cb::compute_gap_statistics(model.adjacency(), model.mean_rewards(), budget);
    cb::BoundInputs in;
    // Without a measured trajectory the largest true payoff weight stands in for w_max.
    in.w_max = w_max ? *w_max : cb::payoff_weights(model.adjacency()).maxCoeff();
    in.budget = budget;
    in.longest_path = cb::longest_path_length(model.adjacency());
    in.n_arms = env.size();
    in.delta_min = gaps.delta_min;
    in.delta_max = gaps.delta_max;
    in.horizon = static_cast<double>(horizon);
    const double bound = cb::theorem1_bound(in);

    json doc{{"bound", bound},          {"w_max", in.w_max},   {"budget", budget},
             {"longest_path", in.longest_path}, {"n_arms", in.n_arms}, {"delta_min", in.delta_min},
             {"delta_max", in.delta_max}, {"horizon", horizon}};
    if (!flags.out.empty()) {
        std::filesystem::create_directories(flags.out);
        std::ofstream out(std::filesystem::path(flags.out) / "bound.json");
        out << doc.dump(2) << '\n';
    }
    if (!flags.quiet) std::cout << doc.dump(2) << '\n';
    return 0;
}

struct CovidFlags {
    std::string input;
    std::string regions;
    std::string calibration;
    std::string study;
    bool synthetic = false;
    std::optional<std::size_t> budget;
    std::optional<std::uint64_t> seed;
};

std::pair<cb::Day, cb::Day> parse_window(const std::string& text, const char* what) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw cb::ConfigError(std::string(what) + " must be FIRST:LAST");
    try {
        return {cb::parse_iso_date(text.substr(0, colon)), cb::parse_iso_date(text.substr(colon + 1))};
    } catch (const cb::DataError& e) {
        throw cb::ConfigError(std::string(what) + ": " + e.what());
    }
}

int cmd_covid(const CommonFlags& flags, CovidFlags covid) {
    cb::CovidOptions options;
    if (!flags.config.empty()) {
        std::ifstream in(flags.config);
        if (!in) throw cb::ConfigError("cannot read " + flags.config);
        json doc;
        try {
            doc = json::parse(in);
        } catch (const json::exception& e) {
            throw cb::ConfigError(std::string("covid config: ") + e.what());
        }
        const auto base = std::filesystem::path(flags.config).parent_path();
        auto relative = [&](const std::string& p) { return (base / p).string(); };
        for (const auto& [key, value] : doc.items()) {
            if (key == "input" && covid.input.empty()) covid.input = relative(value.get<std::string>());
            else if (key == "regions" && covid.regions.empty()) covid.regions = relative(value.get<std::string>());
            else if (key == "calibration" && covid.calibration.empty()) covid.calibration = value.get<std::string>();
            else if (key == "study" && covid.study.empty()) covid.study = value.get<std::string>();
            else if (key == "budget") options.budget = value.get<std::size_t>();
            else if (key == "window") options.window = value.get<std::size_t>();
            else if (key == "seed") options.seed = value.get<std::uint64_t>();
            else if (key == "lambda_grid") options.lambda_grid = value.get<std::vector<double>>();
            else if (key == "synthetic") covid.synthetic = covid.synthetic || value.get<bool>();
            else if (key != "input" && key != "regions" && key != "calibration" && key != "study") {
                throw cb::ConfigError("unknown covid config key '" + key + "'");
            }
        }
    }
    if (covid.budget) options.budget = *covid.budget;
    if (covid.seed) options.seed = *covid.seed;
    if (!flags.seeds.empty()) options.seed = flags.seeds.front();

    cb::RegionPanel panel;
    if (covid.synthetic) {
        const cb::SyntheticPanel synthetic = cb::make_synthetic_panel({}, cb::synthetic_cyclic_adjacency());
        panel = synthetic.panel;
        panel.region_specific_cases.reset();
        options.calibration_first = synthetic.calibration_first;
        options.calibration_last = synthetic.calibration_last;
        options.study_first = synthetic.study_first;
        options.study_last = synthetic.study_last;
        if (!covid.budget && flags.config.empty()) options.budget = 2;
    } else {
        if (covid.input.empty()) throw cb::ConfigError("covid needs --input or --synthetic");
        panel = cb::ingest_csv(covid.input);
    }
    if (!covid.calibration.empty()) {
        std::tie(options.calibration_first, options.calibration_last) = parse_window(covid.calibration, "--calibration");
    }
    if (!covid.study.empty()) std::tie(options.study_first, options.study_last) = parse_window(covid.study, "--study");
    if (!covid.synthetic && (covid.calibration.empty() || covid.study.empty())) {
        throw cb::ConfigError("covid needs --calibration and --study windows");
    }
    if (!covid.regions.empty()) cb::apply_region_names(panel, cb::load_region_names(covid.regions));
    if (!flags.quiet && panel.clipped_negatives > 0) {
        std::cerr << "warning: clipped " << panel.clipped_negatives << " negative counts to zero\n";
    }

    const cb::CovidResult result = cb::run_covid_pipeline(panel, options);
    const std::filesystem::path dir = flags.out.empty() ? "covid_out" : flags.out;
    cb::emit_covid_reports(result, dir);
    if (!flags.quiet) {
        std::cout << "best lambda " << result.grid.best_lambda << ", validation error " << result.errors.mean
                  << " (no-graph baseline " << result.baseline_errors.mean << ")\n"
                  << "mean contribution ratio: semucb " << result.mean_semucb_ratio << ", naive "
                  << result.mean_naive_ratio << '\n'
                  << "reports in " << dir.string() << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Causal combinatorial semi-bandit toolkit"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::optional<std::size_t> n_arms;
    std::optional<double> density;
    std::optional<std::uint64_t> env_seed;
    auto* gen = app.add_subcommand("gen-env", "Generate a random environment and write it as JSON");
    add_common(gen, flags);
    gen->add_option("--n-arms", n_arms, "Number of arms N");
    gen->add_option("--density", density, "Edge density");
    gen->add_option("--env-seed", env_seed, "Environment seed");

    auto* run = app.add_subcommand("run", "Run an experiment and write regret/MSE/selection reports");
    add_common(run, flags);

    auto* grid = app.add_subcommand("grid", "Grid-search the regularization weight");
    add_common(grid, flags);

    std::string env_path;
    std::size_t budget = 6;
    std::optional<double> w_max;
    auto* bound = app.add_subcommand("bound", "Evaluate the regret upper bound for an environment");
    add_common(bound, flags);
    bound->add_option("--env", env_path, "Environment JSON file")->required();
    bound->add_option("--budget", budget, "Budget s");
    bound->add_option("--w-max", w_max, "Measured w_max (defaults to the largest true payoff weight)");

    CovidFlags covid;
    auto* covid_cmd = app.add_subcommand("covid", "Run the regional case-count pipeline");
    add_common(covid_cmd, flags);
    covid_cmd->add_option("--input", covid.input, "Panel CSV (date,region,new_cases)");
    covid_cmd->add_option("--regions", covid.regions, "Region name mapping CSV (abbreviation,name)");
    covid_cmd->add_option("--calibration", covid.calibration, "Calibration window FIRST:LAST (ISO dates)");
    covid_cmd->add_option("--study", covid.study, "Study window FIRST:LAST (ISO dates)");
    covid_cmd->add_option("--budget", covid.budget, "Regions selected per day");
    covid_cmd->add_option("--seed", covid.seed, "Sampling seed");
    covid_cmd->add_flag("--synthetic", covid.synthetic, "Use the built-in synthetic five-region panel");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*gen) return cmd_gen_env(flags, n_arms, density, env_seed);
        if (*run) return cmd_run(flags);
        if (*grid) return cmd_grid(flags);
        if (*bound) return cmd_bound(flags, env_path, budget, w_max);
        if (*covid_cmd) return cmd_covid(flags, covid);
    } catch (const cb::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const cb::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
