// mseregion: command-line front end for MSE region analysis.
//
// Exit codes: 0 success / no witness, 2 input error, 3 nonconvexity witness
// (or failed convexity certificate).

#include "mseregion/counterexample.hpp"
#include "mseregion/io.hpp"
#include "mseregion/kkt_solver.hpp"
#include "mseregion/region_analysis.hpp"
#include "mseregion/two_user_boundary.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace mseregion;
using io::json;

constexpr int exit_ok = 0;
constexpr int exit_input = 2;
constexpr int exit_witness = 3;

constexpr double default_sigma2 = 1.0;
constexpr double default_power = 10.0;

struct CommonOptions {
    std::optional<double> sigma2;
    double power = default_power;
    std::optional<std::uint64_t> seed;
    unsigned threads = 0;
    std::string out;

    [[nodiscard]] double noise() const { return sigma2.value_or(default_sigma2); }
    [[nodiscard]] SystemConfig config() const { return {noise(), power}; }
};

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag)
{
    if (flag) {
        return *flag;
    }
    if (const char* env = std::getenv("MSEREGION_SEED"); env != nullptr && *env != '\0') {
        try {
            std::size_t used = 0;
            const auto value = std::stoull(env, &used);
            if (used == std::string(env).size()) {
                return value;
            }
        } catch (const std::exception&) {
        }
        throw InputError("MSEREGION_SEED must be an unsigned integer");
    }
    return 0;
}

json manifest(const std::string& command, const CommonOptions& common, json inputs, std::optional<std::uint64_t> seed)
{
    json m = {{"tool", "mseregion"},
              {"version", MSEREGION_VERSION},
              {"command", command},
              {"inputs", std::move(inputs)},
              {"power_budget", common.power},
              {"sigma2_assumed", common.noise()},
              {"sigma2_defaulted", !common.sigma2.has_value()},
              {"tolerances",
               {{"feasibility_rel", 1e-9},
                {"kkt", 1e-7},
                {"active_rel", 1e-8},
                {"member", 1e-6},
                {"discriminant_rel", boundary_tolerance::discriminant_rel},
                {"colinear_rel", boundary_tolerance::colinear_rel},
                {"cluster_radius_rel", 1e-3}}}};
    m["seed"] = seed ? json(*seed) : json(nullptr);
    return m;
}

void emit(const std::string& path, const std::string& text)
{
    if (path.empty() || path == "-") {
        std::cout << text;
    } else {
        io::write_text(path, text);
    }
}

void emit_json(const std::string& path, const json& doc) { emit(path, doc.dump(2) + "\n"); }

/// Parses "re+imi" style scalars: "1", "-0.5", "2i", "-i", "1.5-2e-3i".
Complex parse_complex(std::string token)
{
    std::erase_if(token, [](unsigned char c) { return std::isspace(c); });
    detail::require(!token.empty(), "empty complex scalar");
    auto to_double = [&](const std::string& s) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            throw InputError("cannot parse complex scalar \"" + token + "\"");
        }
        detail::require(used == s.size(), "cannot parse complex scalar \"" + token + "\"");
        return v;
    };
    if (token.back() != 'i' && token.back() != 'j') {
        return {to_double(token), 0.0};
    }
    const std::string body = token.substr(0, token.size() - 1);
    std::size_t split = std::string::npos;
    for (std::size_t i = body.size(); i-- > 1;) {
        if ((body[i] == '+' || body[i] == '-') && body[i - 1] != 'e' && body[i - 1] != 'E') {
            split = i;
            break;
        }
    }
    const std::string re = split == std::string::npos ? "" : body.substr(0, split);
    std::string im = split == std::string::npos ? body : body.substr(split);
    if (im.empty() || im == "+") {
        im = "1";
    } else if (im == "-") {
        im = "-1";
    }
    return {re.empty() ? 0.0 : to_double(re), to_double(im)};
}

CVector parse_complex_list(const std::string& text)
{
    std::vector<Complex> values;
    std::stringstream in(text);
    std::string token;
    while (std::getline(in, token, ',')) {
        values.push_back(parse_complex(token));
    }
    detail::require(!values.empty(), "empty channel vector");
    CVector out(static_cast<Eigen::Index>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i) {
        out[static_cast<Eigen::Index>(i)] = values[i];
    }
    return out;
}

/// A JSON array given inline ("[0.2, 0.8]") or as a path to a file holding one.
RVector parse_real_array(const std::string& text, const std::string& what)
{
    const auto first = text.find_first_not_of(" \t");
    const bool inline_array = first != std::string::npos && text[first] == '[';
    const std::string body = inline_array ? text : io::read_text(text);
    return io::real_vector_from_json(io::parse_json(body, what), what);
}

MseTuple parse_tuple(const std::string& text, const std::string& what)
{
    return MseTuple(parse_real_array(text, what));
}

CVector random_channel(Eigen::Index n, std::mt19937_64& rng)
{
    std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
    CVector h(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double re = gauss(rng);
        const double im = gauss(rng);
        h[i] = Complex(re, im);
    }
    return h;
}

std::string boundary_plot_script(const std::string& csv, const SystemConfig& cfg, double eps_min1, double eps_min2)
{
    std::ostringstream s;
    s << "# gnuplot script: MSE of user 2 against MSE of user 1 on the lower-left boundary\n"
      << "set datafile separator ','\n"
      << "set key off\n"
      << "set xlabel 'eps_1'\nset ylabel 'eps_2'\n"
      << "set xrange [0:1.05]\nset yrange [0:1.05]\nset size square\n"
      << "set title 'P_Tx = " << io::format_real(cfg.power_budget()) << ", sigma^2 = "
      << io::format_real(cfg.noise_variance()) << "'\n"
      << "set arrow from " << io::format_real(eps_min1) << ",0 to " << io::format_real(eps_min1)
      << ",1 nohead dashtype 2\n"
      << "set arrow from 0," << io::format_real(eps_min2) << " to 1," << io::format_real(eps_min2)
      << " nohead dashtype 2\n"
      << "set label 'eps_min,1' at " << io::format_real(eps_min1) << ",1.02\n"
      << "set label 'eps_min,2' at 1.01," << io::format_real(eps_min2) << "\n"
      << "plot '" << csv << "' every ::1 using 2:3 with lines lw 2, "
      << "'-' using 1:2 with lines dashtype 3\n"
      << "1 " << io::format_real(eps_min2) << "\n1 1\n" << io::format_real(eps_min1) << " 1\ne\n";
    return s.str();
}

std::string region_plot_script(const std::string& csv, const MseTuple& a, const MseTuple& b)
{
    std::ostringstream s;
    s << "# gnuplot script: sampled three-user MSE region and the segment between two KKT points\n"
      << "set datafile separator ','\n"
      << "set xlabel 'eps_1'\nset ylabel 'eps_2'\nset zlabel 'eps_3'\n"
      << "set xrange [0:1]\nset yrange [0:1]\nset zrange [0:1]\nset view 60,120\n"
      << "splot '" << csv << "' every ::1 using 4:5:6 with points pt 7 ps 0.2 title 'region', "
      << "'-' using 1:2:3 with linespoints lw 3 title 'segment'\n"
      << io::format_real(a[0]) << ' ' << io::format_real(a[1]) << ' ' << io::format_real(a[2]) << '\n'
      << io::format_real(b[0]) << ' ' << io::format_real(b[1]) << ' ' << io::format_real(b[2]) << "\ne\n";
    return s.str();
}

void add_common(CLI::App* cmd, CommonOptions& common, bool with_power = true)
{
    if (with_power) {
        cmd->add_option("--power", common.power, "Total power budget P_Tx")->check(CLI::PositiveNumber);
        cmd->add_option("--sigma2", common.sigma2, "Noise variance per antenna (default 1)")
            ->check(CLI::PositiveNumber);
    }
    cmd->add_option("--threads", common.threads, "Worker cap (0 = available parallelism)");
    cmd->add_option("--out", common.out, "Output file ('-' or empty for stdout)");
}

int run_boundary(const CommonOptions& common, const std::string& channels_path, const std::string& h1_text,
                 const std::string& h2_text, std::size_t samples, const std::string& plot_path)
{
    CVector h1;
    CVector h2;
    json inputs;
    if (!channels_path.empty()) {
        detail::require(h1_text.empty() && h2_text.empty(), "use either --channels or --h1/--h2");
        const ChannelSet channels = io::load_channels(channels_path);
        detail::require(channels.users() == 2,
                        "boundary needs exactly 2 users, file has " + std::to_string(channels.users()));
        h1 = channels.column(0);
        h2 = channels.column(1);
        inputs["channels"] = channels_path;
    } else {
        detail::require(!h1_text.empty() && !h2_text.empty(), "boundary needs --channels or both --h1 and --h2");
        h1 = parse_complex_list(h1_text);
        h2 = parse_complex_list(h2_text);
        inputs["h1"] = h1_text;
        inputs["h2"] = h2_text;
    }
    const SystemConfig cfg = common.config();
    const auto sweep = boundary_sweep(h1, h2, cfg, samples, common.threads);
    emit(common.out, io::boundary_csv(sweep));

    const ConvexityReport report = convexity_certificate(h1, h2, cfg, std::max<std::size_t>(samples, 11));
    if (!common.out.empty() && common.out != "-") {
        json doc = manifest("boundary", common, inputs, std::nullopt);
        doc["samples"] = samples;
        doc["certificate"] = io::to_json(report);
        io::write_text(common.out + ".manifest.json", json{{"manifest", doc}}.dump(2) + "\n");
    }
    if (!plot_path.empty()) {
        const double eps_min1 = sweep.back().eps1;
        const double eps_min2 = sweep.front().eps2;
        const std::string csv = common.out.empty() || common.out == "-" ? "boundary.csv" : common.out;
        io::write_text(plot_path, boundary_plot_script(csv, cfg, eps_min1, eps_min2));
    }
    std::cerr << "classification: " << to_string(report.classification) << "\n"
              << "certified: " << (report.certified ? "true" : "false") << "\n"
              << "worst discriminant: " << io::format_real(report.worst_discriminant) << " at p = "
              << io::format_real(report.worst_p) << "\n";
    return exit_ok;
}

int run_convexity_scan(const CommonOptions& common, std::size_t trials, Eigen::Index dim, std::size_t grid,
                       bool colinear)
{
    detail::require(trials >= 1, "trials must be at least 1");
    detail::require(dim >= 1, "dim must be at least 1");
    detail::require(grid >= 11, "grid must be at least 11");
    const std::uint64_t seed = resolve_seed(common.seed);
    const SystemConfig cfg = common.config();

    // Instances are drawn sequentially so the stream does not depend on threads.
    std::mt19937_64 rng(seed);
    std::vector<std::pair<CVector, CVector>> instances;
    std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
    for (std::size_t t = 0; t < trials; ++t) {
        CVector h1 = random_channel(dim, rng);
        CVector h2;
        if (colinear) {
            const double re = gauss(rng);
            const double im = gauss(rng);
            h2 = Complex(re, im) * h1;
        } else {
            h2 = random_channel(dim, rng);
        }
        instances.emplace_back(std::move(h1), std::move(h2));
    }
    const auto reports = parallel_map<ConvexityReport>(trials, common.threads, [&](std::size_t i) {
        return convexity_certificate(instances[i].first, instances[i].second, cfg, grid);
    });

    json rows = json::array();
    bool all = true;
    std::size_t worst = 0;
    std::size_t affine = 0;
    for (std::size_t i = 0; i < reports.size(); ++i) {
        all = all && reports[i].certified;
        if (reports[i].worst_relative > reports[worst].worst_relative) {
            worst = i;
        }
        affine += reports[i].classification == BoundaryShape::Affine ? 1 : 0;
        json row = io::to_json(reports[i]);
        row["trial"] = i;
        rows.push_back(std::move(row));
    }
    json doc = {{"manifest", manifest("convexity-scan", common, json::object(), seed)},
                {"trials", trials},
                {"dim", dim},
                {"grid", grid},
                {"colinear", colinear},
                {"all_certified", all},
                {"certified_count", std::count_if(reports.begin(), reports.end(), [](const auto& r) { return r.certified; })},
                {"affine_count", affine},
                {"worst_trial", worst},
                {"worst_discriminant", reports[worst].worst_discriminant},
                {"worst_relative", reports[worst].worst_relative},
                {"results", std::move(rows)}};
    emit_json(common.out, doc);
    std::cerr << (all ? "all trials certified" : "certification FAILED") << " (" << trials << " trials";
    if (affine > 0) {
        std::cerr << ", classification Affine for " << affine;
    }
    std::cerr << ")\n";
    return all ? exit_ok : exit_witness;
}

int run_counterexample(const CommonOptions& common, const std::string& region_csv, Eigen::Index grid,
                       std::size_t starts, const std::string& plot_path)
{
    CounterexampleOptions opts;
    opts.seed = resolve_seed(common.seed);
    opts.starts = starts;
    opts.threads = common.threads;
    const CounterexampleReport report = counterexample_suite(opts);
    const double sigma2 = counterexample::noise_variance;

    CommonOptions fixed = common;
    fixed.sigma2 = sigma2;
    fixed.power = counterexample::power_budget;
    json inputs = {{"instance", "H=[[1,0,1],[0,1,1]], w=[0.22,0.54,0.24]"}};
    if (!region_csv.empty()) {
        inputs["region_csv"] = region_csv;
        inputs["grid"] = grid;
        const RegionSampleSet set = sample_region(counterexample::channels(), counterexample::config(), grid,
                                                  SampleMode::Grid, opts.seed, common.threads);
        io::write_text(region_csv, io::region_csv(set, 3));
    }
    if (!plot_path.empty()) {
        const std::string csv = region_csv.empty() ? "region.csv" : region_csv;
        io::write_text(plot_path, region_plot_script(csv, report.triple_1, report.triple_2));
    }
    json doc = io::to_json(report, sigma2);
    doc["manifest"] = manifest("counterexample", fixed, inputs, opts.seed);
    doc["manifest"]["sigma2_defaulted"] = false;
    doc["manifest"]["sigma2_note"] = "noise variance not given with the instance; 1 reproduces the published MSEs";
    emit_json(common.out, doc);

    for (const auto& c : report.checks) {
        if (!c.pass) {
            std::cerr << "FAIL " << c.name << ": published " << c.published << ", computed " << c.computed << "\n";
        }
    }
    std::cerr << (report.all_pass ? "all published values reproduced" : "some published values NOT reproduced")
              << "\n";
    return report.all_pass ? exit_ok : exit_witness;
}

int run_wsmse(const CommonOptions& common, const std::string& channels_path, const std::string& weights_text,
              std::size_t starts)
{
    const ChannelSet channels = io::load_channels(channels_path);
    const WeightVector weights(parse_real_array(weights_text, "weights"));
    detail::require(weights.size() == channels.users(), "weights have " + std::to_string(weights.size()) +
                                                            " entries for " + std::to_string(channels.users()) +
                                                            " users");
    const std::uint64_t seed = resolve_seed(common.seed);
    const SystemConfig cfg = common.config();
    const StationaryPointReport report =
        enumerate_stationary_points(channels, cfg, weights, starts, seed, KktOptions{}, common.threads);
    json doc = io::to_json(report, cfg.noise_variance());
    doc["manifest"] = manifest("wsmse", common, {{"channels", channels_path}, {"weights", weights_text}}, seed);
    doc["weights"] = io::to_json(weights.values());
    doc["starts"] = starts;
    emit_json(common.out, doc);
    std::cerr << report.clusters.size() << " stationary cluster(s)\n";
    return exit_ok;
}

int run_segment(const CommonOptions& common, const std::string& channels_path, const std::string& a_text,
                const std::string& b_text, std::size_t steps)
{
    const ChannelSet channels = io::load_channels(channels_path);
    const MseTuple a = parse_tuple(a_text, "--a");
    const MseTuple b = parse_tuple(b_text, "--b");
    detail::require(a.size() == channels.users() && b.size() == channels.users(),
                    "--a and --b need one entry per user");
    MembershipOptions opts;
    opts.seed = resolve_seed(common.seed);
    opts.threads = common.threads;
    const SegmentReport report = segment_test(channels, common.config(), a, b, steps, opts);
    json doc = io::to_json(report);
    doc["manifest"] = manifest("segment", common, {{"channels", channels_path}, {"a", a_text}, {"b", b_text}}, opts.seed);
    doc["steps"] = steps;
    emit_json(common.out, doc);
    std::cerr << (report.nonconvex_witness ? "nonconvexity witness found" : "no witness") << "\n";
    return report.nonconvex_witness ? exit_witness : exit_ok;
}

int run_region(const CommonOptions& common, const std::string& channels_path, std::optional<Eigen::Index> grid,
               std::optional<Eigen::Index> random)
{
    detail::require(grid.has_value() != random.has_value(), "region needs exactly one of --grid or --random");
    const ChannelSet channels = io::load_channels(channels_path);
    const std::uint64_t seed = resolve_seed(common.seed);
    const SampleMode mode = grid ? SampleMode::Grid : SampleMode::Random;
    const Eigen::Index resolution = grid ? *grid : *random;
    const RegionSampleSet set = sample_region(channels, common.config(), resolution, mode, seed, common.threads);
    emit(common.out, io::region_csv(set, channels.users()));
    if (!common.out.empty() && common.out != "-") {
        json doc = manifest("region", common, {{"channels", channels_path}}, seed);
        doc["mode"] = grid ? "grid" : "random";
        doc["resolution"] = resolution;
        doc["rows"] = set.points.size();
        io::write_text(common.out + ".manifest.json", json{{"manifest", doc}}.dump(2) + "\n");
    }
    return exit_ok;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"MSE region analysis for single-antenna users with MMSE receivers"};
    app.require_subcommand(1);
    app.set_version_flag("--version", MSEREGION_VERSION);

    CommonOptions common;
    std::string channels_path;

    auto* boundary = app.add_subcommand("boundary", "Sweep the two-user lower-left boundary to CSV");
    std::string h1_text;
    std::string h2_text;
    std::size_t samples = 101;
    std::string plot_path;
    boundary->add_option("--channels", channels_path, "Channel JSON file with k = 2");
    boundary->add_option("--h1", h1_text, "Inline channel of user 1, e.g. \"1,0.5-2i\"");
    boundary->add_option("--h2", h2_text, "Inline channel of user 2");
    boundary->add_option("--samples", samples, "Grid points over [0, P_Tx]")->check(CLI::Range(3, 100000000));
    boundary->add_option("--plot", plot_path, "Write a gnuplot script for the boundary");
    add_common(boundary, common);

    auto* scan = app.add_subcommand("convexity-scan", "Certify convexity on random two-user channels");
    std::size_t trials = 100;
    Eigen::Index dim = 4;
    std::size_t grid = 101;
    bool colinear = false;
    scan->add_option("--trials", trials, "Number of random instances")->check(CLI::PositiveNumber);
    scan->add_option("--dim", dim, "Base-station antennas N")->check(CLI::PositiveNumber);
    scan->add_option("--grid", grid, "Grid points per boundary")->check(CLI::Range(11, 100000000));
    scan->add_option("--seed", common.seed, "Seed (fallback: MSEREGION_SEED, then 0)");
    scan->add_flag("--colinear", colinear, "Draw h2 = alpha h1");
    add_common(scan, common);

    auto* counter = app.add_subcommand("counterexample", "Reproduce the three-user nonconvex instance");
    std::string region_csv;
    Eigen::Index region_grid = 40;
    std::size_t counter_starts = 64;
    std::string counter_plot;
    counter->add_option("--region-csv", region_csv, "Also write the sampled region CSV");
    counter->add_option("--grid", region_grid, "Lattice resolution for --region-csv")->check(CLI::Range(2, 100000));
    counter->add_option("--starts", counter_starts, "Random multistart points")->check(CLI::PositiveNumber);
    counter->add_option("--seed", common.seed, "Seed (fallback: MSEREGION_SEED, then 0)");
    counter->add_option("--plot", counter_plot, "Write a gnuplot script for the region and segment");
    add_common(counter, common, false);

    auto* wsmse = app.add_subcommand("wsmse", "Enumerate weighted sum-MSE stationary points");
    std::string weights_text;
    std::size_t wsmse_starts = 64;
    wsmse->add_option("--channels", channels_path, "Channel JSON file")->required();
    wsmse->add_option("--weights", weights_text, "JSON array of weights (inline or file)")->required();
    wsmse->add_option("--starts", wsmse_starts, "Random multistart points")->check(CLI::PositiveNumber);
    wsmse->add_option("--seed", common.seed, "Seed (fallback: MSEREGION_SEED, then 0)");
    add_common(wsmse, common);

    auto* segment = app.add_subcommand("segment", "Test the segment between two MSE tuples for membership");
    std::string a_text;
    std::string b_text;
    std::size_t steps = 9;
    segment->add_option("--channels", channels_path, "Channel JSON file")->required();
    segment->add_option("--a", a_text, "JSON array: first MSE tuple")->required();
    segment->add_option("--b", b_text, "JSON array: second MSE tuple")->required();
    segment->add_option("--steps", steps, "Interior points")->check(CLI::PositiveNumber);
    segment->add_option("--seed", common.seed, "Seed (fallback: MSEREGION_SEED, then 0)");
    add_common(segment, common);

    auto* region = app.add_subcommand("region", "Sample the achievable MSE region to CSV");
    std::optional<Eigen::Index> region_lattice;
    std::optional<Eigen::Index> region_random;
    region->add_option("--channels", channels_path, "Channel JSON file")->required();
    auto* grid_opt = region->add_option("--grid", region_lattice, "Simplex lattice resolution");
    auto* random_opt = region->add_option("--random", region_random, "Number of uniform draws");
    grid_opt->excludes(random_opt);
    region->add_option("--seed", common.seed, "Seed (fallback: MSEREGION_SEED, then 0)");
    add_common(region, common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_input;
    }

    try {
        if (*boundary) {
            return run_boundary(common, channels_path, h1_text, h2_text, samples, plot_path);
        }
        if (*scan) {
            return run_convexity_scan(common, trials, dim, grid, colinear);
        }
        if (*counter) {
            return run_counterexample(common, region_csv, region_grid, counter_starts, counter_plot);
        }
        if (*wsmse) {
            return run_wsmse(common, channels_path, weights_text, wsmse_starts);
        }
        if (*segment) {
            return run_segment(common, channels_path, a_text, b_text, steps);
        }
        if (*region) {
            return run_region(common, channels_path, region_lattice, region_random);
        }
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_input;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
    return exit_input;
}
