#include "mfa/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mfa/common.hpp"
#include "mfa/dimension.hpp"
#include "mfa/io.hpp"
#include "mfa/moran.hpp"
#include "mfa/spectrum.hpp"
#include "mfa/symbolic.hpp"

namespace mfa {

namespace {

struct Ctx {
    Config cfg;
    std::string out;        // empty = stdout
    std::uint64_t seed = 0;
    bool has_seed = false;
    int threads = 1;
};

const Config& sub_config(const Config& cfg, const std::string& key) {
    if (!cfg.contains(key))
        throw validation_error("config: missing section '" + key + "'");
    return cfg.at(key);
}

double num_or(const Config& j, const std::string& key, double fallback) {
    return j.contains(key) ? j.at(key).get<double>() : fallback;
}

long long int_or(const Config& j, const std::string& key, long long fallback) {
    return j.contains(key) ? j.at(key).get<long long>() : fallback;
}

std::uint64_t require_seed(const Ctx& ctx) {
    if (!ctx.has_seed)
        throw validation_error("config: a seed is required for stochastic commands "
                               "(config key 'seed' or flag --seed)");
    return ctx.seed;
}

// single-stream sink: the named file, or stdout when no path is set
class Sink {
  public:
    explicit Sink(const std::string& path) {
        if (!path.empty()) {
            file_.open(path);
            if (!file_) throw validation_error("output: cannot open " + path);
        }
    }
    std::ostream& os() { return file_.is_open() ? file_ : std::cout; }

  private:
    std::ofstream file_;
};

std::string join_components(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ';';
        s += format_double(v[i]);
    }
    return s;
}

// ---- map-info ---------------------------------------------------------------

int cmd_map_info(const Ctx& ctx) {
    const BranchMap map = map_from_config(sub_config(ctx.cfg, "map"));
    const AlmostAdditivePotential pot = potential_from_config(sub_config(ctx.cfg, "potential"), map);
    Sink sink(ctx.out);
    std::ostream& os = sink.os();

    os << "kind: " << map.kind() << "\n";
    os << "branches: " << map.num_branches() << "\n";
    for (int i = 0; i < map.num_branches(); ++i) {
        const Branch& br = map.branch(i);
        os << "  branch " << (i + 1) << ": domain [" << format_double(br.domain.a) << ", "
           << format_double(br.domain.b) << "]"
           << (br.increasing ? " increasing" : " decreasing") << (br.affine ? " affine" : "")
           << " fixed_point " << format_double(br.fixed_point)
           << (br.parabolic ? " parabolic" : "") << "\n";
    }
    if (!map.caveat().empty()) os << "caveat: " << map.caveat() << "\n";

    const std::vector<int> parab = map.parabolic_branches();
    os << "parabolic branches:";
    if (parab.empty()) os << " none";
    for (int b : parab) os << ' ' << (b + 1);
    os << "\n";

    os << "potential: " << pot.kind << "\n";
    try {
        const ConvexHull hull = parabolic_hull(map, pot, 64);
        if (hull.empty()) {
            os << "parabolic limit hull: empty\n";
        } else {
            os << "parabolic limit hull:";
            for (const auto& v : hull.vertices) os << " (" << join_components(v) << ")";
            os << "\n";
        }
    } catch (const nonconvergence_error& e) {
        os << "parabolic limit hull: bracket did not close (" << e.what() << ")\n";
    }
    return 0;
}

// ---- spectrum ---------------------------------------------------------------

int cmd_spectrum(const Ctx& ctx) {
    const BranchMap map = map_from_config(sub_config(ctx.cfg, "map"));
    const AlmostAdditivePotential pot = potential_from_config(sub_config(ctx.cfg, "potential"), map);
    const Config& sc = sub_config(ctx.cfg, "spectrum");

    SpectrumOptions opts;
    opts.seed = require_seed(ctx);
    opts.threads = ctx.threads;
    opts.order = int(int_or(sc, "order", opts.order));
    opts.starts = int(int_or(sc, "starts", opts.starts));
    opts.constraint_tol = num_or(sc, "constraint_tol", opts.constraint_tol);

    Sink sink(ctx.out);
    std::ostream& os = sink.os();
    write_csv_row(os, {"alpha", "dimension", "status", "entropy", "lambda", "phi", "residual",
                       "phi_depth", "lyapunov_depth", "note"});

    const auto emit = [&](const std::string& alpha_cell, const SpectrumPoint& p) {
        write_csv_row(os, {alpha_cell, format_double(p.dim_value), to_string(p.status),
                           format_double(p.h), format_double(p.lambda), join_components(p.phi),
                           format_double(p.constraint_residual), std::to_string(p.phi_depth),
                           std::to_string(p.lyapunov_depth), p.note});
        os.flush();
    };

    if (sc.contains("sup") && sc.at("sup").get<bool>()) {
        const SpectrumPoint p = hyperbolic_dimension(map, opts);
        emit("sup", p);
        return 0;
    }

    std::vector<double> alphas;
    if (sc.contains("alphas")) {
        alphas = sc.at("alphas").get<std::vector<double>>();
    } else if (sc.contains("alpha_min") && sc.contains("alpha_max") && sc.contains("count")) {
        const double lo = sc.at("alpha_min").get<double>();
        const double hi = sc.at("alpha_max").get<double>();
        const long long n = sc.at("count").get<long long>();
        if (n < 1) throw validation_error("config: spectrum count must be positive");
        for (long long i = 0; i < n; ++i)
            alphas.push_back(n == 1 ? lo : lo + (hi - lo) * double(i) / double(n - 1));
    }
    if (alphas.empty())
        throw validation_error("config: spectrum needs a non-empty 'alphas' grid "
                               "(or alpha_min/alpha_max/count, or sup: true)");
    if (pot.d != 1)
        throw validation_error("config: the spectrum grid drives scalar potentials only");

    // rows are streamed so a hard optimizer failure keeps the partial table
    for (double a : alphas) {
        const SpectrumPoint p = dimension_spectrum(map, pot, {a}, opts);
        emit(format_double(a), p);
    }
    return 0;
}

// ---- boxdim -----------------------------------------------------------------

int cmd_boxdim(const Ctx& ctx) {
    const BranchMap map = map_from_config(sub_config(ctx.cfg, "map"));
    const Config& bc = sub_config(ctx.cfg, "boxdim");
    const int depth = int(int_or(bc, "depth", 10));
    const long long budget = int_or(bc, "budget", 1000000);
    std::vector<double> scales =
        bc.contains("scales") ? bc.at("scales").get<std::vector<double>>() : default_scales();

    const std::vector<double> points = attractor_sample(map, depth, budget);
    const DimensionEstimate est = box_counting(points, scales);

    Config summary;
    summary["map"] = map.kind();
    summary["depth"] = depth;
    summary["points"] = points.size();
    summary["slope"] = est.slope;
    summary["stderr"] = est.stderr_slope;
    summary["r2"] = est.r2;
    summary["r_min"] = est.r_min;
    summary["r_max"] = est.r_max;
    summary["scales"] = est.scales;
    summary["counts"] = est.counts;

    Sink sink(ctx.out);
    sink.os() << summary.dump(2) << "\n";
    return 0;
}

// ---- the Moran-construction commands ------------------------------------------

struct MoranSetup {
    MoranSchedule sched;
    std::unique_ptr<ConcatenatedMeasure> cm;
    std::vector<double> alpha, beta;  // odd- and even-stage phase targets
    bool degenerate = false;          // alpha and beta agree within the final width
};

MoranSetup build_moran(const Ctx& ctx, const BranchMap& map, const AlmostAdditivePotential& pot) {
    const Config& sc = sub_config(ctx.cfg, "schedule");
    MoranSetup setup;
    setup.sched = build_schedule(int(int_or(sc, "stages", 4)), int(int_or(sc, "base_length", 20)),
                                 num_or(sc, "growth", 1.5), num_or(sc, "eps0", 0.2),
                                 num_or(sc, "delta", 0.1));
    const MarkovMeasure mu = measure_from_config(sub_config(ctx.cfg, "mu"));
    const MarkovMeasure nu = measure_from_config(sub_config(ctx.cfg, "nu"));
    const long budget = long(int_or(ctx.cfg, "harvest_budget", 2000));
    const std::uint64_t seed = require_seed(ctx);

    std::vector<BlockFamily> families;
    for (int i = 1; i <= setup.sched.stages(); ++i) {
        const MarkovMeasure& source = (i % 2 == 1) ? mu : nu;
        try {
            BlockFamily fam = harvest_blocks(source, pot, map, setup.sched.lengths[std::size_t(i - 1)],
                                             setup.sched.epsilons[std::size_t(i - 1)], setup.sched.delta,
                                             mix_seed(seed, 0x68730000ULL + std::uint64_t(i)), budget);
            fam.stage = i;
            families.push_back(std::move(fam));
        } catch (const harvest_error& e) {
            throw harvest_error("stage " + std::to_string(i) + ": " + e.what(), e.achieved_mass);
        }
    }
    setup.alpha = families[0].phi;
    setup.beta = setup.sched.stages() >= 2 ? families[1].phi : families[0].phi;
    double diff = 0.0;
    for (std::size_t c = 0; c < setup.alpha.size(); ++c)
        diff = std::max(diff, std::abs(setup.alpha[c] - setup.beta[c]));
    setup.degenerate = diff < 2.0 * setup.sched.epsilons.back();
    if (setup.degenerate)
        std::cerr << "warning: phase targets coincide within the final filter width; "
                     "the construction is not irregular\n";
    setup.cm = std::make_unique<ConcatenatedMeasure>(setup.sched, std::move(families), map, pot);
    return setup;
}

void write_profile_csv(std::ostream& os, const std::vector<OscillationEntry>& profile) {
    write_csv_row(os, {"n", "stage", "average", "target", "deviation", "budget"});
    for (const OscillationEntry& e : profile)
        write_csv_row(os, {std::to_string(e.n), std::to_string(e.stage), join_components(e.average),
                           join_components(e.target), format_double(e.deviation), format_double(e.budget)});
}

std::vector<OscillationEntry> run_profile(const ConcatenatedMeasure& cm,
                                          const AlmostAdditivePotential& pot, std::uint64_t seed) {
    if (pot.additive() && pot.prefix_determined)
        return oscillation_profile(cm, pot, seed);
    const long long total = cm.schedule().total_length();
    if (total > (1LL << 22))
        throw validation_error("oscillation: schedule too long to materialize for a "
                               "non-additive potential; use an additive one");
    const Word w = generate_point(cm, seed, total);
    return oscillation_profile(cm, pot, w);
}

int cmd_oscillation(const Ctx& ctx) {
    const BranchMap map = map_from_config(sub_config(ctx.cfg, "map"));
    const AlmostAdditivePotential pot = potential_from_config(sub_config(ctx.cfg, "potential"), map);
    const MoranSetup setup = build_moran(ctx, map, pot);
    const std::vector<OscillationEntry> profile =
        run_profile(*setup.cm, pot, mix_seed(require_seed(ctx), 0x6f736300ULL));
    Sink sink(ctx.out);
    write_profile_csv(sink.os(), profile);
    return 0;
}

int cmd_irregular(const Ctx& ctx) {
    const BranchMap map = map_from_config(sub_config(ctx.cfg, "map"));
    const AlmostAdditivePotential pot = potential_from_config(sub_config(ctx.cfg, "potential"), map);
    const std::uint64_t seed = require_seed(ctx);
    const MoranSetup setup = build_moran(ctx, map, pot);
    const ConcatenatedMeasure& cm = *setup.cm;

    const Config& ic = ctx.cfg.contains("irregular") ? ctx.cfg.at("irregular") : Config::object();
    const long long n_points = int_or(ic, "points", 10000);
    const long long point_length = int_or(ic, "point_length", 64);
    const long long n_local = int_or(ic, "local_points", 50);
    LocalDimensionOptions lopts;
    lopts.max_radii = int(int_or(ic, "max_radii", lopts.max_radii));
    lopts.max_block_bands = int_or(ic, "max_block_bands", lopts.max_block_bands);

    // oscillation profile along one generated word
    const std::vector<OscillationEntry> profile = run_profile(cm, pot, mix_seed(seed, 0x6f736300ULL));

    // local dimension regressions at seeded points
    std::vector<LocalDimensionEstimate> locals(static_cast<std::size_t>(n_local));
    parallel_for(std::size_t(n_local), ctx.threads, [&](std::size_t i) {
        locals[i] = local_dimension(cm, mix_seed(seed, 0x4c440000ULL + i), lopts);
    });

    // point cloud and its box-counting estimate
    std::vector<double> cloud(static_cast<std::size_t>(n_points));
    parallel_for(std::size_t(n_points), ctx.threads, [&](std::size_t i) {
        const Word w = generate_point(cm, mix_seed(seed, 0x50540000ULL + i), point_length);
        cloud[i] = project(map, w).value;
    });
    const DimensionEstimate box = box_counting(cloud, default_scales());

    Config summary;
    summary["schedule"] = {{"lengths", setup.sched.lengths},
                           {"multiplicities", setup.sched.multiplicities},
                           {"epsilons", setup.sched.epsilons},
                           {"total_length", setup.sched.total_length()}};
    summary["alpha"] = setup.alpha;
    summary["beta"] = setup.beta;
    summary["degenerate"] = setup.degenerate;
    {
        Config stages = Config::array();
        for (int i = 1; i <= setup.sched.stages(); ++i) {
            const BlockFamily& f = cm.family(i);
            stages.push_back({{"stage", i},
                              {"kept_mass", f.total_mass},
                              {"mass_exact", f.mass_exact},
                              {"entropy", f.h},
                              {"lambda", f.lambda},
                              {"phi", f.phi}});
        }
        summary["stages"] = stages;
    }
    {
        std::vector<double> slopes;
        for (const auto& l : locals) slopes.push_back(l.slope);
        std::sort(slopes.begin(), slopes.end());
        summary["local_dimension"] = {{"points", n_local},
                                      {"min_slope", slopes.front()},
                                      {"median_slope", slopes[slopes.size() / 2]},
                                      {"max_slope", slopes.back()},
                                      {"min_phase_ratio", locals.front().min_phase_ratio}};
    }
    summary["box_counting"] = {{"points", n_points},
                               {"point_length", point_length},
                               {"slope", box.slope},
                               {"stderr", box.stderr_slope},
                               {"r2", box.r2}};

    if (ctx.out.empty()) {
        // everything to stdout as one document
        Config doc = summary;
        Config prof = Config::array();
        for (const OscillationEntry& e : profile)
            prof.push_back({{"n", e.n}, {"stage", e.stage}, {"average", e.average},
                            {"target", e.target}, {"deviation", e.deviation}, {"budget", e.budget}});
        doc["oscillation"] = prof;
        Config loc = Config::array();
        for (std::size_t i = 0; i < locals.size(); ++i)
            loc.push_back({{"index", i}, {"slope", locals[i].slope}, {"r2", locals[i].r2},
                           {"radii", locals[i].log_r.size()}, {"floor_bound", locals[i].floor_bound}});
        doc["local"] = loc;
        doc["points"] = cloud;
        std::cout << doc.dump(2) << "\n";
        return 0;
    }

    {
        std::ofstream os(ctx.out + ".oscillation.csv");
        if (!os) throw validation_error("output: cannot open " + ctx.out + ".oscillation.csv");
        write_profile_csv(os, profile);
    }
    {
        std::ofstream os(ctx.out + ".local.csv");
        if (!os) throw validation_error("output: cannot open " + ctx.out + ".local.csv");
        write_csv_row(os, {"index", "slope", "intercept", "r2", "radii", "floor_bound", "min_phase_ratio"});
        for (std::size_t i = 0; i < locals.size(); ++i)
            write_csv_row(os, {std::to_string(i), format_double(locals[i].slope),
                               format_double(locals[i].intercept), format_double(locals[i].r2),
                               std::to_string(locals[i].log_r.size()),
                               format_double(locals[i].floor_bound),
                               format_double(locals[i].min_phase_ratio)});
    }
    {
        std::ofstream os(ctx.out + ".points.csv");
        if (!os) throw validation_error("output: cannot open " + ctx.out + ".points.csv");
        write_csv_row(os, {"x"});
        for (double x : cloud) write_csv_row(os, {format_double(x)});
    }
    {
        std::ofstream os(ctx.out + ".summary.json");
        if (!os) throw validation_error("output: cannot open " + ctx.out + ".summary.json");
        os << summary.dump(2) << "\n";
    }
    return 0;
}

}  // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"multifractal analysis of piecewise expanding interval maps"};
    app.require_subcommand(1);

    std::string config_path, out_path;
    std::uint64_t seed = 0;
    int threads = 1;
    bool seed_set = false;

    const std::vector<std::string> names = {"map-info", "spectrum", "irregular", "boxdim", "oscillation"};
    const std::vector<std::string> blurbs = {
        "branch table, parabolic set, and the parabolic limit hull",
        "dimension spectrum over a grid of Birkhoff averages",
        "build the oscillating concatenated measure and measure its dimension",
        "box-counting dimension of an attractor sample",
        "Birkhoff averages at the stage boundaries of a generated word"};
    for (std::size_t i = 0; i < names.size(); ++i) {
        CLI::App* sub = app.add_subcommand(names[i], blurbs[i]);
        sub->add_option("--config", config_path, "JSON experiment config")->required();
        sub->add_option("--out", out_path, "output path (stdout when absent)");
        sub->add_option("--seed", seed, "root seed (overrides the config)")->trigger_on_parse()
            ->each([&seed_set](const std::string&) { seed_set = true; });
        sub->add_option("--threads", threads, "worker threads");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        Ctx ctx;
        ctx.cfg = load_config_file(config_path);
        ctx.out = out_path;
        ctx.threads = threads;
        if (ctx.cfg.contains("threads") && threads == 1) ctx.threads = ctx.cfg.at("threads").get<int>();
        if (ctx.cfg.contains("out") && out_path.empty()) ctx.out = ctx.cfg.at("out").get<std::string>();
        if (seed_set) {
            ctx.seed = seed;
            ctx.has_seed = true;
        } else if (ctx.cfg.contains("seed")) {
            ctx.seed = ctx.cfg.at("seed").get<std::uint64_t>();
            ctx.has_seed = true;
        }

        if (app.got_subcommand("map-info")) return cmd_map_info(ctx);
        if (app.got_subcommand("spectrum")) return cmd_spectrum(ctx);
        if (app.got_subcommand("irregular")) return cmd_irregular(ctx);
        if (app.got_subcommand("boxdim")) return cmd_boxdim(ctx);
        if (app.got_subcommand("oscillation")) return cmd_oscillation(ctx);
        return 2;
    } catch (const validation_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const escape_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const harvest_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const optimizer_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const nonconvergence_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace mfa
