#pragma once

// Command-line front end: configuration loading, the simulate / compile / verify subcommands
// and their report files. Exit codes: 0 pass, 1 check failure, 2 configuration error,
// 3 numerical blowup.

#include "ddenet/ddenet.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace ddenet::cli {

inline constexpr int kExitPass = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitBlowup = 3;

/// Everything a subcommand needs, resolved from the configuration file.
struct RunConfig {
    Mode mode = Mode::FeedForward;
    Scheme scheme = Scheme::Semilinear;
    std::uint64_t seed = 0;
    TimeGrid grid{1.0, 1, 1};
    DelaySet delays;
    SemilinearParams params;
    GeneralRHS rhs;
    History history;

    bool weights_supplied = false;  ///< false: weights were assembled from a modulation profile
    ModulationProfile profile = ModulationProfile::zeros(Mode::FeedForward, 0, 0, 1);
    // Feed-forward network and input.
    NetworkSpec network{TimeGrid(1.0, 1, 1), {}, {}, {}, Activation::identity(), Activation::identity(), Activation::identity(), std::nullopt, 0.0};
    Eigen::VectorXd input;  ///< u with the trailing 1

    // Recurrent network and inputs.
    RecurrentNetwork recurrent{TimeGrid(1.0, 1, 1), {}, {}, {}};
    Eigen::MatrixXd inputs;  ///< K x (M+1)

    // verify settings
    double tolerance = kEquivalenceTolerance;
    std::size_t random_cases = 0;
    std::vector<double> thetas;
    std::vector<std::size_t> convergence_nodes{8, 16, 32, 64};
    std::vector<double> delays_in_cycles;
};

namespace detail {

inline Mode parse_mode(const std::string& s)
{
    if (s == "feedforward" || s == "feed-forward" || s == "feed_forward") return Mode::FeedForward;
    if (s == "recurrent") return Mode::Recurrent;
    throw ConfigError("unknown mode '" + s + "' (feedforward or recurrent)");
}

inline Scheme parse_scheme(const std::string& s)
{
    if (s == "general") return Scheme::General;
    if (s == "semilinear") return Scheme::Semilinear;
    if (s == "maplimit" || s == "map_limit") return Scheme::MapLimit;
    throw ConfigError("unknown scheme '" + s + "' (general, semilinear or maplimit)");
}

inline GeneralRHS parse_rhs(const std::string& s, const SemilinearParams& params)
{
    if (s == "linear_decay") return GeneralRHS::linear_decay();
    if (s == "saturating") return GeneralRHS::saturating();
    if (s == "slots_only") return GeneralRHS::slots_only();
    if (s == "zero") return GeneralRHS::zero();
    if (s == "semilinear") return params.as_rhs();
    throw ConfigError("unknown right-hand side '" + s + "'");
}

inline Activation activation_from(const io::Config& cfg, const std::string& key, Activation fallback)
{
    const auto name = cfg.get("network", key);
    if (!name) return fallback;
    return parse_activation(*name, cfg.real_or("system", "eta", 1.0), cfg.real_or("system", "p", 1.0));
}

inline Eigen::MatrixXd load_matrix(const io::Config& cfg, const std::string& file, const char* what, Eigen::Index rows,
                                   Eigen::Index cols)
{
    const Eigen::MatrixXd m = io::read_matrix_csv(cfg.resolve(file));
    if (m.rows() != rows || m.cols() != cols)
        throw ConfigError(fmt::format("{} in {} is {} x {}, expected {} x {}", what, file, m.rows(), m.cols(), rows, cols));
    if (!m.allFinite()) throw ConfigError(std::string(what) + " contains non-finite values");
    return m;
}

/// W^in: a CSV path, `identity` (padded identity) or `random`.
inline Eigen::MatrixXd input_weights_from(const io::Config& cfg, SeededRandom& rng, std::size_t nodes, std::size_t inputs)
{
    const auto N = static_cast<Eigen::Index>(nodes), M = static_cast<Eigen::Index>(inputs);
    const std::string src = cfg.string_or("network", "input_weights", "identity");
    if (src == "identity") {
        if (M > N) throw ConfigError("identity input weights need M <= N");
        Eigen::MatrixXd w = Eigen::MatrixXd::Zero(N, M + 1);
        w.topLeftCorner(M, M).setIdentity();
        return w;
    }
    if (src == "random") return rng.matrix(N, M + 1, 1.0);
    return load_matrix(cfg, src, "input weights", N, M + 1);
}

inline std::size_t input_count(const io::Config& cfg)
{
    if (cfg.has("input", "u")) return cfg.reals("input", "u").size();
    return cfg.integer_or("input", "count", 1);
}

}  // namespace detail

inline RunConfig load_run_config(const io::Config& cfg, std::optional<std::uint64_t> seed_override)
{
    RunConfig rc;
    rc.mode = detail::parse_mode(cfg.string_or("run", "mode", "feedforward"));
    rc.scheme = detail::parse_scheme(cfg.string_or("run", "scheme", "semilinear"));
    rc.seed = seed_override ? *seed_override : cfg.integer_or("run", "seed", 0);

    const std::size_t N = cfg.integer("grid", "nodes");
    const std::size_t segments = cfg.integer("grid", "segments");
    if (N < 1 || segments < 1) throw ConfigError("[grid] nodes and segments must be >= 1");
    rc.grid = TimeGrid(cfg.real("grid", "clock_cycle"), N, segments);

    const std::string units = cfg.require("delays", "units");
    if (units == "full") {
        rc.delays = full_delay_set(N);
    }
    else {
        std::vector<std::size_t> list;
        for (auto u : cfg.integers("delays", "units")) list.push_back(static_cast<std::size_t>(u));
        rc.delays = DelaySet(std::move(list));
    }

    rc.params.alpha = cfg.real_or("system", "alpha", 1.0);
    rc.params.nonlinearity = parse_activation(cfg.string_or("system", "nonlinearity", "sine"), cfg.real_or("system", "eta", 1.0),
                                              cfg.real_or("system", "p", 1.0));
    if (!(rc.params.alpha > 0.0) || !std::isfinite(rc.params.alpha)) throw ConfigError("[system] alpha must be positive");
    if (!rc.params.nonlinearity.elementwise()) throw ConfigError("[system] nonlinearity must be element-wise");
    rc.rhs = detail::parse_rhs(cfg.string_or("run", "rhs", "linear_decay"), rc.params);
    rc.history.x0 = cfg.real_or("system", "x0", 0.0);
    if (cfg.has("system", "history")) rc.history.table = cfg.reals("system", "history");

    rc.tolerance = cfg.real_or("verify", "tolerance", kEquivalenceTolerance);
    rc.random_cases = cfg.integer_or("verify", "cases", 0);
    if (cfg.has("verify", "thetas")) {
        rc.thetas = cfg.reals("verify", "thetas");
    }
    else {
        for (double k : {2.0, 4.0, 6.0, 8.0}) rc.thetas.push_back(k / rc.params.alpha);
    }
    if (cfg.has("verify", "nodes")) {
        rc.convergence_nodes.clear();
        for (auto n : cfg.integers("verify", "nodes")) rc.convergence_nodes.push_back(static_cast<std::size_t>(n));
    }
    if (cfg.has("verify", "delays_in_cycles")) rc.delays_in_cycles = cfg.reals("verify", "delays_in_cycles");

    // Delay set problems are reported by validate(); stop here before indexing by delay.
    if (!rc.delays.well_formed(N) || rc.delays.empty()) return rc;

    const bool has_weights = cfg.has("network", "hidden_weights") || cfg.has("network", "recurrent_weights");
    const bool has_profile = cfg.has("modulation", "profile");
    if (has_weights == has_profile)
        throw ConfigError("supply exactly one of [network] weights or [modulation] profile");
    rc.weights_supplied = has_weights;

    SeededRandom rng(rc.seed);
    const auto Ni = static_cast<Eigen::Index>(N);
    const std::size_t M = detail::input_count(cfg);
    const Eigen::MatrixXd w_in = detail::input_weights_from(cfg, rng, N, M);

    if (rc.mode == Mode::FeedForward) {
        NetworkSpec& spec = rc.network;
        spec.grid = rc.grid;
        spec.input_weights = w_in;
        spec.input_activation = detail::activation_from(cfg, "input_activation", Activation::identity());
        spec.first_layer_activation = detail::activation_from(cfg, "first_layer_activation", Activation::identity());
        spec.output_activation = detail::activation_from(cfg, "output_activation", Activation::identity());
        spec.semilinear = rc.params;
        spec.x0 = rc.history.x0;

        if (has_weights) {
            if (cfg.has("network", "recurrent_weights")) throw ConfigError("feed-forward mode takes [network] hidden_weights");
            const std::string src = cfg.require("network", "hidden_weights");
            if (src == "random") {
                for (std::size_t l = 2; l <= segments; ++l)
                    spec.hidden_weights.push_back(random_realizable_weights(rng, rc.delays, N, true));
            }
            else {
                for (const auto& file : io::split_list(src))
                    spec.hidden_weights.push_back(detail::load_matrix(cfg, file, "hidden weights", Ni, Ni + 1));
            }
            if (spec.hidden_weights.size() + 1 != segments)
                throw ConfigError(fmt::format("{} hidden weight matrices given for {} layers", spec.hidden_weights.size(), segments));
            const CompiledNetwork compiled = compile_feed_forward(spec.hidden_weights, rc.delays, rc.grid);
            rc.profile = compiled.profile;
        }
        else {
            rc.profile = io::parse_profile_csv(io::read_text(cfg.path("modulation", "profile")), Mode::FeedForward, rc.delays,
                                               rc.grid, cfg.require("modulation", "profile"));
            Eigen::MatrixXd biases = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(segments - 1), Ni);
            if (cfg.has("modulation", "biases"))
                biases = detail::load_matrix(cfg, cfg.require("modulation", "biases"), "biases",
                                             static_cast<Eigen::Index>(segments - 1), Ni);
            for (std::size_t l = 2; l <= segments; ++l) {
                const Eigen::VectorXd b = biases.row(static_cast<Eigen::Index>(l - 2)).transpose();
                spec.hidden_weights.push_back(
                    assemble_from_table(rc.profile.table(l - 2), rc.delays, N, std::span<const double>(b.data(), N), true));
            }
        }

        const std::string out_src = cfg.string_or("network", "output_weights", "");
        if (out_src == "random")
            spec.output_weights = rng.matrix(static_cast<Eigen::Index>(cfg.integer_or("network", "outputs", 1)), Ni + 1, 1.0);
        else if (!out_src.empty())
            spec.output_weights = io::read_matrix_csv(cfg.resolve(out_src));
        if (spec.output_weights.rows() > 0 && spec.output_weights.cols() != Ni + 1)
            throw ConfigError("output weights must have N+1 columns");

        Eigen::VectorXd u(static_cast<Eigen::Index>(M));
        if (cfg.has("input", "u")) {
            const auto values = cfg.reals("input", "u");
            for (std::size_t m = 0; m < M; ++m) u(static_cast<Eigen::Index>(m)) = values[m];
        }
        else {
            for (Eigen::Index m = 0; m < u.size(); ++m) u(m) = rng.uniform(-1.0, 1.0);
        }
        rc.input = with_bias_entry(u);
    }
    else {
        RecurrentNetwork& net = rc.recurrent;
        net.grid = rc.grid;
        net.delays = rc.delays;
        net.input_weights = w_in;
        net.input_activation = detail::activation_from(cfg, "input_activation", Activation::identity());
        net.x0 = rc.history.x0;
        if (has_weights) {
            if (cfg.has("network", "hidden_weights")) throw ConfigError("recurrent mode takes [network] recurrent_weights");
            const std::string src = cfg.require("network", "recurrent_weights");
            net.weights = src == "random" ? random_realizable_weights(rng, rc.delays, N, false)
                                          : detail::load_matrix(cfg, src, "recurrent weights", Ni, Ni);
            rc.profile = compile_recurrent(net.weights, rc.delays, rc.grid);
        }
        else {
            rc.profile = io::parse_profile_csv(io::read_text(cfg.path("modulation", "profile")), Mode::Recurrent, rc.delays,
                                               rc.grid, cfg.require("modulation", "profile"));
            net.weights = assemble_from_table(rc.profile.table(0), rc.delays, N);
        }

        const auto K = static_cast<Eigen::Index>(segments);
        rc.inputs = Eigen::MatrixXd::Ones(K, static_cast<Eigen::Index>(M) + 1);
        const std::string in_src = cfg.string_or("input", "inputs", "random");
        if (in_src == "random") {
            for (Eigen::Index k = 0; k < K; ++k)
                for (Eigen::Index m = 0; m < static_cast<Eigen::Index>(M); ++m) rc.inputs(k, m) = rng.uniform(-1.0, 1.0);
        }
        else {
            rc.inputs.leftCols(static_cast<Eigen::Index>(M)) =
                detail::load_matrix(cfg, in_src, "inputs", K, static_cast<Eigen::Index>(M));
        }
    }
    return rc;
}

/// Property checks that must hold before anything runs. `allow_first_segment` admits a
/// segment-1 modulation so the history check can report it as a failure instead.
inline ValidationReport validate_run(const RunConfig& rc, bool allow_first_segment = false)
{
    ValidationReport report = validate(rc.profile, rc.delays, rc.grid);
    if (!report.ok() && report.violates("I")) return report;
    if (allow_first_segment) {
        std::erase_if(report.violations, [](const Violation& v) { return v.property == "IV"; });
    }
    if (rc.mode == Mode::FeedForward) {
        if (!rc.network.shares_sparsity_pattern())
            report.violations.push_back({"shape", "hidden weight matrices differ in their zero pattern"});
    }
    return report;
}

/// Files are collected in memory and written only after the command has succeeded.
class OutputSet {
public:
    void add(std::string name, std::string content) { files_.emplace_back(std::move(name), std::move(content)); }

    void write(const std::filesystem::path& dir) const
    {
        std::filesystem::create_directories(dir);
        for (const auto& [name, content] : files_) io::write_file_atomic(dir / name, content);
    }

    const std::vector<std::pair<std::string, std::string>>& files() const noexcept { return files_; }

private:
    std::vector<std::pair<std::string, std::string>> files_;
};

namespace detail {

inline void emit_weights(const RunConfig& rc, OutputSet& out)
{
    if (rc.mode == Mode::FeedForward) {
        for (std::size_t l = 2; l <= rc.grid.segments(); ++l)
            out.add(fmt::format("weights_layer_{}.csv", l), io::matrix_csv(rc.network.hidden_weights[l - 2]));
    }
    else {
        out.add("weights_recurrent.csv", io::matrix_csv(rc.recurrent.weights));
    }
}

inline std::string sweep_csv(const SweepReport& r)
{
    std::string s = r.parameter + ",error,exact\n";
    for (const auto& p : r.points) s += fmt::format("{},{},{}\n", format_real(p.parameter), format_real(p.error), p.exact ? 1 : 0);
    return s;
}

inline std::string equivalence_row(std::size_t index, const EquivalenceReport& r)
{
    return fmt::format("{},{},{},{},{},{},{}\n", index, r.seed, format_real(r.max_abs_error), format_real(r.max_rel_error),
                       r.argmax.segment, r.argmax.node, r.pass ? 1 : 0);
}

/// Drive z(t) = 0.3 + 0.5 sin(2 pi t / T), modulations M_d(t) = 0.8 + 0.4 cos(2 pi t / T + d).
inline ConvergenceProblem convergence_problem(const RunConfig& rc)
{
    ConvergenceProblem p;
    p.clock_cycle = rc.grid.clock_cycle();
    p.segments = rc.grid.segments();
    p.params = rc.params;
    p.x0 = rc.history.x0;
    p.delays_in_cycles = rc.delays_in_cycles;
    if (p.delays_in_cycles.empty())
        for (std::size_t nd : rc.delays.units())
            p.delays_in_cycles.push_back(static_cast<double>(nd) / static_cast<double>(rc.grid.nodes()));
    const double T = p.clock_cycle;
    p.drive = [T](double t) { return 0.3 + 0.5 * std::sin(2.0 * M_PI * t / T); };
    for (std::size_t d = 0; d < p.delays_in_cycles.size(); ++d)
        p.modulation.push_back([T, d](double t) { return 0.8 + 0.4 * std::cos(2.0 * M_PI * t / T + static_cast<double>(d)); });
    return p;
}

}  // namespace detail

struct CommandOptions {
    std::filesystem::path config;
    std::filesystem::path out = ".";
    std::optional<std::uint64_t> seed;
    bool emit_weights = false;
    std::string check;
    std::optional<std::size_t> substeps;
};

inline int cmd_simulate(const RunConfig& rc, const CommandOptions& opt, OutputSet& out, std::ostream& log)
{
    NodeGrid states;
    Eigen::VectorXd y;
    if (rc.mode == Mode::FeedForward) {
        switch (rc.scheme) {
        case Scheme::General:
            states = integrate_general(rc.rhs, general_drive(rc.network, rc.input), rc.profile, rc.delays, rc.grid, rc.history);
            break;
        case Scheme::Semilinear:
            states = integrate_semilinear(rc.params, semilinear_drive(rc.network, rc.input), rc.profile, rc.delays, rc.grid,
                                          rc.history);
            break;
        case Scheme::MapLimit: states = forward_map_limit(rc.network, rc.input).states; break;
        }
        y = output_layer(states.segment_vector(rc.grid.segments()), rc.network.output_weights, rc.network.output_activation);
    }
    else {
        const DriveSignal drive = recurrent_drive(rc.recurrent, rc.inputs);
        switch (rc.scheme) {
        case Scheme::General: states = integrate_general(rc.rhs, drive, rc.profile, rc.delays, rc.grid, rc.history); break;
        case Scheme::Semilinear:
            states = integrate_semilinear(rc.params, drive, rc.profile, rc.delays, rc.grid, rc.history);
            break;
        case Scheme::MapLimit: throw ConfigError("the map limit is defined for feed-forward networks only");
        }
    }
    out.add("nodes.csv", io::node_grid_csv(rc.grid, states));
    if (rc.mode == Mode::FeedForward && y.size() > 0) out.add("output.csv", io::output_csv(y));
    if (opt.substeps) {
        if (rc.scheme != Scheme::Semilinear) throw ConfigError("--substeps needs the semilinear scheme");
        const DriveSignal drive = rc.mode == Mode::FeedForward ? semilinear_drive(rc.network, rc.input)
                                                               : recurrent_drive(rc.recurrent, rc.inputs);
        out.add("reference.csv", io::node_grid_csv(rc.grid, integrate_reference(rc.params, drive, rc.profile, rc.delays, rc.grid,
                                                                                 rc.history, *opt.substeps)));
    }
    if (opt.emit_weights) detail::emit_weights(rc, out);
    log << "simulated " << rc.grid.node_count() << " nodes\n";
    return kExitPass;
}

inline int cmd_compile(const RunConfig& rc, OutputSet& out, std::ostream& log)
{
    if (rc.weights_supplied) {
        out.add("profile.csv", io::profile_csv(rc.profile, rc.delays));
        if (rc.mode == Mode::FeedForward) {
            const Eigen::MatrixXd biases = hidden_biases(rc.network);
            out.add("biases.csv", io::matrix_csv(biases));
        }
        log << "compiled weights into a modulation profile\n";
    }
    else {
        detail::emit_weights(rc, out);
        log << "assembled weight matrices from the modulation profile\n";
    }
    return kExitPass;
}

inline int cmd_verify(const RunConfig& rc, const CommandOptions& opt, OutputSet& out, std::ostream& log)
{
    bool pass = false;
    if (opt.check == "equivalence") {
        if (rc.scheme == Scheme::MapLimit) throw ConfigError("equivalence needs the general or semilinear scheme");
        std::string rows = "case,seed,max_abs_error,max_rel_error,argmax_segment,argmax_node,pass\n";
        EquivalenceReport worst;
        worst.tolerance = rc.tolerance;
        worst.seed = rc.seed;
        pass = true;
        auto record = [&](std::size_t index, const EquivalenceReport& r) {
            rows += detail::equivalence_row(index, r);
            pass = pass && r.pass;
            if (index == 0 || r.max_rel_error > worst.max_rel_error) worst = r;
        };
        if (rc.mode == Mode::FeedForward) {
            record(0, check_dde_vs_network(FeedForwardCase{rc.network, rc.delays, rc.input, rc.seed, std::nullopt}, rc.scheme,
                                           rc.rhs, rc.tolerance));
            for (std::size_t i = 1; i <= rc.random_cases; ++i)
                record(i, check_dde_vs_network(random_feed_forward_case(rc.seed + i, RandomCaseLimits{}, rc.params), rc.scheme,
                                               rc.rhs, rc.tolerance));
        }
        else {
            record(0, check_dde_vs_network(RecurrentCase{rc.recurrent, rc.inputs, rc.seed, std::nullopt}, rc.scheme, rc.params,
                                           rc.rhs, rc.tolerance));
            for (std::size_t i = 1; i <= rc.random_cases; ++i)
                record(i, check_dde_vs_network(random_recurrent_case(rc.seed + i, rc.grid.nodes(), rc.grid.segments(), false),
                                               rc.scheme, rc.params, rc.rhs, rc.tolerance));
        }
        worst.pass = pass;
        Summary s = summarize(worst);
        s.insert(s.begin(), {"cases", std::to_string(rc.random_cases + 1)});
        s.insert(s.begin(), {"check", "equivalence"});
        out.add("equivalence.csv", rows);
        out.add("equivalence_summary.txt", io::summary_text(s));
    }
    else if (opt.check == "maplimit") {
        if (rc.mode != Mode::FeedForward) throw ConfigError("maplimit needs a feed-forward network");
        const SweepReport r = map_limit_sweep(rc.network, rc.input, rc.thetas);
        pass = r.pass;
        Summary s = summarize(r);
        s.insert(s.begin(), {"check", "maplimit"});
        out.add("maplimit.csv", detail::sweep_csv(r));
        out.add("maplimit_summary.txt", io::summary_text(s));
    }
    else if (opt.check == "convergence") {
        const ConvergenceProblem p = detail::convergence_problem(rc);
        const SweepReport r = theta_convergence_sweep(p, rc.convergence_nodes, opt.substeps.value_or(16));
        pass = r.pass;
        Summary s = summarize(r);
        s.insert(s.begin(), {"check", "convergence"});
        out.add("convergence.csv", detail::sweep_csv(r));
        out.add("convergence_summary.txt", io::summary_text(s));
    }
    else if (opt.check == "history") {
        const std::size_t depth = rc.delays.units().back();
        const DriveSignal drive = rc.mode == Mode::FeedForward ? semilinear_drive(rc.network, rc.input)
                                                               : recurrent_drive(rc.recurrent, rc.inputs);
        const History zero{rc.history.x0, std::vector<double>(depth, 0.0)};
        const History random = random_history(rc.seed, rc.history.x0, depth);
        const EquivalenceReport r =
            history_independence_check(rc.params, drive, rc.profile, rc.delays, rc.grid, zero, random, rc.seed);
        pass = r.pass;
        Summary s = summarize(r);
        s.insert(s.begin(), {"check", "history"});
        out.add("history_summary.txt", io::summary_text(s));
    }
    else if (opt.check == "topology") {
        const TopologyReport r = topology_check(rc.delays, rc.grid);
        pass = r.pass;
        Summary s = summarize(r);
        s.insert(s.begin(), {"check", "topology"});
        out.add("topology_summary.txt", io::summary_text(s));
    }
    else {
        throw ConfigError("unknown check '" + opt.check + "' (equivalence, maplimit, convergence, history, topology)");
    }
    log << opt.check << ": " << (pass ? "pass" : "FAIL") << "\n";
    return pass ? kExitPass : kExitCheckFailed;
}

inline int run(int argc, const char* const* argv, std::ostream& log = std::cout, std::ostream& err = std::cerr)
{
    CLI::App app{"Delay-system network emulator"};
    app.require_subcommand(1);
    CommandOptions opt;
    std::uint64_t seed = 0;
    std::size_t substeps = 0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config, "configuration file")->required();
        sub->add_option("--out", opt.out, "output directory");
        sub->add_option("--seed", seed, "random seed (overrides [run] seed)");
    };
    CLI::App* simulate = app.add_subcommand("simulate", "integrate the delay system and write node values");
    add_common(simulate);
    simulate->add_flag("--emit-weights", opt.emit_weights, "also write the assembled weight matrices");
    simulate->add_option("--substeps", substeps, "also write a reference solution with this many substeps")
        ->check(CLI::PositiveNumber);
    CLI::App* compile = app.add_subcommand("compile", "convert weights to a modulation profile or back");
    add_common(compile);
    CLI::App* verify = app.add_subcommand("verify", "run a verification check");
    add_common(verify);
    verify->add_option("--check", opt.check, "equivalence, maplimit, convergence, history or topology")->required();
    verify->add_option("--substeps", substeps, "initial reference substeps for convergence")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    }
    catch (const CLI::CallForHelp& e) {
        return app.exit(e, log, err);
    }
    catch (const CLI::ParseError& e) {
        app.exit(e, log, err);
        return kExitConfigError;
    }
    for (CLI::App* sub : {simulate, compile, verify}) {
        if (!sub->parsed()) continue;
        if (sub->count("--seed") > 0) opt.seed = seed;
        if (sub->get_option_no_throw("--substeps") && sub->count("--substeps") > 0) opt.substeps = substeps;
    }

    try {
        const io::Config cfg = io::Config::load(opt.config);
        const RunConfig rc = load_run_config(cfg, opt.seed);
        const bool history_check = verify->parsed() && opt.check == "history";
        const ValidationReport report = validate_run(rc, history_check);
        if (!report.ok()) {
            err << "configuration invalid:\n" << report.summary();
            return kExitConfigError;
        }
        OutputSet out;
        int code = kExitPass;
        if (simulate->parsed())
            code = cmd_simulate(rc, opt, out, log);
        else if (compile->parsed())
            code = cmd_compile(rc, out, log);
        else
            code = cmd_verify(rc, opt, out, log);
        out.write(opt.out);
        return code;
    }
    catch (const NumericalBlowup& e) {
        err << "error: " << e.what() << "\n";
        return kExitBlowup;
    }
    catch (const UnrealizableWeights& e) {
        err << "error: " << e.what() << "\n";
        for (const auto& entry : e.entries()) err << "  unsupported entry (" << entry.row << "," << entry.column << ")\n";
        return kExitConfigError;
    }
    catch (const OracleFailure& e) {
        err << "error: " << e.what() << "\n";
        return kExitCheckFailed;
    }
    catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitConfigError;
    }
    catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return kExitConfigError;
    }
}

}  // namespace ddenet::cli
