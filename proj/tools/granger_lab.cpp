// granger_lab command-line interface.
//
// Exit codes: 0 success, 2 invalid input (flags, CSV, off-grid plane),
// 3 runtime failure (degenerate fits, I/O), 4 resume file conflicts with
// the requested configuration.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "granger_lab/granger_lab.hpp"

namespace fs = std::filesystem;
using namespace granger_lab;

namespace {

struct UsageError : Error {
    using Error::Error;
};

struct ResumeConflict : Error {
    using Error::Error;
};

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    for (auto f : io::split(s, ','))
        if (!f.empty()) out.emplace_back(f);
    return out;
}

std::vector<double> parse_grid(const std::string& spec) {
    const auto parts = io::split(spec, ':');
    try {
        if (parts.size() == 1) return {io::parse_number(parts[0])};
        if (parts.size() != 3) throw InvalidArgument("grid must be lo:hi:step");
        return uniform_grid(io::parse_number(parts[0]), io::parse_number(parts[1]), io::parse_number(parts[2]));
    } catch (const InvalidArgument& e) {
        throw UsageError("invalid grid '" + spec + "': " + e.what());
    }
}

std::vector<Criterion> parse_criteria(const std::string& s) {
    std::vector<Criterion> out;
    for (const auto& c : split_list(s)) out.push_back(parse_criterion(c));
    if (out.empty()) throw UsageError("no criteria given");
    return out;
}

std::string join_criteria(const std::vector<Criterion>& cs) {
    std::string s;
    for (auto c : cs) s += (s.empty() ? "" : ",") + to_string(c);
    return s;
}

std::vector<std::size_t> parse_sizes(const std::string& s) {
    std::vector<std::size_t> out;
    for (const auto& f : split_list(s)) {
        const double v = io::parse_number(f);
        if (v < 1 || v != std::floor(v)) throw UsageError("sample sizes must be positive integers");
        out.push_back(static_cast<std::size_t>(v));
    }
    if (out.empty()) throw UsageError("sample-size list is empty");
    return out;
}

LagSpec lag_spec(std::size_t lags) { return LagSpec{lags, {lags, lags}}; }

// --- option sets; each mirrors itself into a manifest --------------------------

struct SweepAlphaOptions {
    std::string topology = "driver";
    std::size_t n = 50;
    std::string alpha_grid = "0.05:0.5:0.05";
    std::string criteria = "lr,wald,rao";
    std::size_t iterations = 1000;
    std::uint64_t seed = 1;
    std::size_t lags = 2;

    void echo(io::Manifest& m) const {
        m.set("topology", topology);
        m.set("n", std::to_string(n));
        m.set("alpha_grid", alpha_grid);
        m.set("criteria", criteria);
        m.set("iterations", std::to_string(iterations));
        m.set("seed", std::to_string(seed));
        m.set("lags", std::to_string(lags));
    }
    void load(const io::Manifest& m) {
        topology = m.get("topology").value_or(topology);
        n = std::stoul(m.get("n").value_or(std::to_string(n)));
        alpha_grid = m.get("alpha_grid").value_or(alpha_grid);
        criteria = m.get("criteria").value_or(criteria);
        iterations = std::stoul(m.get("iterations").value_or(std::to_string(iterations)));
        seed = std::stoull(m.get("seed").value_or(std::to_string(seed)));
        lags = std::stoul(m.get("lags").value_or(std::to_string(lags)));
    }
};

struct SweepNOptions {
    std::string topology = "driver";
    double alpha = 0.3;
    std::string sizes = "25,35,50,75,100,150,175,200,250,300";
    std::string criteria = "lr,wald,rao";
    std::size_t cases = 1000;
    std::uint64_t seed = 1;
    std::size_t lags = 2;

    void echo(io::Manifest& m) const {
        m.set("topology", topology);
        m.set("alpha", io::format_number(alpha));
        m.set("sizes", sizes);
        m.set("criteria", criteria);
        m.set("cases", std::to_string(cases));
        m.set("seed", std::to_string(seed));
        m.set("lags", std::to_string(lags));
    }
    void load(const io::Manifest& m) {
        topology = m.get("topology").value_or(topology);
        alpha = io::parse_number(m.get("alpha").value_or(io::format_number(alpha)));
        sizes = m.get("sizes").value_or(sizes);
        criteria = m.get("criteria").value_or(criteria);
        cases = std::stoul(m.get("cases").value_or(std::to_string(cases)));
        seed = std::stoull(m.get("seed").value_or(std::to_string(seed)));
        lags = std::stoul(m.get("lags").value_or(std::to_string(lags)));
    }
};

struct PhaseOptions {
    std::string noise = "intrinsic";
    std::string topology = "driver";
    std::size_t n = 300;
    double alpha = 0.05;
    std::string criterion = "wald";
    std::size_t iterations = 500;
    std::string grid = "-40:40:5";
    std::string grid_x, grid_y, grid_z;
    std::uint64_t seed = 1;
    std::size_t lags = 2;
    bool resume = false;

    std::string axis_grid(std::size_t a) const {
        const std::string& g = a == 0 ? grid_x : a == 1 ? grid_y : grid_z;
        return g.empty() ? grid : g;
    }

    void echo(io::Manifest& m) const {
        m.set("noise", noise);
        m.set("topology", topology);
        m.set("n", std::to_string(n));
        m.set("alpha", io::format_number(alpha));
        m.set("criterion", criterion);
        m.set("iterations", std::to_string(iterations));
        m.set("grid_x", axis_grid(0));
        m.set("grid_y", axis_grid(1));
        m.set("grid_z", axis_grid(2));
        m.set("seed", std::to_string(seed));
        m.set("lags", std::to_string(lags));
    }
    void load(const io::Manifest& m) {
        noise = m.get("noise").value_or(noise);
        topology = m.get("topology").value_or(topology);
        n = std::stoul(m.get("n").value_or(std::to_string(n)));
        alpha = io::parse_number(m.get("alpha").value_or(io::format_number(alpha)));
        criterion = m.get("criterion").value_or(criterion);
        iterations = std::stoul(m.get("iterations").value_or(std::to_string(iterations)));
        grid_x = m.get("grid_x").value_or(grid);
        grid_y = m.get("grid_y").value_or(grid);
        grid_z = m.get("grid_z").value_or(grid);
        seed = std::stoull(m.get("seed").value_or(std::to_string(seed)));
        lags = std::stoul(m.get("lags").value_or(std::to_string(lags)));
    }
};

struct RenderOptions {
    std::string input;
    std::string output;
    std::string axis = "z";
    double value = 40.0;
    std::string rate = "unidentified";
    std::size_t scale = 8;
};

struct AnalyzeOptions {
    std::string input;
    std::size_t lags = 2;
    std::string criterion = "wald";
    double alpha = 0.05;
    bool always_conditional = false;
    bool json = false;
};

struct GenerateOptions {
    std::string topology = "driver";
    std::string noise = "fixed";
    std::string params = "0,0.1,0.5";
    std::size_t n = 300;
    std::size_t burn_in = 100;
    double ar = 0.3;
    std::uint64_t seed = 1;
    std::string output;
};

// --- runners -------------------------------------------------------------------

struct RunContext {
    std::string out_dir = ".";
    std::size_t workers = 1;
};

void write_manifest(const RunContext& ctx, io::Manifest m, const std::string& started,
                    const std::vector<std::string>& outputs) {
    m.set("version", kVersion);
    m.set("started", started);
    m.set("finished", utc_now());
    std::string joined;
    for (const auto& o : outputs) joined += (joined.empty() ? "" : ",") + o;
    m.set("outputs", joined);
    io::write_file((fs::path(ctx.out_dir) / "manifest.txt").string(), m.serialize());
}

int run_sweep_alpha(const SweepAlphaOptions& o, const RunContext& ctx) {
    const auto started = utc_now();
    SignificanceSweepConfig cfg;
    cfg.topology = parse_topology(o.topology);
    cfg.n_points = o.n;
    cfg.alphas = parse_grid(o.alpha_grid);
    if (cfg.alphas.empty()) throw UsageError("alpha grid is empty");
    cfg.criteria = parse_criteria(o.criteria);
    cfg.iterations = o.iterations;
    cfg.seed = o.seed;
    cfg.workers = ctx.workers;
    cfg.lags = lag_spec(o.lags);
    const auto sweep = sweep_significance(cfg);

    fs::create_directories(ctx.out_dir);
    const auto csv = (fs::path(ctx.out_dir) / "sweep_alpha.csv").string();
    io::write_file(csv, io::significance_sweep_csv(sweep.result));
    io::Manifest m;
    m.set("experiment", "sweep-alpha");
    o.echo(m);
    write_manifest(ctx, m, started, {"sweep_alpha.csv"});
    for (std::size_t c = 0; c < cfg.criteria.size(); ++c)
        std::cout << "optimal alpha (" << to_string(cfg.criteria[c]) << "): " << io::format_number(sweep.optimal_alpha[c])
                  << "\n";
    return 0;
}

int run_sweep_n(const SweepNOptions& o, const RunContext& ctx) {
    const auto started = utc_now();
    SampleSizeSweepConfig cfg;
    cfg.topology = parse_topology(o.topology);
    cfg.alpha = o.alpha;
    if (!(o.alpha > 0.0 && o.alpha < 1.0)) throw UsageError("--alpha must lie in (0, 1)");
    cfg.sizes = parse_sizes(o.sizes);
    cfg.criteria = parse_criteria(o.criteria);
    cfg.cases = o.cases;
    cfg.seed = o.seed;
    cfg.workers = ctx.workers;
    cfg.lags = lag_spec(o.lags);
    const auto sweep = sweep_sample_size(cfg);

    fs::create_directories(ctx.out_dir);
    io::write_file((fs::path(ctx.out_dir) / "sweep_n.csv").string(), io::sample_size_sweep_csv(sweep));
    io::Manifest m;
    m.set("experiment", "sweep-n");
    o.echo(m);
    write_manifest(ctx, m, started, {"sweep_n.csv"});
    const auto last = cfg.sizes.size() - 1;
    for (std::size_t c = 0; c < cfg.criteria.size(); ++c) {
        const auto& r = sweep.result.rates[c][last];
        std::cout << to_string(cfg.criteria[c]) << " at n=" << cfg.sizes[last]
                  << ": spurious=" << io::format_number(r.spurious_rate())
                  << " unidentified=" << io::format_number(r.unidentified_rate()) << "\n";
    }
    return 0;
}

// Rebuilds a cell estimate from a checkpoint row; rates are exact count / iterations.
RateEstimate estimate_from_row(const io::PhaseRow& row) {
    auto count = [&](double rate) { return static_cast<std::size_t>(std::llround(rate * static_cast<double>(row.iterations))); };
    RateEstimate r;
    r.iterations = row.iterations;
    r.spurious_count = count(row.spurious_rate);
    r.unidentified_count = count(row.unidentified_rate);
    r.link_counts[*EdgeSet::slot(kXZ)] = count(row.rate_xz);
    r.link_counts[*EdgeSet::slot(kYZ)] = count(row.rate_yz);
    return r;
}

int run_phase_space(const PhaseOptions& o, const RunContext& ctx) {
    const auto started = utc_now();
    PhaseSpaceConfig cfg;
    cfg.noise = parse_noise_kind(o.noise);
    if (cfg.noise == NoiseKind::FixedSigma) throw UsageError("--noise must be intrinsic or extrinsic");
    cfg.topology = parse_topology(o.topology);
    cfg.n = o.n;
    cfg.alpha = o.alpha;
    if (!(o.alpha > 0.0 && o.alpha < 1.0)) throw UsageError("--alpha must lie in (0, 1)");
    cfg.criterion = parse_criterion(o.criterion);
    cfg.iterations = o.iterations;
    for (std::size_t a = 0; a < 3; ++a) cfg.grids[a] = parse_grid(o.axis_grid(a));
    cfg.seed = o.seed;
    cfg.workers = ctx.workers;
    cfg.lags = lag_spec(o.lags);

    fs::create_directories(ctx.out_dir);
    const auto checkpoint = (fs::path(ctx.out_dir) / "phase_space.checkpoint.csv").string();
    const auto checkpoint_config = (fs::path(ctx.out_dir) / "phase_space.checkpoint.txt").string();
    io::Manifest echo;
    o.echo(echo);

    std::map<std::size_t, RateEstimate> completed;
    if (o.resume && fs::exists(checkpoint)) {
        if (!fs::exists(checkpoint_config) || io::read_file(checkpoint_config) != echo.serialize())
            throw ResumeConflict("checkpoint was produced with a different configuration");
        std::vector<io::PhaseRow> rows;
        try {
            rows = io::parse_phase_csv(io::read_file(checkpoint));
        } catch (const Error& e) {
            throw ResumeConflict(std::string("checkpoint is unreadable: ") + e.what());
        }
        for (const auto& row : rows) {
            if (row.topology != to_string(cfg.topology) || row.noise_kind != to_string(cfg.noise) || row.n != cfg.n ||
                row.alpha != cfg.alpha || row.criterion != to_string(cfg.criterion) || row.iterations != cfg.iterations)
                throw ResumeConflict("checkpoint was produced with a different configuration");
            std::array<std::size_t, 3> idx{};
            try {
                for (std::size_t a = 0; a < 3; ++a) idx[a] = grid_position(cfg.grids[a], row.snr[a]);
            } catch (const OffGrid&) {
                throw ResumeConflict("checkpoint contains cells outside the requested grid");
            }
            completed[cfg.cell_index(idx[0], idx[1], idx[2])] = estimate_from_row(row);
        }
        std::cerr << "resuming: " << completed.size() << " of " << cfg.cell_count() << " cells already done\n";
    } else {
        io::write_file(checkpoint_config, echo.serialize());
        io::write_file(checkpoint, std::string(io::kPhaseHeader) + "\n");
    }

    std::ofstream append(checkpoint, std::ios::binary | std::ios::app);
    if (!append) throw Error("cannot open checkpoint '" + checkpoint + "'");
    PhaseSpaceHooks hooks;
    hooks.completed = &completed;
    hooks.on_cell = [&](std::size_t, const std::array<double, 3>& snr, const RateEstimate& r) {
        append << io::phase_row(cfg, snr, r);
        append.flush();
    };
    const auto grid = phase_space(cfg, hooks);
    append.close();

    io::write_file((fs::path(ctx.out_dir) / "phase_space.csv").string(), io::phase_grid_csv(grid));
    fs::remove(checkpoint);
    fs::remove(checkpoint_config);
    io::Manifest m;
    m.set("experiment", "phase-space");
    o.echo(m);
    write_manifest(ctx, m, started, {"phase_space.csv"});
    std::cout << "wrote " << cfg.cell_count() << " cells to " << (fs::path(ctx.out_dir) / "phase_space.csv").string()
              << "\n";
    return 0;
}

int run_render(const RenderOptions& o) {
    if (o.input.empty() || o.output.empty()) throw UsageError("--input and --output are required");
    const auto rows = io::parse_phase_csv(io::read_file(o.input));
    const auto plane = io::plane_from_rows(rows, parse_series(o.axis), o.value, parse_rate_kind(o.rate));
    io::write_file(o.output, io::ppm_bytes(io::render_plane(plane, o.scale)));
    std::cout << "rendered " << plane.row_values.size() << "x" << plane.col_values.size() << " plane (rows "
              << name_of(plane.row_axis) << ", columns " << name_of(plane.col_axis) << ") to " << o.output << "\n";
    return 0;
}

nlohmann::json decision_json(const LinkDecision& d) {
    return {{"link", to_string(d.link)},
            {"statistic", d.outcome.statistic},
            {"p_value", d.outcome.p_value},
            {"causal", d.decided_causal}};
}

int run_analyze(const AnalyzeOptions& o) {
    if (o.input.empty()) throw UsageError("--input is required");
    const auto sample = io::parse_sample_csv(io::read_file(o.input));
    GrangerConfig cfg;
    cfg.lags = lag_spec(o.lags);
    cfg.criterion = parse_criterion(o.criterion);
    cfg.significance = o.alpha;
    cfg.always_conditional = o.always_conditional;
    cfg.validate();
    const std::size_t needed = o.lags + 3 * o.lags + 2;
    if (sample.length() < needed)
        throw UsageError("input has " + std::to_string(sample.length()) + " rows; at least " + std::to_string(needed) +
                         " are needed for look-back " + std::to_string(o.lags));

    const auto result = infer_topology_detailed(sample, cfg);
    if (o.json) {
        nlohmann::json j;
        j["topology"] = result.topology.name();
        j["criterion"] = to_string(cfg.criterion);
        j["alpha"] = cfg.significance;
        j["edges"] = nlohmann::json::array();
        for (auto l : result.topology.edges().links()) j["edges"].push_back(to_string(l));
        j["bivariate"] = nlohmann::json::array();
        for (const auto& d : result.scan.forward) j["bivariate"].push_back(decision_json(d));
        for (const auto& d : result.scan.reverse) j["bivariate"].push_back(decision_json(d));
        j["conditional"] = nlohmann::json::array();
        if (result.conditional_xz) j["conditional"].push_back(decision_json(*result.conditional_xz));
        if (result.conditional_yz) j["conditional"].push_back(decision_json(*result.conditional_yz));
        std::cout << j.dump(2) << "\n";
        return 0;
    }
    std::cout << "topology: " << result.topology.name() << "\n";
    std::cout << "bivariate p-values (" << to_string(cfg.criterion) << "):\n";
    for (const auto& d : result.scan.forward)
        std::cout << "  " << to_string(d.link) << "  p=" << io::format_number(d.outcome.p_value)
                  << (d.decided_causal ? "  causal" : "") << "\n";
    for (const auto& d : result.scan.reverse)
        std::cout << "  " << to_string(d.link) << "  p=" << io::format_number(d.outcome.p_value)
                  << (d.decided_causal ? "  causal" : "") << "  (reverse)\n";
    if (result.conditional_step_run) {
        std::cout << "conditional p-values:\n";
        for (const auto* d : {&*result.conditional_xz, &*result.conditional_yz})
            std::cout << "  " << to_string(d->link) << "  p=" << io::format_number(d->outcome.p_value)
                      << (d->decided_causal ? "  causal" : "") << "\n";
    }
    std::cout << "edges:";
    for (auto l : result.topology.edges().links()) std::cout << " " << to_string(l);
    std::cout << "\n";
    return 0;
}

int run_generate(const GenerateOptions& o) {
    GeneratorConfig g;
    g.topology = parse_topology(o.topology);
    g.noise_kind = parse_noise_kind(o.noise);
    const auto params = split_list(o.params);
    if (params.size() != 3) throw UsageError("--params needs three comma-separated values");
    for (std::size_t i = 0; i < 3; ++i) g.sigmas_or_snrs[i] = io::parse_number(params[i]);
    g.length = o.n;
    g.burn_in = o.burn_in;
    g.ar_coefficient = o.ar;
    g.seed = o.seed;
    const auto csv = io::sample_csv(generate(g));
    if (o.output.empty() || o.output == "-")
        std::cout << csv;
    else
        io::write_file(o.output, csv);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Granger-causality engine and Monte Carlo experiment harness"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(0, 1);

    RunContext ctx;
    std::size_t threads = 0;
    std::string from_manifest;
    app.add_option("--from-manifest", from_manifest, "Re-run the experiment recorded in a manifest");
    auto* top_out = app.add_option("--out", ctx.out_dir, "Output directory (with --from-manifest)");
    app.add_option("--threads", threads, "Worker threads (default: GRANGER_LAB_THREADS or all cores)");

    SweepAlphaOptions sa;
    auto* cmd_sa = app.add_subcommand("sweep-alpha", "Rates against the significance level at fixed n");
    cmd_sa->add_option("--topology", sa.topology, "driver|indirect")->capture_default_str();
    cmd_sa->add_option("--n", sa.n, "Series length")->capture_default_str();
    cmd_sa->add_option("--alpha-grid", sa.alpha_grid, "lo:hi:step")->capture_default_str();
    cmd_sa->add_option("--criteria", sa.criteria, "Comma-separated list of lr,wald,rao,lm")->capture_default_str();
    cmd_sa->add_option("--iterations", sa.iterations)->capture_default_str();
    cmd_sa->add_option("--seed", sa.seed)->capture_default_str();
    cmd_sa->add_option("--lags", sa.lags, "Look-back for every series")->capture_default_str();
    cmd_sa->add_option("--out", ctx.out_dir, "Output directory")->capture_default_str();
    cmd_sa->add_option("--threads", threads);

    SweepNOptions sn;
    auto* cmd_sn = app.add_subcommand("sweep-n", "Rates against the sample size at fixed significance");
    cmd_sn->add_option("--topology", sn.topology, "driver|indirect")->capture_default_str();
    cmd_sn->add_option("--alpha", sn.alpha)->capture_default_str();
    cmd_sn->add_option("--sizes", sn.sizes, "Comma-separated increasing sizes")->capture_default_str();
    cmd_sn->add_option("--criteria", sn.criteria)->capture_default_str();
    cmd_sn->add_option("--cases", sn.cases, "Monte Carlo cases per size")->capture_default_str();
    cmd_sn->add_option("--seed", sn.seed)->capture_default_str();
    cmd_sn->add_option("--lags", sn.lags)->capture_default_str();
    cmd_sn->add_option("--out", ctx.out_dir)->capture_default_str();
    cmd_sn->add_option("--threads", threads);

    PhaseOptions ps;
    auto* cmd_ps = app.add_subcommand("phase-space", "Rates over a 3-D grid of per-series SNRs");
    cmd_ps->add_option("--noise", ps.noise, "intrinsic|extrinsic")->capture_default_str();
    cmd_ps->add_option("--topology", ps.topology)->capture_default_str();
    cmd_ps->add_option("--n", ps.n)->capture_default_str();
    cmd_ps->add_option("--alpha", ps.alpha)->capture_default_str();
    cmd_ps->add_option("--criterion", ps.criterion)->capture_default_str();
    cmd_ps->add_option("--iterations", ps.iterations)->capture_default_str();
    cmd_ps->add_option("--grid", ps.grid, "lo:hi:step shared by all axes")->capture_default_str();
    cmd_ps->add_option("--grid-x", ps.grid_x, "Override for the X axis");
    cmd_ps->add_option("--grid-y", ps.grid_y, "Override for the Y axis");
    cmd_ps->add_option("--grid-z", ps.grid_z, "Override for the Z axis");
    cmd_ps->add_option("--seed", ps.seed)->capture_default_str();
    cmd_ps->add_option("--lags", ps.lags)->capture_default_str();
    cmd_ps->add_flag("--resume", ps.resume, "Continue from the checkpoint in --out");
    cmd_ps->add_option("--out", ctx.out_dir)->capture_default_str();
    cmd_ps->add_option("--threads", threads);

    RenderOptions rd;
    auto* cmd_rd = app.add_subcommand("render", "Render a phase-space plane as a PPM heatmap");
    cmd_rd->add_option("--input", rd.input, "phase_space.csv")->required();
    cmd_rd->add_option("--output", rd.output, "Output .ppm path")->required();
    cmd_rd->add_option("--axis", rd.axis, "Fixed axis x|y|z")->capture_default_str();
    cmd_rd->add_option("--value", rd.value, "Fixed SNR in dB")->capture_default_str();
    cmd_rd->add_option("--rate", rd.rate, "spurious|unidentified|xz|yz")->capture_default_str();
    cmd_rd->add_option("--scale", rd.scale, "Pixels per cell edge")->capture_default_str();

    AnalyzeOptions an;
    auto* cmd_an = app.add_subcommand("analyze", "Infer the topology of a t,x,y,z CSV");
    cmd_an->add_option("--input", an.input)->required();
    cmd_an->add_option("--lags", an.lags)->capture_default_str();
    cmd_an->add_option("--criterion", an.criterion)->capture_default_str();
    cmd_an->add_option("--alpha", an.alpha)->capture_default_str();
    cmd_an->add_flag("--always-conditional", an.always_conditional, "Run the conditional step on every input");
    cmd_an->add_flag("--json", an.json, "Machine-readable output");

    GenerateOptions gn;
    auto* cmd_gn = app.add_subcommand("generate", "Write a synthetic t,x,y,z sample");
    cmd_gn->add_option("--topology", gn.topology)->capture_default_str();
    cmd_gn->add_option("--noise", gn.noise, "fixed|intrinsic|extrinsic")->capture_default_str();
    cmd_gn->add_option("--params", gn.params, "Sigmas (fixed) or SNRs in dB, as x,y,z")->capture_default_str();
    cmd_gn->add_option("--n", gn.n)->capture_default_str();
    cmd_gn->add_option("--burn-in", gn.burn_in)->capture_default_str();
    cmd_gn->add_option("--ar", gn.ar)->capture_default_str();
    cmd_gn->add_option("--seed", gn.seed)->capture_default_str();
    cmd_gn->add_option("--output", gn.output, "Path, or - for stdout");

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
        return 2;
    }

    ctx.workers = threads > 0 ? threads : default_workers();
    if (const char* env = std::getenv("GRANGER_LAB_THREADS"); env && threads > 0)
        ctx.workers = std::min(ctx.workers, default_workers());

    try {
        if (!from_manifest.empty()) {
            const auto m = io::Manifest::parse(io::read_file(from_manifest));
            const auto kind = m.get("experiment").value_or("");
            if (top_out->count() == 0) ctx.out_dir = fs::path(from_manifest).parent_path().string();
            if (ctx.out_dir.empty()) ctx.out_dir = ".";
            if (kind == "sweep-alpha") {
                SweepAlphaOptions o;
                o.load(m);
                return run_sweep_alpha(o, ctx);
            }
            if (kind == "sweep-n") {
                SweepNOptions o;
                o.load(m);
                return run_sweep_n(o, ctx);
            }
            if (kind == "phase-space") {
                PhaseOptions o;
                o.load(m);
                return run_phase_space(o, ctx);
            }
            throw UsageError("manifest names no known experiment");
        }
        if (*cmd_sa) return run_sweep_alpha(sa, ctx);
        if (*cmd_sn) return run_sweep_n(sn, ctx);
        if (*cmd_ps) return run_phase_space(ps, ctx);
        if (*cmd_rd) return run_render(rd);
        if (*cmd_an) return run_analyze(an);
        if (*cmd_gn) return run_generate(gn);
        std::cerr << app.help();
        return 2;
    } catch (const ResumeConflict& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const io::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const RankDeficient& e) {
        std::cerr << "error: " << e.what()
                  << "\nhint: a series is constant or an exact linear copy of another; remove it or add noise\n";
        return 3;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const InvalidArgument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const OffGrid& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
