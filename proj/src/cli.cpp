#include "hjbsl/cli.hpp"
#include "hjbsl/analysis.hpp"
#include "hjbsl/checks.hpp"
#include "hjbsl/parallel.hpp"
#include "hjbsl/trajectories.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"

namespace fs = std::filesystem;

namespace hjbsl {

namespace {

// Raised for invalid flag combinations and unusable inputs (exit code 2).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::string problem;
    std::optional<double> nu;
    std::optional<int> controls;
    std::optional<int> rings;
    std::optional<int> angles;
    bool sigma_off = false;
    std::optional<double> dx;
    std::optional<double> dt;
    std::optional<double> cfl;
    std::string mesh_file;
    std::string out_dir = "out";
    int workers = 0;
    bool refine_controls = false;
    bool inject_fault = false;
    std::vector<double> report_times;
    int levels = 4;
    std::optional<double> dx0;
    std::vector<std::uint64_t> seeds{1};
    std::vector<std::string> starts;
    std::string feedback = "gradient";
    int samples = 1000;
    std::uint64_t check_seed = 7;
};

void add_problem_options(CLI::App* cmd, RunConfig& cfg, bool problem_required)
{
    auto* opt = cmd->add_option("--problem", cfg.problem, "Built-in problem: test1, test2, test3 or test4");
    if (problem_required) opt->required();
    cmd->add_option("--nu", cfg.nu, "Viscosity of test1");
    cmd->add_option("--controls", cfg.controls, "Lattice points per control dimension (box control sets)");
    cmd->add_option("--rings", cfg.rings, "Rings of the disk control set");
    cmd->add_option("--angles", cfg.angles, "Angles per ring of the disk control set");
    cmd->add_flag("--sigma-off", cfg.sigma_off, "Switch the diffusion of test4 off");
    cmd->add_option("--workers", cfg.workers, "Worker threads (default: HJB_SL_WORKERS or all cores)");
    cmd->add_option("--out", cfg.out_dir, "Output directory")->capture_default_str();
    cmd->add_flag("--refine-controls", cfg.refine_controls, "Refine the control minimisation locally");
}

void add_step_options(CLI::App* cmd, RunConfig& cfg)
{
    cmd->add_option("--dx", cfg.dx, "Mesh resolution (meaning depends on the problem)");
    cmd->add_option("--dt", cfg.dt, "Time step");
    cmd->add_option("--cfl", cfg.cfl, "Time step as a multiple of dx");
}

std::map<std::string, double> problem_params(const RunConfig& cfg)
{
    std::map<std::string, double> p;
    if (cfg.nu) p["nu"] = *cfg.nu;
    if (cfg.controls) p["controls"] = *cfg.controls;
    if (cfg.rings) p["rings"] = *cfg.rings;
    if (cfg.angles) p["angles"] = *cfg.angles;
    if (cfg.sigma_off) {
        if (cfg.problem != "test4") throw ConfigError("--sigma-off only applies to test4");
        p["sigma"] = 0.0;
    }
    return p;
}

fs::path prepare_dir(const RunConfig& cfg, const std::string& sub)
{
    const fs::path dir = fs::path(cfg.out_dir) / sub;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
    return dir;
}

std::ofstream open_out(const fs::path& path)
{
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot write " + path.string());
    return f;
}

std::string number_tag(double v)
{
    std::ostringstream s;
    s << v;
    return s.str();
}

template <int Dim>
std::shared_ptr<const Mesh<Dim>> make_mesh(const ProblemSpec<Dim>& spec, const RunConfig& cfg)
{
    if (!cfg.mesh_file.empty()) {
        std::ifstream f(cfg.mesh_file);
        if (!f) throw ConfigError("cannot open mesh file " + cfg.mesh_file);
        return std::make_shared<const Mesh<Dim>>(load_mesh<Dim>(f, spec.problem.domain));
    }
    if (!cfg.dx) throw ConfigError("one of --dx or --mesh is required");
    if (!(*cfg.dx > 0.0)) throw ConfigError("--dx must be positive");
    return spec.mesh_for(*cfg.dx);
}

// Time step from --dt or --cfl; `fallback_cfl` applies when neither is set.
double time_step(const RunConfig& cfg, double dx, std::optional<double> fallback_cfl)
{
    if (cfg.dt && cfg.cfl) throw ConfigError("give only one of --dt and --cfl");
    if (cfg.dt) {
        if (!(*cfg.dt > 0.0)) throw ConfigError("--dt must be positive");
        return *cfg.dt;
    }
    const auto c = cfg.cfl ? cfg.cfl : fallback_cfl;
    if (!c) throw ConfigError("one of --dt and --cfl is required");
    if (!(*c > 0.0)) throw ConfigError("--cfl must be positive");
    return *c * dx;
}

SolveOptions solve_options(const RunConfig& cfg)
{
    SolveOptions o;
    o.workers = cfg.workers;
    o.minimize.refine = cfg.refine_controls;
    o.minimize.scheme.flip_minus_weight = cfg.inject_fault;
    return o;
}

template <int Dim>
nlohmann::json mesh_json(const Mesh<Dim>& mesh, const ProblemSpec<Dim>& spec, const RunConfig& cfg)
{
    return {{"source", cfg.mesh_file.empty() ? "generated" : cfg.mesh_file},
            {"convention", spec.mesh_convention},
            {"vertices", mesh.num_vertices()},
            {"interior", mesh.interior_nodes().size()},
            {"elements", mesh.num_elements()},
            {"mesh_size", mesh.mesh_size()},
            {"regularity", mesh.regularity()}};
}

template <int Dim>
int cmd_solve(const ProblemSpec<Dim>& spec, const RunConfig& cfg, std::ostream& out)
{
    const auto mesh = make_mesh(spec, cfg);
    const double dx = cfg.dx ? *cfg.dx : mesh->mesh_size();
    if (cfg.dt.has_value() == cfg.cfl.has_value()) throw ConfigError("exactly one of --dt and --cfl is required");
    const double dt = time_step(cfg, dx, std::nullopt);
    auto options = solve_options(cfg);
    options.report_times = cfg.report_times;
    const auto sol = solve(spec.problem, mesh, dt, options);

    const auto fields_dir = prepare_dir(cfg, "fields");
    const auto reports_dir = prepare_dir(cfg, "reports");
    nlohmann::json files = nlohmann::json::array();
    std::vector<double> times{0.0};
    times.insert(times.end(), cfg.report_times.begin(), cfg.report_times.end());
    for (double t : times) {
        const auto path = fields_dir / (spec.name + "_t" + number_tag(t) + ".csv");
        auto f = open_out(path);
        write_field_csv(f, sol.level(sol.level_index(t)));
        files.push_back(path.string());
    }

    const double bound = spec.psi_sup + spec.problem.horizon * spec.f_sup;
    nlohmann::json summary{{"problem", spec.name},
                           {"params", spec.params},
                           {"controls", spec.problem.controls.descriptor.describe()},
                           {"control_count", spec.problem.controls.size()},
                           {"refine_controls", cfg.refine_controls},
                           {"mesh", mesh_json(*mesh, spec, cfg)},
                           {"dx", dx},
                           {"dt", sol.dt},
                           {"requested_dt", sol.requested_dt},
                           {"dt_adjusted", sol.dt_adjusted},
                           {"steps", sol.steps},
                           {"horizon", sol.horizon},
                           {"max_abs_v", sol.max_abs},
                           {"max_abs_v0", sol.level(0).values.cwiseAbs().maxCoeff()},
                           {"stability_bound", bound},
                           {"theory_covered", spec.theory_covered},
                           {"workers", sol.workers},
                           {"foot_table", sol.used_table},
                           {"wall_seconds", sol.wall_seconds},
                           {"fields", files}};
    if (spec.exact_t0) summary["err_linf_t0"] = linf_error_t0(sol, spec.exact_t0);
    {
        auto f = open_out(reports_dir / (spec.name + "_solve.json"));
        f << summary.dump(2) << '\n';
    }

    out << spec.name << ": " << mesh->num_vertices() << " nodes, " << sol.steps << " steps of dt=" << sol.dt;
    if (sol.dt_adjusted) out << " (adjusted from " << sol.requested_dt << ")";
    out << ", max|V|=" << sol.max_abs << " (bound " << bound << ")";
    if (spec.exact_t0) out << ", E_inf=" << summary["err_linf_t0"].get<double>();
    out << ", " << std::fixed << std::setprecision(2) << sol.wall_seconds << " s\n" << std::defaultfloat;
    if (!spec.theory_covered) out << "note: discontinuous boundary data, convergence theory does not apply\n";
    return kExitOk;
}

double default_dx0(const std::string& problem)
{
    if (problem == "test2") return 0.5;
    return 0.04;
}

template <int Dim>
int cmd_converge(const ProblemSpec<Dim>& spec, const RunConfig& cfg, std::ostream& out)
{
    if (cfg.dt) throw ConfigError("converge takes --cfl, not --dt");
    if (!cfg.mesh_file.empty()) throw ConfigError("converge generates its own meshes");
    if (cfg.levels < 1) throw ConfigError("--levels must be at least 1");
    const double cfl = cfg.cfl.value_or(1.0);
    if (!(cfl > 0.0)) throw ConfigError("--cfl must be positive");
    const double dx0 = cfg.dx0.value_or(default_dx0(spec.name));
    if (!(dx0 > 0.0)) throw ConfigError("--dx0 must be positive");
    if (!spec.exact_t0) throw ConfigError(spec.name + " has no exact solution to converge to");

    const auto report = refine_study(spec, dx0, cfg.levels, cfl, solve_options(cfg));
    const auto dir = prepare_dir(cfg, "reports");
    const std::string stem = spec.name + "_converge_cfl" + number_tag(cfl);
    {
        auto f = open_out(dir / (stem + ".csv"));
        report.write_csv(f);
    }
    {
        auto j = report.to_json();
        j["workers"] = resolve_workers(cfg.workers);
        j["dx0"] = dx0;
        j["levels"] = cfg.levels;
        j["refine_controls"] = cfg.refine_controls;
        auto f = open_out(dir / (stem + ".json"));
        f << j.dump(2) << '\n';
    }

    out << spec.name << ", dt = " << cfl << " dx, controls " << report.controls << '\n';
    out << std::setw(10) << "dx" << std::setw(12) << "dt" << std::setw(9) << "nodes" << std::setw(12) << "E_inf"
        << std::setw(8) << "order" << std::setw(10) << "seconds" << '\n';
    for (const auto& r : report.rows) {
        std::ostringstream ord;
        if (r.order)
            ord << std::fixed << std::setprecision(2) << *r.order;
        else
            ord << "-";
        out << std::setw(10) << std::setprecision(4) << r.dx << std::setw(12) << r.dt << std::setw(9) << r.nodes
            << std::setw(12) << std::setprecision(3) << std::scientific << r.err_linf << std::defaultfloat
            << std::setw(8) << ord.str() << std::setw(10) << std::fixed << std::setprecision(2) << r.seconds
            << std::defaultfloat << '\n';
    }
    return kExitOk;
}

int cmd_check(const AnyProblemSpec& any, const RunConfig& cfg, std::ostream& out)
{
    CheckOptions o;
    if (cfg.dx) o.dx = *cfg.dx;
    if (cfg.dt) throw ConfigError("check takes --cfl, not --dt");
    o.cfl = cfg.cfl.value_or(1.0);
    if (!(o.cfl > 0.0)) throw ConfigError("--cfl must be positive");
    if (cfg.samples < 1) throw ConfigError("--samples must be positive");
    o.samples = cfg.samples;
    o.seed = cfg.check_seed;
    o.workers = cfg.workers;
    o.scheme.flip_minus_weight = cfg.inject_fault;
    if (cfg.dx0) o.consistency_dx0 = *cfg.dx0;
    o.consistency_levels = cfg.levels;

    const auto results = run_property_suite(any, o);
    bool all = true;
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : results) {
        out << (r.passed ? "PASS  " : "FAIL  ") << r.name << ": " << r.detail << '\n';
        all = all && r.passed;
        j.push_back({{"name", r.name}, {"passed", r.passed}, {"detail", r.detail}, {"series", r.series}});
    }
    const auto name = std::visit([](const auto& s) { return s.name; }, any);
    auto f = open_out(prepare_dir(cfg, "reports") / (name + "_check.json"));
    f << nlohmann::json{{"problem", name}, {"fault_injected", cfg.inject_fault}, {"results", j}}.dump(2) << '\n';
    return all ? kExitOk : kExitCheckFailed;
}

template <int Dim>
int cmd_trajectories(const ProblemSpec<Dim>& spec, const RunConfig& cfg, std::ostream& out)
{
    std::vector<Point<Dim>> starts;
    for (const auto& s : cfg.starts) {
        std::stringstream ss(s);
        Point<Dim> p;
        std::string item;
        int d = 0;
        while (std::getline(ss, item, ',')) {
            if (d >= Dim) throw ConfigError("--start '" + s + "' has too many coordinates");
            try {
                p[d++] = std::stod(item);
            } catch (const std::exception&) {
                throw ConfigError("--start '" + s + "' is not a list of numbers");
            }
        }
        if (d != Dim) throw ConfigError("--start '" + s + "' needs " + std::to_string(Dim) + " coordinates");
        starts.push_back(p);
    }
    if (starts.empty()) {
        if constexpr (Dim == 2) {
            if (spec.name == "test4") starts = room_exit_starts();
        }
        if (starts.empty()) throw ConfigError("--start is required for " + spec.name);
    }
    for (const auto& p : starts)
        if (!spec.problem.domain.inside(p)) throw ConfigError("a starting point lies outside the domain");
    if (cfg.seeds.empty()) throw ConfigError("--seeds needs at least one seed");

    TrajectoryOptions topt;
    if (cfg.feedback == "gradient")
        topt.feedback = Feedback::gradient;
    else if (cfg.feedback == "argmin")
        topt.feedback = Feedback::argmin;
    else
        throw ConfigError("--feedback must be gradient or argmin");

    RunConfig mcfg = cfg;
    if (!mcfg.dx && mcfg.mesh_file.empty()) mcfg.dx = std::numbers::sqrt2 / 50.0;
    const auto mesh = make_mesh(spec, mcfg);
    const double dx = mcfg.dx ? *mcfg.dx : mesh->mesh_size();
    const double dt = time_step(cfg, dx, 1.0);
    auto options = solve_options(cfg);
    options.keep_all_levels = true;
    const auto sol = solve(spec.problem, mesh, dt, options);
    const auto records = simulate_batch(sol, spec, starts, cfg.seeds, topt, cfg.workers);

    const auto dir = prepare_dir(cfg, "trajectories");
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        const std::size_t start = i / cfg.seeds.size();
        const std::string file = spec.name + "_P" + std::to_string(start + 1) + "_seed" + std::to_string(r.seed) + ".csv";
        auto f = open_out(dir / file);
        write_trajectory_csv(f, r);
        out << "P" << start + 1 << " seed " << r.seed << ": ";
        if (r.status == TrajectoryStatus::exited)
            out << "exit through " << r.exit_label << " at t=" << r.exit_time;
        else
            out << "reached the horizon";
        out << ", cost " << r.total_cost() << '\n';
    }
    auto summary = batch_summary(records);
    summary["problem"] = spec.name;
    summary["params"] = spec.params;
    summary["dx"] = dx;
    summary["dt"] = sol.dt;
    summary["substep"] = records.empty() ? 0.0 : records.front().step;
    summary["feedback"] = cfg.feedback;
    summary["max_abs_v"] = sol.max_abs;
    auto f = open_out(dir / "summary.json");
    f << summary.dump(2) << '\n';
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Semi-Lagrangian solver for Dirichlet HJB equations", "hjb-sl"};
    app.require_subcommand(1);
    RunConfig cfg;

    auto* solve_cmd = app.add_subcommand("solve", "Solve a problem and dump value fields");
    add_problem_options(solve_cmd, cfg, true);
    add_step_options(solve_cmd, cfg);
    solve_cmd->add_option("--mesh", cfg.mesh_file, "Mesh file in the text format");
    solve_cmd->add_option("--report-times", cfg.report_times, "Extra times to dump besides t=0");
    solve_cmd->add_flag("--inject-fault", cfg.inject_fault)->group("");

    auto* conv_cmd = app.add_subcommand("converge", "Refinement study against the exact solution");
    add_problem_options(conv_cmd, cfg, true);
    add_step_options(conv_cmd, cfg);
    conv_cmd->add_option("--levels", cfg.levels, "Number of levels, each halving dx")->capture_default_str();
    conv_cmd->add_option("--dx0", cfg.dx0, "Coarsest dx");

    auto* check_cmd = app.add_subcommand("check", "Run the scheme property suite");
    add_problem_options(check_cmd, cfg, false);
    add_step_options(check_cmd, cfg);
    check_cmd->add_option("--samples", cfg.samples, "Random samples per property")->capture_default_str();
    check_cmd->add_option("--seed", cfg.check_seed, "Seed of the random samples")->capture_default_str();
    check_cmd->add_option("--levels", cfg.levels, "Levels of the consistency study")->capture_default_str();
    check_cmd->add_option("--dx0", cfg.dx0, "Coarsest dx of the consistency study");
    check_cmd->add_flag("--inject-fault", cfg.inject_fault)->group("");

    auto* traj_cmd = app.add_subcommand("trajectories", "Simulate feedback-controlled trajectories");
    add_problem_options(traj_cmd, cfg, false);
    add_step_options(traj_cmd, cfg);
    traj_cmd->add_option("--mesh", cfg.mesh_file, "Mesh file in the text format");
    traj_cmd->add_option("--seeds", cfg.seeds, "Seeds of the noise")->capture_default_str();
    traj_cmd->add_option("--start", cfg.starts, "Starting point 'x1,x2' (repeatable; default: the six room starts)");
    traj_cmd->add_option("--feedback", cfg.feedback, "gradient or argmin")->capture_default_str();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n";
        const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
        err << sub->help();
        return kExitConfig;
    }

    try {
        if (check_cmd->parsed() && cfg.problem.empty()) cfg.problem = "test1";
        if (traj_cmd->parsed() && cfg.problem.empty()) cfg.problem = "test4";
        if (check_cmd->parsed() && cfg.problem == "test1" && !cfg.nu) cfg.nu = 0.1;
        const auto any = builtin(cfg.problem, problem_params(cfg));

        if (check_cmd->parsed()) return cmd_check(any, cfg, out);
        return std::visit(
            [&](const auto& spec) {
                if (solve_cmd->parsed()) return cmd_solve(spec, cfg, out);
                if (conv_cmd->parsed()) return cmd_converge(spec, cfg, out);
                return cmd_trajectories(spec, cfg, out);
            },
            any);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const MeshError& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const SolverError& e) {
        err << "solver error: " << e.what() << '\n';
        return kExitSolver;
    } catch (const std::exception& e) {
        err << "solver error: " << e.what() << '\n';
        return kExitSolver;
    }
}

}  // namespace hjbsl
