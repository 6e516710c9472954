/// @file qcle_lab.cpp
/// @brief Command-line front end: profiles, single runs, constant-model branches, negativity, comparison, presets.

#include <qcle_lab/qcle_lab.hpp>

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>

using namespace qlab;

namespace {

/// Config assembled from --config, then typed flags, then --set overrides.
struct ConfigSources {
    std::string config_file;
    std::vector<std::string> sets;
    ConfigMap flags;

    ExperimentConfig resolve() const
    {
        ConfigMap m;
        if (!config_file.empty()) m = load_config_file(config_file);
        for (const auto& [k, v] : flags) m[k] = v;
        for (const auto& s : sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos) throw InvalidInput("--set expects key=value, got '" + s + "'");
            m[trim(s.substr(0, eq))] = trim(s.substr(eq + 1));
        }
        return ExperimentConfig::from_map(m);
    }
};

/// Registers `--flag` writing into `src.flags[key]` when given.
template <class T>
CLI::Option* map_option(CLI::App* app, ConfigSources& src, const std::string& flag, const std::string& key, const std::string& help)
{
    return app->add_option_function<T>(
        flag,
        [&src, key](const T& v) {
            if constexpr (std::is_same_v<T, std::string>) src.flags[key] = v;
            else if constexpr (std::is_same_v<T, std::vector<double>>) src.flags[key] = join(v);
            else if constexpr (std::is_floating_point_v<T>) src.flags[key] = fmt(v);
            else src.flags[key] = std::to_string(v);
        },
        help);
}

void add_common(CLI::App* app, ConfigSources& src)
{
    app->add_option("--config", src.config_file, "key = value config file (include supported)")->check(CLI::ExistingFile);
    app->add_option("--set", src.sets, "override a config key, key=value (repeatable)");
    map_option<std::string>(app, src, "--out-dir", "output_dir", "output bundle directory");
}

void add_model(CLI::App* app, ConfigSources& src)
{
    map_option<std::string>(app, src, "--model", "model", "dac or constant");
    map_option<double>(app, src, "--coupling-d", "const.D", "constant-model coupling D");
    map_option<double>(app, src, "--gap", "const.E", "constant-model gap E");
    map_option<double>(app, src, "--mass", "mass", "nuclear mass");
}

void add_packet(CLI::App* app, ConfigSources& src)
{
    map_option<double>(app, src, "--p0", "p0", "initial momentum");
    map_option<double>(app, src, "--r0", "r0", "initial position");
    map_option<double>(app, src, "--theta", "theta", "adiabatic mixing angle of the initial packet");
    map_option<double>(app, src, "--sigma-p", "sigma_p", "momentum width (0 selects the model default)");
}

void add_grid(CLI::App* app, ConfigSources& src)
{
    map_option<double>(app, src, "--dr-cap", "dr_cap", "upper bound on the grid spacing");
    map_option<int>(app, src, "--k", "k", "grid refinement factor");
    map_option<double>(app, src, "--dt", "dt", "time step (0 selects the stability rule)");
    map_option<double>(app, src, "--t-final", "t_final", "fixed final time instead of the <R> stop rule");
    map_option<std::vector<double>>(app, src, "--snapshot-times", "snapshot_times", "snapshot times")->delimiter(',');
    app->add_flag_callback("--write-fields", [&src] { src.flags["write_fields"] = "true"; }, "write snapshot bundles and field dumps");
}

void print_summary(const RunSummary& s, const fs::path& dir)
{
    const bool analytic = is_const_analytic(method_from_string(s.method));
    std::cout << "method      " << s.method << "\n"
              << "config_hash " << s.hash << "\n"
              << "grid        N=" << s.n_points << " dr=" << fmt(s.dr) << " dp=" << fmt(s.dp) << " dt=" << fmt(s.dt) << "\n"
              << "steps       " << s.steps << " t_end=" << fmt(s.t_end) << "\n"
              << (analytic ? "trace       " + fmt(s.final.trace) : "pop_diff    " + fmt(s.final.pop_diff)) << "\n"
              << "bundle      " << dir.string() << " (" << s.files.size() << " files)\n";
}

int run_config(ConfigSources src, std::optional<Method> method)
{
    if (method) src.flags["method"] = to_string(*method);
    auto c = src.resolve();
    if (c.output_dir.empty()) c.output_dir = fs::path("runs") / (to_string(c.method) + "_" + c.hash());
    print_summary(run_experiment(c), c.output_dir);
    return 0;
}

/// Negativity of every numeric column of a CSV, or of a binary field dump.
int negativity_command(const std::string& path, const std::vector<std::string>& columns)
{
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw InvalidInput("cannot open " + path);
    std::string first;
    std::getline(probe, first);
    if (first == "QLABFIELD 1") {
        probe.seekg(0);
        FieldHeader h;
        const auto field = read_field_binary(probe, h);
        std::cout << "field,negativity\n" << h.name << "," << fmt(negativity_index(field)) << "\n";
        return 0;
    }
    const auto t = read_csv(path);
    std::vector<std::string> cols = columns;
    if (cols.empty())
        for (std::size_t i = 1; i < t.columns.size(); ++i) cols.push_back(t.columns[i]);
    std::cout << "column,negativity\n";
    for (const auto& name : cols) {
        const std::size_t j = t.column(name);
        std::vector<double> v;
        v.reserve(t.rows.size());
        for (const auto& row : t.rows) v.push_back(parse_double(name, row.at(j)));
        std::cout << name << "," << fmt(negativity_index(v)) << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Two-level quantum-classical dynamics lab"};
    app.require_subcommand(1);
    int status = 0;

    // profile
    ConfigSources prof_src;
    double prof_rmin = -10.0, prof_rmax = 10.0;
    std::size_t prof_points = 401;
    std::string prof_out;
    auto* prof = app.add_subcommand("profile", "tabulate diabatic and adiabatic model quantities over R");
    add_model(prof, prof_src);
    prof->add_option("--config", prof_src.config_file, "config file")->check(CLI::ExistingFile);
    prof->add_option("--set", prof_src.sets, "override a config key, key=value");
    prof->add_option("--r-min", prof_rmin, "first R")->capture_default_str();
    prof->add_option("--r-max", prof_rmax, "last R")->capture_default_str();
    prof->add_option("--points", prof_points, "number of R points")->capture_default_str()->check(CLI::Range(2, 10000000));
    prof->add_option("--out", prof_out, "output CSV (stdout when omitted)");
    prof->callback([&] {
        const auto c = prof_src.resolve();
        const auto model = c.model_spec();
        const auto rs = uniform_axis(prof_rmin, prof_rmax, prof_points);
        if (prof_out.empty()) write_profile(std::cout, coupling_profile(model, rs), model);
        else {
            std::ofstream f(prof_out);
            if (!f) throw InvalidInput("cannot write " + prof_out);
            write_profile(f, coupling_profile(model, rs), model);
        }
    });

    // run-tdse
    ConfigSources tdse_src;
    std::string tdse_method = "split";
    auto* tdse = app.add_subcommand("run-tdse", "exact wavepacket propagation (split operator or DVR)");
    add_common(tdse, tdse_src);
    add_model(tdse, tdse_src);
    add_packet(tdse, tdse_src);
    add_grid(tdse, tdse_src);
    tdse->add_option("--method", tdse_method, "split or dvr")->check(CLI::IsMember({"split", "dvr"}))->capture_default_str();
    tdse->callback([&] { status = run_config(tdse_src, tdse_method == "split" ? Method::tdse_split : Method::tdse_dvr); });

    // run-qcle
    ConfigSources qcle_src;
    auto* qcle = app.add_subcommand("run-qcle", "quantum-classical Liouville propagation of the partial Wigner density");
    add_common(qcle, qcle_src);
    add_model(qcle, qcle_src);
    add_packet(qcle, qcle_src);
    add_grid(qcle, qcle_src);
    map_option<std::size_t>(qcle, qcle_src, "--max-steps", "max_steps", "step cap; reaching it is an error");
    qcle->callback([&] { status = run_config(qcle_src, Method::qcle); });

    // const-analytic
    ConfigSources const_src;
    std::string branch = "exact";
    auto* cst = app.add_subcommand("const-analytic", "constant-coupling model: exact, nonlocal, marginal ODE and perturbative branches");
    add_common(cst, const_src);
    add_packet(cst, const_src);
    map_option<double>(cst, const_src, "--coupling-d", "const.D", "coupling D");
    map_option<double>(cst, const_src, "--gap", "const.E", "gap E");
    map_option<double>(cst, const_src, "--mass", "mass", "nuclear mass");
    map_option<int>(cst, const_src, "--order", "order", "perturbative order");
    map_option<std::vector<double>>(cst, const_src, "--times", "snapshot_times", "output times")->delimiter(',');
    cst->add_option("--branch", branch, "exact, nonlocal, marginal-ode, pert-large or pert-fourier")
        ->check(CLI::IsMember({"exact", "nonlocal", "marginal-ode", "pert-large", "pert-fourier"}))
        ->capture_default_str();
    cst->callback([&] {
        const_src.flags["model"] = "constant";
        status = run_config(const_src, method_from_string("const-" + branch));
    });

    // negativity
    std::string neg_path;
    std::vector<std::string> neg_columns;
    auto* neg = app.add_subcommand("negativity", "negativity index of a field dump or of CSV columns");
    neg->add_option("input", neg_path, "binary field dump or CSV file")->required()->check(CLI::ExistingFile);
    neg->add_option("--columns", neg_columns, "CSV columns (default: all but the first)")->delimiter(',');
    neg->callback([&] { status = negativity_command(neg_path, neg_columns); });

    // compare
    std::string cmp_a, cmp_b, cmp_metric = "max";
    std::vector<std::string> cmp_columns;
    double cmp_threshold = std::numeric_limits<double>::infinity();
    auto* cmp = app.add_subcommand("compare", "compare two bundles or CSV files; exit status 1 when over threshold");
    cmp->add_option("a", cmp_a, "bundle directory or CSV")->required()->check(CLI::ExistingPath);
    cmp->add_option("b", cmp_b, "bundle directory or CSV")->required()->check(CLI::ExistingPath);
    cmp->add_option("--metric", cmp_metric, "max, l2 or final")->check(CLI::IsMember({"max", "l2", "final"}))->capture_default_str();
    cmp->add_option("--columns", cmp_columns, "columns to compare (default: all shared numeric columns)")->delimiter(',');
    cmp->add_option("--threshold", cmp_threshold, "pass iff the worst metric is at most this");
    cmp->callback([&] {
        const auto rep = compare(cmp_a, cmp_b, cmp_metric, cmp_columns, cmp_threshold);
        std::cout << "file,column,max,l2,final\n";
        for (const auto& m : rep.metrics)
            std::cout << m.file << "," << m.column << "," << fmt(m.max_abs) << "," << fmt(m.l2) << "," << fmt(m.final_abs) << "\n";
        std::cout << "# worst " << cmp_metric << " = " << fmt(rep.worst) << (rep.pass ? " PASS" : " FAIL") << "\n";
        status = rep.pass ? 0 : 1;
    });

    // preset list / run
    auto* preset = app.add_subcommand("preset", "experiment presets");
    preset->require_subcommand(1);
    auto* plist = preset->add_subcommand("list", "list presets");
    plist->callback([] {
        for (const auto& p : preset_registry())
            std::cout << p.name << (p.long_running ? " [long]" : "") << " (" << p.runs().size() << " runs)\n  " << p.description << "\n";
    });
    std::string preset_name, preset_out;
    auto* prun = preset->add_subcommand("run", "run every configuration of a preset");
    prun->add_option("name", preset_name, "preset name")->required();
    prun->add_option("--out-dir", preset_out, "root directory (default runs/<name>)");
    prun->callback([&] {
        const fs::path root = preset_out.empty() ? fs::path("runs") / preset_name : fs::path(preset_out);
        run_preset(preset_name, root, [](const std::string& label, const RunSummary& s) {
            std::cout << label << "  N=" << s.n_points << " steps=" << s.steps << " pop_diff=" << fmt(s.final.pop_diff)
                      << " wall=" << fmt(s.wall_seconds) << "s" << std::endl;
        });
        std::cout << "summary " << (root / "summary.csv").string() << "\n";
    });

    // run --config
    ConfigSources run_src;
    auto* run = app.add_subcommand("run", "run one experiment described by a config file");
    add_common(run, run_src);
    run->callback([&] { status = run_config(run_src, std::nullopt); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return status;
}
