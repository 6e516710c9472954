/// @file runner.hpp
/// @brief Experiment configuration, preset registry, run bundles and bundle comparison.
///
/// A run bundle is a directory holding `observables.csv` (or `marginals_*.csv`
/// for the constant-model branches), optional binary field dumps and
/// `manifest.txt`. CSV bodies depend only on the configuration; the manifest
/// also records wall time.

#pragma once

#include "constmodel.hpp"
#include "qcle.hpp"
#include "tdse.hpp"

#include <charconv>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace qlab {

namespace fs = std::filesystem;

using ConfigMap = std::map<std::string, std::string>;

// ---------------------------------------------------------------------------
// Text helpers

/// Shortest round-trip decimal form of a double.
inline std::string fmt(double x)
{
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, r.ptr);
}

inline std::string trim(const std::string& s)
{
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline double parse_double(const std::string& key, const std::string& v)
{
    const std::string s = trim(v);
    double x = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), x);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
        if (s == "inf") return std::numeric_limits<double>::infinity();
        throw InvalidInput("config key '" + key + "': not a number: '" + v + "'");
    }
    return x;
}

inline std::size_t parse_count(const std::string& key, const std::string& v)
{
    const double x = parse_double(key, v);
    if (!(x >= 0.0) || x != std::floor(x) || x > 1e15) throw InvalidInput("config key '" + key + "': not a non-negative integer: '" + v + "'");
    return static_cast<std::size_t>(x);
}

inline std::vector<double> parse_list(const std::string& key, const std::string& v)
{
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!trim(item).empty()) out.push_back(parse_double(key, item));
    return out;
}

inline std::string join(const std::vector<double>& xs)
{
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + fmt(xs[i]);
    return s;
}

/// 64-bit FNV-1a, printed as 16 hex digits.
inline std::string fnv1a_hex(const std::string& s)
{
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---------------------------------------------------------------------------
// Config files

/// Flat `key = value` lines; `#` starts a comment; `include = path` splices in
/// another file (relative to the including file). Later keys override earlier ones.
inline void parse_config_text(const std::string& text, const fs::path& base_dir, ConfigMap& out, int depth = 0)
{
    require(depth <= 8, "config includes nested too deeply (cycle?)");
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw InvalidInput("config line " + std::to_string(lineno) + " is not key=value: " + line);
        const std::string k = trim(line.substr(0, eq)), v = trim(line.substr(eq + 1));
        if (k.empty()) throw InvalidInput("config line " + std::to_string(lineno) + " has an empty key");
        if (k == "include") {
            const fs::path p = fs::path(v).is_absolute() ? fs::path(v) : base_dir / v;
            std::ifstream f(p);
            if (!f) throw InvalidInput("cannot open included config " + p.string());
            std::stringstream ss;
            ss << f.rdbuf();
            parse_config_text(ss.str(), p.parent_path(), out, depth + 1);
        } else {
            out[k] = v;
        }
    }
}

inline ConfigMap load_config_file(const fs::path& path)
{
    std::ifstream f(path);
    if (!f) throw InvalidInput("cannot open config " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    ConfigMap m;
    parse_config_text(ss.str(), path.parent_path(), m);
    return m;
}

// ---------------------------------------------------------------------------
// Experiment configuration

enum class Method { tdse_split, tdse_dvr, qcle, const_exact, const_nonlocal, const_marginal_ode, const_pert_large, const_pert_fourier };

inline const std::vector<std::pair<Method, std::string>>& method_names()
{
    static const std::vector<std::pair<Method, std::string>> names{
        {Method::tdse_split, "tdse-split"},          {Method::tdse_dvr, "tdse-dvr"},
        {Method::qcle, "qcle"},                      {Method::const_exact, "const-exact"},
        {Method::const_nonlocal, "const-nonlocal"},  {Method::const_marginal_ode, "const-marginal-ode"},
        {Method::const_pert_large, "const-pert-large"}, {Method::const_pert_fourier, "const-pert-fourier"}};
    return names;
}

inline std::string to_string(Method m)
{
    for (const auto& [k, v] : method_names())
        if (k == m) return v;
    return "?";
}

inline Method method_from_string(const std::string& s)
{
    for (const auto& [k, v] : method_names())
        if (v == s) return k;
    throw InvalidInput("unknown method '" + s + "'");
}

inline bool is_const_analytic(Method m)
{
    return m == Method::const_exact || m == Method::const_nonlocal || m == Method::const_marginal_ode || m == Method::const_pert_large ||
           m == Method::const_pert_fourier;
}

struct ExperimentConfig {
    std::string preset = "custom";
    std::string model = "dac"; ///< dac or constant
    Method method = Method::tdse_split;
    DacParams dac{};
    double coupling_d = 1.0; ///< constant model D
    double gap = 0.05;       ///< constant model E
    double mass = 2000.0;
    double hbar = 1.0;
    double r0 = -15.0;
    double p0 = 20.0;
    double theta = 0.0;
    double sigma_p = 0.0; ///< 0 selects P0/20 (dac) or 1 (constant)
    int k = 2;
    double dr_cap = 0.05;
    double memory_budget = default_memory_budget;
    double dt = 0.0;       ///< 0 selects the method default
    double t_final = 0.0;  ///< 0 on the DAC model runs until <R> >= |r0|
    std::size_t max_steps = 1000000;
    std::size_t sample_every = 0;
    std::size_t dvr_budget = 4000;
    std::vector<double> snapshot_times;
    int order = 2;                ///< perturbative order
    std::size_t axis_points = 0;  ///< constant-model momentum axis; 0 selects a default
    int ell = 4;                  ///< nonlocal grid: hbar D = ell dp
    std::size_t nonlocal_points = 201;
    double trace_tolerance = 1e-8; ///< QCLE guard on |trace - trace(0)|
    double edge_tolerance = 1e-7;  ///< QCLE guard on the momentum-edge mass fraction
    bool write_fields = true;
    fs::path output_dir = "out";

    double effective_sigma_p() const
    {
        if (sigma_p > 0.0) return sigma_p;
        return model == "dac" ? p0 / 20.0 : 1.0;
    }
    double sigma_r() const { return hbar / (2.0 * effective_sigma_p()); }

    ModelSpec model_spec() const
    {
        ModelSpec m = model == "dac" ? ModelSpec::dac_model(dac, mass) : ModelSpec::constant_model(coupling_d, gap, mass);
        m.hbar = hbar;
        return m;
    }

    ConstParams const_params() const
    {
        ConstParams c;
        c.d_coupling = coupling_d;
        c.gap = gap;
        c.mass = mass;
        c.p0 = p0;
        c.sigma_p = effective_sigma_p();
        c.r0 = r0;
        c.hbar = hbar;
        return c;
    }

    void validate() const
    {
        require(model == "dac" || model == "constant", "model must be dac or constant");
        model_spec().validate();
        require(std::isfinite(r0) && std::isfinite(p0) && std::isfinite(theta), "packet parameters must be finite");
        require(p0 >= 0.0, "p0 must be non-negative");
        require(sigma_p >= 0.0, "sigma_p must be non-negative (0 selects the default)");
        require(k >= 1, "k must be at least 1");
        require(dr_cap > 0.0, "dr_cap must be positive");
        require(dt >= 0.0 && t_final >= 0.0, "dt and t_final must be non-negative");
        require(max_steps >= 1, "max_steps must be positive");
        for (double t : snapshot_times) require(t >= 0.0, "snapshot times must be non-negative");
        require(trace_tolerance > 0.0 && edge_tolerance > 0.0, "guard tolerances must be positive");
        if (is_const_analytic(method)) {
            require(model == "constant", "constant-model branches need model=constant");
            require(order >= 0 && order <= 2, "order must be 0, 1 or 2");
            require(method != Method::const_pert_fourier || order <= 1, "the Fourier branch has orders 0 and 1");
            require(!snapshot_times.empty() || t_final > 0.0, "constant-model branches need snapshot_times or t_final");
            require(ell >= 1 && nonlocal_points >= 3 && nonlocal_points % 2 == 1, "nonlocal grid needs ell >= 1 and an odd point count");
        } else if (model == "constant") {
            require(t_final > 0.0, "constant-model propagation needs t_final > 0");
        }
    }

    /// Canonical key=value form; `output_dir` is excluded so the hash names the physics only.
    ConfigMap to_map() const
    {
        ConfigMap m;
        m["preset"] = preset;
        m["model"] = model;
        m["method"] = to_string(method);
        m["dac.A"] = fmt(dac.A);
        m["dac.B"] = fmt(dac.B);
        m["dac.C"] = fmt(dac.C);
        m["dac.D"] = fmt(dac.D);
        m["dac.E0"] = fmt(dac.E0);
        m["const.D"] = fmt(coupling_d);
        m["const.E"] = fmt(gap);
        m["mass"] = fmt(mass);
        m["hbar"] = fmt(hbar);
        m["r0"] = fmt(r0);
        m["p0"] = fmt(p0);
        m["theta"] = fmt(theta);
        m["sigma_p"] = fmt(sigma_p);
        m["k"] = std::to_string(k);
        m["dr_cap"] = fmt(dr_cap);
        m["memory_budget"] = fmt(memory_budget);
        m["dt"] = fmt(dt);
        m["t_final"] = fmt(t_final);
        m["max_steps"] = std::to_string(max_steps);
        m["sample_every"] = std::to_string(sample_every);
        m["dvr_budget"] = std::to_string(dvr_budget);
        m["snapshot_times"] = join(snapshot_times);
        m["order"] = std::to_string(order);
        m["axis_points"] = std::to_string(axis_points);
        m["ell"] = std::to_string(ell);
        m["nonlocal_points"] = std::to_string(nonlocal_points);
        m["trace_tolerance"] = fmt(trace_tolerance);
        m["edge_tolerance"] = fmt(edge_tolerance);
        m["write_fields"] = write_fields ? "true" : "false";
        return m;
    }

    std::string canonical() const
    {
        std::string s;
        for (const auto& [key, v] : to_map()) s += key + "=" + v + "\n";
        return s;
    }
    std::string hash() const { return fnv1a_hex(canonical()); }

    /// Field-by-field parse over the defaults; unknown keys are rejected.
    static ExperimentConfig from_map(const ConfigMap& m)
    {
        ExperimentConfig c;
        for (const auto& [key, v] : m) {
            if (key == "preset") c.preset = v;
            else if (key == "model") c.model = v;
            else if (key == "method") c.method = method_from_string(v);
            else if (key == "dac.A") c.dac.A = parse_double(key, v);
            else if (key == "dac.B") c.dac.B = parse_double(key, v);
            else if (key == "dac.C") c.dac.C = parse_double(key, v);
            else if (key == "dac.D") c.dac.D = parse_double(key, v);
            else if (key == "dac.E0") c.dac.E0 = parse_double(key, v);
            else if (key == "const.D") c.coupling_d = parse_double(key, v);
            else if (key == "const.E") c.gap = parse_double(key, v);
            else if (key == "mass") c.mass = parse_double(key, v);
            else if (key == "hbar") c.hbar = parse_double(key, v);
            else if (key == "r0") c.r0 = parse_double(key, v);
            else if (key == "p0") c.p0 = parse_double(key, v);
            else if (key == "theta") c.theta = parse_double(key, v);
            else if (key == "sigma_p") c.sigma_p = parse_double(key, v);
            else if (key == "k") c.k = static_cast<int>(parse_count(key, v));
            else if (key == "dr_cap") c.dr_cap = parse_double(key, v);
            else if (key == "memory_budget") c.memory_budget = parse_double(key, v);
            else if (key == "dt") c.dt = parse_double(key, v);
            else if (key == "t_final") c.t_final = parse_double(key, v);
            else if (key == "max_steps") c.max_steps = parse_count(key, v);
            else if (key == "sample_every") c.sample_every = parse_count(key, v);
            else if (key == "dvr_budget") c.dvr_budget = parse_count(key, v);
            else if (key == "snapshot_times") c.snapshot_times = parse_list(key, v);
            else if (key == "order") c.order = static_cast<int>(parse_count(key, v));
            else if (key == "axis_points") c.axis_points = parse_count(key, v);
            else if (key == "ell") c.ell = static_cast<int>(parse_count(key, v));
            else if (key == "nonlocal_points") c.nonlocal_points = parse_count(key, v);
            else if (key == "trace_tolerance") c.trace_tolerance = parse_double(key, v);
            else if (key == "edge_tolerance") c.edge_tolerance = parse_double(key, v);
            else if (key == "write_fields") {
                if (v != "true" && v != "false") throw InvalidInput("config key 'write_fields' must be true or false");
                c.write_fields = v == "true";
            } else if (key == "output_dir") c.output_dir = v;
            else throw InvalidInput("unknown config key '" + key + "'");
        }
        c.validate();
        return c;
    }
};

/// Grid used by tdse and qcle runs.
inline PhaseSpaceGrid experiment_grid(const ExperimentConfig& c)
{
    return build_grid(c.r0, c.p0, c.sigma_r(), c.k, c.dr_cap, c.hbar, c.memory_budget);
}

/// Initial kinetic energy P0^2 / 2M (the abscissa of the population and negativity sweeps).
inline double log_energy(double p0, double mass) { return std::log(p0 * p0 / (2.0 * mass)); }

inline double p0_from_log_energy(double ln_e, double mass) { return std::sqrt(2.0 * mass * std::exp(ln_e)); }

/// 25 log-spaced energies from ln E = -5.5 to 1.6, as momenta.
inline std::vector<double> dac_p0_ladder(double mass = 2000.0)
{
    std::vector<double> out;
    for (int i = 0; i < 25; ++i) out.push_back(p0_from_log_energy(-5.5 + 7.1 * i / 24.0, mass));
    return out;
}

// ---------------------------------------------------------------------------
// Run summaries and bundles

struct RunSummary {
    std::string hash;
    std::string method;
    double p0 = 0.0;
    double ln_e = 0.0;
    std::size_t n_points = 0;
    double dr = 0.0, dp = 0.0, dt = 0.0;
    std::size_t steps = 0;
    double t_end = 0.0;
    ObservableRecord initial, final;
    double excited_pop = 0.0;
    double max_trace_drift = 0.0, max_energy_drift = 0.0, max_purity_drift = 0.0; ///< drifts relative to t = 0
    double max_neg_r = 0.0, max_neg_p = 0.0;
    double min_diag_marginal = 0.0; ///< smallest diabatic diagonal marginal value over snapshots
    double wall_seconds = 0.0;
    std::vector<std::string> files;
};

inline void write_summary_header(std::ostream& os, const std::string& comment)
{
    os << "# " << comment << "\n"
       << "run,method,p0,ln_e,n_points,dr,dp,dt,steps,t_end,pop_diff,excited_pop,trace_drift,energy_drift,purity_drift,neg_r_final,"
          "neg_p_final,neg_r_max,neg_p_max,min_diag_marginal\n";
}

inline void write_summary_row(std::ostream& os, const std::string& run, const RunSummary& s)
{
    os << std::setprecision(12) << run << ',' << s.method << ',' << s.p0 << ',' << s.ln_e << ',' << s.n_points << ',' << s.dr << ','
       << s.dp << ',' << s.dt << ',' << s.steps << ',' << s.t_end << ',' << s.final.pop_diff << ',' << s.excited_pop << ','
       << s.max_trace_drift << ',' << s.max_energy_drift << ',' << s.max_purity_drift << ',' << s.final.neg_r << ',' << s.final.neg_p
       << ',' << s.max_neg_r << ',' << s.max_neg_p << ',' << s.min_diag_marginal << '\n';
}

namespace detail {

inline std::string time_tag(double t) { return "t" + fmt(t); }

/// Tag of the requested snapshot time closest to the step time `t`.
inline std::string snapshot_tag(const std::vector<double>& requested, double t)
{
    double best = t;
    for (double r : requested)
        if (std::abs(r - t) < std::abs(best - t) || best == t) best = r;
    return time_tag(best);
}

inline void write_text(const fs::path& p, const std::string& s)
{
    std::ofstream f(p, std::ios::binary);
    if (!f) throw InvalidInput("cannot write " + p.string());
    f << s;
}

inline void write_field_file(const fs::path& p, const std::vector<double>& field, const PhaseSpaceGrid& g, const std::string& name, Basis b)
{
    std::ofstream f(p, std::ios::binary);
    if (!f) throw InvalidInput("cannot write " + p.string());
    write_field_binary(f, field, g, name, b);
}

inline void track(RunSummary& s, const std::vector<ObservableRecord>& recs)
{
    s.initial = recs.front();
    s.final = recs.back();
    const auto& a = recs.front();
    for (const auto& r : recs) {
        s.max_trace_drift = std::max(s.max_trace_drift, std::abs(r.trace - a.trace));
        s.max_energy_drift = std::max(s.max_energy_drift, std::abs(r.energy - a.energy) / std::max(std::abs(a.energy), 1e-300));
        s.max_purity_drift = std::max(s.max_purity_drift, std::abs(r.purity - a.purity) / std::max(std::abs(a.purity), 1e-300));
        s.max_neg_r = std::max(s.max_neg_r, r.neg_r);
        s.max_neg_p = std::max(s.max_neg_p, r.neg_p);
    }
}

inline std::string observables_csv(const std::vector<ObservableRecord>& recs, const std::string& comment)
{
    std::ostringstream os;
    write_observable_header(os, comment);
    for (const auto& r : recs) write_observable_row(os, r);
    return os.str();
}

inline Wavefunction dac_initial_wavefunction(const ExperimentConfig& c, const PhaseSpaceGrid& g, const CouplingProfile& prof)
{
    const auto spec = GaussianSpec::from_sigma_p(c.r0, c.p0, c.effective_sigma_p(), c.theta, c.hbar);
    return change_basis(gaussian_packet(spec, g, Basis::adiabatic), prof, Basis::diabatic);
}

/// Marginals of a wavefunction snapshot; updates the negativity and positivity trackers.
inline void tdse_snapshot(const fs::path& dir, const std::string& tag, const Wavefunction& psi, const ExperimentConfig& c,
                          RunSummary& s)
{
    const auto w = wigner_marginals(psi);
    s.max_neg_r = std::max(s.max_neg_r, negativity_index(w.n_total));
    s.max_neg_p = std::max(s.max_neg_p, negativity_index(w.eta_total));
    for (const auto* m : {&w.n0, &w.n1, &w.eta0, &w.eta1})
        for (double v : m->values) s.min_diag_marginal = std::min(s.min_diag_marginal, v);
    std::ostringstream wr, wp, wf;
    write_marginal_csv(wr, {&w.n_total, &w.n0, &w.n1}, "diabatic R-marginals " + tag);
    write_marginal_csv(wp, {&w.eta_total, &w.eta0, &w.eta1}, "diabatic P-marginals " + tag);
    wf << "# diabatic wavefunction " << tag << "\nR,re0,im0,re1,im1\n" << std::setprecision(15);
    for (std::size_t m = 0; m < psi.grid.n_points; ++m)
        wf << psi.grid.r_values[m] << ',' << psi(0, m).real() << ',' << psi(0, m).imag() << ',' << psi(1, m).real() << ','
           << psi(1, m).imag() << '\n';
    write_text(dir / (tag + "_marginal_r.csv"), wr.str());
    write_text(dir / (tag + "_marginal_p.csv"), wp.str());
    write_text(dir / (tag + "_wavefunction.csv"), wf.str());
    s.files.insert(s.files.end(), {tag + "_marginal_r.csv", tag + "_marginal_p.csv", tag + "_wavefunction.csv"});
    if (c.write_fields) {
        const auto rho = partial_wigner_transform(psi);
        write_field_file(dir / (tag + "_pseudo_density.bin"), pseudo_density(rho), psi.grid, "pseudo_density", Basis::diabatic);
        s.files.push_back(tag + "_pseudo_density.bin");
    }
}

inline void qcle_snapshot(const fs::path& dir, const std::string& tag, const PWTDM& rho, const ExperimentConfig& c, RunSummary& s)
{
    const auto r0 = marginal(rho, Axis::R), r_0 = marginal(rho, Axis::R, "surface-0"), r_1 = marginal(rho, Axis::R, "surface-1");
    const auto p0 = marginal(rho, Axis::P), p_0 = marginal(rho, Axis::P, "surface-0"), p_1 = marginal(rho, Axis::P, "surface-1");
    std::ostringstream wr, wp;
    write_marginal_csv(wr, {&r0, &r_0, &r_1}, "adiabatic R-marginals " + tag);
    write_marginal_csv(wp, {&p0, &p_0, &p_1}, "adiabatic P-marginals " + tag);
    write_text(dir / (tag + "_marginal_r.csv"), wr.str());
    write_text(dir / (tag + "_marginal_p.csv"), wp.str());
    s.files.insert(s.files.end(), {tag + "_marginal_r.csv", tag + "_marginal_p.csv"});
    if (c.write_fields) {
        write_field_file(dir / (tag + "_pseudo_density.bin"), pseudo_density(rho), rho.grid, "pseudo_density", Basis::adiabatic);
        write_field_file(dir / (tag + "_coherence.bin"), coherence_magnitude(rho), rho.grid, "coherence_magnitude", Basis::adiabatic);
        s.files.insert(s.files.end(), {tag + "_pseudo_density.bin", tag + "_coherence.bin"});
    }
}

inline void run_tdse_split(const ExperimentConfig& c, const fs::path& dir, RunSummary& s)
{
    const ModelSpec model = c.model_spec();
    const auto g = experiment_grid(c);
    const auto prof = coupling_profile(model, g);
    Wavefunction psi0 = c.model == "dac" ? dac_initial_wavefunction(c, g, prof)
                                         : change_basis(gaussian_packet(c.const_params().packet(c.theta), g, Basis::adiabatic), prof, Basis::diabatic);
    TdseOptions opt;
    opt.dt = c.dt;
    if (c.t_final > 0.0) opt.t_final = c.t_final;
    else opt.stop_mean_r = std::abs(c.r0);
    opt.sample_every = c.sample_every;
    opt.snapshot_times = c.snapshot_times;
    opt.max_steps = c.max_steps;
    opt.sigma_r0 = c.sigma_r();
    const auto run = run_tdse(psi0, model, opt);
    s.n_points = g.n_points;
    s.dr = g.dr;
    s.dp = g.dp;
    s.dt = run.dt;
    s.steps = run.steps;
    s.t_end = run.t;
    s.excited_pop = excited_population(run.psi, prof);
    track(s, run.records);
    s.max_neg_r = s.max_neg_p = 0.0; // wavefunction densities; PWT marginals are tracked per snapshot
    write_text(dir / "observables.csv", observables_csv(run.records, "tdse-split " + c.model + " p0=" + fmt(c.p0)));
    s.files.push_back("observables.csv");
    for (const auto& [t, psi] : run.snapshots) tdse_snapshot(dir, snapshot_tag(c.snapshot_times, t), psi, c, s);
    tdse_snapshot(dir, "final", run.psi, c, s);
}

/// The sinc DVR represents momenta |P| < pi hbar / dr only.
inline bool dvr_band_covered(const ExperimentConfig& c)
{
    return c.p0 + 5.0 * c.effective_sigma_p() < pi * c.hbar / experiment_grid(c).dr;
}

inline void run_tdse_dvr(const ExperimentConfig& c, const fs::path& dir, RunSummary& s)
{
    const ModelSpec model = c.model_spec();
    const auto g = experiment_grid(c);
    const auto prof = coupling_profile(model, g);
    Wavefunction psi0 = c.model == "dac" ? dac_initial_wavefunction(c, g, prof)
                                         : change_basis(gaussian_packet(c.const_params().packet(c.theta), g, Basis::adiabatic), prof, Basis::diabatic);
    require(dvr_band_covered(c), "DVR kinetic band |P| < pi hbar / dr does not cover P0 + 5 sigma_p; lower dr_cap");
    const Dvr dvr(model, g, false, c.dvr_budget);
    const double dt = c.dt > 0.0 ? c.dt : timestep(model, g);
    const bool by_position = c.t_final <= 0.0;
    const double stop = std::abs(c.r0);
    double t_est = c.t_final;
    if (by_position) t_est = std::abs(stop - mean_position(psi0)) / std::max(std::abs(mean_momentum(psi0)) / model.mass, 1e-12);
    const std::size_t every = c.sample_every ? c.sample_every : std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(t_est / (500.0 * dt))));
    // the split-operator step grid: t_j = j dt; stop at the first j with <R> >= |r0|
    std::vector<ObservableRecord> recs{tdse_record(psi0, model, prof, 0.0)};
    auto done = [&](std::size_t j, const Wavefunction& psi) {
        return by_position ? mean_position(psi) >= stop : static_cast<double>(j) * dt >= c.t_final - 0.5 * dt;
    };
    std::size_t j = 0;
    Wavefunction psi = psi0;
    while (!done(j, psi)) {
        std::size_t next = j + every;
        Wavefunction trial = dvr.propagate(psi0, static_cast<double>(next) * dt);
        if (done(next, trial)) {
            // refine inside the last interval one step at a time
            for (next = j + 1; next <= j + every; ++next) {
                trial = dvr.propagate(psi0, static_cast<double>(next) * dt);
                if (done(next, trial)) break;
            }
        }
        if (next > c.max_steps) throw NumericalFailure("max-step cap reached before termination");
        j = next;
        psi = trial;
        recs.push_back(tdse_record(psi, model, prof, static_cast<double>(j) * dt));
        check_boundary(position_density(psi).values, g, c.sigma_r());
    }
    s.n_points = g.n_points;
    s.dr = g.dr;
    s.dp = g.dp;
    s.dt = dt;
    s.steps = j;
    s.t_end = static_cast<double>(j) * dt;
    s.excited_pop = excited_population(psi, prof);
    track(s, recs);
    s.max_neg_r = s.max_neg_p = 0.0;
    write_text(dir / "observables.csv", observables_csv(recs, "tdse-dvr " + c.model + " p0=" + fmt(c.p0)));
    s.files.push_back("observables.csv");
    for (double t : c.snapshot_times) tdse_snapshot(dir, time_tag(t), dvr.propagate(psi0, t), c, s);
    tdse_snapshot(dir, "final", psi, c, s);
}

inline void run_qcle_method(const ExperimentConfig& c, const fs::path& dir, RunSummary& s)
{
    const ModelSpec model = c.model_spec();
    const auto g = experiment_grid(c);
    PWTDM rho0 = [&] {
        if (c.model == "constant") return const_initial_state(c.const_params(), c.theta, g).rho;
        const auto prof = coupling_profile(model, g);
        return rotate_basis(partial_wigner_transform(dac_initial_wavefunction(c, g, prof)), prof, Basis::adiabatic);
    }();
    QcleOptions opt;
    opt.dt = c.dt;
    if (c.t_final > 0.0) opt.t_final = c.t_final;
    else opt.stop_mean_r = std::abs(c.r0);
    opt.sample_every = c.sample_every;
    opt.snapshot_times = c.snapshot_times;
    opt.max_steps = c.max_steps;
    opt.sigma_r0 = c.sigma_r();
    opt.trace_tolerance = c.trace_tolerance;
    opt.edge_tolerance = c.edge_tolerance;
    const auto run = run_qcle(rho0, model, opt);
    s.n_points = g.n_points;
    s.dr = g.dr;
    s.dp = g.dp;
    s.dt = run.dt;
    s.steps = run.state.step_count;
    s.t_end = run.state.t;
    s.excited_pop = 0.5 * (1.0 - population_difference(run.state.rho));
    track(s, run.records);
    write_text(dir / "observables.csv", observables_csv(run.records, "qcle " + c.model + " p0=" + fmt(c.p0)));
    s.files.push_back("observables.csv");
    for (const auto& [t, rho] : run.snapshots) qcle_snapshot(dir, snapshot_tag(c.snapshot_times, t), rho, c, s);
    qcle_snapshot(dir, "final", run.state.rho, c, s);
}

/// Uniform momentum axis wide enough for the constant-model marginals up to t_max.
inline std::vector<double> const_axis(const ExperimentConfig& c, double t_max)
{
    const ConstParams p = c.const_params();
    const double half = p.kick() + p.d_coupling * p.gap * t_max + 10.0 * p.sigma_p;
    std::size_t n = c.axis_points;
    if (n == 0) n = static_cast<std::size_t>(std::ceil(2.0 * half / (p.sigma_p / 16.0))) | 1u;
    return uniform_axis(p.p0 - half, p.p0 + half, n);
}

inline void run_const_analytic(const ExperimentConfig& c, const fs::path& dir, RunSummary& s)
{
    const ConstParams p = c.const_params();
    std::vector<double> times = c.snapshot_times;
    if (times.empty()) times.push_back(c.t_final);
    std::sort(times.begin(), times.end());
    const double t_max = times.back();
    auto emit = [&](double t, const MarginalVector& v) {
        const std::string tag = time_tag(t);
        std::ostringstream os;
        write_marginal_vector(os, v, to_string(c.method) + " order=" + std::to_string(c.order) + " " + tag);
        write_text(dir / ("marginals_" + tag + ".csv"), os.str());
        s.files.push_back("marginals_" + tag + ".csv");
        const double neg = negativity_index(v.total());
        s.max_neg_p = std::max(s.max_neg_p, neg);
        s.final.neg_p = neg;
        s.final.t = t;
        s.final.trace = v.population();
    };
    s.t_end = t_max;
    switch (c.method) {
    case Method::const_exact: {
        const auto axis = const_axis(c, 0.0);
        for (double t : times) {
            MarginalVector v(axis);
            v.eta[0] = const_exact_total_marginal(axis, t, p, c.theta);
            emit(t, v);
        }
        s.n_points = axis.size();
        s.dp = axis[1] - axis[0];
        break;
    }
    case Method::const_marginal_ode: {
        const auto axis = const_axis(c, t_max);
        const auto series = const_marginal_qcle_solve(const_initial_marginals(p, c.theta, axis), p, t_max, c.dt, times);
        for (std::size_t i = 0; i < series.times.size(); ++i) emit(series.times[i], series.snapshots[i]);
        s.n_points = axis.size();
        s.dp = axis[1] - axis[0];
        s.dt = c.dt > 0.0 ? c.dt : 0.8 * marginal_ode_timestep(p, axis);
        break;
    }
    case Method::const_pert_large: {
        const auto axis = const_axis(c, t_max);
        const auto mix = const_initial_mixture(p, c.theta);
        for (double t : times) emit(t, pert_marginal_large_coupling(c.order, axis, t, p, mix));
        s.n_points = axis.size();
        s.dp = axis[1] - axis[0];
        break;
    }
    case Method::const_pert_fourier: {
        const auto axis = const_axis(c, t_max);
        for (double t : times) emit(t, pert_marginal_fourier(c.order, axis, t, p, c.theta));
        s.n_points = axis.size();
        s.dp = axis[1] - axis[0];
        break;
    }
    case Method::const_nonlocal: {
        const auto g = nonlocal_grid(p, c.ell, c.nonlocal_points);
        PWTDM rho = const_initial_state(p, c.theta, g).rho;
        const double pmax = std::max(std::abs(g.p_min()), std::abs(g.p_max()));
        const double dt = c.dt > 0.0 ? c.dt : 1.0 / (pmax * pi / (p.mass * g.dr) + p.gap / p.hbar + p.gap / p.hbar);
        double t = 0.0;
        std::size_t steps = 0;
        for (double ts : times) {
            while (t < ts - 1e-12 * std::max(1.0, ts)) {
                const double h = std::min(dt, ts - t);
                rho = const_nonlocal_step(rho, p, h);
                t += h;
                if (++steps > c.max_steps) throw NumericalFailure("max-step cap reached before termination");
            }
            MarginalVector v(g.p_values);
            const auto a = marginal(rho, Axis::P, "surface-0"), b = marginal(rho, Axis::P, "surface-1");
            const auto cr = marginal(rho, Axis::P, "coherence-real"), ci = marginal(rho, Axis::P, "coherence-imag");
            v.eta[0] = a.values;
            v.eta[3] = b.values;
            v.eta[1] = cr.values;
            v.eta[2] = ci.values;
            // stored rho01 = conj(rho10): eta_i = Im rho10 = -Im rho01
            for (double& x : v.eta[2]) x = -x;
            emit(ts, v);
            if (c.write_fields) {
                const std::string tag = time_tag(ts);
                write_field_file(dir / (tag + "_pseudo_density.bin"), pseudo_density(rho), g, "pseudo_density", Basis::adiabatic);
                s.files.push_back(tag + "_pseudo_density.bin");
            }
        }
        s.n_points = g.n_points;
        s.dr = g.dr;
        s.dp = g.dp;
        s.dt = dt;
        s.steps = steps;
        break;
    }
    default:
        throw InvalidInput("not a constant-model branch");
    }
}

} // namespace detail

/// Runs one experiment into `config.output_dir` and writes its manifest.
inline RunSummary run_experiment(const ExperimentConfig& config)
{
    config.validate();
    const auto start = std::chrono::steady_clock::now();
    fs::create_directories(config.output_dir);
    const fs::path dir = config.output_dir;
    RunSummary s;
    s.hash = config.hash();
    s.method = to_string(config.method);
    s.p0 = config.p0;
    s.ln_e = config.p0 > 0.0 ? log_energy(config.p0, config.mass) : -std::numeric_limits<double>::infinity();
    try {
        switch (config.method) {
        case Method::tdse_split: detail::run_tdse_split(config, dir, s); break;
        case Method::tdse_dvr: detail::run_tdse_dvr(config, dir, s); break;
        case Method::qcle: detail::run_qcle_method(config, dir, s); break;
        default: detail::run_const_analytic(config, dir, s); break;
        }
    } catch (const InvalidInput& e) {
        throw InvalidInput("[" + config.preset + " " + s.method + " p0=" + fmt(config.p0) + "] " + e.what());
    } catch (const BoundaryViolation& e) {
        throw BoundaryViolation("[" + config.preset + " " + s.method + " p0=" + fmt(config.p0) + "] " + e.what());
    } catch (const NumericalFailure& e) {
        throw NumericalFailure("[" + config.preset + " " + s.method + " p0=" + fmt(config.p0) + "] " + e.what());
    }
    s.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::ostringstream m;
    m << "# qcle-lab run manifest\n"
      << "config_hash=" << s.hash << "\nn_points=" << s.n_points << "\ndr=" << fmt(s.dr) << "\ndp=" << fmt(s.dp) << "\ndt=" << fmt(s.dt)
      << "\nsteps=" << s.steps << "\nt_end=" << fmt(s.t_end) << "\nwall_time_s=" << fmt(s.wall_seconds) << "\nfiles=";
    for (std::size_t i = 0; i < s.files.size(); ++i) m << (i ? "," : "") << s.files[i];
    m << '\n';
    for (const auto& [k, v] : config.to_map()) m << "config." << k << '=' << v << '\n';
    detail::write_text(dir / "manifest.txt", m.str());
    return s;
}

/// Reads `manifest.txt` into a key/value map.
inline ConfigMap read_manifest(const fs::path& dir)
{
    std::ifstream f(dir / "manifest.txt");
    if (!f) throw InvalidInput("no manifest in " + dir.string());
    ConfigMap m;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq != std::string::npos) m[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return m;
}

// ---------------------------------------------------------------------------
// Presets

struct PresetRun {
    std::string label; ///< subdirectory name
    ExperimentConfig config;
};

struct Preset {
    std::string name;
    std::string description;
    bool long_running = false;
    std::function<std::vector<PresetRun>()> runs;
};

namespace detail {

inline ExperimentConfig dac_base(const std::string& preset, double p0, double dr_cap, int k, Method m)
{
    ExperimentConfig c;
    c.preset = preset;
    c.model = "dac";
    c.method = m;
    c.p0 = p0;
    c.r0 = -15.0;
    c.dr_cap = dr_cap;
    c.k = k;
    c.write_fields = false;
    // preset runs record the measured drift in summary.csv instead of aborting on it
    c.trace_tolerance = 1e-3;
    c.edge_tolerance = 1e-3;
    return c;
}

inline std::string p0_label(double p0)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "p0_%07.3f", p0);
    return buf;
}

inline std::vector<PresetRun> population_runs(const std::string& preset, const std::vector<double>& ladder, double dr_cap,
                                              std::size_t dvr_budget)
{
    std::vector<PresetRun> out;
    for (double p0 : ladder)
        for (Method m : {Method::tdse_split, Method::tdse_dvr, Method::qcle}) {
            auto c = dac_base(preset, p0, m == Method::tdse_dvr ? std::min(dr_cap, 0.05) : dr_cap, 2, m);
            c.dvr_budget = dvr_budget;
            if (m == Method::tdse_dvr && (2 * experiment_grid(c).n_points > dvr_budget || !detail::dvr_band_covered(c))) continue;
            out.push_back({p0_label(p0) + "_" + to_string(m), c});
        }
    return out;
}

inline std::vector<PresetRun> negativity_runs(const std::string& preset, const std::vector<double>& ladder, bool ci)
{
    std::vector<PresetRun> out;
    for (double p0 : ladder) {
        if (ci) {
            out.push_back({p0_label(p0) + "_qcle", dac_base(preset, p0, 0.1, 2, Method::qcle)});
            continue;
        }
        out.push_back({p0_label(p0) + "_qcle_neg_r", dac_base(preset, p0, 0.015, 2, Method::qcle)});
        out.push_back({p0_label(p0) + "_qcle_neg_p", dac_base(preset, p0, 0.05, 5, Method::qcle)});
    }
    return out;
}

inline std::vector<double> figure_times(double p0)
{
    if (p0 == 4.0) return {6750.0, 13500.0};
    if (p0 == 20.0) return {1500.0, 3000.0};
    if (p0 == 40.0) return {750.0, 1500.0};
    if (p0 == 100.0) return {300.0, 600.0};
    return {};
}

inline std::vector<PresetRun> phase_space_runs(const std::string& preset, const std::vector<double>& p0s)
{
    std::vector<PresetRun> out;
    for (double p0 : p0s)
        for (Method m : {Method::tdse_split, Method::qcle}) {
            auto c = dac_base(preset, p0, 0.05, 2, m);
            c.snapshot_times = figure_times(p0);
            c.write_fields = true;
            out.push_back({p0_label(p0) + "_" + to_string(m), c});
        }
    return out;
}

inline std::vector<PresetRun> const_runs(const std::string& preset, double d, double e, double mass, double sp,
                                         const std::vector<double>& times, const std::vector<std::pair<Method, int>>& curves)
{
    std::vector<PresetRun> out;
    for (const auto& [m, order] : curves) {
        ExperimentConfig c;
        c.preset = preset;
        c.model = "constant";
        c.method = m;
        c.coupling_d = d;
        c.gap = e;
        c.mass = mass;
        c.p0 = 20.0;
        c.r0 = 0.0;
        c.sigma_p = sp;
        c.theta = pi / 4.0;
        c.order = order;
        c.snapshot_times = times;
        c.write_fields = false;
        std::string label = to_string(m);
        if (m == Method::const_pert_large || m == Method::const_pert_fourier) label += "_order" + std::to_string(order);
        out.push_back({label, c});
    }
    return out;
}

} // namespace detail

inline const std::vector<Preset>& preset_registry()
{
    using namespace detail;
    static const std::vector<Preset> reg{
        {"dac-populations", "DAC population difference vs ln E: 25-point ladder, dr_cap 0.05, k 2; tdse-split, tdse-dvr (2N <= 4000), qcle",
         true, [] { return population_runs("dac-populations", dac_p0_ladder(), 0.05, 4000); }},
        {"dac-populations-ci", "DAC population difference at P0 = 20, 40, 100 with dr_cap 0.1, k 2", false,
         [] { return population_runs("dac-populations-ci", {20.0, 40.0, 100.0}, 0.1, 4000); }},
        {"dac-negativity", "QCLE marginal negativity vs ln E: neg_r at dr_cap 0.015, k 2 and neg_p at dr_cap 0.05, k 5", true,
         [] { return negativity_runs("dac-negativity", dac_p0_ladder(), false); }},
        {"dac-negativity-ci", "QCLE marginal negativity at P0 = 20, 40, 100 with dr_cap 0.1, k 2", false,
         [] { return negativity_runs("dac-negativity-ci", {20.0, 40.0, 100.0}, true); }},
        {"dac-phase-space", "DAC phase-space snapshots (tdse-split and qcle) at P0 = 20, 40, 100", false,
         [] { return phase_space_runs("dac-phase-space", {20.0, 40.0, 100.0}); }},
        {"dac-phase-space-p4", "DAC phase-space snapshots at P0 = 4 up to t = 13500", true,
         [] { return phase_space_runs("dac-phase-space-p4", {4.0}); }},
        {"const-neg-large", "Constant model D 500, E 100, M 200, P0 20, sigma_p 2: marginal ODE and perturbative orders 0-2", false,
         [] {
             return const_runs("const-neg-large", 500.0, 100.0, 200.0, 2.0, {2.5e-4, 5e-4, 1e-3},
                               {{Method::const_marginal_ode, 0}, {Method::const_pert_large, 0}, {Method::const_pert_large, 1},
                                {Method::const_pert_large, 2}});
         }},
        {"const-neg-small", "Constant model D 1, E 0.05, M 2000, P0 20, sigma_p 1: exact, marginal ODE and Fourier orders 0-1", false,
         [] {
             return const_runs("const-neg-small", 1.0, 0.05, 2000.0, 1.0, {50.0, 100.0},
                               {{Method::const_exact, 0}, {Method::const_marginal_ode, 0}, {Method::const_pert_fourier, 0},
                                {Method::const_pert_fourier, 1}});
         }},
    };
    return reg;
}

inline const Preset& find_preset(const std::string& name)
{
    for (const auto& p : preset_registry())
        if (p.name == name) return p;
    throw InvalidInput("unknown preset '" + name + "'");
}

/// Runs every configuration of a preset under `root` and writes `summary.csv`.
inline std::vector<RunSummary> run_preset(const std::string& name, const fs::path& root,
                                          const std::function<void(const std::string&, const RunSummary&)>& progress = {})
{
    const Preset& p = find_preset(name);
    fs::create_directories(root);
    std::vector<RunSummary> out;
    std::ostringstream sum;
    write_summary_header(sum, "preset=" + name);
    for (auto run : p.runs()) {
        run.config.output_dir = root / run.label;
        out.push_back(run_experiment(run.config));
        write_summary_row(sum, run.label, out.back());
        if (progress) progress(run.label, out.back());
    }
    detail::write_text(root / "summary.csv", sum.str());
    return out;
}

// ---------------------------------------------------------------------------
// Comparison

struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const
    {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name) return i;
        throw InvalidInput("no column '" + name + "'");
    }
};

/// CSV with leading `#` comment lines, one header row, comma separators.
inline CsvTable read_csv(const fs::path& path)
{
    std::ifstream f(path);
    if (!f) throw InvalidInput("cannot open " + path.string());
    CsvTable t;
    std::string line;
    auto split = [](const std::string& s) {
        std::vector<std::string> v;
        std::stringstream ss(s);
        std::string x;
        while (std::getline(ss, x, ',')) v.push_back(trim(x));
        return v;
    };
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (t.columns.empty()) t.columns = split(line);
        else t.rows.push_back(split(line));
    }
    if (t.columns.empty()) throw InvalidInput("no header in " + path.string());
    return t;
}

struct ColumnMetric {
    std::string file, column;
    double max_abs = 0.0, l2 = 0.0, final_abs = 0.0;
};

struct CompareReport {
    std::vector<ColumnMetric> metrics;
    double worst = 0.0;
    bool pass = true;
};

/// Metric tags: max (largest pointwise difference), l2 (root-mean-square), final (last row only).
inline double metric_value(const ColumnMetric& m, const std::string& metric)
{
    if (metric == "max") return m.max_abs;
    if (metric == "l2") return m.l2;
    if (metric == "final") return m.final_abs;
    throw InvalidInput("unknown metric '" + metric + "' (max, l2, final)");
}

/// Compares two CSV tables column by column. Non-numeric columns must match exactly.
inline std::vector<ColumnMetric> compare_tables(const CsvTable& a, const CsvTable& b, const std::string& file,
                                                const std::vector<std::string>& columns, const std::string& metric)
{
    std::vector<std::string> cols = columns;
    if (cols.empty())
        for (const auto& c : a.columns) {
            if (std::find(b.columns.begin(), b.columns.end(), c) == b.columns.end())
                throw InvalidInput("schema mismatch in " + file + ": column '" + c + "' missing");
            cols.push_back(c);
        }
    const bool final_only = metric == "final";
    if (!final_only && a.rows.size() != b.rows.size())
        throw InvalidInput("schema mismatch in " + file + ": " + std::to_string(a.rows.size()) + " vs " + std::to_string(b.rows.size()) + " rows");
    if (a.rows.empty() || b.rows.empty()) throw InvalidInput("empty table in " + file);
    std::vector<ColumnMetric> out;
    for (const auto& c : cols) {
        const std::size_t ia = a.column(c), ib = b.column(c);
        ColumnMetric m{file, c};
        auto num = [](const std::string& s, double& x) {
            const auto r = std::from_chars(s.data(), s.data() + s.size(), x);
            return r.ec == std::errc() && r.ptr == s.data() + s.size();
        };
        const std::size_t n = final_only ? 1 : a.rows.size();
        double sq = 0.0;
        bool numeric = true;
        for (std::size_t r = 0; r < n; ++r) {
            const auto& ra = final_only ? a.rows.back() : a.rows[r];
            const auto& rb = final_only ? b.rows.back() : b.rows[r];
            double x = 0.0, y = 0.0;
            if (num(ra.at(ia), x) && num(rb.at(ib), y)) {
                const double d = std::abs(x - y);
                m.max_abs = std::max(m.max_abs, d);
                sq += d * d;
            } else {
                numeric = false;
                if (ra.at(ia) != rb.at(ib)) throw InvalidInput("schema mismatch in " + file + ": column '" + c + "' differs");
            }
        }
        if (!numeric) continue;
        m.l2 = std::sqrt(sq / static_cast<double>(n));
        double x = 0.0, y = 0.0;
        if (num(a.rows.back().at(ia), x) && num(b.rows.back().at(ib), y)) m.final_abs = std::abs(x - y);
        out.push_back(m);
    }
    return out;
}

/// Compares two bundles (directories) or two CSV files. For bundles every CSV
/// present in both is compared, plus binary field dumps of the same name.
inline CompareReport compare(const fs::path& a, const fs::path& b, const std::string& metric, const std::vector<std::string>& columns = {},
                             double threshold = std::numeric_limits<double>::infinity())
{
    CompareReport rep;
    auto add = [&](std::vector<ColumnMetric> ms) {
        for (auto& m : ms) rep.metrics.push_back(std::move(m));
    };
    if (fs::is_regular_file(a)) {
        add(compare_tables(read_csv(a), read_csv(b), a.filename().string(), columns, metric));
    } else {
        require(fs::is_directory(a) && fs::is_directory(b), "compare needs two bundles or two CSV files");
        std::vector<fs::path> names;
        for (const auto& e : fs::directory_iterator(a)) names.push_back(e.path().filename());
        std::sort(names.begin(), names.end());
        bool any = false;
        for (const auto& name : names) {
            if (!fs::exists(b / name)) continue;
            if (name.extension() == ".csv") {
                const auto ta = read_csv(a / name), tb = read_csv(b / name);
                std::vector<std::string> cols;
                for (const auto& c : columns)
                    if (std::find(ta.columns.begin(), ta.columns.end(), c) != ta.columns.end()) cols.push_back(c);
                if (!columns.empty() && cols.empty()) continue;
                add(compare_tables(ta, tb, name.string(), cols, metric));
                any = true;
            } else if (name.extension() == ".bin" && columns.empty()) {
                std::ifstream fa(a / name, std::ios::binary), fb(b / name, std::ios::binary);
                FieldHeader ha, hb;
                const auto va = read_field_binary(fa, ha), vb = read_field_binary(fb, hb);
                if (ha.n_points != hb.n_points || ha.name != hb.name) throw InvalidInput("schema mismatch in " + name.string());
                ColumnMetric m{name.string(), ha.name};
                double sq = 0.0;
                for (std::size_t i = 0; i < va.size(); ++i) {
                    const double d = std::abs(va[i] - vb[i]);
                    m.max_abs = std::max(m.max_abs, d);
                    sq += d * d;
                }
                m.l2 = std::sqrt(sq / static_cast<double>(std::max<std::size_t>(va.size(), 1)));
                m.final_abs = m.max_abs;
                rep.metrics.push_back(m);
                any = true;
            }
        }
        require(any, "bundles share no comparable files");
    }
    for (const auto& m : rep.metrics) {
        if (m.column == "t" && columns.empty()) continue;
        rep.worst = std::max(rep.worst, metric_value(m, metric));
    }
    rep.pass = rep.worst <= threshold;
    return rep;
}

} // namespace qlab
