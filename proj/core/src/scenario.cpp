#include "memfpk/scenario.hpp"

#include "memfpk/analytic.hpp"
#include "memfpk/kernel.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace memfpk::scenario {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("invalid numeric value for " + key + ": '" + v + "'");
    }
}

std::vector<double> parse_double_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        out.push_back(parse_double(key, item));
    }
    if (out.empty()) throw ConfigError("empty list for " + key);
    return out;
}

class Timer {
  public:
    explicit Timer(std::map<std::string, double>& sink, std::string key)
        : sink_(sink), key_(std::move(key)), start_(std::chrono::steady_clock::now()) {}
    ~Timer() {
        sink_[key_] += std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
                           .count();
    }

  private:
    std::map<std::string, double>& sink_;
    std::string key_;
    std::chrono::steady_clock::time_point start_;
};

} // namespace

std::string to_string(Kind k) {
    switch (k) {
        case Kind::ou: return "ou";
        case Kind::duffing: return "duffing";
        case Kind::verhulst: return "verhulst";
        case Kind::hamiltonian: return "hamiltonian";
        case Kind::custom: return "custom";
    }
    return "?";
}

std::string to_string(Method m) {
    switch (m) {
        case Method::memfpk: return "memfpk";
        case Method::mcs: return "mcs";
        case Method::analytic: return "analytic";
    }
    return "?";
}

std::string to_string(fpk::KernelMode m) {
    switch (m) {
        case fpk::KernelMode::vada: return "vada";
        case fpk::KernelMode::closed_case_ii: return "closed_case_ii";
        case fpk::KernelMode::closed_case_iv: return "closed_case_iv";
        case fpk::KernelMode::classical: return "classical";
    }
    return "?";
}

std::string to_string(KernelExponent e) {
    return e == KernelExponent::eq4 ? "eq4" : "paper-printed";
}

Kind parse_kind(const std::string& name) {
    if (name == "ou") return Kind::ou;
    if (name == "duffing") return Kind::duffing;
    if (name == "verhulst") return Kind::verhulst;
    if (name == "hamiltonian") return Kind::hamiltonian;
    if (name == "custom") return Kind::custom;
    throw ConfigError("unknown scenario '" + name + "'");
}

Method parse_method(const std::string& name) {
    if (name == "memfpk") return Method::memfpk;
    if (name == "mcs") return Method::mcs;
    if (name == "analytic") return Method::analytic;
    throw ConfigError("unknown method '" + name + "'");
}

fpk::KernelMode parse_kernel_mode(const std::string& name) {
    if (name == "vada") return fpk::KernelMode::vada;
    if (name == "closed_case_ii") return fpk::KernelMode::closed_case_ii;
    if (name == "closed_case_iv") return fpk::KernelMode::closed_case_iv;
    if (name == "classical") return fpk::KernelMode::classical;
    throw ConfigError("unknown kernel mode '" + name + "'");
}

KernelExponent parse_kernel_exponent(const std::string& name) {
    if (name == "eq4") return KernelExponent::eq4;
    if (name == "paper-printed" || name == "paper_printed") return KernelExponent::paper_printed;
    throw ConfigError("unknown kernel exponent '" + name + "'");
}

ScenarioConfig default_config(Kind kind) {
    ScenarioConfig c;
    c.scenario = kind;
    switch (kind) {
        case Kind::ou:
            c.alpha = 1.0;
            c.sigma_w = 1.0;
            c.sigma_b = 1.0;
            c.x0 = 1.0;
            c.hurst = 0.65;
            c.x_min = -5.0;
            c.x_max = 5.0;
            c.dx = 0.05;
            c.t_end = 2.0;
            c.output_times = {0.5, 1.0, 1.5, 2.0};
            c.methods = {Method::memfpk, Method::analytic};
            c.kernel_mode = fpk::KernelMode::closed_case_iv;
            break;
        case Kind::duffing:
            c.alpha = 1.0;
            c.beta = -1.0;
            c.sigma_w = 0.8;
            c.sigma_b = 0.6;
            c.x0 = 0.0;
            c.hurst = 0.6;
            c.x_min = -2.5;
            c.x_max = 2.5;
            c.dx = 0.05;
            c.t_end = 2.0;
            c.output_times = {0.5, 1.0, 2.0};
            c.methods = {Method::memfpk, Method::mcs};
            c.kernel_mode = fpk::KernelMode::vada;
            break;
        case Kind::verhulst:
            c.alpha = 4.0;
            c.beta = 1.0;
            c.sigma_w = 0.1;
            c.sigma_b = 0.3;
            c.mu0 = 1.0;
            c.sigma0_sq = 0.05;
            c.hurst = 0.8;
            c.x_min = 0.0;
            c.x_max = 7.0;
            c.dx = 0.1;
            c.t_end = 2.0;
            c.output_times = {0.5, 1.0, 2.0};
            c.methods = {Method::memfpk, Method::mcs};
            c.kernel_mode = fpk::KernelMode::vada;
            break;
        case Kind::hamiltonian:
            c.gamma = 0.01;
            c.lambda = 2.0;
            c.d1 = 0.01;
            c.d2 = 0.01;
            c.h0 = 2.0;
            c.hurst = 0.7;
            c.x_min = 0.0;
            c.x_max = 10.0;
            c.dx = 0.1;
            c.t_end = 10.0;
            c.output_times = {5.0, 10.0};
            c.methods = {Method::memfpk, Method::mcs};
            c.kernel_mode = fpk::KernelMode::vada;
            c.mcs_dt = 4e-3;
            break;
        case Kind::custom:
            c.methods = {Method::memfpk};
            break;
    }
    return c;
}

std::map<std::string, std::string> parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::map<std::string, std::string> kv;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(path + ":" + std::to_string(lineno) + ": empty key");
        kv[key] = val;
    }
    return kv;
}

void apply_override(ScenarioConfig& cfg, const std::string& raw_key, const std::string& value) {
    std::string key = raw_key;
    std::replace(key.begin(), key.end(), '_', '-');
    if (key == "scenario")
        throw ConfigError("'scenario' must be resolved before other overrides");
    else if (key == "alpha")
        cfg.alpha = parse_double(key, value);
    else if (key == "beta")
        cfg.beta = parse_double(key, value);
    else if (key == "sigma-w")
        cfg.sigma_w = parse_double(key, value);
    else if (key == "sigma-b")
        cfg.sigma_b = parse_double(key, value);
    else if (key == "x0")
        cfg.x0 = parse_double(key, value);
    else if (key == "mu0")
        cfg.mu0 = parse_double(key, value);
    else if (key == "sigma0-sq")
        cfg.sigma0_sq = parse_double(key, value);
    else if (key == "gamma")
        cfg.gamma = parse_double(key, value);
    else if (key == "lambda")
        cfg.lambda = parse_double(key, value);
    else if (key == "d1")
        cfg.d1 = parse_double(key, value);
    else if (key == "d2")
        cfg.d2 = parse_double(key, value);
    else if (key == "h0")
        cfg.h0 = parse_double(key, value);
    else if (key == "hurst")
        cfg.hurst = parse_double(key, value);
    else if (key == "x-min")
        cfg.x_min = parse_double(key, value);
    else if (key == "x-max")
        cfg.x_max = parse_double(key, value);
    else if (key == "dx")
        cfg.dx = parse_double(key, value);
    else if (key == "dt")
        cfg.dt = parse_double(key, value);
    else if (key == "t-end")
        cfg.t_end = parse_double(key, value);
    else if (key == "output-times")
        cfg.output_times = parse_double_list(key, value);
    else if (key == "method") {
        cfg.methods.clear();
        std::stringstream ss(value);
        std::string item;
        while (std::getline(ss, item, ','))
            if (!item.empty()) cfg.methods.push_back(parse_method(item));
        if (cfg.methods.empty()) throw ConfigError("empty method list");
    } else if (key == "kernel-mode")
        cfg.kernel_mode = parse_kernel_mode(value);
    else if (key == "vada-order") {
        cfg.vada_order = int(parse_double(key, value));
        if (cfg.vada_order < 1 || cfg.vada_order > 3)
            throw ConfigError("vada-order must be 1, 2 or 3");
    } else if (key == "kernel-exponent")
        cfg.kernel_exponent = parse_kernel_exponent(value);
    else if (key == "mcs-paths") {
        const double d = parse_double(key, value);
        if (d < 1) throw ConfigError("mcs-paths must be >= 1");
        cfg.mcs_paths = std::size_t(d);
    } else if (key == "mcs-dt")
        cfg.mcs_dt = parse_double(key, value);
    else if (key == "seed")
        cfg.seed = std::uint64_t(parse_double(key, value));
    else if (key == "macro-refresh")
        cfg.macro_refresh = parse_double(key, value);
    else if (key == "out-dir")
        cfg.out_dir = value;
    else if (key == "threads")
        cfg.n_threads = unsigned(parse_double(key, value));
    else
        throw ConfigError("unknown config key '" + raw_key + "'");
}

BuiltSystem build_system(const ScenarioConfig& cfg) {
    BuiltSystem out;
    auto constant = [](double v) { return ScalarFn([v](double) { return v; }); };
    switch (cfg.scenario) {
        case Kind::ou: {
            const double al = cfg.alpha, sw = cfg.sigma_w, sb = cfg.sigma_b;
            if (!(al > 0.0)) throw ConfigError("ou: alpha must be > 0");
            out.spec = SystemSpec{[al](double x) { return -al * x; }, constant(-al),
                                  constant(sw), constant(0.0), constant(0.0),
                                  constant(sb), constant(0.0), constant(0.0), "ou"};
            out.init = InitialLaw::point(cfg.x0);
            break;
        }
        case Kind::duffing: {
            const double al = cfg.alpha, be = cfg.beta, sw = cfg.sigma_w, sb = cfg.sigma_b;
            out.spec = SystemSpec{[al, be](double x) { return al * x + be * x * x * x; },
                                  [al, be](double x) { return al + 3.0 * be * x * x; },
                                  constant(sw), constant(0.0), constant(0.0),
                                  constant(sb), constant(0.0), constant(0.0), "duffing"};
            out.init = InitialLaw::point(cfg.x0);
            break;
        }
        case Kind::verhulst: {
            const double al = cfg.alpha, be = cfg.beta, sw = cfg.sigma_w, sb = cfg.sigma_b;
            if (cfg.x_min < 0.0)
                throw ConfigError("verhulst: the state domain is (0, x_max], x_min must be >= 0");
            out.spec = SystemSpec{[al, be](double x) { return al * x - be * x * x; },
                                  [al, be](double x) { return al - 2.0 * be * x; },
                                  [sw](double x) { return sw * x; }, constant(sw), constant(0.0),
                                  [sb](double x) { return sb * x; }, constant(sb), constant(0.0),
                                  "verhulst"};
            if (!(cfg.sigma0_sq > 0.0)) throw ConfigError("verhulst: sigma0-sq must be > 0");
            out.init = InitialLaw::gaussian(cfg.mu0, cfg.sigma0_sq);
            break;
        }
        case Kind::hamiltonian: {
            const double ga = cfg.gamma, la = cfg.lambda, D = cfg.d1 + cfg.d2;
            if (!(D > 0.0)) throw ConfigError("hamiltonian: D1 + D2 must be > 0");
            if (!(la > 0.0)) throw ConfigError("hamiltonian: lambda must be > 0");
            // averaged energy-envelope coefficients:
            //   R = (sqrt(1+4 lambda h) - 1)/lambda
            //   V = h - R/4 + lambda R^2/12, V' = 4/3 - 5/(6 S), V'' = 5 lambda/(3 S^3)
            //   m = -2 gamma V, sigma = sqrt(2 D V)
            auto S = [la](double x) { return std::sqrt(std::max(1.0 + 4.0 * la * x, 0.0)); };
            auto V = [la, S](double x) {
                const double R = (S(x) - 1.0) / la;
                return x - 0.25 * R + la * R * R / 12.0;
            };
            auto Vp = [S](double x) { return 4.0 / 3.0 - 5.0 / (6.0 * S(x)); };
            auto Vpp = [la, S](double x) {
                const double s = S(x);
                return 5.0 * la / (3.0 * s * s * s);
            };
            auto sig = [D, V](double x) { return std::sqrt(std::max(2.0 * D * V(x), 0.0)); };
            out.spec = SystemSpec{
                [ga, V](double x) { return -2.0 * ga * V(x); },
                [ga, Vp](double x) { return -2.0 * ga * Vp(x); },
                constant(0.0), constant(0.0), constant(0.0),
                sig,
                [D, Vp, sig](double x) {
                    const double s = sig(x);
                    return s > 0.0 ? D * Vp(x) / s : 0.0;
                },
                [D, Vp, Vpp, sig](double x) {
                    const double s = sig(x);
                    if (!(s > 0.0)) return 0.0;
                    const double sp = D * Vp(x) / s;
                    return D * Vpp(x) / s - sp * sp / s;
                },
                "hamiltonian"};
            out.init = InitialLaw::point(cfg.h0);
            break;
        }
        case Kind::custom:
            throw ConfigError("custom scenario: supply the system via run_with_system()");
    }
    return out;
}

namespace {

Grid1D make_grid(const ScenarioConfig& cfg) {
    if (!(cfg.dx > 0.0)) throw ConfigError("dx must be > 0");
    if (!(cfg.x_min < cfg.x_max)) throw ConfigError("x_min must be < x_max");
    const double nc = (cfg.x_max - cfg.x_min) / cfg.dx;
    const double r = std::round(nc);
    if (std::fabs(nc - r) > 1e-6 * std::max(1.0, r))
        throw ConfigError("dx does not evenly divide [x_min, x_max]");
    if (r < 8) throw ConfigError("grid needs at least 8 cells");
    return Grid1D(cfg.x_min, cfg.x_max, std::size_t(r));
}

std::size_t time_index(double t, double dt, const char* what) {
    const double k = t / dt;
    const double r = std::round(k);
    if (r < 0.0 || std::fabs(k - r) > 1e-6)
        throw ConfigError(std::string(what) + " " + fmt17(t) +
                          " does not sit on the time grid of step " + fmt17(dt));
    return std::size_t(r);
}

void validate(const ScenarioConfig& cfg) {
    if (cfg.methods.empty()) throw ConfigError("no methods requested");
    if (!(cfg.dt > 0.0) || !(cfg.t_end > 0.0)) throw ConfigError("dt and t-end must be > 0");
    if (cfg.output_times.empty()) throw ConfigError("output-times must be non-empty");
    if (!std::is_sorted(cfg.output_times.begin(), cfg.output_times.end()))
        throw ConfigError("output-times must be increasing");
    for (double t : cfg.output_times)
        if (t < 0.0 || t > cfg.t_end + 1e-12) throw ConfigError("output time outside [0, t_end]");
    if (!(cfg.hurst >= 0.5) || !(cfg.hurst < 1.0)) throw ConfigError("hurst must be in [0.5, 1)");
    if (!(cfg.macro_refresh > 0.0)) throw ConfigError("macro-refresh must be > 0");
    if (!(cfg.mcs_dt > 0.0)) throw ConfigError("mcs-dt must be > 0");
    const bool analytic_wanted =
        std::count(cfg.methods.begin(), cfg.methods.end(), Method::analytic) > 0;
    if (analytic_wanted && cfg.scenario != Kind::ou)
        throw ConfigError("analytic reference exists only for the ou scenario");
}

struct CsvFile {
    fs::path final_path, tmp_path;
    std::ofstream out;

    CsvFile(const fs::path& dir, const std::string& name)
        : final_path(dir / name), tmp_path(dir / (name + ".tmp")), out(tmp_path) {
        if (!out) throw std::runtime_error("cannot write " + tmp_path.string());
    }
    void commit() {
        out.close();
        fs::rename(tmp_path, final_path);
    }
    void discard() noexcept {
        out.close();
        std::error_code ec;
        fs::remove(tmp_path, ec);
    }
};

void write_surface_csv(CsvFile& f, const Grid1D& grid,
                       const std::vector<std::pair<std::string, const PdfSurface*>>& sections,
                       bool as_cdf) {
    f.out << "method,t";
    for (std::size_t i = 0; i < grid.size(); ++i) f.out << ',' << fmt17(grid.node(i));
    f.out << '\n';
    for (const auto& [name, surf] : sections) {
        for (const auto& slice : surf->slices) {
            f.out << name << ',' << fmt17(slice.time);
            if (as_cdf) {
                const auto cdf = stats::pdf_to_cdf(slice, grid);
                for (double v : cdf) f.out << ',' << fmt17(v);
            } else {
                for (double v : slice.values) f.out << ',' << fmt17(v);
            }
            f.out << '\n';
        }
    }
}

} // namespace

RunResult run(const ScenarioConfig& cfg) {
    if (cfg.scenario == Kind::custom)
        throw ConfigError("custom scenario: supply the system via run_with_system()");
    const auto built = build_system(cfg);
    return run_with_system(cfg, built.spec, built.init);
}

RunResult run_with_system(const ScenarioConfig& cfg, const SystemSpec& spec,
                          const InitialLaw& init) {
    validate(cfg);
    RunResult res;
    res.config = cfg;
    res.grid = make_grid(cfg);
    const Grid1D& grid = res.grid;

    const bool want_memfpk =
        std::count(cfg.methods.begin(), cfg.methods.end(), Method::memfpk) > 0;
    const bool want_mcs = std::count(cfg.methods.begin(), cfg.methods.end(), Method::mcs) > 0;
    const bool want_analytic =
        std::count(cfg.methods.begin(), cfg.methods.end(), Method::analytic) > 0;
    const bool verhulst_oracle = cfg.scenario == Kind::verhulst && want_memfpk && want_mcs;

    const Hurst H(cfg.hurst);

    // the Verhulst kernel-exponent variants under study
    const double beta = cfg.beta;
    const ScalarFn phi1_paper = [beta](double x) { return -2.0 * beta * x; };

    std::optional<PdfSurface> alt_surface; // the non-selected exponent variant

    if (want_memfpk) {
        Timer t(res.timings_sec, "memfpk");
        fpk::SolveOptions sopts;
        sopts.mode = cfg.kernel_mode;
        sopts.alpha = cfg.alpha;
        sopts.dt = cfg.dt;
        sopts.t_end = cfg.t_end;
        sopts.output_times = cfg.output_times;
        sopts.macro_refresh = cfg.macro_refresh;
        sopts.vada_order = cfg.vada_order;
        sopts.record_psi = cfg.scenario == Kind::verhulst;
        if (cfg.scenario == Kind::verhulst && cfg.kernel_exponent == KernelExponent::paper_printed)
            sopts.phi1_override = phi1_paper;
        res.memfpk = fpk::solve_memfpk(spec, init, H, grid, sopts);

        if (verhulst_oracle) {
            // also solve the other exponent variant for the oracle report
            fpk::SolveOptions alt = sopts;
            if (cfg.kernel_exponent == KernelExponent::eq4)
                alt.phi1_override = phi1_paper;
            else
                alt.phi1_override = nullptr;
            alt_surface = fpk::solve_memfpk(spec, init, H, grid, alt);
        }
    }

    if (want_mcs) {
        Timer t(res.timings_sec, "mcs");
        const std::size_t n_steps = time_index(cfg.t_end, cfg.mcs_dt, "t_end");
        std::vector<std::size_t> out_idx;
        for (double tt : cfg.output_times)
            out_idx.push_back(time_index(tt, cfg.mcs_dt, "output time"));
        sde::McStreamOptions mopts;
        mopts.n_threads = cfg.n_threads;
        mopts.kernel_estimate = verhulst_oracle;
        mopts.skip_gwn = cfg.scenario == Kind::hamiltonian || cfg.sigma_w == 0.0;
        mopts.skip_fgn = cfg.scenario != Kind::hamiltonian && cfg.sigma_b == 0.0;
        res.mcs = sde::mc_run(spec, init, H, grid, cfg.mcs_dt, n_steps, out_idx, cfg.mcs_paths,
                              cfg.seed, mopts);
        res.divergent_paths = res.mcs->n_divergent;

        PdfSurface s;
        s.grid = grid;
        for (const auto& st : res.mcs->outputs) {
            s.slices.push_back(sde::pdf_of(st, grid));
            s.mass_history.push_back(trapezoid(s.slices.back().values, grid.dx()));
        }
        res.mcs_pdf = std::move(s);
    }

    if (want_analytic) {
        Timer t(res.timings_sec, "analytic");
        const analytic::OuParams op{cfg.alpha, cfg.sigma_w, cfg.sigma_b, cfg.x0, H};
        PdfSurface s;
        s.grid = grid;
        for (double tt : cfg.output_times) {
            PdfField f;
            f.time = tt;
            f.values = analytic::ou_pdf_slice(op, grid, tt);
            s.slices.push_back(std::move(f));
            s.mass_history.push_back(trapezoid(s.slices.back().values, grid.dx()));
        }
        res.analytic_pdf = std::move(s);
    }

    if (res.memfpk && res.analytic_pdf)
        res.memfpk_vs_analytic = stats::compare_surfaces(*res.memfpk, *res.analytic_pdf);
    if (res.memfpk && res.mcs_pdf)
        res.memfpk_vs_mcs = stats::compare_surfaces(*res.memfpk, *res.mcs_pdf);

    if (verhulst_oracle && res.memfpk && res.mcs) {
        KernelOracleReport rep;
        const auto& eq4_surf =
            cfg.kernel_exponent == KernelExponent::eq4 ? *res.memfpk : *alt_surface;
        const auto& paper_surf =
            cfg.kernel_exponent == KernelExponent::eq4 ? *alt_surface : *res.memfpk;
        double acc_eq4 = 0.0, acc_paper = 0.0;
        std::size_t n_used = 0;
        for (std::size_t o = 0; o < res.mcs->outputs.size(); ++o) {
            const auto oracle = sde::kernel_field_of(res.mcs->outputs[o]);
            const auto& p = res.memfpk->slices[o].values;
            const double pmax = *std::max_element(p.begin(), p.end());
            for (std::size_t i = 0; i < grid.size(); ++i) {
                if (p[i] < 0.1 * pmax) continue;
                if (!std::isfinite(oracle.values[i]) || oracle.values[i] == 0.0) continue;
                acc_eq4 += std::fabs(eq4_surf.psi_slices[o][i] - oracle.values[i]) /
                           std::fabs(oracle.values[i]);
                acc_paper += std::fabs(paper_surf.psi_slices[o][i] - oracle.values[i]) /
                             std::fabs(oracle.values[i]);
                ++n_used;
            }
        }
        if (n_used > 0) {
            rep.avg_rel_diff_eq4 = acc_eq4 / double(n_used);
            rep.avg_rel_diff_paper = acc_paper / double(n_used);
            rep.favored = rep.avg_rel_diff_eq4 <= rep.avg_rel_diff_paper ? "eq4" : "paper-printed";
        }
        res.kernel_oracle = rep;
    }

    // ---- artifacts ----
    Timer t_io(res.timings_sec, "io");
    fs::create_directories(cfg.out_dir);
    std::vector<CsvFile> files;
    files.reserve(4);
    try {
        std::vector<std::pair<std::string, const PdfSurface*>> sections;
        if (res.memfpk) sections.emplace_back("memfpk", &*res.memfpk);
        if (res.mcs_pdf) sections.emplace_back("mcs", &*res.mcs_pdf);
        if (res.analytic_pdf) sections.emplace_back("analytic", &*res.analytic_pdf);

        files.emplace_back(cfg.out_dir, "pdf_surface.csv");
        write_surface_csv(files.back(), grid, sections, false);

        files.emplace_back(cfg.out_dir, "cdf.csv");
        write_surface_csv(files.back(), grid, sections, true);

        files.emplace_back(cfg.out_dir, "moments.csv");
        {
            auto& f = files.back();
            f.out << "method,t,mean,std,skewness,kurtosis\n";
            auto row = [&](const std::string& m, double tt, double mean, double sd, double sk,
                           double ku) {
                f.out << m << ',' << fmt17(tt) << ',' << fmt17(mean) << ',' << fmt17(sd) << ','
                      << fmt17(sk) << ',' << fmt17(ku) << '\n';
            };
            if (res.memfpk)
                for (const auto& slice : res.memfpk->slices) {
                    const auto m = stats::moments_from_pdf(slice, grid);
                    row("memfpk", slice.time, m.mean, m.std, m.skewness, m.kurtosis);
                }
            if (res.mcs)
                for (const auto& st : res.mcs->outputs) {
                    const auto m = sde::moments_of(st);
                    row("mcs", st.t, m.mean, m.std, m.skewness, m.kurtosis);
                }
            if (want_analytic) {
                const analytic::OuParams op{cfg.alpha, cfg.sigma_w, cfg.sigma_b, cfg.x0, H};
                for (double tt : cfg.output_times)
                    row("analytic", tt, analytic::ou_mean(op, tt),
                        std::sqrt(analytic::ou_variance(op, tt)), 0.0, 3.0);
            }
        }

        files.emplace_back(cfg.out_dir, "report.json");
        {
            json j;
            json jc;
            jc["scenario"] = to_string(cfg.scenario);
            jc["alpha"] = cfg.alpha;
            jc["beta"] = cfg.beta;
            jc["sigma_w"] = cfg.sigma_w;
            jc["sigma_b"] = cfg.sigma_b;
            jc["x0"] = cfg.x0;
            jc["mu0"] = cfg.mu0;
            jc["sigma0_sq"] = cfg.sigma0_sq;
            jc["gamma"] = cfg.gamma;
            jc["lambda"] = cfg.lambda;
            jc["d1"] = cfg.d1;
            jc["d2"] = cfg.d2;
            jc["h0"] = cfg.h0;
            jc["hurst"] = cfg.hurst;
            jc["x_min"] = cfg.x_min;
            jc["x_max"] = cfg.x_max;
            jc["dx"] = cfg.dx;
            jc["dt"] = cfg.dt;
            jc["t_end"] = cfg.t_end;
            jc["output_times"] = cfg.output_times;
            {
                std::vector<std::string> ms;
                for (auto m : cfg.methods) ms.push_back(to_string(m));
                jc["methods"] = ms;
            }
            jc["kernel_mode"] = to_string(cfg.kernel_mode);
            jc["vada_order"] = cfg.vada_order;
            jc["kernel_exponent"] = to_string(cfg.kernel_exponent);
            jc["mcs_paths"] = cfg.mcs_paths;
            jc["mcs_dt"] = cfg.mcs_dt;
            jc["seed"] = cfg.seed;
            jc["macro_refresh"] = cfg.macro_refresh;
            jc["out_dir"] = cfg.out_dir;
            jc["threads"] = cfg.n_threads;
            j["config"] = jc;

            if (init.kind == InitialLaw::Kind::point)
                j["sigma_init"] = fpk::kPointSigmaCells * grid.dx();

            if (res.memfpk) {
                j["mass"] = {{"min", res.memfpk->mass_min},
                             {"max", res.memfpk->mass_max},
                             {"max_abs_dev",
                              std::max(std::fabs(res.memfpk->mass_min - 1.0),
                                       std::fabs(res.memfpk->mass_max - 1.0))}};
                j["min_density"] = res.memfpk->min_density;
                j["clamp_events"] = res.memfpk->clamp_events;
            }
            if (res.mcs) {
                j["divergent_paths"] = res.mcs->n_divergent;
                j["kernel_invalid_paths"] = res.mcs->n_kernel_invalid;
            }
            auto dist_json = [](const stats::SurfaceDistance& d) {
                json out;
                out["linf_overall"] = d.linf_overall;
                json per = json::array();
                for (std::size_t i = 0; i < d.times.size(); ++i)
                    per.push_back({{"t", d.times[i]}, {"linf", d.linf[i]}, {"l1", d.l1[i]}});
                out["per_time"] = per;
                return out;
            };
            if (res.memfpk_vs_analytic)
                j["comparisons"]["memfpk_vs_analytic"] = dist_json(*res.memfpk_vs_analytic);
            if (res.memfpk_vs_mcs)
                j["comparisons"]["memfpk_vs_mcs"] = dist_json(*res.memfpk_vs_mcs);
            if (res.kernel_oracle) {
                j["kernel_oracle"] = {{"avg_rel_diff_eq4", res.kernel_oracle->avg_rel_diff_eq4},
                                      {"avg_rel_diff_paper_printed",
                                       res.kernel_oracle->avg_rel_diff_paper},
                                      {"favored", res.kernel_oracle->favored}};
            }
            j["timings_sec"] = res.timings_sec;
            files.back().out << j.dump(2) << '\n';
        }

        for (auto& f : files) {
            res.artifacts.push_back(f.final_path.string());
            f.commit();
        }
    } catch (...) {
        for (auto& f : files) f.discard();
        throw;
    }
    return res;
}

} // namespace memfpk::scenario
