#pragma once

#include "memfpk/fpk.hpp"
#include "memfpk/sde.hpp"
#include "memfpk/stats.hpp"
#include "memfpk/system.hpp"

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace memfpk::scenario {

/// Invalid configuration (CLI exit code 2, vs 3 for numerical failures).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Kind { ou, duffing, verhulst, hamiltonian, custom };
enum class Method { memfpk, mcs, analytic };
enum class KernelExponent { eq4, paper_printed };

struct ScenarioConfig {
    Kind scenario = Kind::ou;

    // model parameters (defaults per scenario via default_config)
    double alpha = 0.0, beta = 0.0;
    double sigma_w = 0.0, sigma_b = 0.0;
    double x0 = 0.0, mu0 = 0.0, sigma0_sq = 0.0;
    double gamma = 0.0, lambda = 0.0, d1 = 0.0, d2 = 0.0, h0 = 0.0;
    double hurst = 0.65;

    double x_min = 0.0, x_max = 1.0, dx = 0.05;
    double dt = 1e-4;
    double t_end = 2.0;
    std::vector<double> output_times;
    std::vector<Method> methods;
    fpk::KernelMode kernel_mode = fpk::KernelMode::vada;
    int vada_order = 2;
    KernelExponent kernel_exponent = KernelExponent::eq4;

    std::size_t mcs_paths = 100000;
    double mcs_dt = 1e-3;
    std::uint64_t seed = 20240811;
    double macro_refresh = 0.01;
    std::string out_dir = "out";
    unsigned n_threads = 0;
};

/// Table defaults for one scenario family.
ScenarioConfig default_config(Kind kind);

Kind parse_kind(const std::string& name);
Method parse_method(const std::string& name);
fpk::KernelMode parse_kernel_mode(const std::string& name);
KernelExponent parse_kernel_exponent(const std::string& name);
std::string to_string(Kind k);
std::string to_string(Method m);
std::string to_string(fpk::KernelMode m);
std::string to_string(KernelExponent e);

/// Flat key=value config file ('#' comments); returns the pairs in file order.
std::map<std::string, std::string> parse_config_file(const std::string& path);

/// Applies one key=value override onto the config (the CLI funnels both config
/// files and command-line flags through this).
void apply_override(ScenarioConfig& cfg, const std::string& key, const std::string& value);

struct BuiltSystem {
    SystemSpec spec;
    InitialLaw init;
};

/// Instantiates the scenario's SDE and initial law from the config.
BuiltSystem build_system(const ScenarioConfig& cfg);

struct KernelOracleReport {
    double avg_rel_diff_eq4 = std::numeric_limits<double>::quiet_NaN();
    double avg_rel_diff_paper = std::numeric_limits<double>::quiet_NaN();
    std::string favored;
};

struct RunResult {
    ScenarioConfig config;
    Grid1D grid;
    std::optional<PdfSurface> memfpk;
    std::optional<PdfSurface> mcs_pdf;
    std::optional<PdfSurface> analytic_pdf;
    std::optional<sde::McSummary> mcs;
    std::optional<stats::SurfaceDistance> memfpk_vs_analytic;
    std::optional<stats::SurfaceDistance> memfpk_vs_mcs;
    std::optional<KernelOracleReport> kernel_oracle;
    std::size_t divergent_paths = 0;
    std::map<std::string, double> timings_sec;
    std::vector<std::string> artifacts;
};

/// Runs the configured methods and writes pdf_surface.csv, cdf.csv,
/// moments.csv and report.json into out_dir (atomically: partial artifacts
/// are removed on failure).
RunResult run(const ScenarioConfig& cfg);

/// Same pipeline on a caller-supplied system ("custom" scenario).
RunResult run_with_system(const ScenarioConfig& cfg, const SystemSpec& spec,
                          const InitialLaw& init);

} // namespace memfpk::scenario
