// Command-line runner for the transient-PDF scenarios: picks a scenario's
// table defaults, layers config-file entries and command-line flags on top,
// runs the requested methods and writes the CSV/JSON artifacts.

#include "memfpk/scenario.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <deque>
#include <exception>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace sc = memfpk::scenario;

int main(int argc, char** argv) {
    CLI::App app{"transient PDF solver for scalar SDEs driven by fractional Gaussian "
                 "and white noise"};
    app.footer("exit codes: 0 success, 2 configuration error, 3 numerical failure");

    std::string scenario_name = "ou";
    std::string config_path;
    app.add_option("--scenario", scenario_name, "ou | duffing | verhulst | hamiltonian")
        ->capture_default_str();
    app.add_option("--config", config_path, "flat key=value config file (flags win)");

    // every other option funnels through the shared key=value override path
    // (deque: the option callbacks hold references into it)
    std::deque<std::pair<std::string, std::optional<std::string>>> overrides;
    auto add = [&](const std::string& flag, const std::string& help) {
        overrides.emplace_back(flag, std::nullopt);
        auto& slot = overrides.back().second;
        app.add_option_function<std::string>(
            "--" + flag, [&slot](const std::string& v) { slot = v; }, help);
    };
    add("hurst", "Hurst exponent, in [0.5, 1)");
    add("alpha", "model parameter alpha");
    add("beta", "model parameter beta");
    add("sigma-w", "white-noise intensity sigma_W");
    add("sigma-b", "fractional-noise intensity sigma_B");
    add("x0", "point initial state");
    add("mu0", "gaussian initial mean");
    add("sigma0-sq", "gaussian initial variance");
    add("gamma", "hamiltonian damping");
    add("lambda", "hamiltonian nonlinearity");
    add("d1", "hamiltonian excitation intensity D1");
    add("d2", "hamiltonian excitation intensity D2");
    add("h0", "hamiltonian initial energy");
    add("x-min", "grid lower edge");
    add("x-max", "grid upper edge");
    add("dx", "grid spacing");
    add("dt", "solver time step");
    add("t-end", "horizon");
    add("output-times", "comma list of recorded times");
    add("method", "comma subset of memfpk,mcs,analytic");
    add("kernel-mode", "vada | closed_case_ii | closed_case_iv | classical");
    add("vada-order", "expansion order of the decoupled memory term (1..3)");
    add("kernel-exponent", "eq4 | paper-printed (verhulst drift-exponent variant)");
    add("mcs-paths", "Monte Carlo path count");
    add("mcs-dt", "Monte Carlo time step");
    add("seed", "root RNG seed");
    add("macro-refresh", "kernel refresh interval (model seconds)");
    add("out-dir", "artifact directory");
    add("threads", "worker threads (0 = hardware)");

    CLI11_PARSE(app, argc, argv);

    try {
        std::map<std::string, std::string> file_kv;
        if (!config_path.empty()) file_kv = sc::parse_config_file(config_path);

        // scenario resolves first (flag wins over file), then defaults, then overrides
        if (app.count("--scenario") == 0) {
            if (auto it = file_kv.find("scenario"); it != file_kv.end())
                scenario_name = it->second;
        }
        sc::ScenarioConfig cfg = sc::default_config(sc::parse_kind(scenario_name));
        for (const auto& [k, v] : file_kv)
            if (k != "scenario") sc::apply_override(cfg, k, v);
        for (const auto& [k, v] : overrides)
            if (v) sc::apply_override(cfg, k, *v);

        const auto res = sc::run(cfg);
        for (const auto& a : res.artifacts) std::printf("wrote %s\n", a.c_str());
        if (res.memfpk_vs_analytic)
            std::printf("memfpk vs analytic: Linf %.3e\n", res.memfpk_vs_analytic->linf_overall);
        if (res.memfpk_vs_mcs)
            std::printf("memfpk vs mcs:      Linf %.3e\n", res.memfpk_vs_mcs->linf_overall);
        if (res.kernel_oracle && !res.kernel_oracle->favored.empty())
            std::printf("kernel oracle favors %s (eq4 %.3f, paper-printed %.3f)\n",
                        res.kernel_oracle->favored.c_str(), res.kernel_oracle->avg_rel_diff_eq4,
                        res.kernel_oracle->avg_rel_diff_paper);
        return 0;
    } catch (const sc::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
}
