// Command-line front end: run scenarios, sweep a config axis, check gain
// conditions, and run the acceptance self-test.
//
// Exit codes: 0 success, 1 usage/config error, 2 simulation divergence
// (for `sweep`, 0 means every child run completed; divergences are recorded
// in the summary and reported with exit 2).

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sanm/acceptance.hpp"
#include "sanm/harness.hpp"

namespace fs = std::filesystem;
using namespace sanm;
using harness::ScenarioConfig;

namespace {

std::string default_out_root() {
    if (const char* env = std::getenv("SANM_OUT_ROOT")) return env;
    return "out";
}

nlohmann::json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ConfigError("config parse error in '" + path + "': " + e.what());
    }
    return j;
}

void print_metrics(const harness::Metrics& m) {
    std::printf("%-34s %s\n", "metric", "value");
    auto row = [](const char* name, const std::string& v) {
        std::printf("%-34s %s\n", name, v.c_str());
    };
    char buf[128];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.6g", v);
        return std::string(buf);
    };
    row("settle time [s]", num(m.settle_time));
    row("position RMS / max [m]", num(m.rms_e_x) + " / " + num(m.max_e_x));
    row("velocity RMS / max [m/s]", num(m.rms_e_v) + " / " + num(m.max_e_v));
    row("attitude RMS / max", num(m.rms_e_r) + " / " + num(m.max_e_r));
    row("rate RMS / max [rad/s]", num(m.rms_e_omega) + " / " + num(m.max_e_omega));
    row("terminal position RMS [m]", num(m.terminal_rms_e_x));
    row("mass estimate final [kg]",
        num(m.m_hat_final(0)) + ", " + num(m.m_hat_final(1)) + ", " + num(m.m_hat_final(2)));
    row("inertia estimate final [kg m^2]",
        num(m.j_hat_final(0)) + ", " + num(m.j_hat_final(1)) + ", " + num(m.j_hat_final(2)));
    if (m.envelope_ok) {
        row("envelope alpha*|z0| / beta / eps",
            num(m.envelope.amplitude) + " / " + num(m.envelope.beta) + " / " +
                num(m.envelope.eps));
    } else {
        row("envelope", "none (" + m.envelope_note + ")");
    }
    row("coupled matrix PD", m.m_full_pd ? "yes" : "no");
    row("phi_x estimation RMS err",
        num(m.phi_x_rms_error(0)) + ", " + num(m.phi_x_rms_error(1)) + ", " +
            num(m.phi_x_rms_error(2)));
    row("V decreasing outside eps ball", num(100.0 * m.v_decrease_fraction) + " %");
}

int cmd_run(const std::string& config_path, const std::string& out_dir) {
    ScenarioConfig cfg;
    try {
        cfg = harness::load_config(config_path);
    } catch (const Error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    }

    const auto cr = lyapunov::check_cr_bound(cfg.gains, cfg.diagnostics.psi_bar);
    if (!cr.pass) {
        std::printf("warning: c_R=%g violates the bound %.6g (binding term %s); "
                    "the condition is sufficient, not necessary — running anyway\n",
                    cfg.gains.c_r, cr.bound, cr.binding_term);
    }

    try {
        fs::create_directories(out_dir);
        const auto res = harness::run_scenario(cfg);
        const std::string csv = (fs::path(out_dir) / "telemetry.csv").string();
        const std::string rep = (fs::path(out_dir) / "diagnostics.txt").string();
        harness::write_log(res.log, csv);
        harness::write_report(res.report, rep);
        std::printf("scenario '%s': %zu ticks -> %s\n", cfg.name.c_str(), res.log.rows.size(),
                    csv.c_str());
        print_metrics(res.metrics);
        return 0;
    } catch (const SimDiverged& e) {
        std::fprintf(stderr, "simulation diverged: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

int cmd_check_gains(const std::string& config_path) {
    ScenarioConfig cfg;
    try {
        cfg = harness::load_config(config_path);
    } catch (const Error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    }
    const auto cr = lyapunov::check_cr_bound(cfg.gains, cfg.diagnostics.psi_bar);
    std::printf("c_R condition: c_R=%g vs bound %.6g (binding term: %s) -> %s (margin %.6g)\n",
                cfg.gains.c_r, cr.bound, cr.binding_term, cr.pass ? "PASS" : "FAIL",
                cr.margin);

    const auto data = lyapunov::LyapunovData::make(cfg.gains);
    const auto& d = cfg.diagnostics;
    const auto stab = lyapunov::assemble_m(cfg.gains, data.p, data.q, d.psi_bar,
                                           cfg.vehicle.mass, d.eps_u, d.eps_c);
    const bool xi_ok = stab.xi < stab.xi_admissible;
    std::printf("coupling loss: Xi=%.6g vs admissible %.6g -> %s\n", stab.xi,
                stab.xi_admissible, xi_ok ? "PASS" : "FAIL");
    std::printf("M eigenvalues:");
    for (int i = 0; i < 5; ++i) std::printf(" %.6g", stab.m_full_eigenvalues(i));
    std::printf("\nSchur verdict: %s (eigen verdict: %s, agree: %s)\n",
                stab.pd_by_schur ? "positive definite" : "not positive definite",
                stab.pd_by_eigen ? "positive definite" : "not positive definite",
                stab.pd_by_schur == stab.pd_by_eigen ? "yes" : "NO");
    const bool all = cr.pass && xi_ok && stab.pd_by_schur;
    std::printf("overall: %s\n", all ? "PASS" : "FAIL");
    return all ? 0 : 2;
}

int cmd_sweep(const std::string& config_path, const std::string& axis,
              const std::string& values_csv, int jobs, const std::string& out_dir) {
    nlohmann::json base;
    std::vector<double> values;
    try {
        base = load_json(config_path);
        harness::parse_config(base);  // validate the template early
        std::stringstream ss(values_csv);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            if (tok.empty()) continue;
            size_t used = 0;
            values.push_back(std::stod(tok, &used));
            if (used != tok.size()) throw ConfigError("bad sweep value '" + tok + "'");
        }
        if (values.empty()) throw ConfigError("sweep: empty value list");
        nlohmann::json probe = base;
        probe[nlohmann::json::json_pointer(axis)] = values.front();
        harness::parse_config(probe);  // axis must name a valid numeric key
    } catch (const std::exception& e) {
        std::fprintf(stderr, "sweep setup error: %s\n", e.what());
        return 1;
    }

    fs::create_directories(out_dir);
    struct Child {
        double value;
        std::string dir;
        bool ok = false;
        std::string note;
        harness::Metrics metrics;
    };
    std::vector<Child> children(values.size());

    auto run_one = [&](size_t i) {
        Child& c = children[i];
        c.value = values[i];
        std::string tag = axis;
        for (auto& ch : tag) {
            if (ch == '/' ) ch = '.';
        }
        char vbuf[48];
        std::snprintf(vbuf, sizeof(vbuf), "%g", values[i]);
        c.dir = (fs::path(out_dir) / (tag.substr(1) + "=" + vbuf)).string();
        try {
            nlohmann::json j = base;
            j[nlohmann::json::json_pointer(axis)] = values[i];
            const ScenarioConfig cfg = harness::parse_config(j);
            fs::create_directories(c.dir);
            const auto res = harness::run_scenario(cfg);
            harness::write_log(res.log, (fs::path(c.dir) / "telemetry.csv").string());
            harness::write_report(res.report, (fs::path(c.dir) / "diagnostics.txt").string());
            c.metrics = res.metrics;
            c.ok = true;
            c.note = "ok";
        } catch (const std::exception& e) {
            c.note = e.what();
        }
    };

    if (jobs < 1) jobs = 1;
    std::vector<std::future<void>> pool;
    size_t next = 0;
    while (next < children.size() || !pool.empty()) {
        while (next < children.size() && pool.size() < static_cast<size_t>(jobs)) {
            pool.push_back(std::async(std::launch::async, run_one, next++));
        }
        pool.front().get();
        pool.erase(pool.begin());
    }

    const std::string summary_path = (fs::path(out_dir) / "summary.csv").string();
    std::ofstream summary(summary_path, std::ios::binary);
    summary << "value,status,rms_e_x,max_e_x,terminal_rms_e_x,rms_e_r,envelope_beta,"
               "envelope_eps,v_decrease_fraction,note\n";
    int failures = 0;
    for (const auto& c : children) {
        failures += !c.ok;
        char line[512];
        if (c.ok) {
            std::snprintf(line, sizeof(line), "%.17g,ok,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,\n",
                          c.value, c.metrics.rms_e_x, c.metrics.max_e_x,
                          c.metrics.terminal_rms_e_x, c.metrics.rms_e_r,
                          c.metrics.envelope_ok ? c.metrics.envelope.beta : -1.0,
                          c.metrics.envelope_ok ? c.metrics.envelope.eps : -1.0,
                          c.metrics.v_decrease_fraction);
            summary << line;
        } else {
            std::string note = c.note;
            for (auto& ch : note) {
                if (ch == ',' || ch == '\n') ch = ';';
            }
            std::snprintf(line, sizeof(line), "%.17g,failed,,,,,,,,%s\n", c.value,
                          note.c_str());
            summary << line;
        }
    }
    std::printf("sweep over %s: %zu runs, %d failed -> %s\n", axis.c_str(), children.size(),
                failures, summary_path.c_str());
    return failures ? 2 : 0;
}

int cmd_selftest() {
    const auto results = acceptance::run_all(/*verbose=*/true);
    int failed = 0;
    for (const auto& r : results) failed += !r.pass;
    std::printf("%zu criteria, %d failed\n", results.size(), failed);
    return failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sanm — sliced adaptive-neuro quadrotor control testbed"};
    app.require_subcommand(1);

    std::string config_path, out_dir = default_out_root();
    std::string axis, values;
    int jobs = 2;

    auto* run = app.add_subcommand("run", "run one scenario and write telemetry + diagnostics");
    run->add_option("--config", config_path, "scenario config (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    run->add_option("--out", out_dir, "output directory (default $SANM_OUT_ROOT or ./out)");

    auto* check = app.add_subcommand("check-gains", "evaluate the gain feasibility conditions");
    check->add_option("--config", config_path, "scenario config (JSON)")
        ->required()
        ->check(CLI::ExistingFile);

    auto* sweep = app.add_subcommand("sweep", "run a scenario over a list of config values");
    sweep->add_option("--config", config_path, "scenario config (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    sweep->add_option("--axis", axis, "JSON pointer to a numeric key, e.g. /gains/learning_scale")
        ->required();
    sweep->add_option("--values", values, "comma-separated numeric values")->required();
    sweep->add_option("--jobs", jobs, "parallel runs (default 2)");
    sweep->add_option("--out", out_dir, "output directory (default $SANM_OUT_ROOT or ./out)");

    app.add_subcommand("selftest", "run the acceptance criteria");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;  // usage/validation problems are exit 1
    }

    if (run->parsed()) return cmd_run(config_path, out_dir);
    if (check->parsed()) return cmd_check_gains(config_path);
    if (sweep->parsed()) return cmd_sweep(config_path, axis, values, jobs, out_dir);
    return cmd_selftest();
}
