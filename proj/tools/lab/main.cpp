// lab: experiment runner for the constrained-flow laboratory.
//
//   lab run <config.toml>... [--set k=v]... [--deterministic] [--jobs N]
//   lab plot <dir>
//   lab report <dir>
//
// Exit codes for `run`: 0 all asserted checks pass, 1 runtime failure
// (partial artifacts are preserved), 2 invalid configuration.

#include <sys/wait.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <string>
#include <vector>

#include "slab/experiments.hpp"
#include "slab/weiss.hpp"

namespace fs = std::filesystem;

namespace {

std::string output_root() {
  const char* env = std::getenv("LAB_OUTPUT_ROOT");
  return env && *env ? std::string(env) : std::string(".");
}

int run_one(const std::string& config_path,
            const std::vector<std::string>& overrides, bool deterministic) {
  slab::TomlMap cfg;
  try {
    cfg = slab::parse_toml_file(config_path);
    for (const auto& kv : overrides) slab::apply_override(cfg, kv);
    if (deterministic) slab::apply_override(cfg, "run.deterministic=true");
  } catch (const std::exception& e) {
    std::fprintf(stderr, "lab run: %s: %s\n", config_path.c_str(), e.what());
    return 2;
  }

  std::string outdir;
  try {
    const auto it = cfg.find("experiment");
    if (it == cfg.end())
      throw std::invalid_argument("config: missing 'experiment' key");
    const std::string name = it->second.str;
    const std::string sub =
        slab::toml_str(cfg, "output.dir", "runs/" + name);
    outdir = output_root() + "/" + sub;

    const auto t0 = std::chrono::steady_clock::now();
    const auto rep = slab::run_experiment(cfg, outdir);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();

    for (const auto& ch : rep.checks)
      std::printf("  [%s] %-32s measured %.6g %s %.6g\n",
                  ch.pass ? "pass" : "FAIL", ch.name.c_str(), ch.measured,
                  ch.relation.c_str(), ch.bound);
    std::printf("%s: %s in %.1f s -> %s\n", name.c_str(),
                rep.ok() ? "ok" : "FAILED", secs, outdir.c_str());
    return rep.ok() ? 0 : 1;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "lab run: invalid config: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "lab run: %s (partial artifacts in %s)\n", e.what(),
                 outdir.c_str());
    return 1;
  }
}

int cmd_run(const std::vector<std::string>& configs,
            const std::vector<std::string>& overrides, bool deterministic,
            int jobs) {
  if (jobs <= 1 || configs.size() <= 1) {
    int worst = 0;
    for (const auto& c : configs)
      worst = std::max(worst, run_one(c, overrides, deterministic));
    return worst;
  }
  // Independent configs in parallel child processes with disjoint output
  // directories (the configs are responsible for the disjointness).
  std::vector<pid_t> live;
  int worst = 0;
  std::size_t next = 0;
  auto reap = [&](bool block) {
    int status = 0;
    const pid_t p = waitpid(-1, &status, block ? 0 : WNOHANG);
    if (p > 0) {
      live.erase(std::remove(live.begin(), live.end(), p), live.end());
      worst = std::max(worst, WIFEXITED(status) ? WEXITSTATUS(status) : 1);
    }
    return p > 0;
  };
  while (next < configs.size() || !live.empty()) {
    while (next < configs.size() &&
           live.size() < static_cast<std::size_t>(jobs)) {
      const pid_t p = fork();
      if (p == 0) _exit(run_one(configs[next], overrides, deterministic));
      if (p < 0) return 1;
      live.push_back(p);
      ++next;
    }
    reap(true);
  }
  return worst;
}

void plot_trace_file(const fs::path& csv, const fs::path& dir, bool& any) {
  const auto t = slab::read_trace_csv(csv.string());
  if (t.rows.empty()) throw std::runtime_error("empty trace: " + csv.string());
  if (t.rows.size() == 1)
    std::fprintf(stderr, "lab plot: %s has a single row; degenerate plot\n",
                 csv.c_str());
  const std::string base = csv.stem().string();
  std::vector<double> tau, W, H, lam, vn;
  for (const auto& r : t.rows) {
    tau.push_back(r.tau);
    W.push_back(r.W);
    H.push_back(r.H);
    lam.push_back(r.lambda);
    vn.push_back(r.vnorm2);
  }
  auto emit = [&](const std::string& suffix, const std::string& ylabel,
                  std::vector<slab::Series> series, bool logy) {
    slab::PlotSpec p;
    p.title = base + " " + ylabel;
    p.xlabel = "tau";
    p.ylabel = ylabel;
    p.logy = logy;
    p.series = std::move(series);
    slab::write_svg_plot(p, (dir / ("plot_" + base + "_" + suffix + ".svg"))
                                .string());
  };
  emit("w", "W", {slab::Series{"W", tau, W}}, false);
  // Semilog view with the fitted decay line overlaid when a fit is possible.
  std::vector<slab::Series> semilog{slab::Series{"W", tau, W}};
  try {
    const auto fit = slab::fit_decay(tau, W, slab::DecayModel::exponential,
                                     1.0, tau.back());
    std::vector<double> fy;
    for (double x : tau) fy.push_back(fit.A0 * std::exp(-fit.gamma0 * x));
    semilog.push_back(slab::Series{"fit", tau, fy});
  } catch (const std::exception&) {
  }
  emit("w_log", "W (semilog)", semilog, true);
  emit("h", "||u||^2", {slab::Series{"H", tau, H}}, false);
  emit("lambda", "profile parameters",
       {slab::Series{"lambda", tau, lam}, slab::Series{"vnorm2", tau, vn}},
       false);
  any = true;
}

int cmd_plot(const std::string& dir) {
  bool any = false;
  try {
    for (const auto& ent : fs::directory_iterator(dir)) {
      const auto name = ent.path().filename().string();
      if (name.rfind("trace", 0) == 0 && ent.path().extension() == ".csv")
        plot_trace_file(ent.path(), dir, any);
    }
    const fs::path hc = fs::path(dir) / "hcurves.csv";
    if (fs::exists(hc)) {
      const auto t = slab::read_table_csv(hc.string());
      slab::PlotSpec p;
      p.title = "H-curves";
      p.xlabel = "r";
      p.ylabel = "H";
      p.logx = p.logy = true;
      p.series = {slab::Series{"k=3/2", t.column("r32"), t.column("H32")},
                  slab::Series{"k=2", t.column("r2m"), t.column("H2m")}};
      slab::write_svg_plot(p, (fs::path(dir) / "plot_hcurves.svg").string());
      any = true;
    }
    const fs::path sp = fs::path(dir) / "spectrum_levels.csv";
    if (fs::exists(sp)) {
      const auto t = slab::read_table_csv(sp.string());
      slab::PlotSpec p;
      p.title = "eigenvalue convergence";
      p.xlabel = "N";
      p.ylabel = "lambda";
      p.logx = true;
      p.series = {slab::Series{"lambda1", t.column("N"), t.column("lambda1")},
                  slab::Series{"lambda2", t.column("N"), t.column("lambda2")}};
      slab::write_svg_plot(p,
                           (fs::path(dir) / "plot_spectrum.svg").string());
      any = true;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "lab plot: %s\n", e.what());
    return 1;
  }
  if (!any) {
    std::fprintf(stderr, "lab plot: no trace CSVs found in %s\n", dir.c_str());
    return 1;
  }
  return 0;
}

int cmd_report(const std::string& dir) {
  const fs::path p = fs::path(dir) / "report.json";
  std::ifstream in(p, std::ios::binary);
  if (!in) {
    std::fprintf(stderr, "lab report: missing %s\n", p.c_str());
    return 1;
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "lab report: %s\n", e.what());
    return 1;
  }
  std::printf("experiment: %s\n", j["experiment"].get<std::string>().c_str());
  for (const auto& ch : j["checks"])
    std::printf("  [%s] %-32s measured %.6g %s %.6g%s%s\n",
                ch["pass"].get<bool>() ? "pass" : "FAIL",
                ch["name"].get<std::string>().c_str(),
                ch["measured"].get<double>(),
                ch["relation"].get<std::string>().c_str(),
                ch["bound"].get<double>(), ch.contains("note") ? "  # " : "",
                ch.contains("note") ? ch["note"].get<std::string>().c_str()
                                    : "");
  std::printf("artifacts: %zu files\n", j["artifacts"].size());
  const bool ok = j["ok"].get<bool>();
  std::printf("result: %s\n", ok ? "ok" : "FAILED");
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"constrained-flow laboratory"};
  app.require_subcommand(1);

  std::vector<std::string> configs, overrides;
  bool deterministic = false;
  int jobs = 1;
  auto* run = app.add_subcommand("run", "run experiments from config files");
  run->add_option("config", configs, "TOML config file(s)")
      ->required()
      ->expected(-1);
  run->add_option("--set", overrides, "override key=value");
  run->add_flag("--deterministic", deterministic,
                "record the deterministic flag in the config echo "
                "(runs are deterministic regardless)");
  run->add_option("--jobs", jobs, "parallel worker processes");

  std::string dir;
  auto* plot = app.add_subcommand("plot", "emit SVG plots for a run directory");
  plot->add_option("dir", dir, "run output directory")->required();
  auto* report =
      app.add_subcommand("report", "pretty-print a run directory's report");
  report->add_option("dir", dir, "run output directory")->required();

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) return cmd_run(configs, overrides, deterministic, jobs);
  if (plot->parsed()) return cmd_plot(dir);
  return cmd_report(dir);
}
