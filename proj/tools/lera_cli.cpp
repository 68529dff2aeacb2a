// lera: run replanning suites and inspect tasks, observations and traces.
//
//   lera run --config suite.json [--out DIR] [--jobs N]
//   lera list-tasks [--family tabletop|household]
//   lera render --task ID --seed N --format snapshot|text|raster [--out FILE]
//   lera replay --trace traces.log --episode K
//
// Exit codes: 0 ok, 2 bad input (config, task id, trace, index), 3 backend
// misconfiguration.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "lera/http_backend.hpp"
#include "lera/lera.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kBadInput = 2;
constexpr int kBackendError = 3;

bool write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  return static_cast<bool>(out);
}

lera::BackendFactory make_factory(const lera::BackendSpec& spec) {
  if (spec.kind != lera::BackendSpec::Kind::http) return lera::scripted_factory(spec);
  lera::HttpConfig cfg{spec.endpoint,        spec.model,          spec.timeout_s,
                       spec.max_retries,     spec.max_concurrency, spec.backoff_base_s,
                       spec.raster_size,     true};
  static std::mutex log_mutex;
  auto backend = std::make_shared<lera::HttpBackend>(cfg, [](const std::string& line) {
    std::lock_guard lock(log_mutex);
    std::cerr << line << '\n';
  });
  return [backend] { return backend; };
}

int cmd_run(const std::string& config_path, const std::string& out_override, int jobs) {
  lera::SuiteConfig config;
  try {
    config = lera::load_suite_config(config_path);
  } catch (const lera::BackendConfigError& e) {
    std::cerr << config_path << ": " << e.what() << '\n';
    return kBackendError;
  } catch (const lera::ConfigError& e) {
    std::cerr << config_path << ": " << e.what() << '\n';
    return kBadInput;
  }
  lera::BackendFactory factory;
  try {
    factory = make_factory(config.backend);
  } catch (const lera::ConfigError& e) {
    std::cerr << "backend: " << e.what() << '\n';
    return kBackendError;
  }
  if (jobs <= 0) jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (config.backend.kind == lera::BackendSpec::Kind::http)
    jobs = std::min(jobs, config.backend.max_concurrency);

  const fs::path out_dir = out_override.empty() ? fs::path(config.output) : fs::path(out_override);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  std::ofstream traces(out_dir / "traces.log", std::ios::binary | std::ios::trunc);
  if (!traces) {
    std::cerr << "cannot write " << (out_dir / "traces.log").string() << '\n';
    return 1;
  }
  const lera::SuiteRun run =
      lera::run_suite(config, factory, jobs, [&](const std::string& lines) {
        traces << lines;
        traces.flush();
      });
  traces.close();

  bool ok = write_file(out_dir / "report.csv", lera::emit_report(run.result, lera::ReportFormat::csv));
  ok &= write_file(out_dir / "report.md", lera::emit_report(run.result, lera::ReportFormat::markdown));
  ok &= write_file(out_dir / "report.json", lera::emit_report(run.result, lera::ReportFormat::json));
  if (!ok) {
    std::cerr << "cannot write reports to " << out_dir.string() << '\n';
    return 1;
  }
  std::size_t errors = 0;
  for (const auto& t : run.traces) errors += !t.error.empty();
  std::cout << lera::emit_report(run.result, lera::ReportFormat::markdown);
  std::cout << run.traces.size() << " episodes";
  if (errors) std::cout << ", " << errors << " aborted with internal errors (see traces.log)";
  std::cout << "\n";
  return 0;
}

int cmd_list_tasks(const std::string& family) {
  std::optional<lera::Family> filter;
  if (!family.empty()) {
    filter = lera::family_from_string(family);
    if (!filter) {
      std::cerr << "unknown family \"" << family << "\"\n";
      return kBadInput;
    }
  }
  for (const auto& t : lera::task_library()) {
    if (filter && t.family != *filter) continue;
    std::cout << t.id << '\t' << lera::to_string(t.family) << '\t' << t.gt_plan.size() << " actions\t"
              << t.goals.size() << " goals\t" << t.instruction << '\n';
  }
  return 0;
}

int cmd_render(const std::string& task_id, std::uint64_t seed, const std::string& format,
               const std::string& out) {
  const lera::TaskSpec* task = lera::find_task(task_id);
  if (!task) {
    std::cerr << "unknown task \"" << task_id << "\"\n";
    return kBadInput;
  }
  lera::ObservationFormat f;
  if (format == "snapshot") {
    f = lera::ObservationFormat::snapshot;
  } else if (format == "text") {
    f = lera::ObservationFormat::text;
  } else if (format == "raster") {
    f = lera::ObservationFormat::raster;
  } else {
    std::cerr << "unknown format \"" << format << "\"\n";
    return kBadInput;
  }
  const std::string doc = lera::observe(lera::episode_start_scene(*task, seed, true), f);
  if (out.empty()) {
    std::cout << doc;
    return 0;
  }
  if (!write_file(out, doc)) {
    std::cerr << "cannot write " << out << '\n';
    return 1;
  }
  return 0;
}

int cmd_replay(const std::string& path, std::size_t index) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "cannot read " << path << '\n';
    return kBadInput;
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  std::vector<lera::KeyedTrace> traces;
  try {
    traces = lera::parse_traces(ss.str());
  } catch (const lera::TraceError& e) {
    std::cerr << path << ": " << e.what() << '\n';
    return kBadInput;
  }
  auto it = std::find_if(traces.begin(), traces.end(),
                         [&](const lera::KeyedTrace& k) { return k.episode == index; });
  if (it == traces.end()) {
    std::cerr << "episode " << index << " not in " << path << " (" << traces.size()
              << " episodes)\n";
    return kBadInput;
  }
  std::cout << "episode " << index << ": " << lera::render_transcript(it->trace);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LERa replanning experiments"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  int jobs = 0;
  auto* run = app.add_subcommand("run", "Run a suite of episodes");
  run->add_option("--config", config_path, "Suite config (JSON)")->required();
  run->add_option("--out", out_dir, "Output directory (overrides the config)");
  run->add_option("--jobs", jobs, "Parallel episodes (default: number of processors)");

  std::string family;
  auto* list = app.add_subcommand("list-tasks", "List the built-in tasks");
  list->add_option("--family", family, "tabletop or household");

  std::string task_id, format = "snapshot", render_out;
  std::uint64_t seed = 0;
  auto* render = app.add_subcommand("render", "Write the initial observation of a task");
  render->add_option("--task", task_id, "Task id")->required();
  render->add_option("--seed", seed, "Episode seed");
  render->add_option("--format", format, "snapshot, text or raster");
  render->add_option("--out", render_out, "Output file (default: stdout)");

  std::string trace_path;
  std::size_t episode = 0;
  auto* replay = app.add_subcommand("replay", "Print the timeline of one episode");
  replay->add_option("--trace", trace_path, "traces.log")->required();
  replay->add_option("--episode", episode, "Episode index")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kBadInput;
  }

  if (*run) return cmd_run(config_path, out_dir, jobs);
  if (*list) return cmd_list_tasks(family);
  if (*render) return cmd_render(task_id, seed, format, render_out);
  if (*replay) return cmd_replay(trace_path, episode);
  return kBadInput;
}
