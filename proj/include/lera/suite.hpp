#pragma once

// Experiment suites: a JSON config naming tasks x seeds x agents, run on a
// worker pool, streamed to traces.log in matrix order, summarized per agent.

#include <algorithm>
#include <atomic>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "lera/agent.hpp"
#include "lera/metrics.hpp"
#include "lera/scripted.hpp"
#include "lera/trace.hpp"

namespace lera {

/// The backend section of a config is unusable (bad kind, missing endpoint or key).
class BackendConfigError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

struct BackendSpec {
  enum class Kind { scripted, scripted_faulty, http };

  Kind kind = Kind::scripted;
  std::vector<Fault> schedule;  // scripted_faulty, restarted for every episode
  std::string endpoint;
  std::string model;
  double timeout_s = 60.0;
  int max_retries = 3;
  int max_concurrency = 4;
  double backoff_base_s = 1.0;
  int raster_size = 256;
};

struct SuiteConfig {
  std::string suite = "suite";
  std::uint64_t suite_seed = 0;
  std::vector<std::string> tasks;
  std::vector<std::uint64_t> seeds;
  std::vector<AgentConfig> agents;
  BackendSpec backend;
  int max_actions = 50;
  int max_replans = 25;
  bool perturbations = true;
  std::string output = "out";
  std::string canonical;  // normalized JSON of the whole config, for fingerprints
};

namespace detail {

using json = nlohmann::ordered_json;

/// Line number of every object key, addressed by JSON pointer. Keys are
/// visited in document order, so each lookup resumes where the last ended.
class KeyLines {
 public:
  KeyLines(const std::string& text, const json& root) : text_(text) { walk(root, ""); }

  std::size_t line(const std::string& pointer) const {
    auto it = lines_.find(pointer);
    return it == lines_.end() ? 1 : it->second;
  }

 private:
  void walk(const json& j, const std::string& at) {
    if (j.is_object()) {
      for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string ptr = at + "/" + it.key();
        lines_[ptr] = locate(it.key());
        walk(it.value(), ptr);
      }
    } else if (j.is_array()) {
      for (std::size_t i = 0; i < j.size(); ++i) walk(j[i], at + "/" + std::to_string(i));
    }
  }

  std::size_t locate(const std::string& key) {
    const std::string quoted = json(key).dump();
    std::size_t pos = cursor_;
    while ((pos = text_.find(quoted, pos)) != std::string::npos) {
      std::size_t after = pos + quoted.size();
      while (after < text_.size() && std::isspace(static_cast<unsigned char>(text_[after]))) ++after;
      if (after < text_.size() && text_[after] == ':') {
        cursor_ = after;
        return 1 + static_cast<std::size_t>(std::count(text_.begin(), text_.begin() + static_cast<long>(pos), '\n'));
      }
      pos += quoted.size();
    }
    return 1;
  }

  const std::string& text_;
  std::size_t cursor_ = 0;
  std::map<std::string, std::size_t> lines_;
};

class ConfigReader {
 public:
  ConfigReader(const std::string& text, const json& root) : lines_(text, root) {}

  [[noreturn]] void fail(const std::string& pointer, const std::string& why) const {
    throw ConfigError("line " + std::to_string(lines_.line(pointer)) + ": " + why);
  }

  [[noreturn]] void fail_backend(const std::string& pointer, const std::string& why) const {
    throw BackendConfigError("line " + std::to_string(lines_.line(pointer)) + ": " + why);
  }

  void only_keys(const json& obj, const std::string& at, std::set<std::string> allowed) const {
    if (!obj.is_object()) fail(at, (at.empty() ? std::string("config") : at) + " must be an object");
    for (auto it = obj.begin(); it != obj.end(); ++it)
      if (!allowed.contains(it.key())) fail(at + "/" + it.key(), "unknown key \"" + it.key() + "\"");
  }

  template <class T>
  T get(const json& obj, const std::string& at, const std::string& key, T fallback) const {
    if (!obj.contains(key)) return fallback;
    try {
      return obj.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      fail(at + "/" + key, "\"" + key + "\" has the wrong type");
    }
  }

  double probability(const json& obj, const std::string& at, const std::string& key, double fallback) const {
    const double p = get<double>(obj, at, key, fallback);
    if (!(p >= 0.0 && p <= 1.0)) fail(at + "/" + key, "\"" + key + "\" must be in [0, 1]");
    return p;
  }

  int positive(const json& obj, const std::string& at, const std::string& key, int fallback) const {
    const int v = get<int>(obj, at, key, fallback);
    if (v <= 0) fail(at + "/" + key, "\"" + key + "\" must be positive");
    return v;
  }

 private:
  KeyLines lines_;
};

inline std::vector<std::string> expand_tasks(const ConfigReader& r, const json& tasks) {
  std::vector<std::string> out;
  const json list = tasks.is_string() ? json::array({tasks}) : tasks;
  if (!list.is_array() || list.empty()) r.fail("/tasks", "\"tasks\" must be a non-empty list");
  for (const auto& t : list) {
    if (!t.is_string()) r.fail("/tasks", "task ids must be strings");
    const auto id = t.get<std::string>();
    if (id == "all" || id == "all-tabletop" || id == "all-household") {
      for (const auto& task : task_library())
        if (id == "all" || (id == "all-tabletop") == (task.family == Family::tabletop))
          out.push_back(task.id);
    } else if (find_task(id)) {
      out.push_back(id);
    } else {
      r.fail("/tasks", "unknown task \"" + id + "\"");
    }
  }
  return out;
}

inline std::vector<std::uint64_t> expand_seeds(const ConfigReader& r, const json& seeds) {
  std::vector<std::uint64_t> out;
  if (seeds.is_object()) {
    r.only_keys(seeds, "/seeds", {"start", "count"});
    const auto start = r.get<std::uint64_t>(seeds, "/seeds", "start", 0);
    const int count = r.positive(seeds, "/seeds", "count", 0);
    for (int i = 0; i < count; ++i) out.push_back(start + static_cast<std::uint64_t>(i));
  } else if (seeds.is_array() && !seeds.empty()) {
    for (const auto& s : seeds) {
      if (!s.is_number_unsigned()) r.fail("/seeds", "seeds must be non-negative integers");
      out.push_back(s.get<std::uint64_t>());
    }
  } else {
    r.fail("/seeds", "\"seeds\" must be a non-empty list or {start, count}");
  }
  return out;
}

inline BackendSpec parse_backend(const ConfigReader& r, const json& b) {
  const std::string at = "/backend";
  r.only_keys(b, at,
              {"kind", "schedule", "endpoint", "model", "timeout_s", "max_retries", "max_concurrency",
               "backoff_base_s", "raster_size"});
  BackendSpec s;
  const auto kind = r.get<std::string>(b, at, "kind", "scripted");
  if (kind == "scripted") {
    s.kind = BackendSpec::Kind::scripted;
  } else if (kind == "scripted_faulty") {
    s.kind = BackendSpec::Kind::scripted_faulty;
  } else if (kind == "http") {
    s.kind = BackendSpec::Kind::http;
  } else {
    r.fail_backend(at + "/kind", "unknown backend kind \"" + kind + "\"");
  }
  for (const auto& f : r.get<std::vector<std::string>>(b, at, "schedule", {})) {
    auto fault = fault_from_string(f);
    if (!fault) r.fail(at + "/schedule", "unknown fault \"" + f + "\"");
    s.schedule.push_back(*fault);
  }
  s.endpoint = r.get<std::string>(b, at, "endpoint", "");
  s.model = r.get<std::string>(b, at, "model", "");
  s.timeout_s = r.get<double>(b, at, "timeout_s", s.timeout_s);
  s.max_retries = r.get<int>(b, at, "max_retries", s.max_retries);
  s.max_concurrency = r.positive(b, at, "max_concurrency", s.max_concurrency);
  s.backoff_base_s = r.get<double>(b, at, "backoff_base_s", s.backoff_base_s);
  s.raster_size = r.positive(b, at, "raster_size", s.raster_size);
  if (s.kind == BackendSpec::Kind::http && (s.endpoint.empty() || s.model.empty()))
    r.fail_backend(at, "http backend needs \"endpoint\" and \"model\"");
  return s;
}

}  // namespace detail

/// Parses and validates a suite config. Throws ConfigError with a line number.
inline SuiteConfig parse_suite_config(const std::string& text) {
  using detail::json;
  json root;
  try {
    root = json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  const detail::ConfigReader r(text, root);
  r.only_keys(root, "",
              {"suite", "suite_seed", "tasks", "seeds", "agents", "backend", "budgets", "output",
               "perturbations"});
  SuiteConfig c;
  c.suite = r.get<std::string>(root, "", "suite", c.suite);
  c.suite_seed = r.get<std::uint64_t>(root, "", "suite_seed", 0);
  c.output = r.get<std::string>(root, "", "output", c.output);
  c.perturbations = r.get<bool>(root, "", "perturbations", true);
  if (!root.contains("tasks")) r.fail("", "missing \"tasks\"");
  c.tasks = detail::expand_tasks(r, root["tasks"]);
  if (!root.contains("seeds")) r.fail("", "missing \"seeds\"");
  c.seeds = detail::expand_seeds(r, root["seeds"]);
  if (root.contains("budgets")) {
    const auto& b = root["budgets"];
    r.only_keys(b, "/budgets", {"max_actions", "max_replans"});
    c.max_actions = r.positive(b, "/budgets", "max_actions", c.max_actions);
    c.max_replans = r.positive(b, "/budgets", "max_replans", c.max_replans);
  }
  if (root.contains("backend")) c.backend = detail::parse_backend(r, root["backend"]);

  if (!root.contains("agents") || !root["agents"].is_array() || root["agents"].empty())
    r.fail(root.contains("agents") ? "/agents" : "", "\"agents\" must be a non-empty list");
  std::set<std::string> labels;
  for (std::size_t i = 0; i < root["agents"].size(); ++i) {
    const auto& a = root["agents"][i];
    const std::string at = "/agents/" + std::to_string(i);
    r.only_keys(a, at, {"label", "variant", "p_flip", "p_drop"});
    AgentConfig agent;
    if (!a.contains("label")) r.fail(at, "agent without \"label\"");
    agent.label = r.get<std::string>(a, at, "label", "");
    if (agent.label.empty()) r.fail(at + "/label", "empty agent label");
    if (!labels.insert(agent.label).second)
      r.fail(at + "/label", "duplicate agent label \"" + agent.label + "\"");
    if (a.contains("variant") && !a["variant"].is_null()) {
      const auto name = r.get<std::string>(a, at, "variant", "");
      agent.replanner = variant_from_string(name);
      if (!agent.replanner) r.fail(at + "/variant", "unknown variant \"" + name + "\"");
    }
    agent.checker.p_flip = r.probability(a, at, "p_flip", 0.0);
    if (a.contains("p_drop") && !a["p_drop"].is_null())
      agent.p_drop = r.probability(a, at, "p_drop", 0.0);
    agent.max_actions = c.max_actions;
    agent.max_replans = c.max_replans;
    agent.apply_perturbations = c.perturbations;
    c.agents.push_back(std::move(agent));
  }
  root.erase("output");
  c.canonical = root.dump();
  return c;
}

inline SuiteConfig load_suite_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_suite_config(ss.str());
}

/// Episode seed from the suite seed, task id, seed value and agent label, so
/// adding an agent or task leaves every other episode unchanged.
inline std::uint64_t episode_seed(std::uint64_t suite_seed, const std::string& task_id,
                                  std::uint64_t seed, const std::string& agent_label) {
  std::uint64_t h = derive_seed(suite_seed, "task:" + task_id);
  h = derive_seed(h, "seed:" + std::to_string(seed));
  return derive_seed(h, "agent:" + agent_label);
}

struct EpisodeSlot {
  const TaskSpec* task = nullptr;
  std::uint64_t seed_value = 0;
  std::size_t agent = 0;
};

/// Matrix order: task-major, then seed, then agent.
inline std::vector<EpisodeSlot> episode_matrix(const SuiteConfig& c) {
  std::vector<EpisodeSlot> m;
  for (const auto& id : c.tasks)
    for (auto s : c.seeds)
      for (std::size_t a = 0; a < c.agents.size(); ++a) m.push_back({find_task(id), s, a});
  return m;
}

/// Produces the backend for one episode. Called concurrently.
using BackendFactory = std::function<std::shared_ptr<Backend>()>;

inline BackendFactory scripted_factory(const BackendSpec& spec) {
  auto shared = std::make_shared<ScriptedBackend>();
  if (spec.kind == BackendSpec::Kind::scripted_faulty)
    return [shared, schedule = spec.schedule] {
      return std::make_shared<FaultyBackend>(shared, schedule);
    };
  return [shared] { return shared; };
}

struct SuiteRun {
  std::vector<EpisodeTrace> traces;  // matrix order
  SuiteResult result;
};

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Runs the whole matrix on `jobs` threads. Each finished episode is handed
/// to `sink` as serialized trace lines, strictly in matrix order.
inline SuiteRun run_suite(const SuiteConfig& config, const BackendFactory& make_backend, int jobs,
                          const std::function<void(const std::string&)>& sink = {}) {
  const auto matrix = episode_matrix(config);
  std::vector<std::optional<EpisodeTrace>> done(matrix.size());
  std::mutex mutex;
  std::size_t flushed = 0;
  std::uint64_t hash = fnv1a(config.canonical);
  std::atomic<std::size_t> next{0};

  auto flush = [&] {
    while (flushed < matrix.size() && done[flushed]) {
      const std::string lines = serialize_trace(*done[flushed], flushed);
      hash = fnv1a(lines, hash);
      if (sink) sink(lines);
      ++flushed;
    }
  };
  auto worker = [&] {
    for (std::size_t i = next++; i < matrix.size(); i = next++) {
      const auto& slot = matrix[i];
      const AgentConfig& agent = config.agents[slot.agent];
      const std::uint64_t seed =
          episode_seed(config.suite_seed, slot.task->id, slot.seed_value, agent.label);
      EpisodeTrace trace;
      try {
        std::shared_ptr<Backend> backend = agent.replanner ? make_backend() : nullptr;
        trace = run_episode(*slot.task, agent, backend.get(), seed);
      } catch (const std::exception& e) {
        trace.task_id = slot.task->id;
        trace.agent_label = agent.label;
        trace.seed = seed;
        trace.error = e.what();
        trace.final_goals = {0, static_cast<int>(slot.task->goals.size())};
      }
      std::lock_guard lock(mutex);
      done[i] = std::move(trace);
      flush();
    }
  };
  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(matrix.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  SuiteRun run;
  for (auto& t : done) run.traces.push_back(std::move(*t));
  std::vector<std::string> labels;
  for (const auto& a : config.agents) labels.push_back(a.label);
  run.result = {config.suite, summarize_by_agent(run.traces, labels), hex64(hash)};
  return run;
}

}  // namespace lera
