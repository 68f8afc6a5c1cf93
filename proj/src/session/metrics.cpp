#include "idqn/session/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "idqn/errors.hpp"

namespace idqn::session {

namespace {

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

template <typename F>
MeanStd mean_std(const std::vector<EpisodeStats>& e, std::size_t begin, std::size_t end, F get) {
  const double n = static_cast<double>(end - begin);
  double sum = 0.0;
  for (std::size_t i = begin; i < end; ++i) sum += get(e[i]);
  const double mean = sum / n;
  double sq = 0.0;
  for (std::size_t i = begin; i < end; ++i) sq += (get(e[i]) - mean) * (get(e[i]) - mean);
  return {mean, std::sqrt(sq / n)};
}

}  // namespace

EpisodeStats compute_stats(std::size_t episode, std::span<const double> rewards,
                           sim::EndCause cause) {
  if (rewards.empty()) throw UsageError("episode statistics need at least one step");
  EpisodeStats s;
  s.episode = episode;
  s.steps = rewards.size();
  s.end_cause = cause;
  for (double r : rewards) s.total_reward += r;
  const double n = static_cast<double>(rewards.size());
  s.mean_reward = s.total_reward / n;
  double sq = 0.0;
  for (double r : rewards) sq += (r - s.mean_reward) * (r - s.mean_reward);
  s.std_reward = std::sqrt(sq / n);
  return s;
}

sim::EndCause parse_end_cause(const std::string& text) {
  for (auto c : {sim::EndCause::none, sim::EndCause::out_of_bounds, sim::EndCause::collision,
                 sim::EndCause::step_limit}) {
    if (text == sim::to_string(c)) return c;
  }
  throw ConfigError("unknown end cause '" + text + "'");
}

void write_runlog_csv(std::ostream& out, const RunLog& log) {
  out << "episode,mean_reward,std_reward,total_reward,steps,end_cause,suggestions_injected\n";
  char buf[256];
  for (const auto& e : log.episodes) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%zu,%s,%llu\n", e.episode,
                  e.mean_reward, e.std_reward, e.total_reward, e.steps,
                  sim::to_string(e.end_cause).c_str(),
                  static_cast<unsigned long long>(e.suggestions_injected));
    out << buf;
  }
}

void save_runlog_csv(const std::filesystem::path& path, const RunLog& log) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  write_runlog_csv(out, log);
  if (!out) throw ConfigError("write failed: " + path.string());
}

std::vector<EpisodeStats> read_runlog_csv(std::istream& in) {
  std::string line;
  std::getline(in, line);
  if (line != "episode,mean_reward,std_reward,total_reward,steps,end_cause,suggestions_injected") {
    throw ConfigError("run log: bad header '" + line + "'");
  }
  std::vector<EpisodeStats> out;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::stringstream fields(line);
    std::vector<std::string> f;
    for (std::string x; std::getline(fields, x, ',');) f.push_back(x);
    if (f.size() != 7) throw ConfigError("run log row " + std::to_string(row) + ": expected 7 fields");
    try {
      EpisodeStats e;
      e.episode = std::stoul(f[0]);
      e.mean_reward = std::stod(f[1]);
      e.std_reward = std::stod(f[2]);
      e.total_reward = std::stod(f[3]);
      e.steps = std::stoul(f[4]);
      e.end_cause = parse_end_cause(f[5]);
      e.suggestions_injected = std::stoull(f[6]);
      out.push_back(e);
    } catch (const std::logic_error&) {
      throw ConfigError("run log row " + std::to_string(row) + ": unparsable field");
    }
  }
  return out;
}

std::vector<EpisodeStats> load_runlog_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open run log " + path.string());
  return read_runlog_csv(in);
}

std::vector<WindowSummary> summarize(const std::vector<EpisodeStats>& episodes,
                                     std::size_t window) {
  if (window == 0) throw ConfigError("summary window must be > 0");
  std::vector<WindowSummary> rows;
  for (std::size_t begin = 0; begin < episodes.size(); begin += window) {
    const std::size_t end = std::min(begin + window, episodes.size());
    WindowSummary w;
    w.first_episode = episodes[begin].episode;
    w.last_episode = episodes[end - 1].episode;
    const auto m = mean_std(episodes, begin, end, [](const auto& e) { return e.mean_reward; });
    const auto t = mean_std(episodes, begin, end, [](const auto& e) { return e.total_reward; });
    const auto s = mean_std(episodes, begin, end,
                            [](const auto& e) { return static_cast<double>(e.steps); });
    w.mean_reward_mean = m.mean;
    w.mean_reward_std = m.std;
    w.total_reward_mean = t.mean;
    w.total_reward_std = t.std;
    w.steps_mean = s.mean;
    w.steps_std = s.std;
    rows.push_back(w);
  }
  return rows;
}

void write_summary_csv(std::ostream& out, const std::vector<WindowSummary>& rows) {
  out << "first_episode,last_episode,mean_reward_mean,mean_reward_std,total_reward_mean,"
         "total_reward_std,steps_mean,steps_std\n";
  char buf[320];
  for (const auto& w : rows) {
    std::snprintf(buf, sizeof buf, "%zu,%zu,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n",
                  w.first_episode, w.last_episode, w.mean_reward_mean, w.mean_reward_std,
                  w.total_reward_mean, w.total_reward_std, w.steps_mean, w.steps_std);
    out << buf;
  }
}

std::string summary_table(const std::vector<WindowSummary>& rows) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-11s %20s %22s %18s\n", "episodes", "mean reward",
                "total reward", "steps");
  out += buf;
  for (const auto& w : rows) {
    const std::string span = std::to_string(w.first_episode) + "-" + std::to_string(w.last_episode);
    std::snprintf(buf, sizeof buf, "%-11s %9.3f +- %7.3f %10.2f +- %8.2f %8.1f +- %6.1f\n",
                  span.c_str(), w.mean_reward_mean, w.mean_reward_std, w.total_reward_mean,
                  w.total_reward_std, w.steps_mean, w.steps_std);
    out += buf;
  }
  return out;
}

}  // namespace idqn::session
