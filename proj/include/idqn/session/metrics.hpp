#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "idqn/sim/simulator.hpp"

namespace idqn::session {

struct EpisodeStats {
  std::size_t episode = 0;
  double mean_reward = 0.0;
  double std_reward = 0.0;  // population
  double total_reward = 0.0;
  std::size_t steps = 0;
  sim::EndCause end_cause = sim::EndCause::none;
  std::uint64_t suggestions_injected = 0;
  friend bool operator==(const EpisodeStats&, const EpisodeStats&) = default;
};

// Mean, population std, and total of unclipped per-step rewards.
EpisodeStats compute_stats(std::size_t episode, std::span<const double> rewards,
                           sim::EndCause cause);

struct RunLog {
  std::vector<EpisodeStats> episodes;
  std::uint64_t global_step = 0;
  std::uint64_t suggestions_received = 0;
  std::uint64_t suggestions_injected = 0;
  std::uint64_t suggestions_dropped = 0;
  std::string config_snapshot;  // TOML
  friend bool operator==(const RunLog&, const RunLog&) = default;
};

sim::EndCause parse_end_cause(const std::string& text);

// episode,mean_reward,std_reward,total_reward,steps,end_cause,suggestions_injected
void write_runlog_csv(std::ostream& out, const RunLog& log);
void save_runlog_csv(const std::filesystem::path& path, const RunLog& log);
std::vector<EpisodeStats> read_runlog_csv(std::istream& in);
std::vector<EpisodeStats> load_runlog_csv(const std::filesystem::path& path);

// Mean and population std of each episode series over one window.
struct WindowSummary {
  std::size_t first_episode = 0;
  std::size_t last_episode = 0;
  double mean_reward_mean = 0.0, mean_reward_std = 0.0;
  double total_reward_mean = 0.0, total_reward_std = 0.0;
  double steps_mean = 0.0, steps_std = 0.0;
};

// Consecutive windows of `window` episodes (the last may be shorter);
// every episode is in exactly one window.
std::vector<WindowSummary> summarize(const std::vector<EpisodeStats>& episodes,
                                     std::size_t window = 5);
void write_summary_csv(std::ostream& out, const std::vector<WindowSummary>& rows);
std::string summary_table(const std::vector<WindowSummary>& rows);

}  // namespace idqn::session
