#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "idqn/agent/agent.hpp"
#include "idqn/errors.hpp"
#include "chain_mdp.hpp"

using namespace idqn;
using namespace idqn::agent;
using sim::ActionId;
using sim::Frame;

namespace {

Frame gray(std::size_t w, std::size_t h, std::uint8_t value) { return Frame(w, h, 1, value); }

// normalize -> flatten -> dense(3) over an N x H x W stack.
nn::Network<float> linear_q(std::size_t n, std::size_t h, std::size_t w) {
  return nn::Network<float>(
      {nn::LayerSpec::normalize(), nn::LayerSpec::flatten(), nn::LayerSpec::dense(3)}, {n, h, w});
}

AgentConfig small_config(std::size_t n = 1, std::size_t capacity = 1000) {
  AgentConfig cfg;
  cfg.history_length = n;
  cfg.replay_capacity = capacity;
  return cfg;
}

void set_bias(nn::Network<float>& net, std::array<float, 3> q) {
  for (auto& w : net.weights()) w.value.fill(0.0f);
  auto& bias = net.weights().back().value;
  for (std::size_t i = 0; i < 3; ++i) bias[i] = q[i];
}

Transition env(std::uint8_t value, bool done = false, bool start = false) {
  Transition t;
  t.image = gray(2, 1, value);
  t.reward = 0.5;
  t.done = done;
  t.episode_start = start;
  return t;
}

std::vector<float> state_of(const ReplayMemory& m, std::size_t i) {
  std::vector<float> out(m.state_size());
  m.state(i, out.data());
  return out;
}

// Pixel values of each channel (first pixel of each plane).
std::vector<float> channels(const std::vector<float>& s, std::size_t plane) {
  std::vector<float> out;
  for (std::size_t i = 0; i < s.size(); i += plane) out.push_back(s[i]);
  return out;
}

}  // namespace

TEST_CASE("eps: linear annealing schedule") {
  ExplorerSchedule s;
  CHECK(eps(s, 0) == 1.0);
  CHECK(eps(s, 5000) == 0.05);
  CHECK(eps(s, 2500) == 0.525);
  for (std::uint64_t step : {5001u, 10000u, 1000000u}) CHECK(eps(s, step) == 0.05);
  const double slope = (eps(s, 0) - eps(s, 1)) / 1.0;
  for (std::uint64_t a = 0; a < 4999; a += 97) {
    for (std::uint64_t b = a + 1; b < 5000; b += 311) {
      REQUIRE((eps(s, a) - eps(s, b)) / static_cast<double>(b - a) ==
              doctest::Approx(slope).epsilon(1e-12));
      REQUIRE(eps(s, a) >= eps(s, b));
    }
  }
}

TEST_CASE("clip_reward: sign and clamp modes") {
  CHECK(clip_reward(3.7, ClipMode::sign) == 1.0);
  CHECK(clip_reward(-0.2, ClipMode::sign) == -1.0);
  CHECK(clip_reward(0.0, ClipMode::sign) == 0.0);
  for (double r : {-1.0, -0.73, -0.2, 0.0, 0.31, 1.0}) CHECK(clip_reward(r, ClipMode::clamp) == r);
  CHECK(clip_reward(3.7, ClipMode::clamp) == 1.0);
  CHECK(clip_reward(-10.0, ClipMode::clamp) == -1.0);
  CHECK(parse_clip_mode("sign") == ClipMode::sign);
  CHECK_THROWS_AS(parse_clip_mode("tanh"), ConfigError);
}

TEST_CASE("q_target") {
  const std::array<float, 3> next{1.0f, 0.2f, -0.3f};
  CHECK(q_target(-1.0, true, next, 0.99) == -1.0);
  CHECK(q_target(0.5, false, next, 0.99) == doctest::Approx(1.49));
  CHECK(q_target(0.5, false, next, 0.0) == 0.5);
}

TEST_CASE("td_loss: gradient only on the taken action") {
  nn::Tensor q({3, 3}, {0.1f, 0.5f, -0.2f, 1.0f, 0.0f, 0.3f, -0.4f, 0.8f, 0.6f});
  const std::vector<ActionId> actions{ActionId::left, ActionId::forward, ActionId::right};
  const std::vector<double> y{1.0, 0.0, 0.0};
  const auto a = td_loss(q, actions, y);
  CHECK(a.value == doctest::Approx((0.25 + 1.0 + 0.36) / 3.0));
  for (std::size_t b = 0; b < 3; ++b) {
    for (std::size_t k = 0; k < 3; ++k) {
      if (k != static_cast<std::size_t>(actions[b])) CHECK(a.gradient[b * 3 + k] == 0.0f);
    }
  }
  CHECK(a.gradient[1] == doctest::Approx(2.0 * (0.5 - 1.0) / 3.0));
  // Perturb every non-taken output: the gradient is unchanged.
  nn::Tensor perturbed = q;
  perturbed[0] += 5.0f;
  perturbed[2] -= 3.0f;
  perturbed[4] += 1.0f;
  perturbed[7] -= 2.0f;
  CHECK(td_loss(perturbed, actions, y).gradient == a.gradient);
}

TEST_CASE("select_action: greedy argmax, tie-break, and uniform exploration") {
  auto net = linear_q(1, 1, 2);
  set_bias(net, {0.1f, 0.9f, 0.2f});
  Agent agent(small_config(), net, 1);
  agent.begin_episode(gray(2, 1, 10));
  CHECK(agent.select_action_eps(agent.history(), 0.0) == ActionId::left);

  auto tied = linear_q(1, 1, 2);
  set_bias(tied, {0.5f, 0.5f, 0.5f});
  Agent tie_agent(small_config(), tied, 1);
  tie_agent.begin_episode(gray(2, 1, 10));
  CHECK(tie_agent.select_action_eps(tie_agent.history(), 0.0) == ActionId::forward);

  std::array<int, 3> counts{};
  for (int i = 0; i < 10000; ++i) {
    ++counts[static_cast<std::size_t>(agent.select_action_eps(agent.history(), 1.0))];
  }
  for (int c : counts) CHECK(std::abs(c / 10000.0 - 1.0 / 3.0) < 0.02);

  History empty(1);
  CHECK_THROWS_AS(agent.select_action_eps(empty, 0.0), UsageError);
}

TEST_CASE("replay: FIFO eviction keeps insertion order") {
  ReplayMemory m(3, 1);
  for (std::uint8_t v = 1; v <= 4; ++v) m.push(env(v, false, v == 1));
  CHECK(m.size() == 3);
  CHECK(m.evicted() == 1);
  CHECK(m.at(0).image.pixels[0] == 2);
  CHECK(m.at(1).image.pixels[0] == 3);
  CHECK(m.at(2).image.pixels[0] == 4);
}

TEST_CASE("history: window of the last N frames, padded with the oldest") {
  History h(4);
  h.push(gray(1, 1, 7));
  std::vector<float> s(4);
  h.stack_into(s.data());
  CHECK(s == std::vector<float>{7, 7, 7, 7});
  for (std::uint8_t v = 1; v <= 5; ++v) h.push(gray(1, 1, v));
  CHECK(h.size() == 4);
  h.stack_into(s.data());
  CHECK(s == std::vector<float>{2, 3, 4, 5});
  const Frame snap = h.snapshot();
  CHECK(snap.channels == 4);
  std::vector<float> planar(4);
  planar_from_stack(snap, planar.data());
  CHECK(planar == s);
}

TEST_CASE("replay: state stacks respect episodes and skip suggested tuples") {
  ReplayMemory m(100, 3);
  m.push(env(1, false, true));
  m.push(env(2));
  Transition sug;
  sug.image = Frame(2, 1, 3);
  for (std::size_t i = 0; i < sug.image.pixels.size(); ++i) sug.image.pixels[i] = 90 + i % 3;
  sug.suggested = true;
  m.push(sug);
  m.push(env(3, true));
  m.push(env(4, false, true));
  m.push(env(5));

  CHECK(channels(state_of(m, 0), 2) == std::vector<float>{1, 1, 1});
  CHECK(channels(state_of(m, 1), 2) == std::vector<float>{1, 1, 2});
  CHECK(channels(state_of(m, 3), 2) == std::vector<float>{1, 2, 3});
  CHECK(channels(state_of(m, 4), 2) == std::vector<float>{4, 4, 4});  // new episode
  CHECK(channels(state_of(m, 2), 2) == std::vector<float>{90, 91, 92});  // stored stack

  std::vector<float> next(m.state_size());
  REQUIRE(m.next_state(1, next.data()));  // skips the suggested tuple
  CHECK(channels(next, 2) == std::vector<float>{1, 2, 3});
  CHECK_FALSE(m.next_state(3, next.data()));  // done
  REQUIRE(m.next_state(2, next.data()));      // suggested: s' = s
  CHECK(channels(next, 2) == std::vector<float>{90, 91, 92});

  // The newest tuple of the running episode has no successor yet.
  CHECK_FALSE(m.sampleable(5));
  CHECK(m.sampleable(4));
  CHECK(m.sampleable_count() == 5);
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    for (auto idx : m.sample(5, rng)) REQUIRE(idx != 5);
  }
  CHECK(m.suggested_count() == 1);
}

TEST_CASE("replay: sampling is reproducible, distinct, and uniform") {
  ReplayMemory m(100, 1);
  for (int i = 0; i < 100; ++i) m.push(env(static_cast<std::uint8_t>(i), i % 10 == 9, i % 10 == 0));
  Rng a(5), b(5);
  CHECK(m.sample(32, a) == m.sample(32, b));
  std::vector<int> freq(100);
  Rng rng(9);
  for (int batch = 0; batch < 10000; ++batch) {
    const auto ids = m.sample(32, rng);
    REQUIRE(std::set<std::size_t>(ids.begin(), ids.end()).size() == 32);
    for (auto i : ids) ++freq[i];
  }
  const double expected = 10000.0 * 32 / 100;
  for (int f : freq) REQUIRE(std::abs(f - expected) <= 0.15 * expected);
  CHECK_THROWS_AS(m.sample(101, rng), UsageError);
}

TEST_CASE("replay: suggested counters track evictions") {
  ReplayMemory m(4, 1);
  Transition s;
  s.image = gray(2, 1, 0);
  s.suggested = true;
  m.push(env(1, false, true));
  m.push(s);
  m.push(s);
  m.push(env(2));
  m.push(env(3));
  m.push(env(4));
  CHECK(m.suggested_pushed() == 2);
  CHECK(m.suggested_evicted() == 1);
  CHECK(m.suggested_count() == 1);
  std::size_t stored = 0;
  for (std::size_t i = 0; i < m.size(); ++i) stored += m.at(i).suggested;
  CHECK(stored == m.suggested_count());
}

TEST_CASE("replay: binary round-trip preserves tuples and counters") {
  ReplayMemory m(5, 2);
  for (std::uint8_t v = 0; v < 7; ++v) {
    auto t = env(v, v == 3, v == 0 || v == 4);
    t.action = static_cast<ActionId>(v % 3);
    m.push(t);
  }
  std::stringstream buf;
  m.write(buf);
  const auto r = ReplayMemory::read(buf);
  CHECK(r == m);
  auto extra = env(50);
  auto m2 = m;
  auto r2 = r;
  m2.push(extra);
  r2.push(extra);
  CHECK(r2 == m2);
  std::stringstream junk("nope");
  CHECK_THROWS_AS(ReplayMemory::read(junk), ConfigError);
}

TEST_CASE("observe: replay gets the tuple, history the next frame") {
  AgentConfig cfg = small_config(2, 3);
  cfg.batch_size = 1;
  Agent agent(cfg, linear_q(2, 1, 2), 1);
  agent.begin_episode(gray(2, 1, 1));
  for (std::uint8_t v = 2; v <= 6; ++v) {
    agent.observe(gray(2, 1, v - 1), ActionId::right, 3.0, false, gray(2, 1, v));
  }
  CHECK(agent.replay().size() == 3);
  CHECK(agent.replay().at(0).image.pixels[0] == 3);
  CHECK(agent.replay().at(2).reward == 1.0);  // clamp clipping
  CHECK(agent.history().size() == 2);
  CHECK(agent.history().frames().back().pixels[0] == 6);

  const History before = agent.history();
  Transition s;
  s.image = agent.history().snapshot();
  s.action = ActionId::left;
  s.reward = 1.0;
  agent.observe_suggested(s);
  CHECK(agent.history() == before);
  CHECK(agent.replay().at(2).suggested);
}

TEST_CASE("train_step: no-op below a batch, fixed point at zero") {
  AgentConfig cfg = small_config(1, 100);
  cfg.batch_size = 4;
  auto net = linear_q(1, 1, 2);
  for (auto& w : net.weights()) w.value.fill(0.0f);
  Agent agent(cfg, net, 2);
  agent.begin_episode(gray(2, 1, 5));
  for (int i = 0; i < 3; ++i) agent.observe(gray(2, 1, 5), ActionId::forward, 0.0, false, gray(2, 1, 5));
  CHECK_FALSE(agent.train_step().has_value());  // only 2 sampleable
  for (int i = 0; i < 5; ++i) agent.observe(gray(2, 1, 5), ActionId::left, 0.0, i == 4, gray(2, 1, 5));
  const auto before = agent.q_network().weights();
  const auto loss = agent.train_step();
  REQUIRE(loss.has_value());
  CHECK(*loss == 0.0);
  CHECK(agent.q_network().weights() == before);
}

TEST_CASE("train_step: loss is non-negative and learning reduces it") {
  AgentConfig cfg = small_config(1, 100);
  cfg.batch_size = 8;
  nn::Rng init(4);
  auto net = linear_q(1, 1, 2);
  net.initialize(init);
  Agent agent(cfg, net, 3);
  agent.begin_episode(gray(2, 1, 0));
  for (int i = 0; i < 40; ++i) {
    agent.observe(gray(2, 1, static_cast<std::uint8_t>(i * 6)), static_cast<ActionId>(i % 3),
                  (i % 3) == 1 ? 1.0 : -1.0, true, gray(2, 1, 0));
    agent.begin_episode(gray(2, 1, 0));
  }
  double first = 0.0, last = 0.0;
  for (int i = 0; i < 400; ++i) {
    const auto loss = agent.train_step();
    REQUIRE(loss.has_value());
    REQUIRE(*loss >= 0.0);
    if (i < 20) first += *loss;
    if (i >= 380) last += *loss;
  }
  CHECK(last < first);
}

TEST_CASE("sync_target: copy semantics and isolation") {
  nn::Rng init(8);
  auto net = linear_q(1, 1, 4);
  net.initialize(init);
  Agent agent(small_config(), net, 1);
  for (auto& w : agent.q_network().weights()) {
    for (auto& v : w.value.data()) v += 0.5f;
  }
  agent.sync_target();
  nn::Tensor frames({100, 1, 1, 4});
  nn::Rng rng(1);
  std::uniform_int_distribution<int> px(0, 255);
  for (auto& v : frames.data()) v = static_cast<float>(px(rng));
  const auto q = agent.q_network().predict(frames);
  CHECK(agent.target_network().predict(frames) == q);
  for (auto& w : agent.q_network().weights()) w.value.fill(0.0f);
  CHECK(agent.target_network().predict(frames) == q);
}

TEST_CASE("schedule: training from step 200 every 4, syncs at multiples of 1000") {
  const auto trace = [] {
    AgentConfig cfg = small_config(1, 5000);
    Agent agent(cfg, linear_q(1, 1, 2), 11);
    agent.begin_episode(gray(2, 1, 0));
    std::vector<std::pair<std::uint64_t, std::string>> events;
    std::uint64_t step = 0;
    for (; step < 3500; ++step) {
      const auto a = agent.select_action(agent.history(), step);
      events.emplace_back(step, "act:" + sim::to_string(a));
      const bool done = step % 50 == 49;
      agent.observe(gray(2, 1, static_cast<std::uint8_t>(step % 256)), a, 0.1, done,
                    gray(2, 1, static_cast<std::uint8_t>((step + 1) % 256)));
      if (done) agent.begin_episode(gray(2, 1, 0));
      const auto e = agent.learn(step + 1);
      if (e.trained) events.emplace_back(step + 1, "train");
      if (e.synced) events.emplace_back(step + 1, "sync");
    }
    return events;
  };
  const auto events = trace();
  std::vector<std::uint64_t> trains, syncs;
  for (const auto& [step, kind] : events) {
    if (kind == "train") trains.push_back(step);
    if (kind == "sync") syncs.push_back(step);
  }
  REQUIRE_FALSE(trains.empty());
  CHECK(trains.front() == 200);
  for (std::size_t i = 1; i < trains.size(); ++i) REQUIRE(trains[i] - trains[i - 1] == 4);
  CHECK(trains.back() == 3500 - (3500 - 200) % 4);
  CHECK(syncs == std::vector<std::uint64_t>{1000, 2000, 3000});
  CHECK(trace() == events);
}


TEST_CASE("chain MDP: learned Q matches tabular Q-iteration on the same tuples") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    CAPTURE(seed);
    CHECK(idqn::testing::chain_max_error(seed) < 0.05);
  }
}
