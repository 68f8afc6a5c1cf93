#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "idqn/errors.hpp"
#include "idqn/sim/simulator.hpp"

using namespace idqn::sim;

namespace {

SimConfig no_jitter() {
  SimConfig cfg;
  cfg.jitter = false;
  return cfg;
}

CarState pose(double x, double y, double heading, double speed) {
  CarState s;
  s.position = {x, y};
  s.heading = heading;
  s.speed = speed;
  return s;
}

std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("idqn_sim_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Mirror distance between the left and right halves of a single-channel frame.
int max_mirror_difference(const Frame& f) {
  int worst = 0;
  for (std::size_t y = 0; y < f.height; ++y) {
    for (std::size_t x = 0; x < f.width / 2; ++x) {
      worst = std::max(worst, std::abs(int(f.at(x, y)) - int(f.at(f.width - 1 - x, y))));
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("geometry helpers") {
  CHECK(wrap_angle(0.0) == 0.0);
  CHECK(wrap_angle(std::numbers::pi) == doctest::Approx(std::numbers::pi));
  CHECK(wrap_angle(-std::numbers::pi) == doctest::Approx(std::numbers::pi));
  CHECK(wrap_angle(3.0 * std::numbers::pi / 2.0) == doctest::Approx(-std::numbers::pi / 2.0));
  Segment s{{0, 0}, {10, 0}, 2};
  CHECK(s.distance({5, 1.5}) == doctest::Approx(1.5));
  CHECK(s.distance({13, 4}) == doctest::Approx(5.0));
  CHECK(s.direction() == 0.0);
  CHECK(Segment{{0, 0}, {0, -5}, 1}.direction() == doctest::Approx(-std::numbers::pi / 2));
}

TEST_CASE("actions map to the fixed steering/throttle table") {
  SimConfig cfg;
  CHECK(make_action(ActionId::forward, cfg).steering == 0.0);
  CHECK(make_action(ActionId::left, cfg).steering == -0.25);
  CHECK(make_action(ActionId::right, cfg).steering == 0.25);
  for (auto id : {ActionId::forward, ActionId::left, ActionId::right}) {
    CHECK(make_action(id, cfg).throttle == 0.35);
    CHECK(parse_action(to_string(id)) == id);
  }
  CHECK(parse_action("left") == ActionId::left);
  CHECK_FALSE(parse_action("UP").has_value());
}

TEST_CASE("step: centered FORWARD on the lane is rewarded and continues") {
  Simulator sim(straight_map(), no_jitter());
  auto out = sim.step(sim.reset(0), make_action(ActionId::forward, sim.config()));
  CHECK(out.reward > 0.0);
  CHECK_FALSE(out.done);
  CHECK(out.cause == EndCause::none);
  CHECK(out.next_state.alive);
}

TEST_CASE("step: leaving the lane ends the episode with -P_terminal") {
  Simulator sim(straight_map(), no_jitter());
  auto out = sim.step(pose(50, 4.5, 0, 3), make_action(ActionId::forward, sim.config()));
  CHECK(out.cause == EndCause::out_of_bounds);
  CHECK(out.done);
  CHECK_FALSE(out.next_state.alive);
  CHECK(out.reward == -sim.config().p_terminal);
}

TEST_CASE("step: overlapping an obstacle is a collision") {
  Simulator sim(intersection_map(), no_jitter());
  auto out =
      sim.step(pose(0, -42.5, -std::numbers::pi / 2, 1), make_action(ActionId::forward, sim.config()));
  CHECK(out.cause == EndCause::collision);
  CHECK(out.done);
  CHECK(out.reward <= -7.0);
}

TEST_CASE("step: step limit ends the episode without penalty") {
  SimConfig cfg = no_jitter();
  cfg.step_limit = 3;
  Simulator sim(straight_map(), cfg);
  auto s = sim.reset(0);
  StepOutcome out;
  for (int i = 0; i < 3; ++i) {
    out = sim.step(s, make_action(ActionId::forward, cfg));
    s = out.next_state;
  }
  CHECK(out.cause == EndCause::step_limit);
  CHECK(out.done);
  CHECK(out.reward > 0.0);
  CHECK_THROWS_AS(sim.step(s, make_action(ActionId::forward, cfg)), idqn::UsageError);
}

TEST_CASE("reward: instantiated formula examples") {
  SimConfig cfg = no_jitter();
  const RoadMap map = straight_map();
  CHECK(reward(pose(100, 0, 0, cfg.v_max()), map, cfg) == doctest::Approx(3.0).epsilon(1e-12));
  // d = half_width, heading error = theta_max, v = 0: every term vanishes.
  CHECK(reward(pose(100, 4.0, std::numbers::pi / 2, 0), map, cfg) ==
        doctest::Approx(0.0).epsilon(1e-12));
  // Half-way terms: d = hw/2, error = theta_max/2, v = v_max/2.
  CHECK(reward(pose(100, -2.0, -std::numbers::pi / 4, cfg.v_max() / 2), map, cfg) ==
        doctest::Approx(1.5));
  // Collision: shaped terms minus P_terminal.
  const RoadMap inter = intersection_map();
  const auto hit = pose(0, -42.5, -std::numbers::pi / 2, cfg.v_max());
  CHECK(reward(hit, inter, cfg) == doctest::Approx(shaped_reward(hit, inter, cfg) - 10.0));
  CHECK(reward(hit, inter, cfg) <= -7.0);
}

TEST_CASE("reward: bounded and continuous away from events") {
  SimConfig cfg = no_jitter();
  const RoadMap map = intersection_map();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ux(-20, 20), uy(-50, 5), uh(-std::numbers::pi, std::numbers::pi),
      uv(0, 6), unit(-1, 1);
  int interior = 0;
  for (int i = 0; i < 20000; ++i) {
    const auto s = pose(ux(rng), uy(rng), uh(rng), uv(rng));
    const double r = reward(s, map, cfg);
    REQUIRE(r >= -cfg.p_terminal);
    REQUIRE(r <= cfg.w_distance + cfg.w_angle + cfg.w_speed);
    auto t = s;
    t.position.x += 1e-6 * unit(rng);
    t.position.y += 1e-6 * unit(rng);
    t.heading += 1e-6 * unit(rng);
    t.speed = std::max(0.0, t.speed + 1e-6 * unit(rng));
    const bool same_events =
        query_lane(map, s.position, s.heading).on_road == query_lane(map, t.position, t.heading).on_road &&
        collides(map, s.position, cfg.car_radius) == collides(map, t.position, cfg.car_radius);
    if (same_events) {
      ++interior;
      REQUIRE(std::abs(reward(t, map, cfg) - r) < 1e-3);
    }
  }
  CHECK(interior > 19000);
}

TEST_CASE("termination: done iff off-lane, collision, or step limit") {
  SimConfig cfg = no_jitter();
  cfg.step_limit = 40;
  Simulator sim(intersection_map(), cfg);
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> pick(0, 2);
  int ended = 0;
  for (int episode = 0; episode < 60; ++episode) {
    auto s = sim.reset(static_cast<std::uint64_t>(episode));
    s.position.y -= episode * 0.6;  // start some episodes near the junction
    for (;;) {
      auto out = sim.step(s, make_action(static_cast<ActionId>(pick(rng)), cfg));
      const auto& n = out.next_state;
      const bool expected = !query_lane(sim.map(), n.position, n.heading).on_road ||
                            collides(sim.map(), n.position, cfg.car_radius) ||
                            n.tick >= cfg.step_limit;
      REQUIRE(out.done == expected);
      REQUIRE(out.done == (out.cause != EndCause::none));
      if (out.done) {
        ++ended;
        break;
      }
      s = n;
    }
  }
  CHECK(ended == 60);
}

TEST_CASE("physics: deterministic and drift-free on a straight lane") {
  Simulator sim(straight_map(), no_jitter());
  const auto start = sim.reset(0);
  const auto a = sim.step(start, make_action(ActionId::left, sim.config()));
  const auto b = sim.step(start, make_action(ActionId::left, sim.config()));
  CHECK(a.next_state == b.next_state);
  CHECK(a.frame == b.frame);
  CHECK(a.reward == b.reward);

  auto s = start;
  for (int i = 0; i < 450; ++i) {
    auto out = sim.step(s, make_action(ActionId::forward, sim.config()));
    REQUIRE_FALSE(out.done);
    s = out.next_state;
    REQUIRE(std::abs(s.position.y) <= 1e-9);
    REQUIRE(s.speed >= 0.0);
  }
  CHECK(s.speed == doctest::Approx(sim.config().v_max()).epsilon(1e-3));
}

TEST_CASE("physics: LEFT turns the car to its left, RIGHT to its right") {
  SimConfig cfg = no_jitter();
  Simulator sim(intersection_map(), cfg);
  auto left = pose(0, -10, -std::numbers::pi / 2, 4);
  auto right = left;
  for (int i = 0; i < 5; ++i) {
    left = sim.advance(left, make_action(ActionId::left, cfg), cfg.dt);
    right = sim.advance(right, make_action(ActionId::right, cfg), cfg.dt);
  }
  CHECK(left.position.x < 0.0);   // facing north, left is west
  CHECK(right.position.x > 0.0);
  CHECK(left.heading < -std::numbers::pi / 2);
}

TEST_CASE("physics: brake decelerates, speed never negative") {
  SimConfig cfg = no_jitter();
  Simulator sim(straight_map(), cfg);
  Action brake{ActionId::forward, 0.0, 0.0, 1.0};
  auto s = pose(10, 0, 0, 2.0);
  for (int i = 0; i < 10; ++i) s = sim.advance(s, brake, cfg.dt);
  CHECK(s.speed == 0.0);
}

TEST_CASE("render: deterministic, symmetric, and mode-dependent shape") {
  SimConfig cfg = no_jitter();
  for (const RoadMap& map : {straight_map(), intersection_map()}) {
    Simulator sim(map, cfg);
    const auto s = sim.reset(0);
    const Frame a = sim.render(s);
    CHECK(a == sim.render(s));
    CHECK(a.width == 84);
    CHECK(a.height == 84);
    CHECK(a.channels == 1);
    CHECK(max_mirror_difference(a) <= 1);
    const Frame rgb = sim.render(s, RenderMode::demo_rgb_64);
    CHECK(rgb.width == 64);
    CHECK(rgb.height == 64);
    CHECK(rgb.channels == 3);
  }
}

TEST_CASE("render: the fence appears as the car approaches it") {
  SimConfig cfg = no_jitter();
  Simulator sim(intersection_map(), cfg);
  const auto count_fence = [](const Frame& f) {
    int n = 0;
    for (auto p : f.pixels) n += p == 149;
    return n;
  };
  const auto far = sim.render(pose(0, -3, -std::numbers::pi / 2, 0));
  const auto near = sim.render(pose(0, -34, -std::numbers::pi / 2, 0));
  CHECK(count_fence(near) > count_fence(far));
  CHECK(count_fence(near) > 100);
}

TEST_CASE("render: an off-center car sees an asymmetric road") {
  SimConfig cfg = no_jitter();
  Simulator sim(straight_map(), cfg);
  CHECK(max_mirror_difference(sim.render(pose(50, 2, 0, 0))) > 10);
}

TEST_CASE("reset: spawn pose, seeded jitter") {
  Simulator exact(intersection_map(), no_jitter());
  const auto s = exact.reset(0);
  CHECK(s.position == intersection_map().spawn.position);
  CHECK(s.heading == doctest::Approx(intersection_map().spawn.heading));
  CHECK(s.speed == 0.0);
  CHECK(s.alive);
  CHECK(s.tick == 0);

  SimConfig cfg;
  Simulator sim(intersection_map(), cfg);
  CHECK(sim.reset(42) == sim.reset(42));
  CHECK_FALSE(sim.reset(42) == sim.reset(43));
  double sum = 0.0;
  const double spawn_x = intersection_map().spawn.position.x;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto r = sim.reset(seed);
    const double lateral = r.position.x - spawn_x;  // spawn faces north, right is +x
    REQUIRE(std::abs(lateral) <= 0.5);
    REQUIRE(std::abs(wrap_angle(r.heading - intersection_map().spawn.heading)) <=
            5.0 * std::numbers::pi / 180.0 + 1e-12);
    sum += lateral;
  }
  CHECK(std::abs(sum / 1000.0) < 0.05);
}

TEST_CASE("map files round-trip and report errors by line") {
  const auto dir = temp_dir("maps");
  for (const RoadMap& map : {intersection_map(), straight_map()}) {
    save_map(dir / "m.map", map);
    CHECK(load_map(dir / "m.map") == map);
  }
  std::istringstream bad("segment 0 0 10 0 2\nspawn 0 0 0 0\nsegment 1 2 3\n");
  CHECK_THROWS_WITH_AS(parse_map(bad, "bad.map"), doctest::Contains("bad.map:3"), idqn::ConfigError);
  std::istringstream width("segment 0 0 10 0 0\nspawn 0 0 0 0\n");
  CHECK_THROWS_WITH_AS(parse_map(width), doctest::Contains("half_width"), idqn::ConfigError);
  std::istringstream junction("segment 0 0 10 0 2\nsegment 0 5 0 9 2\njunction 10 0 0 1\nspawn 0 0 0 0\n");
  CHECK_THROWS_WITH_AS(parse_map(junction), doctest::Contains("segment 1"), idqn::ConfigError);
  std::istringstream nospawn("segment 0 0 10 0 2\n");
  CHECK_THROWS_AS(parse_map(nospawn), idqn::ConfigError);
  std::istringstream comments("# comment\nsegment 0 0 10 0 2  # lane\n\nspawn 1 0 0 0\n");
  CHECK(parse_map(comments).segments.size() == 1);
  CHECK(resolve_map("straight") == straight_map());
}

TEST_CASE("frames: PNM round-trip, gray conversion, resize") {
  const auto dir = temp_dir("frames");
  Frame rgb(5, 4, 3);
  for (std::size_t i = 0; i < rgb.pixels.size(); ++i) rgb.pixels[i] = static_cast<std::uint8_t>(i * 7);
  write_pnm(dir / "a.ppm", rgb);
  CHECK(read_pnm(dir / "a.ppm") == rgb);
  const Frame gray = to_gray(rgb);
  CHECK(gray.channels == 1);
  write_pnm(dir / "a.pgm", gray);
  CHECK(read_pnm(dir / "a.pgm") == gray);
  Frame white(2, 2, 3, 255);
  CHECK(to_gray(white).pixels == std::vector<std::uint8_t>(4, 255));

  {
    std::ofstream out(dir / "t.ppm", std::ios::binary);
    out << "P6\n4 4\n255\n" << std::string(10, 'x');
  }
  CHECK_THROWS_WITH_AS(read_pnm(dir / "t.ppm"), doctest::Contains("truncated"), idqn::ConfigError);

  Frame flat(10, 10, 3, 77);
  const Frame small = resize_bilinear(flat, 4, 6);
  CHECK(small.width == 4);
  CHECK(small.height == 6);
  CHECK(small.pixels == std::vector<std::uint8_t>(4 * 6 * 3, 77));
  const Frame lower = crop_rows(rgb, 2, 2);
  CHECK(lower.at(0, 0, 0) == rgb.at(0, 2, 0));
}
