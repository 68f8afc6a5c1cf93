#include "idqn/pretrain/demo_dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

namespace idqn::pretrain {

namespace {

std::string join(const std::vector<std::string>& items) {
  std::string out = "demo load failed (" + std::to_string(items.size()) + " problem" +
                    (items.size() == 1 ? "" : "s") + "):";
  for (const auto& item : items) out += "\n  " + item;
  return out;
}

sim::Frame to_rgb64(const sim::Frame& frame) {
  sim::Frame rgb = frame;
  if (frame.channels == 1) {
    rgb = sim::Frame(frame.width, frame.height, 3);
    for (std::size_t i = 0; i < frame.pixels.size(); ++i) {
      for (std::size_t c = 0; c < 3; ++c) rgb.pixels[3 * i + c] = frame.pixels[i];
    }
  }
  return sim::resize_bilinear(rgb, 64, 64);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream in(line);
  std::string field;
  while (std::getline(in, field, ',')) fields.push_back(field);
  return fields;
}

bool parse_double(const std::string& s, double& out) {
  try {
    std::size_t used = 0;
    out = std::stod(s, &used);
    return used == s.size() && std::isfinite(out);
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace

DemoLoadError::DemoLoadError(std::vector<std::string> items)
    : ConfigError(join(items)), items_(std::move(items)) {}

std::string frame_filename(std::size_t index, std::size_t channels) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu.%s", index, channels == 1 ? "pgm" : "ppm");
  return buf;
}

DemoDataset load_demos(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw DemoLoadError({"not a directory: " + dir.string()});
  const fs::path frames_dir = dir / "frames";
  std::map<std::size_t, fs::path> frames;
  std::vector<std::string> errors;
  if (fs::is_directory(frames_dir)) {
    for (const auto& entry : fs::directory_iterator(frames_dir)) {
      const auto ext = entry.path().extension().string();
      if (ext != ".ppm" && ext != ".pgm") continue;
      const auto stem = entry.path().stem().string();
      if (stem.empty() || !std::all_of(stem.begin(), stem.end(), ::isdigit)) {
        errors.push_back("unexpected frame file name: " + entry.path().filename().string());
        continue;
      }
      frames[std::stoul(stem)] = entry.path();
    }
  }
  const fs::path labels_path = dir / "labels.csv";
  if (frames.empty() && !fs::exists(labels_path)) {
    throw DemoLoadError({"empty dataset: no frames or labels in " + dir.string()});
  }
  std::ifstream labels(labels_path);
  if (!labels) throw DemoLoadError({"missing labels.csv in " + dir.string()});

  std::string line;
  std::getline(labels, line);
  if (line != "index,throttle,steering,brake,action_id") {
    throw DemoLoadError({"labels.csv: bad header '" + line + "'"});
  }
  std::map<std::size_t, std::pair<DemoLabel, int>> rows;
  std::size_t row = 1;
  while (std::getline(labels, line)) {
    ++row;
    if (line.empty()) continue;
    const std::string where = "labels.csv row " + std::to_string(row);
    const auto fields = split_csv(line);
    if (fields.size() != 5) {
      errors.push_back(where + ": expected 5 fields, got " + std::to_string(fields.size()));
      continue;
    }
    double index = 0, action = 0;
    DemoLabel label;
    if (!parse_double(fields[0], index) || index < 0 || index != std::floor(index) ||
        !parse_double(fields[1], label.throttle) || !parse_double(fields[2], label.steering) ||
        !parse_double(fields[3], label.brake) || !parse_double(fields[4], action)) {
      errors.push_back(where + ": unparsable field");
      continue;
    }
    if (label.steering < -1.0 || label.steering > 1.0) {
      errors.push_back(where + ": steering " + fields[2] + " outside [-1, 1]");
    }
    if (label.throttle < 0.0 || label.throttle > 1.0) {
      errors.push_back(where + ": throttle " + fields[1] + " outside [0, 1]");
    }
    if (label.brake < 0.0 || label.brake > 1.0) {
      errors.push_back(where + ": brake " + fields[3] + " outside [0, 1]");
    }
    const auto idx = static_cast<std::size_t>(index);
    if (!rows.emplace(idx, std::make_pair(label, static_cast<int>(action))).second) {
      errors.push_back(where + ": duplicate index " + fields[0]);
    }
  }
  for (const auto& [idx, path] : frames) {
    if (!rows.count(idx)) errors.push_back("frame " + std::to_string(idx) + ": missing label row");
  }
  DemoDataset dataset;
  for (const auto& [idx, value] : rows) {
    const auto it = frames.find(idx);
    if (it == frames.end()) {
      errors.push_back("label index " + std::to_string(idx) + ": missing frame file");
      continue;
    }
    try {
      DemoSample s;
      s.frame = to_rgb64(sim::read_pnm(it->second));
      s.label = value.first;
      s.action_id = value.second;
      dataset.samples.push_back(std::move(s));
    } catch (const ConfigError& e) {
      errors.push_back(e.what());
    }
  }
  if (!errors.empty()) throw DemoLoadError(std::move(errors));
  if (dataset.samples.empty()) throw DemoLoadError({"empty dataset in " + dir.string()});
  dataset.train.resize(dataset.samples.size());
  for (std::size_t i = 0; i < dataset.train.size(); ++i) dataset.train[i] = i;
  return dataset;
}

void write_demos(const std::filesystem::path& dir, const std::vector<DemoSample>& samples) {
  std::filesystem::create_directories(dir / "frames");
  std::ofstream labels(dir / "labels.csv");
  if (!labels) throw ConfigError("cannot write " + (dir / "labels.csv").string());
  labels << "index,throttle,steering,brake,action_id\n";
  labels.precision(17);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    sim::write_pnm(dir / "frames" / frame_filename(i, s.frame.channels), s.frame);
    labels << i << ',' << s.label.throttle << ',' << s.label.steering << ',' << s.label.brake << ','
           << s.action_id << '\n';
  }
  if (!labels) throw ConfigError("write failed: " + (dir / "labels.csv").string());
}

void assign_split(DemoDataset& dataset, double validation_fraction, std::uint64_t seed) {
  if (validation_fraction < 0.0 || validation_fraction >= 1.0) {
    throw ConfigError("validation fraction must be in [0, 1)");
  }
  std::vector<std::size_t> order(dataset.samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_val =
      static_cast<std::size_t>(std::lround(validation_fraction * static_cast<double>(order.size())));
  dataset.validation.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  dataset.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  std::sort(dataset.validation.begin(), dataset.validation.end());
  std::sort(dataset.train.begin(), dataset.train.end());
}

}  // namespace idqn::pretrain
