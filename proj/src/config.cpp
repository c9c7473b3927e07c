// Copyright 2026 The ddpmlab Authors.
// SPDX-License-Identifier: Apache-2.0
#include "ddpm/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ddpm {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

const std::vector<std::pair<std::string, std::string>>& RunConfig::defaults() {
  static const std::vector<std::pair<std::string, std::string>> kDefaults = {
      {"seed", "0"},
      {"schedule.kind", "linear"},
      {"schedule.T", "50"},
      {"schedule.beta_start", "0.002"},
      {"schedule.beta_end", "0.4"},
      {"model.hidden", "128,128,128"},
      {"model.time_dim", "32"},
      {"model.max_period", "10000"},
      {"model.param_mode", "predict_eps"},
      {"train.loss_mode", "simple"},
      {"train.sigma_mode", "fixed_beta"},
      {"train.steps", "2000"},
      {"train.batch_size", "128"},
      {"train.learning_rate", "0.001"},
      {"train.ema_decay", "0.999"},
      {"train.eval_every", "500"},
      {"train.eval_samples_per_term", "1"},
      {"data.kind", "swiss_roll"},
      {"data.n", "4096"},
      {"data.seed", "0"},
      {"data.center", "0,0"},
      {"data.dim", "2"},
      {"data.mixture_components", "8"},
      {"data.mixture_radius", "0.7"},
      {"data.mixture_stddev", "0.05"},
      {"data.sprite_h", "8"},
      {"data.sprite_w", "8"},
      {"data.sprite_c", "3"},
      {"data.path", ""},
      {"analysis.eval_n", "256"},
      {"analysis.samples_per_term", "1"},
      {"analysis.n_samples", "16"},
      {"analysis.clamp_x0", "auto"},
      {"analysis.snapshot_times", ""},
      {"analysis.t_freeze", "0"},
      {"analysis.k", "8"},
      {"analysis.interp_t", "0"},
      {"analysis.lambdas", "0,0.25,0.5,0.75,1"},
      {"analysis.rd_times", ""},
      {"analysis.ar_D", "2"},
      {"analysis.ar_kind", "uniform"},
      {"io.out_dir", "out"},
  };
  return kDefaults;
}

RunConfig::RunConfig() {
  for (const auto& [k, v] : defaults()) values_[k] = v;
}

void RunConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  parse(buf.str(), path.string());
}

void RunConfig::parse(std::string_view text, std::string_view origin) {
  std::stringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    try {
      set_assignment(t);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(std::string(origin) + ":" + std::to_string(lineno) + ": " +
                                  e.what());
    }
  }
}

void RunConfig::set_assignment(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw std::invalid_argument("expected key=value, got '" + std::string(assignment) + "'");
  }
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void RunConfig::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end()) throw std::invalid_argument("unknown config key '" + key + "'");
  it->second = value;
}

const std::string& RunConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw std::invalid_argument("unknown config key '" + key + "'");
  return it->second;
}

std::int64_t RunConfig::get_int(const std::string& key) const {
  const std::string& s = get(key);
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) {
    throw std::invalid_argument("config key '" + key + "' expects an integer, got '" + s + "'");
  }
  return v;
}

double RunConfig::get_double(const std::string& key) const {
  const std::string& s = get(key);
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw std::invalid_argument("config key '" + key + "' expects a number, got '" + s + "'");
}

bool RunConfig::get_bool(const std::string& key) const {
  const std::string& s = get(key);
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw std::invalid_argument("config key '" + key + "' expects true/false, got '" + s + "'");
}

std::vector<double> RunConfig::get_doubles(const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : split_list(get(key))) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw std::invalid_argument("config key '" + key + "' has a bad number '" + item + "'");
    }
  }
  return out;
}

std::vector<int> RunConfig::get_ints(const std::string& key) const {
  std::vector<int> out;
  for (const auto& item : split_list(get(key))) {
    int v = 0;
    auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc{} || p != item.data() + item.size()) {
      throw std::invalid_argument("config key '" + key + "' has a bad integer '" + item + "'");
    }
    out.push_back(v);
  }
  return out;
}

std::string RunConfig::resolved_text() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
  return out;
}

ScheduleSpec RunConfig::schedule() const {
  ScheduleSpec s;
  s.kind = parse_schedule_kind(get("schedule.kind"));
  s.T = static_cast<int>(get_int("schedule.T"));
  s.beta_start = get_double("schedule.beta_start");
  s.beta_end = get_double("schedule.beta_end");
  s.validate();
  return s;
}

MlpConfig RunConfig::model(std::size_t data_dim) const {
  MlpConfig m;
  m.data_dim = data_dim;
  m.hidden = get_ints("model.hidden");
  m.time.dim = static_cast<int>(get_int("model.time_dim"));
  m.time.max_period = get_double("model.max_period");
  m.param_mode = parse_param_mode(get("model.param_mode"));
  m.validate();
  return m;
}

TrainConfig RunConfig::train(std::size_t data_dim) const {
  TrainConfig c;
  c.model = model(data_dim);
  c.loss_mode = parse_loss_mode(get("train.loss_mode"));
  c.sigma_mode = parse_sigma_mode(get("train.sigma_mode"));
  c.steps = static_cast<int>(get_int("train.steps"));
  c.batch_size = static_cast<std::size_t>(get_int("train.batch_size"));
  c.learning_rate = get_double("train.learning_rate");
  c.ema_decay = get_double("train.ema_decay");
  c.seed = seed();
  c.eval_every = static_cast<int>(get_int("train.eval_every"));
  c.eval_samples_per_term = static_cast<int>(get_int("train.eval_samples_per_term"));
  c.validate();
  return c;
}

DatasetSpec RunConfig::dataset() const {
  DatasetSpec d;
  d.kind = parse_dataset_kind(get("data.kind"));
  d.n = static_cast<std::size_t>(get_int("data.n"));
  d.seed = static_cast<std::uint64_t>(get_int("data.seed"));
  d.center = get_doubles("data.center");
  d.dim = static_cast<int>(get_int("data.dim"));
  d.mixture_components = static_cast<int>(get_int("data.mixture_components"));
  d.mixture_radius = get_double("data.mixture_radius");
  d.mixture_stddev = get_double("data.mixture_stddev");
  d.sprite_shape = {static_cast<int>(get_int("data.sprite_h")),
                    static_cast<int>(get_int("data.sprite_w")),
                    static_cast<int>(get_int("data.sprite_c"))};
  d.path = get("data.path");
  d.validate();
  return d;
}

DatasetSpec RunConfig::eval_dataset() const {
  DatasetSpec d = dataset();
  d.seed += 1;
  d.n = static_cast<std::size_t>(get_int("analysis.eval_n"));
  return d;
}

bool RunConfig::image_like() const {
  const auto kind = parse_dataset_kind(get("data.kind"));
  return kind == DatasetKind::kSprites || kind == DatasetKind::kRawGrid;
}

ReverseModes RunConfig::reverse_modes() const {
  ReverseModes m;
  m.param = parse_param_mode(get("model.param_mode"));
  m.sigma = parse_sigma_mode(get("train.sigma_mode"));
  const std::string& clamp = get("analysis.clamp_x0");
  m.clamp_x0 = clamp == "auto" ? image_like() : get_bool("analysis.clamp_x0");
  return m;
}

}  // namespace ddpm
