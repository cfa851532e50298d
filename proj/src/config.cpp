// Copyright 2026 S3T Contributors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "s3t/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace s3t {

Config Config::desk_scale() {
  Config c;
  c.frontend.compress = 4;
  c.model.swin.input_size = 64;
  c.model.swin.embed_dim = 48;
  c.model.swin.depths = {2, 2, 2};
  c.model.swin.heads = {3, 6, 12};
  c.model.swin.window = 4;
  c.moco.queue_size = 4096;
  c.moco.proj_hidden = 192;
  // The desk run is only 250 optimizer steps; the full-scale EMA rate would
  // leave the key encoder frozen for the whole run, and a linear probe on a
  // few hundred samples needs the faster rate to converge within its budget.
  c.moco.momentum = 0.99;
  // A sharper temperature and a hotter, shorter ramp give the small encoder
  // enough separation between clips within the 250-step budget.
  c.moco.temperature = 0.1;
  c.eval.probe_lr = 0.01;
  c.train.epochs = 50;
  c.train.base_lr = 0.0025;
  c.train.warmup_epochs = 2;
  c.train.batch_size = 32;
  c.train.checkpoint_interval = 25;
  c.eval.probe_batch = 32;
  return c;
}

namespace {

std::string join_ints(const std::vector<int>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) os << ",";
    os << v[i];
  }
  return os.str();
}

std::vector<int> split_ints(const std::string& s) {
  std::vector<int> out;
  std::istringstream is(s);
  std::string item;
  while (std::getline(is, item, ',')) {
    if (!item.empty()) out.push_back(std::stoi(item));
  }
  return out;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

void Config::set(const std::string& section, const std::string& key, const std::string& value) {
  auto as_i = [&] { return std::stol(value); };
  auto as_d = [&] { return std::stod(value); };
  auto as_u64 = [&] { return std::stoull(value); };

  if (section == "frontend") {
    if (key == "sample_rate") frontend.sample_rate = static_cast<int>(as_i());
    else if (key == "bins") frontend.cqt.bins = static_cast<int>(as_i());
    else if (key == "bins_per_octave") frontend.cqt.bins_per_octave = static_cast<int>(as_i());
    else if (key == "fmin") frontend.cqt.fmin = as_d();
    else if (key == "hop") frontend.cqt.hop = static_cast<int>(as_i());
    else if (key == "gain") frontend.cqt.gain = as_d();
    else if (key == "compress") frontend.compress = static_cast<int>(as_i());
    else throw std::invalid_argument("unknown config key frontend." + key);
  } else if (section == "augment") {
    if (key == "crop_ratio_lo") augment.crop_ratio_lo = as_d();
    else if (key == "crop_ratio_hi") augment.crop_ratio_hi = as_d();
    else if (key == "freq_mask_n_lo") augment.freq_mask_n_lo = static_cast<int>(as_i());
    else if (key == "freq_mask_n_hi") augment.freq_mask_n_hi = static_cast<int>(as_i());
    else if (key == "freq_mask_len_lo") augment.freq_mask_len_lo = static_cast<int>(as_i());
    else if (key == "freq_mask_len_hi") augment.freq_mask_len_hi = static_cast<int>(as_i());
    else if (key == "freq_mask_total_cap_ratio") augment.freq_mask_total_cap_ratio = as_d();
    else if (key == "freq_mask_p") augment.freq_mask_p = as_d();
    else if (key == "time_mask_n_lo") augment.time_mask_n_lo = static_cast<int>(as_i());
    else if (key == "time_mask_n_hi") augment.time_mask_n_hi = static_cast<int>(as_i());
    else if (key == "time_mask_ratio_lo") augment.time_mask_ratio_lo = as_d();
    else if (key == "time_mask_ratio_hi") augment.time_mask_ratio_hi = as_d();
    else if (key == "time_mask_total_cap_ratio") augment.time_mask_total_cap_ratio = as_d();
    else if (key == "time_mask_p") augment.time_mask_p = as_d();
    else if (key == "time_warp_w_lo") augment.time_warp_w_lo = static_cast<int>(as_i());
    else if (key == "time_warp_w_hi") augment.time_warp_w_hi = static_cast<int>(as_i());
    else if (key == "time_warp_p") augment.time_warp_p = as_d();
    else if (key == "shift_step_lo") augment.shift_step_lo = static_cast<int>(as_i());
    else if (key == "shift_step_hi") augment.shift_step_hi = static_cast<int>(as_i());
    else if (key == "shift_p") augment.shift_p = as_d();
    else throw std::invalid_argument("unknown config key augment." + key);
  } else if (section == "model") {
    if (key == "input_size") model.swin.input_size = static_cast<int>(as_i());
    else if (key == "patch_size") model.swin.patch_size = static_cast<int>(as_i());
    else if (key == "embed_dim") model.swin.embed_dim = static_cast<int>(as_i());
    else if (key == "depths") model.swin.depths = split_ints(value);
    else if (key == "heads") model.swin.heads = split_ints(value);
    else if (key == "window") model.swin.window = static_cast<int>(as_i());
    else if (key == "mlp_ratio") model.swin.mlp_ratio = as_d();
    else if (key == "drop_path_max") model.swin.drop_path_max = as_d();
    else if (key == "preprocessor") model.preprocessor = value;
    else throw std::invalid_argument("unknown config key model." + key);
  } else if (section == "moco") {
    if (key == "queue_size") moco.queue_size = as_i();
    else if (key == "momentum") moco.momentum = as_d();
    else if (key == "temperature") moco.temperature = as_d();
    else if (key == "proj_hidden") moco.proj_hidden = static_cast<int>(as_i());
    else if (key == "proj_dim") moco.proj_dim = static_cast<int>(as_i());
    else if (key == "symmetric") moco.symmetric = as_i() != 0;
    else throw std::invalid_argument("unknown config key moco." + key);
  } else if (section == "train") {
    if (key == "epochs") train.epochs = as_i();
    else if (key == "warmup_epochs") train.warmup_epochs = as_i();
    else if (key == "base_lr") train.base_lr = as_d();
    else if (key == "weight_decay") train.weight_decay = as_d();
    else if (key == "batch_size") train.batch_size = static_cast<int>(as_i());
    else if (key == "seed") train.seed = as_u64();
    else if (key == "threads") train.threads = static_cast<int>(as_i());
    else if (key == "checkpoint_interval") train.checkpoint_interval = as_i();
    else throw std::invalid_argument("unknown config key train." + key);
  } else if (section == "eval") {
    if (key == "probe_lr") eval.probe_lr = as_d();
    else if (key == "probe_weight_decay") eval.probe_weight_decay = as_d();
    else if (key == "probe_epochs") eval.probe_epochs = as_i();
    else if (key == "probe_warmup_epochs") eval.probe_warmup_epochs = as_i();
    else if (key == "probe_batch") eval.probe_batch = static_cast<int>(as_i());
    else if (key == "chunk_frames") eval.chunk_frames = static_cast<int>(as_i());
    else throw std::invalid_argument("unknown config key eval." + key);
  } else {
    throw std::invalid_argument("unknown config section [" + section + "]");
  }
}

std::map<std::string, std::map<std::string, std::string>> Config::to_map() const {
  std::map<std::string, std::map<std::string, std::string>> m;
  auto& f = m["frontend"];
  f["sample_rate"] = std::to_string(frontend.sample_rate);
  f["bins"] = std::to_string(frontend.cqt.bins);
  f["bins_per_octave"] = std::to_string(frontend.cqt.bins_per_octave);
  f["fmin"] = fmt(frontend.cqt.fmin);
  f["hop"] = std::to_string(frontend.cqt.hop);
  f["gain"] = fmt(frontend.cqt.gain);
  f["compress"] = std::to_string(frontend.compress);

  auto& a = m["augment"];
  a["crop_ratio_lo"] = fmt(augment.crop_ratio_lo);
  a["crop_ratio_hi"] = fmt(augment.crop_ratio_hi);
  a["freq_mask_n_lo"] = std::to_string(augment.freq_mask_n_lo);
  a["freq_mask_n_hi"] = std::to_string(augment.freq_mask_n_hi);
  a["freq_mask_len_lo"] = std::to_string(augment.freq_mask_len_lo);
  a["freq_mask_len_hi"] = std::to_string(augment.freq_mask_len_hi);
  a["freq_mask_total_cap_ratio"] = fmt(augment.freq_mask_total_cap_ratio);
  a["freq_mask_p"] = fmt(augment.freq_mask_p);
  a["time_mask_n_lo"] = std::to_string(augment.time_mask_n_lo);
  a["time_mask_n_hi"] = std::to_string(augment.time_mask_n_hi);
  a["time_mask_ratio_lo"] = fmt(augment.time_mask_ratio_lo);
  a["time_mask_ratio_hi"] = fmt(augment.time_mask_ratio_hi);
  a["time_mask_total_cap_ratio"] = fmt(augment.time_mask_total_cap_ratio);
  a["time_mask_p"] = fmt(augment.time_mask_p);
  a["time_warp_w_lo"] = std::to_string(augment.time_warp_w_lo);
  a["time_warp_w_hi"] = std::to_string(augment.time_warp_w_hi);
  a["time_warp_p"] = fmt(augment.time_warp_p);
  a["shift_step_lo"] = std::to_string(augment.shift_step_lo);
  a["shift_step_hi"] = std::to_string(augment.shift_step_hi);
  a["shift_p"] = fmt(augment.shift_p);

  auto& mo = m["model"];
  mo["input_size"] = std::to_string(model.swin.input_size);
  mo["patch_size"] = std::to_string(model.swin.patch_size);
  mo["embed_dim"] = std::to_string(model.swin.embed_dim);
  mo["depths"] = join_ints(model.swin.depths);
  mo["heads"] = join_ints(model.swin.heads);
  mo["window"] = std::to_string(model.swin.window);
  mo["mlp_ratio"] = fmt(model.swin.mlp_ratio);
  mo["drop_path_max"] = fmt(model.swin.drop_path_max);
  mo["preprocessor"] = model.preprocessor;

  auto& q = m["moco"];
  q["queue_size"] = std::to_string(moco.queue_size);
  q["momentum"] = fmt(moco.momentum);
  q["temperature"] = fmt(moco.temperature);
  q["proj_hidden"] = std::to_string(moco.proj_hidden);
  q["proj_dim"] = std::to_string(moco.proj_dim);
  q["symmetric"] = moco.symmetric ? "1" : "0";

  auto& t = m["train"];
  t["epochs"] = std::to_string(train.epochs);
  t["warmup_epochs"] = std::to_string(train.warmup_epochs);
  t["base_lr"] = fmt(train.base_lr);
  t["weight_decay"] = fmt(train.weight_decay);
  t["batch_size"] = std::to_string(train.batch_size);
  t["seed"] = std::to_string(train.seed);
  t["threads"] = std::to_string(train.threads);
  t["checkpoint_interval"] = std::to_string(train.checkpoint_interval);

  auto& e = m["eval"];
  e["probe_lr"] = fmt(eval.probe_lr);
  e["probe_weight_decay"] = fmt(eval.probe_weight_decay);
  e["probe_epochs"] = std::to_string(eval.probe_epochs);
  e["probe_warmup_epochs"] = std::to_string(eval.probe_warmup_epochs);
  e["probe_batch"] = std::to_string(eval.probe_batch);
  e["chunk_frames"] = std::to_string(eval.chunk_frames);
  return m;
}

Config Config::from_map(const std::map<std::string, std::map<std::string, std::string>>& m) {
  Config c;
  for (const auto& [section, kv] : m) {
    for (const auto& [key, value] : kv) c.set(section, key, value);
  }
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  Config c;
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto ltrim = line.find_first_not_of(" \t\r");
    if (ltrim == std::string::npos) continue;
    auto rtrim = line.find_last_not_of(" \t\r");
    line = line.substr(ltrim, rtrim - ltrim + 1);
    if (line.front() == '[' && line.back() == ']') {
      section = line.substr(1, line.size() - 2);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("config parse error at line " + std::to_string(lineno));
    }
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    auto strip = [](std::string s) {
      const auto a = s.find_first_not_of(" \t");
      const auto b = s.find_last_not_of(" \t");
      return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
    };
    c.set(section, strip(key), strip(value));
  }
  return c;
}

void Config::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config file: " + path);
  for (const auto& [section, kv] : to_map()) {
    out << "[" << section << "]\n";
    for (const auto& [key, value] : kv) out << key << " = " << value << "\n";
    out << "\n";
  }
}

std::string Config::to_json() const {
  nlohmann::json j;
  for (const auto& [section, kv] : to_map()) {
    for (const auto& [key, value] : kv) j[section][key] = value;
  }
  return j.dump();
}

Config Config::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  std::map<std::string, std::map<std::string, std::string>> m;
  for (const auto& [section, kv] : j.items()) {
    for (const auto& [key, value] : kv.items()) m[section][key] = value.get<std::string>();
  }
  return from_map(m);
}

}  // namespace s3t
