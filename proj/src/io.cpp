#include "hawkes/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace hawkes {

namespace fs = std::filesystem;

// ---- small helpers ----------------------------------------------------------

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& v, const std::string& what) {
  try {
    std::size_t pos = 0;
    double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("expected a number for " + what + ", got '" + v + "'");
  }
}

long parse_long(const std::string& v, const std::string& what) {
  try {
    std::size_t pos = 0;
    long d = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("expected an integer for " + what + ", got '" + v + "'");
  }
}

bool parse_bool(const std::string& v, const std::string& what) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("expected a boolean for " + what + ", got '" + v + "'");
}

std::vector<double> parse_doubles(const std::string& v, const std::string& what) {
  std::vector<double> out;
  std::string token;
  std::istringstream ss(v);
  while (ss >> token) {
    if (!token.empty() && token.back() == ',') token.pop_back();
    if (token.empty()) continue;
    out.push_back(parse_double(token, what));
  }
  return out;
}

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

void ensure_dir(const std::string& path) {
  std::error_code ec;
  fs::create_directories(path, ec);
  if (ec) throw ConfigError("cannot create directory '" + path + "': " + ec.message());
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write file '" + path + "'");
  out << text;
}

std::string file_hash(const std::string& path) {
  std::string data = read_text_file(path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---- IniFile ----------------------------------------------------------------

IniFile IniFile::parse(const std::string& text, const std::string& origin) {
  IniFile ini;
  std::istringstream ss(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": malformed section header");
      section = trim(t.substr(1, t.size() - 2));
      if (section.empty())
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty section name");
      ini.sections.emplace_back(section, std::vector<std::pair<std::string, std::string>>{});
      continue;
    }
    std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty())
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    if (ini.sections.empty())
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": key before any [section]");
    for (const auto& [k, v] : ini.sections.back().second)
      if (k == key)
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
    ini.sections.back().second.emplace_back(key, value);
  }
  return ini;
}

IniFile IniFile::load(const std::string& path) { return parse(read_text_file(path), path); }

std::string IniFile::dump() const {
  std::ostringstream ss;
  for (const auto& [name, entries] : sections) {
    ss << "[" << name << "]\n";
    for (const auto& [k, v] : entries) ss << k << " = " << v << "\n";
    ss << "\n";
  }
  return ss.str();
}

void IniFile::save(const std::string& path) const { write_text_file(path, dump()); }

const std::vector<std::pair<std::string, std::string>>* IniFile::find_section(
    const std::string& section) const {
  for (const auto& [name, entries] : sections)
    if (name == section) return &entries;
  return nullptr;
}

bool IniFile::has(const std::string& section, const std::string& key) const {
  const auto* s = find_section(section);
  if (!s) return false;
  for (const auto& [k, v] : *s)
    if (k == key) return true;
  return false;
}

std::string IniFile::get(const std::string& section, const std::string& key) const {
  const auto* s = find_section(section);
  if (s)
    for (const auto& [k, v] : *s)
      if (k == key) return v;
  throw ConfigError("missing config key [" + section + "] " + key);
}

std::string IniFile::get_or(const std::string& section, const std::string& key,
                            const std::string& fallback) const {
  return has(section, key) ? get(section, key) : fallback;
}

void IniFile::set(const std::string& section, const std::string& key, const std::string& value) {
  for (auto& [name, entries] : sections)
    if (name == section) {
      for (auto& [k, v] : entries)
        if (k == key) {
          v = value;
          return;
        }
      entries.emplace_back(key, value);
      return;
    }
  sections.emplace_back(section,
                        std::vector<std::pair<std::string, std::string>>{{key, value}});
}

// ---- AppConfig ----------------------------------------------------------------

namespace {

const std::map<std::string, std::set<std::string>>& config_schema() {
  static const std::map<std::string, std::set<std::string>> schema = {
      {"config", {"version"}},
      {"params", {"mu", "alpha", "beta", "sigma_sq", "sigma_x_sq", "sigma_y_sq"}},
      {"background", {"preset", "centers", "sigma0", "x_min", "x_max", "y_min", "y_max"}},
      {"generator", {"mode", "horizon", "max_events", "complete_clusters"}},
      {"thinning", {"region_map", "uniform_rate", "apply_victimization", "horizon_ratio"}},
      {"simulate", {"n_streams"}},
      {"train",
       {"lambda_gp", "n_critic", "lr", "theta_lr", "batch_size", "hidden", "max_epochs",
        "min_epochs", "convergence_window", "convergence_tol", "convergence_patience", "free",
        "init_scales", "checkpoint_every"}},
      {"em", {"max_iters", "tol", "anisotropic", "spatial_cutoff_sigmas"}},
      {"gof", {"k_synthetic", "n_bins", "upper_quantile"}},
      {"eval", {"rows", "cols", "t_eval", "n_mc", "top_k", "mae_floor", "theta_hat"}},
      {"sweep", {"mu", "alpha", "beta", "sigma_sq", "estimator", "n_training_streams"}},
  };
  return schema;
}

}  // namespace

AppConfig AppConfig::from_ini(const IniFile& ini) {
  const auto& schema = config_schema();
  for (const auto& [name, entries] : ini.sections) {
    auto it = schema.find(name);
    if (it == schema.end()) throw ConfigError("unknown config section [" + name + "]");
    for (const auto& [k, v] : entries)
      if (!it->second.count(k))
        throw ConfigError("unknown config key [" + name + "] " + k);
  }
  long version = parse_long(ini.get("config", "version"), "[config] version");
  if (version != 1) throw ConfigError("unsupported config version " + std::to_string(version));

  AppConfig cfg;
  cfg.params.mu = parse_double(ini.get_or("params", "mu", "100"), "[params] mu");
  cfg.params.alpha = parse_double(ini.get_or("params", "alpha", "3"), "[params] alpha");
  cfg.params.beta = parse_double(ini.get_or("params", "beta", "0.2"), "[params] beta");
  cfg.params.sigma_sq =
      parse_double(ini.get_or("params", "sigma_sq", "0.01"), "[params] sigma_sq");
  if (ini.has("params", "sigma_x_sq"))
    cfg.params.sigma_x_sq = parse_double(ini.get("params", "sigma_x_sq"), "[params] sigma_x_sq");
  if (ini.has("params", "sigma_y_sq"))
    cfg.params.sigma_y_sq = parse_double(ini.get("params", "sigma_y_sq"), "[params] sigma_y_sq");

  std::string preset = ini.get_or("background", "preset", "default");
  if (preset == "default") {
    cfg.background = BackgroundConfig::default_config();
  } else if (preset == "custom") {
    cfg.background = BackgroundConfig();
  } else {
    throw ConfigError("[background] preset must be default or custom");
  }
  if (ini.has("background", "centers")) {
    std::vector<double> pts = parse_doubles(ini.get("background", "centers"), "centers");
    if (pts.size() % 2 != 0) throw ConfigError("[background] centers needs x y pairs");
    cfg.background.centers.clear();
    for (std::size_t i = 0; i + 1 < pts.size(); i += 2)
      cfg.background.centers.push_back({pts[i], pts[i + 1]});
  }
  if (ini.has("background", "sigma0"))
    cfg.background.sigma0 = parse_double(ini.get("background", "sigma0"), "sigma0");
  for (auto [key, field] : {std::pair{"x_min", &cfg.background.x_min},
                            std::pair{"x_max", &cfg.background.x_max},
                            std::pair{"y_min", &cfg.background.y_min},
                            std::pair{"y_max", &cfg.background.y_max}})
    if (ini.has("background", key)) *field = parse_double(ini.get("background", key), key);

  std::string mode = ini.get_or("generator", "mode", "count");
  if (mode == "horizon")
    cfg.generator.mode = GenConfig::Mode::HorizonLimited;
  else if (mode == "count")
    cfg.generator.mode = GenConfig::Mode::CountLimited;
  else
    throw ConfigError("[generator] mode must be horizon or count");
  cfg.generator.horizon =
      parse_double(ini.get_or("generator", "horizon", "1"), "[generator] horizon");
  cfg.generator.max_events = static_cast<int>(
      parse_long(ini.get_or("generator", "max_events", "250"), "[generator] max_events"));
  cfg.generator.complete_clusters = parse_bool(
      ini.get_or("generator", "complete_clusters", "false"), "[generator] complete_clusters");

  cfg.region_map_path = ini.get_or("thinning", "region_map", "");
  cfg.uniform_rate =
      parse_double(ini.get_or("thinning", "uniform_rate", "1"), "[thinning] uniform_rate");
  cfg.apply_victimization = parse_bool(ini.get_or("thinning", "apply_victimization", "false"),
                                       "[thinning] apply_victimization");
  cfg.horizon_ratio =
      parse_double(ini.get_or("thinning", "horizon_ratio", "1"), "[thinning] horizon_ratio");

  cfg.n_streams =
      static_cast<int>(parse_long(ini.get_or("simulate", "n_streams", "100"), "n_streams"));

  cfg.train.lambda_gp = parse_double(ini.get_or("train", "lambda_gp", "10"), "lambda_gp");
  cfg.train.n_critic =
      static_cast<int>(parse_long(ini.get_or("train", "n_critic", "5"), "n_critic"));
  cfg.train.lr = parse_double(ini.get_or("train", "lr", "0.0001"), "lr");
  cfg.train.theta_lr = parse_double(ini.get_or("train", "theta_lr", "0"), "theta_lr");
  cfg.train.batch_size =
      static_cast<int>(parse_long(ini.get_or("train", "batch_size", "256"), "batch_size"));
  cfg.train.hidden = static_cast<int>(parse_long(ini.get_or("train", "hidden", "64"), "hidden"));
  cfg.train.max_epochs =
      static_cast<int>(parse_long(ini.get_or("train", "max_epochs", "1000"), "max_epochs"));
  cfg.train.min_epochs =
      static_cast<int>(parse_long(ini.get_or("train", "min_epochs", "0"), "min_epochs"));
  cfg.train.convergence_window = static_cast<int>(
      parse_long(ini.get_or("train", "convergence_window", "50"), "convergence_window"));
  cfg.train.convergence_tol =
      parse_double(ini.get_or("train", "convergence_tol", "0.001"), "convergence_tol");
  cfg.train.convergence_patience = static_cast<int>(
      parse_long(ini.get_or("train", "convergence_patience", "3"), "convergence_patience"));
  cfg.train.checkpoint_every = static_cast<int>(
      parse_long(ini.get_or("train", "checkpoint_every", "0"), "checkpoint_every"));
  cfg.train.gen = cfg.generator;
  if (ini.has("train", "free")) {
    cfg.train.free_mask = {false, false, false, false};
    std::istringstream ss(ini.get("train", "free"));
    std::string tok;
    while (ss >> tok) {
      if (!tok.empty() && tok.back() == ',') tok.pop_back();
      if (tok == "mu")
        cfg.train.free_mask[0] = true;
      else if (tok == "alpha")
        cfg.train.free_mask[1] = true;
      else if (tok == "beta")
        cfg.train.free_mask[2] = true;
      else if (tok == "sigma_sq")
        cfg.train.free_mask[3] = true;
      else
        throw ConfigError("[train] free: unknown parameter '" + tok + "'");
    }
  }
  if (ini.has("train", "init_scales"))
    cfg.init_scales = parse_doubles(ini.get("train", "init_scales"), "init_scales");

  cfg.em.max_iters =
      static_cast<int>(parse_long(ini.get_or("em", "max_iters", "100"), "max_iters"));
  cfg.em.tol = parse_double(ini.get_or("em", "tol", "0.0001"), "tol");
  cfg.em.anisotropic =
      parse_bool(ini.get_or("em", "anisotropic", "false"), "anisotropic");
  cfg.em.spatial_cutoff_sigmas = parse_double(
      ini.get_or("em", "spatial_cutoff_sigmas", "8"), "spatial_cutoff_sigmas");

  cfg.gof_k_synthetic =
      static_cast<int>(parse_long(ini.get_or("gof", "k_synthetic", "1000"), "k_synthetic"));
  cfg.chi.n_bins = static_cast<int>(parse_long(ini.get_or("gof", "n_bins", "50"), "n_bins"));
  cfg.chi.upper_quantile =
      parse_double(ini.get_or("gof", "upper_quantile", "0.995"), "upper_quantile");

  cfg.grid.rows = static_cast<int>(parse_long(ini.get_or("eval", "rows", "7"), "rows"));
  cfg.grid.cols = static_cast<int>(parse_long(ini.get_or("eval", "cols", "16"), "cols"));
  cfg.grid.t_eval = parse_double(ini.get_or("eval", "t_eval", "7"), "t_eval");
  cfg.grid.n_mc = static_cast<int>(parse_long(ini.get_or("eval", "n_mc", "100"), "n_mc"));
  cfg.top_k = static_cast<int>(parse_long(ini.get_or("eval", "top_k", "10"), "top_k"));
  cfg.mae_floor = parse_double(ini.get_or("eval", "mae_floor", "0.001"), "mae_floor");
  if (ini.has("eval", "theta_hat")) {
    std::vector<double> th = parse_doubles(ini.get("eval", "theta_hat"), "theta_hat");
    if (th.size() != 4) throw ConfigError("[eval] theta_hat needs mu alpha beta sigma_sq");
    cfg.eval_theta_hat = ModelParams(th[0], th[1], th[2], th[3]);
    cfg.has_eval_theta_hat = true;
  }

  if (ini.has("sweep", "mu")) cfg.sweep_mu = parse_doubles(ini.get("sweep", "mu"), "sweep mu");
  if (ini.has("sweep", "alpha"))
    cfg.sweep_alpha = parse_doubles(ini.get("sweep", "alpha"), "sweep alpha");
  if (ini.has("sweep", "beta"))
    cfg.sweep_beta = parse_doubles(ini.get("sweep", "beta"), "sweep beta");
  if (ini.has("sweep", "sigma_sq"))
    cfg.sweep_sigma_sq = parse_doubles(ini.get("sweep", "sigma_sq"), "sweep sigma_sq");
  cfg.sweep_estimator = ini.get_or("sweep", "estimator", "bypass");
  if (cfg.sweep_estimator != "bypass" && cfg.sweep_estimator != "em" &&
      cfg.sweep_estimator != "wgan")
    throw ConfigError("[sweep] estimator must be bypass, em or wgan");
  cfg.sweep_training_streams = static_cast<int>(
      parse_long(ini.get_or("sweep", "n_training_streams", "50"), "n_training_streams"));

  cfg.params.validate();
  cfg.background.validate();
  cfg.generator.validate();
  return cfg;
}

AppConfig AppConfig::load(const std::string& path) { return from_ini(IniFile::load(path)); }

RegionMap AppConfig::load_region_map() const {
  if (region_map_path.empty()) return RegionMap::uniform(uniform_rate);
  return read_region_map(region_map_path);
}

// ---- streams -------------------------------------------------------------------

void write_streams(const std::string& path, const std::vector<EventStream>& streams,
                   bool with_retained) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << (with_retained ? "stream_id,t,x,y,retained\n" : "stream_id,t,x,y\n");
  for (std::size_t sid = 0; sid < streams.size(); ++sid) {
    const auto& s = streams[sid];
    for (std::size_t i = 0; i < s.events.size(); ++i) {
      out << sid << ',' << format_double(s.events[i].t) << ',' << format_double(s.events[i].x)
          << ',' << format_double(s.events[i].y);
      if (with_retained)
        out << ',' << (s.retained.empty() ? 1 : static_cast<int>(s.retained[i]));
      out << '\n';
    }
  }
}

std::vector<EventStream> read_streams(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open streams file '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  std::string header = trim(line);
  bool with_retained;
  if (header == "stream_id,t,x,y")
    with_retained = false;
  else if (header == "stream_id,t,x,y,retained")
    with_retained = true;
  else
    throw DataError(path + ": unexpected header '" + header + "'");

  std::vector<EventStream> streams;
  long prev_sid = -1;
  double prev_t = 0.0;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty()) continue;
    std::istringstream ss(t);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != (with_retained ? 5u : 4u))
      throw DataError(path + ":" + std::to_string(lineno) + ": wrong number of fields");
    long sid = parse_long(fields[0], "stream_id");
    double tv = parse_double(fields[1], "t");
    double xv = parse_double(fields[2], "x");
    double yv = parse_double(fields[3], "y");
    if (sid < prev_sid)
      throw DataError(path + ":" + std::to_string(lineno) + ": stream_id not sorted");
    if (sid == prev_sid && !(tv > prev_t))
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": rows not sorted by time within stream");
    while (static_cast<long>(streams.size()) <= sid) streams.emplace_back();
    Event ev{tv, xv, yv, -1};
    streams[static_cast<std::size_t>(sid)].events.push_back(ev);
    if (with_retained) {
      int r = static_cast<int>(parse_long(fields[4], "retained"));
      streams[static_cast<std::size_t>(sid)].retained.push_back(static_cast<std::uint8_t>(r));
    }
    prev_sid = sid;
    prev_t = tv;
  }
  return streams;
}

void write_stream_meta(const std::string& streams_path, const StreamMeta& meta) {
  IniFile ini;
  ini.set("meta", "count", std::to_string(meta.count));
  ini.set("meta", "seed", std::to_string(meta.seed));
  ini.set("meta", "horizon", format_double(meta.horizon));
  ini.set("meta", "truncation_count", std::to_string(meta.truncation_count));
  if (!meta.region_map_hash.empty()) ini.set("meta", "region_map_hash", meta.region_map_hash);
  if (meta.params) {
    ini.set("params", "mu", format_double(meta.params->mu));
    ini.set("params", "alpha", format_double(meta.params->alpha));
    ini.set("params", "beta", format_double(meta.params->beta));
    ini.set("params", "sigma_sq", format_double(meta.params->sigma_sq));
  }
  ini.save(streams_path + ".meta");
}

StreamMeta read_stream_meta(const std::string& streams_path) {
  IniFile ini = IniFile::load(streams_path + ".meta");
  StreamMeta meta;
  meta.count = static_cast<std::size_t>(parse_long(ini.get("meta", "count"), "count"));
  meta.seed = static_cast<std::uint64_t>(parse_long(ini.get("meta", "seed"), "seed"));
  meta.horizon = parse_double(ini.get("meta", "horizon"), "horizon");
  meta.truncation_count =
      static_cast<int>(parse_long(ini.get("meta", "truncation_count"), "truncation_count"));
  meta.region_map_hash = ini.get_or("meta", "region_map_hash", "");
  if (ini.has("params", "mu")) {
    ModelParams p;
    p.mu = parse_double(ini.get("params", "mu"), "mu");
    p.alpha = parse_double(ini.get("params", "alpha"), "alpha");
    p.beta = parse_double(ini.get("params", "beta"), "beta");
    p.sigma_sq = parse_double(ini.get("params", "sigma_sq"), "sigma_sq");
    meta.params = p;
  }
  return meta;
}

// ---- region maps ------------------------------------------------------------------

RegionMap read_region_map(const std::string& path) {
  IniFile ini = IniFile::load(path);
  RegionMap map;
  for (const auto& [name, entries] : ini.sections) {
    if (name == "map") {
      for (const auto& [k, v] : entries) {
        if (k == "default_rate")
          map.default_rate = parse_double(v, "default_rate");
        else
          throw ConfigError(path + ": unknown key [map] " + k);
      }
      continue;
    }
    if (name.rfind("region ", 0) != 0)
      throw ConfigError(path + ": unexpected section [" + name + "]");
    Region reg;
    reg.name = trim(name.substr(7));
    for (const auto& [k, v] : entries) {
      if (k == "rects") {
        std::vector<double> nums = parse_doubles(v, "rects");
        if (nums.empty() || nums.size() % 4 != 0)
          throw ConfigError(path + ": region '" + reg.name + "' rects need x0 y0 x1 y1 groups");
        for (std::size_t i = 0; i + 3 < nums.size(); i += 4)
          reg.rects.push_back({nums[i], nums[i + 1], nums[i + 2], nums[i + 3]});
      } else if (k == "q") {
        reg.reporting_rate = parse_double(v, "q");
      } else if (k == "p") {
        reg.retention_base = parse_double(v, "p");
      } else {
        throw ConfigError(path + ": unknown key '" + k + "' in region '" + reg.name + "'");
      }
    }
    map.regions.push_back(std::move(reg));
  }
  map.validate();
  return map;
}

void write_region_map(const std::string& path, const RegionMap& map) {
  IniFile ini;
  ini.set("map", "default_rate", format_double(map.default_rate));
  for (const auto& reg : map.regions) {
    std::string section = "region " + reg.name;
    std::string rects;
    for (const auto& r : reg.rects) {
      if (!rects.empty()) rects += "  ";
      rects += format_double(r.x0) + " " + format_double(r.y0) + " " + format_double(r.x1) +
               " " + format_double(r.y1);
    }
    ini.set(section, "rects", rects);
    ini.set(section, "q", format_double(reg.reporting_rate));
    if (reg.retention_base) ini.set(section, "p", format_double(*reg.retention_base));
  }
  ini.save(path);
}

// ---- checkpoints -------------------------------------------------------------------

namespace {

void write_matrix_block(std::ostream& out, const std::string& name, const Eigen::MatrixXd& m) {
  out << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (long r = 0; r < m.rows(); ++r) {
    for (long c = 0; c < m.cols(); ++c) {
      if (c) out << ' ';
      out << format_double(m(r, c));
    }
    out << '\n';
  }
}

Eigen::MatrixXd read_matrix_block(std::istream& in, const std::string& expect) {
  std::string name;
  long r, c;
  if (!(in >> name >> r >> c) || name != expect)
    throw DataError("checkpoint: expected matrix '" + expect + "'");
  Eigen::MatrixXd m(r, c);
  for (long i = 0; i < r; ++i)
    for (long j = 0; j < c; ++j)
      if (!(in >> m(i, j))) throw DataError("checkpoint: truncated matrix '" + expect + "'");
  return m;
}

const char* kGateNames[4] = {"i", "f", "g", "o"};

}  // namespace

void write_critic(const std::string& path, const CriticParams& w) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << "hawkes-critic-v1\nhidden " << w.hidden << '\n';
  for (int g = 0; g < 4; ++g) {
    write_matrix_block(out, std::string("w_t_") + kGateNames[g], w.w_t[g]);
    write_matrix_block(out, std::string("w_x_") + kGateNames[g], w.w_x[g]);
    write_matrix_block(out, std::string("w_y_") + kGateNames[g], w.w_y[g]);
    write_matrix_block(out, std::string("w_h_") + kGateNames[g], w.w_h[g]);
    write_matrix_block(out, std::string("b_") + kGateNames[g], w.b[g]);
  }
  write_matrix_block(out, "w_out", w.w_out);
  write_matrix_block(out, "b_out", w.b_out);
}

CriticParams read_critic(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::string magic;
  in >> magic;
  if (magic != "hawkes-critic-v1") throw DataError(path + ": not a critic checkpoint");
  std::string key;
  int hidden;
  if (!(in >> key >> hidden) || key != "hidden") throw DataError(path + ": missing hidden size");
  CriticParams w = CriticParams::zeros(hidden);
  for (int g = 0; g < 4; ++g) {
    w.w_t[g] = read_matrix_block(in, std::string("w_t_") + kGateNames[g]);
    w.w_x[g] = read_matrix_block(in, std::string("w_x_") + kGateNames[g]);
    w.w_y[g] = read_matrix_block(in, std::string("w_y_") + kGateNames[g]);
    w.w_h[g] = read_matrix_block(in, std::string("w_h_") + kGateNames[g]);
    w.b[g] = read_matrix_block(in, std::string("b_") + kGateNames[g]);
  }
  w.w_out = read_matrix_block(in, "w_out");
  w.b_out = read_matrix_block(in, "b_out");
  w.validate();
  return w;
}

namespace {

void write_vector_block(std::ostream& out, const std::string& name, const Eigen::VectorXd& v) {
  out << name << ' ' << v.size();
  for (long i = 0; i < v.size(); ++i) out << ' ' << format_double(v(i));
  out << '\n';
}

Eigen::VectorXd read_vector_block(std::istream& in, const std::string& expect) {
  std::string name;
  long n;
  if (!(in >> name >> n) || name != expect)
    throw DataError("checkpoint: expected vector '" + expect + "'");
  Eigen::VectorXd v(n);
  for (long i = 0; i < n; ++i)
    if (!(in >> v(i))) throw DataError("checkpoint: truncated vector '" + expect + "'");
  return v;
}

}  // namespace

void write_train_state(const std::string& path, const TrainState& state) {
  std::ostringstream out;
  out << "hawkes-train-state-v1\n";
  out << "epoch " << state.epoch << '\n';
  out << "log_theta";
  for (double v : state.log_theta) out << ' ' << format_double(v);
  out << '\n';
  const TrainRun& run = state.partial;
  out << "seed " << run.seed << '\n';
  out << "theta_init " << format_double(run.theta_init.mu) << ' '
      << format_double(run.theta_init.alpha) << ' ' << format_double(run.theta_init.beta) << ' '
      << format_double(run.theta_init.sigma_sq) << '\n';
  out << "critic_steps " << run.critic_steps << '\n';
  out << "generator_steps " << run.generator_steps << '\n';
  out << "history " << run.history.size() << '\n';
  for (const auto& h : run.history)
    out << format_double(h.critic_loss) << ' ' << format_double(h.wasserstein) << ' '
        << format_double(h.gen_objective) << ' ' << format_double(h.theta.mu) << ' '
        << format_double(h.theta.alpha) << ' ' << format_double(h.theta.beta) << ' '
        << format_double(h.theta.sigma_sq) << '\n';
  write_vector_block(out, "adam_w_m", state.opt_w.m);
  write_vector_block(out, "adam_w_v", state.opt_w.v);
  out << "adam_w_t " << state.opt_w.t << '\n';
  write_vector_block(out, "adam_theta_m", state.opt_theta.m);
  write_vector_block(out, "adam_theta_v", state.opt_theta.v);
  out << "adam_theta_t " << state.opt_theta.t << '\n';
  write_text_file(path, out.str());
  write_critic(path + ".critic", state.critic);
}

TrainState read_train_state(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::string magic;
  in >> magic;
  if (magic != "hawkes-train-state-v1") throw DataError(path + ": not a train state");
  TrainState st;
  std::string key;
  auto expect = [&](const char* want) {
    if (!(in >> key) || key != want) throw DataError(path + ": expected '" + want + "'");
  };
  expect("epoch");
  in >> st.epoch;
  expect("log_theta");
  for (double& v : st.log_theta) in >> v;
  expect("seed");
  in >> st.partial.seed;
  expect("theta_init");
  in >> st.partial.theta_init.mu >> st.partial.theta_init.alpha >> st.partial.theta_init.beta >>
      st.partial.theta_init.sigma_sq;
  expect("critic_steps");
  in >> st.partial.critic_steps;
  expect("generator_steps");
  in >> st.partial.generator_steps;
  expect("history");
  std::size_t n;
  in >> n;
  st.partial.history.resize(n);
  for (auto& h : st.partial.history) {
    in >> h.critic_loss >> h.wasserstein >> h.gen_objective >> h.theta.mu >> h.theta.alpha >>
        h.theta.beta >> h.theta.sigma_sq;
  }
  if (!in) throw DataError(path + ": truncated history");
  st.opt_w.m = read_vector_block(in, "adam_w_m");
  st.opt_w.v = read_vector_block(in, "adam_w_v");
  expect("adam_w_t");
  in >> st.opt_w.t;
  st.opt_theta.m = read_vector_block(in, "adam_theta_m");
  st.opt_theta.v = read_vector_block(in, "adam_theta_v");
  expect("adam_theta_t");
  in >> st.opt_theta.t;
  if (!in) throw DataError(path + ": truncated state");
  st.critic = read_critic(path + ".critic");
  return st;
}

void write_train_run(const std::string& dir, const TrainRun& run) {
  ensure_dir(dir);
  IniFile ini;
  ini.set("run", "seed", std::to_string(run.seed));
  ini.set("run", "status", run.status);
  ini.set("run", "epochs", std::to_string(run.history.size()));
  ini.set("run", "best_epoch", std::to_string(run.best_epoch));
  ini.set("run", "critic_steps", std::to_string(run.critic_steps));
  ini.set("run", "generator_steps", std::to_string(run.generator_steps));
  ini.set("run", "wall_time_s", format_double(run.wall_time_s));
  ini.set("theta_init", "mu", format_double(run.theta_init.mu));
  ini.set("theta_init", "alpha", format_double(run.theta_init.alpha));
  ini.set("theta_init", "beta", format_double(run.theta_init.beta));
  ini.set("theta_init", "sigma_sq", format_double(run.theta_init.sigma_sq));
  ini.set("theta_hat", "mu", format_double(run.theta_hat.mu));
  ini.set("theta_hat", "alpha", format_double(run.theta_hat.alpha));
  ini.set("theta_hat", "beta", format_double(run.theta_hat.beta));
  ini.set("theta_hat", "sigma_sq", format_double(run.theta_hat.sigma_sq));
  ini.save(dir + "/record.ini");

  std::ofstream out(dir + "/loss_history.csv", std::ios::binary);
  out << "epoch,critic_loss,wasserstein,gen_objective,mu,alpha,beta,sigma_sq\n";
  for (std::size_t e = 0; e < run.history.size(); ++e) {
    const auto& h = run.history[e];
    out << e << ',' << format_double(h.critic_loss) << ',' << format_double(h.wasserstein)
        << ',' << format_double(h.gen_objective) << ',' << format_double(h.theta.mu) << ','
        << format_double(h.theta.alpha) << ',' << format_double(h.theta.beta) << ','
        << format_double(h.theta.sigma_sq) << '\n';
  }
  write_critic(dir + "/critic.ckpt", run.critic);
}

// ---- manifests ------------------------------------------------------------------------

void write_manifest(const std::string& dir, const RunManifest& manifest,
                    const std::string& config_text) {
  ensure_dir(dir);
  IniFile ini;
  ini.set("manifest", "command", manifest.command);
  ini.set("manifest", "seed", std::to_string(manifest.seed));
  ini.set("manifest", "code_version", kCodeVersion);
  ini.set("manifest", "wall_time_s", format_double(manifest.wall_time_s));
  for (std::size_t i = 0; i < manifest.inputs.size(); ++i)
    ini.set("inputs", "in" + std::to_string(i), manifest.inputs[i]);
  for (std::size_t i = 0; i < manifest.outputs.size(); ++i)
    ini.set("outputs", "out" + std::to_string(i), manifest.outputs[i]);
  ini.save(dir + "/manifest.ini");
  if (!config_text.empty()) write_text_file(dir + "/config_snapshot.ini", config_text);
}

// ---- plot data --------------------------------------------------------------------------

void write_matrix_csv(const std::string& path, int rows, int cols,
                      const std::vector<double>& values) {
  if (values.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols))
    throw DataError("write_matrix_csv: size mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (c) out << ',';
      out << format_double(values[static_cast<std::size_t>(r * cols + c)]);
    }
    out << '\n';
  }
}

std::vector<double> read_matrix_csv(const std::string& path, int* rows, int* cols) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::vector<double> values;
  std::string line;
  int r = 0, c = -1;
  while (std::getline(in, line)) {
    std::string t = trim(line);
    if (t.empty()) continue;
    std::istringstream ss(t);
    std::string field;
    int this_c = 0;
    while (std::getline(ss, field, ',')) {
      values.push_back(parse_double(trim(field), "matrix entry"));
      ++this_c;
    }
    if (c >= 0 && this_c != c) throw DataError(path + ": ragged matrix");
    c = this_c;
    ++r;
  }
  *rows = r;
  *cols = std::max(c, 0);
  return values;
}

namespace {

// Compact perceptual-ish ramp, dark blue to yellow.
void colormap(double v, unsigned char* rgb) {
  static const double stops[5][3] = {{0.267, 0.005, 0.329},
                                     {0.229, 0.322, 0.546},
                                     {0.127, 0.566, 0.551},
                                     {0.369, 0.789, 0.383},
                                     {0.993, 0.906, 0.144}};
  v = std::clamp(v, 0.0, 1.0) * 4.0;
  int lo = std::min(3, static_cast<int>(v));
  double f = v - lo;
  for (int k = 0; k < 3; ++k) {
    double x = stops[lo][k] * (1.0 - f) + stops[lo + 1][k] * f;
    rgb[k] = static_cast<unsigned char>(std::lround(255.0 * x));
  }
}

}  // namespace

void write_heatmap_ppm(const std::string& path, int rows, int cols,
                       const std::vector<double>& values, int pixel_scale) {
  if (values.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols))
    throw DataError("write_heatmap_ppm: size mismatch");
  double lo = values.empty() ? 0.0 : *std::min_element(values.begin(), values.end());
  double hi = values.empty() ? 1.0 : *std::max_element(values.begin(), values.end());
  double span = hi > lo ? hi - lo : 1.0;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  int w = cols * pixel_scale, h = rows * pixel_scale;
  out << "P6\n" << w << ' ' << h << "\n255\n";
  std::string row_buf;
  for (int py = 0; py < h; ++py) {
    row_buf.clear();
    // Row 0 of the matrix renders at the bottom, map-style.
    int r = rows - 1 - py / pixel_scale;
    for (int px = 0; px < w; ++px) {
      int c = px / pixel_scale;
      unsigned char rgb[3];
      colormap((values[static_cast<std::size_t>(r * cols + c)] - lo) / span, rgb);
      row_buf.append(reinterpret_cast<char*>(rgb), 3);
    }
    out.write(row_buf.data(), static_cast<std::streamsize>(row_buf.size()));
  }
}

void write_qq_csv(const std::string& path, const QqData& qq) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << "theoretical,empirical\n";
  for (std::size_t i = 0; i < qq.theoretical.size(); ++i)
    out << format_double(qq.theoretical[i]) << ',' << format_double(qq.empirical[i]) << '\n';
}

void write_gof_histogram_csv(const std::string& path, const GofHistogram& hist) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << "bin_lo,bin_hi,f_training,f_synthetic\n";
  for (std::size_t b = 0; b < hist.f_training.size(); ++b)
    out << format_double(hist.edges[b]) << ',' << format_double(hist.edges[b + 1]) << ','
        << format_double(hist.f_training[b]) << ',' << format_double(hist.f_synthetic[b]) << '\n';
}

void write_grid_summary(const std::string& dir, const std::string& name,
                        const GridSummary& grid) {
  ensure_dir(dir);
  write_matrix_csv(dir + "/" + name + ".csv", grid.rows, grid.cols, grid.mean_counts);
  write_matrix_csv(dir + "/" + name + "_stderr.csv", grid.rows, grid.cols, grid.std_errors);
  write_heatmap_ppm(dir + "/" + name + ".ppm", grid.rows, grid.cols, grid.mean_counts);
  std::ofstream out(dir + "/" + name + "_hotspots.csv", std::ios::binary);
  out << "row,col\n";
  for (const auto& cell : grid.hotspots) out << cell.row << ',' << cell.col << '\n';
}

}  // namespace hawkes
