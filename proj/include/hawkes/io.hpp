#ifndef HAWKES_IO_HPP
#define HAWKES_IO_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hawkes/em.hpp"
#include "hawkes/gof.hpp"
#include "hawkes/hotspot.hpp"
#include "hawkes/wgan.hpp"

namespace hawkes {

inline constexpr const char* kCodeVersion = "hawkes-0.1.0";

// ---- structured text (sectioned key-value) --------------------------------

struct IniFile {
  // Section -> ordered key/value pairs.  Duplicate keys are rejected.
  std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>> sections;

  static IniFile parse(const std::string& text, const std::string& origin = "<string>");
  static IniFile load(const std::string& path);
  std::string dump() const;
  void save(const std::string& path) const;

  bool has(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key) const;
  std::string get_or(const std::string& section, const std::string& key,
                     const std::string& fallback) const;
  void set(const std::string& section, const std::string& key, const std::string& value);
  const std::vector<std::pair<std::string, std::string>>* find_section(
      const std::string& section) const;
};

double parse_double(const std::string& v, const std::string& what);
long parse_long(const std::string& v, const std::string& what);
bool parse_bool(const std::string& v, const std::string& what);
std::vector<double> parse_doubles(const std::string& v, const std::string& what);
std::string format_double(double v);  // 17 significant digits, exact round-trip

// ---- pipeline configuration ------------------------------------------------

/// Parsed, schema-checked CLI configuration.  Unknown sections or keys are
/// hard errors; the schema is versioned through [config] version.
struct AppConfig {
  ModelParams params;
  BackgroundConfig background;
  GenConfig generator;

  std::string region_map_path;  // empty = uniform
  double uniform_rate = 1.0;
  bool apply_victimization = false;
  double horizon_ratio = 1.0;

  int n_streams = 100;

  TrainConfig train;
  std::vector<double> init_scales{0.5, 1.0, 2.0};

  EmConfig em;

  int gof_k_synthetic = 1000;
  ChiSquareConfig chi;

  EvalGrid grid;
  int top_k = 10;
  double mae_floor = 1e-3;
  ModelParams eval_theta_hat;  // [eval] theta_hat, for estimator-bypass runs
  bool has_eval_theta_hat = false;

  std::vector<double> sweep_mu{100.0};
  std::vector<double> sweep_alpha{3.0};
  std::vector<double> sweep_beta{0.2};
  std::vector<double> sweep_sigma_sq{0.01};
  std::string sweep_estimator = "bypass";  // bypass | em | wgan
  int sweep_training_streams = 50;

  static AppConfig from_ini(const IniFile& ini);
  static AppConfig load(const std::string& path);

  RegionMap load_region_map() const;
};

// ---- event stream files ----------------------------------------------------

/// CSV with header stream_id,t,x,y[,retained], rows sorted by (stream_id, t),
/// floats at 17 significant digits.
void write_streams(const std::string& path, const std::vector<EventStream>& streams,
                   bool with_retained = false);
std::vector<EventStream> read_streams(const std::string& path);

struct StreamMeta {
  std::size_t count = 0;
  std::uint64_t seed = 0;
  double horizon = 0.0;
  int truncation_count = 0;  // 0 = none
  std::string region_map_hash;
  std::optional<ModelParams> params;
};
void write_stream_meta(const std::string& streams_path, const StreamMeta& meta);
StreamMeta read_stream_meta(const std::string& streams_path);

/// FNV-1a hash of a file's bytes, hex-encoded.
std::string file_hash(const std::string& path);

// ---- region maps -----------------------------------------------------------

RegionMap read_region_map(const std::string& path);
void write_region_map(const std::string& path, const RegionMap& map);

// ---- checkpoints and run records --------------------------------------------

void write_critic(const std::string& path, const CriticParams& w);
CriticParams read_critic(const std::string& path);

void write_train_state(const std::string& path, const TrainState& state);
TrainState read_train_state(const std::string& path);

/// record.ini plus loss_history.csv under dir.
void write_train_run(const std::string& dir, const TrainRun& run);

// ---- manifests ---------------------------------------------------------------

struct RunManifest {
  std::string command;
  std::uint64_t seed = 0;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  double wall_time_s = 0.0;
};
/// Writes manifest.ini (plus config_snapshot.ini when config text given).
void write_manifest(const std::string& dir, const RunManifest& manifest,
                    const std::string& config_text = "");

// ---- plot emission -----------------------------------------------------------

/// Row-major matrix as CSV (the machine-readable twin of every heatmap).
void write_matrix_csv(const std::string& path, int rows, int cols,
                      const std::vector<double>& values);
std::vector<double> read_matrix_csv(const std::string& path, int* rows, int* cols);

/// PPM heatmap image of a row-major matrix.
void write_heatmap_ppm(const std::string& path, int rows, int cols,
                       const std::vector<double>& values, int pixel_scale = 24);

void write_qq_csv(const std::string& path, const QqData& qq);
void write_gof_histogram_csv(const std::string& path, const GofHistogram& hist);
void write_grid_summary(const std::string& dir, const std::string& name,
                        const GridSummary& grid);

// ---- misc -------------------------------------------------------------------

void ensure_dir(const std::string& path);
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace hawkes

#endif
