#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <map>
#include <regex>

#include "gangtrack/io.hpp"
#include "gangtrack/predict_eval.hpp"

namespace gangtrack::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// A command failed with a specific exit code.
struct Exit {
  int code;
  std::string message;
};

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

fs::path path_or_empty(const json& j, const char* key, const fs::path& base) {
  const auto s = get_or<std::string>(j, key, "");
  if (s.empty()) return {};
  const fs::path p(s);
  return p.is_absolute() ? p : base / p;
}

LikelihoodVariant parse_variant(const std::string& s) {
  if (s == "full") return LikelihoodVariant::full;
  if (s == "partial") return LikelihoodVariant::partial;
  throw ConfigError("unknown likelihood variant '" + s + "' (expected full or partial)");
}

const char* variant_name(LikelihoodVariant v) { return v == LikelihoodVariant::full ? "full" : "partial"; }

std::ifstream open_in(const fs::path& p, const char* what) {
  std::ifstream in(p);
  if (!in) throw ConfigError(std::string("cannot read ") + what + " file " + p.string());
  return in;
}

std::ofstream open_out(const fs::path& p) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

json config_json(const RunConfig& cfg) {
  json j;
  j["seed"] = cfg.seed;
  j["pf"] = {{"particles", cfg.pf.particles},
             {"theta_min", cfg.pf.box.theta_min},
             {"theta_max", cfg.pf.box.theta_max},
             {"h_min", cfg.pf.box.h_min},
             {"h_max", cfg.pf.box.h_max},
             {"smoothing", cfg.pf.smoothing},
             {"credible_mass", cfg.pf.credible_mass},
             {"variant", variant_name(cfg.pf.variant)},
             {"use_expert_prior", cfg.pf.use_expert_prior},
             {"min_history", cfg.min_history}};
  j["simulation"] = {{"n", cfg.sim.n},
                     {"theta", cfg.sim.theta_true},
                     {"h", cfg.sim.h_true},
                     {"missing_frac", cfg.sim.missing_frac},
                     {"center", {cfg.sim.center.lon, cfg.sim.center.lat}},
                     {"spread_km", cfg.sim.spread_km},
                     {"gang_id", cfg.sim.gang_id},
                     {"first_day", cfg.sim.first_day}};
  return j;
}

struct Inputs {
  std::vector<Track> tracks;
  std::optional<Grid> grid;
  std::optional<ForestRaster> forest;
  CampSet camps;
  std::vector<IntelRecord> intel;
};

Inputs load_inputs(const RunConfig& cfg, bool need_grid) {
  Inputs in;
  if (cfg.observations.empty()) throw ConfigError("config lacks 'observations'");
  {
    auto f = open_in(cfg.observations, "observations");
    try {
      in.tracks = read_observations(f);
    } catch (const FormatError& e) {
      throw ConfigError(cfg.observations.string() + ": " + e.what());
    }
  }
  if (cfg.bbox) in.grid = Grid::covering(*cfg.bbox, cfg.cell_km, cfg.scale());
  if (need_grid && !in.grid) throw ConfigError("config lacks 'grid.bbox'");
  try {
    if (!cfg.forest.empty()) {
      if (!in.grid) throw ConfigError("a forest raster needs 'grid.bbox'");
      auto f = open_in(cfg.forest, "forest");
      in.forest = read_forest(f, *in.grid);
    }
    if (!cfg.camps.empty()) {
      auto f = open_in(cfg.camps, "camps");
      in.camps = read_camps(f);
    }
    if (!cfg.intel.empty()) {
      auto f = open_in(cfg.intel, "intel");
      in.intel = read_intel(f);
    }
  } catch (const FormatError& e) {
    throw ConfigError(e.what());
  } catch (const InvalidParameter& e) {
    throw ConfigError(e.what());
  }
  if (in.grid) {
    for (const auto& t : in.tracks) {
      for (const auto& [day, p] : t.observations) {
        if (!in.grid->cell_of(p)) {
          throw ConfigError("observation of " + t.gang_id + " on day " + std::to_string(day) + " lies outside the grid");
        }
      }
    }
  }
  return in;
}

PriorProvider make_prior_provider(const RunConfig& cfg, const Inputs& in) {
  if (!in.forest || !in.grid) return {};
  return [&cfg, &in](const Track& track, int day) -> std::optional<DailyPrior> {
    const auto recent = track.recent_before(day, cfg.prior.k0);
    if (recent.empty()) return std::nullopt;
    const auto intel = intel_for(in.intel, track.gang_id);
    DailyPrior dp{build_expert_prior(*in.grid, *in.forest, in.camps, recent, intel, day, cfg.prior), 0.0};
    dp.p_n = cfg.force_pn ? *cfg.force_pn : prior_credibility(dp.prior.intel_fresh, cfg.prior);
    return dp;
  };
}

void require_history(const RunConfig& cfg, const std::vector<Track>& tracks) {
  const bool enough = std::any_of(tracks.begin(), tracks.end(), [&](const Track& t) {
    return static_cast<int>(t.observations.size()) >= cfg.min_history;
  });
  if (!enough) {
    throw Exit{kTooFewObservations, "every gang has fewer than " + std::to_string(cfg.min_history) + " observations"};
  }
}

fs::path snapshot_dir(const RunConfig& cfg) { return cfg.output_dir / "snapshots"; }

fs::path snapshot_path(const RunConfig& cfg, int day) {
  return snapshot_dir(cfg) / ("day_" + std::to_string(day) + ".csv");
}

// Writes the resumable state after every update; a later update on the same
// day overwrites the file, so each file holds the state at the end of its day.
class SnapshotWriter : public SequentialObserver {
 public:
  SnapshotWriter(const RunConfig& cfg, std::int64_t updates) : cfg_(cfg), updates_(updates) {}

  void after_stage(Stage s, const ParticleSet& ps) override {
    if (s != Stage::compressed) return;
    ++updates_;
    SequentialState state{ps, true, updates_, ps.day};
    auto out = open_out(snapshot_path(cfg_, ps.day));
    write_snapshot(out, state);
  }

 private:
  const RunConfig& cfg_;
  std::int64_t updates_;
};

int cmd_simulate(const RunConfig& cfg, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  const Track full = simulate_track(cfg.sim);
  const Track masked = mask_track(full, cfg.sim.missing_frac, derive_seed(cfg.sim.seed, 0, 7));
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  fs::create_directories(cfg.output_dir);
  {
    auto f = open_out(cfg.output_dir / "sim_full.csv");
    write_observations(f, {full});
  }
  {
    auto f = open_out(cfg.output_dir / "sim_masked.csv");
    write_observations(f, {masked});
  }
  json manifest;
  manifest["config"] = config_json(cfg);
  manifest["seed"] = cfg.sim.seed;
  manifest["days"] = full.observations.size();
  manifest["observed_days"] = masked.observations.size();
  manifest["files"] = {"sim_full.csv", "sim_masked.csv"};
  manifest["wall_seconds"] = wall;
  auto f = open_out(cfg.output_dir / "sim_manifest.json");
  f << manifest.dump(2) << '\n';
  out << "simulated " << full.observations.size() << " days, " << masked.observations.size() << " kept\n";
  return kOk;
}

int cmd_study(const RunConfig& cfg, std::ostream& out) {
  std::vector<std::uint64_t> seeds = cfg.study_seeds;
  if (seeds.empty()) {
    for (std::uint64_t s = 1; s <= 10; ++s) seeds.push_back(s);
  }
  const LikelihoodVariant variants[] = {LikelihoodVariant::full, LikelihoodVariant::partial};
  PfConfig pf = cfg.pf;
  pf.use_expert_prior = false;
  json manifest;
  manifest["config"] = config_json(cfg);
  manifest["seeds"] = seeds;
  std::map<std::string, int> covered;
  double total = 0.0;
  for (const auto seed : seeds) {
    SimConfig sim = cfg.sim;
    sim.seed = seed;
    const auto result = run_study(sim, variants, pf);
    total += result.wall_seconds;
    json entry{{"seed", seed}, {"wall_seconds", result.wall_seconds}};
    for (const auto& series : result.series) {
      const std::string name = variant_name(series.variant);
      auto f = open_out(cfg.output_dir / "study" / ("seed_" + std::to_string(seed) + "_" + name + ".csv"));
      write_study_series(f, series);
      const bool hit = !series.updates.empty() && covers(series.updates.back(), sim.theta_true, sim.h_true);
      covered[name] += hit ? 1 : 0;
      entry[name + "_covers_truth"] = hit;
    }
    manifest["runs"].push_back(entry);
    out << "seed " << seed << " done in " << result.wall_seconds << " s\n";
  }
  manifest["covered"] = covered;
  manifest["wall_seconds"] = total;
  auto f = open_out(cfg.output_dir / "study_manifest.json");
  f << manifest.dump(2) << '\n';
  out << "final CI covers the truth: full " << covered["full"] << '/' << seeds.size() << ", partial "
      << covered["partial"] << '/' << seeds.size() << '\n';
  return kOk;
}

int cmd_fit(const RunConfig& cfg, const std::string& resume, std::optional<int> until, std::ostream& out) {
  Inputs in = load_inputs(cfg, false);
  require_history(cfg, in.tracks);
  if (until) {
    for (auto& t : in.tracks) std::erase_if(t.observations, [&](const auto& kv) { return kv.first > *until; });
  }
  std::optional<SequentialState> state;
  if (!resume.empty()) {
    std::ifstream f(resume);
    if (!f) throw Exit{kMissingInput, "snapshot not found: " + resume};
    try {
      state = read_snapshot(f);
    } catch (const FormatError& e) {
      throw ConfigError(resume + ": " + e.what());
    }
  }
  const auto priors = make_prior_provider(cfg, in);
  SnapshotWriter writer(cfg, state ? state->updates : 0);
  const auto result = run_sequential(in.tracks, priors, cfg.pf, cfg.scale(), cfg.seed, &writer,
                                     state ? &*state : nullptr, cfg.min_history);
  {
    auto f = open_out(cfg.output_dir / "summaries.csv");
    write_summaries(f, result.summaries);
  }
  auto f = open_out(cfg.output_dir / "snapshot_final.csv");
  write_snapshot(f, result.state);
  out << result.summaries.size() << " updates";
  if (!result.summaries.empty()) {
    const auto& s = result.summaries.back();
    out << "; theta " << s.theta.mean << " [" << s.theta.lo << ", " << s.theta.hi << "], h " << s.h.mean << " ["
        << s.h.lo << ", " << s.h.hi << "]";
  }
  out << '\n';
  return kOk;
}

// Latest per-day snapshot strictly before `day`.
std::optional<fs::path> snapshot_before(const RunConfig& cfg, int day) {
  const auto dir = snapshot_dir(cfg);
  if (!fs::is_directory(dir)) return std::nullopt;
  static const std::regex name("day_(-?[0-9]+)\\.csv");
  std::optional<std::pair<int, fs::path>> best;
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::smatch m;
    const auto file = entry.path().filename().string();
    if (!std::regex_match(file, m, name)) continue;
    const int d = std::stoi(m[1]);
    if (d < day && (!best || d > best->first)) best = {d, entry.path()};
  }
  if (!best) return std::nullopt;
  return best->second;
}

int cmd_predict(const RunConfig& cfg, int day, const std::string& gang, std::ostream& out) {
  const Inputs in = load_inputs(cfg, true);
  const auto it = std::find_if(in.tracks.begin(), in.tracks.end(), [&](const Track& t) { return t.gang_id == gang; });
  if (it == in.tracks.end()) throw Exit{kMissingInput, "unknown gang '" + gang + "'"};
  const Track& track = *it;
  if (track.count_before(day) == 0) throw Exit{kTooFewObservations, "gang " + gang + " has no sighting before day " + std::to_string(day)};
  const auto snap = snapshot_before(cfg, day);
  if (!snap) throw Exit{kMissingInput, "no fitted snapshot before day " + std::to_string(day) + "; run fit first"};
  std::ifstream sf(*snap);
  const SequentialState state = read_snapshot(sf);
  if (cfg.force_pn && !in.forest) throw ConfigError("--force-pn needs a forest raster to build the expert map");

  std::optional<DailyPrior> prior;
  if (const auto provider = make_prior_provider(cfg, in)) prior = provider(track, day);
  const double p_n = prior ? prior->p_n : 0.0;
  const auto pd = predictive_density(state.particles, track, day, prior ? &prior->prior : nullptr, p_n, *in.grid,
                                     cfg.pf.variant);

  const std::string stem = "predict_" + gang + "_day" + std::to_string(day);
  {
    auto f = open_out(cfg.output_dir / (stem + "_density.csv"));
    write_density(f, *in.grid, pd.values);
  }
  {
    const auto actual = track.at(day);
    auto f = open_out(cfg.output_dir / (stem + ".svg"));
    write_svg_heatmap(f, pd, actual ? &*actual : nullptr);
  }
  if (prior) {
    auto f = open_out(cfg.output_dir / (stem + "_prior.csv"));
    write_density(f, *in.grid, prior->prior.density);
  }
  out << "predicted day " << day << " for " << gang << " from " << snap->filename().string() << " (p_n " << p_n
      << ")\n";
  if (const auto actual = track.at(day)) out << "RAM " << ram(pd, *actual) << " km2\n";
  return kOk;
}

// Collects RAM and AUPC at every update of a fit, from the particles that
// held the parameter prior on that day.
class Assessor : public SequentialObserver {
 public:
  Assessor(const Grid& grid, std::string variant, LikelihoodVariant lik, bool with_prior)
      : grid_(grid), variant_(std::move(variant)), lik_(lik), with_prior_(with_prior) {}

  void before_update(const Track& track, int day, const ParticleSet& ps, const DailyPrior* prior) override {
    const auto actual = track.at(day);
    if (!actual) return;
    const bool use = with_prior_ && prior != nullptr;
    const auto pd = predictive_density(ps, track, day, use ? &prior->prior : nullptr, use ? prior->p_n : 0.0, grid_, lik_);
    const auto curve = proximity_curve(pd, *actual, default_p_grid());
    records.push_back({track.gang_id, ++instances_[track.gang_id], day, ram(pd, *actual), aupc(curve), variant_});
  }

  std::vector<AssessmentRecord> records;

 private:
  const Grid& grid_;
  std::string variant_;
  LikelihoodVariant lik_;
  bool with_prior_;
  std::map<std::string, int> instances_;
};

json comparison_json(const std::vector<GangComparison>& rows) {
  json out = json::array();
  for (const auto& r : rows) {
    out.push_back({{"gang_id", r.gang_id},
                   {"instances", r.instances},
                   {"ram_better_pct", r.ram_better_pct},
                   {"ram_at_least_pct", r.ram_at_least_pct},
                   {"aupc_better_pct", r.aupc_better_pct},
                   {"aupc_at_least_pct", r.aupc_at_least_pct},
                   {"trailing_ram_better_pct", r.trailing_ram_better_pct},
                   {"trailing_aupc_better_pct", r.trailing_aupc_better_pct}});
  }
  return out;
}

int cmd_evaluate(const RunConfig& cfg, bool with_partial, std::ostream& out) {
  const Inputs in = load_inputs(cfg, true);
  require_history(cfg, in.tracks);
  const auto priors = make_prior_provider(cfg, in);
  std::vector<AssessmentRecord> records;
  const auto run_variant = [&](const std::string& name, LikelihoodVariant lik, bool with_prior) {
    PfConfig pf = cfg.pf;
    pf.variant = lik;
    pf.use_expert_prior = with_prior;
    Assessor assessor(*in.grid, name, lik, with_prior);
    run_sequential(in.tracks, priors, pf, cfg.scale(), cfg.seed, &assessor, nullptr, cfg.min_history);
    records.insert(records.end(), assessor.records.begin(), assessor.records.end());
  };
  const bool have_prior = static_cast<bool>(priors);
  if (have_prior) run_variant("with_prior", cfg.pf.variant, true);
  run_variant("without_prior", cfg.pf.variant, false);
  if (with_partial) run_variant("partial", LikelihoodVariant::partial, false);
  if (records.empty()) throw Exit{kNothingToAssess, "no assessable instances (no gang has an update)"};

  {
    auto f = open_out(cfg.output_dir / "assessments.csv");
    write_assessments(f, records);
  }
  json cmp;
  if (have_prior) cmp["with_prior_vs_without_prior"] = comparison_json(compare_variants(records, "with_prior", "without_prior"));
  if (with_partial) cmp["full_vs_partial"] = comparison_json(compare_variants(records, "without_prior", "partial"));
  auto f = open_out(cfg.output_dir / "comparison.json");
  f << cmp.dump(2) << '\n';
  out << records.size() << " assessment records written\n";
  return kOk;
}

}  // namespace

RunConfig load_config(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot read config " + file.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  const fs::path base = file.has_parent_path() ? file.parent_path() : fs::path(".");

  RunConfig cfg;
  cfg.observations = path_or_empty(j, "observations", base);
  cfg.camps = path_or_empty(j, "camps", base);
  cfg.forest = path_or_empty(j, "forest", base);
  cfg.intel = path_or_empty(j, "intel", base);
  cfg.output_dir = path_or_empty(j, "output_dir", base);
  if (cfg.output_dir.empty()) cfg.output_dir = base / "out";
  cfg.seed = get_or<std::uint64_t>(j, "seed", 1);

  const json sim = get_or<json>(j, "simulation", json::object());
  cfg.sim.n = get_or(sim, "n", cfg.sim.n);
  cfg.sim.theta_true = get_or(sim, "theta", cfg.sim.theta_true);
  cfg.sim.h_true = get_or(sim, "h", cfg.sim.h_true);
  cfg.sim.missing_frac = get_or(sim, "missing_frac", cfg.sim.missing_frac);
  cfg.sim.spread_km = get_or(sim, "spread_km", cfg.sim.spread_km);
  cfg.sim.gang_id = get_or(sim, "gang_id", cfg.sim.gang_id);
  cfg.sim.first_day = get_or(sim, "first_day", cfg.sim.first_day);
  const auto center = get_or<std::vector<double>>(sim, "center", {cfg.sim.center.lon, cfg.sim.center.lat});
  if (center.size() != 2) throw ConfigError("simulation.center must be [lon, lat]");
  cfg.sim.center = {center[0], center[1]};
  cfg.sim.scale = KmScale::at_latitude(cfg.sim.center.lat);
  cfg.sim.seed = cfg.seed;
  cfg.study_seeds = get_or<std::vector<std::uint64_t>>(sim, "seeds", {});

  const json grid = get_or<json>(j, "grid", json::object());
  if (grid.contains("bbox")) {
    const auto b = get_or<std::vector<double>>(grid, "bbox", {});
    if (b.size() != 4 || !(b[0] < b[2]) || !(b[1] < b[3])) {
      throw ConfigError("grid.bbox must be [lon_min, lat_min, lon_max, lat_max] with min < max");
    }
    cfg.bbox = BoundingBox{b[0], b[1], b[2], b[3]};
  }
  cfg.cell_km = get_or(grid, "cell_km", cfg.cell_km);
  if (!(cfg.cell_km > 0.0)) throw ConfigError("grid.cell_km must be positive");
  cfg.ref_lat = get_or(grid, "ref_lat", cfg.bbox ? cfg.bbox->centroid().lat : cfg.sim.center.lat);

  const json pf = get_or<json>(j, "pf", json::object());
  cfg.pf.particles = get_or(pf, "particles", cfg.pf.particles);
  cfg.pf.box.theta_min = get_or(pf, "theta_min", cfg.pf.box.theta_min);
  cfg.pf.box.theta_max = get_or(pf, "theta_max", cfg.pf.box.theta_max);
  cfg.pf.box.h_min = get_or(pf, "h_min", cfg.pf.box.h_min);
  cfg.pf.box.h_max = get_or(pf, "h_max", cfg.pf.box.h_max);
  cfg.pf.smoothing = get_or(pf, "smoothing", cfg.pf.smoothing);
  cfg.pf.credible_mass = get_or(pf, "credible_mass", cfg.pf.credible_mass);
  cfg.pf.use_expert_prior = get_or(pf, "use_expert_prior", cfg.pf.use_expert_prior);
  cfg.pf.variant = parse_variant(get_or<std::string>(pf, "variant", "full"));
  cfg.min_history = get_or(pf, "min_history", cfg.min_history);

  const json prior = get_or<json>(j, "prior", json::object());
  cfg.prior.forest_threshold = get_or(prior, "forest_threshold", cfg.prior.forest_threshold);
  cfg.prior.camp_km = get_or(prior, "camp_km", cfg.prior.camp_km);
  cfg.prior.buffer_km = get_or(prior, "buffer_km", cfg.prior.buffer_km);
  cfg.prior.intel_radius_km = get_or(prior, "intel_radius_km", cfg.prior.intel_radius_km);
  cfg.prior.intel_fresh_days = get_or(prior, "intel_fresh_days", cfg.prior.intel_fresh_days);
  cfg.prior.k0 = get_or(prior, "k0", cfg.prior.k0);
  cfg.prior.p_with_intel = get_or(prior, "p_with_intel", cfg.prior.p_with_intel);
  cfg.prior.p_without_intel = get_or(prior, "p_without_intel", cfg.prior.p_without_intel);

  try {
    cfg.pf.box.validate();
    cfg.sim.validate();
  } catch (const InvalidParameter& e) {
    throw ConfigError(e.what());
  }
  if (cfg.pf.particles < 100) throw ConfigError("pf.particles must be at least 100");
  if (!(cfg.pf.smoothing >= 0.0 && cfg.pf.smoothing < 1.0)) throw ConfigError("pf.smoothing must lie in [0, 1)");
  if (!(cfg.pf.credible_mass > 0.0 && cfg.pf.credible_mass < 1.0)) throw ConfigError("pf.credible_mass must lie in (0, 1)");
  if (cfg.min_history < 1) throw ConfigError("pf.min_history must be at least 1");
  if (cfg.prior.k0 < 1) throw ConfigError("prior.k0 must be at least 1");
  for (double p : {cfg.prior.p_with_intel, cfg.prior.p_without_intel}) {
    if (!(p >= 0.0 && p < 1.0)) throw ConfigError("prior credibility weights must lie in [0, 1)");
  }
  return cfg;
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sequential Bayesian tracking of gang locations with missing days and expert priors"};
  app.require_subcommand(1);
  std::string config_file;
  std::optional<std::uint64_t> seed;
  std::string variant;
  std::optional<double> force_pn;
  app.add_option("--config", config_file, "JSON run configuration")->required();
  app.add_option("--seed", seed, "Override the configured seed");
  app.add_option("--variant", variant, "Likelihood variant")->check(CLI::IsMember({"full", "partial"}));
  app.add_option("--force-pn", force_pn, "Fix the expert-prior weight p_n for every day")->check(CLI::Range(0.0, 1.0));

  auto* simulate = app.add_subcommand("simulate", "Simulate a track and its masked copy");
  auto* study = app.add_subcommand("study", "Fit simulated tracks with the full and partial likelihoods");
  auto* fit = app.add_subcommand("fit", "Run the sequential filter over all gangs");
  std::string resume;
  std::optional<int> until;
  fit->add_option("--resume", resume, "Continue from a snapshot CSV");
  fit->add_option("--until", until, "Ignore observations after this day");
  auto* predict = app.add_subcommand("predict", "Predictive map for one gang on one day");
  int day = 0;
  std::string gang;
  predict->add_option("--day", day, "Day to predict")->required();
  predict->add_option("--gang", gang, "Gang id")->required();
  auto* evaluate = app.add_subcommand("evaluate", "RAM and AUPC at every update, with and without the expert prior");
  bool with_partial = false;
  evaluate->add_flag("--partial", with_partial, "Also assess the partial-likelihood model");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kBadConfig;
  }

  try {
    RunConfig cfg = load_config(config_file);
    if (seed) {
      cfg.seed = *seed;
      cfg.sim.seed = *seed;
    }
    if (!variant.empty()) cfg.pf.variant = parse_variant(variant);
    if (force_pn) {
      if (*force_pn >= 1.0 && !predict->parsed()) {
        throw ConfigError("--force-pn 1 leaves no mass for the particles; it is only meaningful for predict");
      }
      cfg.force_pn = force_pn;
    }
    if (simulate->parsed()) return cmd_simulate(cfg, out);
    if (study->parsed()) return cmd_study(cfg, out);
    if (fit->parsed()) return cmd_fit(cfg, resume, until, out);
    if (predict->parsed()) return cmd_predict(cfg, day, gang, out);
    if (evaluate->parsed()) return cmd_evaluate(cfg, with_partial, out);
  } catch (const Exit& e) {
    err << "error: " << e.message << '\n';
    return e.code;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kBadConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kFailure;
}

}  // namespace gangtrack::cli
