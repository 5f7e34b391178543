#include "wavesal/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "wavesal/config.hpp"
#include "wavesal/errors.hpp"
#include "wavesal/sampling.hpp"
#include "wavesal/spectrum.hpp"
#include "wavesal/wavecube.hpp"
#include "wavesal/windowing.hpp"

namespace wavesal {

namespace {

std::string join(const std::vector<double>& values) {
  std::string s;
  for (const double v : values) s += (s.empty() ? "" : ",") + format_number(v);
  return s;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing", 0);
  return out;
}

void write_lines(const std::string& path, const Metadata& lines) {
  write_metadata(lines, path);
}

RankPolicy parse_rank(const std::string& text) {
  if (text == "auto") return RankPolicy::automatic();
  std::size_t used = 0;
  unsigned long v = 0;
  try {
    v = std::stoul(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || v < 1)
    throw ConfigError("--rank expects a positive integer or 'auto', got '" + text + "'");
  return RankPolicy::fixed(v);
}

struct Pipeline {
  ScenarioConfig config;
  DataCube cube;
  Partition partition;
  double group_speed = 0.0;
  std::optional<ProbePair> probes;
  RegionalWindowSet windows;
};

Pipeline prepare(const std::string& cube_path, const std::string& config_path,
                 std::optional<std::size_t> window_override) {
  ScenarioConfig config = load_config(config_path);
  if (window_override) {
    if (*window_override < 1) throw ConfigError("--tw must be at least 1");
    config.detection.window = *window_override;
  }
  DataCube cube = load_cube(cube_path);
  Partition partition;
  try {
    partition = make_partition(cube.n1(), cube.n2(), config.detection.regions_x,
                               config.detection.regions_y);
  } catch (const PartitionError& e) {
    throw ConfigError(e.what());
  }
  double speed = 0.0;
  std::optional<ProbePair> probes;
  if (config.probes.source == VelocitySource::analytic) {
    speed = analytic_group_velocity(config.material, config.excitation.carrier_frequency);
  } else {
    probes = config.probes.first
                 ? ProbePair(*config.probes.first, *config.probes.second, cube.dx())
                 : default_probes(cube.n1(), cube.dx());
    speed = estimate_group_velocity(cube, *probes);
  }
  RegionalWindowSet windows = extract_windows(cube, partition, speed, config.excitation,
                                              config.detection.window);
  return {std::move(config), std::move(cube), partition, speed, probes, std::move(windows)};
}

std::string region_list(const std::vector<RegionId>& regions) {
  std::string s;
  for (const auto& r : regions)
    s += (s.empty() ? "" : ";") + std::to_string(r.i) + "," + std::to_string(r.j);
  return s;
}

int cmd_simulate(const std::string& config_path, const std::string& output,
                 std::ostream& out) {
  const ScenarioConfig config = load_config(config_path);
  SimulationInfo info;
  const DataCube cube = simulate(config.material, config.defects, config.excitation,
                                 config.grid, &info);
  save_cube(cube, output);
  Metadata meta = describe(config);
  meta.emplace_back("simulation.time_step", format_number(info.time_step));
  meta.emplace_back("simulation.substeps", std::to_string(info.substeps));
  meta.emplace_back("simulation.total_steps", std::to_string(info.total_steps));
  meta.emplace_back("simulation.max_abs_deflection", format_number(cube.max_abs()));
  write_metadata(meta, meta_path(output));
  out << "wrote " << output << " (" << cube.n1() << " x " << cube.n2() << " x "
      << cube.t_len() << ", internal step " << format_number(info.time_step) << " s)\n";
  return kExitOk;
}

int cmd_detect(const std::string& cube_path, const std::string& config_path,
               const std::string& prefix, const std::optional<std::string>& rank,
               std::optional<std::size_t> window, const std::string& dump_dir,
               std::ostream& out) {
  Pipeline run = prepare(cube_path, config_path, window);
  auto& det = run.config.detection;
  if (rank) det.rank = parse_rank(*rank);
  if (!dump_dir.empty()) dump_windows(run.windows, run.cube.dx(), dump_dir);

  const Partition& p = run.partition;
  std::vector<Mask> masks;
  if (det.mask != MaskMode::none) {
    masks = make_masks(det.mask == MaskMode::cross ? MaskKind::double_cross : MaskKind::random,
                       det.sharing, p.p1, p.p2, det.mask_ratio, det.stride, det.seed,
                       run.windows.active_count());
  }
  const SaliencyMap map = saliency_map(run.windows, det.rank, det.ratio, masks);
  const std::vector<RegionId> flagged = classify(map, det.theta);

  {
    auto csv = open_output(prefix + ".saliency.csv");
    write_saliency_csv(map, csv);
  }
  write_saliency_pgm(map, prefix + ".saliency.pgm");
  {
    auto list = open_output(prefix + ".flagged.txt");
    list << "# i j value\n";
    for (const auto& r : flagged)
      list << r.i << ' ' << r.j << ' ' << format_number(*map.at(r.i, r.j)) << '\n';
  }

  Metadata manifest = describe(run.config);
  manifest.emplace_back("run.cube", cube_path);
  manifest.emplace_back("run.group_speed", format_number(run.group_speed));
  if (run.probes) {
    manifest.emplace_back("run.probe_first", std::to_string(run.probes->first().l) + ", " +
                                                 std::to_string(run.probes->first().m));
    manifest.emplace_back("run.probe_second", std::to_string(run.probes->second().l) + ", " +
                                                  std::to_string(run.probes->second().m));
  }
  manifest.emplace_back("run.analytic_group_speed",
                        format_number(analytic_group_velocity(
                            run.config.material, run.config.excitation.carrier_frequency)));
  manifest.emplace_back("run.region_nodes", std::to_string(p.p1) + " x " + std::to_string(p.p2));
  manifest.emplace_back("run.active_regions", std::to_string(run.windows.active_count()));
  manifest.emplace_back("run.rank_used", std::to_string(map.rank_used));
  manifest.emplace_back("run.energy_threshold_ratio", format_number(det.ratio));
  manifest.emplace_back("run.classification_threshold", format_number(det.theta));
  manifest.emplace_back("run.mask_nodes",
                        std::to_string(masks.empty() ? p.p1 * p.p2 : masks.front().count()));
  manifest.emplace_back("run.seed", std::to_string(det.seed));
  manifest.emplace_back("run.singular_values_first_snapshot", join(map.leading_spectrum));
  manifest.emplace_back("run.flagged", region_list(flagged));
  if (!run.config.defects.empty()) {
    const GroundTruth truth = GroundTruth::from_defects(run.config.defects, p);
    const RegionId source = region_of(p, run.config.excitation.source);
    const DetectionMetrics m = detection_metrics(flagged, truth, p, source);
    manifest.emplace_back("metrics.truth", region_list(truth.regions));
    manifest.emplace_back("metrics.correct", std::to_string(m.correct_discoveries));
    manifest.emplace_back("metrics.false", std::to_string(m.false_discoveries));
    manifest.emplace_back("metrics.regional_correct", std::to_string(m.regionally_discovered));
    manifest.emplace_back("metrics.regional_false", std::to_string(m.regional_false));
    manifest.emplace_back("metrics.origin_false", std::to_string(m.origin_false));
  }
  write_lines(prefix + ".manifest.txt", manifest);

  out << "group speed " << format_number(run.group_speed) << " m/s, rank "
      << map.rank_used << ", " << run.windows.active_count() << " active regions\n";
  out << "flagged " << flagged.size() << " region(s):";
  for (const auto& r : flagged) out << " (" << r.i << "," << r.j << ")";
  out << '\n';
  return kExitOk;
}

struct SweepOptions {
  std::vector<double> ratios{0.5, 0.33, 0.2, 0.1, 0.07};
  std::size_t trials = 50;
  std::string pattern = "random";
  std::size_t stride = 1;
  std::string sharing;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> rank;
};

int cmd_sweep(const std::string& cube_path, const std::string& config_path,
              const std::string& output, const SweepOptions& opts, std::ostream& out) {
  Pipeline run = prepare(cube_path, config_path, std::nullopt);
  const auto& det = run.config.detection;
  DetectionConfig detection{det.rank, det.ratio, det.theta};
  if (opts.rank) detection.rank = parse_rank(*opts.rank);
  SweepSettings settings;
  settings.ratios = opts.ratios;
  settings.trials = opts.trials;
  settings.base_seed = opts.seed.value_or(det.seed);
  settings.pattern = opts.pattern == "cross" ? MaskKind::double_cross : MaskKind::random;
  settings.stride = opts.stride;
  settings.sharing = opts.sharing.empty() ? det.sharing
                     : opts.sharing == "per_region" ? MaskSharing::per_region
                                                    : MaskSharing::shared;
  settings.threads = threads_from_environment(1);

  const GroundTruth truth = GroundTruth::from_defects(run.config.defects, run.partition);
  const RegionId source = region_of(run.partition, run.config.excitation.source);
  const auto rows = monte_carlo_sweep(run.windows, truth, source, detection, settings);
  {
    auto csv = open_output(output);
    write_sweep_csv(rows, csv);
  }
  out << "nz regional_correct (standard error), " << rows.size() << " row(s), group speed "
      << format_number(run.group_speed) << " m/s\n";
  for (const auto& r : rows)
    out << format_number(r.nz) << ' ' << format_number(r.regional_correct.mean) << " ("
        << format_number(r.regional_correct.standard_error) << ")\n";
  return kExitOk;
}

int cmd_spectrum(const std::string& cube_path, const std::string& prefix, double floor_db,
                 std::optional<std::size_t> snapshot, std::optional<double> compare_ratio,
                 std::ostream& out) {
  if (!(floor_db < 0.0)) throw ConfigError("--floor-db must be negative");
  const DataCube cube = load_cube(cube_path);
  const std::size_t index = snapshot.value_or(cube.t_len() - 1);
  const WavenumberSpectrum spectrum = dft2_magnitude(slice_at(cube, index));
  const double fraction = occupied_fraction(spectrum, floor_db);
  {
    auto csv = open_output(prefix + ".spectrum.csv");
    write_spectrum_csv(spectrum, csv);
  }
  write_spectrum_pgm(spectrum, floor_db, prefix + ".spectrum.pgm");
  out << "occupied_fraction = " << format_number(fraction) << '\n'
      << "floor_db = " << format_number(floor_db) << '\n'
      << "snapshot = " << index << '\n';
  if (compare_ratio) {
    out << "sampling_ratio = " << format_number(*compare_ratio) << '\n'
        << "below_landau_rate = " << (*compare_ratio < fraction ? "yes" : "no") << '\n';
  }
  return kExitOk;
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const PartitionError*>(&e))
    return kExitConfig;
  if (dynamic_cast<const DivergenceError*>(&e)) return kExitDivergence;
  if (dynamic_cast<const EmptyWindowingError*>(&e)) return kExitWindowing;
  if (dynamic_cast<const NoSignalError*>(&e)) return kExitNoSignal;
  return kExitFailure;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Anomaly localization in plates from simulated flexural wavefields", "wavesal"};
  app.require_subcommand(1);

  std::string config_path, cube_path, output, prefix, dump_dir;
  std::optional<std::string> rank;
  std::optional<std::size_t> window, snapshot;
  std::optional<double> compare_ratio;
  double floor_db = -20.0;
  SweepOptions sweep;

  auto* sim = app.add_subcommand("simulate", "Simulate a scenario and write a WVC1 cube");
  sim->add_option("config", config_path, "Scenario config")->required();
  sim->add_option("output", output, "Output cube path")->required();

  auto* det = app.add_subcommand("detect", "Saliency map and flagged regions for a cube");
  det->add_option("cube", cube_path, "Input cube")->required();
  det->add_option("config", config_path, "Scenario config")->required();
  det->add_option("prefix", prefix, "Output path prefix")->required();
  det->add_option("--rank", rank, "Fixed rank, or 'auto' for the knee rule");
  det->add_option("--tw", window, "Window length in samples");
  det->add_option("--dump-windows", dump_dir, "Write regional windows to this directory");

  auto* swp = app.add_subcommand("sweep", "Monte Carlo subsampling sweep");
  swp->add_option("cube", cube_path, "Input cube")->required();
  swp->add_option("config", config_path, "Scenario config")->required();
  swp->add_option("output", output, "Output CSV path")->required();
  swp->add_option("--ratios", sweep.ratios, "Sampling ratios")->delimiter(',');
  swp->add_option("--trials", sweep.trials, "Trials per ratio")->check(CLI::PositiveNumber);
  swp->add_option("--pattern", sweep.pattern, "random or cross")
      ->check(CLI::IsMember({"random", "cross"}));
  swp->add_option("--stride", sweep.stride, "Double-cross stride")->check(CLI::PositiveNumber);
  swp->add_option("--sharing", sweep.sharing, "shared or per_region")
      ->check(CLI::IsMember({"shared", "per_region"}));
  swp->add_option("--seed", sweep.seed, "Base seed (defaults to the config seed)");
  swp->add_option("--rank", sweep.rank, "Fixed rank, or 'auto'");

  auto* spc = app.add_subcommand("spectrum", "Wavenumber spectrum and occupied fraction");
  spc->add_option("cube", cube_path, "Input cube")->required();
  spc->add_option("prefix", prefix, "Output path prefix")->required();
  spc->add_option("--floor-db", floor_db, "Occupancy floor relative to the peak (dB)");
  spc->add_option("--snapshot", snapshot, "Time index (defaults to the last sample)");
  spc->add_option("--compare-ratio", compare_ratio, "Sampling ratio to compare with the estimate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (sim->parsed()) return cmd_simulate(config_path, output, out);
    if (det->parsed())
      return cmd_detect(cube_path, config_path, prefix, rank, window, dump_dir, out);
    if (swp->parsed()) return cmd_sweep(cube_path, config_path, output, sweep, out);
    if (spc->parsed())
      return cmd_spectrum(cube_path, prefix, floor_db, snapshot, compare_ratio, out);
  } catch (const std::exception& e) {
    err << "wavesal: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return kExitFailure;
}

}  // namespace wavesal
