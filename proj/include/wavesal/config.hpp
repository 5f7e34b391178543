#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "wavesal/mask.hpp"
#include "wavesal/platesim.hpp"
#include "wavesal/saliency.hpp"
#include "wavesal/windowing.hpp"

namespace wavesal {

enum class MaskMode { none, random, cross };
enum class VelocitySource { estimate, analytic };

struct DetectionBlock {
  std::size_t regions_x = 16;
  std::size_t regions_y = 16;
  std::size_t window = 11;
  RankPolicy rank = RankPolicy::automatic();
  double ratio = 0.25;
  double theta = 0.5;
  MaskMode mask = MaskMode::none;
  double mask_ratio = 0.5;
  std::size_t stride = 1;
  MaskSharing sharing = MaskSharing::shared;
  std::uint64_t seed = 1;
};

struct ProbeBlock {
  VelocitySource source = VelocitySource::estimate;
  // Unset probes fall back to default_probes() for the grid.
  std::optional<GridPoint> first;
  std::optional<GridPoint> second;
};

/// Everything a run needs, with every default resolved.
struct ScenarioConfig {
  MaterialSpec material;
  SimulationSettings grid;
  ExcitationSpec excitation;
  std::vector<DefectSpec> defects;
  DetectionBlock detection;
  ProbeBlock probes;
};

/// Parses `[block]` headers and `key = value` lines; `#` starts a comment.
/// Errors carry the line and column of the offending text.
ScenarioConfig parse_config(std::istream& in);
ScenarioConfig load_config(const std::filesystem::path& path);

/// Canonical `key = value` rendering of every resolved field.
std::vector<std::pair<std::string, std::string>> describe(
    const ScenarioConfig& config);

std::string format_number(double v);

}  // namespace wavesal
