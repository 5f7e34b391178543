#include "wavesal/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <map>

#include "wavesal/errors.hpp"

namespace wavesal {

namespace {

struct Token {
  std::string text;
  std::size_t line = 0;
  std::size_t column = 0;  // 1-based column of the value
};

std::string trim(const std::string& s, std::size_t& offset) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) {
    offset = s.size();
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r");
  offset = first;
  return s.substr(first, last - first + 1);
}

double to_double(const Token& t) {
  double v = 0.0;
  const char* end = t.text.data() + t.text.size();
  const auto [ptr, ec] = std::from_chars(t.text.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v))
    throw ConfigError("expected a finite number, got '" + t.text + "'", t.line, t.column);
  return v;
}

std::uint64_t to_unsigned(const Token& t) {
  std::uint64_t v = 0;
  const char* end = t.text.data() + t.text.size();
  const auto [ptr, ec] = std::from_chars(t.text.data(), end, v);
  if (ec != std::errc() || ptr != end)
    throw ConfigError("expected a non-negative integer, got '" + t.text + "'", t.line,
                      t.column);
  return v;
}

GridPoint to_point(const Token& t) {
  const auto comma = t.text.find(',');
  if (comma == std::string::npos)
    throw ConfigError("expected a node as 'l, m', got '" + t.text + "'", t.line, t.column);
  std::size_t a_off = 0, b_off = 0;
  Token a{trim(t.text.substr(0, comma), a_off), t.line, t.column};
  Token b{trim(t.text.substr(comma + 1), b_off), t.line, t.column + comma + 1 + b_off};
  return {static_cast<std::size_t>(to_unsigned(a)), static_cast<std::size_t>(to_unsigned(b))};
}

template <typename E>
E to_choice(const Token& t, const std::map<std::string, E>& choices) {
  const auto it = choices.find(t.text);
  if (it != choices.end()) return it->second;
  std::string names;
  for (const auto& [k, v] : choices) names += (names.empty() ? "" : ", ") + k;
  throw ConfigError("unknown value '" + t.text + "' (expected one of " + names + ")", t.line,
                    t.column);
}

using Setter = std::function<void(const Token&)>;

struct PendingDefect {
  std::size_t line = 0;
  DefectKind kind = DefectKind::point_inclusion;
  std::optional<double> x, y, xa, ya, xb, yb;
  double modulus_scale = 1.0;
  double density_scale = 1.0;

  DefectSpec build() const {
    if (kind == DefectKind::point_inclusion) {
      if (!x || !y) throw ConfigError("point defect needs x and y", line, 1);
      return DefectSpec::point(*x, *y, modulus_scale, density_scale);
    }
    if (!xa || !xb) throw ConfigError("line defect needs xa and xb", line, 1);
    const double y_default = y.value_or(0.5);
    return DefectSpec::line(*xa, ya.value_or(y_default), *xb, yb.value_or(y_default),
                            modulus_scale, density_scale);
  }
};

class Parser {
 public:
  ScenarioConfig run(std::istream& in) {
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
      ++line_no;
      const auto hash = raw.find('#');
      const std::string line = hash == std::string::npos ? raw : raw.substr(0, hash);
      std::size_t offset = 0;
      const std::string body = trim(line, offset);
      if (body.empty()) continue;
      if (body.front() == '[') {
        if (body.back() != ']')
          throw ConfigError("unterminated block header", line_no, offset + 1);
        open_block(body.substr(1, body.size() - 2), line_no, offset + 1);
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError("expected 'key = value'", line_no, offset + 1);
      std::size_t key_off = 0, value_off = 0;
      const std::string key = trim(line.substr(0, eq), key_off);
      const std::string value = trim(line.substr(eq + 1), value_off);
      if (key.empty()) throw ConfigError("missing key before '='", line_no, offset + 1);
      if (value.empty()) throw ConfigError("missing value after '='", line_no, eq + 2);
      assign(key, Token{value, line_no, eq + 2 + value_off}, key_off + 1);
    }
    close_defect();
    validate();
    return config_;
  }

 private:
  void open_block(const std::string& name, std::size_t line, std::size_t column) {
    close_defect();
    static const std::map<std::string, int> known = {
        {"material", 0}, {"grid", 0}, {"excitation", 0}, {"defect", 0},
        {"detection", 0}, {"probes", 0}};
    if (!known.contains(name))
      throw ConfigError("unknown block [" + name + "]", line, column);
    block_ = name;
    if (name == "defect") {
      defect_.emplace();
      defect_->line = line;
    }
  }

  void close_defect() {
    if (!defect_) return;
    try {
      config_.defects.push_back(defect_->build());
      config_.defects.back().validate();
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError(e.what(), defect_->line, 1);
    }
    defect_.reset();
  }

  std::map<std::string, Setter> setters() {
    auto& c = config_;
    auto size = [](std::size_t& dst) { return [&dst](const Token& t) { dst = static_cast<std::size_t>(to_unsigned(t)); }; };
    auto real = [](double& dst) { return [&dst](const Token& t) { dst = to_double(t); }; };
    if (block_ == "material")
      return {{"youngs_modulus", real(c.material.youngs_modulus)},
              {"poisson_ratio", real(c.material.poisson_ratio)},
              {"density", real(c.material.density)},
              {"thickness", real(c.material.thickness)},
              {"side_length", real(c.material.side_length)}};
    if (block_ == "grid")
      return {{"n1", size(c.grid.n1)},
              {"n2", size(c.grid.n2)},
              {"samples", size(c.grid.sample_count)},
              {"sample_interval", real(c.grid.sample_interval)},
              {"safety", real(c.grid.safety)}};
    if (block_ == "excitation")
      return {{"carrier_frequency", real(c.excitation.carrier_frequency)},
              {"cycle_count", real(c.excitation.cycle_count)},
              {"amplitude", real(c.excitation.amplitude)},
              {"source", [&c](const Token& t) { c.excitation.source = to_point(t); }}};
    if (block_ == "defect") {
      auto& d = *defect_;
      auto opt = [](std::optional<double>& dst) { return [&dst](const Token& t) { dst = to_double(t); }; };
      return {{"kind", [&d](const Token& t) {
                 d.kind = to_choice<DefectKind>(
                     t, {{"point", DefectKind::point_inclusion}, {"line", DefectKind::line_segment}});
               }},
              {"x", opt(d.x)}, {"y", opt(d.y)}, {"xa", opt(d.xa)}, {"ya", opt(d.ya)},
              {"xb", opt(d.xb)}, {"yb", opt(d.yb)},
              {"modulus_scale", real(d.modulus_scale)},
              {"density_scale", real(d.density_scale)}};
    }
    if (block_ == "detection") {
      auto& b = c.detection;
      return {{"regions_x", size(b.regions_x)},
              {"regions_y", size(b.regions_y)},
              {"window", size(b.window)},
              {"rank", [&b](const Token& t) {
                 b.rank = t.text == "auto" ? RankPolicy::automatic()
                                           : RankPolicy::fixed(static_cast<std::size_t>(to_unsigned(t)));
               }},
              {"ratio", real(b.ratio)},
              {"theta", real(b.theta)},
              {"mask", [&b](const Token& t) {
                 b.mask = to_choice<MaskMode>(
                     t, {{"none", MaskMode::none}, {"random", MaskMode::random}, {"cross", MaskMode::cross}});
               }},
              {"mask_ratio", real(b.mask_ratio)},
              {"stride", size(b.stride)},
              {"sharing", [&b](const Token& t) {
                 b.sharing = to_choice<MaskSharing>(
                     t, {{"shared", MaskSharing::shared}, {"per_region", MaskSharing::per_region}});
               }},
              {"seed", [&b](const Token& t) { b.seed = to_unsigned(t); }}};
    }
    if (block_ == "probes") {
      auto& p = c.probes;
      return {{"velocity", [&p](const Token& t) {
                 p.source = to_choice<VelocitySource>(
                     t, {{"estimate", VelocitySource::estimate}, {"analytic", VelocitySource::analytic}});
               }},
              {"first", [&p](const Token& t) { p.first = to_point(t); }},
              {"second", [&p](const Token& t) { p.second = to_point(t); }}};
    }
    return {};
  }

  void assign(const std::string& key, const Token& value, std::size_t key_column) {
    if (block_.empty())
      throw ConfigError("key '" + key + "' appears before any [block]", value.line, key_column);
    auto table = setters();
    const auto it = table.find(key);
    if (it == table.end())
      throw ConfigError("unknown key '" + key + "' in [" + block_ + "]", value.line, key_column);
    const std::string full = block_ + "." + key;
    if (block_ != "defect") {
      if (seen_.contains(full))
        throw ConfigError("duplicate key '" + key + "' in [" + block_ + "]", value.line, key_column);
      seen_[full] = value.line;
    }
    it->second(value);
  }

  std::size_t line_of(const std::string& key) const {
    const auto it = seen_.find(key);
    return it == seen_.end() ? 0 : it->second;
  }

  // Rethrows a domain error from a block as a configuration error.
  template <typename Check>
  void check(const std::string& key, Check check_fn) const {
    try {
      check_fn();
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      const std::size_t line = line_of(key);
      throw ConfigError(e.what(), line, line == 0 ? 0 : 1);
    }
  }

  void fail(const std::string& key, const std::string& what) const {
    const std::size_t line = line_of(key);
    throw ConfigError(what, line, line == 0 ? 0 : 1);
  }

  void validate() const {
    const auto& c = config_;
    check("material.youngs_modulus", [&] { c.material.validate(); });
    check("excitation.carrier_frequency", [&] { c.excitation.validate(); });
    if (c.grid.n1 != c.grid.n2) fail("grid.n2", "the plate is square: n1 must equal n2");
    if (c.grid.n1 < 3) fail("grid.n1", "grid needs at least 3 nodes per side");
    if (c.grid.sample_count < 1) fail("grid.samples", "samples must be at least 1");
    if (!(c.grid.sample_interval > 0.0)) fail("grid.sample_interval", "sample_interval must be positive");
    if (!(c.grid.safety > 0.0 && c.grid.safety <= 1.0)) fail("grid.safety", "safety must lie in (0, 1]");
    if (c.excitation.source.l >= c.grid.n1 || c.excitation.source.m >= c.grid.n2)
      fail("excitation.source", "excitation source lies outside the grid");
    const auto& d = c.detection;
    check("detection.regions_x", [&] {
      make_partition(c.grid.n1, c.grid.n2, d.regions_x, d.regions_y);
    });
    if (d.window < 1) fail("detection.window", "window must be at least 1");
    if (d.rank.mode == RankPolicy::Mode::fixed && d.rank.rank < 1)
      fail("detection.rank", "rank must be at least 1 or 'auto'");
    if (!(d.ratio > 0.0 && d.ratio <= 1.0)) fail("detection.ratio", "ratio must lie in (0, 1]");
    if (!(d.theta > 0.0 && d.theta <= 1.0)) fail("detection.theta", "theta must lie in (0, 1]");
    if (!(d.mask_ratio > 0.0 && d.mask_ratio <= 1.0))
      fail("detection.mask_ratio", "mask_ratio must lie in (0, 1]");
    if (d.stride < 1) fail("detection.stride", "stride must be at least 1");
    const auto& p = c.probes;
    for (const auto* probe : {&p.first, &p.second}) {
      if (*probe && ((*probe)->l >= c.grid.n1 || (*probe)->m >= c.grid.n2))
        fail(probe == &p.first ? "probes.first" : "probes.second", "probe lies outside the grid");
    }
    if (p.first.has_value() != p.second.has_value())
      fail("probes.first", "set both probes or neither");
    if (p.first && *p.first == *p.second) fail("probes.second", "probe positions must differ");
  }

  ScenarioConfig config_;
  std::string block_;
  std::optional<PendingDefect> defect_;
  std::map<std::string, std::size_t> seen_;
};

std::string point_text(GridPoint p) {
  return std::to_string(p.l) + ", " + std::to_string(p.m);
}

}  // namespace

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

ScenarioConfig parse_config(std::istream& in) { return Parser().run(in); }

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_config(in);
}

std::vector<std::pair<std::string, std::string>> describe(const ScenarioConfig& c) {
  std::vector<std::pair<std::string, std::string>> out;
  auto add = [&](std::string key, std::string value) { out.emplace_back(std::move(key), std::move(value)); };
  auto num = [&](std::string key, double v) { add(std::move(key), format_number(v)); };
  num("material.youngs_modulus", c.material.youngs_modulus);
  num("material.poisson_ratio", c.material.poisson_ratio);
  num("material.density", c.material.density);
  num("material.thickness", c.material.thickness);
  num("material.side_length", c.material.side_length);
  add("grid.n1", std::to_string(c.grid.n1));
  add("grid.n2", std::to_string(c.grid.n2));
  add("grid.samples", std::to_string(c.grid.sample_count));
  num("grid.sample_interval", c.grid.sample_interval);
  num("grid.safety", c.grid.safety);
  num("excitation.carrier_frequency", c.excitation.carrier_frequency);
  num("excitation.cycle_count", c.excitation.cycle_count);
  num("excitation.amplitude", c.excitation.amplitude);
  add("excitation.source", point_text(c.excitation.source));
  for (std::size_t k = 0; k < c.defects.size(); ++k) {
    const auto& d = c.defects[k];
    const std::string p = "defect." + std::to_string(k) + ".";
    if (d.kind == DefectKind::point_inclusion) {
      add(p + "kind", "point");
      num(p + "x", d.xa);
      num(p + "y", d.ya);
    } else {
      add(p + "kind", "line");
      num(p + "xa", d.xa);
      num(p + "ya", d.ya);
      num(p + "xb", d.xb);
      num(p + "yb", d.yb);
    }
    num(p + "modulus_scale", d.modulus_scale);
    num(p + "density_scale", d.density_scale);
  }
  const auto& d = c.detection;
  add("detection.regions_x", std::to_string(d.regions_x));
  add("detection.regions_y", std::to_string(d.regions_y));
  add("detection.window", std::to_string(d.window));
  add("detection.rank", d.rank.mode == RankPolicy::Mode::automatic ? "auto" : std::to_string(d.rank.rank));
  num("detection.ratio", d.ratio);
  num("detection.theta", d.theta);
  add("detection.mask", d.mask == MaskMode::none ? "none" : d.mask == MaskMode::random ? "random" : "cross");
  num("detection.mask_ratio", d.mask_ratio);
  add("detection.stride", std::to_string(d.stride));
  add("detection.sharing", d.sharing == MaskSharing::shared ? "shared" : "per_region");
  add("detection.seed", std::to_string(d.seed));
  add("probes.velocity", c.probes.source == VelocitySource::estimate ? "estimate" : "analytic");
  if (c.probes.first) {
    add("probes.first", point_text(*c.probes.first));
    add("probes.second", point_text(*c.probes.second));
  }
  return out;
}

}  // namespace wavesal
