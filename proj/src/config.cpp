// Copyright 2026 The hcmpc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "hcmpc/config.hpp"

#include <cctype>
#include <cmath>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <variant>

namespace hcmpc {
namespace {

using Number = double;
using Array = std::vector<double>;
using Value = std::variant<Number, bool, std::string, Array>;

struct Entry {
  Value value;
  int line = 0;
};

// One `[section]` or one `[[table]]` instance.
struct Block {
  std::string name;
  int line = 0;
  std::map<std::string, Entry> entries;
  bool table = false;  // declared with [[name]]
};

std::string Trim(std::string_view s) {
  size_t b = 0;
  size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

// Removes a trailing comment that is not inside a string.
std::string StripComment(const std::string& line) {
  bool in_string = false;
  for (size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_string = !in_string;
    if (line[i] == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

bool ParseNumber(const std::string& s, double* out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, *out);
  return ec == std::errc() && ptr == last;
}

class Parser {
 public:
  Parser(std::string origin) : origin_(std::move(origin)) {}

  [[noreturn]] void Fail(int line, const std::string& what) const {
    throw ConfigError(origin_, line, what);
  }

  Value ParseValue(const std::string& raw, int line) const {
    if (raw.empty()) Fail(line, "missing value");
    if (raw == "true") return true;
    if (raw == "false") return false;
    if (raw.front() == '"') {
      if (raw.size() < 2 || raw.back() != '"') Fail(line, "unterminated string");
      return raw.substr(1, raw.size() - 2);
    }
    if (raw.front() == '[') {
      if (raw.back() != ']') Fail(line, "unterminated array");
      Array out;
      std::stringstream ss(raw.substr(1, raw.size() - 2));
      std::string item;
      while (std::getline(ss, item, ',')) {
        const std::string t = Trim(item);
        if (t.empty()) continue;
        double v = 0.0;
        if (!ParseNumber(t, &v)) Fail(line, "invalid array element '" + t + "'");
        out.push_back(v);
      }
      return out;
    }
    double v = 0.0;
    if (!ParseNumber(raw, &v)) Fail(line, "invalid value '" + raw + "'");
    return v;
  }

  std::vector<Block> Parse(std::string_view text) const {
    std::vector<Block> blocks(1);  // unnamed leading block
    std::istringstream in{std::string(text)};
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
      ++line;
      const std::string s = Trim(StripComment(raw));
      if (s.empty()) continue;
      if (s.rfind("[[", 0) == 0) {
        if (s.size() < 5 || s.substr(s.size() - 2) != "]]") {
          Fail(line, "malformed table header");
        }
        blocks.push_back({Trim(s.substr(2, s.size() - 4)), line, {}, true});
        continue;
      }
      if (s.front() == '[') {
        if (s.back() != ']') Fail(line, "malformed section header");
        blocks.push_back({Trim(s.substr(1, s.size() - 2)), line, {}});
        continue;
      }
      const size_t eq = s.find('=');
      if (eq == std::string::npos) Fail(line, "expected 'key = value'");
      const std::string key = Trim(s.substr(0, eq));
      if (key.empty()) Fail(line, "empty key");
      Block& block = blocks.back();
      if (block.entries.count(key)) Fail(line, "duplicate key '" + key + "'");
      block.entries[key] = {ParseValue(Trim(s.substr(eq + 1)), line), line};
    }
    return blocks;
  }

 private:
  std::string origin_;
};

// Typed, checked access to the keys of one block.
class Reader {
 public:
  Reader(const Parser& parser, const Block& block)
      : parser_(parser), block_(block) {}

  ~Reader() = default;

  // Reports keys that no getter asked for.
  void Finish() const {
    for (const auto& [key, entry] : block_.entries) {
      if (!used_.count(key)) {
        parser_.Fail(entry.line, "unknown key '" + key + "' in [" +
                                     block_.name + "]");
      }
    }
  }

  void Number(const std::string& key, double* out) {
    if (const Entry* e = Find(key)) {
      if (!std::holds_alternative<double>(e->value)) {
        parser_.Fail(e->line, "key '" + key + "' expects a number");
      }
      *out = std::get<double>(e->value);
    }
  }

  void Integer(const std::string& key, int* out) {
    double v = *out;
    Number(key, &v);
    CheckInteger(key, v);
    *out = static_cast<int>(v);
  }

  void Integer64(const std::string& key, std::int64_t* out) {
    double v = static_cast<double>(*out);
    Number(key, &v);
    CheckInteger(key, v);
    *out = static_cast<std::int64_t>(v);
  }

  void Seed(const std::string& key, std::uint64_t* out) {
    double v = static_cast<double>(*out);
    Number(key, &v);
    CheckInteger(key, v);
    if (v < 0) parser_.Fail(Line(key), "key '" + key + "' must be >= 0");
    *out = static_cast<std::uint64_t>(v);
  }

  void Bool(const std::string& key, bool* out) {
    if (const Entry* e = Find(key)) {
      if (!std::holds_alternative<bool>(e->value)) {
        parser_.Fail(e->line, "key '" + key + "' expects true or false");
      }
      *out = std::get<bool>(e->value);
    }
  }

  void String(const std::string& key, std::string* out) {
    if (const Entry* e = Find(key)) {
      if (!std::holds_alternative<std::string>(e->value)) {
        parser_.Fail(e->line, "key '" + key + "' expects a quoted string");
      }
      *out = std::get<std::string>(e->value);
    }
  }

  void List(const std::string& key, std::vector<double>* out) {
    if (const Entry* e = Find(key)) {
      if (!std::holds_alternative<Array>(e->value)) {
        parser_.Fail(e->line, "key '" + key + "' expects an array");
      }
      *out = std::get<Array>(e->value);
    }
  }

  void IntList(const std::string& key, std::vector<int>* out) {
    std::vector<double> v(out->begin(), out->end());
    List(key, &v);
    out->clear();
    for (double d : v) {
      CheckInteger(key, d);
      out->push_back(static_cast<int>(d));
    }
  }

  template <int Size>
  void Vector(const std::string& key, Eigen::Matrix<double, Size, 1>* out) {
    if (const Entry* e = Find(key)) {
      std::vector<double> v;
      List(key, &v);
      if (static_cast<int>(v.size()) != Size) {
        parser_.Fail(e->line, "key '" + key + "' expects " +
                                  std::to_string(Size) + " numbers");
      }
      for (int i = 0; i < Size; ++i) (*out)(i) = v[i];
    }
  }

  void Require(const std::string& key) const {
    if (!block_.entries.count(key)) {
      parser_.Fail(block_.line, "missing required key '" + key + "' in [" +
                                    block_.name + "]");
    }
  }

  int Line(const std::string& key) const {
    auto it = block_.entries.find(key);
    return it == block_.entries.end() ? block_.line : it->second.line;
  }

 private:
  const Entry* Find(const std::string& key) {
    used_.insert(key);
    auto it = block_.entries.find(key);
    return it == block_.entries.end() ? nullptr : &it->second;
  }

  void CheckInteger(const std::string& key, double v) const {
    if (v != std::floor(v)) {
      parser_.Fail(Line(key), "key '" + key + "' expects an integer");
    }
  }

  const Parser& parser_;
  const Block& block_;
  std::set<std::string> used_;
};

void ReadWorld(Reader& r, WorldParams* w) {
  r.Number("mass", &w->mass);
  r.Number("gravity", &w->gravity);
  r.Number("com_height", &w->com_height);
}

void ReadMpc(Reader& r, MpcConfig* m) {
  r.Integer("horizon_steps", &m->horizon_steps);
  r.Number("dt", &m->dt);
  r.Number("polygon_scale", &m->polygon_scale);
  r.Number("capture_scale", &m->capture_scale);
  r.Vector("foot_half_extents", &m->foot_half_extents);
  r.Number("w_jerk", &m->weights.jerk);
  r.Number("w_vel", &m->weights.velocity);
  r.Number("w_zmp", &m->weights.zmp);
  r.Number("w_slack", &m->weights.slack);
  r.Number("w_foot", &m->weights.foot);
  r.Number("step_x_max", &m->step_x_max);
  r.Number("step_y_min", &m->step_y_min);
  r.Number("step_y_max", &m->step_y_max);
  r.Number("nominal_width", &m->nominal_width);
  r.Vector("ref_velocity", &m->ref_velocity);
  r.Number("slack_eps", &m->slack_eps);
}

Foot ParseFoot(const Parser& p, Reader& r, const std::string& key, Foot def) {
  std::string s = def == Foot::kLeft ? "left" : "right";
  r.String(key, &s);
  if (s == "left") return Foot::kLeft;
  if (s == "right") return Foot::kRight;
  p.Fail(r.Line(key), "key '" + key + "' must be \"left\" or \"right\"");
}

void ReadGait(const Parser& p, Reader& r, GaitSchedule* g) {
  r.Number("ss_duration", &g->ss_duration);
  r.Number("ds_duration", &g->ds_duration);
  r.Number("initial_ds_duration", &g->initial_ds_duration);
  r.Bool("walking", &g->walking);
  g->first_support = ParseFoot(p, r, "first_support", g->first_support);
  r.Vector("left_foot", &g->left_foot);
  r.Vector("right_foot", &g->right_foot);
}

void ReadContactQp(const Parser& p, Reader& r, ContactSettings* c) {
  r.Number("kappa", &c->kappa);
  r.Vector("s_z_bounds", &c->s_z_bounds);
  r.Number("f_z_lower", &c->f_z_lower);
  r.Number("f_z_upper", &c->f_z_upper);
  std::string sign = c->sign == BilinearSign::kFlipped ? "flipped"
                                                       : "substitution";
  r.String("bilinear_sign", &sign);
  if (sign == "substitution") {
    c->sign = BilinearSign::kSubstitution;
  } else if (sign == "flipped") {
    c->sign = BilinearSign::kFlipped;
  } else {
    p.Fail(r.Line("bilinear_sign"),
           "bilinear_sign must be \"substitution\" or \"flipped\"");
  }
}

void ReadHand(Reader& r, HandParams* h) {
  r.Number("speed", &h->speed);
  r.Number("reach_radius", &h->reach_radius);
  r.Number("attach_tol", &h->attach_tol);
  r.Number("release_hold", &h->release_hold);
  r.Vector("shoulder_offset", &h->shoulder_offset);
  r.Vector("rest_offset", &h->rest_offset);
}

void ReadSim(Reader& r, Scenario* s) {
  r.Number("plant_dt", &s->plant_dt);
  r.Number("duration", &s->duration);
  r.Seed("seed", &s->seed);
  r.Vector("initial_c", &s->initial.c);
  r.Vector("initial_c_dot", &s->initial.c_dot);
}

void ReadWall(Reader& r, WallSpec* w) {
  r.Require("y");
  r.Number("y", &w->y);
  r.Number("standoff", &w->standoff);
  r.List("xs", &w->xs);
  r.List("zs", &w->zs);
  r.Number("mu", &w->mu);
  r.Number("f_n_max", &w->f_n_max);
}

void ReadSweep(Reader& r, SweepConfig* s) {
  r.Integer64("samples", &s->samples);
  r.List("mu_values", &s->mu_values);
  r.Integer("dz_points", &s->dz_points);
  r.Number("dz_range", &s->dz_range);
  r.Number("accel_range", &s->accel_range);
  r.Vector("contact_position", &s->contact_position);
  r.Number("f_n_max", &s->f_n_max);
}

void ReadBench(Reader& r, BenchConfig* b) {
  r.IntList("horizons", &b->horizons);
  r.IntList("contact_counts", &b->contact_counts);
  r.Integer("repetitions", &b->repetitions);
  r.Integer("in_contact_repetitions", &b->in_contact_repetitions);
}

void ReadMaxPush(Reader& r, MaxPushConfig* m) {
  r.List("wall_y", &m->wall_y);
  r.Integer("phases", &m->phases);
  r.Number("cycle_start", &m->cycle_start);
  r.Number("push_duration", &m->push_duration);
  r.Number("push_direction_y", &m->push_direction_y);
  r.Number("recovery_time", &m->recovery_time);
  r.Number("resolution", &m->resolution);
  r.Number("max_impulse", &m->max_impulse);
}

}  // namespace

ConfigError::ConfigError(const std::string& origin, int line,
                         const std::string& what)
    : std::runtime_error(origin + ":" + std::to_string(line) + ": " + what),
      line_(line) {}

void add_wall(const WallSpec& wall, Scenario* scenario) {
  int id = 0;
  for (const ContactPoint& c : scenario->contacts) id = std::max(id, c.id + 1);
  for (double x : wall.xs) {
    for (double z : wall.zs) {
      scenario->contacts.push_back(ContactPoint::FromNormal(
          Vec3(x, wall.y, z), Vec3(0.0, -1.0, 0.0), wall.mu, wall.f_n_max,
          id++));
    }
  }
  scenario->mpc.exclusions.push_back(
      {Vec2(0.0, 1.0), wall.y - wall.standoff});
}

ExperimentConfig parse_config(std::string_view text, const std::string& origin) {
  const Parser parser(origin);
  const std::vector<Block> blocks = parser.Parse(text);
  ExperimentConfig cfg;
  Scenario& sc = cfg.scenario;
  if (!blocks.front().entries.empty()) {
    parser.Fail(blocks.front().entries.begin()->second.line,
                "key outside of any section");
  }
  std::set<std::string> seen;
  const std::set<std::string> tables{"contact", "push", "exclusion"};
  for (size_t i = 1; i < blocks.size(); ++i) {
    const Block& b = blocks[i];
    if (b.table && !tables.count(b.name)) {
      parser.Fail(b.line, "[" + b.name + "] is not a repeatable table");
    }
    if (!b.table && tables.count(b.name)) {
      parser.Fail(b.line, "table [" + b.name + "] must be written [[" +
                              b.name + "]]");
    }
    if (!tables.count(b.name)) {
      if (!seen.insert(b.name).second) {
        parser.Fail(b.line, "duplicate section [" + b.name + "]");
      }
    }
    Reader r(parser, b);
    if (b.name == "world") {
      ReadWorld(r, &sc.mpc.world);
    } else if (b.name == "mpc") {
      ReadMpc(r, &sc.mpc);
    } else if (b.name == "gait") {
      ReadGait(parser, r, &sc.gait);
    } else if (b.name == "contact_qp") {
      ReadContactQp(parser, r, &sc.contact);
    } else if (b.name == "hand") {
      ReadHand(r, &sc.hand);
    } else if (b.name == "tracking") {
      r.Number("time_constant", &sc.tracking.time_constant);
      r.Number("noise", &sc.tracking.noise);
    } else if (b.name == "fall") {
      r.Number("margin", &sc.fall.margin);
      r.Number("window", &sc.fall.window);
      r.Number("radius", &sc.fall.radius);
    } else if (b.name == "sim") {
      ReadSim(r, &sc);
    } else if (b.name == "wall") {
      cfg.wall.emplace();
      ReadWall(r, &*cfg.wall);
    } else if (b.name == "sweep") {
      ReadSweep(r, &cfg.sweep);
    } else if (b.name == "bench") {
      ReadBench(r, &cfg.bench);
    } else if (b.name == "maxpush") {
      ReadMaxPush(r, &cfg.maxpush);
    } else if (b.name == "contact") {
      for (const char* k : {"position", "normal"}) r.Require(k);
      Vec3 pos = Vec3::Zero();
      Vec3 normal = Vec3::Zero();
      double mu = 1.0;
      double f_n_max = 200.0;
      int id = static_cast<int>(sc.contacts.size());
      r.Vector("position", &pos);
      r.Vector("normal", &normal);
      r.Number("mu", &mu);
      r.Number("f_n_max", &f_n_max);
      r.Integer("id", &id);
      if (!(normal.norm() > 0.0)) parser.Fail(r.Line("normal"), "zero normal");
      try {
        sc.contacts.push_back(
            ContactPoint::FromNormal(pos, normal.normalized(), mu, f_n_max, id));
        sc.contacts.back().Validate();
      } catch (const std::exception& e) {
        parser.Fail(b.line, std::string("invalid contact: ") + e.what());
      }
    } else if (b.name == "push") {
      for (const char* k : {"time", "impulse"}) r.Require(k);
      Push p;
      r.Number("time", &p.time);
      r.Vector("impulse", &p.impulse);
      r.Number("duration", &p.duration);
      sc.pushes.push_back(p);
    } else if (b.name == "exclusion") {
      for (const char* k : {"normal", "offset"}) r.Require(k);
      HalfPlane h;
      r.Vector("normal", &h.normal);
      r.Number("offset", &h.offset);
      sc.mpc.exclusions.push_back(h);
    } else {
      parser.Fail(b.line, "unknown section [" + b.name + "]");
    }
    r.Finish();
  }
  sc.initial.c_ddot.setZero();
  sc.mpc.world.dt = sc.mpc.dt;
  sc.contact.world = sc.mpc.world;
  // Cross-field validation reported against the whole file.
  try {
    build_scenario(cfg).Validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    parser.Fail(0, std::string("invalid configuration: ") + e.what());
  }
  if (cfg.sweep.samples < 1) parser.Fail(0, "sweep samples must be >= 1");
  if (cfg.sweep.mu_values.empty() || cfg.sweep.dz_points < 1) {
    parser.Fail(0, "sweep grid must be non-empty");
  }
  if (cfg.bench.horizons.empty() || cfg.bench.contact_counts.empty() ||
      cfg.bench.repetitions < 1) {
    parser.Fail(0, "bench grid must be non-empty");
  }
  if (cfg.maxpush.wall_y.empty() || cfg.maxpush.phases < 1 ||
      !(cfg.maxpush.resolution > 0.0) ||
      !(cfg.maxpush.max_impulse > cfg.maxpush.resolution)) {
    parser.Fail(0, "maxpush search settings are invalid");
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), 0, "cannot open file");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

Scenario build_scenario(const ExperimentConfig& config) {
  Scenario s = config.scenario;
  if (config.wall) add_wall(*config.wall, &s);
  return s;
}

}  // namespace hcmpc
