#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <random>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "case_detail.hpp"
#include "text_util.hpp"
#include "vadose/driver.hpp"

namespace vadose {

namespace detail_case {

const char* const kSideNames[6] = {"x_min", "x_max", "y_min",
                                   "y_max", "z_min", "z_max"};

int side_of_name(std::string_view s) {
  for (int d = 0; d < 6; ++d)
    if (s == kSideNames[d]) return d;
  return -1;
}

std::pair<int, int> transverse(int axis) {
  return {axis == 0 ? 1 : 0, axis == 2 ? 1 : 2};
}

std::vector<std::string> zone_errors(const GridSpec& g,
                                     const std::vector<ZoneSpec>& zones,
                                     std::vector<int>* paint) {
  std::vector<std::string> errs;
  if (zones.empty()) {
    errs.push_back("at least one soil zone is required");
    return errs;
  }
  const std::array<int, 3> n{g.nx, g.ny, g.nz};
  for (std::size_t z = 0; z < zones.size(); ++z)
    for (int a = 0; a < 3; ++a)
      if (zones[z].lo[a] < 0 || zones[z].lo[a] >= zones[z].hi[a] ||
          zones[z].hi[a] > n[a]) {
        errs.push_back("zone " + std::to_string(z) +
                       " extent is empty or leaves the grid");
        break;
      }
  if (!errs.empty()) return errs;

  std::vector<int> map(std::size_t(n[0]) * n[1] * std::size_t(n[2]), -1);
  bool overlap_seen = false;
  for (std::size_t z = 0; z < zones.size(); ++z) {
    const ZoneSpec& zs = zones[z];
    for (int k = zs.lo[2]; k < zs.hi[2]; ++k)
      for (int j = zs.lo[1]; j < zs.hi[1]; ++j)
        for (int i = zs.lo[0]; i < zs.hi[0]; ++i) {
          int& cell = map[std::size_t(i) +
                          std::size_t(n[0]) * (j + std::size_t(n[1]) * k)];
          if (cell >= 0) {
            if (!overlap_seen)
              errs.push_back("zone " + std::to_string(z) + " and zone " +
                             std::to_string(cell) + " both cover cell (" +
                             std::to_string(i) + ", " + std::to_string(j) +
                             ", " + std::to_string(k) + ")");
            overlap_seen = true;
          } else {
            cell = int(z);
          }
        }
  }
  std::int64_t uncovered = 0;
  std::int64_t first = -1;
  for (std::size_t c = 0; c < map.size(); ++c)
    if (map[c] < 0) {
      if (first < 0) first = std::int64_t(c);
      ++uncovered;
    }
  if (uncovered > 0) {
    const int i = int(first % n[0]);
    const int j = int((first / n[0]) % n[1]);
    const int k = int(first / n[0] / n[1]);
    errs.push_back("zones leave " + std::to_string(uncovered) +
                   " cells unassigned (first at (" + std::to_string(i) + ", " +
                   std::to_string(j) + ", " + std::to_string(k) + "))");
  }
  if (errs.empty() && paint) *paint = std::move(map);
  return errs;
}

std::vector<std::string> patch_errors(const GridSpec& g,
                                      const std::vector<Patch>& patches,
                                      std::size_t series_count) {
  std::vector<std::string> errs;
  const std::array<int, 3> n{g.nx, g.ny, g.nz};
  std::vector<bool> range_ok(patches.size(), true);
  for (std::size_t p = 0; p < patches.size(); ++p) {
    const Patch& pa = patches[p];
    if (pa.dir < 0 || pa.dir >= 6) {
      errs.push_back("patch " + std::to_string(p) + " has an invalid side");
      range_ok[p] = false;
      continue;
    }
    const auto [u, w] = transverse(pa.dir / 2);
    if (pa.lo[0] < 0 || pa.lo[0] >= pa.hi[0] || pa.hi[0] > n[u] ||
        pa.lo[1] < 0 || pa.lo[1] >= pa.hi[1] || pa.hi[1] > n[w]) {
      errs.push_back("patch " + std::to_string(p) +
                     " range is empty or leaves side " + kSideNames[pa.dir]);
      range_ok[p] = false;
    }
    if (std::holds_alternative<FreeDrainage>(pa.bc) &&
        pa.dir != 2 * g.gravity_axis)
      errs.push_back("patch " + std::to_string(p) + " puts free_drainage on " +
                     kSideNames[pa.dir] +
                     "; it applies only to the gravity-low face (" +
                     kSideNames[2 * g.gravity_axis] + ")");
    if (const auto* sf = std::get_if<SeriesFlux>(&pa.bc))
      if (sf->series < 0 || std::size_t(sf->series) >= series_count)
        errs.push_back("patch " + std::to_string(p) +
                       " references series file " + std::to_string(sf->series) +
                       " but the case lists " + std::to_string(series_count));
  }
  for (int dir = 0; dir < 6; ++dir) {
    const auto [u, w] = transverse(dir / 2);
    std::vector<int> face(static_cast<std::size_t>(n[u]) * n[w], -1);
    bool side_ok = true;
    bool overlap_seen = false;
    for (std::size_t p = 0; p < patches.size(); ++p) {
      if (patches[p].dir != dir) continue;
      if (!range_ok[p]) {
        side_ok = false;
        continue;
      }
      const Patch& pa = patches[p];
      for (int b = pa.lo[1]; b < pa.hi[1]; ++b)
        for (int a = pa.lo[0]; a < pa.hi[0]; ++a) {
          int& cell = face[std::size_t(a) + std::size_t(n[u]) * b];
          if (cell >= 0) {
            if (!overlap_seen)
              errs.push_back("patches " + std::to_string(cell) + " and " +
                             std::to_string(p) + " overlap on side " +
                             kSideNames[dir] + " at (" + std::to_string(a) +
                             ", " + std::to_string(b) + ")");
            overlap_seen = true;
          } else {
            cell = int(p);
          }
        }
    }
    if (!side_ok) continue;
    std::int64_t uncovered = 0;
    std::int64_t first = -1;
    for (std::size_t c = 0; c < face.size(); ++c)
      if (face[c] < 0) {
        if (first < 0) first = std::int64_t(c);
        ++uncovered;
      }
    if (uncovered > 0)
      errs.push_back("side " + std::string(kSideNames[dir]) + " has " +
                     std::to_string(uncovered) + " uncovered faces (first at (" +
                     std::to_string(first % n[u]) + ", " +
                     std::to_string(first / n[u]) + "))");
  }
  return errs;
}

}  // namespace detail_case

namespace {

using namespace text;
using detail_case::kSideNames;

struct Entry {
  int line = 0;
  std::string key;
  std::string value;
  bool used = false;
};

// All `key = value` lines of a case file, with duplicate and syntax
// diagnostics. find() is idempotent; the used flags feed the unknown-key
// sweep.
class KeyTable {
 public:
  KeyTable(const std::string& t, std::vector<std::string>& errs) {
    std::size_t pos = 0;
    int line = 0;
    while (pos < t.size()) {
      std::size_t nl = t.find('\n', pos);
      if (nl == std::string::npos) nl = t.size();
      std::string_view raw(t.data() + pos, nl - pos);
      pos = nl + 1;
      ++line;
      raw = raw.substr(0, raw.find('#'));
      const std::string_view body = trim(raw);
      if (body.empty()) continue;
      const auto eq = body.find('=');
      if (eq == std::string_view::npos) {
        errs.push_back("line " + std::to_string(line) +
                       ": expected 'key = value'");
        continue;
      }
      Entry e{line, std::string(trim(body.substr(0, eq))),
              std::string(trim(body.substr(eq + 1))), false};
      if (e.key.empty()) {
        errs.push_back("line " + std::to_string(line) +
                       ": missing key before '='");
        continue;
      }
      const auto it = index_.find(e.key);
      if (it != index_.end()) {
        errs.push_back("line " + std::to_string(line) + ": duplicate key '" +
                       e.key + "' (first set at line " +
                       std::to_string(entries_[it->second].line) + ")");
        continue;
      }
      index_.emplace(e.key, entries_.size());
      entries_.push_back(std::move(e));
    }
  }

  Entry* find(const std::string& key) {
    const auto it = index_.find(key);
    if (it == index_.end()) return nullptr;
    Entry& e = entries_[it->second];
    e.used = true;
    return &e;
  }

  void flag_unused(std::vector<std::string>& errs) const {
    for (const Entry& e : entries_)
      if (!e.used)
        errs.push_back("line " + std::to_string(e.line) + ": unknown key '" +
                       e.key + "'");
  }

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Typed reads over a KeyTable. Getters record a diagnostic and return
// nullptr when a key is malformed (or missing while required); optional
// absent keys leave the output untouched.
struct Fields {
  KeyTable& tab;
  std::vector<std::string>& errs;

  void fail(const Entry* e, const std::string& m) {
    errs.push_back(e ? "line " + std::to_string(e->line) + ": " + m
                     : "case: " + m);
  }

  Entry* presence(const std::string& key, bool required) {
    Entry* e = tab.find(key);
    if (!e && required)
      errs.push_back("case: missing required key '" + key + "'");
    return e;
  }

  Entry* read_double(const std::string& key, double& out, bool required) {
    Entry* e = presence(key, required);
    if (!e) return nullptr;
    if (!to_double(e->value, out)) {
      fail(e, "'" + key + "' expects a finite number, got '" + e->value + "'");
      return nullptr;
    }
    return e;
  }

  Entry* read_pos(const std::string& key, double& out, bool required) {
    Entry* e = read_double(key, out, required);
    if (e && !(out > 0)) {
      fail(e, "'" + key + "' must be positive");
      return nullptr;
    }
    return e;
  }

  Entry* read_int(const std::string& key, int& out, bool required) {
    Entry* e = presence(key, required);
    if (!e) return nullptr;
    if (!to_int(e->value, out)) {
      fail(e, "'" + key + "' expects an integer, got '" + e->value + "'");
      return nullptr;
    }
    return e;
  }

  Entry* read_u64(const std::string& key, std::uint64_t& out) {
    Entry* e = presence(key, false);
    if (!e) return nullptr;
    if (!to_u64(e->value, out)) {
      fail(e, "'" + key + "' expects a nonnegative integer");
      return nullptr;
    }
    return e;
  }

  Entry* read_string(const std::string& key, std::string& out, bool required) {
    Entry* e = presence(key, required);
    if (!e) return nullptr;
    if (e->value.empty()) {
      fail(e, "'" + key + "' expects a value");
      return nullptr;
    }
    out = e->value;
    return e;
  }

  Entry* read_bool(const std::string& key, bool& out) {
    Entry* e = presence(key, false);
    if (!e) return nullptr;
    if (e->value == "true") {
      out = true;
    } else if (e->value == "false") {
      out = false;
    } else {
      fail(e, "'" + key + "' expects true or false");
      return nullptr;
    }
    return e;
  }

  Entry* read_ints(const std::string& key, std::span<int> out, bool required) {
    Entry* e = presence(key, required);
    if (!e) return nullptr;
    const auto parts = split_ws(e->value);
    if (parts.size() != out.size()) {
      fail(e, "'" + key + "' expects " + std::to_string(out.size()) +
                  " integers");
      return nullptr;
    }
    for (std::size_t i = 0; i < out.size(); ++i)
      if (!to_int(parts[i], out[i])) {
        fail(e, "'" + key + "' expects integers, got '" + e->value + "'");
        return nullptr;
      }
    return e;
  }

  // Marks keys that only apply to another declaration variant, erroring on
  // any that are present.
  void reject(const std::string& base, std::initializer_list<const char*> keys,
              const std::string& what) {
    for (const char* k : keys)
      if (Entry* e = tab.find(base + k))
        fail(e, "'" + base + k + "' does not apply to " + what);
  }

  // Silently consumes keys so a broken enclosing declaration does not also
  // flood the diagnostics with unknown-key noise.
  void swallow(const std::string& base,
               std::initializer_list<const char*> keys) {
    for (const char* k : keys) tab.find(base + k);
  }
};

}  // namespace

CaseSpec parse_case(const std::string& textin) {
  std::vector<std::string> errs;
  KeyTable tab(textin, errs);
  Fields f{tab, errs};
  CaseSpec s;

  bool grid_ok = true;
  const auto dim = [&](const char* key, int& out) {
    Entry* e = f.read_int(key, out, true);
    if (!e) return false;
    if (out < 1) {
      f.fail(e, std::string(key) + " must be at least 1");
      return false;
    }
    return true;
  };
  grid_ok &= dim("grid.nx", s.grid.nx);
  grid_ok &= dim("grid.ny", s.grid.ny);
  grid_ok &= dim("grid.nz", s.grid.nz);
  grid_ok &= f.read_pos("grid.dx", s.grid.dx, true) != nullptr;
  grid_ok &= f.read_pos("grid.dy", s.grid.dy, true) != nullptr;
  grid_ok &= f.read_pos("grid.dz", s.grid.dz, true) != nullptr;
  if (Entry* e = tab.find("grid.origin")) {
    const auto parts = split_ws(e->value);
    std::array<double, 3> o{};
    bool ok = parts.size() == 3;
    for (std::size_t i = 0; ok && i < 3; ++i) ok = to_double(parts[i], o[i]);
    if (!ok) {
      f.fail(e, "'grid.origin' expects three numbers");
    } else {
      s.grid.origin = o;
      s.grid.origin_set = true;
    }
  }
  std::string axis;
  if (Entry* e = f.read_string("grid.gravity_axis", axis, false)) {
    if (axis == "x")
      s.grid.gravity_axis = 0;
    else if (axis == "y")
      s.grid.gravity_axis = 1;
    else if (axis == "z")
      s.grid.gravity_axis = 2;
    else
      f.fail(e, "grid.gravity_axis must be x, y, or z");
  }
  const auto read_slope = [&](const char* key, double& out) {
    if (Entry* e = f.read_double(key, out, false)) {
      if (!(std::abs(out) < 90))
        f.fail(e, std::string(key) + " must lie inside (-90, 90)");
      else if (out != 0 && s.grid.gravity_axis != 2)
        f.fail(e, std::string(key) + " requires gravity_axis = z");
    }
  };
  read_slope("grid.slope_deg", s.grid.slope_deg);
  read_slope("grid.cross_slope_deg", s.grid.cross_slope_deg);

  int zone_count = 1;
  if (Entry* e = f.read_int("soil.zone_count", zone_count, false))
    if (zone_count < 1) {
      f.fail(e, "soil.zone_count must be at least 1");
      zone_count = 0;
    }
  bool zones_geo_ok = grid_ok && zone_count >= 1;
  for (int i = 0; i < zone_count; ++i) {
    const std::string z = "zone" + std::to_string(i);
    ZoneSpec zs;
    std::string model;
    Entry* em = f.read_string(z + ".model", model, true);
    if (em && model != "van_genuchten" && model != "gardner") {
      f.fail(em, z + ".model must be van_genuchten or gardner");
      em = nullptr;
    }
    double Ks = 0, alpha = 0, stor = 1e-5;
    f.read_pos(z + ".Ks", Ks, true);
    f.read_pos(z + ".alpha", alpha, true);
    f.read_pos(z + ".storativity", stor, false);
    if (em && model == "van_genuchten") {
      double n = 0, ts = 0, tr = 0;
      if (Entry* e = f.read_double(z + ".n", n, true))
        if (!(n > 1)) f.fail(e, z + ".n must exceed 1");
      Entry* es = f.read_double(z + ".theta_s", ts, true);
      if (es && !(ts > 0 && ts <= 1)) {
        f.fail(es, z + ".theta_s must lie in (0, 1]");
        es = nullptr;
      }
      Entry* er = f.read_double(z + ".theta_r", tr, true);
      if (er && !(tr >= 0)) {
        f.fail(er, z + ".theta_r must be nonnegative");
        er = nullptr;
      }
      if (es && er && !(tr < ts))
        f.fail(er, z + ".theta_r must stay below " + z + ".theta_s");
      zs.model = VanGenuchten{Ks, alpha, n, ts, tr, stor};
    } else if (em) {
      f.reject(z, {".n", ".theta_s", ".theta_r"}, "a gardner zone");
      zs.model = Gardner{Ks, alpha, stor};
    } else {
      f.swallow(z, {".n", ".theta_s", ".theta_r"});
    }
    const bool has_box = tab.find(z + ".box") != nullptr;
    const bool has_kr = tab.find(z + ".k_range") != nullptr;
    if (has_box && has_kr)
      f.fail(tab.find(z + ".k_range"),
             z + " gives both box and k_range; use one");
    if (has_box) {
      std::array<int, 6> b{};
      if (f.read_ints(z + ".box", b, false)) {
        zs.lo = {b[0], b[1], b[2]};
        zs.hi = {b[3], b[4], b[5]};
      } else {
        zones_geo_ok = false;
      }
    } else if (has_kr) {
      std::array<int, 2> kr{};
      if (f.read_ints(z + ".k_range", kr, false)) {
        zs.lo = {0, 0, kr[0]};
        zs.hi = {s.grid.nx, s.grid.ny, kr[1]};
      } else {
        zones_geo_ok = false;
      }
    } else if (zone_count == 1) {
      zs.lo = {0, 0, 0};
      zs.hi = {s.grid.nx, s.grid.ny, s.grid.nz};
    } else {
      f.fail(em, z + " needs a box or k_range when several zones exist");
      zones_geo_ok = false;
    }
    s.zones.push_back(zs);
  }
  if (zones_geo_ok)
    for (const std::string& m :
         detail_case::zone_errors(s.grid, s.zones, nullptr))
      errs.push_back("case: " + m);

  std::string mode;
  if (Entry* e = f.read_string("init.mode", mode, true)) {
    if (mode == "uniform") {
      s.init_mode = InitMode::Uniform;
      f.read_double("init.h", s.init_value, true);
      f.reject("init", {".water_table", ".file"}, "uniform initial conditions");
    } else if (mode == "hydrostatic") {
      s.init_mode = InitMode::Hydrostatic;
      f.read_double("init.water_table", s.init_value, true);
      f.reject("init", {".h", ".file"}, "hydrostatic initial conditions");
    } else if (mode == "file") {
      s.init_mode = InitMode::File;
      f.read_string("init.file", s.init_file, true);
      f.reject("init", {".h", ".water_table"}, "file initial conditions");
    } else {
      f.fail(e, "init.mode must be uniform, hydrostatic, or file");
      f.swallow("init", {".h", ".water_table", ".file"});
    }
  } else {
    f.swallow("init", {".h", ".water_table", ".file"});
  }

  int patch_count = 0;
  Entry* epc = f.read_int("patch.count", patch_count, true);
  if (epc && patch_count < 1) {
    f.fail(epc, "patch.count must be at least 1 (no-flow sides are explicit)");
    epc = nullptr;
  }
  if (!epc) patch_count = 0;
  bool patches_geo_ok = grid_ok && patch_count >= 1;
  std::set<std::string> seen_names;
  for (int j = 0; j < patch_count; ++j) {
    const std::string q = "patch" + std::to_string(j);
    Patch pa;
    if (Entry* e = f.read_string(q + ".name", pa.name, false)) {
      if (!seen_names.insert(pa.name).second)
        f.fail(e, "duplicate patch name '" + pa.name + "'");
    }
    std::string side;
    Entry* es = f.read_string(q + ".side", side, true);
    if (es) {
      pa.dir = detail_case::side_of_name(side);
      if (pa.dir < 0) {
        f.fail(es, q + ".side must be one of x_min, x_max, y_min, y_max, "
                       "z_min, z_max");
        es = nullptr;
        pa.dir = 0;
      }
    }
    if (!es) patches_geo_ok = false;
    if (tab.find(q + ".range") != nullptr) {
      std::array<int, 4> r{};
      if (f.read_ints(q + ".range", r, false)) {
        pa.lo = {r[0], r[1]};
        pa.hi = {r[2], r[3]};
      } else {
        patches_geo_ok = false;
      }
    } else if (es && grid_ok) {
      const auto [u, w] = detail_case::transverse(pa.dir / 2);
      const std::array<int, 3> n{s.grid.nx, s.grid.ny, s.grid.nz};
      pa.lo = {0, 0};
      pa.hi = {n[u], n[w]};
    }
    std::string type;
    if (Entry* et = f.read_string(q + ".type", type, true)) {
      if (type == "dirichlet") {
        double h = 0;
        f.read_double(q + ".h", h, true);
        pa.bc = Dirichlet{h};
        f.reject(q, {".q", ".file"}, "a dirichlet patch");
      } else if (type == "flux") {
        double qv = 0;
        f.read_double(q + ".q", qv, true);
        pa.bc = NeumannFlux{qv};
        f.reject(q, {".h", ".file"}, "a flux patch");
      } else if (type == "free_drainage") {
        pa.bc = FreeDrainage{};
        f.reject(q, {".h", ".q", ".file"}, "a free_drainage patch");
      } else if (type == "series") {
        std::string file;
        if (f.read_string(q + ".file", file, true)) {
          const auto it =
              std::find(s.series_files.begin(), s.series_files.end(), file);
          int idx = int(it - s.series_files.begin());
          if (it == s.series_files.end()) s.series_files.push_back(file);
          pa.bc = SeriesFlux{idx};
        }
        f.reject(q, {".h", ".q"}, "a series patch");
      } else {
        f.fail(et, q + ".type must be dirichlet, flux, free_drainage, or "
                       "series");
        f.swallow(q, {".h", ".q", ".file"});
      }
    } else {
      f.swallow(q, {".h", ".q", ".file"});
    }
    s.patches.push_back(pa);
  }
  if (patches_geo_ok)
    for (const std::string& m : detail_case::patch_errors(
             s.grid, s.patches, s.series_files.size()))
      errs.push_back("case: " + m);

  f.read_pos("time.t_end", s.t_end, true);
  Entry* edi = f.read_pos("time.dt_init", s.time.dt_init, true);
  Entry* edx = f.read_pos("time.dt_max", s.time.dt_max, true);
  if (edi && edx && s.time.dt_init > s.time.dt_max)
    f.fail(edx, "time.dt_max must be at least time.dt_init");
  Entry* edm = f.read_pos("time.dt_min", s.time.dt_min, false);
  if (edi && s.time.dt_min > s.time.dt_init)
    f.fail(edm ? edm : edi,
           "time.dt_init must be at least time.dt_min (default 0.001)");
  if (Entry* e = f.read_double("time.grow_factor", s.time.grow_factor, false))
    if (!(s.time.grow_factor > 1)) f.fail(e, "time.grow_factor must exceed 1");
  if (Entry* e =
          f.read_int("time.quick_threshold", s.time.quick_iters_threshold,
                     false))
    if (s.time.quick_iters_threshold < 1)
      f.fail(e, "time.quick_threshold must be at least 1");
  if (Entry* e = f.read_int("time.streak", s.time.streak_needed, false))
    if (s.time.streak_needed < 1) f.fail(e, "time.streak must be at least 1");
  s.time.dt = s.time.dt_init;

  Entry* etp = f.read_pos("solver.tol_picard", s.picard.tol_picard, false);
  Entry* etg = f.read_pos("solver.pcg_tol", s.picard.pcg_tol, false);
  if (!(s.picard.pcg_tol < s.picard.tol_picard))
    f.fail(etg ? etg : etp, "solver.pcg_tol must stay below solver.tol_picard");
  if (Entry* e =
          f.read_int("solver.max_picard", s.picard.max_picard_iters, false))
    if (s.picard.max_picard_iters < 1)
      f.fail(e, "solver.max_picard must be at least 1");
  if (Entry* e =
          f.read_int("solver.pcg_max_iter", s.picard.pcg_max_iter, false))
    if (s.picard.pcg_max_iter < 1)
      f.fail(e, "solver.pcg_max_iter must be at least 1");

  f.read_string("output.dir", s.output_dir, false);
  if (Entry* e =
          f.read_double("output.snapshot_interval", s.snapshot_interval, false))
    if (!(s.snapshot_interval >= 0))
      f.fail(e, "output.snapshot_interval must be nonnegative (0 disables)");
  if (Entry* e = f.read_double("output.probe_interval", s.probe_interval, false))
    if (!(s.probe_interval >= 0))
      f.fail(e, "output.probe_interval must be nonnegative (0 disables)");

  int probe_count = 0;
  if (Entry* e = f.read_int("probe.count", probe_count, false))
    if (probe_count < 0) {
      f.fail(e, "probe.count must be nonnegative");
      probe_count = 0;
    }
  for (int i = 0; i < probe_count; ++i) {
    const std::string key = "probe" + std::to_string(i) + ".cell";
    std::array<int, 3> c{};
    if (Entry* e = f.read_ints(key, c, true)) {
      if (grid_ok &&
          (c[0] < 0 || c[0] >= s.grid.nx || c[1] < 0 || c[1] >= s.grid.ny ||
           c[2] < 0 || c[2] >= s.grid.nz))
        f.fail(e, key + " lies outside the grid");
      s.probes.push_back(c);
    }
  }

  f.read_bool("random.enabled", s.random_field.enabled);
  f.read_pos("random.geo_mean", s.random_field.geo_mean, false);
  if (Entry* e =
          f.read_double("random.sigma_log10", s.random_field.sigma_log10, false))
    if (!(s.random_field.sigma_log10 >= 0))
      f.fail(e, "random.sigma_log10 must be nonnegative");
  Entry* ecn = f.read_pos("random.clamp_min", s.random_field.clamp_min, false);
  Entry* ecx = f.read_pos("random.clamp_max", s.random_field.clamp_max, false);
  if (!(s.random_field.clamp_min <= s.random_field.clamp_max))
    f.fail(ecx ? ecx : ecn, "random.clamp_max must be at least random.clamp_min");
  f.read_u64("random.seed", s.random_field.seed);

  tab.flag_unused(errs);
  if (!errs.empty()) {
    std::string joined;
    for (std::size_t i = 0; i < errs.size(); ++i) {
      if (i) joined += '\n';
      joined += errs[i];
    }
    throw SpecError(joined);
  }
  return s;
}

std::string render_case(const CaseSpec& s) {
  std::ostringstream o;
  o << "grid.nx = " << s.grid.nx << '\n';
  o << "grid.ny = " << s.grid.ny << '\n';
  o << "grid.nz = " << s.grid.nz << '\n';
  o << "grid.dx = " << fmt(s.grid.dx) << '\n';
  o << "grid.dy = " << fmt(s.grid.dy) << '\n';
  o << "grid.dz = " << fmt(s.grid.dz) << '\n';
  if (s.grid.origin_set)
    o << "grid.origin = " << fmt(s.grid.origin[0]) << ' '
      << fmt(s.grid.origin[1]) << ' ' << fmt(s.grid.origin[2]) << '\n';
  o << "grid.gravity_axis = " << "xyz"[s.grid.gravity_axis] << '\n';
  if (s.grid.gravity_axis == 2) {
    o << "grid.slope_deg = " << fmt(s.grid.slope_deg) << '\n';
    o << "grid.cross_slope_deg = " << fmt(s.grid.cross_slope_deg) << '\n';
  }

  o << "soil.zone_count = " << s.zones.size() << '\n';
  for (std::size_t i = 0; i < s.zones.size(); ++i) {
    const std::string z = "zone" + std::to_string(i);
    const ZoneSpec& zs = s.zones[i];
    if (const auto* vg = std::get_if<VanGenuchten>(&zs.model)) {
      o << z << ".model = van_genuchten\n";
      o << z << ".Ks = " << fmt(vg->Ks) << '\n';
      o << z << ".alpha = " << fmt(vg->alpha) << '\n';
      o << z << ".n = " << fmt(vg->n) << '\n';
      o << z << ".theta_s = " << fmt(vg->theta_s) << '\n';
      o << z << ".theta_r = " << fmt(vg->theta_r) << '\n';
      o << z << ".storativity = " << fmt(vg->storativity) << '\n';
    } else {
      const auto& g = std::get<Gardner>(zs.model);
      o << z << ".model = gardner\n";
      o << z << ".Ks = " << fmt(g.Ks) << '\n';
      o << z << ".alpha = " << fmt(g.alpha) << '\n';
      o << z << ".storativity = " << fmt(g.storativity) << '\n';
    }
    o << z << ".box = " << zs.lo[0] << ' ' << zs.lo[1] << ' ' << zs.lo[2]
      << ' ' << zs.hi[0] << ' ' << zs.hi[1] << ' ' << zs.hi[2] << '\n';
  }

  if (s.init_mode == InitMode::Uniform) {
    o << "init.mode = uniform\n";
    o << "init.h = " << fmt(s.init_value) << '\n';
  } else if (s.init_mode == InitMode::Hydrostatic) {
    o << "init.mode = hydrostatic\n";
    o << "init.water_table = " << fmt(s.init_value) << '\n';
  } else {
    o << "init.mode = file\n";
    o << "init.file = " << s.init_file << '\n';
  }

  o << "patch.count = " << s.patches.size() << '\n';
  for (std::size_t j = 0; j < s.patches.size(); ++j) {
    const std::string q = "patch" + std::to_string(j);
    const Patch& pa = s.patches[j];
    if (!pa.name.empty()) o << q << ".name = " << pa.name << '\n';
    o << q << ".side = " << kSideNames[pa.dir] << '\n';
    o << q << ".range = " << pa.lo[0] << ' ' << pa.lo[1] << ' ' << pa.hi[0]
      << ' ' << pa.hi[1] << '\n';
    if (const auto* d = std::get_if<Dirichlet>(&pa.bc)) {
      o << q << ".type = dirichlet\n";
      o << q << ".h = " << fmt(d->h_b) << '\n';
    } else if (const auto* nf = std::get_if<NeumannFlux>(&pa.bc)) {
      o << q << ".type = flux\n";
      o << q << ".q = " << fmt(nf->q) << '\n';
    } else if (std::holds_alternative<FreeDrainage>(pa.bc)) {
      o << q << ".type = free_drainage\n";
    } else {
      const auto& sf = std::get<SeriesFlux>(pa.bc);
      if (sf.series < 0 || std::size_t(sf.series) >= s.series_files.size())
        throw InvalidInput("patch references a series file that is not listed");
      o << q << ".type = series\n";
      o << q << ".file = " << s.series_files[std::size_t(sf.series)] << '\n';
    }
  }

  o << "time.t_end = " << fmt(s.t_end) << '\n';
  o << "time.dt_init = " << fmt(s.time.dt_init) << '\n';
  o << "time.dt_max = " << fmt(s.time.dt_max) << '\n';
  o << "time.dt_min = " << fmt(s.time.dt_min) << '\n';
  o << "time.grow_factor = " << fmt(s.time.grow_factor) << '\n';
  o << "time.quick_threshold = " << s.time.quick_iters_threshold << '\n';
  o << "time.streak = " << s.time.streak_needed << '\n';

  o << "solver.tol_picard = " << fmt(s.picard.tol_picard) << '\n';
  o << "solver.pcg_tol = " << fmt(s.picard.pcg_tol) << '\n';
  o << "solver.max_picard = " << s.picard.max_picard_iters << '\n';
  o << "solver.pcg_max_iter = " << s.picard.pcg_max_iter << '\n';

  if (!s.output_dir.empty()) o << "output.dir = " << s.output_dir << '\n';
  o << "output.snapshot_interval = " << fmt(s.snapshot_interval) << '\n';
  o << "output.probe_interval = " << fmt(s.probe_interval) << '\n';

  if (!s.probes.empty()) {
    o << "probe.count = " << s.probes.size() << '\n';
    for (std::size_t i = 0; i < s.probes.size(); ++i)
      o << "probe" << i << ".cell = " << s.probes[i][0] << ' '
        << s.probes[i][1] << ' ' << s.probes[i][2] << '\n';
  }

  if (s.random_field != RandomFieldSpec{}) {
    o << "random.enabled = " << (s.random_field.enabled ? "true" : "false")
      << '\n';
    o << "random.geo_mean = " << fmt(s.random_field.geo_mean) << '\n';
    o << "random.sigma_log10 = " << fmt(s.random_field.sigma_log10) << '\n';
    o << "random.clamp_min = " << fmt(s.random_field.clamp_min) << '\n';
    o << "random.clamp_max = " << fmt(s.random_field.clamp_max) << '\n';
    o << "random.seed = " << s.random_field.seed << '\n';
  }
  return o.str();
}

FluxSeries parse_flux_series(const std::string& t) {
  std::vector<std::string> errs;
  FluxSeries s;
  std::vector<int> lines;
  std::size_t pos = 0;
  int line = 0;
  bool header_seen = false;
  while (pos < t.size()) {
    std::size_t nl = t.find('\n', pos);
    if (nl == std::string::npos) nl = t.size();
    const std::string_view body = trim({t.data() + pos, nl - pos});
    pos = nl + 1;
    ++line;
    if (body.empty()) continue;
    if (!header_seen) {
      header_seen = true;
      if (body != "t_start_seconds,flux_m_per_s")
        errs.push_back("line " + std::to_string(line) +
                       ": header must be exactly 't_start_seconds,flux_m_per_s'");
      continue;
    }
    const auto comma = body.find(',');
    double tv = 0, fv = 0;
    if (comma == std::string_view::npos ||
        !to_double(trim(body.substr(0, comma)), tv) ||
        !to_double(trim(body.substr(comma + 1)), fv)) {
      errs.push_back("line " + std::to_string(line) +
                     ": expected two numbers 't_start,flux'");
      continue;
    }
    if (!s.t_start.empty() && !(tv > s.t_start.back()))
      errs.push_back("line " + std::to_string(line) +
                     ": t_start must increase (got " + fmt(tv) + " after " +
                     fmt(s.t_start.back()) + ")");
    s.t_start.push_back(tv);
    s.flux.push_back(fv);
    lines.push_back(line);
  }
  if (!header_seen)
    errs.push_back("line 1: empty series (header and records required)");
  if (s.t_start.size() < 2) {
    errs.push_back("series needs at least two records (the final record's "
                   "coverage spans the previous spacing)");
  } else {
    if (s.t_start.front() != 0)
      errs.push_back("line " + std::to_string(lines.front()) +
                     ": the first record must start at t = 0");
    const std::size_t m = s.t_start.size();
    s.coverage_end = s.t_start[m - 1] + (s.t_start[m - 1] - s.t_start[m - 2]);
  }
  if (!errs.empty()) {
    std::string joined;
    for (std::size_t i = 0; i < errs.size(); ++i) {
      if (i) joined += '\n';
      joined += errs[i];
    }
    throw SpecError(joined);
  }
  return s;
}

FluxSeries load_flux_series(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw SpecError("cannot open flux series file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_flux_series(buf.str());
  } catch (const SpecError& e) {
    throw SpecError("flux series '" + path.string() + "':\n" + e.what());
  }
}

double flux_at(const FluxSeries& series, double t) {
  if (!(t >= 0) || t > series.coverage_end)
    throw InvalidInput("flux series has no value at t = " + fmt(t) +
                       " s (coverage ends at " + fmt(series.coverage_end) +
                       " s)");
  const auto it =
      std::upper_bound(series.t_start.begin(), series.t_start.end(), t);
  return series.flux[std::size_t(it - series.t_start.begin()) - 1];
}

std::string render_daily_forcing(int days, std::uint64_t seed) {
  if (days < 2) throw InvalidInput("forcing needs at least two daily records");
  std::mt19937_64 eng(seed);
  std::ostringstream o;
  o << "t_start_seconds,flux_m_per_s\n";
  for (int d = 0; d < days; ++d) {
    const double u = 2.0 * (double(eng() >> 11) * 0x1p-53) - 1.0;
    const bool wet = d >= 120 && d < 300;
    const double flux =
        wet ? -3e-8 * (1.0 + 0.5 * u) : 1.2e-8 * (1.0 + 0.5 * u);
    o << fmt(86400.0 * d) << ',' << fmt(flux) << '\n';
  }
  return o.str();
}

}  // namespace vadose
