#pragma once

// Observation renderings of a Scene. All three are pure functions of the scene:
//   snapshot - canonical line-oriented ground truth, also the golden-file format
//   text     - natural-language description for text/vision model backends
//   raster   - top-down binary PPM (P6) of the table, 16x16 px per cell

#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "lera/world.hpp"

namespace lera {

enum class ObservationFormat { snapshot, text, raster };

/// Everything a replanner may be shown about the current scene.
struct Observation {
  std::string snapshot;
  std::string text;
  std::string raster;  // PPM bytes, empty when not rendered
};

inline constexpr std::string_view kSnapshotHeader = "lera-scene 1";

namespace detail {

inline std::string opt_name(const std::optional<ObjectId>& id) { return id ? id->name : "-"; }

inline std::string placement_fact(const ObjectId& id, const Placement& p) {
  switch (p.site) {
    case Placement::Site::table: return "table(" + id.name + ", " + std::to_string(p.cell) + ")";
    case Placement::Site::in: return "in(" + id.name + ", " + p.target.name + ")";
    case Placement::Site::on: return "on(" + id.name + ", " + p.target.name + ")";
    case Placement::Site::held: return "held(" + id.name + ")";
  }
  return "?";
}

inline std::string pretty(const ObjectId& id) {
  std::string s = id.name;
  for (char& c : s)
    if (c == '_') c = ' ';
  return "the " + s;
}

}  // namespace detail

inline std::string render_snapshot(const Scene& scene) {
  std::ostringstream out;
  out << kSnapshotHeader << '\n';
  out << "family " << to_string(scene.family) << '\n';
  out << "table_cells " << scene.table_cells << '\n';
  out << "step " << scene.step_counter << '\n';
  out << "gripper " << detail::opt_name(scene.gripper_holding) << '\n';
  out << "located " << detail::opt_name(scene.located_target) << '\n';
  out << "last_drop " << detail::opt_name(scene.last_drop) << '\n';
  for (const auto& [id, st] : scene.objects) {
    out << "object " << id.name << ' ' << to_string(st.desc.kind) << ' '
        << to_string(st.desc.color) << '\n';
    for (Flag f : {Flag::open, Flag::powered, Flag::clean, Flag::hot})
      if (const auto& v = st.flags.get(f))
        out << "flag " << id.name << ' ' << to_string(f) << ' ' << (*v ? "true" : "false") << '\n';
    out << "at " << detail::placement_fact(id, st.place) << '\n';
  }
  return out.str();
}

/// Inverse of render_snapshot. Throws ConfigError naming the bad line.
inline Scene parse_snapshot(std::string_view text) {
  const auto lines = detail::split_lines(text);
  Scene scene;
  scene.objects.clear();
  auto fail = [](std::size_t n, const std::string& why) -> ConfigError {
    return ConfigError("snapshot line " + std::to_string(n) + ": " + why);
  };
  auto opt_id = [](const std::string& s) -> std::optional<ObjectId> {
    if (s == "-") return std::nullopt;
    return ObjectId(s);
  };
  bool header = false;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t n = i + 1;
    std::string_view line = detail::trim(lines[i]);
    if (line.empty()) continue;
    if (!header) {
      if (line != kSnapshotHeader) throw fail(n, "missing header");
      header = true;
      continue;
    }
    std::istringstream in{std::string(line)};
    std::string key;
    in >> key;
    if (key == "family") {
      std::string f;
      in >> f;
      auto fam = family_from_string(f);
      if (!fam) throw fail(n, "unknown family " + f);
      scene.family = *fam;
    } else if (key == "table_cells") {
      if (!(in >> scene.table_cells)) throw fail(n, "bad table_cells");
    } else if (key == "step") {
      if (!(in >> scene.step_counter)) throw fail(n, "bad step");
    } else if (key == "gripper" || key == "located" || key == "last_drop") {
      std::string v;
      in >> v;
      auto& slot = key == "gripper" ? scene.gripper_holding
                   : key == "located" ? scene.located_target
                                      : scene.last_drop;
      slot = opt_id(v);
    } else if (key == "object") {
      std::string id, kind, color;
      in >> id >> kind >> color;
      auto k = kind_from_string(kind);
      auto c = color_from_string(color);
      if (!is_object_token(id) || !k || !c) throw fail(n, "bad object line");
      ObjectState st;
      st.desc = ObjectDescriptor{id, *k, *c};
      scene.objects[ObjectId(id)] = st;
    } else if (key == "flag") {
      std::string id, flag, value;
      in >> id >> flag >> value;
      auto f = flag_from_string(flag);
      if (!scene.has(id) || !f || (value != "true" && value != "false"))
        throw fail(n, "bad flag line");
      scene.at(id).flags.get(*f) = value == "true";
    } else if (key == "at") {
      std::string rest;
      std::getline(in, rest);
      std::string_view fact = detail::trim(rest);
      const auto open = fact.find('(');
      if (open == std::string_view::npos || fact.back() != ')') throw fail(n, "bad placement");
      const std::string_view site = fact.substr(0, open);
      const std::string_view inner = fact.substr(open + 1, fact.size() - open - 2);
      const auto comma = inner.find(',');
      const std::string id(detail::trim(inner.substr(0, comma)));
      const std::string arg =
          comma == std::string_view::npos ? "" : std::string(detail::trim(inner.substr(comma + 1)));
      if (!scene.has(id)) throw fail(n, "placement of undeclared object " + id);
      Placement p;
      if (site == "table") {
        try {
          p = Placement::table(std::stoi(arg));
        } catch (const std::exception&) {
          throw fail(n, "bad cell");
        }
      } else if (site == "in") {
        p = Placement::in(arg);
      } else if (site == "on") {
        p = Placement::on(arg);
      } else if (site == "held") {
        p = Placement::held();
      } else {
        throw fail(n, "unknown site " + std::string(site));
      }
      scene.at(id).place = p;
    } else {
      throw fail(n, "unknown key " + key);
    }
  }
  if (!header) throw fail(1, "empty snapshot");
  return scene;
}

inline std::string render_text(const Scene& scene) {
  using Site = Placement::Site;
  std::ostringstream out;
  std::vector<std::string> sentences;
  bool any_on_table = false;
  for (const auto& [id, st] : scene.objects) {
    std::string s = detail::pretty(id);
    switch (st.place.site) {
      case Site::table:
        any_on_table = true;
        s += " stands at table cell " + std::to_string(st.place.cell);
        break;
      case Site::in: s += " is in " + detail::pretty(st.place.target); break;
      case Site::on: s += " is on " + detail::pretty(st.place.target); break;
      case Site::held: s += " is in the gripper"; break;
    }
    std::vector<std::string> states;
    if (st.flags.open) states.push_back(*st.flags.open ? "open" : "closed");
    if (st.flags.powered) states.push_back(*st.flags.powered ? "switched on" : "switched off");
    if (st.flags.hot && *st.flags.hot) states.push_back("hot");
    if (st.flags.clean) states.push_back(*st.flags.clean ? "clean" : "dirty");
    for (std::size_t i = 0; i < states.size(); ++i)
      s += (i == 0 ? "; it is " : (i + 1 == states.size() ? " and " : ", ")) + states[i];
    if (scene.last_drop == id) s += "; it fell there from the gripper";
    sentences.push_back(s + ".");
  }
  if (!any_on_table) out << "The table is empty.\n";
  for (const auto& s : sentences) {
    std::string c = s;
    c[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(c[0])));
    out << c << '\n';
  }
  out << (scene.gripper_holding ? "The gripper holds " + detail::pretty(*scene.gripper_holding) + "."
                                : std::string("The gripper holds nothing."))
      << '\n';
  return out.str();
}

namespace detail {

struct Rgb {
  std::uint8_t r, g, b;
};

inline Rgb palette(const ObjectState& st) {
  switch (st.desc.color) {
    case Color::red: return {220, 40, 40};
    case Color::green: return {40, 170, 60};
    case Color::blue: return {40, 80, 220};
    case Color::yellow: return {230, 200, 40};
    case Color::none: break;
  }
  switch (st.desc.kind) {
    case Kind::appliance: return {90, 90, 90};
    case Kind::container: return {150, 150, 175};
    case Kind::item: return {140, 90, 50};
    default: return {0, 0, 0};
  }
}

inline constexpr Rgb kBackground{235, 235, 235};
inline constexpr Rgb kGrid{200, 200, 200};

}  // namespace detail

inline constexpr int kCellPixels = 16;

/// Top-down PPM of the table. Bowls, containers and appliances are rings,
/// blocks and items filled squares; a stacked block is drawn smaller on top.
inline std::string render_raster(const Scene& scene) {
  using detail::Rgb;
  const int cols = kTableColumns;
  const int rows = (scene.table_cells + cols - 1) / cols;
  const int w = cols * kCellPixels, h = rows * kCellPixels;
  std::vector<Rgb> px(static_cast<std::size_t>(w * h), detail::kBackground);
  auto fill = [&](int cell, int x0, int y0, int x1, int y1, Rgb c) {
    const int ox = (cell % cols) * kCellPixels, oy = (cell / cols) * kCellPixels;
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) px[static_cast<std::size_t>((oy + y) * w + ox + x)] = c;
  };
  auto ring = [&](int cell, int inset, int thickness, Rgb c) {
    const int lo = inset, hi = kCellPixels - 1 - inset;
    fill(cell, lo, lo, hi, lo + thickness - 1, c);
    fill(cell, lo, hi - thickness + 1, hi, hi, c);
    fill(cell, lo, lo, lo + thickness - 1, hi, c);
    fill(cell, hi - thickness + 1, lo, hi, hi, c);
  };
  for (int cell = 0; cell < scene.table_cells; ++cell) ring(cell, 0, 1, detail::kGrid);

  for (const auto& [id, st] : scene.objects) {
    const auto cell = scene.ground_cell(id);
    if (!cell) continue;
    const Kind k = st.desc.kind;
    if (k == Kind::bowl || k == Kind::container || k == Kind::appliance) {
      ring(*cell, 2, 2, detail::palette(st));
      continue;
    }
    int depth = 0;
    for (ObjectId cur = id; scene.at(cur).place.site == Placement::Site::on;
         cur = scene.at(cur).place.target)
      ++depth;
    const int inset = depth == 0 ? 5 : 7;
    fill(*cell, inset, inset, kCellPixels - 1 - inset, kCellPixels - 1 - inset, detail::palette(st));
  }

  std::string out = "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  out.reserve(out.size() + px.size() * 3);
  for (const Rgb& c : px) {
    out.push_back(static_cast<char>(c.r));
    out.push_back(static_cast<char>(c.g));
    out.push_back(static_cast<char>(c.b));
  }
  return out;
}

inline std::string observe(const Scene& scene, ObservationFormat format) {
  switch (format) {
    case ObservationFormat::snapshot: return render_snapshot(scene);
    case ObservationFormat::text: return render_text(scene);
    case ObservationFormat::raster: return render_raster(scene);
  }
  return {};
}

inline Observation observe_all(const Scene& scene, bool with_raster = true) {
  return {render_snapshot(scene), render_text(scene), with_raster ? render_raster(scene) : ""};
}

}  // namespace lera
