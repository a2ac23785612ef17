#pragma once

// Dataset directory I/O:
//   manifest.json              counts, per-file checksums, config hash
//   records/<object_id>.jsonl  one DemoRecord per line
//   config/<hash>.json         run configuration snapshot
// Floats are written with 17 significant digits, so read(write(x)) is exact
// and re-serialization is byte-identical.

#include "graspforge/demo.hpp"
#include "graspforge/synthesis.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace graspforge {

using Json = nlohmann::ordered_json;

class DatasetError : public Error {
 public:
  using Error::Error;
};

inline constexpr std::string_view kManifestSchemaVersion = "1.0";

// ---------------------------------------------------------------------------
// Deterministic JSON text

namespace detail {

inline void emit_json(const Json& j, std::string& out, int indent, int depth) {
  auto newline = [&](int d) {
    if (indent < 0) return;
    out += '\n';
    out.append(static_cast<std::size_t>(indent * d), ' ');
  };
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ',';
        first = false;
        newline(depth + 1);
        out += Json(it.key()).dump();
        out += indent < 0 ? ":" : ": ";
        emit_json(it.value(), out, indent, depth + 1);
      }
      newline(depth);
      out += '}';
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += '[';
      bool first = true;
      for (const auto& v : j) {
        if (!first) out += ',';
        first = false;
        // Numeric arrays stay on one line.
        if (!v.is_primitive()) newline(depth + 1);
        emit_json(v, out, indent, depth + 1);
      }
      if (!j.front().is_primitive()) newline(depth);
      out += ']';
      return;
    }
    case Json::value_t::number_float: {
      const double v = j.get<double>();
      if (!std::isfinite(v)) throw ValidationError("cannot serialize a non-finite number");
      // -0 would re-read as the integer 0; write it as 0 so bytes are stable.
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", v == 0.0 ? 0.0 : v);
      out += buf;
      return;
    }
    default:
      out += j.dump();
      return;
  }
}

}  // namespace detail

/// Serializes with %.17g floats; indent < 0 gives a single line.
inline std::string dump_json(const Json& j, int indent = -1) {
  std::string out;
  detail::emit_json(j, out, indent, 0);
  return out;
}

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// ---------------------------------------------------------------------------
// Value conversions

inline Json vec_to_json(const VecX& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline VecX vec_from_json(const Json& j) {
  if (!j.is_array()) throw ParseError("expected a number array");
  VecX v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

inline Json transform_to_json(const RigidTransform& t) {
  Json r = Json::array();
  for (int i = 0; i < 3; ++i) {
    for (int k = 0; k < 3; ++k) r.push_back(t.rotation(i, k));
  }
  return Json{{"translation", vec_to_json(t.translation)}, {"rotation", r}};
}

inline RigidTransform transform_from_json(const Json& j) {
  RigidTransform t;
  const VecX p = vec_from_json(j.at("translation"));
  const VecX r = vec_from_json(j.at("rotation"));
  if (p.size() != 3 || r.size() != 9) throw ParseError("malformed transform");
  t.translation = p;
  for (int i = 0; i < 3; ++i) {
    for (int k = 0; k < 3; ++k) t.rotation(i, k) = r[3 * i + k];
  }
  return t;
}

inline Json pose_to_json(const BimanualGraspPose& p) {
  Json hands = Json::array();
  for (int h = 0; h < 2; ++h) {
    Json hj = transform_to_json(p.hands[h].wrist);
    hands.push_back(Json{{"active", p.active[h]},
                         {"translation", hj["translation"]},
                         {"rotation", hj["rotation"]},
                         {"q", vec_to_json(p.hands[h].q)}});
  }
  return Json{{"strategy", std::string(to_string(p.strategy))}, {"hands", hands}};
}

inline BimanualGraspPose pose_from_json(const Json& j) {
  BimanualGraspPose p;
  p.strategy = strategy_from_string(j.at("strategy").get<std::string>());
  const Json& hands = j.at("hands");
  if (!hands.is_array() || hands.size() != 2) throw ParseError("grasp pose needs two hands");
  for (int h = 0; h < 2; ++h) {
    const Json& hj = hands[static_cast<std::size_t>(h)];
    p.active[h] = hj.at("active").get<bool>();
    p.hands[h].wrist = transform_from_json(hj);
    p.hands[h].q = vec_from_json(hj.at("q"));
  }
  return p;
}

inline Json energy_to_json(const EnergyBreakdown& e) {
  return Json{{"total", e.total},         {"wrench", e.wrench},
              {"contact", e.contact},     {"collision", e.collision},
              {"hand_hand", e.hand_hand}};
}

inline EnergyBreakdown energy_from_json(const Json& j) {
  EnergyBreakdown e;
  e.total = j.at("total").get<double>();
  e.wrench = j.at("wrench").get<double>();
  e.contact = j.at("contact").get<double>();
  e.collision = j.at("collision").get<double>();
  e.hand_hand = j.at("hand_hand").get<double>();
  return e;
}

inline Json weights_to_json(const EnergyWeights& w) {
  return Json{{"kappa_w", w.kappa_w},       {"kappa_con", w.kappa_con},
              {"kappa_coll", w.kappa_coll}, {"kappa_hh", w.kappa_hh},
              {"wrench_scale", w.wrench_scale}};
}

inline EnergyWeights weights_from_json(const Json& j) {
  EnergyWeights w;
  w.kappa_w = j.at("kappa_w").get<double>();
  w.kappa_con = j.at("kappa_con").get<double>();
  w.kappa_coll = j.at("kappa_coll").get<double>();
  w.kappa_hh = j.at("kappa_hh").get<double>();
  w.wrench_scale = j.at("wrench_scale").get<double>();
  return w;
}

inline Json candidate_to_json(const Candidate& c) {
  return Json{{"index", c.index},
              {"seed", c.seed},
              {"converged", c.converged},
              {"iterations", c.iterations},
              {"initial_energy", energy_to_json(c.initial_energy)},
              {"energy", energy_to_json(c.energy)},
              {"pose", pose_to_json(c.pose)}};
}

inline Candidate candidate_from_json(const Json& j) {
  Candidate c;
  c.index = j.at("index").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.converged = j.at("converged").get<bool>();
  c.iterations = j.at("iterations").get<int>();
  c.initial_energy = energy_from_json(j.at("initial_energy"));
  c.energy = energy_from_json(j.at("energy"));
  c.pose = pose_from_json(j.at("pose"));
  return c;
}

// ---------------------------------------------------------------------------
// Records

namespace detail {

inline int major_version(const std::string& v) {
  const auto dot = v.find('.');
  try {
    return std::stoi(v.substr(0, dot));
  } catch (const std::exception&) {
    throw DatasetError("malformed schema_version '" + v + "'");
  }
}

inline void check_version(const std::string& found, std::string_view supported,
                          const std::string& what) {
  if (major_version(found) != major_version(std::string(supported))) {
    throw DatasetError(what + " schema_version " + found + " is incompatible with " +
                       std::string(supported));
  }
}

}  // namespace detail

inline Json record_to_json(const DemoRecord& r) {
  Json wps = Json::array();
  for (const auto& w : r.waypoints) {
    wps.push_back(Json{
        {"index", w.index},
        {"stage", std::string(to_string(w.stage))},
        {"arm_q", Json::array({vec_to_json(w.state.arm_q[0]), vec_to_json(w.state.arm_q[1])})},
        {"hand_q", Json::array({vec_to_json(w.state.hand_q[0]), vec_to_json(w.state.hand_q[1])})},
        {"wrist", Json::array({transform_to_json(w.wrist[0]), transform_to_json(w.wrist[1])})}});
  }
  Json seeds = Json::array();
  for (auto s : r.config.seeds) seeds.push_back(s);
  Json j{{"schema_version", r.schema_version},
         {"object_id", r.object_id},
         {"object_mass", r.object_mass},
         {"strategy", std::string(to_string(r.strategy))},
         {"grasp", pose_to_json(r.grasp)},
         {"grasp_energy", r.grasp_energy},
         {"waypoints", wps},
         {"validation",
          Json{{"lift_height_m", r.validation.lift_height_m},
               {"gravity_residual", r.validation.gravity_residual},
               {"success", r.validation.success}}},
         {"config",
          Json{{"weights", weights_to_json(r.config.weights)},
               {"cone", Json{{"mu", r.config.cone.mu}, {"edge_count", r.config.cone.edge_count}}},
               {"seeds", seeds}}}};
  for (auto it = r.extra.begin(); it != r.extra.end(); ++it) j[it.key()] = it.value();
  return j;
}

inline DemoRecord record_from_json(const Json& j) {
  static const std::vector<std::string> known = {"schema_version", "object_id",  "object_mass",
                                                 "strategy",       "grasp",      "grasp_energy",
                                                 "waypoints",      "validation", "config"};
  DemoRecord r;
  try {
    r.schema_version = j.at("schema_version").get<std::string>();
    detail::check_version(r.schema_version, kRecordSchemaVersion, "record");
    r.object_id = j.at("object_id").get<std::string>();
    r.object_mass = j.at("object_mass").get<double>();
    r.strategy = strategy_from_string(j.at("strategy").get<std::string>());
    r.grasp = pose_from_json(j.at("grasp"));
    r.grasp_energy = j.at("grasp_energy").get<double>();
    for (const auto& wj : j.at("waypoints")) {
      Waypoint w;
      w.index = wj.at("index").get<int>();
      w.stage = stage_from_string(wj.at("stage").get<std::string>());
      for (int h = 0; h < 2; ++h) {
        const auto k = static_cast<std::size_t>(h);
        w.state.arm_q[h] = vec_from_json(wj.at("arm_q").at(k));
        w.state.hand_q[h] = vec_from_json(wj.at("hand_q").at(k));
        w.wrist[h] = transform_from_json(wj.at("wrist").at(k));
      }
      r.waypoints.push_back(std::move(w));
    }
    const Json& v = j.at("validation");
    r.validation.lift_height_m = v.at("lift_height_m").get<double>();
    r.validation.gravity_residual = v.at("gravity_residual").get<double>();
    r.validation.success = v.at("success").get<bool>();
    const Json& c = j.at("config");
    r.config.weights = weights_from_json(c.at("weights"));
    r.config.cone.mu = c.at("cone").at("mu").get<double>();
    r.config.cone.edge_count = c.at("cone").at("edge_count").get<int>();
    for (const auto& s : c.at("seeds")) r.config.seeds.push_back(s.get<std::uint64_t>());
  } catch (const Json::exception& e) {
    throw DatasetError(std::string("malformed record: ") + e.what());
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end()) {
      r.extra[it.key()] = it.value();
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Directory layout

struct Dataset {
  Json manifest;
  Json config;
  std::vector<DemoRecord> records;
};

namespace detail {

inline void check_object_id(const std::string& id) {
  if (id.empty() || id == "." || id == "..") throw ValidationError("invalid object_id '" + id + "'");
  for (char c : id) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
    if (!ok) throw ValidationError("object_id '" + id + "' contains unsupported characters");
  }
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Json parse_json(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw DatasetError("malformed JSON in " + what + ": " + e.what());
  }
}

}  // namespace detail

/// Writes the dataset and returns its manifest. Records are grouped per
/// object in order of first appearance.
inline Json write_dataset(const std::vector<DemoRecord>& records, const std::filesystem::path& dir,
                          const Json& config = Json::object()) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "records");
  fs::create_directories(dir / "config");

  const std::string config_text = dump_json(config, 2) + "\n";
  const std::string config_hash = hex64(fnv1a64(config_text));
  detail::write_text(dir / "config" / (config_hash + ".json"), config_text);

  std::vector<std::string> order;
  std::map<std::string, std::string> text;
  std::map<std::string, std::size_t> counts;
  for (const auto& r : records) {
    detail::check_object_id(r.object_id);
    if (!text.contains(r.object_id)) order.push_back(r.object_id);
    text[r.object_id] += dump_json(record_to_json(r)) + "\n";
    ++counts[r.object_id];
  }

  Json objects = Json::array();
  for (const auto& id : order) {
    const std::string file = "records/" + id + ".jsonl";
    detail::write_text(dir / file, text[id]);
    objects.push_back(Json{{"object_id", id},
                           {"file", file},
                           {"count", counts[id]},
                           {"fnv1a64", hex64(fnv1a64(text[id]))}});
  }
  std::size_t successes = 0;
  for (const auto& r : records) successes += r.validation.success;
  Json manifest{{"schema_version", std::string(kManifestSchemaVersion)},
                {"record_schema_version", std::string(kRecordSchemaVersion)},
                {"record_count", records.size()},
                {"success_count", successes},
                {"config_hash", config_hash},
                {"config_file", "config/" + config_hash + ".json"},
                {"lift_validation", "quasi-static gravity-wrench check at the lifted pose"},
                {"objects", objects}};
  detail::write_text(dir / "manifest.json", dump_json(manifest, 2) + "\n");
  return manifest;
}

/// Reads and verifies a dataset: versions, per-file counts and checksums.
inline Dataset read_dataset(const std::filesystem::path& dir) {
  Dataset ds;
  ds.manifest = detail::parse_json(detail::read_text(dir / "manifest.json"), "manifest.json");
  try {
    detail::check_version(ds.manifest.at("schema_version").get<std::string>(),
                          kManifestSchemaVersion, "manifest");
    const std::string config_file = ds.manifest.at("config_file").get<std::string>();
    const std::string config_text = detail::read_text(dir / config_file);
    if (hex64(fnv1a64(config_text)) != ds.manifest.at("config_hash").get<std::string>()) {
      throw DatasetError("config hash mismatch for " + config_file);
    }
    ds.config = detail::parse_json(config_text, config_file);

    std::size_t total = 0;
    for (const auto& obj : ds.manifest.at("objects")) {
      const std::string file = obj.at("file").get<std::string>();
      const std::string text = detail::read_text(dir / file);
      if (hex64(fnv1a64(text)) != obj.at("fnv1a64").get<std::string>()) {
        throw DatasetError("checksum mismatch for " + file);
      }
      std::size_t lines = 0;
      std::istringstream in(text);
      for (std::string line; std::getline(in, line);) {
        if (line.empty()) continue;
        ds.records.push_back(record_from_json(detail::parse_json(line, file)));
        ++lines;
      }
      if (lines != obj.at("count").get<std::size_t>()) {
        throw DatasetError("manifest count for " + file + " is " +
                           std::to_string(obj.at("count").get<std::size_t>()) + " but the file has " +
                           std::to_string(lines) + " records");
      }
      total += lines;
    }
    if (total != ds.manifest.at("record_count").get<std::size_t>()) {
      throw DatasetError("manifest record_count does not match the record files");
    }
  } catch (const Json::exception& e) {
    throw DatasetError(std::string("malformed manifest: ") + e.what());
  }
  return ds;
}

}  // namespace graspforge
