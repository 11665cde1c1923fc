#include "sawfilm/material_db.hpp"

#include "sawfilm/errors.hpp"
#include "sawfilm/units.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <set>
#include <sstream>

namespace sawfilm {

void MaterialDb::add(MaterialEntry entry) {
  validate(entry.material);
  const std::string name = entry.name;
  if (!entries_.emplace(name, std::move(entry)).second) {
    throw ParseError("duplicate material '" + name + "'");
  }
}

bool MaterialDb::contains(std::string_view name) const {
  return entries_.find(name) != entries_.end();
}

const MaterialEntry& MaterialDb::at(std::string_view name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) {
    throw ParseError("unknown material '" + std::string(name) + "'");
  }
  return it->second;
}

std::vector<std::string> MaterialDb::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [name, entry] : entries_) out.push_back(name);
  return out;
}

namespace {

std::string where(std::string_view origin, const YAML::Node& node) {
  std::ostringstream os;
  os << origin;
  const YAML::Mark mark = node.Mark();
  if (mark.line >= 0) os << ":" << mark.line + 1;
  return os.str();
}

struct EntryReader {
  std::string_view origin;
  std::string name;
  const YAML::Node& node;

  [[noreturn]] void fail(const YAML::Node& at, const std::string& what) const {
    throw ParseError(where(origin, at) + ": material '" + name + "': " + what);
  }

  double quantity(const char* key, Dimension dim) const {
    const YAML::Node value = node[key];
    if (!value) fail(node, std::string("missing key '") + key + "'");
    if (!value.IsScalar()) fail(value, std::string("key '") + key + "' must be a scalar");
    try {
      return parse_quantity(value.Scalar(), dim);
    } catch (const ParseError& e) {
      fail(value, std::string(key) + ": " + e.what());
    }
  }
};

}  // namespace

MaterialDb parse_material_db(std::string_view text, std::string_view origin) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::Exception& e) {
    throw ParseError(std::string(origin) + ": " + e.what());
  }
  MaterialDb db;
  if (root.IsNull()) return db;
  if (!root.IsMap()) throw ParseError(where(origin, root) + ": top level must be a map of materials");

  std::set<std::string> seen;
  for (const auto& item : root) {
    const std::string name = item.first.as<std::string>();
    const YAML::Node& node = item.second;
    EntryReader reader{origin, name, node};
    if (!seen.insert(name).second) reader.fail(item.first, "duplicate name");
    if (!node.IsMap()) reader.fail(node, "entry must be a map");

    const YAML::Node sym = node["symmetry"];
    if (!sym || !sym.IsScalar()) reader.fail(node, "missing key 'symmetry'");
    const std::string symmetry = sym.Scalar();

    std::set<std::string> allowed{"symmetry", "source", "density"};
    MaterialEntry entry;
    entry.name = name;
    if (symmetry == "isotropic") {
      allowed.insert({"young_modulus", "poisson_ratio"});
      IsotropicMaterial m;
      m.young_modulus = reader.quantity("young_modulus", Dimension::pressure);
      m.poisson_ratio = reader.quantity("poisson_ratio", Dimension::dimensionless);
      m.density = reader.quantity("density", Dimension::density);
      entry.material = m;
    } else if (symmetry == "cubic") {
      allowed.insert({"c11", "c12", "c44"});
      CubicMaterial m;
      m.c11 = reader.quantity("c11", Dimension::pressure);
      m.c12 = reader.quantity("c12", Dimension::pressure);
      m.c44 = reader.quantity("c44", Dimension::pressure);
      m.density = reader.quantity("density", Dimension::density);
      entry.material = m;
    } else {
      reader.fail(sym, "unknown symmetry '" + symmetry + "'");
    }
    for (const auto& kv : node) {
      const std::string key = kv.first.as<std::string>();
      if (!allowed.count(key)) reader.fail(kv.first, "unknown key '" + key + "'");
    }
    if (const YAML::Node src = node["source"]) entry.source = src.as<std::string>();

    try {
      db.add(std::move(entry));
    } catch (const DomainError& e) {
      reader.fail(node, e.what());
    }
  }
  return db;
}

MaterialDb load_material_db(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open material database '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_material_db(buf.str(), path.string());
}

MixingEndpoints mixing_endpoints(const MaterialDb& db, std::string_view si_name,
                                 std::string_view ge_name) {
  const auto* si = std::get_if<IsotropicMaterial>(&db.at(si_name).material);
  const auto* ge = std::get_if<IsotropicMaterial>(&db.at(ge_name).material);
  if (!si || !ge) throw ParseError("mixing endpoints must be isotropic materials");
  return MixingEndpoints{si->young_modulus, ge->young_modulus, si->density, ge->density};
}

}  // namespace sawfilm
