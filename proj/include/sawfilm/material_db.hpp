#pragma once

#include "sawfilm/materials.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace sawfilm {

struct MaterialEntry {
  std::string name;
  ElasticMaterial material;
  std::string source;
};

/// Named, validated material records. Immutable once loaded.
class MaterialDb {
public:
  /// Throws ParseError on a duplicate name or DomainError on invalid constants.
  void add(MaterialEntry entry);

  bool contains(std::string_view name) const;
  const MaterialEntry& at(std::string_view name) const;
  std::vector<std::string> names() const;
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

private:
  std::map<std::string, MaterialEntry, std::less<>> entries_;
};

/// Grammar: docs/file_formats.md. Errors name the offending entry.
MaterialDb parse_material_db(std::string_view text, std::string_view origin = "<string>");
MaterialDb load_material_db(const std::filesystem::path& path);

/// Mixing endpoints from two isotropic entries (Si-rich and Ge-rich end).
MixingEndpoints mixing_endpoints(const MaterialDb& db, std::string_view si_name,
                                 std::string_view ge_name);

}  // namespace sawfilm
