#pragma once

#include <map>
#include <string>
#include <vector>

#include "dfalab/train.hpp"

namespace dfalab {

/// Flat key = value text: one pair per line, '#' comments, blank lines
/// ignored. Keys are unique; a repeat is a validation error.
using KvMap = std::map<std::string, std::string>;

KvMap parse_kv_text(const std::string& text, const std::string& origin = "<string>");
KvMap parse_kv_file(const std::string& path);

/// Typed lookups; `required` variants throw ValidationError naming the key.
std::string kv_get(const KvMap& kv, const std::string& key, const std::string& fallback);
std::string kv_require(const KvMap& kv, const std::string& key);
long long kv_get_int(const KvMap& kv, const std::string& key, long long fallback);
double kv_get_double(const KvMap& kv, const std::string& key, double fallback);

/// Builds a run config from the documented keys (see README). Unknown keys
/// are validation errors so typos cannot silently fall back to defaults.
RunConfig run_config_from_kv(const KvMap& kv);

/// A sweep grid file is a run config plus list-valued `sizes` (comma-
/// separated n_layerxd_model pairs), `modes` and `lrs`; the grid is their
/// cross product in file order.
std::vector<RunConfig> sweep_grid_from_kv(const KvMap& kv);

}  // namespace dfalab
