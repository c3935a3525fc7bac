// Config descriptors (maps, potentials, measures from JSON) and tabular output.
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "mfa/interval_maps.hpp"
#include "mfa/measures.hpp"
#include "mfa/potentials.hpp"

namespace mfa {

using Config = nlohmann::ordered_json;

// parse a JSON config file; validation errors on unreadable or malformed input
Config load_config_file(const std::string& path);

// {"kind": "doubling" | "cantor" | "linear" | "manneville_pomeau" | "farey", ...}
BranchMap map_from_config(const Config& j);

// {"kind": "digit" | "geometric" | "constant" | "additive" | "matrix", ...}
AlmostAdditivePotential potential_from_config(const Config& j, const BranchMap& map);

// {"kind": "bernoulli" | "markov", ...}
MarkovMeasure measure_from_config(const Config& j);

std::string csv_escape(const std::string& cell);
void write_csv_row(std::ostream& os, const std::vector<std::string>& cells);

}  // namespace mfa
