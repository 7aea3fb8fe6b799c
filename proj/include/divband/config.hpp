#pragma once

#include <string>

#include <json.hpp>

#include "divband/model.hpp"
#include "divband/qvi.hpp"
#include "divband/simulate.hpp"
#include "divband/solver.hpp"

namespace divband {

// Everything a CLI run needs, parsed from one JSON document with four blocks:
// model, economics, numerics (optional), simulation (optional).
struct RunConfig {
    ModelParams params;
    SolveOptions solve;
    SimConfig sim;
    QviOptions qvi;
    std::string output_dir;   // empty means the working directory
};

nlohmann::json read_json_file(const std::string& path);

// Strict parse: every unknown key is rejected with a message naming the full
// field path, wrong types and out-of-range values raise ConfigError.
RunConfig parse_run_config(const nlohmann::json& doc);

RunConfig load_config(const std::string& path);

// Resolve a dotted sweep path ("economics.K", "model.groups.both.lambda",
// or the shorthands "groups.both.lambda" / "classes.first.theta") and set the
// numeric leaf. Throws ConfigError when the path does not name a number.
void set_scalar(nlohmann::json& doc, const std::string& dotted_path, double value);

} // namespace divband
