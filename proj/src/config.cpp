#include "divband/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace divband {

using nlohmann::json;

namespace {

void require_object(const json& node, const std::string& where)
{
    if (!node.is_object())
        throw ConfigError("config: " + where + " must be an object");
}

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> required,
                std::initializer_list<const char*> optional)
{
    require_object(obj, where);
    std::set<std::string> allowed;
    for (const char* k : required) {
        allowed.insert(k);
        if (!obj.contains(k))
            throw ConfigError("config: missing key '" + where + "." + k + "'");
    }
    for (const char* k : optional) allowed.insert(k);
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            throw ConfigError("config: unknown key '" + where + "." + it.key() + "'");
}

double get_number(const json& obj, const std::string& where, const char* key)
{
    const json& v = obj.at(key);
    if (!v.is_number())
        throw ConfigError("config: '" + where + "." + key + "' must be a number");
    return v.get<double>();
}

std::string get_string(const json& obj, const std::string& where, const char* key)
{
    const json& v = obj.at(key);
    if (!v.is_string())
        throw ConfigError("config: '" + where + "." + key + "' must be a string");
    return v.get<std::string>();
}

bool get_bool(const json& obj, const std::string& where, const char* key)
{
    const json& v = obj.at(key);
    if (!v.is_boolean())
        throw ConfigError("config: '" + where + "." + key + "' must be a boolean");
    return v.get<bool>();
}

std::size_t get_count(const json& obj, const std::string& where, const char* key)
{
    const json& v = obj.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0)
        throw ConfigError("config: '" + where + "." + key +
                          "' must be a non-negative integer");
    return static_cast<std::size_t>(v.get<long long>());
}

Claim parse_claim(const json& node, const std::string& where)
{
    check_keys(node, where, {"type"}, {"beta"});
    std::string type = get_string(node, where, "type");
    if (type == "exponential") {
        if (!node.contains("beta"))
            throw ConfigError("config: missing key '" + where + ".beta'");
        return Claim::exponential(get_number(node, where, "beta"));
    }
    throw ConfigError("config: '" + where + ".type' must be \"exponential\", got \"" +
                      type + "\"");
}

ClassSpec parse_class(const json& node, const std::string& where)
{
    check_keys(node, where, {"name", "claim", "eta", "theta"}, {});
    ClassSpec cs;
    cs.name = get_string(node, where, "name");
    cs.claim = parse_claim(node.at("claim"), where + ".claim");
    cs.eta = get_number(node, where, "eta");
    cs.theta = get_number(node, where, "theta");
    return cs;
}

GroupSpec parse_group(const json& node, const std::string& where)
{
    check_keys(node, where, {"name", "lambda", "p"}, {});
    GroupSpec g;
    g.name = get_string(node, where, "name");
    g.lambda = get_number(node, where, "lambda");
    const json& p = node.at("p");
    if (!p.is_array() || p.size() != 2)
        throw ConfigError("config: '" + where + ".p' must be an array of two numbers");
    for (int l = 0; l < 2; ++l) {
        if (!p[l].is_number())
            throw ConfigError("config: '" + where + ".p' must be an array of two numbers");
        g.p[l] = p[l].get<double>();
    }
    return g;
}

ModelParams parse_model(const json& model, const json& econ)
{
    check_keys(model, "model", {"classes", "groups"}, {});
    const json& classes = model.at("classes");
    if (!classes.is_array() || classes.size() != 2)
        throw ConfigError("config: 'model.classes' must be an array of exactly two classes");
    const json& groups = model.at("groups");
    if (!groups.is_array() || groups.empty())
        throw ConfigError("config: 'model.groups' must be a non-empty array");

    ModelParams p;
    for (int i = 0; i < 2; ++i)
        p.classes[i] = parse_class(classes[i],
                                   "model.classes[" + std::to_string(i) + "]");
    for (std::size_t i = 0; i < groups.size(); ++i)
        p.groups.push_back(parse_group(groups[i],
                                       "model.groups[" + std::to_string(i) + "]"));

    check_keys(econ, "economics", {"delta", "k", "K"}, {});
    p.econ.delta = get_number(econ, "economics", "delta");
    p.econ.k = get_number(econ, "economics", "k");
    p.econ.K = get_number(econ, "economics", "K");
    p.validate();
    return p;
}

void parse_numerics(const json& node, SolveOptions& opt, QviOptions& qvi)
{
    check_keys(node, "numerics", {},
               {"q_max", "q_nodes", "solo_nodes", "tail_nodes", "u_min", "ode_rtol",
                "ode_atol", "root_tol", "quad_tol", "tail_abs", "qvi_tol_factor"});
    if (node.contains("q_max")) opt.q_max = get_number(node, "numerics", "q_max");
    if (node.contains("q_nodes")) opt.q_nodes = get_count(node, "numerics", "q_nodes");
    if (node.contains("solo_nodes"))
        opt.solo_nodes = get_count(node, "numerics", "solo_nodes");
    if (node.contains("tail_nodes"))
        opt.tail_nodes = get_count(node, "numerics", "tail_nodes");
    if (node.contains("u_min")) opt.u_min = get_number(node, "numerics", "u_min");
    if (node.contains("ode_rtol")) opt.ode_rtol = get_number(node, "numerics", "ode_rtol");
    if (node.contains("ode_atol")) opt.ode_atol = get_number(node, "numerics", "ode_atol");
    if (node.contains("root_tol"))
        opt.tol.root_abs = get_number(node, "numerics", "root_tol");
    if (node.contains("quad_tol"))
        opt.tol.quad_rel = get_number(node, "numerics", "quad_tol");
    if (node.contains("tail_abs"))
        opt.tol.tail_abs = get_number(node, "numerics", "tail_abs");
    if (node.contains("qvi_tol_factor"))
        qvi.tol_factor = get_number(node, "numerics", "qvi_tol_factor");
    if (!(opt.q_max > 1.0) || opt.q_nodes < 16 || opt.tail_nodes < 16)
        throw ConfigError("config: numerics grid is too coarse (q_max > 1, "
                          "q_nodes >= 16, tail_nodes >= 16)");
}

void parse_simulation(const json& node, SimConfig& sim)
{
    check_keys(node, "simulation", {},
               {"paths", "dt", "horizon", "seed", "antithetic", "workers"});
    if (node.contains("paths")) sim.n_paths = get_count(node, "simulation", "paths");
    if (node.contains("dt")) sim.dt = get_number(node, "simulation", "dt");
    if (node.contains("horizon")) sim.horizon = get_number(node, "simulation", "horizon");
    if (node.contains("seed"))
        sim.seed = static_cast<std::uint64_t>(get_count(node, "simulation", "seed"));
    if (node.contains("antithetic"))
        sim.antithetic = get_bool(node, "simulation", "antithetic");
    if (node.contains("workers"))
        sim.workers = static_cast<unsigned>(get_count(node, "simulation", "workers"));
    if (sim.n_paths < 1) throw ConfigError("config: 'simulation.paths' must be >= 1");
    if (!(sim.dt > 0.0)) throw ConfigError("config: 'simulation.dt' must be positive");
    if (!(sim.horizon > 0.0))
        throw ConfigError("config: 'simulation.horizon' must be positive");
}

} // namespace

json read_json_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("config: cannot open '" + path + "'");
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error& e) {
        throw ConfigError("config: '" + path + "' is not valid JSON: " + e.what());
    }
    return doc;
}

RunConfig parse_run_config(const json& doc)
{
    check_keys(doc, "<root>", {"model", "economics"},
               {"numerics", "simulation", "output_dir"});
    RunConfig rc;
    rc.params = parse_model(doc.at("model"), doc.at("economics"));
    if (doc.contains("numerics")) parse_numerics(doc.at("numerics"), rc.solve, rc.qvi);
    if (doc.contains("simulation")) parse_simulation(doc.at("simulation"), rc.sim);
    if (doc.contains("output_dir"))
        rc.output_dir = get_string(doc, "<root>", "output_dir");
    return rc;
}

RunConfig load_config(const std::string& path)
{
    return parse_run_config(read_json_file(path));
}

void set_scalar(json& doc, const std::string& dotted_path, double value)
{
    std::vector<std::string> parts;
    std::stringstream ss(dotted_path);
    for (std::string tok; std::getline(ss, tok, '.');) {
        if (tok.empty())
            throw ConfigError("config: empty component in sweep path '" + dotted_path + "'");
        parts.push_back(tok);
    }
    if (parts.empty())
        throw ConfigError("config: empty sweep path");
    // shorthand: "groups.<name>.lambda" / "classes.<name>.theta"
    if (parts.front() == "groups" || parts.front() == "classes")
        parts.insert(parts.begin(), "model");

    json* node = &doc;
    for (const std::string& part : parts) {
        if (node->is_object()) {
            if (!node->contains(part))
                throw ConfigError("config: sweep path '" + dotted_path +
                                  "': no key '" + part + "'");
            node = &(*node)[part];
        } else if (node->is_array()) {
            json* hit = nullptr;
            for (json& elem : *node)
                if (elem.is_object() && elem.contains("name") &&
                    elem["name"] == part) {
                    hit = &elem;
                    break;
                }
            if (!hit)
                throw ConfigError("config: sweep path '" + dotted_path +
                                  "': no element named '" + part + "'");
            node = hit;
        } else {
            throw ConfigError("config: sweep path '" + dotted_path +
                              "' descends past a scalar at '" + part + "'");
        }
    }
    if (!node->is_number())
        throw ConfigError("config: sweep path '" + dotted_path +
                          "' does not name a numeric leaf");
    *node = value;
}

} // namespace divband
