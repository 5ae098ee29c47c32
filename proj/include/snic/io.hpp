#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "snic/flow.hpp"
#include "snic/models/builtin.hpp"
#include "snic/models/expr.hpp"
#include "snic/normalform.hpp"

namespace snic::io {

using json = nlohmann::ordered_json;

inline json to_json(const nf::UnfoldingParams& p) {
    return json{{"mu1", p.mu1},       {"mu2", p.mu2},           {"mu3", p.mu3},   {"rho", p.rho},
                {"lambda_s", p.lambda_s}, {"lambda_u", p.lambda_u}, {"delta", p.delta}, {"eps", p.eps},
                {"a1", p.a1},         {"a2", p.a2}};
}

inline nf::UnfoldingParams unfolding_from_json(const json& j) {
    if (!j.is_object()) throw ParameterError("unfolding parameters must be a JSON object");
    nf::UnfoldingParams p;
    for (auto& [k, v] : j.items()) {
        if (!v.is_number()) throw ParameterError("field '" + k + "' must be a number");
        double d = v.get<double>();
        if (k == "mu1") p.mu1 = d;
        else if (k == "mu2") p.mu2 = d;
        else if (k == "mu3") p.mu3 = d;
        else if (k == "rho") p.rho = d;
        else if (k == "lambda_s") p.lambda_s = d;
        else if (k == "lambda_u") p.lambda_u = d;
        else if (k == "delta") p.delta = d;
        else if (k == "eps") p.eps = d;
        else if (k == "a1") p.a1 = d;
        else if (k == "a2") p.a2 = d;
        else throw ParameterError("unknown unfolding field '" + k + "'");
    }
    return p;
}

inline json params_json(const Params& p, const ParamSchema& order) {
    json j = json::object();
    for (auto& kv : order) j[kv.first] = p.at(kv.first);
    return j;
}

// model file: {"name": builtin, "params": {...}} or {"expr_x": .., "expr_y": .., "params": {...}}
struct ModelSpec {
    std::string name;
    std::string expr_x, expr_y;
    Params params;

    bool is_expr() const { return !expr_x.empty() || !expr_y.empty(); }
};

inline ModelSpec model_from_json(const json& j) {
    if (!j.is_object()) throw ParameterError("model file must hold a JSON object");
    ModelSpec m;
    for (auto& [k, v] : j.items()) {
        if (k == "name") {
            if (!v.is_string()) throw ParameterError("'name' must be a string");
            m.name = v.get<std::string>();
        } else if (k == "expr_x" || k == "expr_y") {
            if (!v.is_string()) throw ParameterError("'" + k + "' must be a string");
            (k == "expr_x" ? m.expr_x : m.expr_y) = v.get<std::string>();
        } else if (k == "params") {
            if (!v.is_object()) throw ParameterError("'params' must be an object");
            for (auto& [pk, pv] : v.items()) {
                if (!pv.is_number()) throw ParameterError("parameter '" + pk + "' must be a number");
                m.params[pk] = pv.get<double>();
            }
        } else {
            throw ParameterError("unknown model key '" + k + "'");
        }
    }
    if (m.is_expr()) {
        if (m.expr_x.empty() || m.expr_y.empty()) throw ParameterError("expression models need expr_x and expr_y");
    } else if (m.name.empty()) {
        throw ParameterError("model needs 'name' or 'expr_x'/'expr_y'");
    }
    return m;
}

inline PlanarField make_field(const ModelSpec& m) {
    if (m.is_expr()) return expr::parse_field(m.expr_x, m.expr_y, m.params).field(m.name.empty() ? "expr" : m.name);
    return models::builtin(m.name, m.params);
}

inline json model_to_json(const PlanarField& f) {
    json j;
    j["name"] = f.name();
    j["params"] = params_json(f.params(), f.schema());
    return j;
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParameterError("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ParameterError("bad JSON in '" + path + "': " + e.what());
    }
}

// builtin name, or a path to a model file
inline PlanarField load_model(const std::string& ref, const Params& overrides = {}) {
    for (auto& n : models::builtin_names())
        if (ref == n) return models::builtin(ref, overrides);
    if (ref.size() > 5 && ref.substr(ref.size() - 5) == ".json") {
        ModelSpec m = model_from_json(read_json_file(ref));
        for (auto& [k, v] : overrides) m.params[k] = v;
        return make_field(m);
    }
    throw ParameterError("unknown model '" + ref + "'");
}

}  // namespace snic::io
