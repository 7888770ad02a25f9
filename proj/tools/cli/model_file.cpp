#include "model_file.hpp"

#include <cmath>
#include <fstream>

#include "table_io.hpp"

namespace cli {

using nlohmann::json;

std::string to_json_text(const ModelFile& m) {
    json j;
    j["format"] = "cellwise-model";
    j["schema_version"] = kModelSchemaVersion;
    j["columns"] = m.columns;
    j["mu"] = m.mu;
    j["sigma"] = m.sigma;
    if (m.locations && m.scales) j["scaler"] = {{"locations", *m.locations}, {"scales", *m.scales}};
    json det = json::object();
    if (m.quantile) det["quantile"] = *m.quantile;
    if (m.max_col_frac) det["max_col_frac"] = *m.max_col_frac;
    if (!det.empty()) j["detection"] = det;
    if (!m.fit.empty()) j["fit"] = m.fit;
    j["provenance"] = m.provenance;
    return j.dump(2) + "\n";
}

namespace {

std::vector<double> numbers(const json& j, const char* key, size_t expect, const std::string& source) {
    if (!j.contains(key) || !j[key].is_array()) throw Failure(kExitInput, source + ": missing array '" + key + "'");
    std::vector<double> out;
    for (const auto& v : j[key]) {
        if (!v.is_number()) throw Failure(kExitInput, source + ": non-numeric entry in '" + key + "'");
        out.push_back(v.get<double>());
    }
    if (out.size() != expect)
        throw Failure(kExitInput, source + ": '" + key + "' has " + std::to_string(out.size()) + " entries, expected " +
                                      std::to_string(expect));
    return out;
}

}  // namespace

ModelFile model_from_json(const json& j, const std::string& source) {
    if (!j.is_object() || j.value("format", "") != "cellwise-model")
        throw Failure(kExitInput, source + ": not a cellwise model file");
    const int version = j.value("schema_version", 0);
    if (version != kModelSchemaVersion)
        throw Failure(kExitInput, source + ": unsupported schema version " + std::to_string(version));
    ModelFile m;
    if (!j.contains("columns") || !j["columns"].is_array()) throw Failure(kExitInput, source + ": missing 'columns'");
    for (const auto& c : j["columns"]) {
        if (!c.is_string()) throw Failure(kExitInput, source + ": column names must be strings");
        m.columns.push_back(c.get<std::string>());
    }
    const size_t d = m.columns.size();
    if (d == 0) throw Failure(kExitInput, source + ": model has no columns");
    m.mu = numbers(j, "mu", d, source);
    m.sigma = numbers(j, "sigma", d * d, source);
    for (size_t a = 0; a < d; ++a)
        for (size_t b = 0; b < a; ++b)
            if (m.sigma[a * d + b] != m.sigma[b * d + a])
                throw Failure(kExitInput, source + ": sigma is not symmetric");
    if (j.contains("scaler")) {
        const auto& s = j["scaler"];
        m.locations = numbers(s, "locations", d, source);
        m.scales = numbers(s, "scales", d, source);
        for (double v : *m.scales)
            if (!(v > 0.0)) throw Failure(kExitInput, source + ": scaler scales must be positive");
    }
    if (j.contains("detection")) {
        const auto& det = j["detection"];
        if (det.contains("quantile")) m.quantile = det["quantile"].get<double>();
        if (det.contains("max_col_frac")) m.max_col_frac = det["max_col_frac"].get<double>();
    }
    if (j.contains("provenance")) m.provenance = j["provenance"];
    if (j.contains("fit")) m.fit = j["fit"];
    return m;
}

ModelFile load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Failure(kExitInput, "cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Failure(kExitInput, path.string() + ": invalid JSON: " + e.what());
    }
    return model_from_json(j, path.string());
}

}  // namespace cli
