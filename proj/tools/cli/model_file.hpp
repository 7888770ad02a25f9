#pragma once

// Versioned JSON persistence of a location/covariance model.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace cli {

inline constexpr int kModelSchemaVersion = 1;

struct ModelFile {
    std::vector<std::string> columns;
    std::vector<double> mu;
    std::vector<double> sigma;  // row-major d x d
    std::optional<std::vector<double>> locations;
    std::optional<std::vector<double>> scales;
    // Detection settings used to produce the flags stored alongside the model.
    std::optional<double> quantile;
    std::optional<double> max_col_frac;
    nlohmann::json provenance = nlohmann::json::object();
    nlohmann::json fit = nlohmann::json::object();

    size_t dim() const { return columns.size(); }
};

std::string to_json_text(const ModelFile& m);
ModelFile model_from_json(const nlohmann::json& j, const std::string& source);
/// Checks shapes and symmetry; positive definiteness is left to the caller.
ModelFile load_model(const std::filesystem::path& path);

}  // namespace cli
