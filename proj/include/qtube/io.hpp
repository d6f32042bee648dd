#pragma once

#include "qtube/experiments.hpp"
#include "qtube/solver.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace qtube {

std::string dataset_to_csv(const Dataset& dataset);
Dataset dataset_from_csv(const std::string& csv);

nlohmann::json fit_result_to_json(const FitResult& result);

nlohmann::json rate_report_to_json(const RateReport& report);
std::string rate_report_to_csv(const RateReport& report);

nlohmann::json sparsity_rows_to_json(const std::vector<SparsityRow>& rows);
std::string sparsity_rows_to_csv(const std::vector<SparsityRow>& rows);

/// eta and p spelled "inf" in config files.
nlohmann::json config_to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const nlohmann::json& j);

std::uint64_t fnv1a(const std::string& data);

/// Write via temp file + rename so readers never observe partial output.
void atomic_write(const std::filesystem::path& path, const std::string& content);

nlohmann::json make_manifest(const nlohmann::json& config,
                             std::uint64_t seed,
                             const std::vector<std::string>& outputs);

} // namespace qtube
