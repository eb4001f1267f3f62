#pragma once

#include "pft/clustering.hpp"
#include "pft/eval.hpp"
#include "pft/forecaster.hpp"
#include "pft/pool.hpp"

#include "json.hpp"

#include <filesystem>

namespace pft {

// nlohmann::json conversions, found by ADL.

void to_json(nlohmann::json& j, const ModelSpec& spec);
void from_json(const nlohmann::json& j, ModelSpec& spec);

/// {"kind", "p", "hidden", "activation", "values": [...]}
void to_json(nlohmann::json& j, const WeightVector& w);
void from_json(const nlohmann::json& j, WeightVector& w);

void to_json(nlohmann::json& j, const Clustering& c);
void from_json(const nlohmann::json& j, Clustering& c);

void to_json(nlohmann::json& j, const SpecialistPool& pool);
void from_json(const nlohmann::json& j, SpecialistPool& pool);

void to_json(nlohmann::json& j, const MetricRow& r);
void from_json(const nlohmann::json& j, MetricRow& r);
void to_json(nlohmann::json& j, const StrategySummary& s);
void from_json(const nlohmann::json& j, StrategySummary& s);
void to_json(nlohmann::json& j, const EvaluationReport& r);
void from_json(const nlohmann::json& j, EvaluationReport& r);

void save_pool(const SpecialistPool& pool, const std::filesystem::path& path);
SpecialistPool load_pool(const std::filesystem::path& path);

void write_json(const nlohmann::json& j, const std::filesystem::path& path);
nlohmann::json read_json(const std::filesystem::path& path);

} // namespace pft
