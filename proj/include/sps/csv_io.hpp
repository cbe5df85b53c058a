#ifndef SPS_CSV_IO_HPP
#define SPS_CSV_IO_HPP

#include "sps/predict.hpp"
#include "sps/sampler.hpp"

#include <json.hpp>

#include <string>

namespace sps {

/// Dataset CSV: header `x1,...,xd,y1,...,yN`, one row per location.
void write_dataset_csv(const SpatialDataset& ds, const std::string& path);
SpatialDataset read_dataset_csv(const std::string& path);

/// Query CSV: header `x1,...,xd`.
Points read_query_csv(const std::string& path);
void write_query_csv(const Points& queries, const std::string& path);

/// Prediction CSV: header `x1,...,xd,mean,variance`.
void write_prediction_csv(const Points& queries, const PredictiveDistribution& pred, const std::string& path);

/// params.json: {family, theta_rho: [...], theta_v, theta_0, diagnostics: {...}}.
nlohmann::json params_to_json(const CovarianceParams& params);
CovarianceParams params_from_json(const nlohmann::json& j, Index dim);

nlohmann::json read_json(const std::string& path);
void write_json(const nlohmann::json& j, const std::string& path);

/// %.17g, so values round-trip exactly.
std::string format_double(double v);

}  // namespace sps

#endif  // SPS_CSV_IO_HPP
