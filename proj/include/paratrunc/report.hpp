#pragma once

#include <string>

#include <json.hpp>

#include "paratrunc/caloric.hpp"
#include "paratrunc/orlicz.hpp"
#include "paratrunc/poincare.hpp"
#include "paratrunc/truncation.hpp"
#include "paratrunc/whitney.hpp"

namespace paratrunc {

using Json = nlohmann::json;

inline constexpr int kReportSchema = 1;

/// Report skeleton: {"schema_version", "kind", "anchors": {}}. Measured
/// constants are stored at top level and each gets one anchor string.
Json new_report(const std::string& kind);
void put(Json& report, const std::string& key, const Json& value, const std::string& anchor);

void put_truncation(Json& report, const TruncationResult& res, const TruncationReport& r);
void put_cover(Json& report, const CoverDiagnostics& d);
void put_poincare(Json& report, const PoincareBatteryResult& r);
void put_good_lambda(Json& report, const GoodLambda& gl, int m0);
void put_experiment(Json& report, const ExperimentReport& r);
void put_heat(Json& report, const HeatSolution& s);
void put_characteristics(Json& report, const NFunction& phi);

/// Stable text form: two-space indent, trailing newline.
std::string dump(const Json& report);

}  // namespace paratrunc
