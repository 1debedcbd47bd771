#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "airq/dataset.hpp"

namespace airq::aqi {

// ---------------------------------------------------------------------------
// Breakpoint tables
// ---------------------------------------------------------------------------

/// One piecewise-linear segment: concentrations in [bp_lo, bp_hi] map onto
/// index values [i_lo, i_hi].
struct Segment {
    double bp_lo = 0;
    double bp_hi = 0;
    int i_lo = 0;
    int i_hi = 0;
};

/// Per-pollutant scale: the unit the segments are expressed in, the number of
/// decimals concentrations are truncated to, the conversion factor from
/// µg/m³ into that unit, and the ordered segment list.
struct PollutantScale {
    std::string unit;
    int truncation_decimals = 0;
    double ugm3_to_unit = 1.0;
    std::vector<Segment> segments;
};

struct BreakpointTable {
    std::map<data::Pollutant, PollutantScale> scales;

    const PollutantScale& scale_for(data::Pollutant p) const;

    /// Checks ordering, contiguity at the truncation precision,
    /// non-overlap, and non-decreasing index ranges. Throws ConfigError.
    void validate() const;
};

/// Built-in EPA index table for NO2, CO, O3, SO2, PM2.5 and PM10, with
/// µg/m³ conversion factors at 25 °C / 1 atm. Fully overridable via a
/// breakpoint config file.
BreakpointTable default_breakpoints();

BreakpointTable load_breakpoints(const std::filesystem::path& path);
void save_breakpoints(const BreakpointTable& table, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Index computation
// ---------------------------------------------------------------------------

/// Truncates a concentration (already in the pollutant's table unit) toward
/// zero at the pollutant's configured decimal places.
double truncate_concentration(double c, data::Pollutant p, const BreakpointTable& table);

struct Iaqi {
    int value = 0;
    bool above_scale = false;  // concentration beyond the top segment
};

/// Individual AQI for a truncated concentration in table units: locate the
/// segment with bp_lo <= c <= bp_hi and interpolate, rounding half-up.
/// Concentrations above the top segment clamp to 500 with the flag set.
Iaqi iaqi(double c_truncated, data::Pollutant p, const BreakpointTable& table);

struct AqiResult {
    int aqi = 0;
    data::Pollutant dominant = data::Pollutant::NO2;
    std::map<data::Pollutant, int> per_pollutant;
    bool above_scale = false;
};

/// Overall AQI from µg/m³ concentrations: convert, truncate, index each
/// pollutant, take the maximum. Ties keep the first pollutant in enumeration
/// order. Throws ConfigError for a pollutant absent from the table and
/// DataError for an empty concentration map.
AqiResult aqi(const std::map<data::Pollutant, double>& concentrations_ugm3,
              const BreakpointTable& table);

// ---------------------------------------------------------------------------
// Bands
// ---------------------------------------------------------------------------

/// Six health-concern bands partitioning [0, 500]:
/// 0-50, 51-100, 101-200, 201-300, 301-400, 401-500.
enum class Band { Good = 0, Moderate, Unhealthy, VeryUnhealthy, Hazardous, VeryHazardous };

Band band(int aqi_value);  // throws DataError outside [0, 500]
std::string_view band_label(Band b);
std::pair<int, int> band_range(Band b);

/// Percentage of results whose dominant pollutant is `kind`.
double dominant_rate(std::span<const AqiResult> results, data::Pollutant kind);

}  // namespace airq::aqi
