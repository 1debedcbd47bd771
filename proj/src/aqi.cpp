#include "airq/aqi.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "airq/error.hpp"

namespace airq::aqi {

using data::Pollutant;
using nlohmann::json;

const PollutantScale& BreakpointTable::scale_for(Pollutant p) const {
    auto it = scales.find(p);
    if (it == scales.end())
        throw ConfigError("pollutant '" + std::string(data::pollutant_name(p)) +
                          "' is not in the breakpoint table");
    return it->second;
}

void BreakpointTable::validate() const {
    for (const auto& [kind, scale] : scales) {
        const std::string name(data::pollutant_name(kind));
        if (scale.truncation_decimals < 0)
            throw ConfigError(name + ": truncation decimals must be >= 0");
        if (scale.ugm3_to_unit <= 0)
            throw ConfigError(name + ": conversion factor must be positive");
        if (scale.segments.empty())
            throw ConfigError(name + ": at least one segment is required");
        const double step = std::pow(10.0, -scale.truncation_decimals);
        int prev_i_hi = scale.segments.front().i_lo;
        for (std::size_t i = 0; i < scale.segments.size(); ++i) {
            const auto& s = scale.segments[i];
            if (s.bp_lo > s.bp_hi) throw ConfigError(name + ": segment with bp_lo > bp_hi");
            if (s.i_lo > s.i_hi) throw ConfigError(name + ": segment with i_lo > i_hi");
            if (s.i_lo < prev_i_hi)
                throw ConfigError(name + ": index ranges must be non-decreasing");
            prev_i_hi = s.i_hi;
            if (i > 0) {
                const auto& prev = scale.segments[i - 1];
                if (std::abs(s.bp_lo - (prev.bp_hi + step)) > step * 1e-6)
                    throw ConfigError(name + ": segments must be contiguous at the " +
                                      "truncation precision");
            }
        }
    }
}

BreakpointTable default_breakpoints() {
    BreakpointTable t;
    // ppb = µg/m³ · 24.45 / MW at 25 °C, 1 atm; ppm adds a factor 1/1000.
    t.scales[Pollutant::NO2] = {"ppb", 0, 24.45 / 46.01,
        {{0, 53, 0, 50}, {54, 100, 51, 100}, {101, 360, 101, 150}, {361, 649, 151, 200},
         {650, 1249, 201, 300}, {1250, 1649, 301, 400}, {1650, 2049, 401, 500}}};
    t.scales[Pollutant::PM10] = {"ug/m3", 0, 1.0,
        {{0, 54, 0, 50}, {55, 154, 51, 100}, {155, 254, 101, 150}, {255, 354, 151, 200},
         {355, 424, 201, 300}, {425, 504, 301, 400}, {505, 604, 401, 500}}};
    t.scales[Pollutant::O3] = {"ppm", 3, 24.45 / 48.00 / 1000.0,
        {{0.000, 0.054, 0, 50}, {0.055, 0.070, 51, 100}, {0.071, 0.085, 101, 150},
         {0.086, 0.105, 151, 200}, {0.106, 0.200, 201, 300}, {0.201, 0.404, 301, 400},
         {0.405, 0.604, 401, 500}}};
    t.scales[Pollutant::PM25] = {"ug/m3", 1, 1.0,
        {{0.0, 12.0, 0, 50}, {12.1, 35.4, 51, 100}, {35.5, 55.4, 101, 150},
         {55.5, 150.4, 151, 200}, {150.5, 250.4, 201, 300}, {250.5, 350.4, 301, 400},
         {350.5, 500.4, 401, 500}}};
    t.scales[Pollutant::CO] = {"ppm", 1, 24.45 / 28.01 / 1000.0,
        {{0.0, 4.4, 0, 50}, {4.5, 9.4, 51, 100}, {9.5, 12.4, 101, 150},
         {12.5, 15.4, 151, 200}, {15.5, 30.4, 201, 300}, {30.5, 40.4, 301, 400},
         {40.5, 50.4, 401, 500}}};
    t.scales[Pollutant::SO2] = {"ppb", 0, 24.45 / 64.07,
        {{0, 35, 0, 50}, {36, 75, 51, 100}, {76, 185, 101, 150}, {186, 304, 151, 200},
         {305, 604, 201, 300}, {605, 804, 301, 400}, {805, 1004, 401, 500}}};
    t.validate();
    return t;
}

BreakpointTable load_breakpoints(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open breakpoint file: " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ConfigError("invalid breakpoint file " + path.string() + ": " + e.what());
    }
    BreakpointTable t;
    if (!doc.contains("pollutants") || !doc["pollutants"].is_object())
        throw ConfigError("breakpoint file must contain a 'pollutants' object");
    for (const auto& [name, body] : doc["pollutants"].items()) {
        auto kind = data::pollutant_from_name(name);
        if (!kind) throw ConfigError("unknown pollutant '" + name + "' in breakpoint file");
        PollutantScale scale;
        scale.unit = body.value("unit", std::string("ug/m3"));
        scale.truncation_decimals = body.value("truncation_decimals", 0);
        scale.ugm3_to_unit = body.value("ugm3_to_unit", 1.0);
        for (const auto& row : body.at("segments")) {
            if (!row.is_array() || row.size() != 4)
                throw ConfigError(name + ": each segment must be [bp_lo, bp_hi, i_lo, i_hi]");
            scale.segments.push_back(Segment{row[0].get<double>(), row[1].get<double>(),
                                             row[2].get<int>(), row[3].get<int>()});
        }
        t.scales[*kind] = std::move(scale);
    }
    t.validate();
    return t;
}

void save_breakpoints(const BreakpointTable& table, const std::filesystem::path& path) {
    json doc;
    for (const auto& [kind, scale] : table.scales) {
        json body;
        body["unit"] = scale.unit;
        body["truncation_decimals"] = scale.truncation_decimals;
        body["ugm3_to_unit"] = scale.ugm3_to_unit;
        json rows = json::array();
        for (const auto& s : scale.segments)
            rows.push_back({s.bp_lo, s.bp_hi, s.i_lo, s.i_hi});
        body["segments"] = std::move(rows);
        doc["pollutants"][std::string(data::pollutant_name(kind))] = std::move(body);
    }
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write breakpoint file: " + path.string());
    out << doc.dump(2) << '\n';
}

double truncate_concentration(double c, Pollutant p, const BreakpointTable& table) {
    const auto& scale = table.scale_for(p);
    const double factor = std::pow(10.0, scale.truncation_decimals);
    // The relative nudge absorbs binary representation error so that e.g.
    // 8.2 stays 8.2 at one decimal instead of dropping to 8.1.
    return std::floor(c * factor * (1.0 + 1e-12)) / factor;
}

Iaqi iaqi(double c, Pollutant p, const BreakpointTable& table) {
    const auto& scale = table.scale_for(p);
    const auto& segs = scale.segments;
    if (c > segs.back().bp_hi) return {500, true};
    for (const auto& s : segs) {
        if (c <= s.bp_hi) {
            const double cc = std::max(c, s.bp_lo);
            double v = static_cast<double>(s.i_lo);
            if (s.bp_hi > s.bp_lo)
                v = static_cast<double>(s.i_hi - s.i_lo) / (s.bp_hi - s.bp_lo) *
                        (cc - s.bp_lo) +
                    static_cast<double>(s.i_lo);
            return {static_cast<int>(std::floor(v + 0.5)), false};
        }
    }
    return {segs.front().i_lo, false};  // c below the first segment: clamp
}

AqiResult aqi(const std::map<Pollutant, double>& concentrations_ugm3,
              const BreakpointTable& table) {
    if (concentrations_ugm3.empty())
        throw DataError("aqi() requires at least one pollutant concentration");
    AqiResult result;
    bool first = true;
    for (Pollutant p : data::kAllPollutants) {
        auto it = concentrations_ugm3.find(p);
        if (it == concentrations_ugm3.end()) continue;
        const auto& scale = table.scale_for(p);
        const double in_unit = it->second * scale.ugm3_to_unit;
        const Iaqi individual = iaqi(truncate_concentration(in_unit, p, table), p, table);
        result.per_pollutant[p] = individual.value;
        result.above_scale = result.above_scale || individual.above_scale;
        if (first || individual.value > result.aqi) {
            result.aqi = individual.value;
            result.dominant = p;
            first = false;
        }
    }
    return result;
}

Band band(int aqi_value) {
    if (aqi_value < 0 || aqi_value > 500)
        throw DataError("AQI value " + std::to_string(aqi_value) + " outside [0, 500]");
    if (aqi_value <= 50) return Band::Good;
    if (aqi_value <= 100) return Band::Moderate;
    if (aqi_value <= 200) return Band::Unhealthy;
    if (aqi_value <= 300) return Band::VeryUnhealthy;
    if (aqi_value <= 400) return Band::Hazardous;
    return Band::VeryHazardous;
}

std::string_view band_label(Band b) {
    switch (b) {
        case Band::Good: return "good";
        case Band::Moderate: return "moderate";
        case Band::Unhealthy: return "unhealthy";
        case Band::VeryUnhealthy: return "very_unhealthy";
        case Band::Hazardous: return "hazardous";
        case Band::VeryHazardous: return "very_hazardous";
    }
    return "unknown";
}

std::pair<int, int> band_range(Band b) {
    switch (b) {
        case Band::Good: return {0, 50};
        case Band::Moderate: return {51, 100};
        case Band::Unhealthy: return {101, 200};
        case Band::VeryUnhealthy: return {201, 300};
        case Band::Hazardous: return {301, 400};
        case Band::VeryHazardous: return {401, 500};
    }
    return {0, 0};
}

double dominant_rate(std::span<const AqiResult> results, Pollutant kind) {
    if (results.empty()) throw DataError("dominant_rate requires a non-empty result list");
    std::size_t hits = 0;
    for (const auto& r : results)
        if (r.dominant == kind) ++hits;
    return 100.0 * static_cast<double>(hits) / static_cast<double>(results.size());
}

}  // namespace airq::aqi
