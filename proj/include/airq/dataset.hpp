#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "airq/time.hpp"

namespace airq::data {

// ---------------------------------------------------------------------------
// Pollutants and features
// ---------------------------------------------------------------------------

/// The six indexed pollutants. Declaration order doubles as the
/// deterministic tie-break order when two pollutants reach the same index.
enum class Pollutant { NO2, PM10, O3, PM25, CO, SO2 };

inline constexpr std::array<Pollutant, 6> kAllPollutants = {
    Pollutant::NO2, Pollutant::PM10, Pollutant::O3,
    Pollutant::PM25, Pollutant::CO, Pollutant::SO2};

std::string_view pollutant_name(Pollutant p);
std::optional<Pollutant> pollutant_from_name(std::string_view name);

/// Canonical meteorological feature names, in schema order.
inline constexpr std::array<std::string_view, 7> kMeteoFeatures = {
    "temperature", "wind_speed", "wind_direction", "rainfall",
    "humidity",    "solar_radiation", "pressure"};

bool is_meteo_feature(std::string_view name);

// ---------------------------------------------------------------------------
// Records
// ---------------------------------------------------------------------------

/// One hourly observation from one site. Absence from a map means the value
/// is missing. `derived` holds computed series (e.g. an AQI column) that
/// downstream stages attach to the record.
struct ObservationRecord {
    HourStamp time = 0;
    std::string site;
    std::map<std::string, double, std::less<>> meteo;
    std::map<Pollutant, double> pollutants;
    std::map<std::string, double, std::less<>> derived;

    /// Looks a field up by canonical name across all three maps.
    std::optional<double> field(std::string_view name) const;
};

/// Maps canonical field names onto CSV column headers.
struct CsvSchema {
    std::string timestamp = "timestamp";
    std::string site = "site";  // empty disables the site column
    std::map<std::string, std::string> meteo;       // feature -> column
    std::map<Pollutant, std::string> pollutants;    // kind -> column
    bool strict = false;  // require all mapped columns to exist in the header

    /// Identity mapping: canonical names are the column names.
    static CsvSchema defaults();
};

struct ParseResult {
    std::vector<ObservationRecord> records;
    /// Canonical names of fields whose column was found in the header.
    std::vector<std::string> observed_fields;
    std::size_t bad_cells = 0;  // unparseable or out-of-domain values, made missing
    std::size_t bad_rows = 0;   // rows dropped for an unparseable timestamp
};

/// Reads a LondonAir-style CSV. Empty cells are missing; unparseable numbers
/// and domain violations (wind direction outside [0,360), humidity outside
/// [0,100]) become missing and are counted in bad_cells.
/// Throws DataError when the file is unreadable or the header is missing,
/// ConfigError for strict-mode schema violations.
ParseResult parse_csv(const std::filesystem::path& path,
                      const CsvSchema& schema = CsvSchema::defaults());

struct CleanResult {
    std::vector<ObservationRecord> records;
    std::size_t removed_missing = 0;   // a required field was absent
    std::size_t removed_negative = 0;  // a pollutant concentration was < 0
};

/// Keeps only rows where every required field is present and no pollutant
/// reading is negative. Row order is preserved.
CleanResult clean(const std::vector<ObservationRecord>& records,
                  const std::vector<std::string>& required);

/// Fields (meteo + pollutants) with at least one present value, that is,
/// the observations this site actually reports.
std::vector<std::string> available_fields(const std::vector<ObservationRecord>& records);
std::vector<std::string> available_meteo(const std::vector<ObservationRecord>& records);
std::vector<Pollutant> available_pollutants(const std::vector<ObservationRecord>& records);

// ---------------------------------------------------------------------------
// Supervised frames
// ---------------------------------------------------------------------------

/// Lag-joined design matrix: exogenous features at t plus the target at
/// t - lag (and optionally extra lags), against the target at t.
/// Values are raw (unnormalized); rows are in time order.
struct SupervisedFrame {
    Eigen::MatrixXd inputs;   // N x F
    Eigen::VectorXd targets;  // N
    std::vector<std::string> feature_names;
    int lag = 1;

    Eigen::Index rows() const { return inputs.rows(); }
    Eigen::Index cols() const { return inputs.cols(); }

    /// Row subset in the given order (used to realize train/val/test splits).
    SupervisedFrame select(const std::vector<Eigen::Index>& idx) const;
};

/// Builds the frame for `target` with one lagged target term at t - lag.
/// A row for hour t is emitted only when the records at t and t - lag (and
/// any extra lags) exist and carry every needed field. Duplicate hours keep
/// the first occurrence. Throws DataError with fewer than 2 usable rows.
SupervisedFrame build_frame(const std::vector<ObservationRecord>& records,
                            std::string_view target,
                            const std::vector<std::string>& exogenous,
                            int lag,
                            const std::vector<int>& extra_lags = {});

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

struct MinMax {
    double min = 0.0;
    double max = 0.0;
};

/// Per-column linear rescaling onto [-1, +1]. A constant column maps to 0
/// everywhere and inverts back to its constant value.
struct NormalizationParams {
    std::vector<MinMax> features;  // aligned with frame columns
    MinMax target;

    /// Pass-through parameters ([-1,1] -> [-1,1]) for already-scaled data.
    static NormalizationParams identity(std::size_t feature_count);
};

double apply_norm(double x, const MinMax& m);
double invert_norm(double z, const MinMax& m);

NormalizationParams fit_normalization(const SupervisedFrame& frame);
Eigen::MatrixXd apply_normalization(const NormalizationParams& p, const Eigen::MatrixXd& inputs);
Eigen::VectorXd apply_target_norm(const NormalizationParams& p, const Eigen::VectorXd& y);
Eigen::VectorXd invert_target_norm(const NormalizationParams& p, const Eigen::VectorXd& z);

// ---------------------------------------------------------------------------
// Splits
// ---------------------------------------------------------------------------

struct SplitRatios {
    double train = 0.70;
    double validation = 0.15;
    double test = 0.15;
};

struct SplitIndices {
    std::vector<Eigen::Index> train;
    std::vector<Eigen::Index> validation;
    std::vector<Eigen::Index> test;
    std::uint64_t seed = 0;
};

/// Seeded uniform shuffle partitioned by the ratios. The test block is taken
/// from the tail of the permutation, so families with the same test ratio and
/// seed (e.g. 70/15/15 and 75/0/15) score against identical test rows.
/// Throws DataError when a partition with positive ratio comes out empty.
SplitIndices split(std::size_t n, const SplitRatios& ratios, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Summaries
// ---------------------------------------------------------------------------

struct FiveNumber {
    double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
    double iqr() const { return q3 - q1; }
    double lower_whisker() const { return q1 - 1.5 * iqr(); }
    double upper_whisker() const { return q3 + 1.5 * iqr(); }
};

struct FieldSummary {
    std::size_t present = 0;
    std::size_t missing = 0;
    std::optional<FiveNumber> stats;  // absent when the field is never present
    double missing_rate() const {
        std::size_t total = present + missing;
        return total == 0 ? 0.0 : 100.0 * static_cast<double>(missing) / static_cast<double>(total);
    }
};

/// Five-number summary (quartiles by linear interpolation between closest
/// ranks) plus missing rate, per field. With no explicit field list the
/// canonical universe (all meteo features and pollutants) is summarized.
std::map<std::string, FieldSummary> summarize(const std::vector<ObservationRecord>& records,
                                              const std::vector<std::string>& fields = {});

/// Quantile by linear interpolation between closest ranks; `sorted` ascending.
double quantile(const std::vector<double>& sorted, double p);

}  // namespace airq::data
