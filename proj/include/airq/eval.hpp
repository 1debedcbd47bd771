#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "airq/aqi.hpp"
#include "airq/dataset.hpp"
#include "airq/lm.hpp"

namespace airq::eval {

enum class Approach { AqiPredict, Pollutant2Aqi };
enum class Algorithm { Narx, Lr };

std::string_view approach_name(Approach a);
std::string_view algorithm_name(Algorithm a);
Approach approach_from_name(std::string_view name);
Algorithm algorithm_from_name(std::string_view name);

/// One evaluation request: which branch, which learner, how many repeats.
struct RunSpec {
    std::string site;
    Approach approach = Approach::AqiPredict;
    Algorithm algorithm = Algorithm::Narx;
    int run_count = 10;
    /// Ratios per algorithm family. Both share the test fraction so the two
    /// learners score on the same held-out rows for a given seed.
    data::SplitRatios narx_ratios{0.70, 0.15, 0.15};
    data::SplitRatios lr_ratios{0.75, 0.0, 0.15};
    std::uint64_t master_seed = 0;

    const data::SplitRatios& ratios_for(Algorithm a) const {
        return a == Algorithm::Narx ? narx_ratios : lr_ratios;
    }
};

/// Model settings shared by every run.
struct PipelineConfig {
    lm::TrainConfig train;
    std::vector<int> hidden_units{10};
    int delay = 1;
};

struct RunMetrics {
    std::uint64_t seed = 0;
    double rmse = 0.0;
    double mape = 0.0;
    double band_accuracy = 0.0;
    int mape_excluded = 0;
};

struct EvalReport {
    RunSpec spec;
    std::vector<RunMetrics> runs;
    double mean_rmse = 0.0;
    double mean_mape = 0.0;
    double mean_band_accuracy = 0.0;
    /// Total near-zero targets skipped by MAPE across runs.
    int mape_excluded_count = 0;
    /// Mean per-pollutant concentration MAPE; filled by the pollutant branch.
    std::map<data::Pollutant, double> pollutant_mape;
};

/// A site's cleaned table with the derived AQI column attached: rows where
/// every reported field is present, plus the per-row AQI of the actual
/// concentrations.
struct SitePrep {
    std::vector<data::ObservationRecord> records;
    std::vector<aqi::AqiResult> aqi_results;  // aligned with records
    std::vector<std::string> meteo;
    std::vector<data::Pollutant> pollutants;
};

SitePrep prepare_site(const std::vector<data::ObservationRecord>& records,
                      const aqi::BreakpointTable& table);

/// Branch one: derive the historical AQI series and model it directly.
EvalReport run_aqipredict(const std::vector<data::ObservationRecord>& records, const RunSpec& spec,
                          const aqi::BreakpointTable& table, const PipelineConfig& config);

/// Branch two: model each pollutant, then compose predicted concentrations
/// into an AQI. Truth is always the AQI of the actual concentrations.
EvalReport run_pollutant2aqi(const std::vector<data::ObservationRecord>& records,
                             const RunSpec& spec, const aqi::BreakpointTable& table,
                             const PipelineConfig& config);

/// One approach/algorithm cell of the comparison grid.
struct ComparisonCell {
    Approach approach = Approach::AqiPredict;
    Algorithm algorithm = Algorithm::Narx;
    bool ok = false;
    std::string error;
    std::optional<EvalReport> report;
    bool best_rmse = false;
    bool best_mape = false;
    bool best_band_accuracy = false;
};

struct SiteComparison {
    std::string site;
    /// Fixed order: aqipredict,narx / aqipredict,lr / pollutant2aqi,narx / pollutant2aqi,lr.
    std::vector<ComparisonCell> cells;
    std::optional<data::Pollutant> dominant;
    double dominant_rate = 0.0;
    /// Suggested learner for the site: "lr" when PM10 dominates, else "narx".
    std::string recommendation;
};

struct Comparison {
    std::vector<SiteComparison> sites;
    bool any_ok() const;
};

/// Runs the full site x approach x algorithm grid. Per-site failures become
/// marked cells; the batch keeps going.
Comparison compare(const std::vector<std::pair<std::string, std::vector<data::ObservationRecord>>>&
                       sites,
                   const RunSpec& base, const aqi::BreakpointTable& table,
                   const PipelineConfig& config);

/// Runs the single cell named by the spec for one site, including the
/// dominant-pollutant scan. Unlike compare, errors propagate.
SiteComparison evaluate_site(const std::vector<data::ObservationRecord>& records,
                             const RunSpec& spec, const aqi::BreakpointTable& table,
                             const PipelineConfig& config);

void write_report_json(const Comparison& comparison, const std::filesystem::path& path);
void write_report_csv(const Comparison& comparison, const std::filesystem::path& path);
void write_pollutants_csv(const Comparison& comparison, const std::filesystem::path& path);

}  // namespace airq::eval
