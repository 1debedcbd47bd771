#include "airq/eval.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <utility>

#include "airq/error.hpp"
#include "airq/linreg.hpp"
#include "airq/metrics.hpp"
#include "airq/narx.hpp"
#include "airq/serialize.hpp"

namespace airq::eval {

namespace {

// Offsets the split seed so weight draws come from an unrelated stream.
constexpr std::uint64_t kWeightSeedMix = 0x9e3779b97f4a7c15ULL;

/// Picks the pollutant that dominates the site's historical AQIs and derives
/// the learner suggestion from it.
void scan_dominant(SiteComparison& sc, const SitePrep& site) {
    for (auto p : site.pollutants) {
        const double rate = aqi::dominant_rate(site.aqi_results, p);
        if (!sc.dominant || rate > sc.dominant_rate) {
            sc.dominant = p;
            sc.dominant_rate = rate;
        }
    }
    if (sc.dominant) sc.recommendation = *sc.dominant == data::Pollutant::PM10 ? "lr" : "narx";
}

void check_spec(const RunSpec& spec, const PipelineConfig& config) {
    if (spec.run_count < 1) throw ConfigError("run_count must be >= 1");
    if (config.delay < 1) throw ConfigError("delay must be >= 1");
}

/// Trains the chosen learner on the train split and predicts the test split
/// in original units.
Eigen::VectorXd fit_predict(const data::SupervisedFrame& train_f,
                            const data::SupervisedFrame& val_f,
                            const data::SupervisedFrame& test_f, Algorithm algorithm,
                            const PipelineConfig& config, std::uint64_t weight_seed) {
    if (algorithm == Algorithm::Lr) {
        const linreg::LinearModel model = linreg::fit_lr(train_f);
        return linreg::predict_lr(model, test_f.inputs);
    }
    narx::NarxTopology topology;
    topology.inputs = static_cast<int>(train_f.cols());
    topology.hidden = config.hidden_units;
    topology.delay = config.delay;
    topology.validate();

    narx::NarxNetwork net = narx::init_weights(topology, weight_seed);
    net.feature_names = train_f.feature_names;
    net.norm = data::fit_normalization(train_f);
    lm::TrainResult trained = lm::train(std::move(net), train_f, val_f, config.train);
    return narx::predict_series(trained.net, test_f);
}

void score_run(RunMetrics& m, const Eigen::VectorXd& actual, const Eigen::VectorXd& predicted) {
    m.rmse = rmse(actual, predicted);
    const MapeResult mp = mape(actual, predicted);
    m.mape = mp.value;
    m.mape_excluded = mp.excluded;
    m.band_accuracy = band_accuracy(actual, predicted);
}

void finalize(EvalReport& report) {
    double sr = 0, sm = 0, sb = 0;
    for (const auto& run : report.runs) {
        sr += run.rmse;
        sm += run.mape;
        sb += run.band_accuracy;
        report.mape_excluded_count += run.mape_excluded;
    }
    const auto n = static_cast<double>(report.runs.size());
    report.mean_rmse = sr / n;
    report.mean_mape = sm / n;
    report.mean_band_accuracy = sb / n;
}

}  // namespace

std::string_view approach_name(Approach a) {
    return a == Approach::AqiPredict ? "aqipredict" : "pollutant2aqi";
}

std::string_view algorithm_name(Algorithm a) { return a == Algorithm::Narx ? "narx" : "lr"; }

Approach approach_from_name(std::string_view name) {
    if (name == "aqipredict") return Approach::AqiPredict;
    if (name == "pollutant2aqi") return Approach::Pollutant2Aqi;
    throw ConfigError("unknown approach: " + std::string(name) +
                      " (expected aqipredict or pollutant2aqi)");
}

Algorithm algorithm_from_name(std::string_view name) {
    if (name == "narx") return Algorithm::Narx;
    if (name == "lr") return Algorithm::Lr;
    throw ConfigError("unknown algorithm: " + std::string(name) + " (expected narx or lr)");
}

SitePrep prepare_site(const std::vector<data::ObservationRecord>& records,
                      const aqi::BreakpointTable& table) {
    SitePrep site;
    site.meteo = data::available_meteo(records);
    site.pollutants = data::available_pollutants(records);
    if (site.pollutants.empty()) throw DataError("site reports no pollutant values");

    std::vector<std::string> required = site.meteo;
    for (auto p : site.pollutants) required.emplace_back(data::pollutant_name(p));
    site.records = data::clean(records, required).records;
    if (site.records.empty()) throw DataError("no complete rows left after cleaning");

    site.aqi_results.reserve(site.records.size());
    for (auto& rec : site.records) {
        std::map<data::Pollutant, double> conc;
        for (auto p : site.pollutants) conc[p] = rec.pollutants.at(p);
        const aqi::AqiResult result = aqi::aqi(conc, table);
        rec.derived["aqi"] = static_cast<double>(result.aqi);
        site.aqi_results.push_back(result);
    }
    return site;
}

EvalReport run_aqipredict(const std::vector<data::ObservationRecord>& records, const RunSpec& spec,
                          const aqi::BreakpointTable& table, const PipelineConfig& config) {
    check_spec(spec, config);
    const SitePrep site = prepare_site(records, table);
    const data::SupervisedFrame frame =
        data::build_frame(site.records, "aqi", site.meteo, config.delay);

    EvalReport report;
    report.spec = spec;
    const data::SplitRatios& ratios = spec.ratios_for(spec.algorithm);
    for (int r = 0; r < spec.run_count; ++r) {
        const std::uint64_t seed = spec.master_seed + static_cast<std::uint64_t>(r);
        const data::SplitIndices idx =
            data::split(static_cast<std::size_t>(frame.rows()), ratios, seed);
        const data::SupervisedFrame test_f = frame.select(idx.test);
        const Eigen::VectorXd predicted =
            fit_predict(frame.select(idx.train), frame.select(idx.validation), test_f,
                        spec.algorithm, config, seed ^ kWeightSeedMix);

        RunMetrics m;
        m.seed = seed;
        score_run(m, test_f.targets, predicted);
        report.runs.push_back(m);
    }
    finalize(report);
    return report;
}

EvalReport run_pollutant2aqi(const std::vector<data::ObservationRecord>& records,
                             const RunSpec& spec, const aqi::BreakpointTable& table,
                             const PipelineConfig& config) {
    check_spec(spec, config);
    const SitePrep site = prepare_site(records, table);

    // The truth frame and every pollutant frame join on the same hour pairs,
    // so their rows line up one-to-one and one split serves them all.
    const data::SupervisedFrame truth_frame =
        data::build_frame(site.records, "aqi", site.meteo, config.delay);
    std::vector<data::SupervisedFrame> frames;
    frames.reserve(site.pollutants.size());
    for (auto p : site.pollutants) {
        frames.push_back(
            data::build_frame(site.records, data::pollutant_name(p), site.meteo, config.delay));
        if (frames.back().rows() != truth_frame.rows())
            throw DataError("pollutant frames misaligned after lag join");
    }

    EvalReport report;
    report.spec = spec;
    std::map<data::Pollutant, double> mape_sums;
    const data::SplitRatios& ratios = spec.ratios_for(spec.algorithm);
    for (int r = 0; r < spec.run_count; ++r) {
        const std::uint64_t seed = spec.master_seed + static_cast<std::uint64_t>(r);
        const data::SplitIndices idx =
            data::split(static_cast<std::size_t>(truth_frame.rows()), ratios, seed);

        std::vector<Eigen::VectorXd> predictions;
        predictions.reserve(site.pollutants.size());
        for (std::size_t i = 0; i < site.pollutants.size(); ++i) {
            const data::SupervisedFrame test_f = frames[i].select(idx.test);
            const std::uint64_t weight_seed =
                (seed ^ kWeightSeedMix) + static_cast<std::uint64_t>(i) + 1;
            predictions.push_back(fit_predict(frames[i].select(idx.train),
                                              frames[i].select(idx.validation), test_f,
                                              spec.algorithm, config, weight_seed));
            mape_sums[site.pollutants[i]] += mape(test_f.targets, predictions.back()).value;
        }

        // Compose the predicted concentrations into a predicted AQI; negative
        // predictions clamp to zero since a concentration cannot go below it.
        const auto test_rows = static_cast<Eigen::Index>(idx.test.size());
        Eigen::VectorXd predicted_aqi(test_rows);
        for (Eigen::Index q = 0; q < test_rows; ++q) {
            std::map<data::Pollutant, double> conc;
            for (std::size_t i = 0; i < site.pollutants.size(); ++i)
                conc[site.pollutants[i]] = std::max(0.0, predictions[i][q]);
            predicted_aqi[q] = static_cast<double>(aqi::aqi(conc, table).aqi);
        }

        RunMetrics m;
        m.seed = seed;
        score_run(m, truth_frame.select(idx.test).targets, predicted_aqi);
        report.runs.push_back(m);
    }
    finalize(report);
    for (const auto& [p, sum] : mape_sums)
        report.pollutant_mape[p] = sum / static_cast<double>(spec.run_count);
    return report;
}

bool Comparison::any_ok() const {
    for (const auto& site : sites)
        for (const auto& cell : site.cells)
            if (cell.ok) return true;
    return false;
}

Comparison compare(const std::vector<std::pair<std::string, std::vector<data::ObservationRecord>>>&
                       sites,
                   const RunSpec& base, const aqi::BreakpointTable& table,
                   const PipelineConfig& config) {
    if (sites.empty()) throw ConfigError("comparison needs at least one site");

    Comparison out;
    for (const auto& [name, records] : sites) {
        SiteComparison sc;
        sc.site = name;

        try {
            scan_dominant(sc, prepare_site(records, table));
        } catch (const Error&) {
            // The per-cell runs below report the failure.
        }

        constexpr std::array<std::pair<Approach, Algorithm>, 4> grid = {
            std::pair{Approach::AqiPredict, Algorithm::Narx},
            std::pair{Approach::AqiPredict, Algorithm::Lr},
            std::pair{Approach::Pollutant2Aqi, Algorithm::Narx},
            std::pair{Approach::Pollutant2Aqi, Algorithm::Lr}};
        for (const auto& [approach, algorithm] : grid) {
            ComparisonCell cell;
            cell.approach = approach;
            cell.algorithm = algorithm;
            RunSpec spec = base;
            spec.site = name;
            spec.approach = approach;
            spec.algorithm = algorithm;
            try {
                cell.report = approach == Approach::AqiPredict
                                  ? run_aqipredict(records, spec, table, config)
                                  : run_pollutant2aqi(records, spec, table, config);
                cell.ok = true;
            } catch (const Error& e) {
                cell.error = e.what();
            }
            sc.cells.push_back(std::move(cell));
        }

        // One best flag per metric; ties keep the first cell in grid order.
        auto flag_best = [&sc](auto key, bool ComparisonCell::*flag, bool lower_wins) {
            ComparisonCell* best = nullptr;
            for (auto& cell : sc.cells) {
                if (!cell.ok) continue;
                if (!best || (lower_wins ? key(cell) < key(*best) : key(cell) > key(*best)))
                    best = &cell;
            }
            if (best) (*best).*flag = true;
        };
        flag_best([](const ComparisonCell& c) { return c.report->mean_rmse; },
                  &ComparisonCell::best_rmse, true);
        flag_best([](const ComparisonCell& c) { return c.report->mean_mape; },
                  &ComparisonCell::best_mape, true);
        flag_best([](const ComparisonCell& c) { return c.report->mean_band_accuracy; },
                  &ComparisonCell::best_band_accuracy, false);

        out.sites.push_back(std::move(sc));
    }
    return out;
}

SiteComparison evaluate_site(const std::vector<data::ObservationRecord>& records,
                             const RunSpec& spec, const aqi::BreakpointTable& table,
                             const PipelineConfig& config) {
    SiteComparison sc;
    sc.site = spec.site;
    scan_dominant(sc, prepare_site(records, table));

    ComparisonCell cell;
    cell.approach = spec.approach;
    cell.algorithm = spec.algorithm;
    cell.report = spec.approach == Approach::AqiPredict
                      ? run_aqipredict(records, spec, table, config)
                      : run_pollutant2aqi(records, spec, table, config);
    cell.ok = true;
    sc.cells.push_back(std::move(cell));
    return sc;
}

void write_report_csv(const Comparison& comparison, const std::filesystem::path& path) {
    std::ostringstream out;
    out << "site,approach,algorithm,rmse,mape,band_accuracy\n";
    for (const auto& site : comparison.sites) {
        for (const auto& cell : site.cells) {
            out << site.site << ',' << approach_name(cell.approach) << ','
                << algorithm_name(cell.algorithm) << ',';
            if (cell.ok) {
                out << serialize::format_double(cell.report->mean_rmse) << ','
                    << serialize::format_double(cell.report->mean_mape) << ','
                    << serialize::format_double(cell.report->mean_band_accuracy);
            } else {
                out << ",,";
            }
            out << '\n';
        }
    }
    serialize::write_text_atomic(out.str(), path);
}

void write_pollutants_csv(const Comparison& comparison, const std::filesystem::path& path) {
    std::ostringstream out;
    out << "site,algorithm,pollutant,mape\n";
    for (const auto& site : comparison.sites) {
        for (const auto& cell : site.cells) {
            if (!cell.ok) continue;
            for (const auto& [p, value] : cell.report->pollutant_mape)
                out << site.site << ',' << algorithm_name(cell.algorithm) << ','
                    << data::pollutant_name(p) << ',' << serialize::format_double(value) << '\n';
        }
    }
    serialize::write_text_atomic(out.str(), path);
}

void write_report_json(const Comparison& comparison, const std::filesystem::path& path) {
    nlohmann::json doc;
    doc["sites"] = nlohmann::json::array();
    for (const auto& site : comparison.sites) {
        nlohmann::json js;
        js["site"] = site.site;
        if (site.dominant) {
            js["dominant"] = data::pollutant_name(*site.dominant);
            js["dominant_rate"] = site.dominant_rate;
        } else {
            js["dominant"] = nullptr;
        }
        js["recommendation"] = site.recommendation;
        js["cells"] = nlohmann::json::array();
        for (const auto& cell : site.cells) {
            nlohmann::json jc;
            jc["approach"] = approach_name(cell.approach);
            jc["algorithm"] = algorithm_name(cell.algorithm);
            jc["ok"] = cell.ok;
            if (!cell.ok) {
                jc["error"] = cell.error;
                js["cells"].push_back(std::move(jc));
                continue;
            }
            const EvalReport& report = *cell.report;
            jc["spec"] = {{"run_count", report.spec.run_count},
                          {"master_seed", report.spec.master_seed},
                          {"ratios",
                           {report.spec.ratios_for(cell.algorithm).train,
                            report.spec.ratios_for(cell.algorithm).validation,
                            report.spec.ratios_for(cell.algorithm).test}}};
            jc["aggregate"] = {{"rmse", report.mean_rmse},
                               {"mape", report.mean_mape},
                               {"band_accuracy", report.mean_band_accuracy}};
            jc["mape_excluded_count"] = report.mape_excluded_count;
            jc["best"] = {{"rmse", cell.best_rmse},
                          {"mape", cell.best_mape},
                          {"band_accuracy", cell.best_band_accuracy}};
            jc["runs"] = nlohmann::json::array();
            for (const auto& run : report.runs)
                jc["runs"].push_back({{"seed", run.seed},
                                      {"rmse", run.rmse},
                                      {"mape", run.mape},
                                      {"band_accuracy", run.band_accuracy},
                                      {"mape_excluded", run.mape_excluded}});
            if (!report.pollutant_mape.empty()) {
                nlohmann::json jp;
                for (const auto& [p, value] : report.pollutant_mape)
                    jp[std::string(data::pollutant_name(p))] = value;
                jc["pollutant_mape"] = std::move(jp);
            }
            js["cells"].push_back(std::move(jc));
        }
        doc["sites"].push_back(std::move(js));
    }
    serialize::write_json_atomic(doc, path);
}

}  // namespace airq::eval
