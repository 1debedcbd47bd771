#include "airq/cli.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <utility>
#include <vector>

#include "airq/aqi.hpp"
#include "airq/error.hpp"
#include "airq/linreg.hpp"
#include "airq/lm.hpp"
#include "airq/narx.hpp"
#include "airq/serialize.hpp"
#include "airq/time.hpp"

namespace airq::cli {

namespace {

std::string fmt(double v) { return serialize::format_double(v); }

data::SplitRatios ratios_from_json(const nlohmann::json& j, const std::string& key) {
    if (!j.is_array() || j.size() != 3)
        throw ConfigError(key + " must be an array of three numbers");
    data::SplitRatios r;
    r.train = j[0].get<double>();
    r.validation = j[1].get<double>();
    r.test = j[2].get<double>();
    return r;
}

data::SplitRatios parse_ratios(const std::string& text) {
    data::SplitRatios r;
    char extra = 0;
    if (std::sscanf(text.c_str(), "%lf,%lf,%lf%c", &r.train, &r.validation, &r.test, &extra) != 3)
        throw ConfigError("ratios must be three comma-separated numbers, got: " + text);
    return r;
}

void load_schema(const nlohmann::json& j, data::CsvSchema& schema) {
    for (const auto& [key, value] : j.items()) {
        if (key == "timestamp") {
            schema.timestamp = value.get<std::string>();
        } else if (key == "site") {
            schema.site = value.get<std::string>();
        } else if (key == "strict") {
            schema.strict = value.get<bool>();
        } else if (key == "meteo") {
            for (const auto& [feature, column] : value.items()) {
                if (!data::is_meteo_feature(feature))
                    throw ConfigError("unknown meteorological feature in schema: " + feature);
                schema.meteo[feature] = column.get<std::string>();
            }
        } else if (key == "pollutants") {
            for (const auto& [name, column] : value.items()) {
                const auto p = data::pollutant_from_name(name);
                if (!p) throw ConfigError("unknown pollutant in schema: " + name);
                schema.pollutants[*p] = column.get<std::string>();
            }
        } else {
            throw ConfigError("unknown schema key: " + key);
        }
    }
}

void load_train(const nlohmann::json& j, lm::TrainConfig& t) {
    for (const auto& [key, value] : j.items()) {
        if (key == "mu0")
            t.mu0 = value.get<double>();
        else if (key == "beta")
            t.beta = value.get<double>();
        else if (key == "mu_max")
            t.mu_max = value.get<double>();
        else if (key == "grad_tol")
            t.grad_tol = value.get<double>();
        else if (key == "error_goal")
            t.error_goal = value.get<double>();
        else if (key == "max_epochs")
            t.max_epochs = value.get<int>();
        else if (key == "val_patience")
            t.val_patience = value.get<int>();
        else if (key == "seed")
            t.seed = value.get<std::uint64_t>();
        else
            throw ConfigError("unknown train key: " + key);
    }
}

std::vector<data::ObservationRecord> load_site_records(const AppConfig& cfg,
                                                       const std::filesystem::path& path,
                                                       const std::string& site_filter) {
    data::ParseResult parsed = data::parse_csv(path, cfg.schema);
    if (parsed.records.empty()) throw DataError("no data rows in " + path.string());
    if (site_filter.empty()) return std::move(parsed.records);
    std::vector<data::ObservationRecord> filtered;
    for (auto& rec : parsed.records)
        if (rec.site == site_filter) filtered.push_back(std::move(rec));
    if (filtered.empty())
        throw DataError("no rows for site " + site_filter + " in " + path.string());
    return filtered;
}

int do_summarize(const AppConfig& cfg, const std::filesystem::path& path, std::ostream& out,
                 std::ostream& err) {
    const data::ParseResult parsed = data::parse_csv(path, cfg.schema);
    std::ostringstream text;
    text << "field,present,missing,missing_rate,min,q1,median,q3,max,lower_whisker,upper_whisker\n";
    if (parsed.records.empty()) {
        err << "warning: no data rows in " << path.string() << '\n';
    } else {
        const auto summary = data::summarize(parsed.records, parsed.observed_fields);
        for (const auto& field : parsed.observed_fields) {
            data::FieldSummary s;
            if (const auto it = summary.find(field); it != summary.end()) s = it->second;
            text << field << ',' << s.present << ',' << s.missing << ','
                 << fmt(s.missing_rate()) << ',';
            if (s.stats) {
                const data::FiveNumber& v = *s.stats;
                text << fmt(v.min) << ',' << fmt(v.q1) << ',' << fmt(v.median) << ','
                     << fmt(v.q3) << ',' << fmt(v.max) << ',' << fmt(v.lower_whisker()) << ','
                     << fmt(v.upper_whisker());
            } else {
                text << ",,,,,,";
            }
            text << '\n';
        }
    }
    const auto out_path = cfg.out_dir / (path.stem().string() + "_summary.csv");
    serialize::write_text_atomic(text.str(), out_path);
    out << "wrote " << out_path.string() << '\n';
    return 0;
}

int do_compute_aqi(const AppConfig& cfg, const std::filesystem::path& path,
                   const aqi::BreakpointTable& table, std::ostream& out) {
    const data::ParseResult parsed = data::parse_csv(path, cfg.schema);
    const auto pollutants = data::available_pollutants(parsed.records);
    if (pollutants.empty()) throw DataError("no pollutant values found in " + path.string());

    std::vector<std::string> required;
    for (auto p : pollutants) required.emplace_back(data::pollutant_name(p));
    const data::CleanResult cleaned = data::clean(parsed.records, required);
    if (cleaned.records.empty())
        throw DataError("no complete rows after cleaning in " + path.string());

    std::vector<aqi::AqiResult> results;
    results.reserve(cleaned.records.size());
    std::ostringstream text;
    text << "timestamp,aqi,dominant,band\n";
    for (const auto& rec : cleaned.records) {
        std::map<data::Pollutant, double> conc;
        for (auto p : pollutants) conc[p] = rec.pollutants.at(p);
        const aqi::AqiResult r = aqi::aqi(conc, table);
        results.push_back(r);
        text << format_timestamp(rec.time) << ',' << r.aqi << ','
             << data::pollutant_name(r.dominant) << ',' << aqi::band_label(aqi::band(r.aqi))
             << '\n';
    }
    const auto out_path = cfg.out_dir / (path.stem().string() + "_aqi.csv");
    serialize::write_text_atomic(text.str(), out_path);

    out << "rows: " << cleaned.records.size() << " (dropped " << cleaned.removed_missing
        << " incomplete, " << cleaned.removed_negative << " negative)\n";
    out << "dominating rates:\n";
    for (auto p : pollutants)
        out << "  " << data::pollutant_name(p) << ' ' << fmt(aqi::dominant_rate(results, p))
            << "%\n";
    out << "wrote " << out_path.string() << '\n';
    return 0;
}

int do_train(const AppConfig& cfg, const std::filesystem::path& path,
             const std::string& site_filter, const std::string& approach_s,
             const std::string& algorithm_s, const aqi::BreakpointTable& table, std::ostream& out,
             std::ostream& err) {
    const eval::Approach approach = eval::approach_from_name(approach_s);
    const eval::Algorithm algorithm = eval::algorithm_from_name(algorithm_s);
    const auto records = load_site_records(cfg, path, site_filter);
    const eval::SitePrep prep = eval::prepare_site(records, table);
    const data::SplitRatios& ratios =
        algorithm == eval::Algorithm::Narx ? cfg.narx_ratios : cfg.lr_ratios;

    struct Job {
        std::string label;
        data::SupervisedFrame frame;
    };
    std::vector<Job> jobs;
    if (approach == eval::Approach::AqiPredict) {
        jobs.push_back({"aqi", data::build_frame(prep.records, "aqi", prep.meteo,
                                                 cfg.pipeline.delay)});
    } else {
        for (auto p : prep.pollutants)
            jobs.push_back({std::string(data::pollutant_name(p)),
                            data::build_frame(prep.records, data::pollutant_name(p), prep.meteo,
                                              cfg.pipeline.delay)});
    }

    std::uint64_t weight_seed = cfg.seed;
    for (const auto& job : jobs) {
        const data::SplitIndices idx =
            data::split(static_cast<std::size_t>(job.frame.rows()), ratios, cfg.seed);
        const data::SupervisedFrame train_f = job.frame.select(idx.train);
        const auto model_path = cfg.out_dir / ("model_" + job.label + "_" + algorithm_s + ".json");

        if (algorithm == eval::Algorithm::Lr) {
            const linreg::LinearModel model = linreg::fit_lr(train_f);
            linreg::save_model(model, model_path);
            if (model.rank_deficient)
                err << "warning: " << job.label
                    << " design matrix is rank deficient; minimum-norm fit taken\n";
            out << job.label << ": wrote " << model_path.string() << '\n';
            continue;
        }

        narx::NarxTopology topology;
        topology.inputs = static_cast<int>(train_f.cols());
        topology.hidden = cfg.pipeline.hidden_units;
        topology.delay = cfg.pipeline.delay;
        topology.validate();
        narx::NarxNetwork net = narx::init_weights(topology, ++weight_seed);
        net.feature_names = train_f.feature_names;
        net.norm = data::fit_normalization(train_f);

        const auto trace_path = cfg.out_dir / ("trace_" + job.label + "_narx.csv");
        try {
            lm::TrainResult trained = lm::train(std::move(net), train_f,
                                                job.frame.select(idx.validation),
                                                cfg.pipeline.train);
            narx::save_model(trained.net, model_path);
            lm::save_trace_csv(trained.trace, trace_path);
            out << job.label << ": stop=" << lm::stop_reason_name(trained.trace.stop)
                << " epochs=" << trained.trace.epochs.size();
            if (!trained.trace.epochs.empty())
                out << " E=" << fmt(trained.trace.epochs.back().sse);
            out << ", wrote " << model_path.string() << '\n';
        } catch (const TrainError&) {
            // Leave a trace file behind even when training blows up.
            lm::save_trace_csv(lm::TrainTrace{}, trace_path);
            throw;
        }
    }
    return 0;
}

int do_evaluate(const AppConfig& cfg, const std::filesystem::path& path,
                const std::string& site_filter, const std::string& approach_s,
                const std::string& algorithm_s, const aqi::BreakpointTable& table,
                std::ostream& out) {
    const auto records = load_site_records(cfg, path, site_filter);

    eval::RunSpec spec;
    spec.site = site_filter.empty() ? records.front().site : site_filter;
    spec.approach = eval::approach_from_name(approach_s);
    spec.algorithm = eval::algorithm_from_name(algorithm_s);
    spec.run_count = cfg.runs;
    spec.narx_ratios = cfg.narx_ratios;
    spec.lr_ratios = cfg.lr_ratios;
    spec.master_seed = cfg.seed;

    eval::Comparison comparison;
    comparison.sites.push_back(eval::evaluate_site(records, spec, table, cfg.pipeline));
    eval::write_report_json(comparison, cfg.out_dir / "report.json");
    eval::write_report_csv(comparison, cfg.out_dir / "report.csv");
    const eval::EvalReport& report = *comparison.sites.front().cells.front().report;
    if (!report.pollutant_mape.empty())
        eval::write_pollutants_csv(comparison, cfg.out_dir / "pollutants.csv");

    out << spec.site << ' ' << approach_s << '/' << algorithm_s << ": rmse=" << fmt(report.mean_rmse)
        << " mape=" << fmt(report.mean_mape)
        << " band_accuracy=" << fmt(report.mean_band_accuracy) << " over "
        << report.runs.size() << " runs\n";
    out << "wrote " << (cfg.out_dir / "report.json").string() << '\n';
    return 0;
}

int do_compare(const AppConfig& cfg, const std::vector<std::string>& csvs,
               const aqi::BreakpointTable& table, std::ostream& out, std::ostream& err) {
    std::vector<std::pair<std::string, std::vector<data::ObservationRecord>>> sites;
    std::map<std::string, std::size_t> index;
    for (const auto& csv : csvs) {
        data::ParseResult parsed = data::parse_csv(csv, cfg.schema);
        for (auto& rec : parsed.records) {
            const auto [it, inserted] = index.try_emplace(rec.site, sites.size());
            if (inserted) sites.push_back({rec.site, {}});
            sites[it->second].second.push_back(std::move(rec));
        }
    }
    if (sites.empty()) throw DataError("no data rows in any input file");

    eval::RunSpec base;
    base.run_count = cfg.runs;
    base.narx_ratios = cfg.narx_ratios;
    base.lr_ratios = cfg.lr_ratios;
    base.master_seed = cfg.seed;

    const eval::Comparison comparison = eval::compare(sites, base, table, cfg.pipeline);
    eval::write_report_json(comparison, cfg.out_dir / "report.json");
    eval::write_report_csv(comparison, cfg.out_dir / "report.csv");
    eval::write_pollutants_csv(comparison, cfg.out_dir / "pollutants.csv");

    for (const auto& site : comparison.sites) {
        out << site.site << ":\n";
        for (const auto& cell : site.cells) {
            out << "  " << eval::approach_name(cell.approach) << '/'
                << eval::algorithm_name(cell.algorithm) << ": ";
            if (cell.ok) {
                out << "rmse=" << fmt(cell.report->mean_rmse)
                    << " mape=" << fmt(cell.report->mean_mape)
                    << " band_accuracy=" << fmt(cell.report->mean_band_accuracy);
                if (cell.best_rmse) out << " [best rmse]";
                if (cell.best_mape) out << " [best mape]";
                if (cell.best_band_accuracy) out << " [best band_accuracy]";
            } else {
                out << "failed (" << cell.error << ")";
                err << "warning: " << site.site << ' ' << eval::approach_name(cell.approach)
                    << '/' << eval::algorithm_name(cell.algorithm) << " failed: " << cell.error
                    << '\n';
            }
            out << '\n';
        }
        if (site.dominant)
            out << "  dominant " << data::pollutant_name(*site.dominant) << " ("
                << fmt(site.dominant_rate) << "%), recommend " << site.recommendation << '\n';
    }
    out << "wrote " << (cfg.out_dir / "report.csv").string() << '\n';
    return comparison.any_ok() ? 0 : 3;
}

}  // namespace

AppConfig AppConfig::load(const std::filesystem::path& path) {
    const nlohmann::json doc = serialize::read_json(path);
    if (!doc.is_object()) throw ConfigError("config root must be an object: " + path.string());
    AppConfig cfg;
    for (const auto& [key, value] : doc.items()) {
        if (key == "schema")
            load_schema(value, cfg.schema);
        else if (key == "breakpoints")
            cfg.breakpoints = value.get<std::string>();
        else if (key == "train")
            load_train(value, cfg.pipeline.train);
        else if (key == "hidden_units")
            cfg.pipeline.hidden_units = value.get<std::vector<int>>();
        else if (key == "delay")
            cfg.pipeline.delay = value.get<int>();
        else if (key == "narx_ratios")
            cfg.narx_ratios = ratios_from_json(value, key);
        else if (key == "lr_ratios")
            cfg.lr_ratios = ratios_from_json(value, key);
        else if (key == "runs")
            cfg.runs = value.get<int>();
        else if (key == "seed")
            cfg.seed = value.get<std::uint64_t>();
        else if (key == "out")
            cfg.out_dir = value.get<std::string>();
        else
            throw ConfigError("unknown config key: " + key);
    }
    if (!cfg.breakpoints.empty()) {
        if (cfg.breakpoints.is_relative()) cfg.breakpoints = path.parent_path() / cfg.breakpoints;
        if (!std::filesystem::exists(cfg.breakpoints))
            throw ConfigError("breakpoints file not found: " + cfg.breakpoints.string());
    }
    return cfg;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Air-quality index modeling: AQI computation, NARX and linear learners, "
                 "branch comparison"};
    app.require_subcommand(1);

    std::string config_path, breakpoints_path, ratios_str, out_dir, site;
    std::string algorithm = "narx", approach = "aqipredict";
    std::optional<std::uint64_t> seed;
    std::optional<int> runs;
    std::vector<std::string> inputs;

    const auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON config file");
        cmd->add_option("--seed", seed, "Master seed");
        cmd->add_option("--out", out_dir, "Output directory");
        cmd->add_option("--breakpoints", breakpoints_path, "Breakpoint table JSON");
        cmd->add_option("--ratios", ratios_str,
                        "Split ratios train,validation,test for both algorithm families");
        cmd->add_option("--runs", runs, "Number of repeated runs");
        cmd->add_option("--algorithm", algorithm, "Learner")
            ->check(CLI::IsMember({"narx", "lr"}));
        cmd->add_option("--approach", approach, "Framework branch")
            ->check(CLI::IsMember({"aqipredict", "pollutant2aqi"}));
    };

    CLI::App* cmd_sum =
        app.add_subcommand("summarize", "Per-field five-number summaries and missing rates");
    cmd_sum->add_option("csv", inputs, "Input CSV")->required()->expected(1);
    add_common(cmd_sum);

    CLI::App* cmd_aqi =
        app.add_subcommand("compute-aqi", "Hourly AQI series from pollutant concentrations");
    cmd_aqi->add_option("csv", inputs, "Input CSV")->required()->expected(1);
    add_common(cmd_aqi);

    CLI::App* cmd_tr = app.add_subcommand("train", "Train and persist models for one site");
    cmd_tr->add_option("csv", inputs, "Input CSV")->required()->expected(1);
    cmd_tr->add_option("--site", site, "Restrict to one site id");
    add_common(cmd_tr);

    CLI::App* cmd_ev =
        app.add_subcommand("evaluate", "Repeated-run evaluation of one branch and learner");
    cmd_ev->add_option("csv", inputs, "Input CSV")->required()->expected(1);
    cmd_ev->add_option("--site", site, "Restrict to one site id");
    add_common(cmd_ev);

    CLI::App* cmd_cmp =
        app.add_subcommand("compare", "Approach x algorithm comparison across sites");
    cmd_cmp->add_option("csv", inputs, "Input CSV files")->required();
    add_common(cmd_cmp);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        AppConfig cfg = config_path.empty() ? AppConfig{} : AppConfig::load(config_path);
        if (!breakpoints_path.empty()) cfg.breakpoints = breakpoints_path;
        if (seed) cfg.seed = *seed;
        if (runs) cfg.runs = *runs;
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (!ratios_str.empty()) {
            const data::SplitRatios r = parse_ratios(ratios_str);
            cfg.narx_ratios = r;
            cfg.lr_ratios = r;
        }
        if (cfg.runs < 1) throw ConfigError("runs must be >= 1");

        aqi::BreakpointTable table = cfg.breakpoints.empty()
                                         ? aqi::default_breakpoints()
                                         : aqi::load_breakpoints(cfg.breakpoints);
        table.validate();
        std::filesystem::create_directories(cfg.out_dir);

        if (*cmd_sum) return do_summarize(cfg, inputs[0], out, err);
        if (*cmd_aqi) return do_compute_aqi(cfg, inputs[0], table, out);
        if (*cmd_tr) return do_train(cfg, inputs[0], site, approach, algorithm, table, out, err);
        if (*cmd_ev) return do_evaluate(cfg, inputs[0], site, approach, algorithm, table, out);
        return do_compare(cfg, inputs, table, out, err);
    } catch (const TrainError& e) {
        err << "error: " << e.what() << '\n';
        return 3;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const DataError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 3;
    }
}

}  // namespace airq::cli
