#include "airq/serialize.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "airq/error.hpp"

namespace airq::serialize {

using nlohmann::json;

json norm_to_json(const data::NormalizationParams& p) {
    json j;
    j["features"] = json::array();
    for (const auto& m : p.features) j["features"].push_back({{"min", m.min}, {"max", m.max}});
    j["target"] = {{"min", p.target.min}, {"max", p.target.max}};
    return j;
}

data::NormalizationParams norm_from_json(const json& j) {
    data::NormalizationParams p;
    for (const auto& m : j.at("features"))
        p.features.push_back({m.at("min").get<double>(), m.at("max").get<double>()});
    p.target = {j.at("target").at("min").get<double>(), j.at("target").at("max").get<double>()};
    return p;
}

json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    try {
        json doc;
        in >> doc;
        return doc;
    } catch (const json::exception& e) {
        throw ConfigError("invalid JSON in " + path.string() + ": " + e.what());
    }
}

void write_text_atomic(const std::string& text, const std::filesystem::path& path) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw DataError("cannot write " + tmp.string());
        out << text;
        if (!out) throw DataError("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

void write_json_atomic(const json& doc, const std::filesystem::path& path) {
    write_text_atomic(doc.dump(2) + "\n", path);
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    // %.17g always round-trips; prefer the shortest representation that does.
    char buf[40];
    for (int precision : {15, 16, 17}) {
        std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

}  // namespace airq::serialize
