#include "airq/linreg.hpp"

#include <nlohmann/json.hpp>

#include "airq/error.hpp"
#include "airq/serialize.hpp"

namespace airq::linreg {

LinearModel fit_lr(const data::SupervisedFrame& frame) {
    const Eigen::Index n = frame.rows();
    const Eigen::Index f = frame.cols();
    if (n <= f)
        throw DataError("linear fit needs more rows than features: " + std::to_string(n) +
                        " rows, " + std::to_string(f) + " features");

    Eigen::MatrixXd design(n, f + 1);
    design.leftCols(f) = frame.inputs;
    design.col(f).setOnes();

    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(design);
    const Eigen::VectorXd coeffs = cod.solve(frame.targets);

    LinearModel model;
    model.weights = coeffs.head(f);
    model.intercept = coeffs[f];
    model.feature_names = frame.feature_names;
    model.rank_deficient = cod.rank() < f + 1;
    return model;
}

Eigen::VectorXd predict_lr(const LinearModel& model, const Eigen::MatrixXd& inputs) {
    if (inputs.cols() != model.weights.size())
        throw DataError("input has " + std::to_string(inputs.cols()) + " columns, model expects " +
                        std::to_string(model.weights.size()));
    return (inputs * model.weights).array() + model.intercept;
}

double predict_lr(const LinearModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
    if (x.size() != model.weights.size())
        throw DataError("input has " + std::to_string(x.size()) + " values, model expects " +
                        std::to_string(model.weights.size()));
    return model.weights.dot(x) + model.intercept;
}

void save_model(const LinearModel& model, const std::filesystem::path& path) {
    nlohmann::json doc;
    doc["model"] = "linear";
    doc["features"] = model.feature_names;
    doc["intercept"] = model.intercept;
    doc["rank_deficient"] = model.rank_deficient;
    doc["weights"] = std::vector<double>(model.weights.begin(), model.weights.end());
    serialize::write_json_atomic(doc, path);
}

LinearModel load_model(const std::filesystem::path& path) {
    const nlohmann::json doc = serialize::read_json(path);
    if (doc.value("model", "") != "linear")
        throw ConfigError("not a linear model file: " + path.string());
    LinearModel model;
    model.feature_names = doc.at("features").get<std::vector<std::string>>();
    model.intercept = doc.at("intercept").get<double>();
    model.rank_deficient = doc.value("rank_deficient", false);
    const auto w = doc.at("weights").get<std::vector<double>>();
    model.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
    return model;
}

}  // namespace airq::linreg
