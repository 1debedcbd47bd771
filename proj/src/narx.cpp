#include "airq/narx.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "airq/error.hpp"
#include "airq/serialize.hpp"

namespace airq::narx {

using nlohmann::json;

std::vector<int> NarxTopology::layer_sizes() const {
    std::vector<int> sizes;
    sizes.push_back(inputs);
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(1);
    return sizes;
}

int NarxTopology::parameter_count() const {
    auto sizes = layer_sizes();
    int p = 0;
    for (std::size_t k = 1; k < sizes.size(); ++k) p += (sizes[k - 1] + 1) * sizes[k];
    return p;
}

void NarxTopology::validate() const {
    if (inputs < 1) throw ConfigError("network needs at least one input");
    if (delay < 1) throw ConfigError("output delay must be >= 1");
    for (int h : hidden)
        if (h < 1) throw ConfigError("hidden layer sizes must be positive");
}

namespace {

// Offset of layer k's weight block inside the flat vector.
int layer_offset(const NarxTopology& t, int k) {
    auto sizes = t.layer_sizes();
    int off = 0;
    for (int j = 0; j < k; ++j) off += (sizes[j] + 1) * sizes[j + 1];
    return off;
}

}  // namespace

Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
NarxNetwork::layer_weights(int k) const {
    auto sizes = topology.layer_sizes();
    const int rows = sizes[static_cast<std::size_t>(k) + 1];
    const int cols = sizes[static_cast<std::size_t>(k)];
    return {weights.data() + layer_offset(topology, k), rows, cols};
}

Eigen::Map<const Eigen::VectorXd> NarxNetwork::layer_bias(int k) const {
    auto sizes = topology.layer_sizes();
    const int rows = sizes[static_cast<std::size_t>(k) + 1];
    const int cols = sizes[static_cast<std::size_t>(k)];
    return {weights.data() + layer_offset(topology, k) + rows * cols, rows};
}

NarxNetwork init_weights(const NarxTopology& topology, std::uint64_t seed) {
    topology.validate();
    NarxNetwork net;
    net.topology = topology;
    net.weights = Eigen::VectorXd::Zero(topology.parameter_count());
    net.norm = data::NormalizationParams::identity(static_cast<std::size_t>(topology.inputs));

    std::mt19937_64 rng(seed);
    auto sizes = topology.layer_sizes();
    int off = 0;
    for (std::size_t k = 1; k < sizes.size(); ++k) {
        const int fan_in = sizes[k - 1];
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        std::uniform_real_distribution<double> dist(-bound, bound);
        const int n_weights = sizes[k - 1] * sizes[k];
        for (int i = 0; i < n_weights; ++i) net.weights[off + i] = dist(rng);
        off += n_weights + sizes[k];  // biases stay zero
    }
    return net;
}

double forward(const NarxNetwork& net, const Eigen::Ref<const Eigen::VectorXd>& x,
               ForwardCache* cache) {
    if (x.size() != net.topology.inputs)
        throw DataError("input has dimension " + std::to_string(x.size()) + ", expected " +
                        std::to_string(net.topology.inputs));
    const int layers = net.layer_count();
    if (cache) {
        cache->net.assign(static_cast<std::size_t>(layers), {});
        cache->out.assign(static_cast<std::size_t>(layers) + 1, {});
        cache->out[0] = x;
    }
    Eigen::VectorXd o = x;
    for (int k = 0; k < layers; ++k) {
        Eigen::VectorXd z = net.layer_weights(k) * o + net.layer_bias(k);
        const bool output_layer = (k == layers - 1);
        if (!output_layer && net.topology.hidden_activation == Activation::Tanh)
            o = z.array().tanh();
        else
            o = z;
        if (cache) {
            cache->net[static_cast<std::size_t>(k)] = z;
            cache->out[static_cast<std::size_t>(k) + 1] = o;
        }
    }
    return o[0];
}

Eigen::VectorXd predict_series(const NarxNetwork& net, const data::SupervisedFrame& frame) {
    if (!net.feature_names.empty() && net.feature_names != frame.feature_names) {
        std::string got = frame.feature_names.empty() ? "<none>" : frame.feature_names.front();
        throw ConfigError("frame features do not match the model (first frame feature: " +
                          got + ")");
    }
    Eigen::MatrixXd normalized = data::apply_normalization(net.norm, frame.inputs);
    Eigen::VectorXd out(frame.rows());
    for (Eigen::Index r = 0; r < frame.rows(); ++r)
        out[r] = data::invert_norm(forward(net, normalized.row(r).transpose()), net.norm.target);
    return out;
}

void save_model(const NarxNetwork& net, const std::filesystem::path& path) {
    json doc;
    doc["model"] = "narx";
    doc["topology"]["inputs"] = net.topology.inputs;
    doc["topology"]["hidden"] = net.topology.hidden;
    doc["topology"]["delay"] = net.topology.delay;
    doc["topology"]["activation"] =
        net.topology.hidden_activation == Activation::Tanh ? "tanh" : "identity";
    doc["features"] = net.feature_names;
    doc["normalization"] = serialize::norm_to_json(net.norm);
    doc["weights"] = std::vector<double>(net.weights.data(),
                                         net.weights.data() + net.weights.size());
    serialize::write_json_atomic(doc, path);
}

NarxNetwork load_model(const std::filesystem::path& path) {
    json doc = serialize::read_json(path);
    if (doc.value("model", "") != "narx")
        throw ConfigError(path.string() + " is not a NARX model file");
    NarxNetwork net;
    net.topology.inputs = doc["topology"]["inputs"].get<int>();
    net.topology.hidden = doc["topology"]["hidden"].get<std::vector<int>>();
    net.topology.delay = doc["topology"].value("delay", 1);
    net.topology.hidden_activation =
        doc["topology"].value("activation", "tanh") == std::string("identity")
            ? Activation::Identity
            : Activation::Tanh;
    net.topology.validate();
    net.feature_names = doc.value("features", std::vector<std::string>{});
    net.norm = serialize::norm_from_json(doc.at("normalization"));
    auto w = doc.at("weights").get<std::vector<double>>();
    if (static_cast<int>(w.size()) != net.topology.parameter_count())
        throw ConfigError(path.string() + ": weight vector length does not match topology");
    net.weights = Eigen::Map<Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
    return net;
}

}  // namespace airq::narx
