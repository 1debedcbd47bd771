#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "airq/dataset.hpp"

namespace airq::narx {

enum class Activation { Tanh, Identity };

/// Feedforward topology for the one-step-ahead model: exogenous features
/// plus the lagged target feed one or more hidden layers and a single
/// linear output unit. An empty hidden list degenerates to a purely linear
/// map, which is useful as an exactness reference for the trainer.
struct NarxTopology {
    int inputs = 1;                 // F = exogenous features + lagged target terms
    std::vector<int> hidden = {10};
    int delay = 1;                  // output time delay d
    Activation hidden_activation = Activation::Tanh;

    /// Total number of weights and biases across all layers.
    int parameter_count() const;
    /// Layer output sizes including the input "layer": [F, hidden..., 1].
    std::vector<int> layer_sizes() const;
    void validate() const;  // throws ConfigError
};

/// A network is its topology plus a flat parameter vector. Packing order is
/// layer-major; within a layer the weight matrix comes first in row-major
/// order (destination unit, then source unit), then the bias vector. The
/// normalization parameters pin the scaling the weights were trained under.
struct NarxNetwork {
    NarxTopology topology;
    Eigen::VectorXd weights;
    std::vector<std::string> feature_names;
    data::NormalizationParams norm;

    /// Weight matrix of layer k as a row-major view into `weights`.
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
    layer_weights(int k) const;
    Eigen::Map<const Eigen::VectorXd> layer_bias(int k) const;
    int layer_count() const { return static_cast<int>(topology.hidden.size()) + 1; }
};

/// Random initialization: weights uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)]
/// per layer, biases zero, deterministic for a fixed seed.
NarxNetwork init_weights(const NarxTopology& topology, std::uint64_t seed);

/// Per-layer preactivations and activations kept from a forward pass;
/// out[0] is the input vector, out.back() the scalar output.
struct ForwardCache {
    std::vector<Eigen::VectorXd> net;  // preactivation per layer (1-based -> index 0..L-1)
    std::vector<Eigen::VectorXd> out;  // activations; out[0] = input
};

/// Single forward pass in normalized space. The cache, when requested, feeds
/// the trainer's backpropagated Jacobian.
double forward(const NarxNetwork& net, const Eigen::Ref<const Eigen::VectorXd>& x,
               ForwardCache* cache = nullptr);

/// Open-loop evaluation of a raw frame: rows are normalized with the
/// network's parameters, passed through the network, and the outputs are
/// mapped back to original units. The lagged input is the recorded value,
/// never the model's own previous output.
Eigen::VectorXd predict_series(const NarxNetwork& net, const data::SupervisedFrame& frame);

void save_model(const NarxNetwork& net, const std::filesystem::path& path);
NarxNetwork load_model(const std::filesystem::path& path);

}  // namespace airq::narx
