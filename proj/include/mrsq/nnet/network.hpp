#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "mrsq/binary_io.hpp"
#include "mrsq/error.hpp"
#include "mrsq/nnet/layers.hpp"
#include "mrsq/nnet/tensor.hpp"
#include "mrsq/rng.hpp"
#include "mrsq/sha256.hpp"

namespace mrsq::nnet {

struct LayerSpec {
    LayerKind kind = LayerKind::flatten;
    // conv1d
    std::size_t in_ch = 0, out_ch = 0, kernel = 0, stride = 1;
    // maxpool1d
    std::size_t width = 0;
    // fc
    std::size_t in = 0, out = 0;

    static LayerSpec conv1d(std::size_t in_ch, std::size_t out_ch, std::size_t kernel, std::size_t stride = 1)
    {
        LayerSpec s;
        s.kind = LayerKind::conv1d;
        s.in_ch = in_ch;
        s.out_ch = out_ch;
        s.kernel = kernel;
        s.stride = stride;
        return s;
    }
    static LayerSpec crelu()
    {
        LayerSpec s;
        s.kind = LayerKind::crelu;
        return s;
    }
    static LayerSpec maxpool1d(std::size_t width)
    {
        LayerSpec s;
        s.kind = LayerKind::maxpool1d;
        s.width = width;
        return s;
    }
    static LayerSpec flatten()
    {
        LayerSpec s;
        s.kind = LayerKind::flatten;
        return s;
    }
    static LayerSpec fc(std::size_t in, std::size_t out)
    {
        LayerSpec s;
        s.kind = LayerKind::fc;
        s.in = in;
        s.out = out;
        return s;
    }

    friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct NetworkSpec {
    std::vector<LayerSpec> layers;
    std::size_t input_channels = 2;
    std::size_t input_length = 2048;
    std::size_t output_dim = 1;

    friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

template <class T>
std::unique_ptr<Layer<T>> make_layer(const LayerSpec& s)
{
    switch (s.kind) {
    case LayerKind::conv1d: return std::make_unique<Conv1d<T>>(s.in_ch, s.out_ch, s.kernel, s.stride);
    case LayerKind::crelu: return std::make_unique<CRelu<T>>();
    case LayerKind::maxpool1d: return std::make_unique<MaxPool1d<T>>(s.width);
    case LayerKind::flatten: return std::make_unique<Flatten<T>>();
    case LayerKind::fc: return std::make_unique<Dense<T>>(s.in, s.out);
    }
    throw InvalidArgument("unknown layer kind");
}

/// Propagates the per-sample shape through every layer; returns the chain
/// (input first). Throws naming the first inconsistent layer.
inline std::vector<Shape> validate(const NetworkSpec& spec)
{
    if (spec.layers.empty()) throw InvalidArgument("network: no layers");
    std::vector<Shape> chain{{spec.input_channels, spec.input_length}};
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        try {
            chain.push_back(make_layer<double>(spec.layers[i])->output_shape(chain.back()));
        } catch (const InvalidArgument& e) {
            throw InvalidArgument("network layer " + std::to_string(i) + " (" + to_string(spec.layers[i].kind)
                                  + "): " + e.what());
        }
    }
    if (chain.back() != Shape{spec.output_dim}) {
        throw InvalidArgument("network: final shape " + shape_string(chain.back()) + " does not match output_dim "
                              + std::to_string(spec.output_dim));
    }
    return chain;
}

/// Three conv/CReLU/maxpool stages followed by two fully connected layers.
/// Each CReLU doubles the channel count feeding the next convolution.
inline NetworkSpec default_network_spec(std::size_t input_length, std::size_t output_dim)
{
    NetworkSpec s;
    s.input_channels = 2;
    s.input_length = input_length;
    s.output_dim = output_dim;
    s.layers = {LayerSpec::conv1d(2, 16, 9),  LayerSpec::crelu(), LayerSpec::maxpool1d(4),
                LayerSpec::conv1d(32, 32, 9), LayerSpec::crelu(), LayerSpec::maxpool1d(4),
                LayerSpec::conv1d(64, 64, 9), LayerSpec::crelu(), LayerSpec::maxpool1d(4),
                LayerSpec::flatten(),         LayerSpec::fc(128 * (input_length / 64), 512),
                LayerSpec::fc(512, output_dim)};
    return s;
}

inline nlohmann::json to_json(const NetworkSpec& spec)
{
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : spec.layers) {
        nlohmann::json j{{"kind", to_string(l.kind)}};
        switch (l.kind) {
        case LayerKind::conv1d:
            j["in_ch"] = l.in_ch;
            j["out_ch"] = l.out_ch;
            j["kernel"] = l.kernel;
            j["stride"] = l.stride;
            break;
        case LayerKind::maxpool1d: j["width"] = l.width; break;
        case LayerKind::fc:
            j["in"] = l.in;
            j["out"] = l.out;
            break;
        default: break;
        }
        layers.push_back(j);
    }
    return {{"input_channels", spec.input_channels},
            {"input_length", spec.input_length},
            {"output_dim", spec.output_dim},
            {"layers", layers}};
}

inline NetworkSpec network_spec_from_json(const nlohmann::json& j)
{
    NetworkSpec s;
    try {
        s.input_channels = j.at("input_channels").get<std::size_t>();
        s.input_length = j.at("input_length").get<std::size_t>();
        s.output_dim = j.at("output_dim").get<std::size_t>();
        for (const auto& l : j.at("layers")) {
            const auto kind = l.at("kind").get<std::string>();
            if (kind == "conv1d") {
                s.layers.push_back(LayerSpec::conv1d(l.at("in_ch").get<std::size_t>(), l.at("out_ch").get<std::size_t>(),
                                                     l.at("kernel").get<std::size_t>(), l.value("stride", std::size_t{1})));
            } else if (kind == "crelu") {
                s.layers.push_back(LayerSpec::crelu());
            } else if (kind == "maxpool1d") {
                s.layers.push_back(LayerSpec::maxpool1d(l.at("width").get<std::size_t>()));
            } else if (kind == "flatten") {
                s.layers.push_back(LayerSpec::flatten());
            } else if (kind == "fc") {
                s.layers.push_back(LayerSpec::fc(l.at("in").get<std::size_t>(), l.at("out").get<std::size_t>()));
            } else {
                throw SchemaError("network: unknown layer kind '" + kind + "'");
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("network spec: ") + e.what());
    }
    return s;
}

/// Layer stack built from a validated NetworkSpec.
template <class T>
class Network {
public:
    explicit Network(NetworkSpec spec) : spec_(std::move(spec))
    {
        validate(spec_);
        for (const auto& l : spec_.layers) layers_.push_back(make_layer<T>(l));
    }

    Network(const Network& other) : Network(other.spec_)
    {
        auto dst = params();
        auto src = const_cast<Network&>(other).params();
        for (std::size_t i = 0; i < dst.size(); ++i) *dst[i].value = *src[i].value;
    }

    const NetworkSpec& spec() const noexcept { return spec_; }
    std::vector<std::unique_ptr<Layer<T>>>& layers() noexcept { return layers_; }

    /// Uniform(-sqrt(1/fan_in), sqrt(1/fan_in)) weights, zero biases.
    void init(std::uint64_t seed)
    {
        SeededRng rng = make_stream(seed, 0x77656967u);
        for (auto& layer : layers_) {
            auto ps = layer->params();
            if (ps.empty()) continue;
            auto& w = *ps[0].value;
            const double fan_in = static_cast<double>(w.dim(1));
            std::uniform_real_distribution<double> u(-std::sqrt(1.0 / fan_in), std::sqrt(1.0 / fan_in));
            for (auto& v : w.data) v = static_cast<T>(u(rng));
            ps[1].value->fill(T{0});
        }
    }

    /// x: [B, input_channels, input_length] -> [B, output_dim]
    Tensor<T> forward(Tensor<T> x)
    {
        if (x.rank() != 3 || x.dim(1) != spec_.input_channels || x.dim(2) != spec_.input_length) {
            throw InvalidArgument("network: input shape " + shape_string(x.shape) + " does not match spec");
        }
        for (auto& l : layers_) x = l->forward(x);
        return x;
    }

    Tensor<T> backward(Tensor<T> grad)
    {
        for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) grad = (*it)->backward(grad);
        return grad;
    }

    std::vector<Param<T>> params()
    {
        std::vector<Param<T>> out;
        for (auto& l : layers_) {
            for (auto p : l->params()) out.push_back(p);
        }
        return out;
    }

    void zero_grad()
    {
        for (auto p : params()) p.grad->fill(T{0});
    }

    std::size_t parameter_count()
    {
        std::size_t n = 0;
        for (auto p : params()) n += p.value->size();
        return n;
    }

private:
    NetworkSpec spec_;
    std::vector<std::unique_ptr<Layer<T>>> layers_;
};

// Weights file: "MRSW" | u32 version | u32 json length | NetworkSpec json
//               | per parameterized layer: weight f32..., bias f32...

inline constexpr std::uint32_t weights_version = 1;

template <class T>
std::string serialize_weights(Network<T>& net)
{
    mrsq::detail::ByteWriter w;
    w.put_bytes("MRSW", 4);
    w.put<std::uint32_t>(weights_version);
    const std::string js = to_json(net.spec()).dump();
    w.put<std::uint32_t>(static_cast<std::uint32_t>(js.size()));
    w.put_bytes(js.data(), js.size());
    for (auto p : net.params()) {
        for (T v : p.value->data) w.put<float>(static_cast<float>(v));
    }
    return w.bytes();
}

template <class T>
Network<T> deserialize_weights(const std::string& bytes, const std::string& what = "weights")
{
    if (bytes.size() < 4 || bytes.compare(0, 4, "MRSW") != 0) throw BadMagicError(what + ": not a weights file (bad magic)");
    mrsq::detail::ByteReader r(bytes, what);
    r.get_bytes(4);
    const auto version = r.get<std::uint32_t>();
    if (version != weights_version) throw VersionMismatchError(what + ": unsupported weights version " + std::to_string(version));
    const auto len = r.get<std::uint32_t>();
    NetworkSpec spec;
    try {
        spec = network_spec_from_json(nlohmann::json::parse(r.get_bytes(len)));
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(what + ": corrupt network spec: " + e.what());
    }
    Network<T> net(spec);
    std::size_t total = 0;
    for (auto p : net.params()) total += p.value->size();
    if (r.remaining() < total * sizeof(float)) throw TruncatedFileError(what + ": weight payload is truncated");
    for (auto p : net.params()) {
        for (auto& v : p.value->data) v = static_cast<T>(r.get<float>());
    }
    return net;
}

template <class T>
void save_weights(Network<T>& net, const std::string& path)
{
    mrsq::detail::write_file(path, serialize_weights(net));
}

template <class T = float>
Network<T> load_weights(const std::string& path)
{
    return deserialize_weights<T>(read_file_bytes(path), path);
}

} // namespace mrsq::nnet
