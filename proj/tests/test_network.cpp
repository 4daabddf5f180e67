#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "mrsq/nnet/train.hpp"

using namespace mrsq;
using namespace mrsq::nnet;

namespace {

NetworkSpec small_spec(std::size_t length, std::size_t outputs)
{
    NetworkSpec s;
    s.input_channels = 2;
    s.input_length = length;
    s.output_dim = outputs;
    s.layers = {LayerSpec::conv1d(2, 4, 5), LayerSpec::crelu(), LayerSpec::maxpool1d(4),
                LayerSpec::flatten(),       LayerSpec::fc(8 * length / 4, 32), LayerSpec::fc(32, outputs)};
    return s;
}

Dataset random_dataset(std::size_t count, std::size_t length, std::size_t labels, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Dataset ds;
    ds.names.resize(labels - 1, "m");
    ds.samples.resize(count);
    for (auto& s : ds.samples) {
        s.signal = ComplexSeries(length);
        for (std::size_t j = 0; j < length; ++j) {
            s.signal.re[j] = g(rng);
            s.signal.im[j] = g(rng);
        }
        s.label.resize(labels);
        for (auto& v : s.label) v = u(rng);
    }
    return ds;
}

} // namespace

TEST(NetworkSpec, DefaultShapeChain)
{
    const auto spec = default_network_spec(2048, 7);
    const auto chain = validate(spec);
    EXPECT_EQ(chain.front(), (Shape{2, 2048}));
    EXPECT_EQ(chain.back(), (Shape{7}));
    EXPECT_EQ(chain.size(), spec.layers.size() + 1);

    Network<float> net(spec);
    net.init(1);
    const auto y = net.forward(Tensor<float>({2, 2, 2048}, 0.1f));
    EXPECT_EQ(y.shape, (Shape{2, 7}));
}

TEST(NetworkSpec, CReluDoublesChannels)
{
    const auto chain = validate(default_network_spec(2048, 7));
    EXPECT_EQ(chain[1], (Shape{16, 2048}));
    EXPECT_EQ(chain[2], (Shape{32, 2048}));
}

TEST(NetworkSpec, InvalidSpecsNameTheLayer)
{
    auto spec = default_network_spec(2048, 7);
    spec.layers[3] = LayerSpec::conv1d(16, 32, 9);
    try {
        validate(spec);
        FAIL();
    } catch (const InvalidArgument& e) {
        EXPECT_NE(std::string(e.what()).find("layer 3"), std::string::npos) << e.what();
    }
    spec = default_network_spec(2048, 7);
    spec.output_dim = 8;
    EXPECT_THROW(validate(spec), InvalidArgument);
    spec = default_network_spec(2048, 7);
    spec.layers[2] = LayerSpec::maxpool1d(3);
    EXPECT_THROW(validate(spec), InvalidArgument);
}

TEST(NetworkSpec, JsonRoundTrip)
{
    const auto spec = default_network_spec(2048, 7);
    const auto back = network_spec_from_json(to_json(spec));
    EXPECT_EQ(to_json(back), to_json(spec));
}

TEST(Network, InitIsFanInScaled)
{
    Network<double> net(small_spec(32, 3));
    net.init(4);
    for (auto& layer : net.layers()) {
        auto ps = layer->params();
        if (ps.empty()) continue;
        const double bound = std::sqrt(1.0 / static_cast<double>(ps[0].value->dim(1)));
        for (double w : ps[0].value->data) EXPECT_LE(std::abs(w), bound);
        for (double b : ps[1].value->data) EXPECT_EQ(b, 0.0);
    }
}

TEST(Adam, ZeroGradientLeavesWeights)
{
    Tensor<double> w({3}, {1.0, -2.0, 0.5}), g({3});
    const auto before = w;
    Adam<double> adam;
    for (int i = 0; i < 5; ++i) adam.step({{&w, &g}}, 1e-3);
    EXPECT_EQ(w, before);
    EXPECT_EQ(adam.steps(), 5u);
}

TEST(Adam, MomentsDecayUnderZeroGradient)
{
    Tensor<double> w({1}, {0.0}), g({1}, {1.0});
    Adam<double> adam;
    adam.step({{&w, &g}}, 1e-3);
    const double m1 = adam.first_moments()[0][0], v1 = adam.second_moments()[0][0];
    g.fill(0.0);
    adam.step({{&w, &g}}, 1e-3);
    EXPECT_DOUBLE_EQ(adam.first_moments()[0][0], 0.9 * m1);
    EXPECT_DOUBLE_EQ(adam.second_moments()[0][0], 0.999 * v1);
}

TEST(Adam, ConstantGradientStepsAreLr)
{
    // With a constant gradient the bias-corrected moments are exactly g and g^2,
    // so every step is lr * g / (|g| + eps).
    Tensor<double> w({2}, {0.0, 0.0}), g({2}, {0.3, -2.0});
    Adam<double> adam;
    const double lr = 1e-3;
    for (int i = 0; i < 200; ++i) {
        const auto before = w;
        adam.step({{&w, &g}}, lr);
        EXPECT_NEAR(w[0] - before[0], -lr * 0.3 / (0.3 + 1e-8), 1e-12);
        EXPECT_NEAR(w[1] - before[1], lr * 2.0 / (2.0 + 1e-8), 1e-12);
    }
}

TEST(Schedule, StepPolicy)
{
    EXPECT_DOUBLE_EQ(step_lr(1e-3, 0.5, 0, 2500), 1e-3);
    EXPECT_DOUBLE_EQ(step_lr(1e-3, 0.5, 2499, 2500), 1e-3);
    EXPECT_DOUBLE_EQ(step_lr(1e-3, 0.5, 2500, 2500), 5e-4);
    EXPECT_DOUBLE_EQ(step_lr(1e-3, 0.5, 5000, 2500), 2.5e-4);
    TrainConfig c;
    c.max_iters = 20000;
    EXPECT_EQ(c.effective_step(), 2500u);
    c.gamma = 0.0;
    EXPECT_THROW(c.validate(), InvalidArgument);
}

TEST(Train, MemorizesSingleSample)
{
    auto ds = random_dataset(1, 32, 3, 7);
    ds.samples.assign(64, ds.samples[0]);
    Network<double> net(small_spec(32, 3));
    net.init(3);
    TrainConfig cfg;
    cfg.max_iters = 600;
    cfg.lr0 = 1e-3;
    cfg.gamma = 1.0;
    cfg.eval_every = 100;
    const auto r = train(net, ds, Dataset{}, cfg);
    EXPECT_LT(evaluate_loss(net, ds), 1e-6);
    EXPECT_LT(r.final_train_loss, r.curve.front().train_loss);
}

TEST(Train, UncorrelatedLabelsPlateauAtUniformVariance)
{
    const auto train_set = random_dataset(2048, 32, 3, 8);
    const auto val_set = random_dataset(2048, 32, 3, 9);
    Network<double> net(small_spec(32, 3));
    net.init(5);
    TrainConfig cfg;
    cfg.max_iters = 800;
    cfg.lr0 = 3e-4;
    cfg.eval_every = 800;
    train(net, train_set, val_set, cfg);
    const double val = evaluate_loss(net, val_set);
    EXPECT_NEAR(val, 1.0 / 12.0, 0.02);
}

TEST(Train, DeterministicForSeed)
{
    const auto ds = random_dataset(200, 32, 3, 10);
    TrainConfig cfg;
    cfg.max_iters = 40;
    cfg.batch_size = 16;
    cfg.eval_every = 0;
    auto run = [&] {
        Network<float> net(small_spec(32, 3));
        net.init(11);
        train(net, ds, Dataset{}, cfg);
        return serialize_weights(net);
    };
    EXPECT_EQ(run(), run());
}

TEST(Train, RejectsMismatchedOutputs)
{
    const auto ds = random_dataset(10, 32, 4, 1);
    Network<float> net(small_spec(32, 3));
    EXPECT_THROW(train(net, ds, Dataset{}, TrainConfig{}), InvalidArgument);
}

TEST(Train, DivergenceIsReported)
{
    const auto ds = random_dataset(64, 32, 3, 12);
    Network<float> net(small_spec(32, 3));
    net.init(1);
    TrainConfig cfg;
    cfg.lr0 = 1e30;
    cfg.max_iters = 200;
    cfg.eval_every = 5;
    EXPECT_THROW(train(net, ds, Dataset{}, cfg), TrainingDivergedError);
}

TEST(Predict, DeterministicAndClamped)
{
    Network<float> net(small_spec(32, 3));
    net.init(2);
    const auto ds = random_dataset(3, 32, 3, 13);
    const auto a = predict(net, ds.samples[0].signal);
    const auto b = predict(net, ds.samples[0].signal);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a.size(), 3u);
    for (double v : a) EXPECT_GE(v, 0.0);
    const auto all = predict_all(net, ds);
    ASSERT_EQ(all.size(), 3u);
    for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(all[0][k], a[k], 1e-5);
}

TEST(WeightsFile, RoundTrip)
{
    Network<float> net(small_spec(32, 3));
    net.init(6);
    const auto path = (std::filesystem::temp_directory_path() / "mrsq_test_weights.mrsw").string();
    save_weights(net, path);
    auto back = load_weights<float>(path);
    EXPECT_EQ(serialize_weights(back), serialize_weights(net));
    const auto ds = random_dataset(1, 32, 3, 14);
    EXPECT_EQ(predict(back, ds.samples[0].signal), predict(net, ds.samples[0].signal));
    std::filesystem::remove(path);
}

TEST(WeightsFile, Errors)
{
    Network<float> net(small_spec(32, 3));
    auto bytes = serialize_weights(net);
    EXPECT_THROW(deserialize_weights<float>(bytes.substr(0, bytes.size() - 8)), TruncatedFileError);
    auto bad = bytes;
    bad[1] = 'X';
    EXPECT_THROW(deserialize_weights<float>(bad), BadMagicError);
    bad = bytes;
    bad[4] = 9;
    EXPECT_THROW(deserialize_weights<float>(bad), VersionMismatchError);
}

TEST(Network, CopyKeepsWeights)
{
    Network<float> net(small_spec(32, 3));
    net.init(8);
    Network<float> copy(net);
    EXPECT_EQ(serialize_weights(copy), serialize_weights(net));
}
