#include "poserec/gan.hpp"

#include "poserec/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>

namespace poserec {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr std::uint64_t kInitStream = 0;
constexpr std::uint64_t kNoiseStream = 1;
constexpr std::uint64_t kSampleStream = 2;

// seed_seq and the engine are fully specified by the standard, so streams are
// reproducible across toolchains. Distributions are derived by hand below for
// the same reason.
std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return std::mt19937_64(seq);
}

std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound)
{
    const std::uint64_t limit = std::mt19937_64::max() - std::mt19937_64::max() % bound;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % bound;
}

double standard_normal(std::mt19937_64& rng)
{
    const double u1 = std::ldexp(static_cast<double>((rng() >> 11) + 1), -53); // (0, 1]
    const double u2 = std::ldexp(static_cast<double>(rng() >> 11), -53);       // [0, 1)
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::vector<int> widths(int first, const std::vector<int>& hidden, int last)
{
    std::vector<int> w{first};
    w.insert(w.end(), hidden.begin(), hidden.end());
    w.push_back(last);
    return w;
}

} // namespace

// ---------------------------------------------------------------- splitting

SplitDatasets split_datasets(const std::vector<std::string>& ids, std::uint64_t seed)
{
    if (ids.size() != kRecommendationCount)
        throw Error(ErrorKind::WrongCardinality, "expected " + std::to_string(kRecommendationCount) +
                                                     " recommended images, got " + std::to_string(ids.size()));
    if (std::set<std::string>(ids.begin(), ids.end()).size() != ids.size())
        throw Error(ErrorKind::InvalidArgument, "recommended image ids must be distinct");

    std::vector<std::string> shuffled = ids;
    auto rng = make_engine(seed, kInitStream);
    for (std::size_t i = shuffled.size() - 1; i > 0; --i)
        std::swap(shuffled[i], shuffled[uniform_below(rng, i + 1)]);

    SplitDatasets split;
    split.seed = seed;
    split.set_a.assign(shuffled.begin(), shuffled.begin() + kSplitSize);
    split.set_b.assign(shuffled.begin() + kSplitSize, shuffled.end());
    return split;
}

// ---------------------------------------------------------------- schedule

TrainingSchedule build_schedule(int epochs)
{
    if (epochs < 1)
        throw Error(ErrorKind::InvalidArgument, "epochs must be at least 1");
    TrainingSchedule schedule;
    schedule.epochs = epochs;
    schedule.pairs.reserve(static_cast<std::size_t>(epochs) * kPairsPerEpoch);
    for (int e = 0; e < epochs; ++e)
        for (int i = 0; i < kSplitSize; ++i)
            for (int j = 0; j < kSplitSize; ++j)
                schedule.pairs.emplace_back(i, j);
    return schedule;
}

// ---------------------------------------------------------------- model

void GanConfig::validate() const
{
    auto fail = [](const std::string& what) { return Error(ErrorKind::InvalidArgument, what); };
    if (image_side < 1)
        throw fail("image side must be at least 1");
    if (channels != 1 && channels != 3)
        throw fail("channels must be 1 or 3");
    if (latent_dim < 1)
        throw fail("latent dimension must be at least 1");
    for (int w : g_hidden)
        if (w < 1)
            throw fail("generator hidden widths must be positive");
    for (int w : d_hidden)
        if (w < 1)
            throw fail("discriminator hidden widths must be positive");
    if (epochs < 1)
        throw fail("epochs must be at least 1");
    if (!(adam.learning_rate > 0) || !std::isfinite(adam.learning_rate))
        throw fail("learning rate must be positive");
    if (!(adam.beta1 >= 0 && adam.beta1 < 1) || !(adam.beta2 >= 0 && adam.beta2 < 1))
        throw fail("Adam betas must lie in [0, 1)");
    if (!(adam.epsilon > 0))
        throw fail("Adam epsilon must be positive");
}

GanModel make_gan(const GanConfig& config)
{
    config.validate();
    auto rng = make_engine(config.seed, kInitStream);
    GanModel model;
    model.config = config;
    model.generator = nn::make_mlp(widths(config.latent_dim, config.g_hidden, config.image_size()),
                                   nn::Activation::Tanh, rng);
    model.discriminator = nn::make_mlp(widths(config.image_size(), config.d_hidden, 1), nn::Activation::Sigmoid, rng);
    model.generator_adam = nn::AdamState::for_model(model.generator);
    model.discriminator_adam = nn::AdamState::for_model(model.discriminator);
    return model;
}

namespace {

json mlp_to_json(const nn::Mlp& net)
{
    json layers = json::array();
    for (const nn::DenseLayer& l : net.layers)
        layers.push_back({{"in", l.in}, {"out", l.out}, {"weights", l.weights}, {"bias", l.bias}});
    return {{"output", net.output == nn::Activation::Tanh ? "tanh" : "sigmoid"}, {"layers", std::move(layers)}};
}

json adam_to_json(const nn::AdamState& s)
{
    return {{"t", s.t}, {"m", s.m}, {"v", s.v}};
}

std::vector<double> finite_array(const json& j, std::size_t expected, const char* what)
{
    auto values = j.get<std::vector<double>>();
    if (values.size() != expected)
        throw Error(ErrorKind::CorruptModel, std::string(what) + " has " + std::to_string(values.size()) +
                                                 " values, expected " + std::to_string(expected));
    for (double v : values)
        if (!std::isfinite(v))
            throw Error(ErrorKind::CorruptModel, std::string(what) + " contains a non-finite value");
    return values;
}

nn::Mlp mlp_from_json(const json& j, const std::vector<int>& expected_widths, nn::Activation expected_output)
{
    nn::Mlp net;
    const std::string output = j.at("output").get<std::string>();
    net.output = output == "tanh" ? nn::Activation::Tanh : nn::Activation::Sigmoid;
    if ((output != "tanh" && output != "sigmoid") || net.output != expected_output)
        throw Error(ErrorKind::CorruptModel, "unexpected output activation '" + output + "'");

    const json& layers = j.at("layers");
    if (layers.size() + 1 != expected_widths.size())
        throw Error(ErrorKind::CorruptModel, "layer count does not match the config");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const json& jl = layers[i];
        nn::DenseLayer l;
        l.in = jl.at("in").get<int>();
        l.out = jl.at("out").get<int>();
        if (l.in != expected_widths[i] || l.out != expected_widths[i + 1])
            throw Error(ErrorKind::CorruptModel, "layer " + std::to_string(i) + " dimensions do not match the config");
        l.weights = finite_array(jl.at("weights"), static_cast<std::size_t>(l.in) * l.out, "weights");
        l.bias = finite_array(jl.at("bias"), static_cast<std::size_t>(l.out), "bias");
        net.layers.push_back(std::move(l));
    }
    return net;
}

nn::AdamState adam_from_json(const json& j, const nn::Mlp& net)
{
    nn::AdamState s;
    s.t = j.at("t").get<std::int64_t>();
    if (s.t < 0)
        throw Error(ErrorKind::CorruptModel, "negative Adam step counter");
    const auto params = net.tensors();
    const json& jm = j.at("m");
    const json& jv = j.at("v");
    if (jm.size() != params.size() || jv.size() != params.size())
        throw Error(ErrorKind::CorruptModel, "Adam state tensor count does not match the network");
    for (std::size_t k = 0; k < params.size(); ++k) {
        s.m.push_back(finite_array(jm[k], params[k].size(), "Adam first moment"));
        s.v.push_back(finite_array(jv[k], params[k].size(), "Adam second moment"));
    }
    return s;
}

} // namespace

void save_model(const GanModel& model, const fs::path& path)
{
    const GanConfig& c = model.config;
    json doc;
    doc["version"] = kModelFormatVersion;
    doc["config"] = {{"image_side", c.image_side},
                     {"channels", c.channels},
                     {"latent_dim", c.latent_dim},
                     {"g_hidden", c.g_hidden},
                     {"d_hidden", c.d_hidden},
                     {"learning_rate", c.adam.learning_rate},
                     {"beta1", c.adam.beta1},
                     {"beta2", c.adam.beta2},
                     {"epsilon", c.adam.epsilon},
                     {"epochs", c.epochs},
                     {"seed", c.seed}};
    doc["telemetry"] = {{"epochs_completed", model.telemetry.epochs_completed},
                        {"iterations", model.telemetry.iterations}};
    doc["generator"] = mlp_to_json(model.generator);
    doc["discriminator"] = mlp_to_json(model.discriminator);
    doc["adam"] = {{"generator", adam_to_json(model.generator_adam)},
                   {"discriminator", adam_to_json(model.discriminator_adam)}};

    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << doc.dump() << '\n';
        if (!out)
            throw Error(ErrorKind::IoError, "cannot write " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec)
        throw Error(ErrorKind::IoError, "cannot replace " + path.string() + ": " + ec.message());
}

GanModel load_model(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorKind::IoError, "cannot open model " + path.string());

    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::CorruptModel, path.string() + ": " + e.what());
    }

    try {
        if (!doc.is_object() || !doc.contains("version"))
            throw Error(ErrorKind::CorruptModel, "missing version field");
        if (!doc["version"].is_number_integer() || doc["version"].get<int>() != kModelFormatVersion)
            throw Error(ErrorKind::VersionMismatch, "model format version " + doc["version"].dump() + ", expected " +
                                                        std::to_string(kModelFormatVersion));

        const json& jc = doc.at("config");
        GanModel model;
        GanConfig& c = model.config;
        c.image_side = jc.at("image_side").get<int>();
        c.channels = jc.at("channels").get<int>();
        c.latent_dim = jc.at("latent_dim").get<int>();
        c.g_hidden = jc.at("g_hidden").get<std::vector<int>>();
        c.d_hidden = jc.at("d_hidden").get<std::vector<int>>();
        c.adam.learning_rate = jc.at("learning_rate").get<double>();
        c.adam.beta1 = jc.at("beta1").get<double>();
        c.adam.beta2 = jc.at("beta2").get<double>();
        c.adam.epsilon = jc.at("epsilon").get<double>();
        c.epochs = jc.at("epochs").get<int>();
        c.seed = jc.at("seed").get<std::uint64_t>();
        c.validate();

        const json& jt = doc.at("telemetry");
        model.telemetry.epochs_completed = jt.at("epochs_completed").get<int>();
        model.telemetry.iterations = jt.at("iterations").get<std::int64_t>();

        model.generator = mlp_from_json(doc.at("generator"), widths(c.latent_dim, c.g_hidden, c.image_size()),
                                        nn::Activation::Tanh);
        model.discriminator =
            mlp_from_json(doc.at("discriminator"), widths(c.image_size(), c.d_hidden, 1), nn::Activation::Sigmoid);
        model.generator_adam = adam_from_json(doc.at("adam").at("generator"), model.generator);
        model.discriminator_adam = adam_from_json(doc.at("adam").at("discriminator"), model.discriminator);
        return model;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::CorruptModel, path.string() + ": " + e.what());
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::VersionMismatch || e.kind() == ErrorKind::CorruptModel)
            throw;
        throw Error(ErrorKind::CorruptModel, path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------- training

std::vector<double> prepare_image(const ImageBuffer& img, const GanConfig& config)
{
    const ColorSpace space = config.channels == 1 ? ColorSpace::GRAY : ColorSpace::RGB;
    const ImageBuffer square = center_crop_square(to_color_space(img, space));
    const ImageBuffer sized = resize_area(square, config.image_side, config.image_side);
    std::vector<double> out(sized.pixels().size());
    std::transform(sized.pixels().begin(), sized.pixels().end(), out.begin(),
                   [](std::uint8_t v) { return v / 127.5 - 1.0; });
    return out;
}

TrainingData load_training_data(const SplitDatasets& split, const std::map<std::string, std::string>& sources,
                                const GanConfig& config)
{
    auto load_set = [&](const std::vector<std::string>& ids) {
        if (ids.size() != kSplitSize)
            throw Error(ErrorKind::WrongCardinality, "each training set needs " + std::to_string(kSplitSize) +
                                                         " images, got " + std::to_string(ids.size()));
        std::vector<std::vector<double>> images;
        for (const std::string& id : ids) {
            const auto it = sources.find(id);
            if (it == sources.end())
                throw Error(ErrorKind::InvalidArgument, "no source path for image '" + id + "'");
            images.push_back(prepare_image(load_image(it->second), config));
        }
        return images;
    };
    return TrainingData{load_set(split.set_a), load_set(split.set_b)};
}

TrainingRun train_gan(const TrainingData& data, const GanConfig& config, const LossCallback& on_loss)
{
    config.validate();
    if (data.set_a.size() != kSplitSize || data.set_b.size() != kSplitSize)
        throw Error(ErrorKind::WrongCardinality, "training needs two sets of six images");
    for (const auto* set : {&data.set_a, &data.set_b})
        for (const auto& img : *set)
            if (img.size() != static_cast<std::size_t>(config.image_size()))
                throw Error(ErrorKind::DimensionMismatch, "training image has " + std::to_string(img.size()) +
                                                              " values, expected " +
                                                              std::to_string(config.image_size()));

    TrainingRun run{make_gan(config), {}};
    GanModel& model = run.model;
    const TrainingSchedule schedule = build_schedule(config.epochs);
    run.losses.reserve(schedule.total_iterations());
    auto noise = make_engine(config.seed, kNoiseStream);

    const std::vector<double> d_labels{1.0, 1.0, 0.0, 0.0};
    const std::vector<double> g_labels{1.0, 1.0};
    std::vector<double> z(static_cast<std::size_t>(config.latent_dim));
    nn::ForwardCache g_cache[2];
    nn::ForwardCache d_cache[4];

    for (std::size_t step = 0; step < schedule.pairs.size(); ++step) {
        const auto [ai, bj] = schedule.pairs[step];

        // generate the fake batch
        std::vector<double> fakes[2];
        for (int k = 0; k < 2; ++k) {
            for (double& v : z)
                v = standard_normal(noise);
            fakes[k] = nn::forward(model.generator, z, &g_cache[k]);
        }

        // discriminator: real {A_i, B_j} -> 1, fakes -> 0
        const std::vector<double>* d_inputs[4] = {&data.set_a[ai], &data.set_b[bj], &fakes[0], &fakes[1]};
        std::vector<double> d_pred(4);
        for (int k = 0; k < 4; ++k)
            d_pred[k] = nn::forward(model.discriminator, *d_inputs[k], &d_cache[k])[0];
        const nn::BceResult d_bce = nn::bce_loss(d_pred, d_labels);
        auto d_grads = nn::Gradients::zeros_like(model.discriminator);
        for (int k = 0; k < 4; ++k)
            nn::backward(model.discriminator, d_cache[k], std::span(&d_bce.gradient[k], 1), d_grads);
        nn::adam_step(model.discriminator, d_grads, model.discriminator_adam, config.adam);

        // generator: fakes -> 1 through the updated discriminator
        std::vector<double> g_pred(2);
        nn::ForwardCache through[2];
        for (int k = 0; k < 2; ++k)
            g_pred[k] = nn::forward(model.discriminator, fakes[k], &through[k])[0];
        const nn::BceResult g_bce = nn::bce_loss(g_pred, g_labels);
        auto g_grads = nn::Gradients::zeros_like(model.generator);
        auto unused = nn::Gradients::zeros_like(model.discriminator);
        for (int k = 0; k < 2; ++k) {
            const auto dx = nn::backward(model.discriminator, through[k], std::span(&g_bce.gradient[k], 1), unused);
            nn::backward(model.generator, g_cache[k], dx, g_grads);
        }
        nn::adam_step(model.generator, g_grads, model.generator_adam, config.adam);

        const LossRecord record{static_cast<int>(step / kPairsPerEpoch), static_cast<int>(step % kPairsPerEpoch),
                                d_bce.loss, g_bce.loss};
        if (!std::isfinite(record.d_loss) || !std::isfinite(record.g_loss)) {
            char detail[160];
            std::snprintf(detail, sizeof detail, "epoch %d iteration %d pair (%d,%d): d_loss=%g g_loss=%g",
                          record.epoch, record.iteration, ai, bj, record.d_loss, record.g_loss);
            throw Error(ErrorKind::NonFiniteLoss, detail);
        }
        run.losses.push_back(record);
        ++model.telemetry.iterations;
        if (record.iteration == kPairsPerEpoch - 1)
            ++model.telemetry.epochs_completed;
        if (on_loss)
            on_loss(record);
    }
    return run;
}

void write_loss_log(const std::vector<LossRecord>& losses, const fs::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << "epoch,iteration,d_loss,g_loss\n";
    char line[96];
    for (const LossRecord& r : losses) {
        std::snprintf(line, sizeof line, "%d,%d,%.17g,%.17g\n", r.epoch, r.iteration, r.d_loss, r.g_loss);
        out << line;
    }
    if (!out)
        throw Error(ErrorKind::IoError, "cannot write " + path.string());
}

// ---------------------------------------------------------------- sampling

std::vector<std::vector<double>> sample_latents(int count, int latent_dim, std::uint64_t seed, std::uint64_t stream)
{
    auto rng = make_engine(seed, stream);
    std::vector<std::vector<double>> out(static_cast<std::size_t>(count), std::vector<double>(latent_dim));
    for (auto& z : out)
        for (double& v : z)
            v = standard_normal(rng);
    return out;
}

ImageBuffer to_image(std::span<const double> values, const GanConfig& config)
{
    if (values.size() != static_cast<std::size_t>(config.image_size()))
        throw Error(ErrorKind::DimensionMismatch, "sample has " + std::to_string(values.size()) + " values");
    std::vector<std::uint8_t> px(values.size());
    std::transform(values.begin(), values.end(), px.begin(), [](double v) {
        return static_cast<std::uint8_t>(std::clamp(std::floor((v + 1.0) * 127.5 + 0.5), 0.0, 255.0));
    });
    return ImageBuffer(config.image_side, config.image_side, config.channels == 1 ? ColorSpace::GRAY : ColorSpace::RGB,
                       std::move(px));
}

std::vector<fs::path> generate_samples(const GanModel& model, int n, std::uint64_t seed, const fs::path& out_dir)
{
    if (n < 1)
        throw Error(ErrorKind::InvalidArgument, "sample count must be at least 1");
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec)
        throw Error(ErrorKind::IoError, "cannot create " + out_dir.string() + ": " + ec.message());

    const int digits = std::max<int>(2, static_cast<int>(std::to_string(n).size()));
    std::vector<fs::path> written;
    const auto latents = sample_latents(n, model.config.latent_dim, seed, kSampleStream);
    for (int i = 0; i < n; ++i) {
        std::string index = std::to_string(i + 1);
        index.insert(0, static_cast<std::size_t>(digits) - index.size(), '0');
        const fs::path file = out_dir / ("sample_" + index + ".png");
        save_png(to_image(nn::forward(model.generator, latents[static_cast<std::size_t>(i)]), model.config), file);
        written.push_back(file);
    }
    return written;
}

} // namespace poserec
