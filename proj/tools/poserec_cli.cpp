// poserec: pose image recommender and small-data GAN trainer.
//
//   poserec index      --dir D --out F [--bins 32] [--color-space hsv] [--grid 3]
//   poserec query      --index F --input IMG --out-dir O [--metric bhattacharyya] [--k 12]
//   poserec split      --results O/results.json --out S.json [--seed N]
//   poserec gan-train  --split S.json --out model.json --loss-log losses.csv [--epochs 2000] [--size 16] ...
//   poserec gan-sample --model model.json --out-dir O [--n 6] [--seed N]
//
// Exit codes: 0 success, 1 I/O or environment failure, 2 validation or domain error.

#include "poserec/error.hpp"
#include "poserec/gan.hpp"
#include "poserec/index.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace poserec;

namespace {

constexpr int kExitIo = 1;
constexpr int kExitValidation = 2;

int exit_code(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::FileNotFound:
    case ErrorKind::UnsupportedFormat:
    case ErrorKind::CorruptImage:
    case ErrorKind::IoError:
    case ErrorKind::VersionMismatch:
    case ErrorKind::CorruptIndex:
    case ErrorKind::CorruptModel:
        return kExitIo;
    default:
        return kExitValidation;
    }
}

void require_input(const fs::path& path, ErrorKind kind = ErrorKind::FileNotFound)
{
    std::error_code ec;
    if (!fs::is_regular_file(path, ec))
        throw Error(kind, "input file " + path.string() + " does not exist");
}

void require_output_parent(const fs::path& path)
{
    const fs::path parent = path.parent_path();
    std::error_code ec;
    if (!parent.empty() && !fs::is_directory(parent, ec))
        throw Error(ErrorKind::IoError, "output directory " + parent.string() + " does not exist");
}

json read_json(const fs::path& path, ErrorKind corrupt_kind)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorKind::IoError, "cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error(corrupt_kind, path.string() + ": " + e.what());
    }
}

struct Globals {
    std::uint64_t seed = 0;
    bool verbose = false;
};

// ---------------------------------------------------------------- index

struct IndexArgs {
    std::string dir;
    std::string out;
    int bins = 32;
    std::string color_space = "hsv";
    int grid = 3;
    unsigned threads = 0;
};

int run_index(const IndexArgs& args, const Globals& g)
{
    IndexConfig config;
    config.bins = args.bins;
    const auto space = parse_color_space(args.color_space);
    if (!space)
        throw Error(ErrorKind::InvalidArgument, "unknown color space '" + args.color_space + "' (rgb, hsv, gray)");
    config.color_space = *space;
    config.grid = {args.grid, args.grid};
    if (!fs::is_directory(args.dir))
        throw Error(ErrorKind::IoError, args.dir + " is not a directory");
    require_output_parent(args.out);

    const IndexBuild build = build_index(args.dir, config, args.threads);
    save_index(build.index, args.out);

    std::cout << "indexed " << build.index.size() << " images (" << build.skipped.size() << " skipped)\n";
    for (const SkippedFile& s : build.skipped)
        std::cerr << "skipped " << s.path << (g.verbose ? ": " + s.reason : std::string()) << '\n';
    return 0;
}

// ---------------------------------------------------------------- query

struct QueryArgs {
    std::string index;
    std::string input;
    std::string out_dir;
    std::string metric = "bhattacharyya";
    int k = kDefaultTopK;
};

int run_query(const QueryArgs& args, const Globals&)
{
    const auto metric = parse_metric(args.metric);
    if (!metric)
        throw Error(ErrorKind::InvalidArgument,
                    "unknown metric '" + args.metric + "' (correlation, chi-squared, intersection, bhattacharyya)");
    if (args.k < 1)
        throw Error(ErrorKind::InvalidArgument, "--k must be at least 1");
    require_input(args.index);
    require_input(args.input);

    const ImageIndex index = load_index(args.index);
    const RankedResult result = query_top_k(index, load_image(args.input), *metric, args.k);
    export_results(result, index, args.out_dir);

    std::printf("%-6s %-22s %s\n", "rank", to_string(*metric).data(), "id");
    for (std::size_t i = 0; i < result.items.size(); ++i)
        std::printf("%-6zu %-22.15g %s\n", i + 1, result.items[i].score, result.items[i].id.c_str());
    return 0;
}

// ---------------------------------------------------------------- split

struct SplitArgs {
    std::string results;
    std::string out;
};

int run_split(const SplitArgs& args, const Globals& g)
{
    require_input(args.results);
    require_output_parent(args.out);

    const json manifest = read_json(args.results, ErrorKind::IoError);
    std::vector<std::string> ids;
    json sources = json::object();
    try {
        for (const json& item : manifest.at("items")) {
            const auto id = item.at("id").get<std::string>();
            ids.push_back(id);
            sources[id] = item.at("source_path").get<std::string>();
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::IoError, args.results + " is not a results manifest: " + e.what());
    }

    const SplitDatasets split = split_datasets(ids, g.seed);
    json doc;
    doc["version"] = 1;
    doc["seed"] = split.seed;
    doc["set_a"] = split.set_a;
    doc["set_b"] = split.set_b;
    doc["sources"] = std::move(sources);

    std::ofstream out(args.out, std::ios::binary | std::ios::trunc);
    out << doc.dump(2) << '\n';
    if (!out)
        throw Error(ErrorKind::IoError, "cannot write " + args.out);

    std::cout << "set A:";
    for (const auto& id : split.set_a)
        std::cout << ' ' << id;
    std::cout << "\nset B:";
    for (const auto& id : split.set_b)
        std::cout << ' ' << id;
    std::cout << '\n';
    return 0;
}

// ---------------------------------------------------------------- gan-train

struct TrainArgs {
    std::string split;
    std::string out;
    std::string loss_log;
    GanConfig config;
    bool rgb = false;
};

int run_gan_train(TrainArgs args, const Globals& g)
{
    args.config.seed = g.seed;
    args.config.channels = args.rgb ? 3 : 1;
    args.config.validate();
    require_input(args.split);
    require_output_parent(args.out);
    require_output_parent(args.loss_log);

    const json doc = read_json(args.split, ErrorKind::IoError);
    SplitDatasets split;
    std::map<std::string, std::string> sources;
    try {
        split.set_a = doc.at("set_a").get<std::vector<std::string>>();
        split.set_b = doc.at("set_b").get<std::vector<std::string>>();
        split.seed = doc.at("seed").get<std::uint64_t>();
        sources = doc.at("sources").get<std::map<std::string, std::string>>();
    } catch (const json::exception& e) {
        throw Error(ErrorKind::IoError, args.split + " is not a split file: " + e.what());
    }

    const TrainingData data = load_training_data(split, sources, args.config);
    const int report_every = std::max(1, args.config.epochs / 20);
    double d_sum = 0, g_sum = 0;
    const TrainingRun run = train_gan(data, args.config, [&](const LossRecord& r) {
        d_sum += r.d_loss;
        g_sum += r.g_loss;
        if (r.iteration + 1 == kPairsPerEpoch) {
            if (g.verbose && (r.epoch % report_every == 0 || r.epoch + 1 == args.config.epochs))
                std::printf("epoch %5d  d_loss %.5f  g_loss %.5f\n", r.epoch + 1, d_sum / kPairsPerEpoch,
                            g_sum / kPairsPerEpoch);
            d_sum = g_sum = 0;
        }
    });

    save_model(run.model, args.out);
    write_loss_log(run.losses, args.loss_log);
    const LossRecord& last = run.losses.back();
    std::printf("trained %d epochs (%zu iterations), final d_loss %.5f g_loss %.5f\n", args.config.epochs,
                run.losses.size(), last.d_loss, last.g_loss);
    return 0;
}

// ---------------------------------------------------------------- gan-sample

struct SampleArgs {
    std::string model;
    std::string out_dir;
    int n = 6;
};

int run_gan_sample(const SampleArgs& args, const Globals& g)
{
    if (args.n < 1)
        throw Error(ErrorKind::InvalidArgument, "--n must be at least 1");
    require_input(args.model);
    const GanModel model = load_model(args.model);
    const auto files = generate_samples(model, args.n, g.seed, args.out_dir);
    for (const auto& f : files)
        std::cout << f.string() << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Pose image recommender and small-data GAN trainer"};
    app.require_subcommand(1, 1);
    app.fallthrough();

    Globals globals;
    app.add_option("--seed", globals.seed, "Seed for splitting, training and sampling");
    app.add_flag("--verbose,-v", globals.verbose, "More output");

    IndexArgs index_args;
    auto* index_cmd = app.add_subcommand("index", "Build a histogram index of an image directory");
    index_cmd->add_option("--dir", index_args.dir, "Image directory (scanned recursively)")->required();
    index_cmd->add_option("--out", index_args.out, "Index file to write")->required();
    index_cmd->add_option("--bins", index_args.bins, "Histogram bins per channel")->capture_default_str();
    index_cmd->add_option("--color-space", index_args.color_space, "rgb, hsv or gray")->capture_default_str();
    index_cmd->add_option("--grid", index_args.grid, "Regions per side of the segmentation grid")->capture_default_str();
    index_cmd->add_option("--threads", index_args.threads, "Worker threads, 0 = all cores")->capture_default_str();

    QueryArgs query_args;
    auto* query_cmd = app.add_subcommand("query", "Export the most similar indexed images");
    query_cmd->add_option("--index", query_args.index, "Index file")->required();
    query_cmd->add_option("--input", query_args.input, "Query image")->required();
    query_cmd->add_option("--out-dir", query_args.out_dir, "Directory receiving results")->required();
    query_cmd->add_option("--metric", query_args.metric, "correlation, chi-squared, intersection or bhattacharyya")
        ->capture_default_str();
    query_cmd->add_option("--k", query_args.k, "Number of results")->capture_default_str();

    SplitArgs split_args;
    auto* split_cmd = app.add_subcommand("split", "Split twelve recommendations into two sets of six");
    split_cmd->add_option("--results", split_args.results, "results.json from a query")->required();
    split_cmd->add_option("--out", split_args.out, "Split file to write")->required();

    TrainArgs train_args;
    GanConfig& cfg = train_args.config;
    auto* train_cmd = app.add_subcommand("gan-train", "Train the GAN on a split");
    train_cmd->add_option("--split", train_args.split, "Split file")->required();
    train_cmd->add_option("--out", train_args.out, "Model file to write")->required();
    train_cmd->add_option("--loss-log", train_args.loss_log, "Loss CSV to write")->required();
    train_cmd->add_option("--epochs", cfg.epochs, "Passes over the 6x6 schedule")->capture_default_str();
    train_cmd->add_option("--size", cfg.image_side, "Training image side in pixels")->capture_default_str();
    train_cmd->add_option("--latent-dim", cfg.latent_dim, "Generator noise dimension")->capture_default_str();
    train_cmd->add_option("--g-hidden", cfg.g_hidden, "Generator hidden widths")->delimiter(',')->capture_default_str();
    train_cmd->add_option("--d-hidden", cfg.d_hidden, "Discriminator hidden widths")->delimiter(',')->capture_default_str();
    train_cmd->add_option("--lr", cfg.adam.learning_rate, "Adam learning rate")->capture_default_str();
    train_cmd->add_option("--beta1", cfg.adam.beta1, "Adam beta1")->capture_default_str();
    train_cmd->add_option("--beta2", cfg.adam.beta2, "Adam beta2")->capture_default_str();
    train_cmd->add_option("--adam-eps", cfg.adam.epsilon, "Adam epsilon")->capture_default_str();
    train_cmd->add_flag("--rgb", train_args.rgb, "Train on RGB instead of grayscale");

    SampleArgs sample_args;
    auto* sample_cmd = app.add_subcommand("gan-sample", "Write generator samples as PNG");
    sample_cmd->add_option("--model", sample_args.model, "Model file")->required();
    sample_cmd->add_option("--out-dir", sample_args.out_dir, "Directory receiving samples")->required();
    sample_cmd->add_option("--n", sample_args.n, "Number of samples")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitValidation;
    }

    try {
        if (index_cmd->parsed())
            return run_index(index_args, globals);
        if (query_cmd->parsed())
            return run_query(query_args, globals);
        if (split_cmd->parsed())
            return run_split(split_args, globals);
        if (train_cmd->parsed())
            return run_gan_train(train_args, globals);
        if (sample_cmd->parsed())
            return run_gan_sample(sample_args, globals);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    }
    return kExitValidation;
}
