#pragma once

#include "poserec/imaging.hpp"
#include "poserec/nn.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace poserec {

inline constexpr int kSplitSize = 6;
inline constexpr int kRecommendationCount = 2 * kSplitSize;
inline constexpr int kPairsPerEpoch = kSplitSize * kSplitSize;
inline constexpr int kModelFormatVersion = 1;

// ---------------------------------------------------------------- splitting

struct SplitDatasets {
    std::vector<std::string> set_a;
    std::vector<std::string> set_b;
    std::uint64_t seed = 0;

    friend bool operator==(const SplitDatasets&, const SplitDatasets&) = default;
};

/// Seeded Fisher-Yates shuffle of exactly 12 distinct ids; the first six form
/// set A and the rest set B. Throws Error{WrongCardinality} for any other
/// count and Error{InvalidArgument} for duplicate ids.
SplitDatasets split_datasets(const std::vector<std::string>& ids, std::uint64_t seed);

// ---------------------------------------------------------------- schedule

struct TrainingSchedule {
    int epochs = 0;
    std::vector<std::pair<int, int>> pairs; // epochs * 36 entries, (a_index, b_index)

    std::size_t total_iterations() const noexcept { return pairs.size(); }
};

/// Every epoch visits the 6x6 cross product row-major: (0,0), (0,1) ... (5,5).
TrainingSchedule build_schedule(int epochs);

// ---------------------------------------------------------------- model

struct GanConfig {
    int image_side = 16;
    int channels = 1; // 1 = grayscale, 3 = RGB
    int latent_dim = 64;
    std::vector<int> g_hidden{128};
    std::vector<int> d_hidden{128};
    nn::AdamConfig adam{};
    int epochs = 2000;
    std::uint64_t seed = 0;

    int image_size() const noexcept { return image_side * image_side * channels; }

    /// Throws Error{InvalidArgument} on non-positive dims, epochs < 1,
    /// learning rate <= 0 or betas outside [0, 1).
    void validate() const;

    friend bool operator==(const GanConfig&, const GanConfig&) = default;
};

struct GanTelemetry {
    int epochs_completed = 0;
    std::int64_t iterations = 0;

    friend bool operator==(const GanTelemetry&, const GanTelemetry&) = default;
};

struct GanModel {
    GanConfig config;
    nn::Mlp generator;     // latent -> hidden... -> image, tanh output
    nn::Mlp discriminator; // image -> hidden... -> 1, sigmoid output
    nn::AdamState generator_adam;
    nn::AdamState discriminator_adam;
    GanTelemetry telemetry;

    friend bool operator==(const GanModel&, const GanModel&) = default;
};

/// Fresh networks and zeroed Adam state, initialized from config.seed.
GanModel make_gan(const GanConfig& config);

void save_model(const GanModel& model, const std::filesystem::path& path);

/// Throws Error{IoError} if unreadable, Error{VersionMismatch} for another
/// format version and Error{CorruptModel} for anything malformed.
GanModel load_model(const std::filesystem::path& path);

// ---------------------------------------------------------------- training

struct LossRecord {
    int epoch = 0;
    int iteration = 0; // position within the epoch, 0..35
    double d_loss = 0;
    double g_loss = 0;

    friend bool operator==(const LossRecord&, const LossRecord&) = default;
};

/// Preprocessed training images, each image_side^2*channels values in [-1, 1].
struct TrainingData {
    std::vector<std::vector<double>> set_a;
    std::vector<std::vector<double>> set_b;
};

/// Grayscale (or RGB), center-crop to square, area resize, map [0,255] to [-1,1].
std::vector<double> prepare_image(const ImageBuffer& img, const GanConfig& config);

/// Loads and prepares the split's images; `sources` maps each id to its file.
TrainingData load_training_data(const SplitDatasets& split, const std::map<std::string, std::string>& sources,
                                const GanConfig& config);

struct TrainingRun {
    GanModel model;
    std::vector<LossRecord> losses;
};

using LossCallback = std::function<void(const LossRecord&)>;

/// Runs build_schedule(config.epochs). Per pair (i, j): real batch {A_i, B_j},
/// two fresh latent vectors; one discriminator step on real=1 / fake=0, then
/// one generator step with the fakes labelled 1. Deterministic per seed.
/// Throws Error{NonFiniteLoss} as soon as a loss is NaN or infinite.
TrainingRun train_gan(const TrainingData& data, const GanConfig& config, const LossCallback& on_loss = {});

/// Writes losses as CSV with header epoch,iteration,d_loss,g_loss. Values use
/// 17 significant digits so identical runs produce identical files.
void write_loss_log(const std::vector<LossRecord>& losses, const std::filesystem::path& path);

// ---------------------------------------------------------------- sampling

/// Standard-normal latent vectors from a seeded stream.
std::vector<std::vector<double>> sample_latents(int count, int latent_dim, std::uint64_t seed, std::uint64_t stream);

/// Maps a generator output in [-1, 1] to an 8-bit image.
ImageBuffer to_image(std::span<const double> values, const GanConfig& config);

/// Writes sample_01.png ... into out_dir and returns the paths.
std::vector<std::filesystem::path> generate_samples(const GanModel& model, int n, std::uint64_t seed,
                                                    const std::filesystem::path& out_dir);

} // namespace poserec
