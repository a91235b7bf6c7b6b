#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ridgebench/data/gray_image.hpp"
#include "ridgebench/features/feature_vector.hpp"
#include "ridgebench/tensor/nn.hpp"

namespace rb {

enum class EncoderVariant { vgg, resnet, ddc_resnet };

std::string_view to_string(EncoderVariant v);
std::optional<EncoderVariant> parse_variant(std::string_view name);
ExtractorId extractor_for(EncoderVariant v);

/// Raised when an architecture descriptor breaks a structural constraint.
class ArchitectureError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Numerical failure while training (non-finite loss).
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kLatentDim = 512;
/// Dilation schedule cycled across consecutive residual blocks.
inline constexpr std::size_t kDilationCycle[3] = {1, 2, 5};

struct BlockSpec {
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t stride = 1;         // applied by the first conv of the block
  std::size_t dilation_rate = 1;  // both 3×3 convs
  bool residual = false;
};

struct EncoderArch {
  EncoderVariant variant = EncoderVariant::ddc_resnet;
  std::size_t input_size = 64;
  std::size_t base_width = 8;
  std::size_t latent_dim = kLatentDim;
  /// Residual variants open with a strided 3×3 conv; VGG does not.
  bool has_stem = true;
  std::vector<BlockSpec> blocks;
  /// Concatenate the raw input to the decoder's last feature map.
  bool decoder_input_skip = false;

  /// Canonical 8-block layout for a variant.
  static EncoderArch make(EncoderVariant variant, std::size_t input_size = 64,
                          std::size_t base_width = 8);

  std::size_t total_stride() const;
  std::size_t bottleneck_size() const { return input_size / total_stride(); }
  std::size_t bottleneck_channels() const { return blocks.back().out_channels; }

  /// Throws ArchitectureError naming the violated constraint.
  void validate() const;
};

/// Analytic receptive field (pixels, one axis) at the last conv of the encoder.
std::size_t receptive_field(const EncoderArch& arch);

/// 1-D offsets reached by stacking one 3×3 conv per rate (Minkowski sum of
/// {−d, 0, d}).
std::vector<long> composite_tap_offsets(std::span<const std::size_t> rates);
/// True when some offset strictly inside the composite span is unreachable.
bool has_gridding_holes(std::span<const std::size_t> rates);
/// Residues mod `modulus` hit by the union of single-conv taps over `rates`.
std::vector<bool> residue_coverage(std::span<const std::size_t> rates, std::size_t modulus);

// ---------------------------------------------------------------------------

struct ResidualBlock {
  Conv2d conv1;
  BatchNorm2d bn1;
  Conv2d conv2;
  BatchNorm2d bn2;
  std::optional<Conv2d> shortcut;  // 1×1 strided projection when shapes change

  /// Throws ArchitectureError unless rate ∈ {1, 2, 5}.
  static ResidualBlock make(const BlockSpec& spec, Rng& rng);
  Tensor operator()(const Tensor& x, NormMode mode);
  void collect(const std::string& prefix, ParameterList& out) const;
};

/// leaky(bn(conv(leaky(bn(conv(x)))))) + shortcut(x).
Tensor dilated_residual_block(const Tensor& x, ResidualBlock& block, NormMode mode);

struct PlainBlock {
  Conv2d conv1;
  BatchNorm2d bn1;
  Conv2d conv2;
  BatchNorm2d bn2;

  static PlainBlock make(const BlockSpec& spec, Rng& rng);
  Tensor operator()(const Tensor& x, NormMode mode);
  void collect(const std::string& prefix, ParameterList& out) const;
};

class Encoder {
 public:
  static Encoder build(const EncoderArch& arch, Rng& rng);

  /// [N,1,S,S] → [N,latent]. When `block_outputs` is given, the activation of
  /// every block is appended to it (for attribution).
  Tensor operator()(const Tensor& x, NormMode mode, std::vector<Tensor>* block_outputs = nullptr);
  void collect(const std::string& prefix, ParameterList& out) const;
  const EncoderArch& arch() const { return arch_; }

  /// Runs only the latent head on a final block activation.
  Tensor head(const Tensor& final_block);

 private:
  EncoderArch arch_;
  std::optional<Conv2d> stem_conv_;
  std::optional<BatchNorm2d> stem_bn_;
  std::vector<ResidualBlock> residual_;
  std::vector<PlainBlock> plain_;
  Linear fc_;
};

class Decoder {
 public:
  static Decoder build(const EncoderArch& arch, Rng& rng);

  /// [N,latent] → [N,1,S,S] in (0,1). `input` is only read with input skip on.
  Tensor operator()(const Tensor& z, const Tensor& input, NormMode mode);
  void collect(const std::string& prefix, ParameterList& out) const;

 private:
  EncoderArch arch_;
  Linear fc_;
  std::vector<Conv2d> convs_;
  std::vector<BatchNorm2d> norms_;
  Conv2d out_conv_;
};

struct TrainingMeta {
  std::size_t iterations = 0;
  double final_loss = 0.0;
};

struct TrainConfig {
  std::size_t batch_size = 10;
  std::size_t iterations = 10000;
  double learning_rate = 3e-4;
  std::uint64_t seed = 0;

  static TrainConfig desk() { return {10, 500, 3e-4, 0}; }
  void validate() const;
};

class Autoencoder {
 public:
  /// Deterministic initialization: equal (arch, seed) give identical weights.
  static Autoencoder build(const EncoderArch& arch, std::uint64_t seed);

  Tensor reconstruct(const Tensor& x, NormMode mode);
  Encoder& encoder() { return encoder_; }
  const EncoderArch& arch() const { return arch_; }
  std::uint64_t seed() const { return seed_; }
  ParameterList parameters() const;

  TrainingMeta meta;

 private:
  EncoderArch arch_;
  std::uint64_t seed_ = 0;
  Encoder encoder_;
  Decoder decoder_;
};

/// Stacks images into [N,1,S,S]; every image must be S×S.
Tensor images_to_tensor(std::span<const GrayImage> images);
Tensor images_to_tensor(std::span<const GrayImage* const> images);

struct TrainResult {
  std::vector<double> loss_history;
};

/// Minimizes mean-squared reconstruction error with Adam over shuffled
/// minibatches. Throws TrainingError on a non-finite loss.
TrainResult train_autoencoder(Autoencoder& model, std::span<const GrayImage> images,
                              const TrainConfig& cfg);

/// Eval-mode embeddings, one row per image, processed in chunks.
std::vector<FeatureVector> encode(Autoencoder& model, std::span<const GrayImage> images,
                                  std::size_t chunk = 32);

/// Writes `<stem>.ckpt` and `<stem>.json` (architecture, seed, training meta).
void save_model(Autoencoder& model, const std::filesystem::path& stem);
Autoencoder load_model(const std::filesystem::path& stem);

std::string arch_to_json(const EncoderArch& arch, std::uint64_t seed, const TrainingMeta& meta);

}  // namespace rb
