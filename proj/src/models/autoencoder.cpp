#include "ridgebench/models/autoencoder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include <json.hpp>

#include "ridgebench/tensor/checkpoint.hpp"
#include "ridgebench/tensor/optim.hpp"

namespace rb {

std::string_view to_string(EncoderVariant v) {
  switch (v) {
    case EncoderVariant::vgg: return "vgg";
    case EncoderVariant::resnet: return "resnet";
    case EncoderVariant::ddc_resnet: return "ddc_resnet";
  }
  return "unknown";
}

std::optional<EncoderVariant> parse_variant(std::string_view name) {
  for (auto v : {EncoderVariant::vgg, EncoderVariant::resnet, EncoderVariant::ddc_resnet}) {
    if (to_string(v) == name) return v;
  }
  return std::nullopt;
}

ExtractorId extractor_for(EncoderVariant v) {
  switch (v) {
    case EncoderVariant::vgg: return ExtractorId::vgg;
    case EncoderVariant::resnet: return ExtractorId::resnet;
    case EncoderVariant::ddc_resnet: return ExtractorId::ddc_resnet;
  }
  return ExtractorId::ddc_resnet;
}

// ---------------------------------------------------------------------------

EncoderArch EncoderArch::make(EncoderVariant variant, std::size_t input_size,
                              std::size_t base_width) {
  EncoderArch a;
  a.variant = variant;
  a.input_size = input_size;
  a.base_width = base_width;
  a.has_stem = variant != EncoderVariant::vgg;
  const std::size_t w = base_width;
  const std::size_t widths[8] = {w, w, 2 * w, 2 * w, 4 * w, 4 * w, 8 * w, 8 * w};
  // Four stride-2 stages: the stem plus blocks 2/4/6 for the residual
  // layouts, blocks 0/2/4/6 for VGG.
  const std::size_t residual_strides[8] = {1, 1, 2, 1, 2, 1, 2, 1};
  const std::size_t plain_strides[8] = {2, 1, 2, 1, 2, 1, 2, 1};
  std::size_t in = a.has_stem ? w : 1;
  for (std::size_t i = 0; i < 8; ++i) {
    BlockSpec b;
    b.in_channels = in;
    b.out_channels = widths[i];
    b.residual = variant != EncoderVariant::vgg;
    b.stride = b.residual ? residual_strides[i] : plain_strides[i];
    b.dilation_rate = variant == EncoderVariant::ddc_resnet ? kDilationCycle[i % 3] : 1;
    a.blocks.push_back(b);
    in = widths[i];
  }
  return a;
}

std::size_t EncoderArch::total_stride() const {
  std::size_t s = has_stem ? 2 : 1;
  for (const auto& b : blocks) s *= b.stride;
  return s;
}

void EncoderArch::validate() const {
  auto fail = [](const std::string& what) { throw ArchitectureError("architecture: " + what); };
  if (blocks.size() != 8) fail("expected 8 blocks, got " + std::to_string(blocks.size()));
  if (latent_dim != kLatentDim) {
    fail("latent dimension must be " + std::to_string(kLatentDim) + ", got " +
         std::to_string(latent_dim));
  }
  if (base_width == 0) fail("base width must be positive");
  const bool is_vgg = variant == EncoderVariant::vgg;
  if (has_stem == is_vgg) fail(is_vgg ? "vgg has no stem" : "residual layouts need a stem");
  std::size_t in = has_stem ? base_width : 1;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& b = blocks[i];
    const auto where = "block " + std::to_string(i) + ": ";
    if (b.in_channels != in) {
      fail(where + "input channels " + std::to_string(b.in_channels) + " do not chain from " +
           std::to_string(in));
    }
    if (b.out_channels == 0) fail(where + "zero output channels");
    if (b.stride != 1 && b.stride != 2) fail(where + "stride must be 1 or 2");
    if (b.residual == is_vgg) fail(where + (is_vgg ? "vgg blocks are plain" : "blocks must be residual"));
    if (variant == EncoderVariant::ddc_resnet) {
      if (b.dilation_rate != kDilationCycle[i % 3]) {
        fail(where + "dilation rate " + std::to_string(b.dilation_rate) +
             " breaks the cyclic (1,2,5) schedule");
      }
    } else if (b.dilation_rate != 1) {
      fail(where + "only ddc_resnet uses dilation");
    }
    in = b.out_channels;
  }
  const std::size_t stride = total_stride();
  if (input_size == 0 || input_size % stride != 0) {
    fail("input size " + std::to_string(input_size) + " is not divisible by the total stride " +
         std::to_string(stride));
  }
  if ((stride & (stride - 1)) != 0) fail("total stride must be a power of two");
}

std::size_t receptive_field(const EncoderArch& arch) {
  std::size_t field = 1, jump = 1;
  auto add_conv = [&](std::size_t rate, std::size_t stride) {
    field += 2 * rate * jump;  // 3×3 kernel: extent − 1 = 2·rate
    jump *= stride;
  };
  if (arch.has_stem) add_conv(1, 2);
  for (const auto& b : arch.blocks) {
    add_conv(b.dilation_rate, b.stride);
    add_conv(b.dilation_rate, 1);
  }
  return field;
}

std::vector<long> composite_tap_offsets(std::span<const std::size_t> rates) {
  std::set<long> offsets{0};
  for (auto rate : rates) {
    const auto d = static_cast<long>(rate);
    std::set<long> next;
    for (long o : offsets) {
      next.insert(o - d);
      next.insert(o);
      next.insert(o + d);
    }
    offsets = std::move(next);
  }
  return {offsets.begin(), offsets.end()};
}

bool has_gridding_holes(std::span<const std::size_t> rates) {
  const auto offsets = composite_tap_offsets(rates);
  return static_cast<long>(offsets.size()) != offsets.back() - offsets.front() + 1;
}

std::vector<bool> residue_coverage(std::span<const std::size_t> rates, std::size_t modulus) {
  std::vector<bool> hit(modulus, false);
  const auto m = static_cast<long>(modulus);
  for (auto rate : rates) {
    for (long tap : {-static_cast<long>(rate), 0L, static_cast<long>(rate)}) {
      hit[static_cast<std::size_t>(((tap % m) + m) % m)] = true;
    }
  }
  return hit;
}

// ---------------------------------------------------------------------------

namespace {

ConvSpec conv3(std::size_t in, std::size_t out, std::size_t stride, std::size_t rate) {
  return ConvSpec{in, out, 3, stride, rate, ConvSpec::same_padding(3, rate)};
}

}  // namespace

ResidualBlock ResidualBlock::make(const BlockSpec& spec, Rng& rng) {
  if (spec.dilation_rate != 1 && spec.dilation_rate != 2 && spec.dilation_rate != 5) {
    throw ArchitectureError("dilated residual block: rate " + std::to_string(spec.dilation_rate) +
                            " is outside {1, 2, 5} (gridding guard)");
  }
  ResidualBlock b{
      Conv2d::make(conv3(spec.in_channels, spec.out_channels, spec.stride, spec.dilation_rate), rng, false),
      BatchNorm2d::make(spec.out_channels),
      Conv2d::make(conv3(spec.out_channels, spec.out_channels, 1, spec.dilation_rate), rng, false),
      BatchNorm2d::make(spec.out_channels),
      std::nullopt};
  if (spec.stride != 1 || spec.in_channels != spec.out_channels) {
    b.shortcut = Conv2d::make(ConvSpec{spec.in_channels, spec.out_channels, 1, spec.stride, 1, 0}, rng);
  }
  return b;
}

Tensor ResidualBlock::operator()(const Tensor& x, NormMode mode) {
  const Tensor inner = leaky_relu(bn1(conv1(x), mode));
  const Tensor outer = leaky_relu(bn2(conv2(inner), mode));
  return add(outer, shortcut ? (*shortcut)(x) : x);
}

void ResidualBlock::collect(const std::string& prefix, ParameterList& out) const {
  conv1.collect(prefix + ".conv1", out);
  bn1.collect(prefix + ".bn1", out);
  conv2.collect(prefix + ".conv2", out);
  bn2.collect(prefix + ".bn2", out);
  if (shortcut) shortcut->collect(prefix + ".shortcut", out);
}

Tensor dilated_residual_block(const Tensor& x, ResidualBlock& block, NormMode mode) {
  return block(x, mode);
}

PlainBlock PlainBlock::make(const BlockSpec& spec, Rng& rng) {
  return PlainBlock{
      Conv2d::make(conv3(spec.in_channels, spec.out_channels, spec.stride, spec.dilation_rate), rng, false),
      BatchNorm2d::make(spec.out_channels),
      Conv2d::make(conv3(spec.out_channels, spec.out_channels, 1, spec.dilation_rate), rng, false),
      BatchNorm2d::make(spec.out_channels)};
}

Tensor PlainBlock::operator()(const Tensor& x, NormMode mode) {
  return leaky_relu(bn2(conv2(leaky_relu(bn1(conv1(x), mode))), mode));
}

void PlainBlock::collect(const std::string& prefix, ParameterList& out) const {
  conv1.collect(prefix + ".conv1", out);
  bn1.collect(prefix + ".bn1", out);
  conv2.collect(prefix + ".conv2", out);
  bn2.collect(prefix + ".bn2", out);
}

// ---------------------------------------------------------------------------

Encoder Encoder::build(const EncoderArch& arch, Rng& rng) {
  arch.validate();
  Encoder e;
  e.arch_ = arch;
  if (arch.has_stem) {
    e.stem_conv_ = Conv2d::make(conv3(1, arch.base_width, 2, 1), rng, false);
    e.stem_bn_ = BatchNorm2d::make(arch.base_width);
  }
  for (const auto& b : arch.blocks) {
    if (b.residual) {
      e.residual_.push_back(ResidualBlock::make(b, rng));
    } else {
      e.plain_.push_back(PlainBlock::make(b, rng));
    }
  }
  e.fc_ = Linear::make(arch.bottleneck_channels(), arch.latent_dim, rng);
  return e;
}

Tensor Encoder::operator()(const Tensor& x, NormMode mode, std::vector<Tensor>* block_outputs) {
  if (x.rank() != 4 || x.dim(1) != 1 || x.dim(2) != arch_.input_size ||
      x.dim(3) != arch_.input_size) {
    throw DimensionError("encoder expects [N,1," + std::to_string(arch_.input_size) + "," +
                         std::to_string(arch_.input_size) + "], got " + shape_string(x.shape()));
  }
  Tensor h = x;
  if (stem_conv_) h = leaky_relu((*stem_bn_)((*stem_conv_)(h), mode));
  for (auto& block : residual_) {
    h = block(h, mode);
    if (block_outputs) block_outputs->push_back(h);
  }
  for (auto& block : plain_) {
    h = block(h, mode);
    if (block_outputs) block_outputs->push_back(h);
  }
  return head(h);
}

Tensor Encoder::head(const Tensor& final_block) { return fc_(global_avg_pool(final_block)); }

void Encoder::collect(const std::string& prefix, ParameterList& out) const {
  if (stem_conv_) {
    stem_conv_->collect(prefix + ".stem.conv", out);
    stem_bn_->collect(prefix + ".stem.bn", out);
  }
  for (std::size_t i = 0; i < residual_.size(); ++i) {
    residual_[i].collect(prefix + ".block" + std::to_string(i), out);
  }
  for (std::size_t i = 0; i < plain_.size(); ++i) {
    plain_[i].collect(prefix + ".block" + std::to_string(i), out);
  }
  fc_.collect(prefix + ".fc", out);
}

// ---------------------------------------------------------------------------

Decoder Decoder::build(const EncoderArch& arch, Rng& rng) {
  arch.validate();
  Decoder d;
  d.arch_ = arch;
  const std::size_t s = arch.bottleneck_size();
  std::size_t channels = arch.bottleneck_channels();
  d.fc_ = Linear::make(arch.latent_dim, channels * s * s, rng);
  for (std::size_t up = arch.total_stride(); up > 1; up /= 2) {
    const std::size_t next = std::max(arch.base_width, channels / 2);
    d.convs_.push_back(Conv2d::make(conv3(channels, next, 1, 1), rng, false));
    d.norms_.push_back(BatchNorm2d::make(next));
    channels = next;
  }
  const std::size_t out_in = channels + (arch.decoder_input_skip ? 1 : 0);
  d.out_conv_ = Conv2d::make(conv3(out_in, 1, 1, 1), rng);
  return d;
}

Tensor Decoder::operator()(const Tensor& z, const Tensor& input, NormMode mode) {
  const std::size_t s = arch_.bottleneck_size();
  Tensor h = leaky_relu(fc_(z));
  h = reshape(h, {z.dim(0), arch_.bottleneck_channels(), s, s});
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    h = leaky_relu(norms_[i](convs_[i](upsample_nearest(h, 2)), mode));
  }
  if (arch_.decoder_input_skip) h = concat_channels(h, input);
  return sigmoid(out_conv_(h));
}

void Decoder::collect(const std::string& prefix, ParameterList& out) const {
  fc_.collect(prefix + ".fc", out);
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    convs_[i].collect(prefix + ".stage" + std::to_string(i) + ".conv", out);
    norms_[i].collect(prefix + ".stage" + std::to_string(i) + ".bn", out);
  }
  out_conv_.collect(prefix + ".out", out);
}

// ---------------------------------------------------------------------------

void TrainConfig::validate() const {
  if (batch_size < 2) {
    throw std::invalid_argument("train config: batch_size must be at least 2 for batch norm");
  }
  if (!(learning_rate > 0.0)) throw std::invalid_argument("train config: learning_rate must be positive");
}

Autoencoder Autoencoder::build(const EncoderArch& arch, std::uint64_t seed) {
  arch.validate();
  Rng rng(seed);
  Autoencoder m;
  m.arch_ = arch;
  m.seed_ = seed;
  m.encoder_ = Encoder::build(arch, rng);
  m.decoder_ = Decoder::build(arch, rng);
  return m;
}

Tensor Autoencoder::reconstruct(const Tensor& x, NormMode mode) {
  return decoder_(encoder_(x, mode), x, mode);
}

ParameterList Autoencoder::parameters() const {
  ParameterList list;
  encoder_.collect("encoder", list);
  decoder_.collect("decoder", list);
  return list;
}

Tensor images_to_tensor(std::span<const GrayImage* const> images) {
  if (images.empty()) throw DimensionError("images_to_tensor: empty batch");
  const std::size_t s = images.front()->width();
  std::vector<double> values;
  values.reserve(images.size() * s * s);
  for (const auto* img : images) {
    if (img->width() != s || img->height() != s) {
      throw DimensionError("images_to_tensor: expected " + std::to_string(s) + "x" +
                           std::to_string(s) + " images, got " + std::to_string(img->width()) +
                           "x" + std::to_string(img->height()));
    }
    values.insert(values.end(), img->pixels().begin(), img->pixels().end());
  }
  return Tensor::from({images.size(), 1, s, s}, std::move(values));
}

Tensor images_to_tensor(std::span<const GrayImage> images) {
  std::vector<const GrayImage*> ptrs;
  for (const auto& img : images) ptrs.push_back(&img);
  return images_to_tensor(std::span<const GrayImage* const>(ptrs));
}

TrainResult train_autoencoder(Autoencoder& model, std::span<const GrayImage> images,
                              const TrainConfig& cfg) {
  cfg.validate();
  TrainResult result;
  if (cfg.iterations == 0) return result;
  if (images.size() < cfg.batch_size) {
    throw std::invalid_argument("train_autoencoder: " + std::to_string(images.size()) +
                                " images is fewer than batch size " +
                                std::to_string(cfg.batch_size));
  }
  const auto params = model.parameters();
  Adam optimizer(params.trainable(), AdamOptions{cfg.learning_rate});

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(images.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();

  std::vector<const GrayImage*> batch(cfg.batch_size);
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    for (auto& slot : batch) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      slot = &images[order[cursor++]];
    }
    const Tensor x = images_to_tensor(std::span<const GrayImage* const>(batch));
    optimizer.zero_grad();
    const Tensor loss = mse_loss(model.reconstruct(x, NormMode::train), x);
    const double value = loss.item();
    if (!std::isfinite(value)) {
      throw TrainingError("autoencoder training diverged at iteration " + std::to_string(it) +
                          ": loss " + std::to_string(value) + " (last finite loss " +
                          (result.loss_history.empty()
                               ? std::string("n/a")
                               : std::to_string(result.loss_history.back())) +
                          ", learning rate " + std::to_string(cfg.learning_rate) + ")");
    }
    backward(loss);
    optimizer.step();
    result.loss_history.push_back(value);
  }
  model.meta.iterations += cfg.iterations;
  model.meta.final_loss = result.loss_history.back();
  return result;
}

std::vector<FeatureVector> encode(Autoencoder& model, std::span<const GrayImage> images,
                                  std::size_t chunk) {
  NoGradGuard no_grad;
  std::vector<FeatureVector> out;
  out.reserve(images.size());
  const ExtractorId id = extractor_for(model.arch().variant);
  for (std::size_t start = 0; start < images.size(); start += chunk) {
    const std::size_t n = std::min(chunk, images.size() - start);
    const Tensor z = model.encoder()(images_to_tensor(images.subspan(start, n)), NormMode::eval);
    const std::size_t d = z.dim(1);
    for (std::size_t i = 0; i < n; ++i) {
      FeatureVector fv;
      fv.extractor = id;
      fv.values.assign(z.data().begin() + static_cast<std::ptrdiff_t>(i * d),
                       z.data().begin() + static_cast<std::ptrdiff_t>((i + 1) * d));
      out.push_back(std::move(fv));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string arch_to_json(const EncoderArch& arch, std::uint64_t seed, const TrainingMeta& meta) {
  nlohmann::json j;
  j["variant"] = std::string(to_string(arch.variant));
  j["input_size"] = arch.input_size;
  j["base_width"] = arch.base_width;
  j["latent_dim"] = arch.latent_dim;
  j["has_stem"] = arch.has_stem;
  j["decoder_input_skip"] = arch.decoder_input_skip;
  j["seed"] = seed;
  j["iterations"] = meta.iterations;
  j["final_loss"] = meta.final_loss;
  auto& blocks = j["blocks"] = nlohmann::json::array();
  for (const auto& b : arch.blocks) {
    blocks.push_back({{"in_channels", b.in_channels},
                      {"out_channels", b.out_channels},
                      {"stride", b.stride},
                      {"dilation_rate", b.dilation_rate},
                      {"residual", b.residual}});
  }
  return j.dump(2);
}

void save_model(Autoencoder& model, const std::filesystem::path& stem) {
  if (stem.has_parent_path()) std::filesystem::create_directories(stem.parent_path());
  write_checkpoint(std::filesystem::path(stem.string() + ".ckpt"), model.parameters());
  std::ofstream out(stem.string() + ".json");
  if (!out) throw CheckpointError("cannot write " + stem.string() + ".json");
  out << arch_to_json(model.arch(), model.seed(), model.meta) << '\n';
}

Autoencoder load_model(const std::filesystem::path& stem) {
  std::ifstream in(stem.string() + ".json");
  if (!in) throw CheckpointError("cannot open " + stem.string() + ".json");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(stem.string() + ".json: " + e.what());
  }
  EncoderArch arch;
  try {
    const auto variant = parse_variant(j.at("variant").get<std::string>());
    if (!variant) throw CheckpointError(stem.string() + ".json: unknown variant");
    arch.variant = *variant;
    arch.input_size = j.at("input_size").get<std::size_t>();
    arch.base_width = j.at("base_width").get<std::size_t>();
    arch.latent_dim = j.at("latent_dim").get<std::size_t>();
    arch.has_stem = j.at("has_stem").get<bool>();
    arch.decoder_input_skip = j.value("decoder_input_skip", false);
    for (const auto& b : j.at("blocks")) {
      arch.blocks.push_back({b.at("in_channels").get<std::size_t>(),
                             b.at("out_channels").get<std::size_t>(), b.at("stride").get<std::size_t>(),
                             b.at("dilation_rate").get<std::size_t>(), b.at("residual").get<bool>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(stem.string() + ".json: " + e.what());
  }
  Autoencoder model = Autoencoder::build(arch, j.at("seed").get<std::uint64_t>());
  model.meta.iterations = j.value("iterations", std::size_t{0});
  model.meta.final_loss = j.value("final_loss", 0.0);
  auto params = model.parameters();
  load_into(read_checkpoint(std::filesystem::path(stem.string() + ".ckpt")), params);
  return model;
}

}  // namespace rb
