#include <algorithm>
#include <array>
#include <cstring>
#include <fstream>
#include <numeric>

#include "ganduf/array_io.hpp"
#include "ganduf/hgan.hpp"

namespace ganduf::hgan {

using ad::Tensor;
using nlohmann::json;

namespace {

constexpr std::array<char, 8> kMagic{'G', 'A', 'N', 'D', 'U', 'F', 'C', '\0'};

json describe(const nn::ParameterSet& params) {
  json out = json::array();
  for (const auto& t : params.tensors()) out.push_back({{"name", t.name()}, {"shape", t.shape()}});
  return out;
}

double tail_mean(const std::vector<double>& v, std::size_t n) {
  if (v.empty()) return 0.0;
  n = std::min(n, v.size());
  return std::accumulate(v.end() - static_cast<std::ptrdiff_t>(n), v.end(), 0.0) / static_cast<double>(n);
}

void write_params(std::ostream& out, const nn::ParameterSet& params) {
  for (const auto& t : params.tensors()) {
    io::NdArray a;
    for (auto e : t.shape()) a.shape.push_back(e);
    a.data.assign(t.data().begin(), t.data().end());
    io::write_array(out, a);
  }
}

void read_params(std::istream& in, nn::ParameterSet& params, const json& expected, const std::string& source) {
  if (expected.size() != params.size()) {
    throw FormatError(source + ": checkpoint has " + std::to_string(expected.size()) + " tensors, architecture needs " +
                      std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& t = params.tensors()[i];
    const auto a = io::read_array(in, source);
    std::vector<std::uint64_t> want(t.shape().begin(), t.shape().end());
    if (a.shape != want || expected[i].at("name") != t.name()) {
      throw FormatError(source + ": tensor " + std::to_string(i) + " (" + t.name() + ") does not match the architecture");
    }
    std::copy(a.data.begin(), a.data.end(), t.mutable_data().begin());
  }
}

std::vector<double> read_vector(std::istream& in, const std::string& source) { return io::read_array(in, source).data; }

}  // namespace

std::vector<Design> generate(const ModelCheckpoint& ckpt, const std::vector<LatentSample>& samples) {
  if (samples.empty()) return {};
  ad::NoGradGuard no_grad;
  const Tensor out = ckpt.model.generate(latent_matrix(samples, ckpt.prior()));
  const std::size_t dsz = design_size(ckpt.kind());
  std::vector<Design> designs(samples.size());
  for (std::size_t b = 0; b < samples.size(); ++b) {
    designs[b].kind = ckpt.kind();
    designs[b].values.assign(out.data().begin() + static_cast<std::ptrdiff_t>(b * dsz),
                             out.data().begin() + static_cast<std::ptrdiff_t>((b + 1) * dsz));
  }
  return designs;
}

Design generate(const ModelCheckpoint& ckpt, const LatentSample& sample) { return generate(ckpt, std::vector<LatentSample>{sample}).front(); }

Design to_physical(const ModelCheckpoint& ckpt, const Design& normalized) {
  normalized.check();
  return ckpt.normalization.denormalize(normalized);
}

Discrimination discriminate(const ModelCheckpoint& ckpt, const Design& x_nom, const Design& x_fab) {
  if (x_nom.kind != ckpt.kind() || x_fab.kind != ckpt.kind()) throw DimensionError("design kind does not match model");
  x_nom.check();
  x_fab.check();
  ad::NoGradGuard no_grad;
  const std::size_t dsz = design_size(ckpt.kind());
  const auto out = ckpt.model.discriminate(Tensor::from({1, dsz}, x_nom.values), Tensor::from({1, dsz}, x_fab.values));
  Discrimination d;
  d.d = ad::sigmoid(out.logit).item();
  const auto& p = ckpt.prior();
  d.parent_mean.assign(out.q_mean.data().begin(), out.q_mean.data().begin() + static_cast<std::ptrdiff_t>(p.parent_dim));
  d.child_mean.assign(out.q_mean.data().begin() + static_cast<std::ptrdiff_t>(p.parent_dim), out.q_mean.data().end());
  d.parent_log_var.assign(p.parent_dim, 0.0);
  d.child_log_var.assign(p.child_dim, 0.0);
  return d;
}

void save_checkpoint(const ModelCheckpoint& ckpt, const std::filesystem::path& path) {
  json header;
  header["format_version"] = kCheckpointFormatVersion;
  header["kind"] = to_string(ckpt.kind());
  header["prior"] = ckpt.prior().to_json();
  header["train"] = ckpt.train.to_json();
  header["step"] = ckpt.step;
  header["normalization"] = ckpt.normalization.to_json();
  header["generator"] = describe(ckpt.model.generator_params());
  header["discriminator"] = describe(ckpt.model.discriminator_params());
  header["history_length"] = ckpt.history.size();
  header["loss_summary"] = {{"loss_d_last100", tail_mean(ckpt.history.loss_d, 100)},
                            {"loss_g_last100", tail_mean(ckpt.history.loss_g, 100)},
                            {"info_last100", tail_mean(ckpt.history.info, 100)}};
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(kMagic.data(), kMagic.size());
  std::array<unsigned char, 8> len{};
  for (std::size_t i = 0; i < 8; ++i) len[i] = static_cast<unsigned char>((text.size() >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(len.data()), len.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  write_params(out, ckpt.model.generator_params());
  write_params(out, ckpt.model.discriminator_params());
  for (const auto* v : {&ckpt.history.loss_d, &ckpt.history.loss_g, &ckpt.history.info}) {
    io::write_array(out, {{v->size()}, *v});
  }
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

ModelCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  const std::string source = path.string();
  std::array<char, 16> fixed{};
  in.read(fixed.data(), fixed.size());
  if (in.gcount() != static_cast<std::streamsize>(fixed.size())) throw TruncatedError(source + ": truncated header");
  if (std::memcmp(fixed.data(), kMagic.data(), kMagic.size()) != 0) {
    throw FormatError(source + ": not a checkpoint file (bad magic bytes)");
  }
  std::uint64_t len = 0;
  for (std::size_t i = 0; i < 8; ++i) len |= static_cast<std::uint64_t>(static_cast<unsigned char>(fixed[8 + i])) << (8 * i);
  if (len > (1u << 30)) throw FormatError(source + ": implausible header length");
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (in.gcount() != static_cast<std::streamsize>(len)) throw TruncatedError(source + ": truncated JSON header");
  json header;
  try {
    header = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(source + ": " + e.what());
  }
  const auto version = header.value("format_version", 0u);
  if (version != kCheckpointFormatVersion) {
    throw VersionError(source + ": checkpoint format version " + std::to_string(version) +
                       " is not supported (reader version " + std::to_string(kCheckpointFormatVersion) + ")");
  }
  ModelCheckpoint ckpt;
  ckpt.model = Model(parse_design_kind(header.at("kind")), PriorConfig::from_json(header.at("prior")), 0);
  ckpt.train = TrainConfig::from_json(header.at("train"));
  ckpt.step = header.at("step");
  ckpt.normalization = Normalization::from_json(header.at("normalization"));
  read_params(in, ckpt.model.generator_params(), header.at("generator"), source);
  read_params(in, ckpt.model.discriminator_params(), header.at("discriminator"), source);
  ckpt.history.loss_d = read_vector(in, source);
  ckpt.history.loss_g = read_vector(in, source);
  ckpt.history.info = read_vector(in, source);
  return ckpt;
}

}  // namespace ganduf::hgan
