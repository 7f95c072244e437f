// SPDX-License-Identifier: Apache-2.0
#include "delius/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "delius/error.hpp"

namespace delius::nn {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'D', 'E', 'L', 'C'};
constexpr std::uint16_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

void put_block(std::string& out, const double* data, std::size_t count) {
  put<std::uint64_t>(out, count);
  out.append(reinterpret_cast<const char*>(data), count * sizeof(double));
}

class Cursor {
 public:
  Cursor(const std::string& bytes, const fs::path& path) : bytes_(bytes), path_(path) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::string take(std::size_t len) {
    need(len);
    std::string s = bytes_.substr(pos_, len);
    pos_ += len;
    return s;
  }

  void block(const std::string& what, double* dst, std::size_t expected) {
    const std::size_t at = pos_;
    const auto count = get<std::uint64_t>();
    if (count != expected)
      fail(ErrorKind::Format, path_.string() + ": block " + what + " holds " +
                                  std::to_string(count) + " values, expected " +
                                  std::to_string(expected) + " (byte offset " +
                                  std::to_string(at) + ")");
    need(count * sizeof(double));
    std::memcpy(dst, bytes_.data() + pos_, count * sizeof(double));
    pos_ += count * sizeof(double);
  }

  std::size_t offset() const { return pos_; }
  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t len) const {
    if (bytes_.size() - pos_ < len)
      fail(ErrorKind::Format, path_.string() + ": truncated at byte offset " + std::to_string(pos_));
  }

  const std::string& bytes_;
  const fs::path& path_;
  std::size_t pos_ = 0;
};

json describe(const Mlp& mlp) {
  json dims = json::array(), acts = json::array();
  for (auto d : mlp.dims()) dims.push_back(d);
  for (const auto& l : mlp.layers) acts.push_back(to_string(l.activation));
  return json{{"dims", dims}, {"activations", acts}};
}

Mlp shell(const json& desc, const std::string& which) {
  const auto dims = desc.at("dims").get<std::vector<std::size_t>>();
  const auto acts = desc.at("activations").get<std::vector<std::string>>();
  if (dims.size() < 2 || acts.size() + 1 != dims.size())
    fail(ErrorKind::Format, which + " description is inconsistent");
  Mlp mlp;
  for (std::size_t l = 0; l < acts.size(); ++l) {
    if (dims[l] == 0 || dims[l + 1] == 0) fail(ErrorKind::Format, which + " has a zero width");
    DenseLayer layer;
    layer.weights.resize(static_cast<Eigen::Index>(dims[l + 1]), static_cast<Eigen::Index>(dims[l]));
    layer.bias.resize(static_cast<Eigen::Index>(dims[l + 1]));
    layer.activation = activation_from_string(acts[l]);
    mlp.layers.push_back(std::move(layer));
  }
  return mlp;
}

void put_mlp(std::string& out, const Mlp& mlp) {
  for (const auto& l : mlp.layers) {
    put_block(out, l.weights.data(), static_cast<std::size_t>(l.weights.size()));
    put_block(out, l.bias.data(), static_cast<std::size_t>(l.bias.size()));
  }
}

void get_mlp(Cursor& c, Mlp& mlp, const std::string& which) {
  for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
    auto& layer = mlp.layers[l];
    c.block(which + ".layer" + std::to_string(l) + ".weights", layer.weights.data(),
            static_cast<std::size_t>(layer.weights.size()));
    c.block(which + ".layer" + std::to_string(l) + ".bias", layer.bias.data(),
            static_cast<std::size_t>(layer.bias.size()));
  }
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const fs::path& path) {
  validate(ckpt.encoder);
  json pre;
  pre["format"] = "DELC";
  pre["encoder"] = describe(ckpt.encoder);
  if (ckpt.decoder) {
    validate(*ckpt.decoder);
    require(ckpt.decoder->input_dim() == ckpt.encoder.output_dim(), ErrorKind::Shape,
            "decoder input does not match encoder output");
    pre["decoder"] = describe(*ckpt.decoder);
  } else {
    pre["decoder"] = nullptr;
  }
  if (ckpt.centroids) {
    require(static_cast<std::size_t>(ckpt.centroids->cols()) == ckpt.encoder.output_dim(),
            ErrorKind::Shape, "centroid width does not match latent size");
    pre["centroids"] = {ckpt.centroids->rows(), ckpt.centroids->cols()};
  } else {
    pre["centroids"] = nullptr;
  }
  pre["seed"] = ckpt.seed;
  pre["phase"] = ckpt.phase;
  pre["epoch"] = ckpt.epoch;
  const std::string preamble = pre.dump();

  std::string out(kMagic, 4);
  put<std::uint16_t>(out, kVersion);
  put<std::uint64_t>(out, preamble.size());
  out += preamble;
  put_mlp(out, ckpt.encoder);
  if (ckpt.decoder) put_mlp(out, *ckpt.decoder);
  if (ckpt.centroids)
    put_block(out, ckpt.centroids->data(), static_cast<std::size_t>(ckpt.centroids->size()));

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  f.flush();
  if (!f) fail(ErrorKind::Io, "write failure on " + path.string());
}

Checkpoint load_checkpoint(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorKind::Io, "cannot open " + path.string() + " for reading");
  const std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  Cursor c(bytes, path);
  if (c.take(4) != std::string(kMagic, 4))
    fail(ErrorKind::Format, path.string() + ": bad magic at byte offset 0");
  if (c.get<std::uint16_t>() != kVersion)
    fail(ErrorKind::Format, path.string() + ": unsupported version at byte offset 4");
  const auto len = c.get<std::uint64_t>();
  if (len > bytes.size())
    fail(ErrorKind::Format, path.string() + ": preamble length exceeds file at byte offset 6");
  json pre;
  try {
    pre = json::parse(c.take(len));
  } catch (const json::exception& e) {
    fail(ErrorKind::Format, path.string() + ": preamble is not valid JSON: " + e.what());
  }

  Checkpoint ckpt;
  try {
    ckpt.encoder = shell(pre.at("encoder"), "encoder");
    if (!pre.at("decoder").is_null()) ckpt.decoder = shell(pre.at("decoder"), "decoder");
    if (!pre.at("centroids").is_null()) {
      const auto shape = pre.at("centroids").get<std::vector<Eigen::Index>>();
      if (shape.size() != 2 || shape[0] < 1 || shape[1] < 1)
        fail(ErrorKind::Format, path.string() + ": bad centroid shape");
      ckpt.centroids = Matrix(shape[0], shape[1]);
    }
    ckpt.seed = pre.at("seed").get<std::uint64_t>();
    ckpt.phase = pre.at("phase").get<std::string>();
    ckpt.epoch = pre.at("epoch").get<std::uint64_t>();
  } catch (const json::exception& e) {
    fail(ErrorKind::Format, path.string() + ": incomplete preamble: " + e.what());
  }
  get_mlp(c, ckpt.encoder, "encoder");
  if (ckpt.decoder) get_mlp(c, *ckpt.decoder, "decoder");
  if (ckpt.centroids)
    c.block("centroids", ckpt.centroids->data(), static_cast<std::size_t>(ckpt.centroids->size()));
  if (!c.at_end())
    fail(ErrorKind::Format, path.string() + ": trailing bytes at byte offset " + std::to_string(c.offset()));
  try {
    validate(ckpt.encoder);
    if (ckpt.decoder) validate(*ckpt.decoder);
  } catch (const Error& e) {
    fail(ErrorKind::Format, path.string() + ": " + e.what());
  }
  return ckpt;
}

}  // namespace delius::nn
