#include "mindface/common/checkpoint.hpp"

#include "mindface/errors.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>

namespace mindface {
namespace {

std::filesystem::path manifest_path(const std::filesystem::path& stem) {
  return std::filesystem::path(stem.string() + ".json");
}

std::filesystem::path blob_path(const std::filesystem::path& stem) {
  return std::filesystem::path(stem.string() + ".bin");
}

void put_f32_le(std::string& out, float value) {
  std::uint32_t bits = std::bit_cast<std::uint32_t>(value);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFFu));
}

float get_f32_le(const std::string& blob, std::size_t offset) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) {
    bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(blob[offset + i])) << (8 * i);
  }
  return std::bit_cast<float>(bits);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& stem, const nn::ConstParamRefs& params,
                     const nlohmann::json& config_echo) {
  if (stem.has_parent_path()) std::filesystem::create_directories(stem.parent_path());
  std::string blob;
  nlohmann::json tensors = nlohmann::json::array();
  for (const nn::Param* p : params) {
    tensors.push_back({{"name", p->name},
                       {"shape", {p->value.rows(), p->value.cols()}},
                       {"offset", blob.size()}});
    for (Eigen::Index i = 0; i < p->value.rows(); ++i)
      for (Eigen::Index j = 0; j < p->value.cols(); ++j)
        put_f32_le(blob, static_cast<float>(p->value(i, j)));
  }
  nlohmann::json manifest = {{"format_version", kCheckpointFormatVersion},
                             {"dtype", "f32"},
                             {"byte_order", "little"},
                             {"blob", blob_path(stem).filename().string()},
                             {"blob_bytes", blob.size()},
                             {"tensors", tensors},
                             {"config", config_echo}};
  std::ofstream bin(blob_path(stem), std::ios::binary);
  if (!bin) throw Error("cannot write " + blob_path(stem).string());
  bin.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  std::ofstream js(manifest_path(stem));
  if (!js) throw Error("cannot write " + manifest_path(stem).string());
  js << manifest.dump(2) << '\n';
}

nlohmann::json read_checkpoint_manifest(const std::filesystem::path& stem) {
  std::ifstream js(manifest_path(stem));
  if (!js) throw NotFound("checkpoint not found: " + manifest_path(stem).string());
  nlohmann::json manifest;
  try {
    js >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad checkpoint manifest: " + std::string(e.what()));
  }
  if (manifest.value("format_version", -1) != kCheckpointFormatVersion) {
    throw FormatError("unsupported checkpoint format version");
  }
  if (manifest.value("dtype", "") != "f32") throw FormatError("unsupported checkpoint dtype");
  return manifest;
}

nlohmann::json load_checkpoint(const std::filesystem::path& stem, const nn::ParamRefs& params) {
  const nlohmann::json manifest = read_checkpoint_manifest(stem);
  std::ifstream bin(blob_path(stem), std::ios::binary);
  if (!bin) throw NotFound("checkpoint blob not found: " + blob_path(stem).string());
  const std::string blob((std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());

  std::map<std::string, nlohmann::json> by_name;
  for (const auto& t : manifest.at("tensors")) by_name[t.at("name").get<std::string>()] = t;
  for (nn::Param* p : params) {
    auto it = by_name.find(p->name);
    if (it == by_name.end()) throw FormatError("checkpoint missing tensor " + p->name);
    const auto shape = it->second.at("shape").get<std::vector<Eigen::Index>>();
    if (shape.size() != 2 || shape[0] != p->value.rows() || shape[1] != p->value.cols()) {
      throw FormatError("checkpoint shape mismatch for " + p->name);
    }
    std::size_t offset = it->second.at("offset").get<std::size_t>();
    if (offset + 4 * static_cast<std::size_t>(p->value.size()) > blob.size()) {
      throw FormatError("checkpoint blob truncated at " + p->name);
    }
    for (Eigen::Index i = 0; i < p->value.rows(); ++i)
      for (Eigen::Index j = 0; j < p->value.cols(); ++j, offset += 4)
        p->value(i, j) = static_cast<double>(get_f32_le(blob, offset));
    p->zero_grad();
  }
  return manifest.value("config", nlohmann::json::object());
}

bool checkpoint_exists(const std::filesystem::path& stem) {
  return std::filesystem::exists(manifest_path(stem)) && std::filesystem::exists(blob_path(stem));
}

void round_to_f32(const nn::ParamRefs& params) {
  for (nn::Param* p : params)
    p->value = p->value.unaryExpr([](double v) { return static_cast<double>(static_cast<float>(v)); });
}

}  // namespace mindface
