#include "ratebench/kernel/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <stdexcept>

namespace ratebench::kernel {

namespace {

constexpr char kMagic[8] = {'R', 'B', 'C', 'P', '0', '0', '0', '1'};

using json = nlohmann::json;

}  // namespace

void save_checkpoint(const ParameterStore& params, const std::filesystem::path& path) {
  json header;
  header["format"] = 1;
  json tensors = json::array();
  std::uint64_t offset = 0;
  for (const Parameter* p : params.all()) {
    tensors.push_back({{"name", p->name},
                       {"shape", p->value.shape()},
                       {"offset", offset},
                       {"count", p->value.size()}});
    offset += p->value.size();
  }
  header["tensors"] = std::move(tensors);
  const std::string header_bytes = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open checkpoint for write: " + path.string());
  out.write(kMagic, sizeof(kMagic));
  const std::uint64_t header_len = header_bytes.size();
  out.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
  out.write(header_bytes.data(), static_cast<std::streamsize>(header_bytes.size()));
  std::vector<float> buffer;
  for (const Parameter* p : params.all()) {
    buffer.resize(p->value.size());
    for (std::size_t i = 0; i < buffer.size(); ++i) {
      buffer[i] = static_cast<float>(p->value[i]);
    }
    out.write(reinterpret_cast<const char*>(buffer.data()),
              static_cast<std::streamsize>(buffer.size() * sizeof(float)));
  }
  if (!out) throw std::runtime_error("checkpoint write failed: " + path.string());
}

void load_checkpoint(ParameterStore& params, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("not a checkpoint file: " + path.string());
  }
  std::uint64_t header_len = 0;
  in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
  std::string header_bytes(header_len, '\0');
  in.read(header_bytes.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw std::runtime_error("truncated checkpoint header: " + path.string());
  const json header = json::parse(header_bytes);

  const std::streampos payload_start = in.tellg();
  std::vector<float> buffer;
  for (Parameter* p : params.all()) {
    bool found = false;
    for (const auto& entry : header.at("tensors")) {
      if (entry.at("name").get<std::string>() != p->name) continue;
      const auto shape = entry.at("shape").get<std::vector<std::size_t>>();
      if (shape != p->value.shape()) {
        throw std::runtime_error("checkpoint shape mismatch for '" + p->name + "'");
      }
      const auto offset = entry.at("offset").get<std::uint64_t>();
      const auto count = entry.at("count").get<std::uint64_t>();
      buffer.resize(count);
      in.seekg(payload_start + static_cast<std::streamoff>(offset * sizeof(float)));
      in.read(reinterpret_cast<char*>(buffer.data()),
              static_cast<std::streamsize>(count * sizeof(float)));
      if (!in) throw std::runtime_error("truncated checkpoint payload: " + path.string());
      for (std::size_t i = 0; i < count; ++i) p->value[i] = buffer[i];
      found = true;
      break;
    }
    if (!found) {
      throw std::runtime_error("checkpoint missing tensor '" + p->name + "'");
    }
  }
}

}  // namespace ratebench::kernel
