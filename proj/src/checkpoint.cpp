#include "pas/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pas/error.hpp"

namespace pas {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

void ModelConfig::validate() const {
  if (n_layers <= 0 || n_heads <= 0 || head_dim <= 0 || vocab_size <= 0 || max_seq_len <= 0 || mlp_dim <= 0)
    fail(ErrorCode::ConfigError, "model config sizes must all be positive");
}

std::size_t Tensor::numel() const {
  std::size_t n = 1;
  for (auto d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

const Tensor& Checkpoint::tensor(const std::string& name) const {
  auto it = tensors.find(name);
  if (it == tensors.end()) fail(ErrorCode::SchemaError, "checkpoint lacks tensor " + name);
  return it->second;
}

std::string head_tensor_name(int layer, int head, const char* what) {
  return "layers." + std::to_string(layer) + ".heads." + std::to_string(head) + "." + what;
}

std::string mlp_tensor_name(int layer, const char* what) {
  return "layers." + std::to_string(layer) + ".mlp." + what;
}

namespace {

std::map<std::string, std::vector<std::int64_t>> expected_shapes(const ModelConfig& c) {
  const std::int64_t dm = c.model_dim(), d = c.head_dim, v = c.vocab_size, m = c.mlp_dim;
  std::map<std::string, std::vector<std::int64_t>> s;
  s["embed"] = {v, dm};
  s["unembed"] = {v, dm};
  for (int l = 0; l < c.n_layers; ++l) {
    for (int h = 0; h < c.n_heads; ++h) {
      s[head_tensor_name(l, h, "query")] = {d, dm};
      s[head_tensor_name(l, h, "key")] = {d, dm};
      s[head_tensor_name(l, h, "in_proj")] = {d, dm};
      s[head_tensor_name(l, h, "out_proj")] = {dm, d};
    }
    s[mlp_tensor_name(l, "w_in")] = {m, dm};
    s[mlp_tensor_name(l, "b_in")] = {m};
    s[mlp_tensor_name(l, "w_out")] = {dm, m};
    s[mlp_tensor_name(l, "b_out")] = {dm};
  }
  return s;
}

json config_json(const ModelConfig& c) {
  return {{"n_layers", c.n_layers}, {"n_heads", c.n_heads},         {"head_dim", c.head_dim},
          {"vocab_size", c.vocab_size}, {"max_seq_len", c.max_seq_len}, {"mlp_dim", c.mlp_dim}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.n_layers = j.at("n_layers").get<int>();
  c.n_heads = j.at("n_heads").get<int>();
  c.head_dim = j.at("head_dim").get<int>();
  c.vocab_size = j.at("vocab_size").get<int>();
  c.max_seq_len = j.at("max_seq_len").get<int>();
  c.mlp_dim = j.at("mlp_dim").get<int>();
  return c;
}

}  // namespace

void Checkpoint::validate() const {
  config.validate();
  if (static_cast<int>(vocab.tokens.size()) != config.vocab_size)
    fail(ErrorCode::SchemaError, "vocabulary size does not match config");
  const auto shapes = expected_shapes(config);
  if (shapes.size() != tensors.size()) fail(ErrorCode::SchemaError, "unexpected tensor count");
  for (const auto& [name, shape] : shapes) {
    const Tensor& t = tensor(name);
    if (t.shape != shape) fail(ErrorCode::SchemaError, "tensor " + name + " has the wrong shape");
    if (t.data.size() != t.numel()) fail(ErrorCode::SchemaError, "tensor " + name + " has the wrong length");
  }
}

Checkpoint allocate_checkpoint(const ModelConfig& config, Vocabulary vocab) {
  config.validate();
  Checkpoint ck;
  ck.config = config;
  ck.vocab = std::move(vocab);
  for (auto& [name, shape] : expected_shapes(config)) {
    Tensor t;
    t.shape = shape;
    t.data.assign(t.numel(), 0.0f);
    ck.tensors.emplace(name, std::move(t));
  }
  return ck;
}

std::string serialize_checkpoint(const Checkpoint& ck) {
  ck.validate();
  json manifest;
  manifest["format"] = "pas-checkpoint";
  manifest["version"] = 1;
  manifest["config"] = config_json(ck.config);
  manifest["vocab"] = {{"tokens", ck.vocab.tokens}, {"roles", ck.vocab.roles}};
  json table = json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, t] : ck.tensors) {
    const std::uint64_t bytes = t.data.size() * sizeof(float);
    table.push_back({{"name", name}, {"shape", t.shape}, {"dtype", "f32"}, {"offset", offset}, {"length", bytes}});
    offset += bytes;
  }
  manifest["tensors"] = std::move(table);
  const std::string text = manifest.dump();

  std::string out;
  const std::uint64_t len = text.size();
  out.append(reinterpret_cast<const char*>(&len), sizeof len);
  out += text;
  for (const auto& [name, t] : ck.tensors)
    out.append(reinterpret_cast<const char*>(t.data.data()), t.data.size() * sizeof(float));
  return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  std::uint64_t len = 0;
  if (bytes.size() < sizeof len) fail(ErrorCode::SchemaError, "checkpoint truncated");
  std::memcpy(&len, bytes.data(), sizeof len);
  if (bytes.size() < sizeof len + len) fail(ErrorCode::SchemaError, "checkpoint manifest truncated");
  Checkpoint ck;
  const std::size_t blob = sizeof len + len;
  try {
    const json manifest = json::parse(bytes.substr(sizeof len, len));
    if (manifest.at("format") != "pas-checkpoint") fail(ErrorCode::SchemaError, "not a pas checkpoint");
    ck.config = config_from_json(manifest.at("config"));
    ck.vocab.tokens = manifest.at("vocab").at("tokens").get<std::vector<std::string>>();
    ck.vocab.roles = manifest.at("vocab").at("roles").get<std::map<std::string, TokenId>>();
    for (const auto& entry : manifest.at("tensors")) {
      if (entry.at("dtype") != "f32") fail(ErrorCode::SchemaError, "unsupported dtype");
      Tensor t;
      t.shape = entry.at("shape").get<std::vector<std::int64_t>>();
      const auto offset = entry.at("offset").get<std::uint64_t>();
      const auto length = entry.at("length").get<std::uint64_t>();
      if (length != t.numel() * sizeof(float) || blob + offset + length > bytes.size())
        fail(ErrorCode::SchemaError, "tensor extent out of range");
      t.data.resize(t.numel());
      std::memcpy(t.data.data(), bytes.data() + blob + offset, length);
      ck.tensors.emplace(entry.at("name").get<std::string>(), std::move(t));
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::SchemaError, std::string("bad checkpoint manifest: ") + e.what());
  }
  ck.validate();
  return ck;
}

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  const std::string bytes = serialize_checkpoint(ck);
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_checkpoint(ss.str());
}

}  // namespace pas
