#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace pas {

using TokenId = std::int32_t;

struct ModelConfig {
  int n_layers = 0;
  int n_heads = 0;
  int head_dim = 0;
  int vocab_size = 0;
  int max_seq_len = 0;
  int mlp_dim = 0;

  int model_dim() const { return head_dim * n_heads; }
  /// Throws ConfigError on non-positive sizes.
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

/// (layer, head) address of one attention head.
struct HeadLocator {
  int layer = 0;
  int head = 0;
  auto operator<=>(const HeadLocator&) const = default;
};

struct Tensor {
  std::vector<std::int64_t> shape;
  std::vector<float> data;

  std::size_t numel() const;
  bool operator==(const Tensor&) const = default;
};

/// Token strings plus named roles ("bos", "eos", "yes", "no",
/// "option.<n>", "marker.<Trait>.<+|->"). Strings of the form `<...>` are
/// special and never produced by text encoding.
struct Vocabulary {
  std::vector<std::string> tokens;
  std::map<std::string, TokenId> roles;
  bool operator==(const Vocabulary&) const = default;
};

/// Tensor names:
///   embed                         [vocab, model_dim]
///   layers.L.heads.H.query|key    [head_dim, model_dim]   attention scores
///   layers.L.heads.H.in_proj      [head_dim, model_dim]   P (value projection)
///   layers.L.heads.H.out_proj     [model_dim, head_dim]   Q
///   layers.L.mlp.w_in [mlp, model_dim]  b_in [mlp]  w_out [model_dim, mlp]  b_out [model_dim]
///   unembed                       [vocab, model_dim]
struct Checkpoint {
  ModelConfig config;
  Vocabulary vocab;
  std::map<std::string, Tensor> tensors;

  const Tensor& tensor(const std::string& name) const;
  /// Shape check of every tensor against the config.
  void validate() const;
  bool operator==(const Checkpoint&) const = default;
};

std::string head_tensor_name(int layer, int head, const char* what);
std::string mlp_tensor_name(int layer, const char* what);
/// Zero-filled checkpoint with every tensor allocated for `config`.
Checkpoint allocate_checkpoint(const ModelConfig& config, Vocabulary vocab);

// File layout: u64 little-endian manifest length, JSON manifest
// {format, version, config, vocab, tensors:[{name, shape, dtype:"f32", offset, length}]},
// then one little-endian float32 blob (offsets relative to its start).
std::string serialize_checkpoint(const Checkpoint& checkpoint);
Checkpoint deserialize_checkpoint(const std::string& bytes);
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace pas
