#include "neuroscan/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>

#include "neuroscan/error.hpp"

namespace neuroscan {

namespace {

constexpr char kMagic[4] = {'N', 'S', 'P', 'M'};
constexpr uint16_t kVersion = 1;

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v & 0xFF));
  out.push_back(static_cast<uint8_t>(v >> 8));
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void put_f32(std::vector<uint8_t>& out, float v) {
  uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

void put_string(std::vector<uint8_t>& out, const std::string& s) {
  put_u32(out, static_cast<uint32_t>(s.size()));
  out.insert(out.end(), s.begin(), s.end());
}

class Reader {
 public:
  explicit Reader(std::span<const uint8_t> bytes) : bytes_(bytes) {}

  uint8_t u8() {
    need(1);
    return bytes_[pos_++];
  }
  uint16_t u16() {
    need(2);
    uint16_t v = static_cast<uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  float f32() {
    uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  std::string str() {
    uint32_t len = u32();
    need(len);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), len);
    pos_ += len;
    return s;
  }
  void magic() {
    need(4);
    if (std::memcmp(bytes_.data() + pos_, kMagic, 4) != 0)
      raise(ErrorCode::checkpoint_format, "checkpoint: bad magic");
    pos_ += 4;
  }
  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  void need(size_t n) {
    if (pos_ + n > bytes_.size())
      raise(ErrorCode::checkpoint_format, "checkpoint: truncated");
  }
  std::span<const uint8_t> bytes_;
  size_t pos_ = 0;
};

/// Parse "name(key=value,key=value,...)".
std::map<std::string, std::string> parse_arch_id(const std::string& id,
                                                 std::string& name) {
  const size_t open = id.find('(');
  if (open == std::string::npos || id.back() != ')')
    raise(ErrorCode::checkpoint_format, "checkpoint: malformed arch id: " + id);
  name = id.substr(0, open);
  std::map<std::string, std::string> kv;
  std::string body = id.substr(open + 1, id.size() - open - 2);
  size_t start = 0;
  while (start < body.size()) {
    size_t comma = body.find(',', start);
    if (comma == std::string::npos) comma = body.size();
    const std::string item = body.substr(start, comma - start);
    const size_t eq = item.find('=');
    if (eq == std::string::npos)
      raise(ErrorCode::checkpoint_format,
            "checkpoint: malformed arch id: " + id);
    kv[item.substr(0, eq)] = item.substr(eq + 1);
    start = comma + 1;
  }
  return kv;
}

int arch_int(const std::map<std::string, std::string>& kv,
             const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end())
    raise(ErrorCode::checkpoint_format,
          "checkpoint: arch id missing field: " + key);
  try {
    return std::stoi(it->second);
  } catch (const std::exception&) {
    raise(ErrorCode::checkpoint_format,
          "checkpoint: arch id field not an integer: " + key);
  }
}

Model rebuild_arch(const std::string& arch_id) {
  std::string name;
  const auto kv = parse_arch_id(arch_id, name);
  if (name == "mini_cnn")
    return build_mini_cnn(static_cast<size_t>(arch_int(kv, "classes")),
                          arch_int(kv, "input"));
  if (name == "toy_vit") {
    ViTConfig cfg;
    cfg.image_size = arch_int(kv, "image");
    cfg.patch_size = arch_int(kv, "patch");
    cfg.embed_dim = arch_int(kv, "embed");
    cfg.num_heads = arch_int(kv, "heads");
    cfg.transformer_layers = arch_int(kv, "layers");
    cfg.mlp_hidden = arch_int(kv, "mlp");
    return build_toy_vit(cfg, static_cast<size_t>(arch_int(kv, "classes")));
  }
  raise(ErrorCode::checkpoint_format,
        "checkpoint: unknown architecture: " + name);
}

}  // namespace

std::vector<uint8_t> save_checkpoint(const Model& model) {
  std::vector<uint8_t> out;
  out.insert(out.end(), kMagic, kMagic + 4);
  put_u16(out, kVersion);
  put_string(out, model.arch_id);
  put_u32(out, static_cast<uint32_t>(model.params.size()));
  for (const Param& p : model.params) {
    put_string(out, p.name);
    const Tensor& t = *p.value;
    out.push_back(static_cast<uint8_t>(t.rank()));
    for (size_t d : t.shape) put_u32(out, static_cast<uint32_t>(d));
    for (double v : t.data) put_f32(out, static_cast<float>(v));
  }
  return out;
}

Model load_checkpoint(std::span<const uint8_t> bytes) {
  Reader r(bytes);
  r.magic();
  const uint16_t version = r.u16();
  if (version != kVersion)
    raise(ErrorCode::checkpoint_format,
          "checkpoint: unsupported version " + std::to_string(version));
  const std::string arch_id = r.str();
  Model model = rebuild_arch(arch_id);

  const uint32_t count = r.u32();
  if (count != model.params.size())
    raise(ErrorCode::checkpoint_format,
          "checkpoint: parameter count mismatch for " + arch_id);
  for (uint32_t i = 0; i < count; ++i) {
    const std::string name = r.str();
    if (name != model.params[i].name)
      raise(ErrorCode::checkpoint_format,
            "checkpoint: unexpected parameter '" + name + "' (wanted '" +
                model.params[i].name + "')");
    Tensor& t = *model.params[i].value;
    const uint8_t rank = r.u8();
    if (rank != t.rank())
      raise(ErrorCode::checkpoint_format,
            "checkpoint: rank mismatch for " + name);
    for (size_t d = 0; d < rank; ++d)
      if (r.u32() != t.dim(d))
        raise(ErrorCode::checkpoint_format,
              "checkpoint: shape mismatch for " + name);
    for (size_t k = 0; k < t.size(); ++k)
      t[k] = static_cast<double>(r.f32());
  }
  if (!r.at_end())
    raise(ErrorCode::checkpoint_format, "checkpoint: trailing bytes");
  return model;
}

void save_checkpoint_file(const Model& model,
                          const std::filesystem::path& path) {
  const std::vector<uint8_t> bytes = save_checkpoint(model);
  std::ofstream out(path, std::ios::binary);
  if (!out)
    raise(ErrorCode::io_error, "cannot open checkpoint for write: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out)
    raise(ErrorCode::io_error, "checkpoint write failed: " + path.string());
}

Model load_checkpoint_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    raise(ErrorCode::io_error, "cannot open checkpoint: " + path.string());
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  return load_checkpoint(bytes);
}

}  // namespace neuroscan
