#include "neuroscan/archive.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

#include "neuroscan/error.hpp"
#include "neuroscan/rng.hpp"

namespace neuroscan {

namespace {

constexpr char kMagic[4] = {'N', 'S', 'D', 'S'};
constexpr uint16_t kVersion = 1;

void put_u16(std::string& out, uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f32(std::string& out, float v) {
  uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

class Reader {
 public:
  explicit Reader(std::string bytes) : bytes_(std::move(bytes)) {}

  uint8_t u8() {
    need(1);
    return static_cast<uint8_t>(bytes_[pos_++]);
  }
  uint16_t u16() {
    need(2);
    uint16_t v = static_cast<uint16_t>(
        static_cast<uint8_t>(bytes_[pos_]) |
        (static_cast<uint8_t>(bytes_[pos_ + 1]) << 8));
    pos_ += 2;
    return v;
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<uint32_t>(static_cast<uint8_t>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  float f32() {
    uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  std::string str(uint32_t len) {
    need(len);
    std::string s = bytes_.substr(pos_, len);
    pos_ += len;
    return s;
  }
  void magic() {
    need(4);
    if (std::memcmp(bytes_.data() + pos_, kMagic, 4) != 0)
      raise(ErrorCode::decode_error, "archive: bad magic");
    pos_ += 4;
  }
  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  void need(size_t n) {
    if (pos_ + n > bytes_.size())
      raise(ErrorCode::decode_error, "archive: truncated");
  }
  std::string bytes_;
  size_t pos_ = 0;
};

}  // namespace

void write_archive(const LabeledSet& set, const std::filesystem::path& path) {
  std::string out;
  out.append(kMagic, 4);
  put_u16(out, kVersion);
  put_u32(out, static_cast<uint32_t>(set.class_names.size()));
  for (const std::string& name : set.class_names) {
    put_u32(out, static_cast<uint32_t>(name.size()));
    out += name;
  }
  put_u32(out, static_cast<uint32_t>(set.samples.size()));
  for (const Sample& s : set.samples) {
    if (s.image.channels != 1)
      raise(ErrorCode::unsupported_format,
            "archive: samples must be single-channel");
    put_u16(out, static_cast<uint16_t>(s.label));
    out.push_back(static_cast<char>(s.synthetic ? 1 : 0));
    put_u32(out, static_cast<uint32_t>(s.image.height));
    put_u32(out, static_cast<uint32_t>(s.image.width));
    for (double v : s.image.data) put_f32(out, static_cast<float>(v));
  }

  std::ofstream file(path, std::ios::binary);
  if (!file)
    raise(ErrorCode::io_error, "cannot open archive for write: " + path.string());
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file)
    raise(ErrorCode::io_error, "archive write failed: " + path.string());
}

LabeledSet read_archive(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file)
    raise(ErrorCode::io_error, "cannot open archive: " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(file)),
                    std::istreambuf_iterator<char>());
  Reader r(std::move(bytes));
  r.magic();
  const uint16_t version = r.u16();
  if (version != kVersion)
    raise(ErrorCode::decode_error,
          "archive: unsupported version " + std::to_string(version));

  LabeledSet set;
  const uint32_t num_classes = r.u32();
  for (uint32_t i = 0; i < num_classes; ++i)
    set.class_names.push_back(r.str(r.u32()));
  const uint32_t num_samples = r.u32();
  set.samples.reserve(num_samples);
  for (uint32_t i = 0; i < num_samples; ++i) {
    Sample s;
    const uint16_t label = r.u16();
    if (label >= num_classes)
      raise(ErrorCode::decode_error, "archive: label out of range");
    s.label = static_cast<int>(label);
    s.synthetic = r.u8() != 0;
    const uint32_t h = r.u32();
    const uint32_t w = r.u32();
    s.image = Image(static_cast<int>(h), static_cast<int>(w), 1);
    for (size_t k = 0; k < s.image.data.size(); ++k)
      s.image.data[k] = static_cast<double>(r.f32());
    set.samples.push_back(std::move(s));
  }
  if (!r.at_end())
    raise(ErrorCode::decode_error, "archive: trailing bytes");
  return set;
}

std::string file_hash_hex(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file)
    raise(ErrorCode::io_error, "cannot open file for hashing: " + path.string());
  uint64_t h = 0xCBF29CE484222325ull;
  char buf[4096];
  while (file.read(buf, sizeof(buf)) || file.gcount() > 0) {
    const std::streamsize got = file.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x00000100000001B3ull;
    }
    if (!file) break;
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(h));
  return std::string(hex);
}

}  // namespace neuroscan
