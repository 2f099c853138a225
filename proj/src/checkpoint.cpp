#include <bit>
#include <cmath>
#include <cstring>
#include <string>

#include "ptcad/error.hpp"
#include "ptcad/io.hpp"
#include "ptcad/model.hpp"

// Layout, all integers little-endian:
//   "PTCD" | u32 version | u64 config length | config text (key=value lines)
//   then per tensor: u32 name length | name | u32 rank | u64 dims... | f64 values...
// The config text carries vocab_digest and tensor_count next to the model keys.

namespace ptcad::model {

namespace {

constexpr char kMagic[4] = {'P', 'T', 'C', 'D'};

template <typename U>
void put(std::string& out, U value) {
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out.push_back(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xFF));
  }
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename U>
  U get(const char* what) {
    need(sizeof(U), what);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(U);
    return static_cast<U>(v);
  }

  std::string_view take(std::size_t n, const char* what) {
    need(n, what);
    const auto out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  bool done() const { return pos_ == bytes_.size(); }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) {
      throw Error(ErrorCode::kCorruptCheckpoint,
                  std::string("truncated checkpoint while reading ") + what);
    }
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

std::string_view find_key(std::string_view text, std::string_view key) {
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    const auto line = text.substr(pos, eol - pos);
    if (line.size() > key.size() && line.substr(0, key.size()) == key && line[key.size()] == '=') {
      return line.substr(key.size() + 1);
    }
    pos = eol + 1;
  }
  throw Error(ErrorCode::kCorruptCheckpoint, "config block lacks " + std::string(key));
}

std::uint64_t parse_u64(std::string_view s, const char* what) {
  if (s.empty()) throw Error(ErrorCode::kCorruptCheckpoint, std::string("empty ") + what);
  std::uint64_t v = 0;
  for (char c : s) {
    if (c < '0' || c > '9') throw Error(ErrorCode::kCorruptCheckpoint, std::string("bad ") + what);
    v = v * 10 + static_cast<std::uint64_t>(c - '0');
  }
  return v;
}

}  // namespace

std::string serialize_checkpoint(const Model& model, std::uint64_t vocab_digest) {
  const auto tensors = model.tensors();
  std::string config = format_config(model.config());
  config += "vocab_digest=" + std::to_string(vocab_digest) + "\n";
  config += "tensor_count=" + std::to_string(tensors.size()) + "\n";

  std::string out(kMagic, 4);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, config.size());
  out += config;
  for (const auto& t : tensors) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.name.size()));
    out += t.name;
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.dims.size()));
    for (auto d : t.dims) put<std::uint64_t>(out, d);
    for (double v : t.values) put<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

void save(const Model& model, std::uint64_t vocab_digest, const std::filesystem::path& path) {
  io::write_file_atomic(path, serialize_checkpoint(model, vocab_digest));
}

Checkpoint parse_checkpoint(std::string_view bytes) {
  Reader in(bytes);
  if (in.take(4, "magic") != std::string_view(kMagic, 4)) {
    throw Error(ErrorCode::kCorruptCheckpoint, "bad magic");
  }
  const auto version = in.get<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::kVersionMismatch, "checkpoint version " + std::to_string(version) +
                                                 ", expected " +
                                                 std::to_string(kCheckpointVersion));
  }
  const auto config_len = in.get<std::uint64_t>("config length");
  if (config_len > in.remaining()) throw Error(ErrorCode::kCorruptCheckpoint, "config overruns file");
  const auto config_text = in.take(static_cast<std::size_t>(config_len), "config");

  ModelConfig config;
  try {
    config = parse_config(config_text);
    config.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kCorruptCheckpoint, std::string("config block: ") + e.what());
  }
  const std::uint64_t digest = parse_u64(find_key(config_text, "vocab_digest"), "vocab_digest");
  const std::uint64_t count = parse_u64(find_key(config_text, "tensor_count"), "tensor_count");

  Model model = Model::init(config);
  const auto expected = model.tensors();
  if (count != expected.size()) throw Error(ErrorCode::kCorruptCheckpoint, "tensor count mismatch");

  std::vector<NamedTensor> tensors;
  tensors.reserve(expected.size());
  for (const auto& want : expected) {
    NamedTensor t;
    const auto name_len = in.get<std::uint32_t>("tensor name length");
    t.name = std::string(in.take(name_len, "tensor name"));
    if (t.name != want.name) {
      throw Error(ErrorCode::kCorruptCheckpoint, "unexpected tensor '" + t.name + "'");
    }
    const auto rank = in.get<std::uint32_t>("tensor rank");
    std::uint64_t elements = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
      t.dims.push_back(in.get<std::uint64_t>("tensor dim"));
      elements *= t.dims.back();
    }
    if (t.dims != want.dims) {
      throw Error(ErrorCode::kCorruptCheckpoint, "shape mismatch for '" + t.name + "'");
    }
    if (elements > in.remaining() / 8) {
      throw Error(ErrorCode::kCorruptCheckpoint, "truncated values for '" + t.name + "'");
    }
    t.values.resize(static_cast<std::size_t>(elements));
    for (auto& v : t.values) {
      v = std::bit_cast<double>(in.get<std::uint64_t>("tensor value"));
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::kCorruptCheckpoint, "non-finite value in '" + t.name + "'");
      }
    }
    tensors.push_back(std::move(t));
  }
  if (!in.done()) throw Error(ErrorCode::kCorruptCheckpoint, "trailing bytes after tensors");
  model.set_tensors(tensors);
  return Checkpoint{version, std::move(model), digest};
}

Checkpoint load(const std::filesystem::path& path) {
  return parse_checkpoint(io::read_file(path));
}

}  // namespace ptcad::model
