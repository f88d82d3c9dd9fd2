#include "vads/core/raw_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "vads/core/errors.hpp"

namespace vads {

namespace fs = std::filesystem;

namespace {

template <typename Word>
Word byteswap_if_big(Word w) {
  if constexpr (std::endian::native == std::endian::little) {
    return w;
  } else {
    Word out = 0;
    for (std::size_t i = 0; i < sizeof(Word); ++i) {
      out = static_cast<Word>((out << 8) | ((w >> (8 * i)) & 0xFF));
    }
    return out;
  }
}

template <typename Value>
void write_raw(const fs::path& path, const Value* data, std::size_t count) {
  static_assert(sizeof(Value) == 4);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw LoadError("cannot write " + path.string());
  std::vector<std::uint32_t> words(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint32_t w;
    std::memcpy(&w, data + i, 4);
    words[i] = byteswap_if_big(w);
  }
  out.write(reinterpret_cast<const char*>(words.data()), static_cast<std::streamsize>(count * 4));
  if (!out) throw LoadError("write failed for " + path.string());
}

template <typename Value>
std::vector<Value> read_raw(const fs::path& path, std::size_t expected_count) {
  std::error_code ec;
  const auto size = fs::file_size(path, ec);
  if (ec) throw LoadError("missing file " + path.string());
  if (size != expected_count * 4) {
    throw LoadError("length mismatch in " + path.string() + ": expected " + std::to_string(expected_count) +
                    " elements (" + std::to_string(expected_count * 4) + " bytes), file has " +
                    std::to_string(size) + " bytes");
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open " + path.string());
  std::vector<std::uint32_t> words(expected_count);
  in.read(reinterpret_cast<char*>(words.data()), static_cast<std::streamsize>(expected_count * 4));
  if (!in) throw LoadError("short read from " + path.string());
  std::vector<Value> out(expected_count);
  for (std::size_t i = 0; i < expected_count; ++i) {
    const std::uint32_t w = byteswap_if_big(words[i]);
    std::memcpy(&out[i], &w, 4);
  }
  return out;
}

}  // namespace

void write_f32(const fs::path& path, const float* data, std::size_t count) { write_raw(path, data, count); }

void write_i32(const fs::path& path, const std::vector<int>& values) {
  write_raw(path, values.data(), values.size());
}

std::vector<float> read_f32(const fs::path& path, std::size_t expected_count) {
  return read_raw<float>(path, expected_count);
}

std::vector<int> read_i32(const fs::path& path, std::size_t expected_count) {
  return read_raw<int>(path, expected_count);
}

}  // namespace vads
