#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

namespace vads {

/// Raw little-endian 4-byte arrays. Readers check the file length against
/// the expected element count and throw LoadError naming the file.
void write_f32(const std::filesystem::path& path, const float* data, std::size_t count);
void write_i32(const std::filesystem::path& path, const std::vector<int>& values);
std::vector<float> read_f32(const std::filesystem::path& path, std::size_t expected_count);
std::vector<int> read_i32(const std::filesystem::path& path, std::size_t expected_count);

}  // namespace vads
