#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace kt {

/// Compression level used for every gzip cost in reports.
inline constexpr int kGzipLevel = 9;

/// RFC 1952 gzip member with a zeroed mtime, so output is reproducible.
std::vector<std::uint8_t> gzip_compress(std::span<const std::uint8_t> data, int level = kGzipLevel);
std::vector<std::uint8_t> gzip_compress(std::string_view text, int level = kGzipLevel);

/// Throws DecodeError for anything that is not a complete gzip member.
std::vector<std::uint8_t> gzip_decompress(std::span<const std::uint8_t> stream);

/// 8 x gzip size, header and trailer included.
double deflate_cost(std::span<const std::uint8_t> data, int level = kGzipLevel);
double deflate_cost(std::string_view text, int level = kGzipLevel);

}  // namespace kt
