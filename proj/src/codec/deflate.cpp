#include "kt/codec/deflate.hpp"

#include <zlib.h>

#include <cstring>
#include <stdexcept>

#include "kt/codec/errors.hpp"

namespace kt {

namespace {
constexpr int kGzipWindowBits = 15 + 16;
}

std::vector<std::uint8_t> gzip_compress(std::span<const std::uint8_t> data, int level) {
  z_stream zs{};
  if (deflateInit2(&zs, level, Z_DEFLATED, kGzipWindowBits, 9, Z_DEFAULT_STRATEGY) != Z_OK) {
    throw std::runtime_error("deflateInit2 failed");
  }
  gz_header header{};
  header.os = 255;
  deflateSetHeader(&zs, &header);

  std::vector<std::uint8_t> out(deflateBound(&zs, static_cast<uLong>(data.size())) + 32);
  zs.next_in = const_cast<Bytef*>(data.data());
  zs.avail_in = static_cast<uInt>(data.size());
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  int rc = deflate(&zs, Z_FINISH);
  deflateEnd(&zs);
  if (rc != Z_STREAM_END) throw std::runtime_error("deflate did not finish");
  out.resize(zs.total_out);
  return out;
}

std::vector<std::uint8_t> gzip_compress(std::string_view text, int level) {
  return gzip_compress(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()), level);
}

std::vector<std::uint8_t> gzip_decompress(std::span<const std::uint8_t> stream) {
  z_stream zs{};
  if (inflateInit2(&zs, kGzipWindowBits) != Z_OK) throw std::runtime_error("inflateInit2 failed");
  zs.next_in = const_cast<Bytef*>(stream.data());
  zs.avail_in = static_cast<uInt>(stream.size());

  std::vector<std::uint8_t> out;
  std::uint8_t buf[1 << 14];
  int rc = Z_OK;
  while (rc == Z_OK) {
    zs.next_out = buf;
    zs.avail_out = sizeof(buf);
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) break;
    out.insert(out.end(), buf, buf + (sizeof(buf) - zs.avail_out));
    if (rc == Z_OK && zs.avail_in == 0 && zs.avail_out != 0) {
      rc = Z_BUF_ERROR;
      break;
    }
  }
  const bool trailing = zs.avail_in != 0;
  inflateEnd(&zs);
  if (rc != Z_STREAM_END || trailing) throw DecodeError("invalid gzip stream");
  return out;
}

double deflate_cost(std::span<const std::uint8_t> data, int level) {
  return 8.0 * static_cast<double>(gzip_compress(data, level).size());
}

double deflate_cost(std::string_view text, int level) {
  return 8.0 * static_cast<double>(gzip_compress(text, level).size());
}

}  // namespace kt
