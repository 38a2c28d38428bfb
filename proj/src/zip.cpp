#include "fame/zip.hpp"

#include <zlib.h>

#include <cstring>

#include "fame/error.hpp"

namespace fame {

namespace {

constexpr std::uint32_t kLocalSig = 0x04034b50;
constexpr std::uint32_t kCentralSig = 0x02014b50;
constexpr std::uint32_t kEndSig = 0x06054b50;
constexpr std::uint16_t kStored = 0;
constexpr std::uint16_t kDeflated = 8;

std::uint16_t read_u16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

std::uint32_t read_u32(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | (std::uint32_t(b[at + 1]) << 8) |
         (std::uint32_t(b[at + 2]) << 16) | (std::uint32_t(b[at + 3]) << 24);
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(v & 0xff);
  out.push_back((v >> 8) & 0xff);
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(v & 0xff);
  out.push_back((v >> 8) & 0xff);
  out.push_back((v >> 16) & 0xff);
  out.push_back((v >> 24) & 0xff);
}

std::vector<std::uint8_t> inflate_raw(std::span<const std::uint8_t> in,
                                      std::size_t expected_size) {
  std::vector<std::uint8_t> out(expected_size);
  z_stream zs{};
  if (inflateInit2(&zs, -MAX_WBITS) != Z_OK)
    throw Error(ErrorKind::Archive, "inflate init failed");
  zs.next_in = const_cast<Bytef*>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  int rc = inflate(&zs, Z_FINISH);
  inflateEnd(&zs);
  if (rc != Z_STREAM_END || zs.total_out != expected_size)
    throw Error(ErrorKind::Archive, "corrupt deflate stream");
  return out;
}

std::vector<std::uint8_t> deflate_raw(std::span<const std::uint8_t> in) {
  z_stream zs{};
  if (deflateInit2(&zs, Z_DEFAULT_COMPRESSION, Z_DEFLATED, -MAX_WBITS, 8,
                   Z_DEFAULT_STRATEGY) != Z_OK)
    throw Error(ErrorKind::Archive, "deflate init failed");
  std::vector<std::uint8_t> out(deflateBound(&zs, static_cast<uLong>(in.size())));
  zs.next_in = const_cast<Bytef*>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  int rc = deflate(&zs, Z_FINISH);
  std::size_t produced = zs.total_out;
  deflateEnd(&zs);
  if (rc != Z_STREAM_END)
    throw Error(ErrorKind::Archive, "deflate failed");
  out.resize(produced);
  return out;
}

std::uint32_t crc_of(std::span<const std::uint8_t> data) {
  return static_cast<std::uint32_t>(
      crc32(0, data.data(), static_cast<uInt>(data.size())));
}

}  // namespace

std::vector<ZipEntry> zip_extract(std::span<const std::uint8_t> archive) {
  if (archive.size() < 22)
    throw Error(ErrorKind::Archive, "archive too small to be a zip");

  // End-of-central-directory: scan backwards over a possible comment.
  std::size_t eocd = std::string::npos;
  std::size_t lowest = archive.size() >= 22 + 65535
                           ? archive.size() - 22 - 65535
                           : 0;
  for (std::size_t i = archive.size() - 22; ; --i) {
    if (read_u32(archive, i) == kEndSig) {
      eocd = i;
      break;
    }
    if (i == lowest) break;
  }
  if (eocd == std::string::npos)
    throw Error(ErrorKind::Archive, "no end-of-central-directory record");

  std::uint16_t n_entries = read_u16(archive, eocd + 10);
  std::uint32_t cd_offset = read_u32(archive, eocd + 16);
  if (cd_offset > archive.size())
    throw Error(ErrorKind::Archive, "central directory offset out of range");

  std::vector<ZipEntry> entries;
  std::size_t pos = cd_offset;
  for (std::uint16_t i = 0; i < n_entries; ++i) {
    if (pos + 46 > archive.size() || read_u32(archive, pos) != kCentralSig)
      throw Error(ErrorKind::Archive, "bad central directory entry");
    std::uint16_t method = read_u16(archive, pos + 10);
    std::uint32_t crc = read_u32(archive, pos + 16);
    std::uint32_t csize = read_u32(archive, pos + 20);
    std::uint32_t usize = read_u32(archive, pos + 24);
    std::uint16_t name_len = read_u16(archive, pos + 28);
    std::uint16_t extra_len = read_u16(archive, pos + 30);
    std::uint16_t comment_len = read_u16(archive, pos + 32);
    std::uint32_t local_offset = read_u32(archive, pos + 42);
    if (pos + 46 + name_len > archive.size())
      throw Error(ErrorKind::Archive, "truncated central directory");
    std::string name(reinterpret_cast<const char*>(archive.data() + pos + 46),
                     name_len);
    pos += 46 + name_len + extra_len + comment_len;

    if (!name.empty() && name.back() == '/') continue;  // directory marker

    // Local header: name/extra lengths there may differ from the central
    // directory's, so re-read them.
    if (local_offset + 30 > archive.size() ||
        read_u32(archive, local_offset) != kLocalSig)
      throw Error(ErrorKind::Archive, "bad local header for '" + name + "'");
    std::uint16_t l_name = read_u16(archive, local_offset + 26);
    std::uint16_t l_extra = read_u16(archive, local_offset + 28);
    std::size_t data_at = local_offset + 30 + l_name + l_extra;
    if (data_at + csize > archive.size())
      throw Error(ErrorKind::Archive, "truncated data for '" + name + "'");
    auto compressed = archive.subspan(data_at, csize);

    std::vector<std::uint8_t> data;
    if (method == kStored) {
      if (csize != usize)
        throw Error(ErrorKind::Archive, "stored entry size mismatch");
      data.assign(compressed.begin(), compressed.end());
    } else if (method == kDeflated) {
      data = inflate_raw(compressed, usize);
    } else {
      throw Error(ErrorKind::Archive,
                  "unsupported compression method " + std::to_string(method) +
                      " for '" + name + "'");
    }
    if (crc_of(data) != crc)
      throw Error(ErrorKind::Archive, "CRC mismatch for '" + name + "'");
    entries.push_back({std::move(name), std::move(data)});
  }
  return entries;
}

void ZipWriter::add(const std::string& name,
                    std::span<const std::uint8_t> data, bool deflate) {
  Record rec;
  rec.name = name;
  rec.crc = crc_of(data);
  rec.uncompressed_size = static_cast<std::uint32_t>(data.size());
  rec.offset = static_cast<std::uint32_t>(buffer_.size());

  std::vector<std::uint8_t> compressed;
  if (deflate) {
    compressed = deflate_raw(data);
    // Incompressible data: fall back to stored.
    if (compressed.size() >= data.size()) deflate = false;
  }
  rec.method = deflate ? kDeflated : kStored;
  std::span<const std::uint8_t> payload =
      deflate ? std::span<const std::uint8_t>(compressed)
              : data;
  rec.compressed_size = static_cast<std::uint32_t>(payload.size());

  put_u32(buffer_, kLocalSig);
  put_u16(buffer_, 20);          // version needed
  put_u16(buffer_, 0);           // flags
  put_u16(buffer_, rec.method);
  put_u16(buffer_, 0);           // mod time (fixed for reproducibility)
  put_u16(buffer_, 0x21);        // mod date: 1980-01-01
  put_u32(buffer_, rec.crc);
  put_u32(buffer_, rec.compressed_size);
  put_u32(buffer_, rec.uncompressed_size);
  put_u16(buffer_, static_cast<std::uint16_t>(name.size()));
  put_u16(buffer_, 0);           // extra length
  buffer_.insert(buffer_.end(), name.begin(), name.end());
  buffer_.insert(buffer_.end(), payload.begin(), payload.end());

  records_.push_back(std::move(rec));
}

void ZipWriter::add_text(const std::string& name, std::string_view text,
                         bool deflate) {
  add(name,
      std::span<const std::uint8_t>(
          reinterpret_cast<const std::uint8_t*>(text.data()), text.size()),
      deflate);
}

std::vector<std::uint8_t> ZipWriter::finish() {
  std::uint32_t cd_offset = static_cast<std::uint32_t>(buffer_.size());
  for (const Record& rec : records_) {
    put_u32(buffer_, kCentralSig);
    put_u16(buffer_, 20);  // version made by
    put_u16(buffer_, 20);  // version needed
    put_u16(buffer_, 0);   // flags
    put_u16(buffer_, rec.method);
    put_u16(buffer_, 0);
    put_u16(buffer_, 0x21);
    put_u32(buffer_, rec.crc);
    put_u32(buffer_, rec.compressed_size);
    put_u32(buffer_, rec.uncompressed_size);
    put_u16(buffer_, static_cast<std::uint16_t>(rec.name.size()));
    put_u16(buffer_, 0);  // extra
    put_u16(buffer_, 0);  // comment
    put_u16(buffer_, 0);  // disk number
    put_u16(buffer_, 0);  // internal attrs
    put_u32(buffer_, 0);  // external attrs
    put_u32(buffer_, rec.offset);
    buffer_.insert(buffer_.end(), rec.name.begin(), rec.name.end());
  }
  std::uint32_t cd_size = static_cast<std::uint32_t>(buffer_.size()) - cd_offset;
  put_u32(buffer_, kEndSig);
  put_u16(buffer_, 0);  // disk
  put_u16(buffer_, 0);  // cd disk
  put_u16(buffer_, static_cast<std::uint16_t>(records_.size()));
  put_u16(buffer_, static_cast<std::uint16_t>(records_.size()));
  put_u32(buffer_, cd_size);
  put_u32(buffer_, cd_offset);
  put_u16(buffer_, 0);  // comment length
  return std::move(buffer_);
}

}  // namespace fame
