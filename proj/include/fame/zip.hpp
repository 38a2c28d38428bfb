#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace fame {

// Minimal zip support: stored and deflated entries, CRC-32 verified on
// read. Covers what submission bundles need; no zip64, no encryption.

struct ZipEntry {
  std::string name;  // as stored, '/'-separated
  std::vector<std::uint8_t> data;
};

// Entry names listed in central-directory order. Directory markers
// (names ending in '/') are skipped.
std::vector<ZipEntry> zip_extract(std::span<const std::uint8_t> archive);

class ZipWriter {
 public:
  // Adds one file entry; deflate=false stores it uncompressed.
  void add(const std::string& name, std::span<const std::uint8_t> data,
           bool deflate = true);
  void add_text(const std::string& name, std::string_view text,
                bool deflate = true);

  // Appends the central directory and returns the archive bytes.
  std::vector<std::uint8_t> finish();

 private:
  struct Record {
    std::string name;
    std::uint32_t crc;
    std::uint32_t compressed_size;
    std::uint32_t uncompressed_size;
    std::uint32_t offset;
    std::uint16_t method;
  };
  std::vector<std::uint8_t> buffer_;
  std::vector<Record> records_;
};

}  // namespace fame
