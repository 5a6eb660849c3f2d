#include "intertraj/core/binary_io.hpp"

#include <zlib.h>

#include <fstream>
#include <iterator>

namespace intertraj {

namespace {
constexpr char kMagic[4] = {'I', 'T', 'R', 'J'};
constexpr std::size_t kHeaderSize = 20;
}  // namespace

std::uint32_t crc32_of(std::string_view bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks for large payloads.
  std::size_t off = 0;
  while (off < bytes.size()) {
    const auto n = static_cast<uInt>(std::min<std::size_t>(bytes.size() - off, 1u << 30));
    crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + off), n);
    off += n;
  }
  return static_cast<std::uint32_t>(crc);
}

void write_container(const std::string& path, std::string_view kind, std::uint32_t version, std::string_view payload) {
  if (kind.size() != 4) throw InvalidArgument("container kind must be 4 characters");
  ByteWriter header;
  for (char c : kMagic) header.u8(static_cast<std::uint8_t>(c));
  for (char c : kind) header.u8(static_cast<std::uint8_t>(c));
  header.u32(version);
  header.u64(payload.size());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open for writing: " + path);
  out.write(header.buffer().data(), static_cast<std::streamsize>(header.buffer().size()));
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  const std::uint32_t crc = crc32_of(payload);
  out.write(reinterpret_cast<const char*>(&crc), sizeof crc);
  if (!out) throw FormatError("write failed: " + path);
}

std::string unwrap_container(std::string_view file, std::string_view kind, std::uint32_t version) {
  if (file.size() < kHeaderSize + 4) throw FormatError("container truncated (header)");
  if (file.substr(0, 4) != std::string_view(kMagic, 4)) throw FormatError("not an intertraj container (bad magic)");
  if (file.substr(4, 4) != kind)
    throw FormatError("unexpected container kind '" + std::string(file.substr(4, 4)) + "', wanted '" +
                      std::string(kind) + "'");
  ByteReader hdr(file.substr(8, 12));
  const auto file_version = hdr.u32();
  const auto size = hdr.u64();
  if (file_version != version)
    throw FormatError("unsupported container version " + std::to_string(file_version) + " (expected " +
                      std::to_string(version) + ")");
  if (file.size() != kHeaderSize + size + 4) throw FormatError("container truncated or has trailing bytes");
  const auto payload = file.substr(kHeaderSize, size);
  std::uint32_t stored;
  std::memcpy(&stored, file.data() + kHeaderSize + size, sizeof stored);
  if (stored != crc32_of(payload)) throw FormatError("container checksum mismatch");
  return std::string(payload);
}

std::string read_container(const std::string& path, std::string_view kind, std::uint32_t version) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open: " + path);
  std::string file((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return unwrap_container(file, kind, version);
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

}  // namespace intertraj
