#include "relkit/binary_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace relkit {

void ByteWriter::u16(std::uint16_t v) {
  u8(static_cast<std::uint8_t>(v & 0xff));
  u8(static_cast<std::uint8_t>(v >> 8));
}

void ByteWriter::u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

void ByteWriter::f64(double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>((bits >> (8 * i)) & 0xff));
}

void ByteWriter::short_string(const std::string& s) {
  if (s.size() > 0xffff) throw StoreError(StoreError::Kind::Invalid, "name longer than 65535 bytes: " + s.substr(0, 32));
  u16(static_cast<std::uint16_t>(s.size()));
  bytes(s);
}

void ByteWriter::header(SectionTag tag) {
  bytes(std::string_view(kContainerMagic, 4));
  u32(kContainerVersion);
  u32(static_cast<std::uint32_t>(tag));
}

void ByteWriter::write_file(const std::filesystem::path& path) const {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw StoreError(StoreError::Kind::Io, "cannot open " + tmp.string() + " for writing");
    out.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
    if (!out) throw StoreError(StoreError::Kind::Io, "write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw StoreError(StoreError::Kind::Io, "cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

ByteReader ByteReader::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StoreError(StoreError::Kind::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw StoreError(StoreError::Kind::Io, "read failed: " + path.string());
  return ByteReader(ss.str());
}

void ByteReader::need(std::size_t n, const char* what) {
  if (remaining() < n) {
    throw StoreError(StoreError::Kind::Truncated, std::string("truncated file while reading ") + what + " at byte " +
                                                      std::to_string(pos_));
  }
}

std::uint8_t ByteReader::u8() {
  need(1, "u8");
  return static_cast<std::uint8_t>(data_[pos_++]);
}

std::uint16_t ByteReader::u16() {
  need(2, "u16");
  std::uint16_t v = 0;
  for (int i = 0; i < 2; ++i) v |= static_cast<std::uint16_t>(static_cast<std::uint8_t>(data_[pos_++]) << (8 * i));
  return v;
}

std::uint32_t ByteReader::u32() {
  need(4, "u32");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(data_[pos_++])) << (8 * i);
  return v;
}

double ByteReader::f64() {
  need(8, "f64");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(data_[pos_++])) << (8 * i);
  return std::bit_cast<double>(bits);
}

std::string ByteReader::bytes(std::size_t n) {
  need(n, "bytes");
  std::string s = data_.substr(pos_, n);
  pos_ += n;
  return s;
}

std::string ByteReader::short_string() {
  const std::uint16_t n = u16();
  return bytes(n);
}

void ByteReader::header(SectionTag expected) {
  if (remaining() < 4 || std::memcmp(data_.data() + pos_, kContainerMagic, 4) != 0) {
    throw StoreError(StoreError::Kind::BadMagic, "bad magic: not an LREC file");
  }
  pos_ += 4;
  const std::uint32_t version = u32();
  if (version != kContainerVersion) {
    throw StoreError(StoreError::Kind::VersionMismatch,
                     "unsupported LREC version " + std::to_string(version) + " (expected 1)");
  }
  const std::uint32_t tag = u32();
  if (tag != static_cast<std::uint32_t>(expected)) {
    throw StoreError(StoreError::Kind::WrongSection, "unexpected section tag " + std::to_string(tag) + " (expected " +
                                                         std::to_string(static_cast<std::uint32_t>(expected)) + ")");
  }
}

}  // namespace relkit
