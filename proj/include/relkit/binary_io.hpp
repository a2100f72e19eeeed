#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace relkit {

/// Failure reading or writing an LREC container.
class StoreError : public std::runtime_error {
 public:
  enum class Kind { Io, BadMagic, VersionMismatch, WrongSection, Truncated, Invalid };

  StoreError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// Common LREC header: magic, version and section tag.
inline constexpr char kContainerMagic[4] = {'L', 'R', 'E', 'C'};
inline constexpr std::uint32_t kContainerVersion = 1;

enum class SectionTag : std::uint32_t { Store = 0, Model = 1 };

/// Little-endian byte sink.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u16(std::uint16_t v);
  void u32(std::uint32_t v);
  void f64(double v);
  void bytes(std::string_view s) { buf_.append(s); }
  /// u16 length followed by the bytes.
  void short_string(const std::string& s);
  void header(SectionTag tag);

  const std::string& buffer() const noexcept { return buf_; }
  /// Writes the buffer to a sibling temp file and renames it into place.
  void write_file(const std::filesystem::path& path) const;

 private:
  std::string buf_;
};

/// Little-endian byte source over a whole file; every read past the end
/// raises StoreError::Kind::Truncated.
class ByteReader {
 public:
  explicit ByteReader(std::string data) : data_(std::move(data)) {}
  static ByteReader from_file(const std::filesystem::path& path);

  std::uint8_t u8();
  std::uint16_t u16();
  std::uint32_t u32();
  double f64();
  std::string bytes(std::size_t n);
  std::string short_string();
  /// Checks magic and version, then requires the given section tag.
  void header(SectionTag expected);

  std::size_t remaining() const noexcept { return data_.size() - pos_; }

 private:
  void need(std::size_t n, const char* what);

  std::string data_;
  std::size_t pos_ = 0;
};

}  // namespace relkit
