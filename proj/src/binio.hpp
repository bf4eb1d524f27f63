#ifndef MNE_SRC_BINIO_HPP
#define MNE_SRC_BINIO_HPP

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "mne/errors.hpp"

// Little-endian binary helpers shared by the file formats. Writers append to
// a byte buffer; the reader tracks its offset so format errors can name the
// exact byte.
namespace mne::binio {

inline void put_bytes(std::vector<std::uint8_t>& buf, const void* p, std::size_t n) {
  const auto* b = static_cast<const std::uint8_t*>(p);
  buf.insert(buf.end(), b, b + n);
}

inline void put_u8(std::vector<std::uint8_t>& buf, std::uint8_t v) { buf.push_back(v); }

inline void put_u16(std::vector<std::uint8_t>& buf, std::uint16_t v) {
  buf.push_back(static_cast<std::uint8_t>(v & 0xff));
  buf.push_back(static_cast<std::uint8_t>(v >> 8));
}

inline void put_u32(std::vector<std::uint8_t>& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

inline void put_u64(std::vector<std::uint8_t>& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

inline void put_i32(std::vector<std::uint8_t>& buf, std::int32_t v) {
  put_u32(buf, static_cast<std::uint32_t>(v));
}

inline void put_f32(std::vector<std::uint8_t>& buf, float v) {
  put_u32(buf, std::bit_cast<std::uint32_t>(v));
}

inline void put_f64(std::vector<std::uint8_t>& buf, double v) {
  put_u64(buf, std::bit_cast<std::uint64_t>(v));
}

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& buf, std::string what)
      : buf_(buf), what_(std::move(what)) {}

  std::size_t offset() const { return off_; }
  std::size_t remaining() const { return buf_.size() - off_; }

  void need(std::size_t n) const {
    if (off_ + n > buf_.size()) {
      throw FormatError(what_ + ": truncated at byte offset " + std::to_string(off_) +
                        " (need " + std::to_string(n) + " more bytes, have " +
                        std::to_string(buf_.size() - off_) + ")");
    }
  }

  std::uint8_t u8() {
    need(1);
    return buf_[off_++];
  }

  std::uint16_t u16() {
    need(2);
    std::uint16_t v = static_cast<std::uint16_t>(buf_[off_]) |
                      static_cast<std::uint16_t>(buf_[off_ + 1]) << 8;
    off_ += 2;
    return v;
  }

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf_[off_ + static_cast<std::size_t>(i)]) << (8 * i);
    off_ += 4;
    return v;
  }

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf_[off_ + static_cast<std::size_t>(i)]) << (8 * i);
    off_ += 8;
    return v;
  }

  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }

  void expect_magic(const char (&magic)[5]) {
    need(4);
    if (std::memcmp(buf_.data() + off_, magic, 4) != 0) {
      throw FormatError(what_ + ": bad magic at byte offset " + std::to_string(off_) +
                        " (expected \"" + magic + "\")");
    }
    off_ += 4;
  }

  void expect_exhausted() const {
    if (off_ != buf_.size()) {
      throw FormatError(what_ + ": " + std::to_string(buf_.size() - off_) +
                        " unexpected trailing bytes at offset " + std::to_string(off_));
    }
  }

  void fail(const std::string& msg) const {
    throw FormatError(what_ + ": " + msg + " at byte offset " + std::to_string(off_));
  }

 private:
  const std::vector<std::uint8_t>& buf_;
  std::string what_;
  std::size_t off_ = 0;
};

std::vector<std::uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, const std::vector<std::uint8_t>& buf);

}  // namespace mne::binio

#endif  // MNE_SRC_BINIO_HPP
