#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pizzamon/digest.hpp"
#include "pizzamon/error.hpp"

namespace pizzamon {

// Big-endian fixed-width writer used for every hashed or persisted structure.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { be(v, 2); }
  void u32(std::uint32_t v) { be(v, 4); }
  void u64(std::uint64_t v) { be(v, 8); }
  void i16(std::int16_t v) { u16(static_cast<std::uint16_t>(v)); }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.insert(out_.end(), s.begin(), s.end());
  }
  void bytes(std::span<const std::uint8_t> b) {
    u32(static_cast<std::uint32_t>(b.size()));
    raw(b);
  }
  void raw(std::span<const std::uint8_t> b) {
    const std::size_t at = out_.size();
    out_.resize(at + b.size());
    if (!b.empty()) std::memcpy(out_.data() + at, b.data(), b.size());
  }
  void digest(const Digest& d) { raw(d); }

  const std::vector<std::uint8_t>& data() const& { return out_; }
  std::vector<std::uint8_t> take() && { return std::move(out_); }

 private:
  void be(std::uint64_t v, int n) {
    for (int i = n - 1; i >= 0; --i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> out_;
};

// Reader counterpart. Any overrun throws Error(code) so callers can map it to
// their own failure kind (MalformedPayload, CorruptStore, ...).
class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> in, ErrorCode code) : in_(in), code_(code) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(be(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(be(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(be(4)); }
  std::uint64_t u64() { return be(8); }
  std::int16_t i16() { return static_cast<std::int16_t>(u16()); }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  std::string str() {
    const auto n = u32();
    auto b = take(n);
    return std::string(b.begin(), b.end());
  }
  std::vector<std::uint8_t> bytes() {
    const auto n = u32();
    auto b = take(n);
    return {b.begin(), b.end()};
  }
  Digest digest() {
    Digest d;
    auto b = take(d.size());
    std::memcpy(d.data(), b.data(), d.size());
    return d;
  }
  std::span<const std::uint8_t> take(std::size_t n) {
    need(n);
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t remaining() const { return in_.size() - pos_; }
  std::size_t position() const { return pos_; }
  bool done() const { return pos_ == in_.size(); }
  void expect_done(const char* what) const {
    if (!done()) throw Error(code_, std::string(what) + ": trailing bytes");
  }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw Error(code_, "truncated input");
  }
  std::uint64_t be(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v = (v << 8) | in_[pos_++];
    return v;
  }

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
  ErrorCode code_;
};

}  // namespace pizzamon
