#ifndef RDC_BYTES_HPP
#define RDC_BYTES_HPP

#include <bit>
#include <cstdint>
#include <cstring>
#include <map>
#include <optional>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "rdc/errors.hpp"

namespace rdc {

using Bytes = std::vector<std::uint8_t>;

/// Little-endian byte sink. All cross-place payloads are produced through
/// this class so that both transports share one wire format.
class ByteWriter {
public:
  ByteWriter() = default;

  void u8(std::uint8_t v) { buf_.push_back(v); }

  void u16(std::uint16_t v) {
    buf_.push_back(static_cast<std::uint8_t>(v));
    buf_.push_back(static_cast<std::uint8_t>(v >> 8));
  }

  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }

  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }

  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void boolean(bool v) { u8(v ? 1 : 0); }

  void raw(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    buf_.insert(buf_.end(), p, p + n);
  }

  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    raw(s.data(), s.size());
  }

  void bytes(const Bytes& b) {
    u32(static_cast<std::uint32_t>(b.size()));
    raw(b.data(), b.size());
  }

  /// Patches a previously written u32 in place (used for length prefixes).
  void patchU32(std::size_t offset, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_[offset + i] = static_cast<std::uint8_t>(v >> (8 * i));
  }

  std::size_t size() const { return buf_.size(); }
  const Bytes& data() const& { return buf_; }
  Bytes take() { return std::move(buf_); }

private:
  Bytes buf_;
};

/// Little-endian byte source over a borrowed buffer. Underflow is a protocol
/// error, never undefined behaviour.
class ByteReader {
public:
  ByteReader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}
  explicit ByteReader(const Bytes& b) : ByteReader(b.data(), b.size()) {}

  std::uint8_t u8() {
    need(1);
    return data_[pos_++];
  }

  std::uint16_t u16() {
    need(2);
    std::uint16_t v = static_cast<std::uint16_t>(data_[pos_] | (data_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }

  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64() { return std::bit_cast<double>(u64()); }
  bool boolean() { return u8() != 0; }

  std::string str() {
    std::uint32_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(data_ + pos_), n);
    pos_ += n;
    return s;
  }

  Bytes bytes() {
    std::uint32_t n = u32();
    need(n);
    Bytes b(data_ + pos_, data_ + pos_ + n);
    pos_ += n;
    return b;
  }

  void raw(void* out, std::size_t n) {
    need(n);
    std::memcpy(out, data_ + pos_, n);
    pos_ += n;
  }

  std::size_t remaining() const { return size_ - pos_; }
  bool atEnd() const { return pos_ == size_; }

private:
  void need(std::size_t n) const {
    if (size_ - pos_ < n) throw ProtocolError("byte stream underflow");
  }

  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// Extensible value serialization. Built-in overloads below; user types add
// serialize/deserialize free functions in their own namespace (found by ADL).

inline void serialize(ByteWriter& w, std::uint8_t v) { w.u8(v); }
inline void serialize(ByteWriter& w, std::uint16_t v) { w.u16(v); }
inline void serialize(ByteWriter& w, std::uint32_t v) { w.u32(v); }
inline void serialize(ByteWriter& w, std::uint64_t v) { w.u64(v); }
inline void serialize(ByteWriter& w, std::int32_t v) { w.i32(v); }
inline void serialize(ByteWriter& w, std::int64_t v) { w.i64(v); }
inline void serialize(ByteWriter& w, double v) { w.f64(v); }
inline void serialize(ByteWriter& w, bool v) { w.boolean(v); }
inline void serialize(ByteWriter& w, const std::string& v) { w.str(v); }

inline void deserialize(ByteReader& r, std::uint8_t& v) { v = r.u8(); }
inline void deserialize(ByteReader& r, std::uint16_t& v) { v = r.u16(); }
inline void deserialize(ByteReader& r, std::uint32_t& v) { v = r.u32(); }
inline void deserialize(ByteReader& r, std::uint64_t& v) { v = r.u64(); }
inline void deserialize(ByteReader& r, std::int32_t& v) { v = r.i32(); }
inline void deserialize(ByteReader& r, std::int64_t& v) { v = r.i64(); }
inline void deserialize(ByteReader& r, double& v) { v = r.f64(); }
inline void deserialize(ByteReader& r, bool& v) { v = r.boolean(); }
inline void deserialize(ByteReader& r, std::string& v) { v = r.str(); }

template <class A, class B>
void serialize(ByteWriter& w, const std::pair<A, B>& v) {
  serialize(w, v.first);
  serialize(w, v.second);
}

template <class A, class B>
void deserialize(ByteReader& r, std::pair<A, B>& v) {
  deserialize(r, v.first);
  deserialize(r, v.second);
}

template <class T>
void serialize(ByteWriter& w, const std::vector<T>& v) {
  w.u32(static_cast<std::uint32_t>(v.size()));
  for (const T& t : v) serialize(w, t);
}

template <class T>
void deserialize(ByteReader& r, std::vector<T>& v) {
  std::uint32_t n = r.u32();
  v.clear();
  v.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    T t{};
    deserialize(r, t);
    v.push_back(std::move(t));
  }
}

template <class K, class V>
void serialize(ByteWriter& w, const std::map<K, V>& m) {
  w.u32(static_cast<std::uint32_t>(m.size()));
  for (const auto& [k, v] : m) {
    serialize(w, k);
    serialize(w, v);
  }
}

template <class K, class V>
void deserialize(ByteReader& r, std::map<K, V>& m) {
  std::uint32_t n = r.u32();
  m.clear();
  for (std::uint32_t i = 0; i < n; ++i) {
    K k{};
    V v{};
    deserialize(r, k);
    deserialize(r, v);
    m.emplace(std::move(k), std::move(v));
  }
}

template <class T>
concept Serializable = requires(ByteWriter& w, ByteReader& r, const T& c, T& m) {
  serialize(w, c);
  deserialize(r, m);
};

template <class T>
Bytes toBytes(const T& v) {
  ByteWriter w;
  serialize(w, v);
  return w.take();
}

template <class T>
T fromBytes(const Bytes& b) {
  ByteReader r(b);
  T v{};
  deserialize(r, v);
  return v;
}

}  // namespace rdc

#endif  // RDC_BYTES_HPP
