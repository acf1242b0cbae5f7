#ifndef RDC_RANGES_CHUNKED_LIST_HPP
#define RDC_RANGES_CHUNKED_LIST_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "rdc/errors.hpp"
#include "rdc/ranges/long_range.hpp"

namespace rdc {

/// Dense array of T mapped from a contiguous range of long indices.
template <class T>
struct Chunk {
  LongRange range;
  std::vector<T> data;

  Chunk() = default;
  Chunk(LongRange r, std::vector<T> d) : range(r), data(std::move(d)) {
    if (static_cast<std::int64_t>(data.size()) != range.size())
      throw UsageError("Chunk: data length does not match range " + range.toString());
  }

  /// Chunk filled with default-constructed elements.
  explicit Chunk(LongRange r) : range(r), data(static_cast<std::size_t>(r.size())) {}

  T& at(std::int64_t i) {
    if (!range.contains(i))
      throw RangeError("index " + std::to_string(i) + " outside chunk " + range.toString());
    return data[static_cast<std::size_t>(i - range.from)];
  }
  const T& at(std::int64_t i) const {
    if (!range.contains(i))
      throw RangeError("index " + std::to_string(i) + " outside chunk " + range.toString());
    return data[static_cast<std::size_t>(i - range.from)];
  }

  /// Unchecked access for hot loops that already validated the range.
  T& raw(std::int64_t i) { return data[static_cast<std::size_t>(i - range.from)]; }
  const T& raw(std::int64_t i) const { return data[static_cast<std::size_t>(i - range.from)]; }
};

/// Ordered set of disjoint chunks keyed by their starting index. Iteration is
/// always in ascending index order.
template <class T>
class ChunkedList {
public:
  using ChunkMap = std::map<std::int64_t, Chunk<T>>;

  void addChunk(Chunk<T> c) {
    if (c.range.empty()) return;
    if (overlapsExisting(c.range))
      throw RangeError("addChunk: range " + c.range.toString() + " overlaps an existing chunk");
    chunks_.emplace(c.range.from, std::move(c));
    ++version_;
  }

  void addChunk(LongRange r, std::vector<T> data) { addChunk(Chunk<T>(r, std::move(data))); }
  void addChunk(LongRange r) { addChunk(Chunk<T>(r)); }

  /// Removes and returns the chunk beginning exactly at r.from with range r.
  /// Call splitChunk first if the boundaries do not line up.
  Chunk<T> removeChunk(const LongRange& r) {
    auto it = chunks_.find(r.from);
    if (it == chunks_.end() || it->second.range != r)
      throw RangeError("removeChunk: no chunk with exact range " + r.toString());
    Chunk<T> c = std::move(it->second);
    chunks_.erase(it);
    ++version_;
    return c;
  }

  bool containsIndex(std::int64_t i) const { return findChunk(i) != nullptr; }

  T& at(std::int64_t i) {
    Chunk<T>* c = findChunk(i);
    if (!c) throw RangeError("index " + std::to_string(i) + " not present");
    return c->at(i);
  }

  const T& at(std::int64_t i) const {
    const Chunk<T>* c = findChunk(i);
    if (!c) throw RangeError("index " + std::to_string(i) + " not present");
    return c->at(i);
  }

  std::int64_t size() const {
    std::int64_t n = 0;
    for (const auto& [from, c] : chunks_) n += c.range.size();
    return n;
  }

  bool empty() const { return chunks_.empty(); }

  std::vector<LongRange> ranges() const {
    std::vector<LongRange> out;
    out.reserve(chunks_.size());
    for (const auto& [from, c] : chunks_) out.push_back(c.range);
    return out;
  }

  std::size_t numChunks() const { return chunks_.size(); }

  /// True when every index of r is present.
  bool containsRange(const LongRange& r) const {
    std::int64_t i = r.from;
    while (i < r.to) {
      const Chunk<T>* c = findChunk(i);
      if (!c) return false;
      i = c->range.to;
    }
    return true;
  }

  /// First index of r not present locally, if any.
  std::optional<std::int64_t> firstMissingIndex(const LongRange& r) const {
    std::int64_t i = r.from;
    while (i < r.to) {
      const Chunk<T>* c = findChunk(i);
      if (!c) return i;
      i = c->range.to;
    }
    return std::nullopt;
  }

  /// Ensures chunk boundaries exist exactly at r.from and r.to. Element
  /// values and their indices are unchanged; only the chunk partition of
  /// the covered span is refined.
  void splitChunk(const LongRange& r) {
    if (auto missing = firstMissingIndex(r))
      throw RangeError("splitChunk: index " + std::to_string(*missing) + " not present (range " +
                       r.toString() + ")");
    splitAt(r.from);
    splitAt(r.to);
  }

  void forEach(auto&& body) {
    for (auto& [from, c] : chunks_)
      for (T& t : c.data) body(t);
  }

  void forEach(auto&& body) const {
    for (const auto& [from, c] : chunks_)
      for (const T& t : c.data) body(t);
  }

  void forEachIndexed(auto&& body) {
    for (auto& [from, c] : chunks_) {
      std::int64_t i = c.range.from;
      for (T& t : c.data) body(i++, t);
    }
  }

  void forEachIndexed(auto&& body) const {
    for (const auto& [from, c] : chunks_) {
      std::int64_t i = c.range.from;
      for (const T& t : c.data) body(i++, t);
    }
  }

  ChunkMap& chunks() { return chunks_; }
  const ChunkMap& chunks() const { return chunks_; }

  /// Bumped on every structural mutation (add/remove/split); parallel regions
  /// snapshot it to detect a forbidden concurrent reshape.
  std::uint64_t structuralVersion() const { return version_; }

private:
  Chunk<T>* findChunk(std::int64_t i) {
    auto it = chunks_.upper_bound(i);
    if (it == chunks_.begin()) return nullptr;
    --it;
    return it->second.range.contains(i) ? &it->second : nullptr;
  }

  const Chunk<T>* findChunk(std::int64_t i) const {
    auto it = chunks_.upper_bound(i);
    if (it == chunks_.begin()) return nullptr;
    --it;
    return it->second.range.contains(i) ? &it->second : nullptr;
  }

  bool overlapsExisting(const LongRange& r) const {
    auto it = chunks_.upper_bound(r.from);
    if (it != chunks_.end() && r.overlaps(it->second.range)) return true;
    if (it != chunks_.begin()) {
      --it;
      if (r.overlaps(it->second.range)) return true;
    }
    return false;
  }

  /// Introduces a chunk boundary at index i when i falls strictly inside a chunk.
  void splitAt(std::int64_t i) {
    Chunk<T>* c = findChunk(i);
    if (!c || c->range.from == i) return;
    Chunk<T> tail(LongRange(i, c->range.to),
                  std::vector<T>(std::make_move_iterator(c->data.begin() + (i - c->range.from)),
                                 std::make_move_iterator(c->data.end())));
    c->data.resize(static_cast<std::size_t>(i - c->range.from));
    c->range = LongRange(c->range.from, i);
    chunks_.emplace(i, std::move(tail));
    ++version_;
  }

  ChunkMap chunks_;
  std::uint64_t version_ = 0;
};

}  // namespace rdc

#endif  // RDC_RANGES_CHUNKED_LIST_HPP
