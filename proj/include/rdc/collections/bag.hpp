#ifndef RDC_COLLECTIONS_BAG_HPP
#define RDC_COLLECTIONS_BAG_HPP

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "rdc/bytes.hpp"
#include "rdc/errors.hpp"

namespace rdc {

/// Multiset of T organized as one receiving sequence per producing worker,
/// so concurrent producers never contend. Reading APIs walk lanes in
/// ascending worker order, elements in emission order.
template <class T>
class Bag {
public:
  /// Worker-private append handle.
  class Collector {
  public:
    void accept(T v) { lane_->push_back(std::move(v)); }
    void accept(std::vector<T> vs) {
      for (T& v : vs) lane_->push_back(std::move(v));
    }

  private:
    friend class Bag;
    explicit Collector(std::vector<T>* lane) : lane_(lane) {}
    std::vector<T>* lane_;
  };

  /// Collector bound to worker w's lane. Each worker must use its own.
  Collector collector(unsigned worker) { return Collector(&lanes_[worker]); }

  /// Single-producer convenience append (lane 0).
  void add(T v) { lanes_[0].push_back(std::move(v)); }

  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& [w, lane] : lanes_) n += lane.size();
    return n;
  }

  bool empty() const { return size() == 0; }

  void forEach(auto&& body) const {
    for (const auto& [w, lane] : lanes_)
      for (const T& v : lane) body(v);
  }

  void forEach(auto&& body) {
    for (auto& [w, lane] : lanes_)
      for (T& v : lane) body(v);
  }

  /// Moves everything out, leaving the bag empty. Lane structure flattens in
  /// ascending worker order.
  std::vector<T> drain() {
    std::vector<T> out;
    out.reserve(size());
    for (auto& [w, lane] : lanes_)
      for (T& v : lane) out.push_back(std::move(v));
    lanes_.clear();
    return out;
  }

  void clear() { lanes_.clear(); }

  const std::map<unsigned, std::vector<T>>& lanes() const { return lanes_; }

  /// Copies the n elements sitting at flat positions [size-offset-n,
  /// size-offset), i.e. a window counted from the newest end. Relocation
  /// peeks before it drops so a failed exchange leaves the bag untouched.
  std::vector<T> peekFromEnd(std::size_t offset, std::size_t n) const {
    std::size_t total = size();
    if (offset + n > total)
      throw UsageError("bag window of " + std::to_string(n) + " at offset " +
                       std::to_string(offset) + " exceeds size " + std::to_string(total));
    std::size_t lo = total - offset - n, hi = total - offset, base = 0;
    std::vector<T> out;
    out.reserve(n);
    for (const auto& [w, lane] : lanes_) {
      std::size_t laneLo = base, laneHi = base + lane.size();
      std::size_t a = std::max(lo, laneLo), b = std::min(hi, laneHi);
      for (std::size_t i = a; i < b; ++i) out.push_back(lane[i - base]);
      base = laneHi;
    }
    return out;
  }

  /// Removes the newest n elements (highest lanes first, from the back).
  void dropFromEnd(std::size_t n) {
    if (n > size())
      throw UsageError("cannot drop " + std::to_string(n) + " from a bag of " +
                       std::to_string(size()));
    while (n > 0) {
      auto it = std::prev(lanes_.end());
      if (it->second.empty()) {
        lanes_.erase(it);
        continue;
      }
      std::size_t take = std::min(n, it->second.size());
      it->second.resize(it->second.size() - take);
      if (it->second.empty()) lanes_.erase(it);
      n -= take;
    }
  }

private:
  std::map<unsigned, std::vector<T>> lanes_;
};

template <class T>
void serialize(ByteWriter& w, const Bag<T>& b) {
  w.u64(static_cast<std::uint64_t>(b.size()));
  b.forEach([&](const T& v) { serialize(w, v); });
}

template <class T>
void deserialize(ByteReader& r, Bag<T>& b) {
  b.clear();
  std::uint64_t n = r.u64();
  for (std::uint64_t i = 0; i < n; ++i) {
    T v{};
    deserialize(r, v);
    b.add(std::move(v));
  }
}

}  // namespace rdc

#endif  // RDC_COLLECTIONS_BAG_HPP
