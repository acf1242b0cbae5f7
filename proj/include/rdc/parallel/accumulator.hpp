#ifndef RDC_PARALLEL_ACCUMULATOR_HPP
#define RDC_PARALLEL_ACCUMULATOR_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "rdc/errors.hpp"
#include "rdc/ranges/long_range.hpp"

namespace rdc {

/// Per-worker accumulation blocks over an index range. A worker acquires its
/// block once and then writes without synchronization; no block is ever
/// shared between workers. Two allocation policies:
///  - CompleteRange: acquiring a block materializes one A per index of the
///    covered range up front (dense array, cheap hot-loop writes);
///  - Sparse: cells come into being per (worker, index) on first write.
enum class AccPolicy { CompleteRange, Sparse };

template <class A>
class Accumulator {
public:
  Accumulator(LongRange covered, std::function<A(std::int64_t)> factory,
              AccPolicy policy = AccPolicy::CompleteRange)
      : covered_(covered), factory_(std::move(factory)), policy_(policy) {}

  /// Dense or sparse view a single worker writes through.
  class Block {
  public:
    A& at(std::int64_t i) {
      if (!owner_->covered_.contains(i))
        throw RangeError("accumulator index " + std::to_string(i) + " outside covered range " +
                         owner_->covered_.toString());
      if (dense_) return (*dense_)[static_cast<std::size_t>(i - owner_->covered_.from)];
      auto it = cells_.find(i);
      if (it == cells_.end()) it = cells_.emplace(i, owner_->factory_(i)).first;
      return it->second;
    }

  private:
    friend class Accumulator;
    Accumulator* owner_ = nullptr;
    std::vector<A>* dense_ = nullptr;  // CompleteRange storage
    std::map<std::int64_t, A> cells_;  // Sparse storage
  };

  LongRange coveredRange() const { return covered_; }
  AccPolicy policy() const { return policy_; }

  /// Worker w's block, created on first acquisition. Thread-safe; intended to
  /// be called once per worker per accumulation phase.
  Block& block(unsigned worker) {
    std::lock_guard lock(m_);
    if (consumed_)
      throw UsageError("accumulator already consumed by parallelAccept; call reset() first");
    auto it = blocks_.find(worker);
    if (it == blocks_.end()) {
      auto b = std::make_unique<Block>();
      b->owner_ = this;
      if (policy_ == AccPolicy::CompleteRange) {
        auto dense = std::make_unique<std::vector<A>>();
        dense->reserve(static_cast<std::size_t>(covered_.size()));
        for (std::int64_t i = covered_.from; i < covered_.to; ++i) dense->push_back(factory_(i));
        denseStores_.push_back(std::move(dense));
        b->dense_ = denseStores_.back().get();
      }
      it = blocks_.emplace(worker, std::move(b)).first;
    }
    return *it->second;
  }

  /// Visits every materialized (index, cell) pair: blocks in ascending worker
  /// order, indices ascending within a block. CompleteRange blocks expose
  /// every covered index.
  void forEachCell(auto&& visitor) const {
    for (const auto& [w, b] : blocks_) {
      if (b->dense_) {
        std::int64_t i = covered_.from;
        for (const A& a : *b->dense_) visitor(w, i++, a);
      } else {
        for (const auto& [i, a] : b->cells_) visitor(w, i, a);
      }
    }
  }

  /// Restricted sweep used by parallelAccept: only indices in [lo, hi).
  void forEachCellIn(std::int64_t lo, std::int64_t hi, auto&& visitor) const {
    for (const auto& [w, b] : blocks_) {
      if (b->dense_) {
        std::int64_t a = std::max(lo, covered_.from);
        std::int64_t z = std::min(hi, covered_.to);
        for (std::int64_t i = a; i < z; ++i)
          visitor(w, i, (*b->dense_)[static_cast<std::size_t>(i - covered_.from)]);
      } else {
        for (auto it = b->cells_.lower_bound(lo); it != b->cells_.end() && it->first < hi; ++it)
          visitor(w, it->first, it->second);
      }
    }
  }

  bool anyBlock() const { return !blocks_.empty(); }

  void markConsumed() { consumed_ = true; }
  bool consumed() const { return consumed_; }

  /// Drops all blocks and re-arms the accumulator for another phase.
  void reset() {
    std::lock_guard lock(m_);
    blocks_.clear();
    denseStores_.clear();
    consumed_ = false;
  }

private:
  LongRange covered_;
  std::function<A(std::int64_t)> factory_;
  AccPolicy policy_;
  std::mutex m_;
  std::map<unsigned, std::unique_ptr<Block>> blocks_;
  std::vector<std::unique_ptr<std::vector<A>>> denseStores_;
  bool consumed_ = false;
};

}  // namespace rdc

#endif  // RDC_PARALLEL_ACCUMULATOR_HPP
