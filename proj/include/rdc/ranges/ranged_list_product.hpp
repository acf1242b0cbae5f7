#ifndef RDC_RANGES_RANGED_LIST_PRODUCT_HPP
#define RDC_RANGES_RANGED_LIST_PRODUCT_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rdc/errors.hpp"
#include "rdc/parallel/accumulator.hpp"
#include "rdc/parallel/parallel.hpp"
#include "rdc/ranges/chunked_list.hpp"
#include "rdc/ranges/long_range.hpp"
#include "rdc/rng.hpp"
#include "rdc/runtime/teamed_place_group.hpp"

namespace rdc {

/// Row handed to a product body: the element plus its global index, which the
/// body needs to address accumulator cells.
template <class S>
struct ProductRow {
  std::int64_t index;
  S& value;
};

/// The set of index pairs drawn from two chunked lists, optionally restricted
/// to the upper triangle (i < j, diagonal excluded) when both sides are the
/// same list. A fresh product holds one tile spanning everything; teamedSplit
/// grids it and keeps this rank's deterministic share. Pairs range over
/// elements actually present in the backing lists, which the product
/// references without owning: keep the lists alive and structurally unchanged
/// while iterating.
template <class S, class T = S>
class RangedListProduct {
public:
  struct Tile {
    LongRange rows, cols;
    bool operator==(const Tile&) const = default;
  };

  /// The columns one row pairs with, already clipped to the triangle. Walks
  /// only elements present in the backing list.
  class ColumnView {
  public:
    ColumnView(ChunkedList<T>* list, LongRange r) : list_(list), r_(r) {}

    LongRange range() const { return r_; }

    void forEach(auto&& visitor) const {
      auto& m = list_->chunks();
      auto it = m.upper_bound(r_.from);
      if (it != m.begin()) --it;
      for (; it != m.end() && it->second.range.from < r_.to; ++it) {
        LongRange ov = it->second.range.intersection(r_);
        for (std::int64_t j = ov.from; j < ov.to; ++j) visitor(j, it->second.raw(j));
      }
    }

  private:
    ChunkedList<T>* list_;
    LongRange r_;
  };

  RangedListProduct(ChunkedList<S>& rowList, ChunkedList<T>& colList, LongRange rows,
                    LongRange cols, bool triangle)
      : rowList_(&rowList), colList_(&colList), rows_(rows), cols_(cols), triangle_(triangle) {
    tiles_.push_back(Tile{rows_, cols_});
  }

  LongRange rows() const { return rows_; }
  LongRange cols() const { return cols_; }
  bool isTriangle() const { return triangle_; }
  const std::vector<Tile>& ownedTiles() const { return tiles_; }

  /// Number of (i, j) pairs the global product represents over its spans.
  std::int64_t globalPairCount() const {
    if (triangle_) {
      std::int64_t n = rows_.size();
      return n * (n - 1) / 2;
    }
    return rows_.size() * cols_.size();
  }

  /// Grids the global product nRows x nCols and returns the share owned here.
  /// Deterministic given identical (grid, group, seed) on every member: tiles
  /// that contain at least one pair are enumerated row-major and dealt
  /// round-robin from a seed-derived rotation offset, so each tile lands on
  /// exactly one rank and shares differ by at most one tile. No communication
  /// happens; the teamed contract is that all members pass the same inputs.
  RangedListProduct teamedSplit(int nRows, int nCols, const TeamedPlaceGroup& g,
                                std::uint64_t seed) const {
    if (nRows < 1 || nCols < 1)
      throw UsageError("product split needs a grid of at least 1x1, got " +
                       std::to_string(nRows) + "x" + std::to_string(nCols));
    std::vector<Tile> grid;
    for (int rb = 0; rb < nRows; ++rb) {
      LongRange rr = band(rows_, rb, nRows);
      if (rr.empty()) continue;
      for (int cb = 0; cb < nCols; ++cb) {
        LongRange cc = band(cols_, cb, nCols);
        if (cc.empty()) continue;
        // a tile at or below the diagonal may still hold pairs above it
        if (triangle_ && cc.to <= rr.from + 1) continue;
        grid.push_back(Tile{rr, cc});
      }
    }
    std::uint64_t offset = SplitMix64(seed).nextBelow(static_cast<std::uint64_t>(g.size()));
    int me = g.myRank();
    RangedListProduct out(*this);
    out.tiles_.clear();
    for (std::size_t k = 0; k < grid.size(); ++k)
      if (static_cast<int>((k + offset) % static_cast<std::uint64_t>(g.size())) == me)
        out.tiles_.push_back(grid[k]);
    return out;
  }

  /// Runs body once per owned (tile, row) that pairs with at least one
  /// column, giving it the row, the clipped column view, and the calling
  /// worker's accumulator block. Rows split contiguously across workers;
  /// failures are collected and rethrown together after all workers stop.
  template <class A>
  void parallelForEachRow(Accumulator<A>& acc, auto&& body, unsigned workers = 0) {
    struct Unit {
      std::int64_t row;
      S* el;
      LongRange cols;
    };
    std::vector<Unit> units;
    for (const Tile& t : tiles_) {
      auto& m = rowList_->chunks();
      auto it = m.upper_bound(t.rows.from);
      if (it != m.begin()) --it;
      for (; it != m.end() && it->second.range.from < t.rows.to; ++it) {
        LongRange rr = it->second.range.intersection(t.rows);
        for (std::int64_t i = rr.from; i < rr.to; ++i) {
          LongRange cc = clipCols(t.cols, i);
          if (!cc.empty()) units.push_back(Unit{i, &it->second.raw(i), cc});
        }
      }
    }
    std::uint64_t rv = rowList_->structuralVersion();
    std::uint64_t cv = colList_->structuralVersion();
    unsigned W = par::resolveWorkers(workers);
    par::runWorkers(W, [&](unsigned w) {
      auto [lo, hi] = par::slice(units.size(), w, W);
      if (lo == hi) return;
      auto& blk = acc.block(w);
      for (std::size_t k = lo; k < hi; ++k) {
        ColumnView view(colList_, units[k].cols);
        body(ProductRow<S>{units[k].row, *units[k].el}, view, blk);
      }
    });
    if (rowList_->structuralVersion() != rv || colList_->structuralVersion() != cv)
      throw UsageError("chunked list structurally modified during a parallel region");
  }

  /// Sequential walk of every owned pair; the brute-force face of the product
  /// used by oracles and small jobs.
  void forEachOwnedPair(auto&& visitor) const {
    for (const Tile& t : tiles_) {
      auto& m = rowList_->chunks();
      auto it = m.upper_bound(t.rows.from);
      if (it != m.begin()) --it;
      for (; it != m.end() && it->second.range.from < t.rows.to; ++it) {
        LongRange rr = it->second.range.intersection(t.rows);
        for (std::int64_t i = rr.from; i < rr.to; ++i) {
          LongRange cc = clipCols(t.cols, i);
          if (!cc.empty()) ColumnView(colList_, cc).forEach([&](std::int64_t j, T&) {
            visitor(i, j);
          });
        }
      }
    }
  }

private:
  LongRange clipCols(const LongRange& cols, std::int64_t row) const {
    if (!triangle_) return cols;
    std::int64_t lo = cols.from > row + 1 ? cols.from : row + 1;
    return lo < cols.to ? LongRange{lo, cols.to} : LongRange{cols.to, cols.to};
  }

  static LongRange band(const LongRange& r, int k, int n) {
    std::int64_t sz = r.size();
    return LongRange{r.from + sz * k / n, r.from + sz * (k + 1) / n};
  }

  ChunkedList<S>* rowList_;
  ChunkedList<T>* colList_;
  LongRange rows_, cols_;
  bool triangle_;
  std::vector<Tile> tiles_;
};

/// Product of a list with itself keeping only (i, j) with i < j: each
/// unordered pair of distinct elements appears exactly once.
template <class T>
RangedListProduct<T, T> newProductTriangle(ChunkedList<T>& a) {
  if (a.empty()) throw UsageError("cannot build a product over an empty list");
  std::vector<LongRange> rs = a.ranges();
  LongRange span{rs.front().from, rs.back().to};
  return RangedListProduct<T, T>(a, a, span, span, true);
}

/// Full cross product of two lists.
template <class S, class T>
RangedListProduct<S, T> newProduct(ChunkedList<S>& a, ChunkedList<T>& b) {
  if (a.empty() || b.empty()) throw UsageError("cannot build a product over an empty list");
  std::vector<LongRange> ra = a.ranges(), rb = b.ranges();
  return RangedListProduct<S, T>(a, b, LongRange{ra.front().from, ra.back().to},
                                 LongRange{rb.front().from, rb.back().to}, false);
}

}  // namespace rdc

#endif  // RDC_RANGES_RANGED_LIST_PRODUCT_HPP
