#ifndef RDC_PARALLEL_PARALLEL_HPP
#define RDC_PARALLEL_PARALLEL_HPP

#include <concepts>
#include <cstdint>
#include <functional>
#include <map>
#include <utility>
#include <vector>

#include "rdc/collections/bag.hpp"
#include "rdc/errors.hpp"
#include "rdc/parallel/accumulator.hpp"
#include "rdc/ranges/chunked_list.hpp"
#include "rdc/runtime/api.hpp"

namespace rdc {

/// A reduction recipe: fresh instances per worker, elementwise fold, and an
/// associative merge of instances.
template <class R, class T>
concept ReducerFor = requires(R r, R other, T& t) {
  { r.newReducer() } -> std::convertible_to<R>;
  r.reduce(t);
  r.merge(other);
};

namespace par {

struct Slice {
  std::size_t lo, hi;
};

/// Contiguous near-equal partition of n positions for worker w of W.
inline Slice slice(std::size_t n, unsigned w, unsigned W) {
  return {n * w / W, n * (w + 1) / W};
}

/// The place's configured worker count, the default width of a region.
inline unsigned placeWorkers() { return detail::currentPlace().pool().target(); }

inline unsigned resolveWorkers(unsigned requested) {
  return requested == 0 ? placeWorkers() : requested;
}

/// Runs job(0..W-1) as local activities and blocks until all complete;
/// failures aggregate (siblings are not cancelled).
inline void runWorkers(unsigned W, const std::function<void(unsigned)>& job) {
  finish([&] {
    for (unsigned w = 0; w < W; ++w) async([&job, w] { job(w); });
  });
}

/// Element pointers in ascending index order; the flat position space that
/// contiguous partitioning applies to.
template <class T>
std::vector<T*> flatten(ChunkedList<T>& cl) {
  std::vector<T*> out;
  out.reserve(static_cast<std::size_t>(cl.size()));
  cl.forEach([&](T& t) { out.push_back(&t); });
  return out;
}

template <class T>
std::vector<const T*> flatten(const ChunkedList<T>& cl) {
  std::vector<const T*> out;
  out.reserve(static_cast<std::size_t>(cl.size()));
  cl.forEach([&](const T& t) { out.push_back(&t); });
  return out;
}

template <class T>
std::vector<std::pair<std::int64_t, T*>> flattenIndexed(ChunkedList<T>& cl) {
  std::vector<std::pair<std::int64_t, T*>> out;
  out.reserve(static_cast<std::size_t>(cl.size()));
  cl.forEachIndexed([&](std::int64_t i, T& t) { out.emplace_back(i, &t); });
  return out;
}

/// Exactly-once application of body over a pointer set, contiguous slices.
template <class P, class Body>
void overPointers(std::vector<P>& ptrs, unsigned workers, Body&& body) {
  unsigned W = resolveWorkers(workers);
  runWorkers(W, [&](unsigned w) {
    auto [lo, hi] = slice(ptrs.size(), w, W);
    for (std::size_t i = lo; i < hi; ++i) body(w, ptrs[i]);
  });
}

/// Per-worker fresh reducers over contiguous slices, merged ascending.
template <class P, class R>
R reduceOverPointers(const std::vector<P>& ptrs, const R& proto, unsigned workers) {
  unsigned W = resolveWorkers(workers);
  std::vector<R> partials;
  partials.reserve(W);
  for (unsigned w = 0; w < W; ++w) partials.push_back(proto.newReducer());
  runWorkers(W, [&](unsigned w) {
    auto [lo, hi] = slice(ptrs.size(), w, W);
    for (std::size_t i = lo; i < hi; ++i) partials[w].reduce(*ptrs[i]);
  });
  R result = proto.newReducer();
  for (unsigned w = 0; w < W; ++w) result.merge(partials[w]);
  return result;
}

}  // namespace par

template <class T, class Body>
void parallelForEach(ChunkedList<T>& cl, Body&& body, unsigned workers = 0) {
  std::uint64_t v0 = cl.structuralVersion();
  auto ptrs = par::flatten(cl);
  par::overPointers(ptrs, workers, [&](unsigned, T* t) { body(*t); });
  if (cl.structuralVersion() != v0)
    throw UsageError("chunked list structurally modified during a parallel region");
}

template <class T, class R>
  requires ReducerFor<R, const T>
R parallelReduce(const ChunkedList<T>& cl, R proto, unsigned workers = 0) {
  std::uint64_t v0 = cl.structuralVersion();
  auto ptrs = par::flatten(cl);
  R result = par::reduceOverPointers(ptrs, proto, workers);
  if (cl.structuralVersion() != v0)
    throw UsageError("chunked list structurally modified during a parallel region");
  return result;
}

template <class T, class R>
  requires ReducerFor<R, const T>
R parallelReduce(const Bag<T>& b, R proto, unsigned workers = 0) {
  std::vector<const T*> ptrs;
  ptrs.reserve(b.size());
  b.forEach([&](const T& t) { ptrs.push_back(&t); });
  return par::reduceOverPointers(ptrs, proto, workers);
}

/// Reduction over a map's values in key order.
template <class K, class V, class R>
  requires ReducerFor<R, const V>
R parallelReduceValues(const std::map<K, V>& m, R proto, unsigned workers = 0) {
  std::vector<const V*> ptrs;
  ptrs.reserve(m.size());
  for (const auto& [k, v] : m) ptrs.push_back(&v);
  return par::reduceOverPointers(ptrs, proto, workers);
}

/// body(element, collector): emissions land in per-worker receiving lanes of
/// out, so no two workers ever share a sink.
template <class T, class U, class Body>
void parallelToBag(ChunkedList<T>& cl, Bag<U>& out, Body&& body, unsigned workers = 0) {
  std::uint64_t v0 = cl.structuralVersion();
  auto ptrs = par::flatten(cl);
  unsigned W = par::resolveWorkers(workers);
  std::vector<typename Bag<U>::Collector> collectors;
  collectors.reserve(W);
  for (unsigned w = 0; w < W; ++w) collectors.push_back(out.collector(w));
  par::runWorkers(W, [&](unsigned w) {
    auto [lo, hi] = par::slice(ptrs.size(), w, W);
    for (std::size_t i = lo; i < hi; ++i) body(*ptrs[i], collectors[w]);
  });
  if (cl.structuralVersion() != v0)
    throw UsageError("chunked list structurally modified during a parallel region");
}

/// body(element, block-cell) applied for every accumulation cell that exists
/// at the element's index: blocks in ascending worker order. Elements are
/// partitioned across workers, so each element is finalized by one worker.
template <class T, class A, class Body>
void parallelAccept(ChunkedList<T>& cl, Accumulator<A>& acc, Body&& body, unsigned workers = 0) {
  if (acc.consumed())
    throw UsageError("accumulator already consumed by parallelAccept; call reset() first");
  std::uint64_t v0 = cl.structuralVersion();
  auto ptrs = par::flattenIndexed(cl);
  unsigned W = par::resolveWorkers(workers);
  par::runWorkers(W, [&](unsigned w) {
    auto [lo, hi] = par::slice(ptrs.size(), w, W);
    for (std::size_t p = lo; p < hi; ++p) {
      auto [i, t] = ptrs[p];
      acc.forEachCellIn(i, i + 1, [&](unsigned, std::int64_t, const A& a) { body(*t, a); });
    }
  });
  acc.markConsumed();
  if (cl.structuralVersion() != v0)
    throw UsageError("chunked list structurally modified during a parallel region");
}

}  // namespace rdc

#endif  // RDC_PARALLEL_PARALLEL_HPP
