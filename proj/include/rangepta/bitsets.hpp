#pragma once

#include <rangepta/error.hpp>
#include <rangepta/interval.hpp>

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace rangepta {

/// Width of one storage chunk of a ranged bit-vector. Unions proceed one
/// chunk at a time and ranged vectors align their lower bound to a chunk.
struct ChunkConfig {
  unsigned chunkBits = 64;

  static ChunkConfig of(unsigned bits) {
    if (bits != 8 && bits != 16 && bits != 32 && bits != 64) {
      throw Error(ErrorCode::InvalidParams,
                  "chunk width must be one of 8, 16, 32, 64 (got " + std::to_string(bits) + ")");
    }
    return ChunkConfig{bits};
  }

  constexpr std::uint64_t chunkIndexOf(std::uint64_t absIndex) const noexcept {
    return absIndex / chunkBits;
  }
  constexpr unsigned chunkBytes() const noexcept { return chunkBits / 8; }
  constexpr std::uint64_t chunkMask() const noexcept {
    return chunkBits == 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << chunkBits) - 1);
  }

  friend constexpr bool operator==(const ChunkConfig&, const ChunkConfig&) = default;
};

constexpr std::uint64_t chunkIndexOf(std::uint64_t absIndex, ChunkConfig cfg) noexcept {
  return cfg.chunkIndexOf(absIndex);
}

/// First and last absolute chunk touched by a non-empty interval.
struct ChunkRange {
  std::uint64_t first = 0;
  std::uint64_t last = 0;

  constexpr std::uint64_t count() const noexcept { return last - first + 1; }
  friend constexpr bool operator==(const ChunkRange&, const ChunkRange&) = default;
};

constexpr ChunkRange chunkRangeOf(const Interval& iv, ChunkConfig cfg) noexcept {
  return ChunkRange{cfg.chunkIndexOf(iv.lower), cfg.chunkIndexOf(iv.upper)};
}

// ---------------------------------------------------------------------------
// PlainBitVector

/// Unranged bit-vector over allocation indices 1..universe. Index i lives at
/// bit i; bit 0 is never set.
class PlainBitVector {
 public:
  PlainBitVector() = default;
  explicit PlainBitVector(std::uint32_t universe)
      : universe_(universe), words_((std::size_t{universe} + 64) / 64, 0) {}

  std::uint32_t universe() const noexcept { return universe_; }
  std::span<const std::uint64_t> words() const noexcept { return words_; }

  bool test(std::uint32_t index) const noexcept {
    if (index == 0 || index > universe_) return false;
    return (words_[index / 64] >> (index % 64)) & 1u;
  }

  bool set(std::uint32_t index) {
    if (index == 0 || index > universe_) {
      throw Error(ErrorCode::IndexOutOfRange, "index " + std::to_string(index) +
                                                  " outside [1," + std::to_string(universe_) + "]");
    }
    std::uint64_t& w = words_[index / 64];
    const std::uint64_t bit = std::uint64_t{1} << (index % 64);
    const bool changed = (w & bit) == 0;
    w |= bit;
    return changed;
  }

  bool orWith(const PlainBitVector& other) {
    checkUniverse(other);
    std::uint64_t changed = 0;
    for (std::size_t i = 0; i < words_.size(); ++i) {
      const std::uint64_t incoming = other.words_[i] & ~words_[i];
      changed |= incoming;
      words_[i] |= incoming;
    }
    return changed != 0;
  }

  /// this |= (src & mask); the masked union of the type-mask baseline.
  bool orMasked(const PlainBitVector& src, const PlainBitVector& mask) {
    checkUniverse(src);
    checkUniverse(mask);
    std::uint64_t changed = 0;
    for (std::size_t i = 0; i < words_.size(); ++i) {
      const std::uint64_t incoming = src.words_[i] & mask.words_[i] & ~words_[i];
      changed |= incoming;
      words_[i] |= incoming;
    }
    return changed != 0;
  }

  bool isSubsetOf(const PlainBitVector& other) const {
    checkUniverse(other);
    for (std::size_t i = 0; i < words_.size(); ++i) {
      if (words_[i] & ~other.words_[i]) return false;
    }
    return true;
  }

  std::size_t count() const noexcept {
    std::size_t n = 0;
    for (std::uint64_t w : words_) n += static_cast<std::size_t>(std::popcount(w));
    return n;
  }

  bool none() const noexcept {
    return std::all_of(words_.begin(), words_.end(), [](std::uint64_t w) { return w == 0; });
  }

  /// True iff any bit with absolute position in [lo, hiExclusive) is set.
  bool anySetIn(std::uint64_t lo, std::uint64_t hiExclusive) const noexcept {
    hiExclusive = std::min<std::uint64_t>(hiExclusive, std::uint64_t{words_.size()} * 64);
    for (std::uint64_t pos = lo; pos < hiExclusive;) {
      const std::uint64_t word = pos / 64;
      const unsigned offset = pos % 64;
      const unsigned take = static_cast<unsigned>(std::min<std::uint64_t>(64 - offset, hiExclusive - pos));
      const std::uint64_t mask = (take == 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << take) - 1)) << offset;
      if (words_[word] & mask) return true;
      pos += take;
    }
    return false;
  }

  template <class Fn>
  void forEach(Fn&& fn) const {
    for (std::size_t i = 0; i < words_.size(); ++i) {
      std::uint64_t w = words_[i];
      while (w != 0) {
        const unsigned bit = static_cast<unsigned>(std::countr_zero(w));
        fn(static_cast<std::uint32_t>(i * 64 + bit));
        w &= w - 1;
      }
    }
  }

  std::size_t hash() const noexcept {
    std::size_t h = universe_;
    for (std::uint64_t w : words_) h = h * 0x9E3779B97F4A7C15ull + std::hash<std::uint64_t>{}(w);
    return h;
  }

  friend bool operator==(const PlainBitVector&, const PlainBitVector&) = default;

 private:
  void checkUniverse(const PlainBitVector& other) const {
    if (other.universe_ != universe_) {
      throw Error(ErrorCode::ConfigMismatch, "bit-vectors over different universes");
    }
  }

  std::uint32_t universe_ = 0;
  std::vector<std::uint64_t> words_;
};

// ---------------------------------------------------------------------------
// Ranged bit-vectors

/// Mutable view of the chunks of one interval. Each std::uint64_t element
/// holds one chunk of `chunkBits` bits; chunk k of the view covers absolute
/// indices [(firstChunk + k) * chunkBits, (firstChunk + k + 1) * chunkBits).
struct RangedSpan {
  Interval interval;
  unsigned chunkBits = 64;
  std::uint64_t firstChunk = 0;
  std::span<std::uint64_t> chunks;
};

struct ConstRangedSpan {
  Interval interval;
  unsigned chunkBits = 64;
  std::uint64_t firstChunk = 0;
  std::span<const std::uint64_t> chunks;

  ConstRangedSpan() = default;
  ConstRangedSpan(Interval iv, unsigned bits, std::uint64_t first, std::span<const std::uint64_t> c)
      : interval(iv), chunkBits(bits), firstChunk(first), chunks(c) {}
  ConstRangedSpan(const RangedSpan& s)  // NOLINT(google-explicit-constructor)
      : interval(s.interval), chunkBits(s.chunkBits), firstChunk(s.firstChunk), chunks(s.chunks) {}
};

/// Chunk-aligned union of `y` into `x`. Only nested intervals are combined:
/// the chunks common to both aligned spans are OR-ed together, which may
/// admit members of `y` that fall in `x`'s slack (inside x's aligned span
/// but outside x's interval). Disjoint intervals leave `x` unchanged.
/// Returns true iff any chunk of `x` changed.
inline bool rangedOr(RangedSpan x, ConstRangedSpan y) {
  if (x.chunkBits != y.chunkBits) {
    throw Error(ErrorCode::ConfigMismatch, "ranged bit-vectors use different chunk widths (" +
                                               std::to_string(x.chunkBits) + " vs " +
                                               std::to_string(y.chunkBits) + ")");
  }
  const ChunkConfig cfg{x.chunkBits};
  std::uint64_t firstX = 0;
  std::uint64_t firstY = 0;
  std::uint64_t commonChunks = 0;
  if (y.interval.isSubrangeOf(x.interval)) {
    // Every chunk of y has a counterpart in x.
    const std::uint64_t lowChunk = cfg.chunkIndexOf(y.interval.lower);
    const std::uint64_t highChunk = cfg.chunkIndexOf(y.interval.upper);
    firstY = 0;
    firstX = lowChunk - x.firstChunk;
    commonChunks = highChunk - lowChunk + 1;
  } else if (x.interval.isSubrangeOf(y.interval)) {
    const std::uint64_t lowChunk = cfg.chunkIndexOf(x.interval.lower);
    const std::uint64_t highChunk = cfg.chunkIndexOf(x.interval.upper);
    firstX = 0;
    firstY = lowChunk - y.firstChunk;
    commonChunks = highChunk - lowChunk + 1;
  } else {
    return false;
  }
  std::uint64_t changed = 0;
  for (std::uint64_t k = 0; k < commonChunks; ++k) {
    std::uint64_t& dst = x.chunks[firstX + k];
    const std::uint64_t incoming = y.chunks[firstY + k] & ~dst;
    changed |= incoming;
    dst |= incoming;
  }
  return changed != 0;
}

template <class Fn>
void forEachInChunks(std::uint64_t firstChunk, unsigned chunkBits, std::span<const std::uint64_t> chunks,
                     Fn&& fn) {
  for (std::size_t k = 0; k < chunks.size(); ++k) {
    std::uint64_t c = chunks[k];
    const std::uint64_t base = (firstChunk + k) * chunkBits;
    while (c != 0) {
      const unsigned bit = static_cast<unsigned>(std::countr_zero(c));
      fn(static_cast<std::uint32_t>(base + bit));
      c &= c - 1;
    }
  }
}

/// Bit-vector over one interval, stored relative to the interval's
/// chunk-aligned lower bound.
class RangedBitVector {
 public:
  RangedBitVector(Interval interval, ChunkConfig cfg) : interval_(interval), cfg_(cfg) {
    if (!interval_.empty()) {
      const ChunkRange range = chunkRangeOf(interval_, cfg_);
      firstChunk_ = range.first;
      chunks_.assign(range.count(), 0);
    }
  }

  const Interval& interval() const noexcept { return interval_; }
  ChunkConfig config() const noexcept { return cfg_; }
  std::uint64_t alignedLower() const noexcept { return firstChunk_ * cfg_.chunkBits; }
  std::size_t chunkCount() const noexcept { return chunks_.size(); }
  std::span<const std::uint64_t> chunks() const noexcept { return chunks_; }

  /// Strictly filtered insertion: indices outside the interval are ignored.
  bool set(std::uint32_t absIndex) {
    if (!interval_.contains(absIndex)) return false;
    const std::uint64_t rel = absIndex - alignedLower();
    std::uint64_t& c = chunks_[rel / cfg_.chunkBits];
    const std::uint64_t bit = std::uint64_t{1} << (rel % cfg_.chunkBits);
    const bool changed = (c & bit) == 0;
    c |= bit;
    return changed;
  }

  bool test(std::uint64_t absIndex) const noexcept {
    if (chunks_.empty() || absIndex < alignedLower()) return false;
    const std::uint64_t rel = absIndex - alignedLower();
    const std::uint64_t chunk = rel / cfg_.chunkBits;
    if (chunk >= chunks_.size()) return false;
    return (chunks_[chunk] >> (rel % cfg_.chunkBits)) & 1u;
  }

  bool orWith(const RangedBitVector& y) {
    if (&y == this) return false;
    return rangedOr(view(), y.view());
  }

  RangedSpan view() noexcept { return RangedSpan{interval_, cfg_.chunkBits, firstChunk_, chunks_}; }
  ConstRangedSpan view() const noexcept {
    return ConstRangedSpan{interval_, cfg_.chunkBits, firstChunk_, chunks_};
  }

  template <class Fn>
  void forEach(Fn&& fn) const {
    forEachInChunks(firstChunk_, cfg_.chunkBits, chunks_, fn);
  }

  std::vector<std::uint32_t> members() const {
    std::vector<std::uint32_t> out;
    forEach([&](std::uint32_t i) { out.push_back(i); });
    return out;
  }

  std::size_t count() const noexcept {
    std::size_t n = 0;
    for (std::uint64_t c : chunks_) n += static_cast<std::size_t>(std::popcount(c));
    return n;
  }

 private:
  Interval interval_;
  ChunkConfig cfg_;
  std::uint64_t firstChunk_ = 0;
  std::vector<std::uint64_t> chunks_;
};

inline RangedBitVector rbvNew(Interval interval, ChunkConfig cfg) { return RangedBitVector(interval, cfg); }
inline bool rbvSet(RangedBitVector& v, std::uint32_t absIndex) { return v.set(absIndex); }
inline bool rbvOr(RangedBitVector& x, const RangedBitVector& y) { return x.orWith(y); }
inline std::vector<std::uint32_t> rbvIterate(const RangedBitVector& v) { return v.members(); }

}  // namespace rangepta
