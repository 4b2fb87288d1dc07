#pragma once

#include <rangepta/bitsets.hpp>
#include <rangepta/error.hpp>
#include <rangepta/hierarchy.hpp>

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <list>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

namespace rangepta {

enum class SetKind { Naive, Pure, Hybrid, Shared, Sparse, Ranged, RangedHybrid };

inline constexpr std::array<SetKind, 7> kAllSetKinds{SetKind::Naive,  SetKind::Pure,   SetKind::Hybrid,
                                                     SetKind::Shared, SetKind::Sparse, SetKind::Ranged,
                                                     SetKind::RangedHybrid};

inline std::string_view toString(SetKind kind) {
  switch (kind) {
    case SetKind::Naive: return "naive";
    case SetKind::Pure: return "pure";
    case SetKind::Hybrid: return "hybrid";
    case SetKind::Shared: return "shared";
    case SetKind::Sparse: return "sparse";
    case SetKind::Ranged: return "ranged";
    case SetKind::RangedHybrid: return "ranged-hybrid";
  }
  return "?";
}

inline SetKind parseSetKind(std::string_view name) {
  for (SetKind k : kAllSetKinds) {
    if (toString(k) == name) return k;
  }
  throw Error(ErrorCode::InvalidParams, "unknown set kind '" + std::string(name) + "'");
}

constexpr bool isRangedKind(SetKind kind) noexcept {
  return kind == SetKind::Ranged || kind == SetKind::RangedHybrid;
}

/// Deterministic byte model used for all footprint figures.
struct MemoryModel {
  static constexpr std::size_t objectHeader = 16;
  static constexpr std::size_t arrayHeader = 16;
  static constexpr std::size_t refSlot = 8;
};

inline constexpr std::size_t kHybridInlineCapacity = 16;
inline constexpr std::size_t kSharedOverflowCapacity = 20;
inline constexpr std::size_t kSparseElementWords = 8;
inline constexpr std::size_t kSparseElementBits = kSparseElementWords * 64;

// ---------------------------------------------------------------------------
// Ranged layouts

/// Storage plan of a ranged points-to set for one owner type. Intervals whose
/// aligned chunk spans share a chunk are backed by one segment, so every
/// absolute chunk is stored at most once per set.
struct RangedLayout {
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  ChunkConfig cfg;
  std::vector<Interval> intervals;
  std::vector<ChunkRange> segments;
  std::vector<std::uint64_t> segmentOffset;
  std::vector<std::uint32_t> intervalSegment;
  std::uint64_t totalChunks = 0;

  RangedLayout(std::vector<Interval> ivs, ChunkConfig c) : cfg(c) {
    std::erase_if(ivs, [](const Interval& iv) { return iv.empty(); });
    std::sort(ivs.begin(), ivs.end(), [](const Interval& a, const Interval& b) { return a.lower < b.lower; });
    intervals = std::move(ivs);
    for (const Interval& iv : intervals) {
      const ChunkRange r = chunkRangeOf(iv, cfg);
      if (!segments.empty() && r.first <= segments.back().last) {
        segments.back().last = std::max(segments.back().last, r.last);
      } else {
        segments.push_back(r);
      }
      intervalSegment.push_back(static_cast<std::uint32_t>(segments.size() - 1));
    }
    for (const ChunkRange& s : segments) {
      segmentOffset.push_back(totalChunks);
      totalChunks += s.count();
    }
  }

  std::size_t findInterval(std::uint32_t index) const noexcept {
    auto it = std::upper_bound(intervals.begin(), intervals.end(), index,
                               [](std::uint32_t i, const Interval& iv) { return i < iv.lower; });
    if (it == intervals.begin()) return npos;
    --it;
    return it->contains(index) ? static_cast<std::size_t>(it - intervals.begin()) : npos;
  }

  /// Position of an absolute chunk in the flat storage, or npos when no
  /// segment covers it.
  std::size_t storagePos(std::uint64_t absChunk) const noexcept {
    auto it = std::upper_bound(segments.begin(), segments.end(), absChunk,
                               [](std::uint64_t c, const ChunkRange& r) { return c < r.first; });
    if (it == segments.begin()) return npos;
    --it;
    if (absChunk > it->last) return npos;
    const std::size_t seg = static_cast<std::size_t>(it - segments.begin());
    return static_cast<std::size_t>(segmentOffset[seg] + (absChunk - it->first));
  }

  bool inSpan(std::uint32_t index) const noexcept { return storagePos(cfg.chunkIndexOf(index)) != npos; }

  bool isSlack(std::uint32_t index) const noexcept {
    return inSpan(index) && findInterval(index) == npos;
  }
};

/// Absolute chunks through which a chunk-aligned union of a `src`-typed set
/// into a `dst`-typed set can move bits: for every nested (dst, src) interval
/// pair, the chunk span of the inner interval. Sorted and merged.
inline std::vector<ChunkRange> buildTransferPlan(const RangedLayout& dst, const RangedLayout& src) {
  std::vector<ChunkRange> ranges;
  for (const Interval& dv : dst.intervals) {
    for (const Interval& sv : src.intervals) {
      if (sv.isSubrangeOf(dv)) {
        ranges.push_back(chunkRangeOf(sv, dst.cfg));
      } else if (dv.isSubrangeOf(sv)) {
        ranges.push_back(chunkRangeOf(dv, dst.cfg));
      }
    }
  }
  std::sort(ranges.begin(), ranges.end(), [](const ChunkRange& a, const ChunkRange& b) { return a.first < b.first; });
  std::vector<ChunkRange> merged;
  for (const ChunkRange& r : ranges) {
    if (!merged.empty() && r.first <= merged.back().last + 1) {
      merged.back().last = std::max(merged.back().last, r.last);
    } else {
      merged.push_back(r);
    }
  }
  return merged;
}

inline bool planCovers(std::span<const ChunkRange> plan, std::uint64_t absChunk) noexcept {
  auto it = std::upper_bound(plan.begin(), plan.end(), absChunk,
                             [](std::uint64_t c, const ChunkRange& r) { return c < r.first; });
  if (it == plan.begin()) return false;
  --it;
  return absChunk <= it->last;
}

// ---------------------------------------------------------------------------
// SetContext

/// Per-run tables shared by all sets: type masks, compatibility vectors for
/// the naive oracle, ranged layouts (the interval queries of the allocation
/// node manager), and the intern table of shared bit-vector bases.
class SetContext {
 public:
  SetContext(const ClassHierarchy& h, const NumberingResult& nr, ChunkConfig cfg)
      : h_(&h), nr_(&nr), cfg_(cfg), masks_(h.typeCount()), compat_(h.typeCount()), layouts_(h.typeCount()) {}

  SetContext(const SetContext&) = delete;
  SetContext& operator=(const SetContext&) = delete;

  const ClassHierarchy& hierarchy() const noexcept { return *h_; }
  const NumberingResult& numbering() const noexcept { return *nr_; }
  ChunkConfig chunk() const noexcept { return cfg_; }
  std::uint32_t universe() const noexcept { return nr_->totalAllocs(); }

  const PlainBitVector& maskOf(TypeId t) {
    checkType(t);
    auto& slot = masks_[t.value];
    if (!slot) slot = std::make_unique<PlainBitVector>(buildTypeMask(*nr_, *h_, t).bits);
    return *slot;
  }

  const std::vector<bool>& compatOf(TypeId t) {
    checkType(t);
    auto& slot = compat_[t.value];
    if (!slot) {
      slot = std::make_unique<std::vector<bool>>(std::size_t{universe()} + 1, false);
      for (std::uint32_t i = 1; i <= universe(); ++i) (*slot)[i] = h_->isSubtype(nr_->typeAt(i), t);
    }
    return *slot;
  }

  const RangedLayout& layoutOf(TypeId t) {
    checkType(t);
    auto& slot = layouts_[t.value];
    if (!slot) slot = std::make_unique<RangedLayout>(intervalsOf(*nr_, *h_, t), cfg_);
    return *slot;
  }

  const std::vector<ChunkRange>& transferPlan(const RangedLayout& dst, const RangedLayout& src) {
    auto key = std::make_pair(&dst, &src);
    auto it = plans_.find(key);
    if (it == plans_.end()) it = plans_.emplace(key, buildTransferPlan(dst, src)).first;
    return it->second;
  }

  /// Returns the canonical shared instance with the same content.
  std::shared_ptr<const PlainBitVector> intern(PlainBitVector&& bits) {
    auto& bucket = interned_[bits.hash()];
    for (const auto& existing : bucket) {
      if (*existing == bits) return existing;
    }
    bucket.push_back(std::make_shared<const PlainBitVector>(std::move(bits)));
    return bucket.back();
  }

  std::size_t internedCount() const noexcept {
    std::size_t n = 0;
    for (const auto& [h, bucket] : interned_) n += bucket.size();
    return n;
  }

 private:
  void checkType(TypeId t) const {
    if (t.value >= h_->typeCount()) {
      throw Error(ErrorCode::UnknownType, "type id " + std::to_string(t.value) + " is not declared");
    }
  }

  const ClassHierarchy* h_;
  const NumberingResult* nr_;
  ChunkConfig cfg_;
  std::vector<std::unique_ptr<PlainBitVector>> masks_;
  std::vector<std::unique_ptr<std::vector<bool>>> compat_;
  std::vector<std::unique_ptr<RangedLayout>> layouts_;
  std::map<std::pair<const RangedLayout*, const RangedLayout*>, std::vector<ChunkRange>> plans_;
  std::unordered_map<std::size_t, std::vector<std::shared_ptr<const PlainBitVector>>> interned_;
};

namespace detail {

inline std::size_t plainChunkCount(std::uint32_t universe, ChunkConfig cfg) {
  return static_cast<std::size_t>(cfg.chunkIndexOf(universe) + 1);
}

inline std::size_t plainVectorBytes(std::uint32_t universe, ChunkConfig cfg) {
  return MemoryModel::objectHeader + MemoryModel::arrayHeader + plainChunkCount(universe, cfg) * cfg.chunkBytes();
}

/// Bytes of the 8-chunk windows of a plain vector that hold no set bit.
inline std::size_t plainZeroWindowBytes(const PlainBitVector& bits, ChunkConfig cfg) {
  const std::size_t chunks = plainChunkCount(bits.universe(), cfg);
  std::size_t saved = 0;
  for (std::size_t w = 0; w * kSparseElementWords < chunks; ++w) {
    const std::size_t firstChunk = w * kSparseElementWords;
    const std::size_t n = std::min(kSparseElementWords, chunks - firstChunk);
    if (!bits.anySetIn(std::uint64_t{firstChunk} * cfg.chunkBits, std::uint64_t{firstChunk + n} * cfg.chunkBits)) {
      saved += n * cfg.chunkBytes();
    }
  }
  return saved;
}

/// Up to 16 members kept sorted, as in hybrid sets before they overflow.
class InlineSlots {
 public:
  std::size_t size() const noexcept { return count_; }
  bool full() const noexcept { return count_ == kHybridInlineCapacity; }
  bool contains(std::uint32_t i) const noexcept { return std::binary_search(begin(), end(), i); }

  /// Caller guarantees capacity and absence.
  void insert(std::uint32_t i) noexcept {
    auto pos = std::lower_bound(slots_.begin(), slots_.begin() + count_, i);
    std::move_backward(pos, slots_.begin() + count_, slots_.begin() + count_ + 1);
    *pos = i;
    ++count_;
  }
  void clear() noexcept { count_ = 0; }

  const std::uint32_t* begin() const noexcept { return slots_.data(); }
  const std::uint32_t* end() const noexcept { return slots_.data() + count_; }

 private:
  std::array<std::uint32_t, kHybridInlineCapacity> slots_{};
  std::size_t count_ = 0;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Representations

/// Exact reference set filtered with the subtype relation directly.
class NaiveSet {
 public:
  NaiveSet(TypeId owner, SetContext& ctx) : owner_(owner), compat_(&ctx.compatOf(owner)) {}

  TypeId owner() const noexcept { return owner_; }
  bool add(std::uint32_t i) { return (*compat_)[i] && members_.insert(i).second; }
  bool addAll(const NaiveSet& src) {
    bool changed = false;
    for (std::uint32_t m : src.members_) changed |= add(m);
    return changed;
  }
  bool contains(std::uint32_t i) const { return members_.contains(i); }
  std::size_t size() const noexcept { return members_.size(); }
  template <class Fn>
  void forEach(Fn&& fn) const {
    for (std::uint32_t m : members_) fn(m);
  }
  std::size_t footprintBytes() const noexcept {
    return MemoryModel::objectHeader + MemoryModel::arrayHeader + members_.size() * MemoryModel::refSlot;
  }

 private:
  TypeId owner_;
  const std::vector<bool>* compat_;
  std::set<std::uint32_t> members_;
};

/// Bit per allocation over the whole universe; unions are AND-ed with the
/// owner's type mask.
class PureBitVectorSet {
 public:
  PureBitVectorSet(TypeId owner, SetContext& ctx)
      : owner_(owner), cfg_(ctx.chunk()), mask_(&ctx.maskOf(owner)), bits_(ctx.universe()) {}

  TypeId owner() const noexcept { return owner_; }
  bool add(std::uint32_t i) { return mask_->test(i) && bits_.set(i); }
  bool addAll(const PureBitVectorSet& src) { return bits_.orMasked(src.bits_, *mask_); }
  bool contains(std::uint32_t i) const noexcept { return bits_.test(i); }
  std::size_t size() const noexcept { return bits_.count(); }
  template <class Fn>
  void forEach(Fn&& fn) const {
    bits_.forEach(fn);
  }
  const PlainBitVector& bits() const noexcept { return bits_; }
  std::size_t footprintBytes() const noexcept { return detail::plainVectorBytes(bits_.universe(), cfg_); }
  std::size_t zeroWindowBytes() const { return detail::plainZeroWindowBytes(bits_, cfg_); }

 private:
  TypeId owner_;
  ChunkConfig cfg_;
  const PlainBitVector* mask_;
  PlainBitVector bits_;
};

/// 16 inline slots, then a masked pure bit-vector.
class HybridSet {
 public:
  HybridSet(TypeId owner, SetContext& ctx)
      : owner_(owner), cfg_(ctx.chunk()), universe_(ctx.universe()), mask_(&ctx.maskOf(owner)) {}

  TypeId owner() const noexcept { return owner_; }
  bool overflowed() const noexcept { return overflow_.has_value(); }

  bool add(std::uint32_t i) {
    if (!mask_->test(i)) return false;
    if (overflow_) return overflow_->set(i);
    if (inline_.contains(i)) return false;
    if (inline_.full()) {
      migrate();
      return overflow_->set(i);
    }
    inline_.insert(i);
    return true;
  }

  bool addAll(const HybridSet& src) {
    if (overflow_) {
      if (src.overflow_) return overflow_->orMasked(*src.overflow_, *mask_);
      bool changed = false;
      for (std::uint32_t m : src.inline_) changed |= mask_->test(m) && overflow_->set(m);
      return changed;
    }
    std::vector<std::uint32_t> incoming;
    const std::size_t room = kHybridInlineCapacity - inline_.size();
    bool tooMany = false;
    src.forEach([&](std::uint32_t m) {
      if (tooMany || !mask_->test(m) || inline_.contains(m)) return;
      incoming.push_back(m);
      tooMany = incoming.size() > room;
    });
    if (incoming.empty()) return false;
    if (!tooMany) {
      for (std::uint32_t m : incoming) inline_.insert(m);
      return true;
    }
    migrate();
    addAll(src);
    return true;
  }

  bool contains(std::uint32_t i) const noexcept { return overflow_ ? overflow_->test(i) : inline_.contains(i); }
  std::size_t size() const noexcept { return overflow_ ? overflow_->count() : inline_.size(); }
  template <class Fn>
  void forEach(Fn&& fn) const {
    if (overflow_) {
      overflow_->forEach(fn);
    } else {
      for (std::uint32_t m : inline_) fn(m);
    }
  }

  std::size_t footprintBytes() const noexcept {
    std::size_t bytes = MemoryModel::objectHeader + (kHybridInlineCapacity + 1) * MemoryModel::refSlot;
    if (overflow_) bytes += detail::plainVectorBytes(universe_, cfg_);
    return bytes;
  }
  std::size_t zeroWindowBytes() const { return overflow_ ? detail::plainZeroWindowBytes(*overflow_, cfg_) : 0; }

 private:
  void migrate() {
    overflow_.emplace(universe_);
    for (std::uint32_t m : inline_) overflow_->set(m);
    inline_.clear();
  }

  TypeId owner_;
  ChunkConfig cfg_;
  std::uint32_t universe_;
  const PlainBitVector* mask_;
  detail::InlineSlots inline_;
  std::optional<PlainBitVector> overflow_;
};

/// Immutable interned base bit-vector plus an overflow list of at most 20
/// members. Folding the overflow produces a fresh interned base.
class SharedBitVectorSet {
 public:
  SharedBitVectorSet(TypeId owner, SetContext& ctx)
      : owner_(owner), ctx_(&ctx), mask_(&ctx.maskOf(owner)) {}

  TypeId owner() const noexcept { return owner_; }
  const std::shared_ptr<const PlainBitVector>& base() const noexcept { return base_; }
  std::span<const std::uint32_t> overflow() const noexcept { return overflow_; }

  bool add(std::uint32_t i) {
    if (!mask_->test(i) || contains(i)) return false;
    if (overflow_.size() < kSharedOverflowCapacity) {
      overflow_.insert(std::lower_bound(overflow_.begin(), overflow_.end(), i), i);
    } else {
      fold({&i, 1});
    }
    return true;
  }

  bool addAll(const SharedBitVectorSet& src) {
    if (!base_ && overflow_.empty() && src.base_ && src.base_->isSubsetOf(*mask_)) {
      // Empty destination: adopt the source base without copying it.
      base_ = src.base_;
      for (std::uint32_t m : src.overflow_) {
        if (mask_->test(m)) overflow_.push_back(m);
      }
      return true;
    }
    std::vector<std::uint32_t> incoming;
    const auto consider = [&](std::uint32_t m) {
      if (mask_->test(m) && !contains(m)) incoming.push_back(m);
    };
    if (src.base_) src.base_->forEach(consider);
    for (std::uint32_t m : src.overflow_) consider(m);
    if (incoming.empty()) return false;
    if (overflow_.size() + incoming.size() <= kSharedOverflowCapacity) {
      overflow_.insert(overflow_.end(), incoming.begin(), incoming.end());
      std::sort(overflow_.begin(), overflow_.end());
    } else {
      fold(incoming);
    }
    return true;
  }

  bool contains(std::uint32_t i) const noexcept {
    return (base_ && base_->test(i)) || std::binary_search(overflow_.begin(), overflow_.end(), i);
  }
  std::size_t size() const noexcept { return (base_ ? base_->count() : 0) + overflow_.size(); }

  template <class Fn>
  void forEach(Fn&& fn) const {
    if (!base_) {
      for (std::uint32_t m : overflow_) fn(m);
      return;
    }
    // Merge the two ascending streams; they are disjoint.
    std::size_t next = 0;
    base_->forEach([&](std::uint32_t m) {
      while (next < overflow_.size() && overflow_[next] < m) fn(overflow_[next++]);
      fn(m);
    });
    while (next < overflow_.size()) fn(overflow_[next++]);
  }

  /// The set's own bytes; the base is accounted once per distinct instance.
  std::size_t footprintBytes() const noexcept {
    return MemoryModel::objectHeader + MemoryModel::refSlot + MemoryModel::arrayHeader +
           overflow_.size() * MemoryModel::refSlot;
  }
  static std::size_t baseBytes(const PlainBitVector& base, ChunkConfig cfg) {
    return detail::plainVectorBytes(base.universe(), cfg);
  }

 private:
  void fold(std::span<const std::uint32_t> extra) {
    PlainBitVector merged = base_ ? *base_ : PlainBitVector(ctx_->universe());
    for (std::uint32_t m : overflow_) merged.set(m);
    for (std::uint32_t m : extra) merged.set(m);
    base_ = ctx_->intern(std::move(merged));
    overflow_.clear();
  }

  TypeId owner_;
  SetContext* ctx_;
  const PlainBitVector* mask_;
  std::shared_ptr<const PlainBitVector> base_;
  std::vector<std::uint32_t> overflow_;
};

/// Sorted linked list of 8-word elements; all-zero elements are never kept.
class SparseBitmapSet {
 public:
  struct Element {
    std::uint32_t block = 0;
    std::array<std::uint64_t, kSparseElementWords> words{};
  };

  SparseBitmapSet(TypeId owner, SetContext& ctx) : owner_(owner), mask_(&ctx.maskOf(owner)) {}

  TypeId owner() const noexcept { return owner_; }
  const std::list<Element>& elements() const noexcept { return elements_; }

  bool add(std::uint32_t i) {
    if (!mask_->test(i)) return false;
    Element& e = elementFor(i / kSparseElementBits, elements_.begin());
    const std::uint32_t rel = i % kSparseElementBits;
    const std::uint64_t bit = std::uint64_t{1} << (rel % 64);
    const bool changed = (e.words[rel / 64] & bit) == 0;
    e.words[rel / 64] |= bit;
    return changed;
  }

  bool addAll(const SparseBitmapSet& src) {
    std::uint64_t changed = 0;
    auto hint = elements_.begin();
    const auto maskWords = mask_->words();
    for (const Element& s : src.elements_) {
      std::array<std::uint64_t, kSparseElementWords> incoming{};
      std::uint64_t any = 0;
      for (std::size_t w = 0; w < kSparseElementWords; ++w) {
        const std::size_t mw = std::size_t{s.block} * kSparseElementWords + w;
        incoming[w] = s.words[w] & (mw < maskWords.size() ? maskWords[mw] : 0);
        any |= incoming[w];
      }
      if (any == 0) continue;
      auto it = findOrInsert(s.block, hint);
      for (std::size_t w = 0; w < kSparseElementWords; ++w) {
        const std::uint64_t fresh = incoming[w] & ~it->words[w];
        changed |= fresh;
        it->words[w] |= fresh;
      }
      hint = std::next(it);
    }
    return changed != 0;
  }

  bool contains(std::uint32_t i) const noexcept {
    const std::uint32_t block = i / static_cast<std::uint32_t>(kSparseElementBits);
    for (const Element& e : elements_) {
      if (e.block == block) {
        const std::uint32_t rel = i % kSparseElementBits;
        return (e.words[rel / 64] >> (rel % 64)) & 1u;
      }
      if (e.block > block) break;
    }
    return false;
  }

  std::size_t size() const noexcept {
    std::size_t n = 0;
    for (const Element& e : elements_) {
      for (std::uint64_t w : e.words) n += static_cast<std::size_t>(std::popcount(w));
    }
    return n;
  }

  template <class Fn>
  void forEach(Fn&& fn) const {
    for (const Element& e : elements_) {
      for (std::size_t w = 0; w < kSparseElementWords; ++w) {
        std::uint64_t bits = e.words[w];
        while (bits != 0) {
          fn(static_cast<std::uint32_t>(e.block * kSparseElementBits + w * 64 +
                                        static_cast<unsigned>(std::countr_zero(bits))));
          bits &= bits - 1;
        }
      }
    }
  }

  static constexpr std::size_t elementBytes() noexcept {
    // header, next link, block index, payload
    return MemoryModel::objectHeader + MemoryModel::refSlot + 8 + kSparseElementWords * 8;
  }
  std::size_t footprintBytes() const noexcept {
    return MemoryModel::objectHeader + elements_.size() * elementBytes();
  }

 private:
  Element& elementFor(std::uint32_t block, std::list<Element>::iterator hint) {
    return *findOrInsert(block, hint);
  }

  std::list<Element>::iterator findOrInsert(std::uint32_t block, std::list<Element>::iterator from) {
    auto it = from;
    while (it != elements_.end() && it->block < block) ++it;
    if (it != elements_.end() && it->block == block) return it;
    return elements_.insert(it, Element{block, {}});
  }

  TypeId owner_;
  const PlainBitVector* mask_;
  std::list<Element> elements_;
};

/// One ranged bit-vector per interval of the owner type. Unions call the
/// chunk-aligned OR for every (destination, source) vector pair.
class RangedPointsToSet {
 public:
  RangedPointsToSet(TypeId owner, SetContext& ctx)
      : owner_(owner), layout_(&ctx.layoutOf(owner)), storage_(layout_->totalChunks, 0) {}

  TypeId owner() const noexcept { return owner_; }
  const RangedLayout& layout() const noexcept { return *layout_; }
  std::size_t vectorCount() const noexcept { return layout_->intervals.size(); }

  RangedSpan view(std::size_t k) noexcept {
    const auto [iv, first, pos, count] = locate(k);
    return RangedSpan{iv, layout_->cfg.chunkBits, first, std::span<std::uint64_t>(storage_).subspan(pos, count)};
  }
  ConstRangedSpan view(std::size_t k) const noexcept {
    const auto [iv, first, pos, count] = locate(k);
    return ConstRangedSpan{iv, layout_->cfg.chunkBits, first,
                           std::span<const std::uint64_t>(storage_).subspan(pos, count)};
  }

  bool add(std::uint32_t i) {
    if (layout_->findInterval(i) == RangedLayout::npos) return false;
    return setInSpan(i);
  }

  bool addAll(const RangedPointsToSet& src) {
    if (&src == this) return false;
    if (src.layout_->cfg != layout_->cfg) {
      throw Error(ErrorCode::ConfigMismatch, "ranged sets use different chunk widths");
    }
    bool changed = false;
    for (std::size_t d = 0; d < vectorCount(); ++d) {
      for (std::size_t s = 0; s < src.vectorCount(); ++s) changed |= rangedOr(view(d), src.view(s));
    }
    return changed;
  }

  /// Sets a bit anywhere in the aligned span, slack included. Used when a
  /// chunk-aligned union is replayed member by member.
  bool setInSpan(std::uint32_t i) {
    const std::size_t pos = layout_->storagePos(layout_->cfg.chunkIndexOf(i));
    if (pos == RangedLayout::npos) return false;
    const std::uint64_t bit = std::uint64_t{1} << (i % layout_->cfg.chunkBits);
    const bool changed = (storage_[pos] & bit) == 0;
    storage_[pos] |= bit;
    return changed;
  }

  bool contains(std::uint32_t i) const noexcept {
    const std::size_t pos = layout_->storagePos(layout_->cfg.chunkIndexOf(i));
    return pos != RangedLayout::npos && ((storage_[pos] >> (i % layout_->cfg.chunkBits)) & 1u);
  }

  std::size_t size() const noexcept {
    std::size_t n = 0;
    for (std::uint64_t c : storage_) n += static_cast<std::size_t>(std::popcount(c));
    return n;
  }

  template <class Fn>
  void forEach(Fn&& fn) const {
    for (std::size_t s = 0; s < layout_->segments.size(); ++s) {
      forEachInChunks(layout_->segments[s].first, layout_->cfg.chunkBits,
                      std::span<const std::uint64_t>(storage_).subspan(layout_->segmentOffset[s],
                                                                       layout_->segments[s].count()),
                      fn);
    }
  }

  /// Members of `this` whose chunk lies in `plan`, ascending.
  template <class Fn>
  void forEachInPlan(std::span<const ChunkRange> plan, Fn&& fn) const {
    for (const ChunkRange& r : plan) {
      for (std::uint64_t c = r.first; c <= r.last; ++c) {
        const std::size_t pos = layout_->storagePos(c);
        if (pos == RangedLayout::npos) continue;
        forEachInChunks(c, layout_->cfg.chunkBits, std::span<const std::uint64_t>(&storage_[pos], 1), fn);
      }
    }
  }

  /// One vector is held directly; several are reached through an array of
  /// references.
  std::size_t footprintBytes() const noexcept {
    std::size_t bytes = MemoryModel::objectHeader;
    for (const ChunkRange& s : layout_->segments) {
      bytes += MemoryModel::arrayHeader + s.count() * layout_->cfg.chunkBytes();
    }
    if (layout_->segments.size() > 1) {
      bytes += MemoryModel::arrayHeader + layout_->segments.size() * MemoryModel::refSlot;
    }
    return bytes;
  }

  std::size_t zeroWindowBytes() const noexcept {
    std::size_t saved = 0;
    const unsigned chunkBytes = layout_->cfg.chunkBytes();
    for (std::size_t s = 0; s < layout_->segments.size(); ++s) {
      const std::size_t count = layout_->segments[s].count();
      const std::size_t offset = layout_->segmentOffset[s];
      for (std::size_t w = 0; w < count; w += kSparseElementWords) {
        const std::size_t n = std::min(kSparseElementWords, count - w);
        const auto first = storage_.begin() + static_cast<std::ptrdiff_t>(offset + w);
        if (std::all_of(first, first + static_cast<std::ptrdiff_t>(n), [](std::uint64_t c) { return c == 0; })) {
          saved += n * chunkBytes;
        }
      }
    }
    return saved;
  }

 private:
  struct Located {
    Interval interval;
    std::uint64_t firstChunk;
    std::size_t pos;
    std::size_t count;
  };
  Located locate(std::size_t k) const noexcept {
    const Interval& iv = layout_->intervals[k];
    const ChunkRange r = chunkRangeOf(iv, layout_->cfg);
    const std::uint32_t seg = layout_->intervalSegment[k];
    const std::size_t pos = static_cast<std::size_t>(layout_->segmentOffset[seg] + (r.first - layout_->segments[seg].first));
    return Located{iv, r.first, pos, static_cast<std::size_t>(r.count())};
  }

  TypeId owner_;
  const RangedLayout* layout_;
  std::vector<std::uint64_t> storage_;
};

/// 16 inline slots, then a RangedPointsToSet. Unions into or out of inline
/// slots reproduce exactly what the chunk-aligned OR would move, so the
/// representation switch is invisible in membership.
class HybridRangedPointsToSet {
 public:
  HybridRangedPointsToSet(TypeId owner, SetContext& ctx)
      : owner_(owner), ctx_(&ctx), layout_(&ctx.layoutOf(owner)) {}

  TypeId owner() const noexcept { return owner_; }
  const RangedLayout& layout() const noexcept { return *layout_; }
  bool overflowed() const noexcept { return overflow_.has_value(); }
  const std::optional<RangedPointsToSet>& overflow() const noexcept { return overflow_; }

  bool add(std::uint32_t i) {
    if (overflow_) return overflow_->add(i);
    if (layout_->findInterval(i) == RangedLayout::npos || inline_.contains(i)) return false;
    if (inline_.full()) {
      migrate();
      return overflow_->add(i);
    }
    inline_.insert(i);
    return true;
  }

  bool addAll(const HybridRangedPointsToSet& src) {
    if (&src == this) return false;
    if (overflow_ && src.overflow_) return overflow_->addAll(*src.overflow_);
    const std::vector<ChunkRange>& plan = ctx_->transferPlan(*layout_, *src.layout_);
    if (plan.empty()) return false;
    if (overflow_) {
      bool changed = false;
      for (std::uint32_t m : src.inline_) {
        if (planCovers(plan, layout_->cfg.chunkIndexOf(m))) changed |= overflow_->setInSpan(m);
      }
      return changed;
    }
    std::vector<std::uint32_t> incoming;
    const auto consider = [&](std::uint32_t m) {
      if (!inline_.contains(m)) incoming.push_back(m);
    };
    if (src.overflow_) {
      src.overflow_->forEachInPlan(plan, consider);
    } else {
      for (std::uint32_t m : src.inline_) {
        if (planCovers(plan, layout_->cfg.chunkIndexOf(m))) consider(m);
      }
    }
    if (incoming.empty()) return false;
    if (inline_.size() + incoming.size() <= kHybridInlineCapacity) {
      for (std::uint32_t m : incoming) inline_.insert(m);
      return true;
    }
    migrate();
    if (src.overflow_) {
      overflow_->addAll(*src.overflow_);
    } else {
      for (std::uint32_t m : incoming) overflow_->setInSpan(m);
    }
    return true;
  }

  bool contains(std::uint32_t i) const noexcept { return overflow_ ? overflow_->contains(i) : inline_.contains(i); }
  std::size_t size() const noexcept { return overflow_ ? overflow_->size() : inline_.size(); }
  template <class Fn>
  void forEach(Fn&& fn) const {
    if (overflow_) {
      overflow_->forEach(fn);
    } else {
      for (std::uint32_t m : inline_) fn(m);
    }
  }

  std::size_t footprintBytes() const noexcept {
    std::size_t bytes = MemoryModel::objectHeader + (kHybridInlineCapacity + 1) * MemoryModel::refSlot;
    if (overflow_) bytes += overflow_->footprintBytes();
    return bytes;
  }
  std::size_t zeroWindowBytes() const noexcept { return overflow_ ? overflow_->zeroWindowBytes() : 0; }

 private:
  void migrate() {
    overflow_.emplace(owner_, *ctx_);
    for (std::uint32_t m : inline_) overflow_->setInSpan(m);
    inline_.clear();
  }

  TypeId owner_;
  SetContext* ctx_;
  const RangedLayout* layout_;
  detail::InlineSlots inline_;
  std::optional<RangedPointsToSet> overflow_;
};

// ---------------------------------------------------------------------------
// PointsToSet

/// Common contract over all representations. `owner()` is the type that
/// governs filtering.
class PointsToSet {
 public:
  using Rep = std::variant<NaiveSet, PureBitVectorSet, HybridSet, SharedBitVectorSet, SparseBitmapSet,
                           RangedPointsToSet, HybridRangedPointsToSet>;

  PointsToSet(Rep rep, SetContext& ctx) : rep_(std::move(rep)), ctx_(&ctx) {}

  SetKind kind() const noexcept { return static_cast<SetKind>(rep_.index()); }
  TypeId owner() const {
    return std::visit([](const auto& s) { return s.owner(); }, rep_);
  }
  const Rep& rep() const noexcept { return rep_; }
  SetContext& context() const noexcept { return *ctx_; }

  bool add(std::uint32_t i) {
    if (i == 0 || i > ctx_->universe()) {
      throw Error(ErrorCode::IndexOutOfRange,
                  "allocation index " + std::to_string(i) + " outside [1," + std::to_string(ctx_->universe()) + "]");
    }
    return std::visit([i](auto& s) { return s.add(i); }, rep_);
  }

  bool addAll(const PointsToSet& src) {
    if (&src == this) return false;
    if (src.ctx_ != ctx_ &&
        (src.ctx_->chunk() != ctx_->chunk() || src.ctx_->universe() != ctx_->universe())) {
      throw Error(ErrorCode::ConfigMismatch, "sets belong to incompatible numbering or chunk configuration");
    }
    return std::visit(
        [&](auto& dst) -> bool {
          using Dst = std::decay_t<decltype(dst)>;
          if (const Dst* same = std::get_if<Dst>(&src.rep_)) return dst.addAll(*same);
          bool changed = false;
          src.forEach([&](std::uint32_t m) { changed |= dst.add(m); });
          return changed;
        },
        rep_);
  }

  bool contains(std::uint32_t i) const {
    return std::visit([i](const auto& s) { return s.contains(i); }, rep_);
  }
  std::size_t size() const {
    return std::visit([](const auto& s) { return s.size(); }, rep_);
  }
  template <class Fn>
  void forEach(Fn&& fn) const {
    std::visit([&](const auto& s) { s.forEach(fn); }, rep_);
  }
  std::vector<std::uint32_t> members() const {
    std::vector<std::uint32_t> out;
    forEach([&](std::uint32_t m) { out.push_back(m); });
    return out;
  }

  /// Modeled bytes of this set, excluding any shared base.
  std::size_t footprintBytes() const {
    return std::visit([](const auto& s) { return s.footprintBytes(); }, rep_);
  }

  const PlainBitVector* sharedBase() const noexcept {
    if (const auto* s = std::get_if<SharedBitVectorSet>(&rep_)) return s->base().get();
    return nullptr;
  }

  /// Layout for ranged kinds, null otherwise.
  const RangedLayout* rangedLayout() const noexcept {
    if (const auto* s = std::get_if<RangedPointsToSet>(&rep_)) return &s->layout();
    if (const auto* s = std::get_if<HybridRangedPointsToSet>(&rep_)) return &s->layout();
    return nullptr;
  }

  /// True iff `i` is in the aligned span of this set's vectors but outside
  /// every interval. Always false for non-ranged kinds.
  bool isSlack(std::uint32_t i) const noexcept {
    const RangedLayout* layout = rangedLayout();
    return layout != nullptr && layout->isSlack(i);
  }

 private:
  Rep rep_;
  SetContext* ctx_;
};

inline PointsToSet makeSet(SetKind kind, TypeId owner, SetContext& ctx) {
  switch (kind) {
    case SetKind::Naive: return PointsToSet(NaiveSet(owner, ctx), ctx);
    case SetKind::Pure: return PointsToSet(PureBitVectorSet(owner, ctx), ctx);
    case SetKind::Hybrid: return PointsToSet(HybridSet(owner, ctx), ctx);
    case SetKind::Shared: return PointsToSet(SharedBitVectorSet(owner, ctx), ctx);
    case SetKind::Sparse: return PointsToSet(SparseBitmapSet(owner, ctx), ctx);
    case SetKind::Ranged: return PointsToSet(RangedPointsToSet(owner, ctx), ctx);
    case SetKind::RangedHybrid: return PointsToSet(HybridRangedPointsToSet(owner, ctx), ctx);
  }
  throw Error(ErrorCode::UnsupportedKind, "unknown set kind");
}

/// Bytes a sparse-element decomposition would not allocate: every window of
/// 8 consecutive chunks of an underlying bit array that holds no set bit.
inline std::size_t sparseSavings(const PointsToSet& s) {
  return std::visit(
      [&](const auto& rep) -> std::size_t {
        using T = std::decay_t<decltype(rep)>;
        if constexpr (std::is_same_v<T, PureBitVectorSet> || std::is_same_v<T, HybridSet> ||
                      std::is_same_v<T, RangedPointsToSet> || std::is_same_v<T, HybridRangedPointsToSet>) {
          return rep.zeroWindowBytes();
        } else {
          throw Error(ErrorCode::UnsupportedKind,
                      "sparse savings are defined for pure and ranged kinds, not '" +
                          std::string(toString(s.kind())) + "'");
        }
      },
      s.rep());
}

}  // namespace rangepta
