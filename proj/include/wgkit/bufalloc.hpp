//===- bufalloc.hpp - chunked first-fit buffer allocator ---------------------===//
//
// Part of wgkit, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// Book-keeping allocator for device buffer regions: an address-ordered list
// of chunks with a free/allocated flag. The last chunk is a sentinel holding
// the unallocated tail. First fit splits the first free chunk that satisfies
// the aligned request; greedy mode serves from the sentinel when possible so
// successive allocations stay contiguous. No backing memory is touched —
// offsets are the product.
//
//===----------------------------------------------------------------------===//

#ifndef WGKIT_BUFALLOC_HPP
#define WGKIT_BUFALLOC_HPP

#include <cstdint>
#include <list>
#include <optional>
#include <stdexcept>
#include <string>

namespace wgkit::bufalloc {

struct OutOfMemory : std::runtime_error {
  OutOfMemory() : std::runtime_error("out of memory") {}
};
struct BadFree : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Chunk {
  uint64_t offset = 0;
  uint64_t size = 0;
  bool allocated = false;
};

class Region {
public:
  // Bookkeeping only: `size` bytes starting at abstract offset 0. All chunk
  // starts and allocation sizes are rounded to `alignment`.
  explicit Region(uint64_t size, uint64_t alignment = 16);

  // First fit from the list head; the found chunk is split into an exactly
  // aligned-request-sized allocation and a free remainder.
  uint64_t alloc(uint64_t size);

  // Serves from the sentinel (end of the region) when it fits, keeping
  // successive allocations contiguous; otherwise falls back to first fit.
  uint64_t alloc_greedy(uint64_t size);

  // Frees the allocated chunk starting at `offset`, coalescing with free
  // neighbors. Unknown offsets and double frees are errors.
  void free(uint64_t offset);

  const std::list<Chunk> &chunks() const { return chunks_; }
  uint64_t size() const { return size_; }
  uint64_t alignment() const { return alignment_; }

  // Tiling invariant: chunks are sorted, non-overlapping and cover the
  // region exactly; a free sentinel exists iff tail space exists.
  void check_invariants() const;

  std::string dump() const; // e.g. "[0 112 A] [112 912 F]"

private:
  uint64_t aligned(uint64_t n) const {
    return (n + alignment_ - 1) / alignment_ * alignment_;
  }
  uint64_t do_alloc(std::list<Chunk>::iterator it, uint64_t want);

  uint64_t size_;
  uint64_t alignment_;
  std::list<Chunk> chunks_;
};

} // namespace wgkit::bufalloc

#endif // WGKIT_BUFALLOC_HPP
