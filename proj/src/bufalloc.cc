//===- bufalloc.cc - chunked first-fit buffer allocator ----------------------===//
//
// Part of wgkit, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "wgkit/bufalloc.hpp"

#include <sstream>

namespace wgkit::bufalloc {

Region::Region(uint64_t size, uint64_t alignment)
    : size_(size), alignment_(alignment) {
  if (size == 0)
    throw std::invalid_argument("region size must be positive");
  if (alignment == 0 || (alignment & (alignment - 1)) != 0)
    throw std::invalid_argument("alignment must be a power of two");
  chunks_.push_back(Chunk{0, size, false});
}

uint64_t Region::do_alloc(std::list<Chunk>::iterator it, uint64_t want) {
  uint64_t off = it->offset;
  if (it->size == want) {
    it->allocated = true;
    return off;
  }
  // split: exact request in front, free remainder behind
  Chunk rest{off + want, it->size - want, false};
  it->size = want;
  it->allocated = true;
  chunks_.insert(std::next(it), rest);
  return off;
}

uint64_t Region::alloc(uint64_t size) {
  if (size == 0)
    throw std::invalid_argument("zero-size allocation");
  uint64_t want = aligned(size);
  for (auto it = chunks_.begin(); it != chunks_.end(); ++it)
    if (!it->allocated && it->size >= want)
      return do_alloc(it, want);
  throw OutOfMemory();
}

uint64_t Region::alloc_greedy(uint64_t size) {
  if (size == 0)
    throw std::invalid_argument("zero-size allocation");
  uint64_t want = aligned(size);
  auto last = std::prev(chunks_.end());
  if (!last->allocated && last->size >= want)
    return do_alloc(last, want);
  return alloc(size);
}

void Region::free(uint64_t offset) {
  for (auto it = chunks_.begin(); it != chunks_.end(); ++it) {
    if (it->offset != offset)
      continue;
    if (!it->allocated)
      throw BadFree("double free at offset " + std::to_string(offset));
    it->allocated = false;
    // coalesce with the next free chunk
    auto next = std::next(it);
    if (next != chunks_.end() && !next->allocated) {
      it->size += next->size;
      chunks_.erase(next);
    }
    // and with the previous one
    if (it != chunks_.begin()) {
      auto prev = std::prev(it);
      if (!prev->allocated) {
        prev->size += it->size;
        chunks_.erase(it);
      }
    }
    return;
  }
  throw BadFree("free of unknown offset " + std::to_string(offset));
}

void Region::check_invariants() const {
  uint64_t expect = 0;
  bool prev_free = false;
  for (auto it = chunks_.begin(); it != chunks_.end(); ++it) {
    if (it->size == 0)
      throw std::logic_error("zero-size chunk");
    if (it->offset != expect)
      throw std::logic_error("chunk list has a gap or overlap");
    if (!it->allocated && prev_free)
      throw std::logic_error("adjacent free chunks not coalesced");
    prev_free = !it->allocated;
    expect += it->size;
  }
  if (expect != size_)
    throw std::logic_error("chunks do not tile the region");
}

std::string Region::dump() const {
  std::ostringstream os;
  bool first = true;
  for (const Chunk &c : chunks_) {
    if (!first)
      os << " ";
    first = false;
    os << "[" << c.offset << " " << c.size << " " << (c.allocated ? "A" : "F")
       << "]";
  }
  return os.str();
}

} // namespace wgkit::bufalloc
