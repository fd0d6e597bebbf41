//===- corpus.hpp - checked-in kernel corpus runner ---------------------------===//
//
// Part of wgkit, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// Corpus layout: corpus/<id>/{kernel.ir, expect.json, bind/*.bin, golden.bin}
// Golden dumps come from the oracle only; the runner re-derives them and
// compares the compiled engine against the same bits.
//
//===----------------------------------------------------------------------===//

#ifndef WGKIT_CORPUS_HPP
#define WGKIT_CORPUS_HPP

#include "wgkit/exec.hpp"
#include "wgkit/ir.hpp"

#include <string>
#include <vector>

namespace wgkit {

struct CorpusCase {
  std::string id;
  std::string dir;
  KernelFunction kernel;
  Launch launch;
  MemoryImage image;
  // expectations (negative = unchecked)
  int region_count = -1;
  int context_array_count = -1;
  int region_count_hparallel_off = -1;
  int nested_wi_loop = -1; // 1/0 expected value of wi_loop_inside_kernel_loop
};

struct CorpusReport {
  std::string id;
  bool pass = false;
  std::string detail;
};

std::vector<std::string> corpus_case_ids(const std::string &root);
CorpusCase load_corpus_case(const std::string &root, const std::string &id);
CorpusReport run_corpus_case(const CorpusCase &c);

// Runs the oracle on a corpus kernel, converting automatic locals first.
ExecResult corpus_oracle(const KernelFunction &k, const Launch &launch,
                         const MemoryImage &image);

// Serializes the global/constant buffers in parameter order, little endian,
// for golden files and --dump-mem.
std::vector<uint8_t> dump_memory(const KernelFunction &k, const MemoryImage &m);

} // namespace wgkit

#endif // WGKIT_CORPUS_HPP
