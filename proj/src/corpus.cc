//===- corpus.cc - checked-in kernel corpus runner -----------------------------===//
//
// Part of wgkit, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "wgkit/corpus.hpp"

#include "wgkit/pipeline.hpp"
#include "wgkit/wg.hpp"

#include "json.hpp"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace wgkit {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  if (!in)
    throw std::runtime_error("cannot open " + p.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

size_t elem_bytes(ScalarKind k) {
  switch (k) {
  case ScalarKind::F64: return 8;
  case ScalarKind::Bool: return 1;
  default: return 4;
  }
}

void fill_buffer(TypedBuffer &b, const std::string &raw) {
  size_t w = elem_bytes(b.elem);
  if (raw.size() != b.data.size() * w)
    throw std::runtime_error("bind file size mismatch");
  for (size_t i = 0; i < b.data.size(); ++i) {
    uint64_t bits = 0;
    std::memcpy(&bits, raw.data() + i * w, w);
    b.data[i] = bits;
  }
}

} // namespace

std::vector<std::string> corpus_case_ids(const std::string &root) {
  std::vector<std::string> ids;
  for (const auto &e : fs::directory_iterator(root))
    if (e.is_directory() && fs::exists(e.path() / "kernel.ir"))
      ids.push_back(e.path().filename().string());
  std::sort(ids.begin(), ids.end());
  return ids;
}

CorpusCase load_corpus_case(const std::string &root, const std::string &id) {
  CorpusCase c;
  c.id = id;
  c.dir = (fs::path(root) / id).string();
  c.kernel = parse_kernel(slurp(fs::path(c.dir) / "kernel.ir"));

  json j = json::parse(slurp(fs::path(c.dir) / "expect.json"));
  auto ls = j.at("local_size");
  c.launch.local = {ls.at(0), ls.at(1), ls.at(2)};
  auto gg = j.at("groups");
  c.launch.num_groups = {gg.at(0), gg.at(1), gg.at(2)};
  json scalars = j.value("scalars", json::object());
  for (auto &[name, v] : scalars.items()) {
    ValueId pv = c.kernel.find_value(name);
    ScalarKind kind = pv == kNoValue ? ScalarKind::I32 : c.kernel.value_type(pv).elem;
    if (kind == ScalarKind::F32)
      c.launch.scalar_binds[name] = Scalar::make_f32(v.get<float>());
    else if (kind == ScalarKind::F64)
      c.launch.scalar_binds[name] = Scalar::make_f64(v.get<double>());
    else if (kind == ScalarKind::Bool)
      c.launch.scalar_binds[name] = Scalar::make_bool(v.get<bool>());
    else
      c.launch.scalar_binds[name] = Scalar::make_i32(v.get<int32_t>());
  }
  json locals = j.value("local_elems", json::object());
  for (auto &[name, v] : locals.items())
    c.launch.local_elems[name] = v.get<int64_t>();

  json bufs = j.value("buffers", json::object());
  for (auto &[name, spec] : bufs.items()) {
    ValueId pv = c.kernel.find_value(name);
    if (pv == kNoValue)
      throw std::runtime_error("buffer for unknown param " + name);
    int64_t elems = spec.at("elems").get<int64_t>();
    int h = c.image.add_buffer(name, c.kernel.value_type(pv).elem, elems);
    if (spec.contains("file"))
      fill_buffer(c.image.buffers[size_t(h)],
                  slurp(fs::path(c.dir) / spec.at("file").get<std::string>()));
  }

  c.region_count = j.value("region_count", -1);
  c.context_array_count = j.value("context_array_count", -1);
  c.region_count_hparallel_off = j.value("region_count_hparallel_off", -1);
  if (j.contains("wi_loop_inside_kernel_loop"))
    c.nested_wi_loop = j.at("wi_loop_inside_kernel_loop").get<bool>() ? 1 : 0;
  return c;
}

// Automatic locals cannot execute directly; the oracle runs the converted
// kernel with the fresh local params bound.
static std::pair<KernelFunction, Launch> oracle_ready(const KernelFunction &k,
                                                      const Launch &launch) {
  ConvertedLocals conv = convert_automatic_locals(k);
  Launch l = launch;
  for (auto &[name, count] : conv.added_params)
    l.local_elems[name] = count;
  return {std::move(conv.fn), std::move(l)};
}

ExecResult corpus_oracle(const KernelFunction &k, const Launch &launch,
                         const MemoryImage &image) {
  auto [kc, lc] = oracle_ready(k, launch);
  return run_oracle(kc, lc, image);
}

std::vector<uint8_t> dump_memory(const KernelFunction &k, const MemoryImage &m) {
  std::vector<uint8_t> out;
  for (const Param &p : k.params) {
    if (p.space != AddressSpace::Global && p.space != AddressSpace::Constant)
      continue;
    int h = m.find(p.name);
    if (h < 0)
      continue;
    const TypedBuffer &b = m.buffers[size_t(h)];
    size_t w = elem_bytes(b.elem);
    for (uint64_t bits : b.data) {
      uint8_t raw[8];
      std::memcpy(raw, &bits, 8);
      out.insert(out.end(), raw, raw + w);
    }
  }
  return out;
}

CorpusReport run_corpus_case(const CorpusCase &c) {
  CorpusReport rep;
  rep.id = c.id;
  try {
    PassConfig cfg;
    cfg.local = c.launch.local;
    auto res = compile(c.kernel, cfg);

    std::ostringstream why;
    bool ok = true;
    if (c.region_count >= 0 && int(res.regions.regions.size()) != c.region_count) {
      ok = false;
      why << "region count " << res.regions.regions.size() << " != "
          << c.region_count << "; ";
    }
    if (c.context_array_count >= 0 &&
        int(res.wg.context_arrays.size()) != c.context_array_count) {
      ok = false;
      why << "context arrays " << res.wg.context_arrays.size() << " != "
          << c.context_array_count << "; ";
    }
    if (c.nested_wi_loop >= 0) {
      bool nested = summary_json(res).find("\"wi_loop_inside_kernel_loop\": true") !=
                    std::string::npos;
      if (nested != (c.nested_wi_loop == 1)) {
        ok = false;
        why << "wi-loop nesting mismatch; ";
      }
    }
    if (c.region_count_hparallel_off >= 0) {
      PassConfig off = cfg;
      off.hparallel = false;
      auto roff = compile(c.kernel, off);
      if (int(roff.regions.regions.size()) != c.region_count_hparallel_off) {
        ok = false;
        why << "region count (hparallel off) " << roff.regions.regions.size()
            << " != " << c.region_count_hparallel_off << "; ";
      }
      Launch l2 = c.launch;
      for (auto &[name, count] : roff.local_params)
        l2.local_elems[name] = count;
      auto coff = run_compiled(roff.wg.fn, l2, c.image);
      auto oracle = corpus_oracle(c.kernel, c.launch, c.image);
      if (!oracle.mem.bit_equal(coff.mem)) {
        ok = false;
        why << "hparallel-off memory mismatch; ";
      }
    }

    // golden: oracle memory must match the checked-in dump bit for bit
    auto oracle = corpus_oracle(c.kernel, c.launch, c.image);
    auto bytes = dump_memory(c.kernel, oracle.mem);
    std::ifstream g(std::filesystem::path(c.dir) / "golden.bin",
                    std::ios::binary);
    if (g) {
      std::vector<uint8_t> want((std::istreambuf_iterator<char>(g)),
                                std::istreambuf_iterator<char>());
      if (want != bytes) {
        ok = false;
        why << "oracle output differs from golden.bin; ";
      }
    } else {
      ok = false;
      why << "missing golden.bin; ";
    }

    Launch l2 = c.launch;
    for (auto &[name, count] : res.local_params)
      l2.local_elems[name] = count;
    auto compiled = run_compiled(res.wg.fn, l2, c.image);
    if (!oracle.mem.bit_equal(compiled.mem)) {
      ok = false;
      why << "compiled output differs from oracle; ";
    }

    rep.pass = ok;
    rep.detail = why.str();
  } catch (const std::exception &e) {
    rep.pass = false;
    rep.detail = e.what();
  }
  return rep;
}

} // namespace wgkit
