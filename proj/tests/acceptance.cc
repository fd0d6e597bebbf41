//===- acceptance.cc - acceptance criteria runner ------------------------------===//
//
// Part of wgkit, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// Runs every acceptance criterion at its stated threshold and prints one
// pass/fail line per criterion. Exit code is the number of failed criteria.
//
//===----------------------------------------------------------------------===//

#include "wgkit/bufalloc.hpp"
#include "wgkit/corpus.hpp"
#include "wgkit/harness.hpp"
#include "wgkit/pipeline.hpp"
#include "wgkit/vecmath.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <map>
#include <random>
#include <sstream>

using namespace wgkit;

namespace {

int failures = 0;

void report(int idx, const std::string &name, bool pass, const std::string &detail) {
  printf("[%d] %-28s %s  %s\n", idx, name.c_str(), pass ? "PASS" : "FAIL",
         detail.c_str());
  fflush(stdout);
  if (!pass)
    ++failures;
}

// [1] Oracle equivalence over >= 300 generated kernels x local sizes
// {1,2,3,4,8} x 2 work-groups, bit-exact memory.
void criterion_equivalence() {
  auto t0 = std::chrono::steady_clock::now();
  DiffOptions opts;
  opts.local_sizes = {1, 2, 3, 4, 8};
  opts.groups = {2, 1, 1};
  opts.schedules = 3;
  opts.gen.cond_barrier_prob = 0.45;
  auto results = diff_exec_range(1, 300, opts);
  int pass = 0, cases = 0;
  std::string first_fail;
  for (const auto &r : results) {
    pass += r.pass ? 1 : 0;
    cases += r.cases;
    if (!r.pass && first_fail.empty())
      first_fail = "seed " + std::to_string(r.seed) + ": " + r.detail;
  }
  double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::ostringstream os;
  os << pass << "/300 kernels, " << cases << " engine comparisons, "
     << int(secs) << "s";
  if (!first_fail.empty())
    os << " | " << first_fail;
  report(1, "oracle-equivalence", pass == 300 && secs < 300.0, os.str());
}

// [2] After tail duplication every barrier has at most one immediate
// predecessor barrier, on 100% of generated conditional-barrier kernels.
void criterion_tail_duplication() {
  int with_cond = 0, clean = 0;
  uint64_t seed = 0;
  while (with_cond < 100 && ++seed < 3000) {
    GenConfig cfg;
    cfg.barriers = 1 + int(seed % 3);
    cfg.cond_barrier_prob = 1.0;
    auto k = canonicalize_barriers(
        normalize_single_exit(generate_random_kernel(seed, cfg)));
    if (!has_conditional_barrier(k))
      continue;
    ++with_cond;
    auto kd = tail_duplicate(k);
    auto bcfg = build_barrier_cfg(kd);
    bool ok = true;
    for (size_t n = 0; n < bcfg.nodes.size(); ++n)
      if (bcfg.preds[n].size() > 1)
        ok = false;
    clean += ok ? 1 : 0;
  }
  std::ostringstream os;
  os << clean << "/" << with_cond << " conditional-barrier kernels";
  report(2, "tail-duplication-structure", with_cond == 100 && clean == with_cond,
         os.str());
}

// [3] Figure-shape goldens via the corpus: exact region counts and the DCT
// loop-interchange structure.
void criterion_figures(const std::string &root) {
  std::map<std::string, int> expect = {
      {"fig3a", 1}, {"fig3b", 2}, {"fig8", 4}};
  bool ok = true;
  std::ostringstream os;
  for (auto &[id, want] : expect) {
    auto c = load_corpus_case(root, id);
    PassConfig cfg;
    cfg.local = c.launch.local;
    auto res = compile(c.kernel, cfg);
    int got = int(res.regions.regions.size());
    os << id << "=" << got << " ";
    if (got != want)
      ok = false;
  }
  // DCT: work-item loop inside the kernel loop with hparallel on, outside
  // with it off (exact-match against the expect.json counts too).
  auto dct = load_corpus_case(root, "dct");
  for (bool hp : {true, false}) {
    PassConfig cfg;
    cfg.local = dct.launch.local;
    cfg.hparallel = hp;
    auto res = compile(dct.kernel, cfg);
    bool nested = summary_json(res).find("\"wi_loop_inside_kernel_loop\": true") !=
                  std::string::npos;
    int want = hp ? dct.region_count : dct.region_count_hparallel_off;
    os << "dct[" << (hp ? "on" : "off") << "]=" << res.regions.regions.size()
       << (nested ? "/nested " : "/flat ");
    if (nested != hp || int(res.regions.regions.size()) != want)
      ok = false;
  }
  report(3, "figure-shape-goldens", ok, os.str());
}

// [4] Horizontal parallelization proxy: with hparallel on, the DCT's
// region bodies inside the kernel loop run local-size consecutive
// independent instances per invocation; with it off, one.
void criterion_hparallel_trips(const std::string &root) {
  auto dct = load_corpus_case(root, "dct");
  int64_t local_size = dct.launch.local.product();
  std::map<bool, int64_t> metric;
  for (bool hp : {true, false}) {
    PassConfig cfg;
    cfg.local = dct.launch.local;
    cfg.hparallel = hp;
    auto res = compile(dct.kernel, cfg);
    Launch l = dct.launch;
    for (auto &[name, count] : res.local_params)
      l.local_elems[name] = count;
    auto run = run_compiled(res.wg.fn, l, dct.image);
    int64_t m = 1;
    bool uniform_trips = true;
    for (const auto &inv : run.wi_loop_invocations)
      if (inv.inside_kernel_loop) {
        m = std::max(m, inv.trips);
        if (inv.trips != local_size)
          uniform_trips = false;
      }
    if (!uniform_trips)
      m = -1;
    metric[hp] = m;
  }
  std::ostringstream os;
  os << "trips(on)=" << metric[true] << " trips(off)=" << metric[false]
     << " local-size=" << local_size;
  report(4, "hparallel-trip-count", metric[true] == local_size &&
                                        local_size >= 4 && metric[false] == 1,
         os.str());
}

// [5] Allocator laws: naive-scan agreement and tiling over 10,000 random
// operation sequences; 64 greedy allocations from a fresh region are
// contiguous.
void criterion_bufalloc() {
  std::mt19937_64 rng(1337);
  int sequences = 0, agreed = 0;
  const uint64_t kAlign = 16;
  for (int round = 0; round < 10000; ++round) {
    uint64_t size = 1u << (8 + int(rng() % 4));
    bufalloc::Region r(size);
    // naive shadow: sorted allocation map scanned from zero
    std::map<uint64_t, uint64_t> live; // offset -> size
    auto naive_alloc = [&](uint64_t want) -> std::optional<uint64_t> {
      uint64_t at = 0;
      for (auto &[off, len] : live) {
        if (off - at >= want)
          break;
        at = off + len;
      }
      if (at + want > size)
        return std::nullopt;
      return at;
    };
    bool ok = true;
    std::vector<uint64_t> offsets;
    for (int op = 0; op < 12; ++op) {
      if (!offsets.empty() && rng() % 3 == 0) {
        size_t i = rng() % offsets.size();
        r.free(offsets[i]);
        live.erase(offsets[i]);
        offsets.erase(offsets.begin() + long(i));
      } else {
        uint64_t n = 1 + rng() % (size / 3);
        uint64_t want = (n + kAlign - 1) / kAlign * kAlign;
        auto expect = naive_alloc(want);
        try {
          uint64_t got = r.alloc(n);
          if (!expect || got != *expect)
            ok = false;
          else {
            live[got] = want;
            offsets.push_back(got);
          }
        } catch (const bufalloc::OutOfMemory &) {
          if (expect)
            ok = false;
        }
      }
      r.check_invariants();
    }
    ++sequences;
    agreed += ok ? 1 : 0;
  }

  bufalloc::Region g(64 * 128 + 1024);
  bool contiguous = true;
  uint64_t prev = 0;
  for (int i = 0; i < 64; ++i) {
    uint64_t off = g.alloc_greedy(100);
    if (i > 0 && off != prev + 112)
      contiguous = false;
    prev = off;
  }
  std::ostringstream os;
  os << agreed << "/" << sequences << " sequences agree; greedy contiguous="
     << (contiguous ? "yes" : "no");
  report(5, "bufalloc-laws", agreed == sequences && contiguous, os.str());
}

// [6] Vecmath accuracy: 1e6 samples per function per type against the
// extended-precision reference, plus bit-exact lane independence over 1e5
// vectors.
void criterion_vecmath() {
  std::mt19937_64 rng(99);
  auto uni = [&](double lo, double hi) {
    return lo + (hi - lo) * double(rng()) / double(UINT64_MAX);
  };
  const int N = 1'000'000;
  double s32 = 0, s64 = 0, e32 = 0, e64 = 0, q32 = 0, q64 = 0;
  for (int i = 0; i < N; ++i) {
    double x = uni(-1e4, 1e4);
    s64 = std::max(s64, vecmath::ulp_error_f64(vecmath::sin_scalar(x),
                                               sinl((long double)x)));
    float xf = float(uni(-1e4, 1e4));
    s32 = std::max(s32, vecmath::ulp_error_f32(vecmath::sin_scalar(xf),
                                               sinl((long double)xf)));
    double y = uni(-700, 700);
    e64 = std::max(e64, vecmath::ulp_error_f64(vecmath::exp_scalar(y),
                                               expl((long double)y)));
    float yf = float(uni(-85, 85));
    e32 = std::max(e32, vecmath::ulp_error_f32(vecmath::exp_scalar(yf),
                                               expl((long double)yf)));
    double z = std::exp(uni(-600, 600));
    q64 = std::max(q64, vecmath::ulp_error_f64(vecmath::sqrt_scalar(z),
                                               sqrtl((long double)z)));
    float zf = float(std::exp(uni(-35, 35)));
    q32 = std::max(q32, vecmath::ulp_error_f32(vecmath::sqrt_scalar(zf),
                                               sqrtl((long double)zf)));
  }

  int lane_checked = 0;
  bool lanes_ok = true;
  for (int rep = 0; rep < 100'000 / 8; ++rep) {
    vecmath::RealVec<float, 8> v8;
    vecmath::RealVec<double, 4> v4;
    vecmath::RealVec<float, 2> v2;
    for (int i = 0; i < 8; ++i)
      v8.lane[size_t(i)] = float(uni(-1e4, 1e4));
    for (int i = 0; i < 4; ++i)
      v4.lane[size_t(i)] = uni(-700, 700);
    v2.lane = {float(uni(0, 1e8)), float(uni(0, 1e8))};
    auto s = vsin(v8);
    auto e = vexp(v4);
    auto q = vsqrt(v2);
    for (int i = 0; i < 8; ++i)
      lanes_ok &= vecmath::FloatTraits<float>::to_bits(s[i]) ==
                  vecmath::FloatTraits<float>::to_bits(vecmath::sin_scalar(v8[i]));
    for (int i = 0; i < 4; ++i)
      lanes_ok &= vecmath::FloatTraits<double>::to_bits(e[i]) ==
                  vecmath::FloatTraits<double>::to_bits(vecmath::exp_scalar(v4[i]));
    for (int i = 0; i < 2; ++i)
      lanes_ok &= vecmath::FloatTraits<float>::to_bits(q[i]) ==
                  vecmath::FloatTraits<float>::to_bits(vecmath::sqrt_scalar(v2[i]));
    lane_checked += 14;
  }

  std::ostringstream os;
  os.precision(3);
  os << "ulp: sin " << s32 << "/" << s64 << ", exp " << e32 << "/" << e64
     << ", sqrt " << q32 << "/" << q64 << "; lanes " << lane_checked
     << (lanes_ok ? " bit-exact" : " MISMATCH");
  bool ok = s32 <= 4 && s64 <= 4 && e32 <= 4 && e64 <= 4 && q32 <= 2 &&
            q64 <= 2 && lanes_ok;
  report(6, "vecmath-accuracy", ok, os.str());
}

// [7] Uniformity soundness: no value labeled Uniform ever disagrees across
// work-items in oracle traces over the randomized corpus.
void criterion_uniformity() {
  int violations = 0, kernels = 0;
  for (uint64_t seed = 1; seed <= 300; ++seed) {
    GenConfig cfg;
    cfg.barriers = int(seed % 4);
    cfg.cond_barrier_prob = 0.45;
    auto k = generate_random_kernel(seed, cfg);
    auto u = analyze_uniformity(k);
    for (int lx : {3, 4}) {
      Launch launch = make_launch(k, {lx, 1, 1}, {2, 1, 1}, seed);
      MemoryImage img = make_image(k, launch, seed);
      ExecOptions opts;
      opts.uniform_labels = &u.uniform;
      auto res = run_oracle(k, launch, img, opts);
      violations += res.uniform_violations;
    }
    ++kernels;
  }
  std::ostringstream os;
  os << violations << " violations over " << kernels << " kernels x 2 sizes";
  report(7, "uniformity-soundness", violations == 0, os.str());
}

// [8] Every pass dump re-parses, re-validates, and recompiles to an
// oracle-equivalent function, over the whole corpus.
void criterion_roundtrip(const std::string &root) {
  bool ok = true;
  int dumps = 0, resumed = 0;
  std::ostringstream os;
  for (const std::string &id : corpus_case_ids(root)) {
    auto c = load_corpus_case(root, id);
    PassConfig cfg;
    cfg.local = c.launch.local;
    cfg.dump_after = {"all"};
    auto res = compile(c.kernel, cfg);
    auto oracle = corpus_oracle(c.kernel, c.launch, c.image);

    const auto &stages = pipeline_stages();
    for (size_t i = 0; i < res.dumps.size(); ++i) {
      KernelFunction kd;
      try {
        kd = parse_kernel(res.dumps[i].second); // parse validates
        ++dumps;
      } catch (const std::exception &e) {
        ok = false;
        os << id << " dump " << res.dumps[i].first << ": " << e.what() << "; ";
        continue;
      }
      if (i + 1 >= stages.size())
        continue;
      try {
        PassConfig c2;
        c2.local = cfg.local;
        auto r2 = compile_from(stages[i + 1], kd, c2);
        Launch l2 = c.launch;
        for (auto &[name, count] : res.local_params)
          l2.local_elems[name] = count;
        for (auto &[name, count] : r2.local_params)
          l2.local_elems[name] = count;
        auto compiled = run_compiled(r2.wg.fn, l2, c.image);
        if (!oracle.mem.bit_equal(compiled.mem)) {
          ok = false;
          os << id << " resume after " << res.dumps[i].first << " diverges; ";
        } else {
          ++resumed;
        }
      } catch (const std::exception &e) {
        ok = false;
        os << id << " resume " << res.dumps[i].first << ": " << e.what() << "; ";
      }
    }
  }
  std::ostringstream head;
  head << dumps << " dumps re-parsed, " << resumed << " resumes equivalent. "
       << os.str();
  report(8, "dump-roundtrip", ok, head.str());
}

} // namespace

int main(int argc, char **argv) {
  std::string corpus_root = "corpus";
  for (int i = 1; i + 1 < argc; i += 2)
    if (std::strcmp(argv[i], "--corpus") == 0)
      corpus_root = argv[i + 1];

  criterion_equivalence();
  criterion_tail_duplication();
  criterion_figures(corpus_root);
  criterion_hparallel_trips(corpus_root);
  criterion_bufalloc();
  criterion_vecmath();
  criterion_uniformity();
  criterion_roundtrip(corpus_root);

  printf("%s: %d criterion(s) failed\n", failures == 0 ? "OK" : "FAILED",
         failures);
  return failures;
}
