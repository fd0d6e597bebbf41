//===- wgkit.cc - command line driver ------------------------------------------===//
//
// Part of wgkit, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "wgkit/bufalloc.hpp"
#include "wgkit/corpus.hpp"
#include "wgkit/harness.hpp"
#include "wgkit/pipeline.hpp"
#include "wgkit/vecmath.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <cstring>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace wgkit;

namespace {

std::string slurp(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string &path, const std::string &data) {
  std::ofstream out(path, std::ios::binary);
  out.write(data.data(), long(data.size()));
}

LocalSize parse_local(const std::string &s) {
  LocalSize ls;
  if (sscanf(s.c_str(), "%d,%d,%d", &ls.x, &ls.y, &ls.z) >= 1)
    return ls;
  throw CLI::ValidationError("--local-size", "expected X[,Y[,Z]]");
}

std::array<int, 3> parse_groups(const std::string &s) {
  std::array<int, 3> g{1, 1, 1};
  sscanf(s.c_str(), "%d,%d,%d", &g[0], &g[1], &g[2]);
  return g;
}

size_t elem_bytes(ScalarKind k) {
  return k == ScalarKind::F64 ? 8 : k == ScalarKind::Bool ? 1 : 4;
}

// Builds launch and image from --bind/--buffer/--set/--local-elems options.
struct RunSetup {
  Launch launch;
  MemoryImage image;
};

RunSetup make_setup(const KernelFunction &k, const std::string &local,
                    const std::string &groups,
                    const std::vector<std::string> &binds,
                    const std::vector<std::string> &buffers,
                    const std::vector<std::string> &sets,
                    const std::vector<std::string> &locals) {
  RunSetup s;
  s.launch.local = parse_local(local);
  s.launch.num_groups = parse_groups(groups);

  auto split_eq = [](const std::string &kv) {
    auto p = kv.find('=');
    if (p == std::string::npos)
      throw std::runtime_error("expected name=value, got " + kv);
    return std::make_pair(kv.substr(0, p), kv.substr(p + 1));
  };
  auto param_elem = [&](const std::string &name) {
    ValueId v = k.find_value(name);
    if (v == kNoValue)
      throw std::runtime_error("no kernel param named " + name);
    return k.value_type(v).elem;
  };

  for (const auto &kv : binds) {
    auto [name, file] = split_eq(kv);
    ScalarKind kind = param_elem(name);
    std::string raw = slurp(file);
    size_t w = elem_bytes(kind);
    int h = s.image.add_buffer(name, kind, int64_t(raw.size() / w));
    for (size_t i = 0; i < s.image.buffers[size_t(h)].data.size(); ++i) {
      uint64_t bits = 0;
      std::memcpy(&bits, raw.data() + i * w, w);
      s.image.buffers[size_t(h)].data[i] = bits;
    }
  }
  for (const auto &kv : buffers) {
    auto [name, count] = split_eq(kv);
    s.image.add_buffer(name, param_elem(name), std::stoll(count));
  }
  for (const auto &kv : sets) {
    auto [name, val] = split_eq(kv);
    ScalarKind kind = param_elem(name);
    if (kind == ScalarKind::F32)
      s.launch.scalar_binds[name] = Scalar::make_f32(std::stof(val));
    else if (kind == ScalarKind::F64)
      s.launch.scalar_binds[name] = Scalar::make_f64(std::stod(val));
    else if (kind == ScalarKind::Bool)
      s.launch.scalar_binds[name] = Scalar::make_bool(val == "true" || val == "1");
    else
      s.launch.scalar_binds[name] = Scalar::make_i32(int32_t(std::stol(val)));
  }
  for (const auto &kv : locals) {
    auto [name, count] = split_eq(kv);
    s.launch.local_elems[name] = std::stoll(count);
  }
  return s;
}

int cmd_compile(const std::string &input, const std::string &local,
                bool hparallel, bool dynamic, const std::string &dump_after,
                const std::string &emit, const std::string &output) {
  auto k = parse_kernel(slurp(input));
  PassConfig cfg;
  cfg.local = parse_local(local);
  cfg.hparallel = hparallel;
  cfg.dynamic_local_size = dynamic;
  if (!dump_after.empty()) {
    std::stringstream ss(dump_after);
    std::string item;
    while (std::getline(ss, item, ','))
      cfg.dump_after.push_back(item);
  }
  auto res = compile(k, cfg);
  for (auto &[stage, text] : res.dumps)
    std::cout << "# ---- after " << stage << " ----\n" << text << "\n";

  std::string out;
  if (emit == "json-summary")
    out = summary_json(res);
  else
    out = print_kernel(res.wg.fn);
  if (output.empty())
    std::cout << out;
  else
    write_file(output, out);
  return 0;
}

int cmd_run(const std::string &input, const std::string &engine,
            const std::string &local, const std::string &groups,
            const std::vector<std::string> &binds,
            const std::vector<std::string> &buffers,
            const std::vector<std::string> &sets,
            const std::vector<std::string> &locals, bool hparallel,
            uint64_t schedule_seed, const std::string &dump_mem) {
  auto k = parse_kernel(slurp(input));
  auto setup = make_setup(k, local, groups, binds, buffers, sets, locals);

  ExecResult result;
  KernelFunction ran = k;
  if (engine == "oracle") {
    ExecOptions opts;
    opts.schedule_seed = schedule_seed;
    ConvertedLocals conv = convert_automatic_locals(k);
    Launch l = setup.launch;
    for (auto &[name, count] : conv.added_params)
      l.local_elems[name] = count;
    result = run_oracle(conv.fn, l, setup.image, opts);
  } else if (engine == "compiled") {
    PassConfig cfg;
    cfg.local = setup.launch.local;
    cfg.hparallel = hparallel;
    auto res = compile(k, cfg);
    for (auto &[name, count] : res.local_params)
      setup.launch.local_elems[name] = count;
    result = run_compiled(res.wg.fn, setup.launch, setup.image);
  } else {
    throw std::runtime_error("unknown engine " + engine);
  }

  auto bytes = dump_memory(ran, result.mem);
  if (!dump_mem.empty()) {
    std::ofstream out(dump_mem, std::ios::binary);
    out.write(reinterpret_cast<const char *>(bytes.data()), long(bytes.size()));
    std::cout << "wrote " << bytes.size() << " bytes to " << dump_mem << "\n";
  } else {
    for (const Param &p : ran.params) {
      if (p.space != AddressSpace::Global && p.space != AddressSpace::Constant)
        continue;
      int h = result.mem.find(p.name);
      if (h < 0)
        continue;
      std::cout << p.name << ":";
      const TypedBuffer &b = result.mem.buffers[size_t(h)];
      for (size_t i = 0; i < b.data.size() && i < 32; ++i) {
        Scalar v = b.get(int64_t(i));
        if (b.elem == ScalarKind::F32)
          std::cout << " " << v.as_f32();
        else if (b.elem == ScalarKind::F64)
          std::cout << " " << v.as_f64();
        else
          std::cout << " " << v.as_i32();
      }
      if (b.data.size() > 32)
        std::cout << " ...";
      std::cout << "\n";
    }
  }
  return 0;
}

int cmd_diff_exec(const std::string &range, int jobs, double cond_prob,
                  int barriers, bool hparallel) {
  uint64_t a = 0, b = 0;
  if (sscanf(range.c_str(), "%llu..%llu", (unsigned long long *)&a,
             (unsigned long long *)&b) != 2)
    throw std::runtime_error("expected --seed-range A..B");
#ifdef _OPENMP
  if (jobs > 0)
    omp_set_num_threads(jobs);
#else
  (void)jobs;
#endif
  DiffOptions opts;
  opts.hparallel = hparallel;
  opts.gen.cond_barrier_prob = cond_prob;
  if (barriers >= 0)
    opts.gen.barriers = barriers;
  auto t0 = std::chrono::steady_clock::now();
  auto results = diff_exec_range(a, b, opts);
  auto dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0);
  int pass = 0;
  for (const auto &r : results) {
    printf("%8llu  %-4s  %s\n", (unsigned long long)r.seed,
           r.pass ? "ok" : "FAIL", r.detail.c_str());
    pass += r.pass ? 1 : 0;
  }
  printf("%d/%zu seeds pass (%.1fs)\n", pass, results.size(), dt.count());
  return pass == int(results.size()) ? 0 : 1;
}

int cmd_regions(const std::string &input, const std::string &after, bool dot,
                bool json_out) {
  auto k = parse_kernel(slurp(input));
  KernelFunction staged = canonicalize_barriers(normalize_single_exit(k));
  if (after == "tail-dup" || after == "peel")
    staged = tail_duplicate(staged);
  if (after == "peel")
    staged = peel_first_iteration(staged, form_parallel_regions(staged));
  auto rs = form_parallel_regions(staged);
  if (dot) {
    std::cout << rs.to_dot(staged);
    std::cout << "# barrier CFG\n" << rs.bcfg.to_dot(staged);
  }
  if (json_out || !dot)
    std::cout << rs.to_json(staged);
  return 0;
}

int cmd_bufalloc(const std::string &trace) {
  std::istringstream in(slurp(trace));
  std::string op;
  std::unique_ptr<bufalloc::Region> region;
  std::map<uint64_t, uint64_t> results; // trace line -> offset
  uint64_t line = 0;
  while (in >> op) {
    ++line;
    uint64_t arg = 0;
    in >> arg;
    if (op == "init") {
      region = std::make_unique<bufalloc::Region>(arg);
    } else if (!region) {
      throw std::runtime_error("trace must start with init");
    } else if (op == "alloc") {
      uint64_t off = region->alloc(arg);
      results[line] = off;
      std::cout << "alloc " << arg << " -> " << off << "\n";
    } else if (op == "galloc") {
      uint64_t off = region->alloc_greedy(arg);
      std::cout << "galloc " << arg << " -> " << off << "\n";
    } else if (op == "free") {
      region->free(arg);
      std::cout << "free " << arg << "\n";
    } else {
      throw std::runtime_error("unknown trace op " + op);
    }
    region->check_invariants();
    std::cout << region->dump() << "\n";
  }
  return 0;
}

template <class T>
void bench_one(const char *opname, const char *tyname, int width, int samples,
               T (*scalar)(T), long double (*ref)(long double), double lo,
               double hi) {
  std::mt19937_64 rng(1234);
  std::vector<T> xs(static_cast<size_t>(samples));
  for (auto &x : xs)
    x = T(lo + (hi - lo) * double(rng()) / double(UINT64_MAX));

  double max_ulp = 0;
  for (T x : xs) {
    T got = scalar(x);
    long double want = ref((long double)x);
    double u = sizeof(T) == 4 ? vecmath::ulp_error_f32(float(got), want)
                              : vecmath::ulp_error_f64(double(got), want);
    max_ulp = std::max(max_ulp, u);
  }

  auto t0 = std::chrono::steady_clock::now();
  T sink = 0;
  for (int rep = 0; rep < 4; ++rep)
    for (T x : xs)
      sink += scalar(x);
  auto dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0);
  double ns = dt.count() * 1e9 / (4.0 * samples);
  if (sink == T(12345))
    fprintf(stderr, "?");
  printf("%s,%s,%d,%.2f,%.3f\n", opname, tyname, width, ns, max_ulp);
}

int cmd_vecmath(const std::string &op, const std::string &type, int width,
                int samples) {
  printf("op,type,width,ns_per_call,max_ulp\n");
  bool f32 = type == "f32";
  if (op == "sin") {
    if (f32)
      bench_one<float>("sin", "f32", width, samples, vecmath::sin_scalar, sinl,
                       -1e4, 1e4);
    else
      bench_one<double>("sin", "f64", width, samples, vecmath::sin_scalar, sinl,
                        -1e4, 1e4);
  } else if (op == "exp") {
    if (f32)
      bench_one<float>("exp", "f32", width, samples, vecmath::exp_scalar, expl,
                       -85, 85);
    else
      bench_one<double>("exp", "f64", width, samples, vecmath::exp_scalar, expl,
                        -700, 700);
  } else if (op == "sqrt") {
    if (f32)
      bench_one<float>("sqrt", "f32", width, samples, vecmath::sqrt_scalar,
                       sqrtl, 0, 1e8);
    else
      bench_one<double>("sqrt", "f64", width, samples, vecmath::sqrt_scalar,
                        sqrtl, 0, 1e8);
  } else {
    throw std::runtime_error("unknown op " + op);
  }
  return 0;
}

int cmd_corpus(const std::string &root, const std::string &only,
               const std::string &regen_golden) {
  int failures = 0;
  for (const std::string &id : corpus_case_ids(root)) {
    if (!only.empty() && only != id)
      continue;
    auto c = load_corpus_case(root, id);
    if (!regen_golden.empty()) {
      auto oracle = corpus_oracle(c.kernel, c.launch, c.image);
      auto bytes = dump_memory(c.kernel, oracle.mem);
      std::ofstream out(c.dir + "/golden.bin", std::ios::binary);
      out.write(reinterpret_cast<const char *>(bytes.data()),
                long(bytes.size()));
      printf("%-8s golden regenerated (%zu bytes)\n", id.c_str(), bytes.size());
      continue;
    }
    auto rep = run_corpus_case(c);
    printf("%-8s %s  %s\n", rep.id.c_str(), rep.pass ? "ok" : "FAIL",
           rep.detail.c_str());
    failures += rep.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"work-group function generation toolkit"};
  app.require_subcommand(1);

  uint64_t seed = 0;
  bool verbose = false;
  app.add_option("--seed", seed, "global seed");
  app.add_flag("--verbose", verbose, "verbose output");

  // compile
  auto *c = app.add_subcommand("compile", "compile a kernel to a work-group function");
  std::string input, local = "1,1,1", dump_after, emit = "wg-ir", output;
  bool hparallel = true, dynamic = false;
  c->add_option("--input", input)->required();
  c->add_option("--local-size", local);
  c->add_option("--hparallel", hparallel, "horizontal inner-loop parallelization");
  c->add_flag("--dynamic-local-size", dynamic);
  c->add_option("--dump-after", dump_after, "comma list of stages, or 'all'");
  c->add_option("--emit", emit)->check(CLI::IsMember({"wg-ir", "json-summary"}));
  c->add_option("-o,--output", output);

  // run
  auto *r = app.add_subcommand("run", "execute a kernel");
  std::string engine = "oracle", groups = "1,1,1", dump_mem;
  std::vector<std::string> binds, buffers, sets, locals;
  uint64_t schedule_seed = 0;
  bool run_hparallel = true;
  r->add_option("--input", input)->required();
  r->add_option("--engine", engine)->check(CLI::IsMember({"oracle", "compiled"}));
  r->add_option("--local-size", local);
  r->add_option("--groups", groups);
  r->add_option("--bind", binds, "param=file.bin");
  r->add_option("--buffer", buffers, "param=ELEMS zero-initialized");
  r->add_option("--set", sets, "scalar param=value");
  r->add_option("--local-elems", locals, "local param=ELEMS");
  r->add_option("--hparallel", run_hparallel);
  r->add_option("--schedule-seed", schedule_seed);
  r->add_option("--dump-mem", dump_mem, "write raw little-endian memory dump");

  // diff-exec
  auto *d = app.add_subcommand("diff-exec", "randomized oracle/compiled comparison");
  std::string range = "1..50";
  int jobs = 0, barriers = -1;
  double cond_prob = 0.4;
  bool diff_hparallel = true;
  d->add_option("--seed-range", range, "A..B");
  d->add_option("--jobs", jobs, "worker threads (0 = default)");
  d->add_option("--cond-prob", cond_prob, "conditional barrier probability");
  d->add_option("--barriers", barriers, "barrier segments per kernel");
  d->add_option("--hparallel", diff_hparallel);

  // regions
  auto *g = app.add_subcommand("regions", "parallel region structure");
  std::string after;
  bool dot = false, json_out = false;
  g->add_option("--input", input)->required();
  g->add_option("--after", after)->check(CLI::IsMember({"", "tail-dup", "peel"}));
  g->add_flag("--dot", dot);
  g->add_flag("--json", json_out);

  // bufalloc
  auto *b = app.add_subcommand("bufalloc", "replay an allocator trace");
  std::string trace;
  b->add_option("--trace", trace)->required();

  // vecmath
  auto *v = app.add_subcommand("vecmath", "math function bench and accuracy");
  std::string op = "sin", type = "f32";
  int width = 4, samples = 100000;
  bool bench = false;
  v->add_option("--op", op)->check(CLI::IsMember({"sin", "exp", "sqrt"}));
  v->add_option("--type", type)->check(CLI::IsMember({"f32", "f64"}));
  v->add_option("--width", width)->check(CLI::IsMember({1, 2, 4, 8}));
  v->add_option("--samples", samples);
  v->add_flag("--bench", bench);

  // corpus
  auto *co = app.add_subcommand("corpus", "run the checked-in kernel corpus");
  auto *cr = co->add_subcommand("run", "run corpus cases");
  std::string root = "corpus", only, regen;
  cr->add_option("--root", root);
  cr->add_option("--case", only);
  cr->add_option("--regen-golden", regen,
                 "regenerate golden dumps from the oracle (pass 'yes')");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*c)
      return cmd_compile(input, local, hparallel, dynamic, dump_after, emit,
                         output);
    if (*r)
      return cmd_run(input, engine, local, groups, binds, buffers, sets, locals,
                     run_hparallel, schedule_seed, dump_mem);
    if (*d)
      return cmd_diff_exec(range, jobs, cond_prob, barriers, diff_hparallel);
    if (*g)
      return cmd_regions(input, after, dot, json_out);
    if (*b)
      return cmd_bufalloc(trace);
    if (*v)
      return cmd_vecmath(op, type, width, samples);
    if (*co)
      return cmd_corpus(root, only, regen);
  } catch (const ParseError &e) {
    fprintf(stderr, "error: %s at line %d, column %d\n", e.what(), e.line, e.col);
    return 1;
  } catch (const ValidationError &e) {
    fprintf(stderr, "internal invariant failure: %s\n", e.what());
    return 2;
  } catch (const std::exception &e) {
    fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
