//===- regions.cc - region formation, tail duplication, peeling -------------===//
//
// Part of wgkit, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "wgkit/regions.hpp"

#include <algorithm>
#include <cassert>
#include <sstream>

namespace wgkit {

namespace {

std::set<BlockId> forward_closure(const KernelFunction &k, BlockId from) {
  std::set<BlockId> out;
  std::vector<BlockId> work{from};
  out.insert(from);
  while (!work.empty()) {
    BlockId b = work.back();
    work.pop_back();
    for (BlockId s : successors(k, b))
      if (!out.count(s)) {
        out.insert(s);
        work.push_back(s);
      }
  }
  return out;
}

bool reaches(const KernelFunction &k, BlockId from, BlockId to) {
  return forward_closure(k, from).count(to) != 0;
}

} // namespace

std::set<BlockId> create_subgraph(const KernelFunction &k, BlockId a, BlockId b) {
  auto fwd = forward_closure(k, a);
  if (!fwd.count(b))
    throw ValidationError("create_subgraph: " + k.block(b).name +
                          " is not reachable from " + k.block(a).name);
  std::set<BlockId> out;
  for (BlockId x : fwd)
    if (reaches(k, x, b))
      out.insert(x);
  return out;
}

ReplicaMap replicate_cfg(KernelFunction &k, const std::set<BlockId> &blocks) {
  ReplicaMap m;

  // Fresh values for every definition inside the set.
  for (BlockId b : blocks) {
    const BasicBlock &bb = k.block(b);
    for (const Phi &phi : bb.phis)
      m.value_map[phi.result] =
          k.new_value(k.value_name(phi.result) + ".d", k.value_type(phi.result));
    for (const Instruction &in : bb.body)
      if (in.result != kNoValue)
        m.value_map[in.result] =
            k.new_value(k.value_name(in.result) + ".d", k.value_type(in.result));
  }
  for (BlockId b : blocks)
    m.block_map[b] = k.new_block(k.block(b).name + ".d");

  for (BlockId b : blocks) {
    // take copies up front: new_block above may have reallocated
    BasicBlock src = k.block(b);
    BasicBlock &dst = k.block(m.block_map[b]);
    for (const Phi &phi : src.phis) {
      Phi np;
      np.result = m.value_map[phi.result];
      np.ty = phi.ty;
      for (const PhiIncoming &pi : phi.incoming) {
        if (blocks.count(pi.pred))
          np.incoming.push_back(PhiIncoming{m.block_map[pi.pred], m.mapped_value(pi.value)});
        // entries from outside predecessors are dropped: the copy has no
        // such incoming edge until a caller retargets one
      }
      dst.phis.push_back(std::move(np));
    }
    for (const Instruction &in : src.body) {
      Instruction ni = in;
      if (ni.result != kNoValue)
        ni.result = m.value_map[ni.result];
      for (ValueId &v : ni.operands)
        v = m.mapped_value(v);
      dst.body.push_back(std::move(ni));
    }
    Terminator t = src.term;
    if (t.cond != kNoValue)
      t.cond = m.mapped_value(t.cond);
    for (int s = 0; s < t.num_succs(); ++s) {
      BlockId succ = t.succ[s];
      if (blocks.count(succ)) {
        t.succ[s] = m.block_map[succ];
      } else {
        // external successor keeps its target; its phis gain entries for
        // the new predecessor edge
        for (Phi &phi : k.block(succ).phis) {
          ValueId v = kNoValue;
          for (const PhiIncoming &pi : phi.incoming)
            if (pi.pred == b)
              v = pi.value;
          if (v != kNoValue)
            phi.incoming.push_back(PhiIncoming{m.block_map[b], m.mapped_value(v)});
        }
      }
    }
    dst.term = t;
  }
  return m;
}

//===----------------------------------------------------------------------===//
// Tail duplication
//===----------------------------------------------------------------------===//

KernelFunction tail_duplicate(const KernelFunction &input) {
  KernelFunction k = canonicalize_barriers(input);

  for (int round = 0;; ++round) {
    if (round > 4096)
      throw ValidationError("tail duplication did not converge");

    DomInfo dom = compute_dominators(k);
    std::set<std::pair<BlockId, BlockId>> backs;
    for (auto [u, v] : back_edges(k))
      backs.insert({u, v});

    // Barrier blocks in DFS order.
    std::vector<BlockId> barriers;
    for (BlockId b : dfs_preorder(k))
      if (block_is_barrier(k, b))
        barriers.push_back(b);

    bool changed = false;
    for (BlockId beta : barriers) {
      // Walk forward from the barrier through dominated blocks; a successor
      // outside the barrier's dominance is a joined tail shared with another
      // path and gets its own copy.
      std::set<BlockId> visited{beta};
      std::vector<BlockId> work{beta};
      BlockId join_pred = kNoBlock, join = kNoBlock;
      while (!work.empty() && join == kNoBlock) {
        BlockId t = work.back();
        work.pop_back();
        const Terminator &term = k.block(t).term;
        for (int si = 0; si < term.num_succs(); ++si) {
          BlockId s = term.succ[si];
          if (backs.count({t, s}))
            continue; // loop edges are never replicated
          if (visited.count(s))
            continue;
          if (dom.dominates(beta, s)) {
            visited.insert(s);
            work.push_back(s);
          } else {
            join_pred = t;
            join = s;
            break;
          }
        }
      }
      if (join == kNoBlock)
        continue;

      // Replicate the joined suffix: everything reachable from the join.
      std::set<BlockId> tail = forward_closure(k, join);
      if (tail.count(beta))
        throw ValidationError(
            "tail duplication across a loop containing barrier block " +
            k.block(beta).name + " is not supported");

      // Remember the join's phi entries for the edge being retargeted.
      std::vector<ValueId> carried;
      for (const Phi &phi : k.block(join).phis) {
        ValueId v = kNoValue;
        for (const PhiIncoming &pi : phi.incoming)
          if (pi.pred == join_pred)
            v = pi.value;
        carried.push_back(v);
      }

      ReplicaMap m = replicate_cfg(k, tail);
      BlockId copy = m.block_map.at(join);

      // Retarget the joined edge to the copy.
      Terminator &pt = k.block(join_pred).term;
      for (int si = 0; si < pt.num_succs(); ++si)
        if (pt.succ[si] == join)
          pt.succ[si] = copy;

      // The copy's entry phis collapse to the single retargeted edge.
      auto &cphis = k.block(copy).phis;
      for (size_t i = 0; i < cphis.size(); ++i) {
        cphis[i].incoming.clear();
        cphis[i].incoming.push_back(PhiIncoming{join_pred, carried[i]});
      }
      // The original join loses the edge.
      for (Phi &phi : k.block(join).phis) {
        auto &inc = phi.incoming;
        inc.erase(std::remove_if(inc.begin(), inc.end(),
                                 [&](const PhiIncoming &pi) {
                                   return pi.pred == join_pred;
                                 }),
                  inc.end());
      }

      delete_unreachable(k);
      changed = true;
      break; // dominators are stale; restart the scan
    }

    if (!changed)
      break;
  }

  validate(k);
  return k;
}

//===----------------------------------------------------------------------===//
// Region formation
//===----------------------------------------------------------------------===//

namespace {

bool block_is_exitish(const KernelFunction &k, BlockId b) {
  return k.block(b).term.kind == Terminator::Kind::Ret;
}

// Interior blocks on barrier-free forward paths out of a node's anchor.
std::set<BlockId> forward_interior(const KernelFunction &k, const BarrierNode &n,
                                   const std::set<std::pair<BlockId, BlockId>> &backs) {
  std::set<BlockId> out;
  std::vector<BlockId> work;
  auto push = [&](BlockId from, BlockId b) {
    if (from != kNoBlock && backs.count({from, b}))
      return;
    if (block_is_barrier(k, b) || out.count(b))
      return;
    if (block_is_exitish(k, b)) {
      if (!k.block(b).phis.empty() || !k.block(b).body.empty())
        throw ValidationError("ret block " + k.block(b).name +
                              " is not empty; run canonicalize_barriers");
      return;
    }
    out.insert(b);
    work.push_back(b);
  };
  if (n.kind == BarrierNode::Kind::Entry)
    push(kNoBlock, k.entry);
  else
    for (BlockId s : successors(k, n.block))
      push(n.block, s);
  while (!work.empty()) {
    BlockId b = work.back();
    work.pop_back();
    for (BlockId s : successors(k, b))
      push(b, s);
  }
  return out;
}

// True if the node's anchor block is reachable from x along a barrier-free
// path through interior blocks. Back edges are followed here: a loop body
// reaches the region exit through its header, and the loop belongs to the
// region ("include the loops of the kernel to the parallel region").
bool interior_reaches(const KernelFunction &k, BlockId x, const BarrierNode &n) {
  std::set<BlockId> seen{x};
  std::vector<BlockId> work{x};
  while (!work.empty()) {
    BlockId b = work.back();
    work.pop_back();
    for (BlockId s : successors(k, b)) {
      if (s == n.block)
        return true;
      if (block_is_barrier(k, s) || block_is_exitish(k, s) || seen.count(s))
        continue;
      seen.insert(s);
      work.push_back(s);
    }
  }
  return false;
}

} // namespace

std::vector<int> RegionSet::regions_of(BlockId b) const {
  std::vector<int> out;
  for (const auto &r : regions)
    if (std::find(r.blocks.begin(), r.blocks.end(), b) != r.blocks.end())
      out.push_back(r.id);
  return out;
}

const ParallelRegion *RegionSet::region_ending_at(BlockId b) const {
  for (const auto &r : regions)
    if (r.exit == b)
      return &r;
  return nullptr;
}

RegionSet form_parallel_regions(const KernelFunction &k) {
  for (BlockId b = 0; b < k.blocks.size(); ++b) {
    if (k.blocks[b].dead)
      continue;
    if (has_barrier(k.block(b)) &&
        (k.block(b).body.size() != 1 || !k.block(b).phis.empty()))
      throw ValidationError("barriers are not canonicalized; run "
                            "canonicalize_barriers first");
  }

  RegionSet rs;
  rs.bcfg = build_barrier_cfg(k, BarrierCfgMode::Forward);
  const BarrierCFG &g = rs.bcfg;

  for (size_t n = 0; n < g.nodes.size(); ++n) {
    if (int(n) == g.entry_node)
      continue;
    if (g.preds[n].size() > 1)
      throw ValidationError(
          "barrier node has more than one immediate predecessor barrier; "
          "conditional barriers require tail duplication first");
  }

  std::set<std::pair<BlockId, BlockId>> backs;
  for (auto [u, v] : back_edges(k))
    backs.insert({u, v});

  auto order = dfs_preorder(k);
  auto pos = [&](BlockId b) {
    auto it = std::find(order.begin(), order.end(), b);
    return it == order.end() ? order.size() : size_t(it - order.begin());
  };

  // One region per barrier-CFG edge (p -> n); nodes are visited in barrier
  // CFG DFS order for stable ids.
  std::vector<int> node_order;
  {
    std::vector<bool> seen(g.nodes.size(), false);
    std::vector<int> stack{g.entry_node};
    seen[size_t(g.entry_node)] = true;
    while (!stack.empty()) {
      int x = stack.back();
      stack.pop_back();
      node_order.push_back(x);
      auto succs = g.succs[size_t(x)];
      std::sort(succs.begin(), succs.end(), [&](int a, int b2) {
        return pos(g.nodes[size_t(a)].block) > pos(g.nodes[size_t(b2)].block);
      });
      for (int s : succs)
        if (!seen[size_t(s)]) {
          seen[size_t(s)] = true;
          stack.push_back(s);
        }
    }
  }

  int next_id = 0;
  for (int n : node_order) {
    if (n == g.entry_node)
      continue;
    if (g.preds[size_t(n)].empty())
      throw ValidationError("barrier node unreachable in the forward barrier CFG");
    int p = g.preds[size_t(n)][0];

    ParallelRegion r;
    r.id = next_id++;
    r.start_node = p;
    r.end_node = n;
    r.exit = g.nodes[size_t(n)].block;

    auto fwd = forward_interior(k, g.nodes[size_t(p)], backs);
    for (BlockId x : fwd)
      if (interior_reaches(k, x, g.nodes[size_t(n)]) ||
          x == g.nodes[size_t(n)].block)
        r.blocks.push_back(x);
    std::sort(r.blocks.begin(), r.blocks.end(),
              [&](BlockId a, BlockId b2) { return pos(a) < pos(b2); });

    // Region entry: the block the start node branches into.
    if (!r.blocks.empty()) {
      std::set<BlockId> inside(r.blocks.begin(), r.blocks.end());
      if (g.nodes[size_t(p)].kind == BarrierNode::Kind::Entry) {
        r.entry = k.entry;
      } else {
        for (BlockId s : successors(k, g.nodes[size_t(p)].block))
          if (inside.count(s) && !backs.count({g.nodes[size_t(p)].block, s})) {
            if (r.entry != kNoBlock && r.entry != s)
              throw ValidationError("region has multiple entry blocks");
            r.entry = s;
          }
      }
      if (r.entry == kNoBlock)
        throw ValidationError("region entry not found");
    }
    rs.regions.push_back(std::move(r));
  }
  return rs;
}

std::string RegionSet::to_json(const KernelFunction &k) const {
  std::ostringstream os;
  os << "{\n  \"region_count\": " << regions.size() << ",\n  \"regions\": [\n";
  for (size_t i = 0; i < regions.size(); ++i) {
    const auto &r = regions[i];
    os << "    {\"id\": " << r.id << ", \"entry\": \""
       << (r.entry == kNoBlock ? "" : k.block(r.entry).name) << "\", \"exit\": \""
       << k.block(r.exit).name << "\", \"blocks\": [";
    for (size_t j = 0; j < r.blocks.size(); ++j) {
      if (j)
        os << ", ";
      os << "\"" << k.block(r.blocks[j]).name << "\"";
    }
    os << "]}" << (i + 1 < regions.size() ? "," : "") << "\n";
  }
  os << "  ]\n}\n";
  return os.str();
}

std::string RegionSet::to_dot(const KernelFunction &k) const {
  static const char *palette[] = {"lightblue", "lightgreen", "lightsalmon",
                                  "khaki",     "plum",       "lightcyan",
                                  "wheat",     "mistyrose"};
  std::ostringstream os;
  os << "digraph regions {\n  node [style=filled, fillcolor=white];\n";
  for (BlockId b = 0; b < k.blocks.size(); ++b) {
    if (k.blocks[b].dead)
      continue;
    auto rids = regions_of(b);
    std::string shape = block_is_barrier(k, b) ? "box" : "ellipse";
    std::string color = "white";
    if (rids.size() == 1)
      color = palette[size_t(rids[0]) % 8];
    else if (rids.size() > 1)
      color = "gray80"; // shared selector prefix
    os << "  b" << b << " [label=\"" << k.block(b).name << "\", shape=" << shape
       << ", fillcolor=" << color << "];\n";
  }
  for (BlockId b = 0; b < k.blocks.size(); ++b) {
    if (k.blocks[b].dead)
      continue;
    for (BlockId s : successors(k, b))
      os << "  b" << b << " -> b" << s << ";\n";
  }
  os << "}\n";
  return os.str();
}

//===----------------------------------------------------------------------===//
// Loop peeling of selector prefixes
//===----------------------------------------------------------------------===//

namespace {

struct Family {
  int start_node;
  std::vector<const ParallelRegion *> regions;
};

} // namespace

KernelFunction peel_first_iteration(const KernelFunction &input, const RegionSet &rs) {
  KernelFunction k = input;

  // Group overlapping regions by their start node.
  std::map<int, Family> families;
  for (const auto &r : rs.regions) {
    auto &f = families[r.start_node];
    f.start_node = r.start_node;
    f.regions.push_back(&r);
  }

  for (auto &[start, fam] : families) {
    if (fam.regions.size() < 2)
      continue;

    // Shared selector prefix: blocks belonging to more than one region.
    std::set<BlockId> shared, all_blocks;
    std::set<BlockId> exits;
    for (const auto *r : fam.regions) {
      for (BlockId b : r->blocks) {
        if (all_blocks.count(b))
          shared.insert(b);
        all_blocks.insert(b);
      }
      exits.insert(r->exit);
    }
    if (shared.empty())
      continue;

    // Trigger: peeling is needed iff the shared prefix has side effects or
    // feeds values into non-shared code. A family already in peeled form
    // fails both tests and is left alone.
    bool needs = false;
    for (BlockId b : shared)
      for (const Instruction &in : k.block(b).body)
        if (in.op == Opcode::Store)
          needs = true;
    std::set<ValueId> shared_defs;
    for (BlockId b : shared) {
      for (const Phi &phi : k.block(b).phis)
        shared_defs.insert(phi.result);
      for (const Instruction &in : k.block(b).body)
        if (in.result != kNoValue)
          shared_defs.insert(in.result);
    }
    auto value_used_outside_shared = [&]() {
      for (BlockId b = 0; b < k.blocks.size(); ++b) {
        if (k.blocks[b].dead || shared.count(b))
          continue;
        const BasicBlock &bb = k.block(b);
        for (const Phi &phi : bb.phis)
          for (const PhiIncoming &pi : phi.incoming)
            if (shared_defs.count(pi.value))
              return true;
        for (const Instruction &in : bb.body)
          for (ValueId v : in.operands)
            if (shared_defs.count(v))
              return true;
        if (bb.term.cond != kNoValue && shared_defs.count(bb.term.cond))
          return true;
      }
      return false;
    };
    if (!needs)
      needs = value_used_outside_shared();
    if (!needs)
      continue;

    // The whole family must live outside b-loop back edges.
    {
      auto backs = back_edges(k);
      for (auto [u, v] : backs)
        if (all_blocks.count(v) && !all_blocks.count(u) &&
            block_is_barrier(k, u))
          throw ValidationError("peeling across a kernel loop edge is not "
                                "supported");
    }

    BlockId family_entry = fam.regions[0]->entry;
    for (const auto *r : fam.regions)
      if (r->entry != family_entry)
        throw ValidationError("family regions do not share their entry block");

    // If the shared prefix starts at the kernel entry, keep allocas out of
    // the copies by splitting them into a prefix block first.
    if (shared.count(k.entry)) {
      BasicBlock &eb = k.block(k.entry);
      size_t nalloca = 0;
      while (nalloca < eb.body.size() &&
             (eb.body[nalloca].op == Opcode::AllocaPrivate ||
              eb.body[nalloca].op == Opcode::AllocaLocal))
        ++nalloca;
      if (nalloca > 0) {
        BlockId rest = k.new_block(k.block(k.entry).name + ".body");
        BasicBlock &eb2 = k.block(k.entry);
        BasicBlock &rb = k.block(rest);
        rb.body.assign(eb2.body.begin() + long(nalloca), eb2.body.end());
        rb.term = eb2.term;
        eb2.body.resize(nalloca);
        eb2.term = Terminator::br(rest);
        for (int s = 0; s < rb.term.num_succs(); ++s)
          for (Phi &phi : k.block(rb.term.succ[s]).phis)
            for (PhiIncoming &pi : phi.incoming)
              if (pi.pred == k.entry)
                pi.pred = rest;
        // the family now starts at the rest block
        shared.erase(k.entry);
        shared.insert(rest);
        all_blocks.erase(k.entry);
        all_blocks.insert(rest);
        family_entry = rest;
      }
    }

    // Region choice per out-of-shared edge target: which exits are reachable
    // through family blocks.
    auto exits_reachable_from = [&](BlockId t) {
      std::set<BlockId> found;
      std::set<BlockId> seen;
      std::vector<BlockId> work;
      auto push = [&](BlockId b) {
        if (exits.count(b)) {
          found.insert(b);
          return;
        }
        if (!all_blocks.count(b) || seen.count(b))
          return;
        seen.insert(b);
        work.push_back(b);
      };
      push(t);
      while (!work.empty()) {
        BlockId b = work.back();
        work.pop_back();
        for (BlockId s : successors(k, b))
          push(s);
      }
      return found;
    };

    // Per-region straightened copies.
    struct Copy {
      const ParallelRegion *r;
      std::map<BlockId, BlockId> bmap;
      std::map<ValueId, ValueId> vmap;
    };
    std::vector<Copy> copies;

    for (const auto *r : fam.regions) {
      Copy c;
      c.r = r;
      std::set<BlockId> cset(r->blocks.begin(), r->blocks.end());
      std::string suffix = ".p" + std::to_string(r->id);

      for (BlockId b : cset) {
        for (const Phi &phi : k.block(b).phis)
          c.vmap[phi.result] = k.new_value(k.value_name(phi.result) + suffix,
                                           k.value_type(phi.result));
        for (const Instruction &in : k.block(b).body)
          if (in.result != kNoValue)
            c.vmap[in.result] =
                k.new_value(k.value_name(in.result) + suffix, k.value_type(in.result));
      }
      for (BlockId b : cset)
        c.bmap[b] = k.new_block(k.block(b).name + suffix);

      auto mapped_v = [&](ValueId v) {
        auto it = c.vmap.find(v);
        return it == c.vmap.end() ? v : it->second;
      };

      for (BlockId b : cset) {
        BasicBlock src = k.block(b);
        BasicBlock &dst = k.block(c.bmap[b]);
        for (const Phi &phi : src.phis) {
          Phi np;
          np.result = c.vmap[phi.result];
          np.ty = phi.ty;
          for (const PhiIncoming &pi : phi.incoming)
            if (cset.count(pi.pred))
              np.incoming.push_back(PhiIncoming{c.bmap[pi.pred], mapped_v(pi.value)});
          // boundary entries are filled when the selector is wired up
          dst.phis.push_back(std::move(np));
        }
        for (const Instruction &in : src.body) {
          Instruction ni = in;
          if (ni.result != kNoValue)
            ni.result = c.vmap[ni.result];
          for (ValueId &v : ni.operands)
            v = mapped_v(v);
          dst.body.push_back(std::move(ni));
        }
        // Straighten the terminator toward this region.
        Terminator t = src.term;
        if (t.cond != kNoValue)
          t.cond = mapped_v(t.cond);
        auto in_region = [&](BlockId s) { return cset.count(s) || s == r->exit; };
        if (t.kind == Terminator::Kind::CondBr) {
          bool in0 = in_region(t.succ[0]), in1 = in_region(t.succ[1]);
          if (in0 && !in1)
            t = Terminator::br(t.succ[0] == r->exit ? r->exit : c.bmap[t.succ[0]]);
          else if (!in0 && in1)
            t = Terminator::br(t.succ[1] == r->exit ? r->exit : c.bmap[t.succ[1]]);
          else if (in0 && in1) {
            t.succ[0] = t.succ[0] == r->exit ? r->exit : c.bmap[t.succ[0]];
            t.succ[1] = t.succ[1] == r->exit ? r->exit : c.bmap[t.succ[1]];
          } else {
            throw ValidationError("family block cannot reach its region exit");
          }
        } else if (t.kind == Terminator::Kind::Br) {
          if (!in_region(t.succ[0]))
            throw ValidationError("family block cannot reach its region exit");
          t.succ[0] = t.succ[0] == r->exit ? r->exit : c.bmap[t.succ[0]];
        }
        dst.term = t;
      }
      copies.push_back(std::move(c));
    }

    // Pure selector: a copy of the shared prefix with stores stripped whose
    // leaf edges pick a region body.
    std::map<BlockId, BlockId> smap;
    std::map<ValueId, ValueId> svmap;
    for (BlockId b : shared) {
      for (const Phi &phi : k.block(b).phis)
        svmap[phi.result] =
            k.new_value(k.value_name(phi.result) + ".sel", k.value_type(phi.result));
      for (const Instruction &in : k.block(b).body)
        if (in.result != kNoValue)
          svmap[in.result] =
              k.new_value(k.value_name(in.result) + ".sel", k.value_type(in.result));
    }
    for (BlockId b : shared)
      smap[b] = k.new_block(k.block(b).name + ".sel");

    auto sel_v = [&](ValueId v) {
      auto it = svmap.find(v);
      return it == svmap.end() ? v : it->second;
    };

    // The selector only evaluates branch decisions: slice backward from the
    // terminator conditions of the shared prefix. Stores and computations
    // that feed no branch fall away.
    std::set<ValueId> needed;
    {
      std::vector<ValueId> work;
      for (BlockId b : shared)
        if (k.block(b).term.cond != kNoValue)
          work.push_back(k.block(b).term.cond);
      while (!work.empty()) {
        ValueId v = work.back();
        work.pop_back();
        if (needed.count(v))
          continue;
        needed.insert(v);
        for (BlockId b : shared) {
          for (const Phi &phi : k.block(b).phis)
            if (phi.result == v)
              for (const PhiIncoming &pi : phi.incoming)
                work.push_back(pi.value);
          for (const Instruction &in : k.block(b).body)
            if (in.result == v)
              for (ValueId o : in.operands)
                work.push_back(o);
        }
      }
    }

    // Guard: the sliced evaluation must not read memory the dropped stores
    // wrote, otherwise the peeled branch decision would see stale data.
    {
      std::set<ValueId> stored_ptrs;
      for (BlockId b : shared)
        for (const Instruction &in : k.block(b).body)
          if (in.op == Opcode::Store)
            stored_ptrs.insert(in.operands[1]);
      for (BlockId b : shared)
        for (const Instruction &in : k.block(b).body)
          if (in.op == Opcode::Load && needed.count(in.result) &&
              stored_ptrs.count(in.operands[0]))
            throw ValidationError(
                "selector condition reads memory the prefix writes; peeling "
                "unsupported");
    }

    auto copy_entry_of = [&](BlockId exit_block) -> BlockId {
      for (const Copy &c : copies)
        if (c.r->exit == exit_block)
          return c.bmap.at(c.r->entry);
      throw ValidationError("no region copy for exit block");
    };

    for (BlockId b : shared) {
      BasicBlock src = k.block(b);
      BasicBlock &dst = k.block(smap[b]);
      for (const Phi &phi : src.phis) {
        if (!needed.count(phi.result))
          continue;
        Phi np;
        np.result = svmap[phi.result];
        np.ty = phi.ty;
        for (const PhiIncoming &pi : phi.incoming) {
          if (shared.count(pi.pred))
            np.incoming.push_back(PhiIncoming{smap[pi.pred], sel_v(pi.value)});
          else
            np.incoming.push_back(pi); // boundary edge, retargeted below
        }
        dst.phis.push_back(std::move(np));
      }
      for (const Instruction &in : src.body) {
        if (in.result == kNoValue || !needed.count(in.result))
          continue;
        Instruction ni = in;
        ni.result = svmap[ni.result];
        for (ValueId &v : ni.operands)
          v = sel_v(v);
        dst.body.push_back(std::move(ni));
      }
      Terminator t = src.term;
      if (t.cond != kNoValue)
        t.cond = sel_v(t.cond);
      for (int si = 0; si < t.num_succs(); ++si) {
        BlockId s = t.succ[si];
        if (shared.count(s)) {
          t.succ[si] = smap[s];
        } else {
          auto reach = exits_reachable_from(s);
          if (reach.size() != 1)
            throw ValidationError("selector leaf edge does not pick a unique "
                                  "region");
          t.succ[si] = copy_entry_of(*reach.begin());
        }
      }
      dst.term = t;
    }

    // Wire boundary phi entries of each copy entry to the selector blocks
    // that branch into it.
    for (const Copy &c : copies) {
      BlockId centry = c.bmap.at(c.r->entry);
      // original boundary values of the region entry's phis
      const BasicBlock &orig = k.block(c.r->entry);
      std::set<BlockId> cset(c.r->blocks.begin(), c.r->blocks.end());
      for (BlockId sb : shared) {
        BlockId sel_block = smap[sb];
        const Terminator &t = k.block(sel_block).term;
        bool edges_here = false;
        for (int si = 0; si < t.num_succs(); ++si)
          if (t.succ[si] == centry)
            edges_here = true;
        if (!edges_here)
          continue;
        for (size_t pi = 0; pi < orig.phis.size(); ++pi) {
          ValueId v = kNoValue;
          for (const PhiIncoming &inc : orig.phis[pi].incoming)
            if (!cset.count(inc.pred))
              v = inc.value; // boundary value (from the start barrier)
          if (v == kNoValue)
            continue;
          k.block(centry).phis[pi].incoming.push_back(PhiIncoming{sel_block, v});
        }
      }
    }

    // Retarget the start barrier's edge (or the function entry) into the
    // selector.
    BlockId sel_entry = smap.at(family_entry);
    const BarrierNode &pn = rs.bcfg.nodes[size_t(start)];
    if (pn.kind == BarrierNode::Kind::Entry) {
      if (k.entry == family_entry)
        k.entry = sel_entry;
      else {
        Terminator &t = k.block(k.entry).term;
        for (int si = 0; si < t.num_succs(); ++si)
          if (t.succ[si] == family_entry)
            t.succ[si] = sel_entry;
      }
    } else {
      Terminator &t = k.block(pn.block).term;
      for (int si = 0; si < t.num_succs(); ++si)
        if (t.succ[si] == family_entry)
          t.succ[si] = sel_entry;
    }

    delete_unreachable(k);

    // Downstream uses of values defined in the (now dead) family blocks are
    // resolved to the unique copy whose definition dominates them.
    DomInfo dom = compute_dominators(k);
    std::set<ValueId> family_defs;
    for (BlockId b : all_blocks)
      if (k.blocks[b].dead) {
        for (const Phi &phi : k.blocks[b].phis)
          family_defs.insert(phi.result);
        for (const Instruction &in : k.blocks[b].body)
          if (in.result != kNoValue)
            family_defs.insert(in.result);
      }

    auto resolve = [&](ValueId v, BlockId use_block) -> ValueId {
      ValueId found = kNoValue;
      for (const Copy &c : copies) {
        auto it = c.vmap.find(v);
        if (it == c.vmap.end())
          continue;
        // locate the defining block of the copy
        for (auto &[ob, nb] : c.bmap) {
          const BasicBlock &bb = k.block(nb);
          bool defines = false;
          for (const Phi &phi : bb.phis)
            if (phi.result == it->second)
              defines = true;
          for (const Instruction &in : bb.body)
            if (in.result == it->second)
              defines = true;
          if (defines && (nb == use_block || dom.dominates(nb, use_block))) {
            if (found != kNoValue)
              throw ValidationError("ambiguous copy for peeled value use");
            found = it->second;
          }
        }
      }
      if (found == kNoValue)
        throw ValidationError("no dominating copy for peeled value use");
      return found;
    };

    for (BlockId b = 0; b < k.blocks.size(); ++b) {
      if (k.blocks[b].dead)
        continue;
      BasicBlock &bb = k.block(b);
      for (Phi &phi : bb.phis)
        for (PhiIncoming &pi : phi.incoming)
          if (family_defs.count(pi.value))
            pi.value = resolve(pi.value, pi.pred);
      for (Instruction &in : bb.body)
        for (ValueId &v : in.operands)
          if (family_defs.count(v))
            v = resolve(v, b);
      if (bb.term.cond != kNoValue && family_defs.count(bb.term.cond))
        bb.term.cond = resolve(bb.term.cond, b);
    }
  }

  validate(k);
  return k;
}

} // namespace wgkit
