//===- barriers.cc - barrier canonicalization and the Barrier CFG -----------===//
//
// Part of wgkit, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "wgkit/barriers.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace wgkit {

bool has_barrier(const BasicBlock &bb) {
  for (const Instruction &in : bb.body)
    if (in.op == Opcode::Barrier)
      return true;
  return false;
}

bool block_is_barrier(const KernelFunction &k, BlockId b) {
  return has_barrier(k.block(b));
}

namespace {

// Replaces phi-predecessor references after an edge was rerouted.
void retarget_phi_preds(KernelFunction &k, BlockId succ, BlockId from, BlockId to) {
  for (Phi &phi : k.block(succ).phis)
    for (PhiIncoming &pi : phi.incoming)
      if (pi.pred == from)
        pi.pred = to;
}

} // namespace

KernelFunction canonicalize_barriers(const KernelFunction &input) {
  KernelFunction k = input;
  delete_unreachable(k);

  // Pass 1: every barrier becomes the only body instruction of its block.
  bool changed = true;
  while (changed) {
    changed = false;
    for (BlockId b = 0; b < k.blocks.size(); ++b) {
      if (k.blocks[b].dead)
        continue;
      auto &body = k.block(b).body;
      int bar = -1;
      for (size_t i = 0; i < body.size(); ++i)
        if (body[i].op == Opcode::Barrier) {
          bar = int(i);
          break;
        }
      if (bar < 0)
        continue;
      bool alone = body.size() == 1 && k.block(b).phis.empty();
      if (alone)
        continue;

      if (bar > 0 || !k.block(b).phis.empty()) {
        // Split before the barrier: b keeps the prefix, tail gets the rest.
        BlockId tail = k.new_block(k.block(b).name + ".bar");
        auto &bb = k.block(b);
        auto &tb = k.block(tail);
        tb.body.assign(bb.body.begin() + bar, bb.body.end());
        tb.term = bb.term;
        bb.body.resize(size_t(bar));
        bb.term = Terminator::br(tail);
        for (int s = 0; s < tb.term.num_succs(); ++s)
          retarget_phi_preds(k, tb.term.succ[s], b, tail);
        changed = true;
      } else {
        // Barrier first: split after it.
        BlockId tail = k.new_block(k.block(b).name + ".post");
        auto &bb = k.block(b);
        auto &tb = k.block(tail);
        tb.body.assign(bb.body.begin() + 1, bb.body.end());
        tb.term = bb.term;
        bb.body.resize(1);
        bb.term = Terminator::br(tail);
        for (int s = 0; s < tb.term.num_succs(); ++s)
          retarget_phi_preds(k, tb.term.succ[s], b, tail);
        changed = true;
      }
    }
  }

  // Pass 1b: ret blocks carry the implicit exit barrier; split them empty so
  // the exit node is a bare anchor like a barrier block.
  for (BlockId b = 0; b < k.blocks.size(); ++b) {
    if (k.blocks[b].dead)
      continue;
    if (k.block(b).term.kind != Terminator::Kind::Ret)
      continue;
    if (k.block(b).body.empty() && k.block(b).phis.empty())
      continue;
    BlockId rx = k.new_block(k.block(b).name + ".exit");
    k.block(rx).term = Terminator::ret();
    k.block(b).term = Terminator::br(rx);
  }

  // Pass 2: barrier blocks end in an unconditional branch unless they are a
  // loop latch (the original latch branch is retained for b-loops).
  auto bes = back_edges(k);
  auto is_latch = [&](BlockId b) {
    for (auto [u, v] : bes)
      if (u == b)
        return true;
    return false;
  };
  for (BlockId b = 0; b < k.blocks.size(); ++b) {
    if (k.blocks[b].dead || !block_is_barrier(k, b))
      continue;
    if (k.block(b).term.kind != Terminator::Kind::CondBr || is_latch(b))
      continue;
    BlockId sel = k.new_block(k.block(b).name + ".sel");
    auto &bb = k.block(b);
    k.block(sel).term = bb.term;
    bb.term = Terminator::br(sel);
    for (int s = 0; s < k.block(sel).term.num_succs(); ++s)
      retarget_phi_preds(k, k.block(sel).term.succ[s], b, sel);
  }

  validate(k);
  return k;
}

int BarrierCFG::node_of_barrier(BlockId b) const {
  for (size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].kind == BarrierNode::Kind::Barrier && nodes[i].block == b)
      return int(i);
  return -1;
}

int BarrierCFG::node_of_exit(BlockId b) const {
  for (size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].kind == BarrierNode::Kind::Exit && nodes[i].block == b)
      return int(i);
  return -1;
}

bool BarrierCFG::has_multi_predecessor_node() const {
  for (const auto &p : preds)
    if (p.size() > 1)
      return true;
  return false;
}

std::string BarrierCFG::to_dot(const KernelFunction &k) const {
  std::ostringstream os;
  os << "digraph barrier_cfg {\n";
  for (size_t i = 0; i < nodes.size(); ++i) {
    const BarrierNode &n = nodes[i];
    switch (n.kind) {
    case BarrierNode::Kind::Entry:
      os << "  n" << i << " [label=\"entry\", shape=doublecircle];\n";
      break;
    case BarrierNode::Kind::Exit:
      os << "  n" << i << " [label=\"exit(" << k.block(n.block).name
         << ")\", shape=doublecircle];\n";
      break;
    case BarrierNode::Kind::Barrier:
      os << "  n" << i << " [label=\"" << k.block(n.block).name
         << "\", shape=box];\n";
      break;
    }
  }
  for (size_t i = 0; i < nodes.size(); ++i)
    for (int s : succs[i])
      os << "  n" << i << " -> n" << s << ";\n";
  os << "}\n";
  return os.str();
}

BarrierCFG build_barrier_cfg(const KernelFunction &k, BarrierCfgMode mode) {
  BarrierCFG g;
  std::set<std::pair<BlockId, BlockId>> masked;
  if (mode == BarrierCfgMode::Forward)
    for (auto [u, v] : back_edges(k))
      masked.insert({u, v});

  // Nodes: entry, each barrier block, each ret block.
  g.entry_node = 0;
  g.nodes.push_back(BarrierNode{BarrierNode::Kind::Entry, k.entry});
  for (BlockId b = 0; b < k.blocks.size(); ++b) {
    if (k.blocks[b].dead)
      continue;
    if (block_is_barrier(k, b))
      g.nodes.push_back(BarrierNode{BarrierNode::Kind::Barrier, b});
  }
  for (BlockId b = 0; b < k.blocks.size(); ++b) {
    if (k.blocks[b].dead)
      continue;
    if (k.block(b).term.kind == Terminator::Kind::Ret)
      g.nodes.push_back(BarrierNode{BarrierNode::Kind::Exit, b});
  }
  g.succs.assign(g.nodes.size(), {});
  g.preds.assign(g.nodes.size(), {});

  auto add_edge = [&](int a, int b) {
    if (std::find(g.succs[a].begin(), g.succs[a].end(), b) == g.succs[a].end()) {
      g.succs[a].push_back(b);
      g.preds[b].push_back(a);
    }
  };

  // From each node, walk barrier-free forward paths; record the first barrier
  // or exit hit on every branch.
  for (size_t n = 0; n < g.nodes.size(); ++n) {
    if (g.nodes[n].kind == BarrierNode::Kind::Exit)
      continue;

    std::set<BlockId> visited;
    std::vector<BlockId> work;

    auto enter_block = [&](BlockId from, BlockId b) {
      if (mode == BarrierCfgMode::Forward && from != kNoBlock &&
          masked.count({from, b}))
        return;
      if (block_is_barrier(k, b)) {
        add_edge(int(n), g.node_of_barrier(b));
        return;
      }
      if (k.block(b).term.kind == Terminator::Kind::Ret)
        add_edge(int(n), g.node_of_exit(b));
      if (visited.count(b))
        return;
      visited.insert(b);
      work.push_back(b);
    };

    if (g.nodes[n].kind == BarrierNode::Kind::Entry) {
      enter_block(kNoBlock, k.entry);
    } else {
      BlockId b = g.nodes[n].block;
      // The walk starts after the barrier: at the block's own terminator.
      if (k.block(b).term.kind == Terminator::Kind::Ret)
        add_edge(int(n), g.node_of_exit(b));
      for (BlockId s : successors(k, b))
        enter_block(b, s);
    }
    while (!work.empty()) {
      BlockId b = work.back();
      work.pop_back();
      for (BlockId s : successors(k, b))
        enter_block(b, s);
    }
  }
  return g;
}

std::map<BlockId, BarrierClass> classify_barriers(const KernelFunction &k,
                                                  const DomInfo &dom) {
  std::map<BlockId, BarrierClass> out;
  std::vector<BlockId> exits;
  for (BlockId b = 0; b < k.blocks.size(); ++b)
    if (!k.blocks[b].dead && k.block(b).term.kind == Terminator::Kind::Ret)
      exits.push_back(b);
  for (BlockId b = 0; b < k.blocks.size(); ++b) {
    if (k.blocks[b].dead || !block_is_barrier(k, b))
      continue;
    bool dominates_all = !exits.empty();
    for (BlockId e : exits)
      if (!dom.dominates(b, e))
        dominates_all = false;
    out[b] = dominates_all ? BarrierClass::Unconditional : BarrierClass::Conditional;
  }
  return out;
}

bool has_conditional_barrier(const KernelFunction &k) {
  auto dom = compute_dominators(k);
  for (auto &[b, c] : classify_barriers(k, dom))
    if (c == BarrierClass::Conditional)
      return true;
  return false;
}

} // namespace wgkit
