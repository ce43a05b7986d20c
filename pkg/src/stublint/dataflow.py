"""Worklist solver for forward dataflow problems over a Cfg.

The solver is agnostic to the state type: callers supply the join, the
transfer function, and the bottom element.  States are compared with `==`,
so any value type with structural equality works (enums, dicts, tuples).
"""

from __future__ import annotations

from collections import deque


def forward_solve(cfg, init, transfer, join, bottom):
    """Compute the fixpoint of a forward problem.

    init is the state flowing out of the entry node.  transfer(node, state)
    maps a node's in-state to its out-state and must be monotone.  Returns
    (pre_states, pops): pre_states maps node id to the state at node entry
    (bottom for unreachable nodes), pops counts worklist iterations, which
    callers can bound-check against |nodes| * (lattice height + 1).
    """
    pre = {node.id: bottom for node in cfg.nodes}
    entry = cfg.entry.id
    pre[entry] = init
    queue = deque([entry])
    queued = {entry}
    pops = 0
    while queue:
        nid = queue.popleft()
        queued.discard(nid)
        pops += 1
        node = cfg.nodes[nid]
        out = transfer(node, pre[nid])
        for succ in node.succs:
            merged = join(pre[succ], out)
            if merged != pre[succ]:
                pre[succ] = merged
                if succ not in queued:
                    queue.append(succ)
                    queued.add(succ)
    return pre, pops
