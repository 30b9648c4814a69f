"""Pure-Python list-scheduling engine.

Reference implementation of the event-driven scheduler shared with the
compiled kernel: a node starts once every predecessor has finished and its
resource pool has enough free units; ties break on (ready time, node id).
Both engines must produce bit-identical schedules, so keep the arithmetic
and dispatch order in sync with engine_cy.pyx.
"""

from __future__ import annotations

import heapq


def schedule(num_nodes, pred_count, succ_indptr, succ_indices,
             pool_id, units, duration, capacity):
    """Run list scheduling over a DAG in CSR form.

    Arguments are index sequences (numpy arrays or lists):
      pred_count[i]    remaining predecessor count of node i
      succ_indptr/succ_indices  CSR successor adjacency
      pool_id[i]       resource pool of node i
      units[i]         pool units node i occupies while running
      duration[i]      execution time of node i
      capacity[p]      units of pool p

    Returns (start, finish, makespan) with start/finish as float lists.
    A node whose unit demand exceeds its pool capacity, or a cyclic input,
    surfaces as a negative start (caller raises the scheduling error).
    """
    indeg = [int(pred_count[i]) for i in range(num_nodes)]
    start = [-1.0] * num_nodes
    finish = [-1.0] * num_nodes
    ready_time = [0.0] * num_nodes
    num_pools = len(capacity)
    free = [int(capacity[p]) for p in range(num_pools)]
    ready: list[list] = [[] for _ in range(num_pools)]

    events: list[tuple[float, int]] = []
    started = 0
    finished = 0

    def dispatch(pool, now):
        nonlocal started
        queue = ready[pool]
        if not queue:
            return
        kept = []
        while queue:
            rt, nid = heapq.heappop(queue)
            if units[nid] <= free[pool]:
                free[pool] -= int(units[nid])
                start[nid] = now
                fin = now + duration[nid]
                finish[nid] = fin
                heapq.heappush(events, (fin, nid))
                started += 1
            else:
                kept.append((rt, nid))
        for item in kept:
            heapq.heappush(queue, item)

    for i in range(num_nodes):
        if indeg[i] == 0:
            heapq.heappush(ready[pool_id[i]], (0.0, i))
    for p in range(num_pools):
        dispatch(p, 0.0)

    makespan = 0.0
    while events:
        now, _ = events[0]
        touched = set()
        while events and events[0][0] == now:
            _, nid = heapq.heappop(events)
            finished += 1
            if now > makespan:
                makespan = now
            p = pool_id[nid]
            free[p] += int(units[nid])
            touched.add(p)
            for k in range(succ_indptr[nid], succ_indptr[nid + 1]):
                succ = succ_indices[k]
                indeg[succ] -= 1
                if ready_time[succ] < now:
                    ready_time[succ] = now
                if indeg[succ] == 0:
                    sp = pool_id[succ]
                    heapq.heappush(ready[sp], (ready_time[succ], succ))
                    touched.add(sp)
        for p in sorted(touched):
            dispatch(p, now)

    if finished != num_nodes:
        return start, finish, -1.0
    return start, finish, makespan
