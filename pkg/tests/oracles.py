"""Independent oracles the tests check the implementation against.

Everything here is deliberately written the dumb way (exhaustive scans,
full enumeration, O(n^2) replays) and shares no code with the package
internals it validates.
"""

from __future__ import annotations

import itertools


def brute_force_schedule(n, preds_list, pool_id, units, duration, capacity):
    """O(n^2) discrete-event replay of the list-scheduling policy.

    At every event time, finish due nodes, then scan ALL unstarted nodes in
    (ready time, id) order and start any whose pool has enough free units.
    """
    start = [-1.0] * n
    finish = [-1.0] * n
    free = list(capacity)
    unstarted = set(range(n))
    running: list[int] = []

    def scan_and_start(t):
        while True:
            candidates = []
            for i in sorted(unstarted):
                if all(0 <= finish[p] <= t for p in preds_list[i]):
                    rt = max([finish[p] for p in preds_list[i]], default=0.0)
                    candidates.append((rt, i))
            candidates.sort()
            progressed = False
            for _, i in candidates:
                p = pool_id[i]
                if units[i] <= free[p]:
                    free[p] -= units[i]
                    start[i] = t
                    finish[i] = t + duration[i]
                    unstarted.discard(i)
                    running.append(i)
                    progressed = True
            if not progressed:
                return

    scan_and_start(0.0)
    while running:
        t = min(finish[i] for i in running)
        for i in list(running):
            if finish[i] == t:
                running.remove(i)
                free[pool_id[i]] += units[i]
        scan_and_start(t)

    if unstarted:
        return start, finish, -1.0
    return start, finish, (max(finish) if n else 0.0)


def check_trace(n, preds_list, start, finish, pool_id, units, capacity):
    """Dependency safety + pool capacity over the whole trace."""
    for i in range(n):
        for p in preds_list[i]:
            assert start[i] >= finish[p] - 1e-12, \
                f"node {i} started at {start[i]} before pred {p} finished {finish[p]}"
    events = []
    for i in range(n):
        events.append((start[i], 1, units[i], pool_id[i]))
        events.append((finish[i], 0, units[i], pool_id[i]))
    events.sort()  # releases (0) before acquisitions (1) at equal times
    in_use = [0] * len(capacity)
    for _, kind, u, p in events:
        if kind == 1:
            in_use[p] += u
            assert in_use[p] <= capacity[p], f"pool {p} over capacity"
        else:
            in_use[p] -= u


def longest_path_nodes(succs) -> int:
    """Longest path by node count via memoized DFS."""
    n = len(succs)
    memo = [0] * n
    order = []
    seen = [0] * n
    for root in range(n):
        if seen[root]:
            continue
        stack = [(root, 0)]
        while stack:
            u, state = stack.pop()
            if state == 0:
                if seen[u]:
                    continue
                seen[u] = 1
                stack.append((u, 1))
                for v in succs[u]:
                    if not seen[v]:
                        stack.append((v, 0))
            else:
                order.append(u)
    for u in order:  # reverse topological
        memo[u] = 1 + max((memo[v] for v in succs[u]), default=0)
    return max(memo, default=0)


def longest_path_weighted(succs, duration) -> float:
    n = len(succs)
    memo = [None] * n
    order = []
    seen = [0] * n
    for root in range(n):
        if seen[root]:
            continue
        stack = [(root, 0)]
        while stack:
            u, state = stack.pop()
            if state == 0:
                if seen[u]:
                    continue
                seen[u] = 1
                stack.append((u, 1))
                for v in succs[u]:
                    if not seen[v]:
                        stack.append((v, 0))
            else:
                order.append(u)
    for u in order:
        memo[u] = duration[u] + max((memo[v] for v in succs[u]), default=0.0)
    return max(memo, default=0.0)


def enumerate_wtdup(sets, caps, capacity):
    """Every positive integer vector with sum(f*s) <= capacity, f <= cap."""
    ranges = [range(1, c + 1) for c in caps]
    for combo in itertools.product(*ranges):
        if sum(f * s for f, s in zip(combo, sets)) <= capacity:
            yield combo


def receptive_max_index(consumer, producer, block, dup):
    """Materialized sliding-window oracle: enumerate every output position in
    the block and every kernel tap, collect the input indices, return max."""
    in_w, in_h = producer.out_w, producer.out_h
    if consumer.kind == "fc" or (consumer.out_w * consumer.out_h == 1
                                 and consumer.kernel == 1):
        return in_w * in_h - 1
    k = consumer.kernel

    def axis(in_size, out_size):
        stride = max(1, round(in_size / out_size))
        pad = max(0, (out_size - 1) * stride + k - in_size) // 2
        return stride, pad

    sy, py = axis(in_h, consumer.out_h)
    sx, px = axis(in_w, consumer.out_w)
    lo = block * dup
    hi = min(consumer.out_w * consumer.out_h, (block + 1) * dup)
    best = 0
    for o in range(lo, hi):
        oy, ox = divmod(o, consumer.out_w)
        for dy in range(k):
            for dx in range(k):
                iy = oy * sy - py + dy
                ix = ox * sx - px + dx
                if 0 <= iy < in_h and 0 <= ix < in_w:
                    best = max(best, iy * in_w + ix)
    return best


def enumerate_genes(n_layers, caps, enable_sharing=True):
    """All rule-respecting genes for tiny layer counts (brute force filter)."""
    owners = [list(range(i + 1)) for i in range(n_layers)]
    counts = [list(range(1, caps[i] + 1)) for i in range(n_layers)]
    for owner_combo in itertools.product(*owners):
        if not enable_sharing and any(o != i for i, o in enumerate(owner_combo)):
            continue
        for count_combo in itertools.product(*counts):
            gene = tuple(zip(owner_combo, count_combo))
            yield gene


def exhaustive_int_alloc(wl, powers, freqs, budget):
    """Exhaustive integer min-max allocation for tiny instances."""
    rows = len(wl)
    cols = len(wl[0])
    used = [(r, c) for r in range(rows) for c in range(cols) if wl[r][c] > 0]
    max_counts = [int(budget // powers[c]) for _, c in used]

    best = None
    best_period = None
    for combo in itertools.product(*[range(1, m + 1) for m in max_counts]):
        power = sum(powers[c] * combo[k] for k, (_, c) in enumerate(used))
        if power > budget + 1e-12:
            continue
        period = max(wl[r][c] / (freqs[c] * combo[k])
                     for k, (r, c) in enumerate(used))
        if best_period is None or period < best_period:
            best_period = period
            best = combo
    return best, best_period
