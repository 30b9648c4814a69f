# cython: language_level=3
"""Compiled list-scheduling engine.

Mirrors engine_py.schedule exactly: same dispatch order, same float
arithmetic, identical schedules.  Only the data structures differ (C binary
heaps over parallel (time, id) arrays instead of Python heapq tuples).
"""

import numpy as np

cimport numpy as cnp
from libc.stdlib cimport free, malloc, realloc

cnp.import_array()


cdef struct Heap:
    double *keys
    long *ids
    Py_ssize_t size
    Py_ssize_t cap


cdef inline int heap_init(Heap *h, Py_ssize_t cap) except -1:
    h.keys = <double *> malloc(cap * sizeof(double))
    h.ids = <long *> malloc(cap * sizeof(long))
    if h.keys == NULL or h.ids == NULL:
        raise MemoryError()
    h.size = 0
    h.cap = cap
    return 0


cdef inline void heap_free(Heap *h) noexcept:
    if h.keys != NULL:
        free(h.keys)
    if h.ids != NULL:
        free(h.ids)


cdef inline int heap_grow(Heap *h) except -1:
    cdef Py_ssize_t cap = h.cap * 2 if h.cap > 0 else 8
    h.keys = <double *> realloc(h.keys, cap * sizeof(double))
    h.ids = <long *> realloc(h.ids, cap * sizeof(long))
    if h.keys == NULL or h.ids == NULL:
        raise MemoryError()
    h.cap = cap
    return 0


cdef inline bint heap_less(double k1, long i1, double k2, long i2) noexcept:
    return k1 < k2 or (k1 == k2 and i1 < i2)


cdef inline int heap_push(Heap *h, double key, long nid) except -1:
    cdef Py_ssize_t i, parent
    if h.size == h.cap:
        heap_grow(h)
    i = h.size
    h.size += 1
    while i > 0:
        parent = (i - 1) >> 1
        if heap_less(key, nid, h.keys[parent], h.ids[parent]):
            h.keys[i] = h.keys[parent]
            h.ids[i] = h.ids[parent]
            i = parent
        else:
            break
    h.keys[i] = key
    h.ids[i] = nid
    return 0


cdef inline void heap_pop(Heap *h, double *key, long *nid) noexcept:
    cdef double last_key
    cdef long last_id
    cdef Py_ssize_t i = 0, child
    key[0] = h.keys[0]
    nid[0] = h.ids[0]
    h.size -= 1
    if h.size == 0:
        return
    last_key = h.keys[h.size]
    last_id = h.ids[h.size]
    while True:
        child = 2 * i + 1
        if child >= h.size:
            break
        if child + 1 < h.size and heap_less(h.keys[child + 1], h.ids[child + 1],
                                            h.keys[child], h.ids[child]):
            child += 1
        if heap_less(h.keys[child], h.ids[child], last_key, last_id):
            h.keys[i] = h.keys[child]
            h.ids[i] = h.ids[child]
            i = child
        else:
            break
    h.keys[i] = last_key
    h.ids[i] = last_id


def schedule(num_nodes, pred_count, succ_indptr, succ_indices,
             pool_id, units, duration, capacity):
    """Drop-in replacement for engine_py.schedule (see its docstring)."""
    cdef cnp.ndarray[cnp.int64_t, ndim=1] indeg = \
        np.ascontiguousarray(pred_count, dtype=np.int64).copy()
    cdef cnp.ndarray[cnp.int64_t, ndim=1] indptr = \
        np.ascontiguousarray(succ_indptr, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] indices = \
        np.ascontiguousarray(succ_indices, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] pools = \
        np.ascontiguousarray(pool_id, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] need = \
        np.ascontiguousarray(units, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] dur = \
        np.ascontiguousarray(duration, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] free_units = \
        np.ascontiguousarray(capacity, dtype=np.int64).copy()

    cdef Py_ssize_t n = num_nodes
    cdef Py_ssize_t num_pools = free_units.shape[0]

    cdef cnp.ndarray[cnp.float64_t, ndim=1] start = np.full(n, -1.0)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] finish = np.full(n, -1.0)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ready_time = np.zeros(n)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] touched = np.zeros(num_pools, dtype=np.uint8)

    # scratch buffers for the keep-list during dispatch
    cdef double *tmp_keys = <double *> malloc((n if n > 0 else 1) * sizeof(double))
    cdef long *tmp_ids = <long *> malloc((n if n > 0 else 1) * sizeof(long))
    if tmp_keys == NULL or tmp_ids == NULL:
        raise MemoryError()

    cdef Heap events
    heap_init(&events, n if n > 0 else 1)
    cdef Heap *ready = <Heap *> malloc(num_pools * sizeof(Heap))
    if ready == NULL and num_pools > 0:
        free(tmp_keys); free(tmp_ids)
        raise MemoryError()
    cdef Py_ssize_t p, i, k
    for p in range(num_pools):
        heap_init(&ready[p], 8)

    cdef Py_ssize_t started = 0, finished_count = 0
    cdef double now = 0.0, makespan = 0.0, rt, fin
    cdef long nid, succ
    cdef Py_ssize_t kept

    try:
        for i in range(n):
            if indeg[i] == 0:
                heap_push(&ready[pools[i]], 0.0, <long> i)

        for p in range(num_pools):
            kept = 0
            while ready[p].size > 0:
                heap_pop(&ready[p], &rt, &nid)
                if need[nid] <= free_units[p]:
                    free_units[p] -= need[nid]
                    start[nid] = 0.0
                    fin = dur[nid]
                    finish[nid] = fin
                    heap_push(&events, fin, nid)
                    started += 1
                else:
                    tmp_keys[kept] = rt
                    tmp_ids[kept] = nid
                    kept += 1
            for k in range(kept):
                heap_push(&ready[p], tmp_keys[k], tmp_ids[k])

        while events.size > 0:
            now = events.keys[0]
            for p in range(num_pools):
                touched[p] = 0
            while events.size > 0 and events.keys[0] == now:
                heap_pop(&events, &rt, &nid)
                finished_count += 1
                if now > makespan:
                    makespan = now
                p = pools[nid]
                free_units[p] += need[nid]
                touched[p] = 1
                for k in range(indptr[nid], indptr[nid + 1]):
                    succ = indices[k]
                    indeg[succ] -= 1
                    if ready_time[succ] < now:
                        ready_time[succ] = now
                    if indeg[succ] == 0:
                        heap_push(&ready[pools[succ]], ready_time[succ], succ)
                        touched[pools[succ]] = 1
            for p in range(num_pools):
                if not touched[p]:
                    continue
                kept = 0
                while ready[p].size > 0:
                    heap_pop(&ready[p], &rt, &nid)
                    if need[nid] <= free_units[p]:
                        free_units[p] -= need[nid]
                        start[nid] = now
                        fin = now + dur[nid]
                        finish[nid] = fin
                        heap_push(&events, fin, nid)
                        started += 1
                    else:
                        tmp_keys[kept] = rt
                        tmp_ids[kept] = nid
                        kept += 1
                for k in range(kept):
                    heap_push(&ready[p], tmp_keys[k], tmp_ids[k])
    finally:
        heap_free(&events)
        for p in range(num_pools):
            heap_free(&ready[p])
        free(ready)
        free(tmp_keys)
        free(tmp_ids)

    if finished_count != n:
        return start, finish, -1.0
    return start, finish, makespan
