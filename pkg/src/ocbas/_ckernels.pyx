# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; semantics and draw order match ``_pykernels``."""

import numpy as np
cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer, PyCapsule_IsValid
from libc.math cimport sqrt
from libc.stdlib cimport free, malloc, realloc
from numpy.random cimport bitgen_t

cnp.import_array()

cdef enum:
    GRID = 11
    N_CELLS = 121
    SPAN = 25

cdef int MOVE_X[4]
cdef int MOVE_Y[4]
MOVE_X[:] = [1, -1, 0, 0]
MOVE_Y[:] = [0, 0, 1, -1]


def renewal_counts(const double[::1] probs, Py_ssize_t support_min, Py_ssize_t budget):
    cdef Py_ssize_t m = probs.shape[0]
    cdef Py_ssize_t u, i, j, lo, n_cur, n_new
    cdef double acc, mass, ex
    cdef double[::1] tail = np.zeros(m + 1)
    cdef double[::1] surv = np.empty(budget + 1)

    acc = 0.0
    for i in range(m - 1, -1, -1):
        acc += probs[i]
        tail[i] = acc
    for u in range(budget + 1):
        if u < support_min:
            surv[u] = tail[0]
        else:
            j = u - support_min + 1
            surv[u] = tail[j] if j < m else 0.0

    at_least = [1.0]
    exact = [surv[budget]]

    cdef double *cur = <double *> malloc((budget + 1) * sizeof(double))
    cdef double *nxt = <double *> malloc((budget + 1) * sizeof(double))
    cdef double *tmp
    if cur == NULL or nxt == NULL:
        free(cur)
        free(nxt)
        raise MemoryError()
    try:
        cur[0] = 1.0
        n_cur = 1
        lo = 0
        while True:
            lo += support_min
            if lo > budget:
                break
            n_new = n_cur + m - 1
            if n_new > budget - lo + 1:
                n_new = budget - lo + 1
            with nogil:
                for i in range(n_new):
                    nxt[i] = 0.0
                for i in range(n_cur):
                    if cur[i] == 0.0:
                        continue
                    for j in range(m):
                        if i + j >= n_new:
                            break
                        nxt[i + j] += cur[i] * probs[j]
                mass = 0.0
                ex = 0.0
                for i in range(n_new):
                    mass += nxt[i]
                    ex += nxt[i] * surv[budget - lo - i]
            if mass == 0.0:
                break
            at_least.append(mass)
            exact.append(ex)
            tmp = cur
            cur = nxt
            nxt = tmp
            n_cur = n_new
    finally:
        free(cur)
        free(nxt)
    return np.array(at_least), np.array(exact)


cdef long _one_response(bitgen_t *rng, const signed char *mask, long horizon, bint interior,
                        int **px, int **py, long *cap, double *dist) noexcept nogil:
    cdef long src, t, p, count
    cdef int x0, y0, x, y, nx, ny, d, k
    cdef double w[4]
    cdef double r, acc
    cdef int *buf

    cdef long side = GRID - 2 if interior else GRID
    cdef long off = 1 if interior else 0
    src = <long> (rng.next_double(rng.state) * (side * side))
    if src >= side * side:
        src = side * side - 1
    x0 = <int> (off + src % side)
    y0 = <int> (off + src // side)
    if mask[y0 * GRID + x0]:
        return 1
    count = 0
    for t in range(1, horizon + 1):
        if count == cap[0]:
            cap[0] *= 2
            buf = <int *> realloc(px[0], cap[0] * sizeof(int))
            if buf == NULL:
                return -2
            px[0] = buf
            buf = <int *> realloc(py[0], cap[0] * sizeof(int))
            if buf == NULL:
                return -2
            py[0] = buf
        px[0][count] = x0
        py[0][count] = y0
        count += 1
        for p in range(count):
            x = px[0][p]
            y = py[0][p]
            for k in range(4):
                w[k] = dist[(x + MOVE_X[k] - x0 + 12) * SPAN + (y + MOVE_Y[k] - y0 + 12)]
            r = rng.next_double(rng.state) * (w[0] + w[1] + w[2] + w[3])
            d = 3
            acc = 0.0
            for k in range(3):
                acc += w[k]
                if r < acc:
                    d = k
                    break
            nx = x + MOVE_X[d]
            ny = y + MOVE_Y[d]
            if 0 <= nx < GRID and 0 <= ny < GRID:
                px[0][p] = nx
                py[0][p] = ny
                if mask[ny * GRID + nx]:
                    return t
    return -1


def smoke_response_times(const signed char[::1] sensor_mask, Py_ssize_t n, object bit_generator, long horizon,
                         bint interior=True):
    cdef bitgen_t *rng
    cdef const char *capsule_name = "BitGenerator"
    cdef Py_ssize_t r
    cdef long cap = 64
    cdef int dx, dy
    cdef double dist[SPAN * SPAN]
    cdef long long[::1] res
    cdef int *px
    cdef int *py

    if sensor_mask.shape[0] != N_CELLS:
        raise ValueError("sensor_mask must have 121 entries")
    capsule = bit_generator.capsule
    if not PyCapsule_IsValid(capsule, capsule_name):
        raise ValueError("invalid bit generator")
    rng = <bitgen_t *> PyCapsule_GetPointer(capsule, capsule_name)

    for dx in range(-12, 13):
        for dy in range(-12, 13):
            dist[(dx + 12) * SPAN + (dy + 12)] = sqrt(<double> (dx * dx + dy * dy))

    out = np.zeros(n, dtype=np.int64)
    res = out
    px = <int *> malloc(cap * sizeof(int))
    py = <int *> malloc(cap * sizeof(int))
    if px == NULL or py == NULL:
        free(px)
        free(py)
        raise MemoryError()
    try:
        with bit_generator.lock, nogil:
            for r in range(n):
                res[r] = _one_response(rng, &sensor_mask[0], horizon, interior, &px, &py, &cap, dist)
                if res[r] == -2:
                    break
    finally:
        free(px)
        free(py)
    if n and out.min() == -2:
        raise MemoryError()
    return out
