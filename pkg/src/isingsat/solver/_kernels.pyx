# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled solver kernels: Metropolis annealing and tabu descent.

Operation-for-operation identical to the pure-Python mirror ``_kernels_py``
(same xorshift64* RNG, same float operation order, same tie-breaks), so which
implementation the import picks never changes a result.  See the mirror for
the field-cache layout notes.
"""

from libc.math cimport exp
from libc.stdlib cimport free, malloc

cdef unsigned long long _STAR = 0x2545F4914F6CDD1DULL


cdef inline unsigned long long _mix64(unsigned long long z) nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


def mix_seed(seed: int, stream: int) -> int:
    """splitmix64 of (seed, stream), never zero (xorshift state must be)."""
    cdef unsigned long long z = (<unsigned long long> (seed & 0xFFFFFFFFFFFFFFFF)) + \
        (<unsigned long long> (stream + 1)) * 0x9E3779B97F4A7C15ULL
    z = _mix64(z)
    return z if z else _STAR


cdef inline unsigned long long _step(unsigned long long *state) nogil:
    cdef unsigned long long x = state[0]
    x ^= x >> 12
    x ^= x << 25
    x ^= x >> 27
    state[0] = x
    return x * _STAR


cdef inline double _unif(unsigned long long out) nogil:
    return (out >> 11) * (1.0 / 9007199254740992.0)


cdef double _init(int n, double *jd, double *h, unsigned long long *state,
                  signed char *spins, double *fields) nogil:
    cdef int i, q
    cdef double acc, cur
    for i in range(n):
        spins[i] = 1 if _step(state) & 1 else -1
    for i in range(n):
        acc = h[i]
        for q in range(n):
            acc += jd[i * n + q] * spins[q]
        fields[i] = acc
    cur = 0.0
    for i in range(n):
        cur += 0.5 * spins[i] * (fields[i] + h[i])
    return cur


def anneal(n: int, jd, h, sweeps: int, t0: float, t1: float, seed: int,
           collect_trace: bool):
    """Geometric-cooling Metropolis; returns (best_spins, best_energy, trace)."""
    cdef int cn = n
    cdef int csweeps = sweeps
    cdef double ct0 = t0, ct1 = t1
    cdef unsigned long long state = <unsigned long long> (seed & 0xFFFFFFFFFFFFFFFF)
    cdef double *cjd = <double *> malloc(cn * cn * sizeof(double))
    cdef double *ch = <double *> malloc(cn * sizeof(double))
    cdef double *fields = <double *> malloc(cn * sizeof(double))
    cdef signed char *spins = <signed char *> malloc(cn * sizeof(signed char))
    cdef signed char *bspins = <signed char *> malloc(cn * sizeof(signed char))
    if not (cjd and ch and fields and spins and bspins):
        free(cjd); free(ch); free(fields); free(spins); free(bspins)
        raise MemoryError
    cdef int i, q, sweep
    cdef double cur, best, de, t, ratio
    cdef signed char si
    try:
        for i in range(cn * cn):
            cjd[i] = jd[i]
        for i in range(cn):
            ch[i] = h[i]
        cur = _init(cn, cjd, ch, &state, spins, fields)
        best = cur
        for i in range(cn):
            bspins[i] = spins[i]
        ratio = (ct1 / ct0) ** (1.0 / (csweeps - 1)) if csweeps > 1 else 1.0
        trace = []
        t = ct0
        for sweep in range(csweeps):
            for i in range(cn):
                de = -2.0 * spins[i] * fields[i]
                if de > 0.0:
                    if _unif(_step(&state)) >= exp(-de / t):
                        continue
                spins[i] = -spins[i]
                cur += de
                si = spins[i]
                for q in range(cn):
                    fields[q] += 2.0 * cjd[q * cn + i] * si
                if cur < best:
                    best = cur
                    for q in range(cn):
                        bspins[q] = spins[q]
            if collect_trace:
                trace.append((sweep, t, best))
            t *= ratio
        return [bspins[i] for i in range(cn)], best, trace
    finally:
        free(cjd); free(ch); free(fields); free(spins); free(bspins)


def tabu(n: int, jd, h, max_moves: int, tenure: int, seed: int):
    """Best-admissible single-flip tabu search; returns (best_spins, best_energy, moves)."""
    cdef int cn = n
    cdef int cmax = max_moves
    cdef int ctenure = tenure
    cdef unsigned long long state = <unsigned long long> (seed & 0xFFFFFFFFFFFFFFFF)
    cdef double *cjd = <double *> malloc(cn * cn * sizeof(double))
    cdef double *ch = <double *> malloc(cn * sizeof(double))
    cdef double *fields = <double *> malloc(cn * sizeof(double))
    cdef signed char *spins = <signed char *> malloc(cn * sizeof(signed char))
    cdef signed char *bspins = <signed char *> malloc(cn * sizeof(signed char))
    cdef long *tabu_until = <long *> malloc(cn * sizeof(long))
    if not (cjd and ch and fields and spins and bspins and tabu_until):
        free(cjd); free(ch); free(fields); free(spins); free(bspins); free(tabu_until)
        raise MemoryError
    cdef int i, q, pick
    cdef long move, moves
    cdef double cur, best, de, pick_de
    cdef signed char si
    try:
        for i in range(cn * cn):
            cjd[i] = jd[i]
        for i in range(cn):
            ch[i] = h[i]
        cur = _init(cn, cjd, ch, &state, spins, fields)
        best = cur
        for i in range(cn):
            bspins[i] = spins[i]
        for i in range(cn):
            tabu_until[i] = 0
        moves = 0
        for move in range(1, cmax + 1):
            pick = -1
            pick_de = 0.0
            for i in range(cn):
                de = -2.0 * spins[i] * fields[i]
                if move < tabu_until[i] and not cur + de < best:  # aspiration
                    continue
                if pick < 0 or de < pick_de:
                    pick = i
                    pick_de = de
            if pick < 0:
                break
            spins[pick] = -spins[pick]
            cur += pick_de
            si = spins[pick]
            for q in range(cn):
                fields[q] += 2.0 * cjd[q * cn + pick] * si
            tabu_until[pick] = move + ctenure
            moves = move
            if cur < best:
                best = cur
                for q in range(cn):
                    bspins[q] = spins[q]
        return [bspins[i] for i in range(cn)], best, moves
    finally:
        free(cjd); free(ch); free(fields); free(spins); free(bspins); free(tabu_until)
