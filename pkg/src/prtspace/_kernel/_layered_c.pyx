# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled layered value iteration over a duration-weighted unfolded MDP."""

from array import array

from cpython.array cimport array as carray


def layered_curve(
    n_states,
    initial,
    target_mask,
    topo,
    act_ptr,
    act_dur,
    act_br_ptr,
    br_prob,
    br_dest,
    horizon,
    maximize,
):
    cdef Py_ssize_t n = n_states
    cdef Py_ssize_t init = initial
    cdef Py_ssize_t T = horizon
    cdef bint do_max = maximize

    cdef unsigned char[:] tmask = target_mask
    cdef long long[:] order = topo
    cdef long long[:] aptr = act_ptr
    cdef long long[:] adur = act_dur
    cdef long long[:] bptr = act_br_ptr
    cdef double[:] prob = br_prob
    cdef long long[:] dest = br_dest

    cdef long long max_dur = 1
    cdef Py_ssize_t a
    for a in range(adur.shape[0]):
        if adur[a] > max_dur:
            max_dur = adur[a]
    cdef Py_ssize_t ring = max_dur + 1

    cdef carray store = array("d", [0.0]) * (ring * n)
    cdef double[:] rows = store
    cdef carray curve = array("d", [0.0]) * (T + 1)
    cdef double[:] out = curve

    cdef Py_ssize_t k, i, s, b
    cdef Py_ssize_t row_off, src_off
    cdef long long d
    cdef double best, val

    for k in range(T + 1):
        row_off = (k % ring) * n
        for i in range(n):
            s = order[i]
            if tmask[s]:
                rows[row_off + s] = 1.0
                continue
            if aptr[s] == aptr[s + 1]:
                rows[row_off + s] = 0.0
                continue
            best = -1.0 if do_max else 2.0
            for a in range(aptr[s], aptr[s + 1]):
                d = adur[a]
                if d > k:
                    val = 0.0
                else:
                    src_off = ((k - d) % ring) * n
                    val = 0.0
                    for b in range(bptr[a], bptr[a + 1]):
                        val += prob[b] * rows[src_off + dest[b]]
                if do_max:
                    if val > best:
                        best = val
                else:
                    if val < best:
                        best = val
            rows[row_off + s] = best
        out[k] = rows[row_off + init]
    return curve
