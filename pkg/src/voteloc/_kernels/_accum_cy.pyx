# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled vote-accumulation kernel; contract identical to accum_np."""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def accumulate_pairs(
    double[:, ::1] points,
    double[:, ::1] dirs,
    double[:, ::1] sizes,
    long long[:, ::1] pairs,
    int cell,
    int rows,
    int cols,
    double height,
    double width,
    bint ray_both,
    bint absolute_size,
    double size_eps,
):
    votes_arr = np.zeros((rows, cols), dtype=np.int64)
    size_sum_arr = np.zeros((rows, cols, 2), dtype=np.float64)
    size_count_arr = np.zeros((rows, cols, 2), dtype=np.int64)
    cdef long long[:, ::1] votes = votes_arr
    cdef double[:, :, ::1] size_sum = size_sum_arr
    cdef long long[:, :, ::1] size_count = size_count_arr

    cdef Py_ssize_t k, m = pairs.shape[0]
    cdef Py_ssize_t i, j, r, c, axis, e
    cdef Py_ssize_t idx
    cdef double d1x, d1y, d2x, d2y, rx, ry, denom, t1, t2, cx, cy
    cdef double s, coord, target

    for k in range(m):
        i = <Py_ssize_t> pairs[k, 0]
        j = <Py_ssize_t> pairs[k, 1]
        d1x = dirs[i, 0]; d1y = dirs[i, 1]
        d2x = dirs[j, 0]; d2y = dirs[j, 1]
        denom = d1x * d2y - d1y * d2x
        if denom < 1e-9 and denom > -1e-9:
            continue
        rx = points[j, 0] - points[i, 0]
        ry = points[j, 1] - points[i, 1]
        t1 = (rx * d2y - ry * d2x) / denom
        if t1 < 0:
            continue
        if ray_both:
            t2 = (rx * d1y - ry * d1x) / denom
            if t2 < 0:
                continue
        cx = points[i, 0] + t1 * d1x
        cy = points[i, 1] + t1 * d1y
        if cx < 0 or cx >= width or cy < 0 or cy >= height:
            continue
        r = <Py_ssize_t> (cy / cell)
        c = <Py_ssize_t> (cx / cell)
        if r > rows - 1:
            r = rows - 1
        if c > cols - 1:
            c = cols - 1
        votes[r, c] += 1
        for e in range(2):
            idx = i if e == 0 else j
            for axis in range(2):
                s = sizes[idx, axis]
                if absolute_size:
                    size_sum[r, c, axis] += s
                    size_count[r, c, axis] += 1
                elif s >= size_eps or s <= -size_eps:
                    coord = points[idx, axis]
                    target = cx if axis == 0 else cy
                    size_sum[r, c, axis] += (coord - target) / s
                    size_count[r, c, axis] += 1
    return votes_arr, size_sum_arr, size_count_arr
