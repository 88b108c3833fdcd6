# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled TEBD two-site kernel: dgemm contraction + dgesdd truncation.

Mirrors opspread._kernels_py.two_site_apply exactly (truncation rule, sign
convention); the test suite enforces parity between the two backends.
"""

import numpy as np

cimport numpy as cnp
from scipy.linalg.cython_blas cimport dgemm
from scipy.linalg.cython_lapack cimport dgesdd

cnp.import_array()


cdef void _matmul(double* a, double* b, double* c,
                  int ra, int ca, int cb) noexcept nogil:
    """Row-major C = A @ B via Fortran dgemm on the transposes."""
    cdef double one = 1.0, zero = 0.0
    cdef char n = b'N'
    dgemm(&n, &n, &cb, &ra, &ca, &one, b, &cb, a, &ca, &zero, c, &cb)


def two_site_apply(a, b, gate, chi_max, lambda2_cutoff, center_right, hard_cap):
    """See opspread._kernels_py.two_site_apply for the contract."""
    from .errors import NumericalFailureError, ResourceLimitError

    cdef cnp.ndarray[double, ndim=3, mode="c"] av = np.ascontiguousarray(a)
    cdef cnp.ndarray[double, ndim=3, mode="c"] bv = np.ascontiguousarray(b)
    cdef cnp.ndarray[double, ndim=2, mode="c"] gv = np.ascontiguousarray(gate)
    cdef int chi_l = av.shape[0]
    cdef int m = av.shape[2]
    cdef int chi_r = bv.shape[2]
    cdef int rows = chi_l * 4
    cdef int cols = 4 * chi_r
    cdef long cap = <long> hard_cap
    cdef double cutoff = lambda2_cutoff
    if min(rows, cols) > cap:
        raise ResourceLimitError(
            f"two-site bond {rows}x{cols} exceeds hard cap {hard_cap}"
        )

    cdef cnp.ndarray[double, ndim=2, mode="c"] theta = np.empty((rows, cols))
    cdef cnp.ndarray[double, ndim=2, mode="c"] t2 = np.empty((16, chi_l * chi_r))
    cdef cnp.ndarray[double, ndim=2, mode="c"] t3 = np.empty((16, chi_l * chi_r))
    cdef int l, r, p1, p2, i, j, k

    # theta[(l p1), (p2 r)] = sum_m a[l, p1, m] b[m, p2, r]
    _matmul(&av[0, 0, 0], &bv[0, 0, 0], &theta[0, 0], rows, m, cols)

    # regroup to (p1 p2, l r), apply the 16x16 gate, regroup back
    with nogil:
        for l in range(chi_l):
            for p1 in range(4):
                for p2 in range(4):
                    for r in range(chi_r):
                        t2[p1 * 4 + p2, l * chi_r + r] = theta[l * 4 + p1, p2 * chi_r + r]
    _matmul(&gv[0, 0], &t2[0, 0], &t3[0, 0], 16, 16, chi_l * chi_r)
    with nogil:
        for l in range(chi_l):
            for p1 in range(4):
                for p2 in range(4):
                    for r in range(chi_r):
                        theta[l * 4 + p1, p2 * chi_r + r] = t3[p1 * 4 + p2, l * chi_r + r]

    # SVD of the row-major matrix through its Fortran transpose: the memory
    # of theta (rows x cols, C order) is F = theta^T in Fortran order, and
    # F = U_F S V_F^T gives theta = V_F S U_F^T. The V^T output buffer read
    # back in C order is exactly U_theta (rows x kmin), the U buffer is
    # Vt_theta (kmin x cols); no transposition copies are needed.
    cdef int fm = cols, fn = rows
    cdef int kmin = min(rows, cols)
    cdef cnp.ndarray[double, ndim=1] s = np.empty(kmin)
    cdef cnp.ndarray[double, ndim=2, mode="c"] u_theta = np.empty((rows, kmin))
    cdef cnp.ndarray[double, ndim=2, mode="c"] vt_theta = np.empty((kmin, cols))
    cdef cnp.ndarray[int, ndim=1] iwork = np.empty(8 * kmin, dtype=np.intc)
    cdef char jobz = b'S'
    cdef int info = 0, lwork = -1
    cdef double wkopt = 0.0
    cdef int ldu = fm, ldvt = kmin
    dgesdd(&jobz, &fm, &fn, &theta[0, 0], &fm, &s[0], &vt_theta[0, 0], &ldu,
           &u_theta[0, 0], &ldvt, &wkopt, &lwork, &iwork[0], &info)
    if info != 0:
        raise NumericalFailureError(f"dgesdd workspace query failed: info={info}")
    lwork = <int> wkopt
    cdef cnp.ndarray[double, ndim=1] work = np.empty(lwork)
    dgesdd(&jobz, &fm, &fn, &theta[0, 0], &fm, &s[0], &vt_theta[0, 0], &ldu,
           &u_theta[0, 0], &ldvt, &work[0], &lwork, &iwork[0], &info)
    if info != 0:
        raise NumericalFailureError(f"two-site SVD failed: dgesdd info={info}")

    # truncation: relative lambda^2 cutoff first, then the chi cap, keep >= 1
    cdef double total = 0.0, discarded = 0.0, thresh
    for i in range(kmin):
        total += s[i] * s[i]
    if total <= 0.0:
        k = 1
    else:
        thresh = cutoff * total
        k = 0
        for i in range(kmin):
            if s[i] * s[i] >= thresh:
                k += 1
        if k < 1:
            k = 1
    if chi_max is not None and k > <long> chi_max:
        k = <int> chi_max
    if k > kmin:
        k = kmin
    for i in range(k, kmin):
        discarded += s[i] * s[i]

    # sign fix: largest-|entry| component of each kept left vector positive
    cdef double best, vmag
    cdef int ibest
    with nogil:
        for j in range(k):
            best = -1.0
            ibest = 0
            for i in range(rows):
                vmag = u_theta[i, j]
                if vmag < 0.0:
                    vmag = -vmag
                if vmag > best:
                    best = vmag
                    ibest = i
            if u_theta[ibest, j] < 0.0:
                for i in range(rows):
                    u_theta[i, j] = -u_theta[i, j]
                for i in range(cols):
                    vt_theta[j, i] = -vt_theta[j, i]

    cdef cnp.ndarray[double, ndim=3, mode="c"] a_new = np.empty((chi_l, 4, k))
    cdef cnp.ndarray[double, ndim=3, mode="c"] b_new = np.empty((k, 4, chi_r))
    cdef bint to_right = 1 if center_right else 0
    cdef double scale
    with nogil:
        for i in range(rows):
            for j in range(k):
                scale = 1.0 if to_right else s[j]
                a_new[i / 4, i % 4, j] = scale * u_theta[i, j]
        for j in range(k):
            scale = s[j] if to_right else 1.0
            for i in range(cols):
                b_new[j, i / chi_r, i % chi_r] = scale * vt_theta[j, i]
    return a_new, b_new, discarded
