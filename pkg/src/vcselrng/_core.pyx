# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops.

Every function here has a pure-Python twin with the same name and signature
in :mod:`vcselrng._purepy`; :mod:`vcselrng._backend` picks one at import.
Floating-point expressions are written in the same order in both so that the
extractor and the interpolator agree bit for bit.
"""

from libc.math cimport cos, sin, floor

import numpy as np

# parameter vector layout shared with _purepy.SFM_PARAM_NAMES
cdef enum:
    P_K = 0
    P_ALPHA = 1
    P_GN = 2
    P_CR = 3
    P_CI = 4
    P_MU = 5
    P_GS = 6
    P_FX = 7
    P_FY = 8
    P_C1 = 9
    P_S1 = 10
    P_CC2 = 11
    P_SS2 = 12
    P_QR = 13
    P_QI = 14

# ring columns
cdef enum:
    R_XR = 0
    R_XI = 1
    R_YR = 2
    R_YI = 3
    R_PHI = 4
    R_CPHI = 5
    R_SPHI = 6

cdef enum:
    ST_OK = 0
    ST_DIVERGED = 1
    ST_RANGE = 2

STATUS_OK = ST_OK
STATUS_DIVERGED = ST_DIVERGED
STATUS_RANGE = ST_RANGE


cdef inline void _rhs(double xr, double xi, double yr, double yi, double N, double n,
                      double dxr, double dxi, double dyr, double dyi, double qr, double qi,
                      const double* p, double* out) noexcept nogil:
    cdef double k = p[P_K]
    cdef double al = p[P_ALPHA]
    cdef double nm1 = N - 1.0
    # k(1 + i alpha)[(N-1)E_x + i n E_y]
    cdef double ur = nm1 * xr - n * yi
    cdef double ui = nm1 * xi + n * yr
    cdef double vr = nm1 * yr + n * xi
    cdef double vi = nm1 * yi - n * xr
    # feedback: g (c1 E_y,d -/+ s1 E_x,d) * q,  q = (cc2 + ss2 e^{i phi_d}) e^{-i w0 tau_o}
    cdef double axr = p[P_C1] * dyr - p[P_S1] * dxr
    cdef double axi = p[P_C1] * dyi - p[P_S1] * dxi
    cdef double ayr = p[P_C1] * dyr + p[P_S1] * dxr
    cdef double ayi = p[P_C1] * dyi + p[P_S1] * dxi
    cdef double ix = xr * xr + xi * xi
    cdef double iy = yr * yr + yi * yi
    cdef double cross = xi * yr - xr * yi  # Im(E_x conj(E_y))
    out[0] = k * (ur - al * ui) - (p[P_CR] * xr - p[P_CI] * xi) + p[P_FX] * (axr * qr - axi * qi)
    out[1] = k * (ui + al * ur) - (p[P_CR] * xi + p[P_CI] * xr) + p[P_FX] * (axr * qi + axi * qr)
    out[2] = k * (vr - al * vi) + (p[P_CR] * yr - p[P_CI] * yi) + p[P_FY] * (ayr * qr - ayi * qi)
    out[3] = k * (vi + al * vr) + (p[P_CR] * yi + p[P_CI] * yr) + p[P_FY] * (ayr * qi + ayi * qr)
    out[4] = p[P_GN] * (p[P_MU] - N * (1.0 + ix + iy) - 2.0 * n * cross)
    out[5] = -p[P_GS] * n - p[P_GN] * (n * (ix + iy) + 2.0 * N * cross)


cdef inline double _mid(const double[:, ::1] ring, long long a, long long b, long long c,
                        long long d, int col) noexcept nogil:
    # 4-point Lagrange value halfway between rows b and c
    return (-ring[a, col] + 9.0 * ring[b, col] + 9.0 * ring[c, col] - ring[d, col]) / 16.0


cdef inline void _modulation(double cphi, double sphi, const double* p, double* q) noexcept nogil:
    cdef double pr = p[P_CC2] + p[P_SS2] * cphi
    cdef double pim = p[P_SS2] * sphi
    q[0] = pr * p[P_QR] - pim * p[P_QI]
    q[1] = pr * p[P_QI] + pim * p[P_QR]


cdef inline long long _wrap(long long i, long long cap) noexcept nogil:
    return i - cap if i >= cap else i


def sfm_steps(double[::1] y, double[:, ::1] ring, long long p0, long long nsteps,
              long long d_opt, long long d_phase, double h, const double[::1] prm,
              long long rec_from, long long dec, double[:, ::1] out, long long out_pos,
              const double[:, ::1] noise, double noise_amp, double bound):
    """Advance the delayed spin-flip model ``nsteps`` RK4 steps from global step ``p0``.

    Returns ``(status, samples_written, step_index)``.
    """
    cdef long long cap = ring.shape[0]
    cdef int width = out.shape[1]
    cdef bint use_noise = noise.shape[0] > 0
    cdef double bound2 = bound * bound
    cdef double k1[6]
    cdef double k2[6]
    cdef double k3[6]
    cdef double k4[6]
    cdef double xr = y[0], xi = y[1], yr = y[2], yi = y[3], N = y[4], n = y[5]
    cdef double hh = 0.5 * h
    cdef double h6 = h / 6.0
    cdef long long s, p, jo, je, om, o1, o2, em, e1, e2, slot
    cdef double q0[2]
    cdef double qm[2]
    cdef double q1[2]
    cdef long long written = 0
    cdef double dxr0, dxi0, dyr0, dyi0, dxrm, dxim, dyrm, dyim
    cdef double dxr1, dxi1, dyr1, dyi1, a, b
    cdef const double* pp = &prm[0]
    cdef int status = ST_OK
    cdef long long fail_at = -1
    cdef long long next_rec = rec_from
    if p0 + 1 > rec_from:
        next_rec = rec_from + ((p0 + 1 - rec_from + dec - 1) // dec) * dec

    with nogil:
        for s in range(nsteps):
            p = p0 + s
            # rows of the lagged samples j-1, j, j+1, j+2 (p - d >= -cap + 4 by construction)
            jo = (p - d_opt + cap) % cap
            om = _wrap(jo + cap - 1, cap); o1 = _wrap(jo + 1, cap); o2 = _wrap(jo + 2, cap)
            je = (p - d_phase + cap) % cap
            em = _wrap(je + cap - 1, cap); e1 = _wrap(je + 1, cap); e2 = _wrap(je + 2, cap)
            dxr0 = ring[jo, R_XR]; dxi0 = ring[jo, R_XI]
            dyr0 = ring[jo, R_YR]; dyi0 = ring[jo, R_YI]
            dxr1 = ring[o1, R_XR]; dxi1 = ring[o1, R_XI]
            dyr1 = ring[o1, R_YR]; dyi1 = ring[o1, R_YI]
            dxrm = _mid(ring, om, jo, o1, o2, R_XR); dxim = _mid(ring, om, jo, o1, o2, R_XI)
            dyrm = _mid(ring, om, jo, o1, o2, R_YR); dyim = _mid(ring, om, jo, o1, o2, R_YI)
            _modulation(ring[je, R_CPHI], ring[je, R_SPHI], pp, q0)
            _modulation(_mid(ring, em, je, e1, e2, R_CPHI), _mid(ring, em, je, e1, e2, R_SPHI),
                        pp, qm)
            _modulation(ring[e1, R_CPHI], ring[e1, R_SPHI], pp, q1)

            _rhs(xr, xi, yr, yi, N, n, dxr0, dxi0, dyr0, dyi0, q0[0], q0[1], pp, k1)
            _rhs(xr + hh * k1[0], xi + hh * k1[1], yr + hh * k1[2], yi + hh * k1[3],
                 N + hh * k1[4], n + hh * k1[5], dxrm, dxim, dyrm, dyim, qm[0], qm[1], pp, k2)
            _rhs(xr + hh * k2[0], xi + hh * k2[1], yr + hh * k2[2], yi + hh * k2[3],
                 N + hh * k2[4], n + hh * k2[5], dxrm, dxim, dyrm, dyim, qm[0], qm[1], pp, k3)
            _rhs(xr + h * k3[0], xi + h * k3[1], yr + h * k3[2], yi + h * k3[3],
                 N + h * k3[4], n + h * k3[5], dxr1, dxi1, dyr1, dyi1, q1[0], q1[1], pp, k4)

            xr = xr + h6 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
            xi = xi + h6 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
            yr = yr + h6 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2])
            yi = yi + h6 * (k1[3] + 2.0 * k2[3] + 2.0 * k3[3] + k4[3])
            N = N + h6 * (k1[4] + 2.0 * k2[4] + 2.0 * k3[4] + k4[4])
            n = n + h6 * (k1[5] + 2.0 * k2[5] + 2.0 * k3[5] + k4[5])
            if use_noise:
                xr = xr + noise_amp * noise[s, 0]
                xi = xi + noise_amp * noise[s, 1]
                yr = yr + noise_amp * noise[s, 2]
                yi = yi + noise_amp * noise[s, 3]

            a = xr * xr + xi * xi
            b = yr * yr + yi * yi
            if not (a <= bound2 and b <= bound2 and N == N and n == n
                    and N - N == 0.0 and n - n == 0.0):
                status = ST_DIVERGED
                fail_at = p + 1
                break

            slot = (p + 1) % cap
            ring[slot, R_XR] = xr
            ring[slot, R_XI] = xi
            ring[slot, R_YR] = yr
            ring[slot, R_YI] = yi
            dxr0 = yr * pp[P_S1] - xr * pp[P_C1]
            dxi0 = yi * pp[P_S1] - xi * pp[P_C1]
            a = dxr0 * dxr0 + dxi0 * dxi0
            ring[slot, R_PHI] = a
            ring[slot, R_CPHI] = cos(a)
            ring[slot, R_SPHI] = sin(a)

            if p + 1 == next_rec:
                next_rec += dec
                out[out_pos + written, 0] = xr * xr + xi * xi
                out[out_pos + written, 1] = yr * yr + yi * yi
                if width > 2:
                    out[out_pos + written, 2] = xr
                    out[out_pos + written, 3] = xi
                    out[out_pos + written, 4] = yr
                    out[out_pos + written, 5] = yi
                    out[out_pos + written, 6] = N
                    out[out_pos + written, 7] = n
                written += 1

    y[0] = xr; y[1] = xi; y[2] = yr; y[3] = yi; y[4] = N; y[5] = n
    return status, written, fail_at


cdef inline double _cubic(const double[::1] v, double t0, double dt, double t, long long n,
                          int* err) noexcept nogil:
    cdef double s = (t - t0) / dt
    cdef double fi = floor(s)
    cdef long long i = <long long>fi
    cdef double u, c0, c1, c2, c3
    if i < 1 or i + 2 > n - 1:
        err[0] = 1
        return 0.0
    u = s - fi
    c0 = -u * (u - 1.0) * (u - 2.0) / 6.0
    c1 = (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0
    c2 = -(u + 1.0) * u * (u - 2.0) / 2.0
    c3 = (u + 1.0) * u * (u - 1.0) / 6.0
    return c0 * v[i - 1] + c1 * v[i] + c2 * v[i + 1] + c3 * v[i + 2]


def cubic_interp(const double[::1] v, double t0, double dt, const double[::1] t):
    """4-point Lagrange interpolation of uniform samples ``v`` at times ``t``."""
    cdef long long m = t.shape[0]
    cdef long long n = v.shape[0]
    cdef long long j
    cdef int err = 0
    res = np.empty(m, dtype=np.float64)
    cdef double[::1] r = res
    with nogil:
        for j in range(m):
            r[j] = _cubic(v, t0, dt, t[j], n, &err)
            if err:
                break
    if err:
        raise ValueError("interpolation time outside the sampled range")
    return res


def extract_events(const double[::1] v, double t0, double dt, double t_start, double tau,
                   double dtau, const double[::1] T, long long K, int tie_one,
                   unsigned char[::1] out, unsigned char[:, ::1] trace):
    """Event-ordered comparator / staggered-latch / parity circuit.

    Writes ``K * M`` bits into ``out``; the first ``trace.shape[0]`` emissions
    also record the full latch vector.  Returns a nonzero status on a range error.
    """
    cdef long long M = T.shape[0]
    cdef long long n = v.shape[0]
    cdef long long R = trace.shape[0]
    cdef long long kk, m, bi, e = 0
    cdef int err = 0
    cdef unsigned char parity = 0, bit
    cdef double te, a, b
    cdef unsigned char[::1] latch = np.zeros(M, dtype=np.uint8)

    with nogil:
        for kk in range(K):
            for m in range(M):
                te = t_start + kk * tau + m * dtau
                a = _cubic(v, t0, dt, te, n, &err)
                b = _cubic(v, t0, dt, te - T[m], n, &err)
                if err:
                    break
                if a > b:
                    bit = 1
                elif a == b:
                    bit = <unsigned char>tie_one
                else:
                    bit = 0
                parity ^= latch[m] ^ bit
                latch[m] = bit
                out[e] = parity
                if e < R:
                    for bi in range(M):
                        trace[e, bi] = latch[bi]
                e += 1
            if err:
                break
    return ST_RANGE if err else ST_OK


def bm_blocks(const unsigned char[:, ::1] blocks):
    """Linear complexity (Berlekamp-Massey over GF(2)) of every row."""
    cdef Py_ssize_t nb = blocks.shape[0]
    cdef Py_ssize_t M = blocks.shape[1]
    res = np.zeros(nb, dtype=np.int64)
    cdef long long[::1] r = res
    cdef unsigned char[::1] C = np.zeros(M + 1, dtype=np.uint8)
    cdef unsigned char[::1] B = np.zeros(M + 1, dtype=np.uint8)
    cdef unsigned char[::1] Tm = np.zeros(M + 1, dtype=np.uint8)
    cdef Py_ssize_t row, N, i, L, mpos, shift
    cdef unsigned char d
    with nogil:
        for row in range(nb):
            for i in range(M + 1):
                C[i] = 0
                B[i] = 0
            C[0] = 1
            B[0] = 1
            L = 0
            mpos = -1
            for N in range(M):
                d = blocks[row, N]
                for i in range(1, L + 1):
                    d ^= C[i] & blocks[row, N - i]
                if d:
                    for i in range(M + 1):
                        Tm[i] = C[i]
                    shift = N - mpos
                    for i in range(0, M + 1 - shift):
                        C[i + shift] ^= B[i]
                    if 2 * L <= N:
                        L = N + 1 - L
                        mpos = N
                        for i in range(M + 1):
                            B[i] = Tm[i]
            r[row] = L
    return res
