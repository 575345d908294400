"""Pure-Python fallback for the compiled kernels in ``_core.pyx``.

Same names, signatures and floating-point expression order as the compiled
module.  The SFM stepper is a plain Python loop and therefore slow; it exists
for portability and for cross-checking the extension on short horizons.
"""

import math

import numpy as np

SFM_PARAM_NAMES = (
    "k", "alpha", "g_N", "aniso_re", "aniso_im", "mu", "g_s",
    "fb_x", "fb_y", "c1", "s1", "cc2", "ss2", "q_re", "q_im",
)

STATUS_OK = 0
STATUS_DIVERGED = 1
STATUS_RANGE = 2


def _rhs(xr, xi, yr, yi, N, n, dxr, dxi, dyr, dyi, cphi, sphi, p):
    k, al, gN, cr, ci, mu, gs, fx, fy, c1, s1, cc2, ss2, q_r, q_i = p
    nm1 = N - 1.0
    ur = nm1 * xr - n * yi
    ui = nm1 * xi + n * yr
    vr = nm1 * yr + n * xi
    vi = nm1 * yi - n * xr
    pr = cc2 + ss2 * cphi
    pim = ss2 * sphi
    qr = pr * q_r - pim * q_i
    qi = pr * q_i + pim * q_r
    axr = c1 * dyr - s1 * dxr
    axi = c1 * dyi - s1 * dxi
    ayr = c1 * dyr + s1 * dxr
    ayi = c1 * dyi + s1 * dxi
    ix = xr * xr + xi * xi
    iy = yr * yr + yi * yi
    cross = xi * yr - xr * yi
    return (
        k * (ur - al * ui) - (cr * xr - ci * xi) + fx * (axr * qr - axi * qi),
        k * (ui + al * ur) - (cr * xi + ci * xr) + fx * (axr * qi + axi * qr),
        k * (vr - al * vi) + (cr * yr - ci * yi) + fy * (ayr * qr - ayi * qi),
        k * (vi + al * vr) + (cr * yi + ci * yr) + fy * (ayr * qi + ayi * qr),
        gN * (mu - N * (1.0 + ix + iy) - 2.0 * n * cross),
        -gs * n - gN * (n * (ix + iy) + 2.0 * N * cross),
    )


def _mid(ring, j, cap, col):
    return (-ring[(j - 1) % cap][col] + 9.0 * ring[j % cap][col]
            + 9.0 * ring[(j + 1) % cap][col] - ring[(j + 2) % cap][col]) / 16.0


def sfm_steps(y, ring, p0, nsteps, d_opt, d_phase, h, prm, rec_from, dec, out, out_pos,
              noise, noise_amp, bound):
    cap = ring.shape[0]
    width = out.shape[1]
    use_noise = noise.shape[0] > 0
    bound2 = bound * bound
    p = tuple(float(v) for v in prm)
    c1, s1 = p[9], p[10]
    # list-of-lists access is several times faster than numpy scalar indexing
    rl = ring.tolist()
    nz = noise.tolist() if use_noise else None
    xr, xi, yr, yi, N, n = (float(v) for v in y)
    hh = 0.5 * h
    h6 = h / 6.0
    written = 0
    status, fail_at = STATUS_OK, -1
    for s in range(nsteps):
        q = p0 + s
        jo = q - d_opt + cap
        je = q - d_phase + cap
        r0, r1, re0, re1 = rl[jo % cap], rl[(jo + 1) % cap], rl[je % cap], rl[(je + 1) % cap]
        d0 = (r0[0], r0[1], r0[2], r0[3], re0[5], re0[6])
        d1 = (r1[0], r1[1], r1[2], r1[3], re1[5], re1[6])
        dm = (_mid(rl, jo, cap, 0), _mid(rl, jo, cap, 1), _mid(rl, jo, cap, 2),
              _mid(rl, jo, cap, 3), _mid(rl, je, cap, 5), _mid(rl, je, cap, 6))
        k1 = _rhs(xr, xi, yr, yi, N, n, *d0, p)
        k2 = _rhs(xr + hh * k1[0], xi + hh * k1[1], yr + hh * k1[2], yi + hh * k1[3],
                  N + hh * k1[4], n + hh * k1[5], *dm, p)
        k3 = _rhs(xr + hh * k2[0], xi + hh * k2[1], yr + hh * k2[2], yi + hh * k2[3],
                  N + hh * k2[4], n + hh * k2[5], *dm, p)
        k4 = _rhs(xr + h * k3[0], xi + h * k3[1], yr + h * k3[2], yi + h * k3[3],
                  N + h * k3[4], n + h * k3[5], *d1, p)
        xr = xr + h6 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
        xi = xi + h6 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
        yr = yr + h6 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2])
        yi = yi + h6 * (k1[3] + 2.0 * k2[3] + 2.0 * k3[3] + k4[3])
        N = N + h6 * (k1[4] + 2.0 * k2[4] + 2.0 * k3[4] + k4[4])
        n = n + h6 * (k1[5] + 2.0 * k2[5] + 2.0 * k3[5] + k4[5])
        if use_noise:
            w = nz[s]
            xr = xr + noise_amp * w[0]
            xi = xi + noise_amp * w[1]
            yr = yr + noise_amp * w[2]
            yi = yi + noise_amp * w[3]
        a = xr * xr + xi * xi
        b = yr * yr + yi * yi
        if not (a <= bound2 and b <= bound2 and math.isfinite(N) and math.isfinite(n)):
            status, fail_at = STATUS_DIVERGED, q + 1
            break
        pr_ = yr * s1 - xr * c1
        pi_ = yi * s1 - xi * c1
        phi = pr_ * pr_ + pi_ * pi_
        rl[(q + 1) % cap] = [xr, xi, yr, yi, phi, math.cos(phi), math.sin(phi)]
        if q + 1 >= rec_from and (q + 1 - rec_from) % dec == 0:
            row = out[out_pos + written]
            row[0] = xr * xr + xi * xi
            row[1] = yr * yr + yi * yi
            if width > 2:
                row[2:8] = (xr, xi, yr, yi, N, n)
            written += 1
    ring[:] = np.asarray(rl, dtype=np.float64)
    y[:] = (xr, xi, yr, yi, N, n)
    return status, written, fail_at


def _cubic_coeffs(v, t0, dt, t):
    s = (t - t0) / dt
    fi = np.floor(s)
    i = fi.astype(np.int64)
    if i.size and (i.min() < 1 or i.max() + 2 > v.shape[0] - 1):
        raise ValueError("interpolation time outside the sampled range")
    u = s - fi
    c0 = -u * (u - 1.0) * (u - 2.0) / 6.0
    c1 = (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0
    c2 = -(u + 1.0) * u * (u - 2.0) / 2.0
    c3 = (u + 1.0) * u * (u - 1.0) / 6.0
    return i, c0, c1, c2, c3


def cubic_interp(v, t0, dt, t):
    v = np.asarray(v, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    i, c0, c1, c2, c3 = _cubic_coeffs(v, t0, dt, t)
    return c0 * v[i - 1] + c1 * v[i] + c2 * v[i + 1] + c3 * v[i + 2]


def extract_events(v, t0, dt, t_start, tau, dtau, T, K, tie_one, out, trace):
    # vectorised over one cycle at a time; latch/parity bookkeeping is explicit
    M = T.shape[0]
    R = trace.shape[0]
    m = np.arange(M, dtype=np.float64)
    latch = np.zeros(M, dtype=np.uint8)
    parity = 0
    e = 0
    for kk in range(K):
        te = t_start + float(kk) * tau + m * dtau
        try:
            a = cubic_interp(v, t0, dt, te)
            b = cubic_interp(v, t0, dt, te - T)
        except ValueError:
            return STATUS_RANGE
        bits = np.where(a > b, 1, np.where(a == b, tie_one, 0)).astype(np.uint8)
        flips = latch ^ bits
        run = np.bitwise_xor.accumulate(flips) ^ parity
        out[e:e + M] = run
        if e < R:
            for j in range(M):
                if e + j >= R:
                    break
                trace[e + j, : j + 1] = bits[: j + 1]
                trace[e + j, j + 1:] = latch[j + 1:]
        parity = int(run[-1])
        latch = bits
        e += M
    return STATUS_OK


def bm_blocks(blocks):
    """Berlekamp-Massey run on all rows at once (numpy, vectorised over rows)."""
    blocks = np.ascontiguousarray(blocks, dtype=np.uint8)
    nb, M = blocks.shape
    C = np.zeros((nb, M + 1), dtype=np.uint8)
    B = np.zeros((nb, M + 1), dtype=np.uint8)
    C[:, 0] = 1
    B[:, 0] = 1
    L = np.zeros(nb, dtype=np.int64)
    mpos = np.full(nb, -1, dtype=np.int64)
    rows = np.arange(nb)
    cols = np.arange(M + 1)
    for N in range(M):
        # C has degree <= L, so summing over all i <= N is the discrepancy
        d = (np.bitwise_and(C[:, : N + 1], blocks[:, N::-1]).sum(axis=1) & 1).astype(bool)
        if not d.any():
            continue
        idx = rows[d]
        Cd = C[idx]
        shift = N - mpos[idx]
        src = cols[None, :] - shift[:, None]
        valid = src >= 0
        shifted = np.where(valid, B[idx][np.arange(idx.size)[:, None], np.clip(src, 0, M)], 0)
        C[idx] = Cd ^ shifted.astype(np.uint8)
        grow = 2 * L[idx] <= N
        g = idx[grow]
        L[g] = N + 1 - L[g]
        mpos[g] = N
        B[g] = Cd[grow]
    return L
