"""Compiled tree walks.

Every walk consumes its randomness in the same order: internal nodes are
visited in depth-first pre-order and the k-th internal node takes the k-th
split uniform and the k-th angle.  A node with m > 1 leaves gives
j = 1 + floor(u * (m - 1)) leaves to its right child and m - j to its left
child.  Left children carry cos(theta), right children sin(theta).
"""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def _split(u, m):
    j = 1 + int(u * (m - 1))
    if j > m - 1:
        j = m - 1
    return j


@njit(cache=True, nogil=True)
def flags_from_splits(n, usplit):
    """Pre-order node flags (1 internal, 0 leaf) of the tree grown from `usplit`."""
    flags = np.zeros(2 * n - 1, dtype=np.uint8)
    st = np.empty(n, dtype=np.int64)
    st[0] = n
    top = 1
    pos = 0
    iu = 0
    while top > 0:
        top -= 1
        m = st[top]
        while m > 1:
            j = _split(usplit[iu], m)
            iu += 1
            flags[pos] = 1
            pos += 1
            st[top] = j
            top += 1
            m -= j
        pos += 1
    return flags


@njit(cache=True, nogil=True)
def tree_arrays(flags):
    """Parent index, side (0 left, 1 right, -1 root), depth and leaf count per node."""
    nn = flags.shape[0]
    parent = np.empty(nn, dtype=np.int64)
    side = np.empty(nn, dtype=np.int8)
    depth = np.empty(nn, dtype=np.int64)
    leaves = np.zeros(nn, dtype=np.int64)
    st = np.empty(nn, dtype=np.int64)
    top = 0
    for i in range(nn):
        if i == 0:
            parent[i] = -1
            side[i] = -1
            depth[i] = 0
        elif flags[i - 1] == 1:
            parent[i] = i - 1
            side[i] = 0
            depth[i] = depth[i - 1] + 1
        else:
            top -= 1
            parent[i] = st[top]
            side[i] = 1
            depth[i] = depth[st[top]] + 1
        if flags[i] == 1:
            st[top] = i
            top += 1
    for i in range(nn - 1, -1, -1):
        if flags[i] == 0:
            leaves[i] = 1
        if i > 0:
            leaves[parent[i]] += leaves[i]
    return parent, side, depth, leaves


@njit(cache=True, nogil=True)
def coefficients_from_flags(flags, angles):
    n = (flags.shape[0] + 1) // 2
    out = np.empty(n, dtype=np.float64)
    st = np.empty(n, dtype=np.float64)
    top = 0
    cur = 1.0
    k = 0
    j = 0
    for i in range(flags.shape[0]):
        if flags[i] == 1:
            th = angles[k]
            k += 1
            st[top] = cur * np.sin(th)
            top += 1
            cur = cur * np.cos(th)
        else:
            out[j] = cur
            j += 1
            if top > 0:
                top -= 1
                cur = st[top]
    return out


@njit(cache=True, nogil=True)
def walk_block(nus, usplit, angles, x, out_v, out_pimax, out_energy):
    """V = sum_j pi_j x_j, max_j |pi_j| and sum_j pi_j^2 for a block of samples."""
    nmax = 1
    for s in range(nus.shape[0]):
        if nus[s] > nmax:
            nmax = nus[s]
    st_m = np.empty(nmax, dtype=np.int64)
    st_p = np.empty(nmax, dtype=np.float64)
    iu = 0
    ix = 0
    for s in range(nus.shape[0]):
        st_m[0] = nus[s]
        st_p[0] = 1.0
        top = 1
        v = 0.0
        pmax = 0.0
        energy = 0.0
        while top > 0:
            top -= 1
            m = st_m[top]
            p = st_p[top]
            while m > 1:
                j = _split(usplit[iu], m)
                th = angles[iu]
                iu += 1
                st_m[top] = j
                st_p[top] = p * np.sin(th)
                top += 1
                m -= j
                p = p * np.cos(th)
            v += p * x[ix]
            ix += 1
            energy += p * p
            if abs(p) > pmax:
                pmax = abs(p)
        out_v[s] = v
        out_pimax[s] = pmax
        out_energy[s] = energy


@njit(cache=True, nogil=True)
def walk_depth_powers(nus, usplit, xs, out):
    """out[s, k] = sum_j xs[k] ** depth_j over the leaves of tree s."""
    nmax = 1
    for s in range(nus.shape[0]):
        if nus[s] > nmax:
            nmax = nus[s]
    st_m = np.empty(nmax, dtype=np.int64)
    st_d = np.empty(nmax, dtype=np.int64)
    iu = 0
    nx = xs.shape[0]
    for s in range(nus.shape[0]):
        st_m[0] = nus[s]
        st_d[0] = 0
        top = 1
        for k in range(nx):
            out[s, k] = 0.0
        while top > 0:
            top -= 1
            m = st_m[top]
            d = st_d[top]
            while m > 1:
                j = _split(usplit[iu], m)
                iu += 1
                st_m[top] = j
                st_d[top] = d + 1
                top += 1
                m -= j
                d += 1
            for k in range(nx):
                out[s, k] += xs[k] ** d


@njit(cache=True, nogil=True)
def mixture_cf(pis, re, im, h, xi, out_re, out_im):
    """Average over rows of pis of prod_j phi0(pis[r, j] * xi[k]).

    phi0 is the grid (re, im) with spacing h, evaluated by four-point
    Lagrange interpolation and conjugate symmetry for negative arguments.
    """
    nrow = pis.shape[0]
    ncol = pis.shape[1]
    npts = re.shape[0]
    # ghost node at -h so every stencil indexes a plain array
    ere = np.empty(npts + 1)
    eim = np.empty(npts + 1)
    ere[0] = re[1]
    eim[0] = -im[1]
    ere[1:] = re
    eim[1:] = im
    inv_h = 1.0 / h
    for k in range(xi.shape[0]):
        acc_re = 0.0
        acc_im = 0.0
        for r in range(nrow):
            pr = 1.0
            pi = 0.0
            for c in range(ncol):
                a = pis[r, c] * xi[k]
                fr, fi = _lagrange4(ere, eim, inv_h, npts, abs(a))
                if a < 0.0:
                    fi = -fi
                tr = pr * fr - pi * fi
                pi = pr * fi + pi * fr
                pr = tr
            acc_re += pr
            acc_im += pi
        out_re[k] = acc_re / nrow
        out_im[k] = acc_im / nrow


@njit(cache=True, nogil=True)
def _lagrange4(ere, eim, inv_h, npts, a):
    # ere/eim hold the grid shifted by one, with the ghost node in slot 0
    s = a * inv_h
    lo = int(s) - 1
    if lo > npts - 4:
        lo = npts - 4
    u = s - lo
    w0 = -(u - 1.0) * (u - 2.0) * (u - 3.0) / 6.0
    w1 = u * (u - 2.0) * (u - 3.0) / 2.0
    w2 = -u * (u - 1.0) * (u - 3.0) / 2.0
    w3 = u * (u - 1.0) * (u - 2.0) / 6.0
    j = lo + 1
    fr = w0 * ere[j] + w1 * ere[j + 1] + w2 * ere[j + 2] + w3 * ere[j + 3]
    fi = w0 * eim[j] + w1 * eim[j + 1] + w2 * eim[j + 2] + w3 * eim[j + 3]
    return fr, fi


@njit(cache=True, nogil=True)
def coefficients_rows(flags, angles):
    """coefficients_from_flags for every row of a 2-d angle array."""
    n = (flags.shape[0] + 1) // 2
    out = np.empty((angles.shape[0], n), dtype=np.float64)
    for r in range(angles.shape[0]):
        out[r, :] = coefficients_from_flags(flags, angles[r])
    return out
