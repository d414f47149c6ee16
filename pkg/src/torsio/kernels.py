"""Low level stencil and solver kernels.

Everything here works on 3d-shaped float64 arrays; lower-dimensional grids
are passed with trailing axes of length 1 and the `dim` argument tells the
kernels how many axes are real.  Dirichlet conditions (grid boundary and
masked nodes) are realized by odd reflection: a missing neighbor reads as
-u_center, which places the wall exactly halfway between the node and its
ghost and keeps the scheme second order up to the boundary.

All reductions are sequential loops in index order, so results are bitwise
reproducible regardless of thread count.
"""

import numpy as np
from numba import njit

_KW = dict(cache=True, nogil=True)


@njit(**_KW)
def apply_operator(u, pen, mask, h2, c0, dim, out):
    """out = (-lap_h + c0 + pen) u on unmasked nodes, 0 on masked ones.

    pen must hold 0.0 (not inf) at masked nodes; mask is uint8/bool.
    """
    n1, n2, n3 = u.shape
    for i in range(n1):
        for j in range(n2):
            for k in range(n3):
                if mask[i, j, k]:
                    out[i, j, k] = 0.0
                    continue
                c = u[i, j, k]
                acc = 0.0
                if i > 0 and not mask[i - 1, j, k]:
                    acc += c - u[i - 1, j, k]
                else:
                    acc += 2.0 * c
                if i < n1 - 1 and not mask[i + 1, j, k]:
                    acc += c - u[i + 1, j, k]
                else:
                    acc += 2.0 * c
                if dim >= 2:
                    if j > 0 and not mask[i, j - 1, k]:
                        acc += c - u[i, j - 1, k]
                    else:
                        acc += 2.0 * c
                    if j < n2 - 1 and not mask[i, j + 1, k]:
                        acc += c - u[i, j + 1, k]
                    else:
                        acc += 2.0 * c
                if dim >= 3:
                    if k > 0 and not mask[i, j, k - 1]:
                        acc += c - u[i, j, k - 1]
                    else:
                        acc += 2.0 * c
                    if k < n3 - 1 and not mask[i, j, k + 1]:
                        acc += c - u[i, j, k + 1]
                    else:
                        acc += 2.0 * c
                out[i, j, k] = acc / h2 + (c0 + pen[i, j, k]) * c


@njit(**_KW)
def operator_diagonal(pen, mask, h2, c0, dim, out):
    """Exact diagonal of the operator above (a wall side counts 2/h2, an
    open side 1/h2, so an axis with both neighbors present gives the usual
    2/h2 total)."""
    n1, n2, n3 = pen.shape
    for i in range(n1):
        for j in range(n2):
            for k in range(n3):
                if mask[i, j, k]:
                    out[i, j, k] = 1.0
                    continue
                d = 0.0
                d += 2.0 if (i == 0 or mask[i - 1, j, k]) else 1.0
                d += 2.0 if (i == n1 - 1 or mask[i + 1, j, k]) else 1.0
                if dim >= 2:
                    d += 2.0 if (j == 0 or mask[i, j - 1, k]) else 1.0
                    d += 2.0 if (j == n2 - 1 or mask[i, j + 1, k]) else 1.0
                if dim >= 3:
                    d += 2.0 if (k == 0 or mask[i, j, k - 1]) else 1.0
                    d += 2.0 if (k == n3 - 1 or mask[i, j, k + 1]) else 1.0
                out[i, j, k] = d / h2 + c0 + pen[i, j, k]


@njit(**_KW)
def pcg(pen, mask, b, h2, c0, dim, x, tol, max_iter):
    """Jacobi-preconditioned conjugate gradients, warm-started from x.

    Terminates on ||b - A x||_2 / ||b||_2 <= tol over unmasked nodes.
    Returns (iterations, achieved relative residual).  x is updated in
    place; masked entries are forced to zero.
    """
    n1, n2, n3 = b.shape
    r = np.zeros_like(b)
    z = np.zeros_like(b)
    p = np.zeros_like(b)
    ap = np.zeros_like(b)
    dinv = np.zeros_like(b)
    operator_diagonal(pen, mask, h2, c0, dim, dinv)
    for i in range(n1):
        for j in range(n2):
            for k in range(n3):
                if mask[i, j, k]:
                    x[i, j, k] = 0.0
                dinv[i, j, k] = 1.0 / dinv[i, j, k]
    bnorm2 = 0.0
    for i in range(n1):
        for j in range(n2):
            for k in range(n3):
                if not mask[i, j, k]:
                    bnorm2 += b[i, j, k] * b[i, j, k]
    if bnorm2 == 0.0:
        for i in range(n1):
            for j in range(n2):
                for k in range(n3):
                    x[i, j, k] = 0.0
        return 0, 0.0
    bnorm = np.sqrt(bnorm2)
    apply_operator(x, pen, mask, h2, c0, dim, ap)
    rz = 0.0
    rnorm2 = 0.0
    for i in range(n1):
        for j in range(n2):
            for k in range(n3):
                if not mask[i, j, k]:
                    ri = b[i, j, k] - ap[i, j, k]
                    r[i, j, k] = ri
                    zi = ri * dinv[i, j, k]
                    z[i, j, k] = zi
                    p[i, j, k] = zi
                    rz += ri * zi
                    rnorm2 += ri * ri
    res = np.sqrt(rnorm2) / bnorm
    if res <= tol:
        return 0, res
    it = 0
    while it < max_iter:
        apply_operator(p, pen, mask, h2, c0, dim, ap)
        pap = 0.0
        for i in range(n1):
            for j in range(n2):
                for k in range(n3):
                    if not mask[i, j, k]:
                        pap += p[i, j, k] * ap[i, j, k]
        if pap <= 0.0:
            # operator is SPD on the active set; this can only be roundoff
            break
        alpha = rz / pap
        rnorm2 = 0.0
        for i in range(n1):
            for j in range(n2):
                for k in range(n3):
                    if not mask[i, j, k]:
                        x[i, j, k] += alpha * p[i, j, k]
                        ri = r[i, j, k] - alpha * ap[i, j, k]
                        r[i, j, k] = ri
                        rnorm2 += ri * ri
        it += 1
        res = np.sqrt(rnorm2) / bnorm
        if res <= tol:
            break
        rznew = 0.0
        for i in range(n1):
            for j in range(n2):
                for k in range(n3):
                    if not mask[i, j, k]:
                        zi = r[i, j, k] * dinv[i, j, k]
                        z[i, j, k] = zi
                        rznew += r[i, j, k] * zi
        beta = rznew / rz
        rz = rznew
        for i in range(n1):
            for j in range(n2):
                for k in range(n3):
                    if not mask[i, j, k]:
                        p[i, j, k] = z[i, j, k] + beta * p[i, j, k]
                    else:
                        p[i, j, k] = 0.0
    return it, res


@njit(**_KW)
def energy_parts(u, pen, mask, h2, dim):
    """Unweighted quadratic form pieces (caller multiplies by cell volume).

    Returns (grad2, mass, pen_mass) with
      grad2    = sum over links (u_i - u_j)^2 / h^2, wall links counted
                 as 2 u^2 / h^2 (half-cell distance to the wall),
      mass     = sum u^2,
      pen_mass = sum pen u^2,
    so that grad2 + c0*mass + pen_mass == <A u, u> for the operator above.
    """
    n1, n2, n3 = u.shape
    grad2 = 0.0
    mass = 0.0
    pen_mass = 0.0
    for i in range(n1):
        for j in range(n2):
            for k in range(n3):
                if mask[i, j, k]:
                    continue
                c = u[i, j, k]
                mass += c * c
                pen_mass += pen[i, j, k] * c * c
                if i == 0 or mask[i - 1, j, k]:
                    grad2 += 2.0 * c * c / h2
                if i < n1 - 1 and not mask[i + 1, j, k]:
                    d = c - u[i + 1, j, k]
                    grad2 += d * d / h2
                else:
                    grad2 += 2.0 * c * c / h2
                if dim >= 2:
                    if j == 0 or mask[i, j - 1, k]:
                        grad2 += 2.0 * c * c / h2
                    if j < n2 - 1 and not mask[i, j + 1, k]:
                        d = c - u[i, j + 1, k]
                        grad2 += d * d / h2
                    else:
                        grad2 += 2.0 * c * c / h2
                if dim >= 3:
                    if k == 0 or mask[i, j, k - 1]:
                        grad2 += 2.0 * c * c / h2
                    if k < n3 - 1 and not mask[i, j, k + 1]:
                        d = c - u[i, j, k + 1]
                        grad2 += d * d / h2
                    else:
                        grad2 += 2.0 * c * c / h2
    return grad2, mass, pen_mass


@njit(**_KW)
def p_energy_gradient(u, pen, mask, f, dim, p, eps2, a_link, a_mass, c0, out):
    """Energy and gradient of the p-Dirichlet functional on the grid.

    E(u) = (1/p) [ a_link * ( sum_links psi(u_i - u_j)
                            + 0.5 * sum_wall_sides psi(2 u_i) )
                 + a_mass * sum (c0 + pen_i) psi(u_i) ]
           - a_mass * sum f_i u_i

    with psi(t) = (t^2 + eps2)^(p/2); a_link = h^(d-p), a_mass = h^d.
    The 0.5 psi(2u) wall term is the half-cell to the reflected ghost,
    so at p = 2 (eps2 = 0) the gradient is exactly a_mass times the
    residual of the linear operator.  Writes the gradient into out and
    returns the energy.  Masked nodes carry zero gradient.
    """
    n1, n2, n3 = u.shape
    q = 0.5 * p - 1.0  # psi'(t) = p * t * (t^2+eps2)^q
    energy = 0.0
    for i in range(n1):
        for j in range(n2):
            for k in range(n3):
                out[i, j, k] = 0.0
    for i in range(n1):
        for j in range(n2):
            for k in range(n3):
                if mask[i, j, k]:
                    continue
                c = u[i, j, k]
                # mass, penalty and load
                w = (c0 + pen[i, j, k]) * a_mass
                energy += w * (c * c + eps2) ** (0.5 * p) / p
                out[i, j, k] += w * c * (c * c + eps2) ** q
                energy -= a_mass * f[i, j, k] * c
                out[i, j, k] -= a_mass * f[i, j, k]
                # wall sides: count both directions of every axis here
                walls = 0
                if i == 0 or mask[i - 1, j, k]:
                    walls += 1
                if i == n1 - 1 or mask[i + 1, j, k]:
                    walls += 1
                if dim >= 2:
                    if j == 0 or mask[i, j - 1, k]:
                        walls += 1
                    if j == n2 - 1 or mask[i, j + 1, k]:
                        walls += 1
                if dim >= 3:
                    if k == 0 or mask[i, j, k - 1]:
                        walls += 1
                    if k == n3 - 1 or mask[i, j, k + 1]:
                        walls += 1
                if walls > 0:
                    t = 2.0 * c
                    energy += walls * 0.5 * a_link * (t * t + eps2) ** (0.5 * p) / p
                    out[i, j, k] += walls * a_link * t * (t * t + eps2) ** q
                # interior links, counted once from the lower node
                if i < n1 - 1 and not mask[i + 1, j, k]:
                    t = c - u[i + 1, j, k]
                    energy += a_link * (t * t + eps2) ** (0.5 * p) / p
                    g = a_link * t * (t * t + eps2) ** q
                    out[i, j, k] += g
                    out[i + 1, j, k] -= g
                if dim >= 2 and j < n2 - 1 and not mask[i, j + 1, k]:
                    t = c - u[i, j + 1, k]
                    energy += a_link * (t * t + eps2) ** (0.5 * p) / p
                    g = a_link * t * (t * t + eps2) ** q
                    out[i, j, k] += g
                    out[i, j + 1, k] -= g
                if dim >= 3 and k < n3 - 1 and not mask[i, j, k + 1]:
                    t = c - u[i, j, k + 1]
                    energy += a_link * (t * t + eps2) ** (0.5 * p) / p
                    g = a_link * t * (t * t + eps2) ** q
                    out[i, j, k] += g
                    out[i, j, k + 1] -= g
    return energy


@njit(**_KW)
def weighted_apply(v, wx, wy, wz, wdiag, mask, a_link, dim, out):
    """Apply the weighted second-difference operator

        (B v)_i = wdiag_i v_i + a_link * sum_links w_link (v_i - v_j)

    where w_ax[i] weighs the link between node i and i+1 along that
    axis (absent or masked links carry weight zero) and wdiag collects
    all diagonal pieces: mass rows and wall sides.  This is the Hessian
    of the p-energy when the weights are its second derivatives.
    """
    n1, n2, n3 = v.shape
    for i in range(n1):
        for j in range(n2):
            for k in range(n3):
                if mask[i, j, k]:
                    out[i, j, k] = 0.0
                    continue
                c = v[i, j, k]
                acc = wdiag[i, j, k] * c
                if i > 0 and not mask[i - 1, j, k]:
                    acc += a_link * wx[i - 1, j, k] * (c - v[i - 1, j, k])
                if i < n1 - 1 and not mask[i + 1, j, k]:
                    acc += a_link * wx[i, j, k] * (c - v[i + 1, j, k])
                if dim >= 2:
                    if j > 0 and not mask[i, j - 1, k]:
                        acc += a_link * wy[i, j - 1, k] * (c - v[i, j - 1, k])
                    if j < n2 - 1 and not mask[i, j + 1, k]:
                        acc += a_link * wy[i, j, k] * (c - v[i, j + 1, k])
                if dim >= 3:
                    if k > 0 and not mask[i, j, k - 1]:
                        acc += a_link * wz[i, j, k - 1] * (c - v[i, j, k - 1])
                    if k < n3 - 1 and not mask[i, j, k + 1]:
                        acc += a_link * wz[i, j, k] * (c - v[i, j, k + 1])
                out[i, j, k] = acc


def as3d(values: np.ndarray) -> np.ndarray:
    """View a 1d/2d/3d array as 3d with trailing singleton axes."""
    a = np.ascontiguousarray(values, dtype=np.float64)
    while a.ndim < 3:
        a = a[..., None]
    return a


def mask3d(mask: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(mask, dtype=np.bool_)
    while a.ndim < 3:
        a = a[..., None]
    return a
