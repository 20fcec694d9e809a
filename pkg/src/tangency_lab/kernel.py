"""Closed-form expected loss of the student-teacher ReLU network.

The student and the teacher each have d ReLU units with unit second-layer
weights; the teacher weight matrix is fixed to the identity.  Under standard
Gaussian inputs the population loss is a finite sum of arccos-kernel terms,

    phi(w, v) = (1/pi) |w||v| (sin t + (pi - t) cos t),   t = angle(w, v),

and k = phi/2 equals E[relu(<w,x>) relu(<v,x>)].  This module evaluates the
loss, its analytic gradient, and Hessian-vector products by central finite
differences of the gradient.
"""

import numpy as np

from .errors import DegenerateVector, DimensionMismatch, NearParallelRows

EPS_NORM = 1e-12
# Distinct antiparallel rows sit on the angle-gradient singularity; the
# parallel side has a smooth limit and is allowed.
ANTIPARALLEL_TOL = 1e-9


def _as_weight_matrix(W):
    W = np.asarray(W, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {W.shape}")
    if W.shape[0] < 4:
        raise DimensionMismatch(f"d >= 4 required, got d = {W.shape[0]}")
    if not np.all(np.isfinite(W)):
        raise DegenerateVector("weight matrix has non-finite entries")
    return W


def _row_norms(W):
    n = np.linalg.norm(W, axis=1)
    if np.any(n <= EPS_NORM):
        raise DegenerateVector("a student row has norm <= 1e-12")
    return n


def _angles_student_student(W, n):
    cos = np.clip((W @ W.T) / np.outer(n, n), -1.0, 1.0)
    return np.arccos(cos)

def _angles_student_teacher(W, n):
    cos = np.clip(W / n[:, None], -1.0, 1.0)
    return np.arccos(cos)


def kernel_phi(w, v):
    """Arccos kernel phi(w, v) = (1/pi) |w||v| (sin t + (pi - t) cos t).

    Symmetric and positively homogeneous of degree 1 in each argument.
    Raises DegenerateVector if either argument has norm <= 1e-12.
    """
    w = np.asarray(w, dtype=float).ravel()
    v = np.asarray(v, dtype=float).ravel()
    if w.shape != v.shape:
        raise DimensionMismatch("kernel arguments must have equal length")
    nw = np.linalg.norm(w)
    nv = np.linalg.norm(v)
    if nw <= EPS_NORM or nv <= EPS_NORM:
        raise DegenerateVector("kernel argument has norm <= 1e-12")
    cos = np.clip(np.dot(w, v) / (nw * nv), -1.0, 1.0)
    theta = np.arccos(cos)
    return nw * nv * (np.sin(theta) + (np.pi - theta) * np.cos(theta)) / np.pi


def loss(W):
    """Population loss 0.5 E[(student(x) - teacher(x))^2] at weight matrix W.

    Parameters
    ----------
    W : (d, d) array_like
        Student first-layer weights, d >= 4; every row must have norm > 1e-12.

    Returns
    -------
    float
        0.5 [ sum_ij k(w_i, w_j) - 2 sum_ij k(w_i, e_j) + sum_ij k(e_i, e_j) ]
        with k = phi/2.  Nonnegative up to round-off; zero at W = I.
    """
    W = _as_weight_matrix(W)
    d = W.shape[0]
    n = _row_norms(W)

    theta_ww = _angles_student_student(W, n)
    g_ww = np.sin(theta_ww) + (np.pi - theta_ww) * np.cos(theta_ww)
    s_ww = float(np.sum(np.outer(n, n) * g_ww)) / (2.0 * np.pi)

    theta_wt = _angles_student_teacher(W, n)
    g_wt = np.sin(theta_wt) + (np.pi - theta_wt) * np.cos(theta_wt)
    s_wt = float(np.sum(n[:, None] * g_wt)) / (2.0 * np.pi)

    s_tt = d / 2.0 + d * (d - 1) / (2.0 * np.pi)
    return 0.5 * (s_ww - 2.0 * s_wt + s_tt)


def grad_loss(W):
    """Analytic gradient of the loss with respect to W.

    Row i is sum_j d_w k(w_i, w_j) - sum_j d_w k(w_i, e_j), where for w not
    parallel to v

        d_w k(w, v) = (1/2pi) (|v| sin t * w/|w| + (pi - t) v),

    and the smooth limit d_w k(w, w) = w/2 covers coincident directions (so
    the self term contributes w_i/2, i.e. the derivative of k(w, w) = |w|^2/2
    split once per slot).  Exact antiparallel row pairs raise NearParallelRows
    instead of silently using a one-sided subgradient.

    Parameters
    ----------
    W : (d, d) array_like
        Weight matrix as for `loss`.

    Returns
    -------
    (d, d) ndarray
        The Euclidean gradient; matches central finite differences of `loss`
        to about 1e-6 per component at step 1e-6 (1 + |W|).
    """
    W = _as_weight_matrix(W)
    n = _row_norms(W)
    w_hat = W / n[:, None]

    theta_ww = _angles_student_student(W, n)
    theta_wt = _angles_student_teacher(W, n)
    off = ~np.eye(W.shape[0], dtype=bool)
    if np.any(np.pi - theta_ww[off] < ANTIPARALLEL_TOL) or np.any(
        np.pi - theta_wt < ANTIPARALLEL_TOL
    ):
        raise NearParallelRows("antiparallel row pair within 1e-9 of the singularity")

    # a_i = sum_j |w_j| sin t_ij (students), b_i the same against teacher rows.
    a = np.sum(np.sin(theta_ww) * n[None, :], axis=1)
    b = np.sum(np.sin(theta_wt), axis=1)
    grad = (a - b)[:, None] * w_hat + (np.pi - theta_ww) @ W - (np.pi - theta_wt)
    return grad / (2.0 * np.pi)


def hvp(W, V, h=None):
    """Hessian-vector product by a central difference of the gradient.

    Parameters
    ----------
    W : (d, d) array_like
        Base point.
    V : (d, d) array_like
        Direction, V != 0.
    h : float, optional
        Step; defaults to 1e-6 (1 + |W|_F) / |V|_F.

    Returns
    -------
    (d, d) ndarray
        [grad_loss(W + hV) - grad_loss(W - hV)] / (2h).
    """
    W = _as_weight_matrix(W)
    V = np.asarray(V, dtype=float)
    if V.shape != W.shape:
        raise DimensionMismatch("direction shape must match the weight matrix")
    v_norm = np.linalg.norm(V)
    if v_norm <= EPS_NORM:
        raise DegenerateVector("hvp direction must be nonzero")
    if h is None:
        h = 1e-6 * (1.0 + np.linalg.norm(W)) / v_norm
    return (grad_loss(W + h * V) - grad_loss(W - h * V)) / (2.0 * h)
