"""Independent closed forms used to validate the engines.

Everything here is dense and deliberately naive; it is consumed by the
verification suite and the tests, not by the library itself.
"""
import numpy as np
from scipy.special import gammaln


def dense_commutation(p, q):
    """``K_{p,q}`` built entry by entry from ``vec(A^T) = K vec(A)``."""
    k = np.zeros((p * q, p * q))
    for i in range(p):
        for j in range(q):
            # A[i, j] sits at i + j*p in vec(A) and at j + i*q in vec(A^T)
            k[j + i * q, i + j * p] = 1.0
    return k


def _vec(m):
    return np.asarray(m).reshape(-1, order="F")


def wishart_mean(n, sigma):
    return n * sigma


def wishart_variance(n, sigma):
    p = sigma.shape[0]
    return n * (np.eye(p * p) + dense_commutation(p, p)) @ np.kron(sigma, sigma)


def inverse_wishart_mean(n, sigma):
    p = sigma.shape[0]
    return sigma / (n - p - 1)


def inverse_wishart_variance(n, sigma):
    p = sigma.shape[0]
    v = _vec(sigma)
    inner = ((np.eye(p * p) + dense_commutation(p, p)) @ np.kron(sigma, sigma)
             + 2.0 / (n - p - 1) * np.outer(v, v))
    return inner / ((n - p) * (n - p - 1) * (n - p - 3))


def wishart_kron2(n, sigma):
    """``E[S ⊗ S]`` for ``S ~ W(n, Sigma)``."""
    p = sigma.shape[0]
    ss = np.kron(sigma, sigma)
    v = _vec(sigma)
    return n * n * ss + n * (dense_commutation(p, p) @ ss + np.outer(v, v))


def wishart_kron3(n, sigma):
    """``E[⊗^3 S]`` for ``S ~ W(n, Sigma)`` from the order-3 closed form."""
    p = sigma.shape[0]
    kp = dense_commutation(p, p)
    ip = np.eye(p)
    a = np.kron(ip, kp)
    b = np.kron(kp, ip)
    c = np.eye(p ** 3) + b
    v = _vec(sigma)
    pm = np.kron(np.outer(v, v), sigma)
    s3 = np.kron(np.kron(sigma, sigma), sigma)
    return (n ** 3 * s3
            + n ** 2 * (pm + a @ pm @ a + b @ a @ pm @ a @ b + (a + b + b @ a @ b) @ s3)
            + n * (c @ a @ pm + pm @ a @ c + b @ a @ pm @ a + a @ pm @ a @ b
                   + (a @ b + b @ a) @ s3))


def chi2_moment(n, k):
    """``E[X^k]`` for ``X ~ chi^2_n``."""
    return float(np.exp(k * np.log(2.0) + gammaln(n / 2 + k) - gammaln(n / 2)))


def rearrange(mat):
    """Dense ``(I_p ⊗ K_{p,p} ⊗ I_p)`` applied to ``vec(mat)``."""
    p = int(round(np.sqrt(mat.shape[0])))
    op = np.kron(np.kron(np.eye(p), dense_commutation(p, p)), np.eye(p))
    return (op @ _vec(mat)).reshape(p * p, p * p, order="F")


def symmetric_derivative(fun, psi, h=1e-5):
    """Kroneckerian derivative of a matrix function of a symmetric matrix.

    Block ``(m, j)`` of the result holds ``alpha_kl dY_mj / dX_kl`` with
    ``alpha_kl = 1`` on the diagonal and ``1/2`` off it, where ``X`` ranges
    over symmetric matrices (off-diagonal pairs move together).
    """
    p = psi.shape[0]
    y0 = fun(psi)
    rows, cols = y0.shape
    out = np.zeros((rows * p, cols * p))
    for k in range(p):
        for l in range(k, p):
            e = np.zeros((p, p))
            e[k, l] = e[l, k] = 1.0
            dy = (fun(psi + h * e) - fun(psi - h * e)) / (2 * h)
            alpha = 1.0 if k == l else 0.5
            out[k::p, l::p] = alpha * dy
            out[l::p, k::p] = alpha * dy
    return out
