"""Matrix-free discrete operators on the transmission grid.

The clamped Laplacian uses reflection ghosts, which makes it self-adjoint on
clamped fields; the bending operator is its weighted normal form, so symmetry
and positivity of the energy form are structural. The thermal operator is
assembled from an edge-based gradient form (exactly symmetric), whose interior
rows coincide with the 5-point stencil and whose boundary rows reproduce the
Robin ghost elimination.
"""

from dataclasses import dataclass

import numpy as np
from scipy.fft import dstn, idstn

from .domain import Domain
from .errors import SolverError, UsageError
from .fields import Field, PhysParams, inner_l2


# ---------------------------------------------------------------------------
# clamped plate stencils

def laplacian_clamped(domain: Domain, u: np.ndarray) -> np.ndarray:
    """5-point Laplacian of a clamped field, evaluated at every node.

    Ghost values are mirror reflections (u_ghost = u_mirror), encoding the
    zero normal derivative of the clamped boundary.
    """
    n, h = domain.n, domain.h
    ue = np.zeros((n + 3, n + 3))
    ue[1:-1, 1:-1] = u
    ue[0, 1:-1] = u[1, :]
    ue[-1, 1:-1] = u[-2, :]
    ue[1:-1, 0] = u[:, 1]
    ue[1:-1, -1] = u[:, -2]
    out = (
        ue[:-2, 1:-1] + ue[2:, 1:-1] + ue[1:-1, :-2] + ue[1:-1, 2:]
        - 4.0 * ue[1:-1, 1:-1]
    )
    out /= h * h
    return out


def laplacian_clamped_transpose(domain: Domain, r: np.ndarray) -> np.ndarray:
    """Exact transpose of laplacian_clamped as a matrix on nodal values."""
    n, h = domain.n, domain.h
    re = np.zeros((n + 3, n + 3))
    re[1:-1, 1:-1] -= 4.0 * r
    re[:-2, 1:-1] += r
    re[2:, 1:-1] += r
    re[1:-1, :-2] += r
    re[1:-1, 2:] += r
    out = re[1:-1, 1:-1].copy()
    out[1, :] += re[0, 1:-1]
    out[-2, :] += re[-1, 1:-1]
    out[:, 1] += re[1:-1, 0]
    out[:, -1 - 1] += re[1:-1, -1]
    out /= h * h
    return out


def biharmonic_transmission(domain: Domain, u: np.ndarray, params: PhysParams,
                            coeff=None) -> np.ndarray:
    """Operator of the bending form a(u,p) = sum_regions beta <lap u, lap p>.

    Returns the pointwise strong form on free nodes (zero on gamma1); the
    interface flux conditions hold weakly through the beta-weighted form.
    """
    if coeff is None:
        coeff = params.bending_coeff(domain)
    h2 = domain.h * domain.h
    q = coeff * laplacian_clamped(domain, u)
    out = laplacian_clamped_transpose(domain, q) / h2
    out[domain.gamma1] = 0.0
    return out


def gradient_form(domain: Domain, a: np.ndarray, b: np.ndarray) -> float:
    """Edge-based discrete integral of grad(a).grad(b) over the full square.

    Exactly summation-by-parts compatible with laplacian_clamped on clamped
    fields: <lap a, b>_w = -gradient_form(a, b) whenever b vanishes on gamma1.
    """
    dax = a[1:, :] - a[:-1, :]
    dbx = b[1:, :] - b[:-1, :] if b is not a else dax
    day = a[:, 1:] - a[:, :-1]
    dby = b[:, 1:] - b[:, :-1] if b is not a else day
    return float(np.sum(dax * dbx) + np.sum(day * dby))


def central_gradient(domain: Domain, u: np.ndarray):
    """Central-difference gradient with clamped reflection ghosts."""
    n, h = domain.n, domain.h
    ue = np.zeros((n + 3, n + 3))
    ue[1:-1, 1:-1] = u
    ue[0, 1:-1] = u[1, :]
    ue[-1, 1:-1] = u[-2, :]
    ue[1:-1, 0] = u[:, 1]
    ue[1:-1, -1] = u[:, -2]
    gx = (ue[2:, 1:-1] - ue[:-2, 1:-1]) / (2.0 * h)
    gy = (ue[1:-1, 2:] - ue[1:-1, :-2]) / (2.0 * h)
    return gx, gy


# ---------------------------------------------------------------------------
# thermal operator (mixed Dirichlet / Robin)

def thermal_form(domain: Domain, a: np.ndarray, b: np.ndarray,
                 params: PhysParams) -> float:
    """H^1_D form on the frame: edge-weighted gradient integral plus the
    Robin boundary term lam * line integral over gamma1 (no beta0 factor)."""
    dax = a[1:, :] - a[:-1, :]
    dbx = b[1:, :] - b[:-1, :] if b is not a else dax
    day = a[:, 1:] - a[:, :-1]
    dby = b[:, 1:] - b[:, :-1] if b is not a else day
    grad = float(np.sum(domain.ce_h * dax * dbx) + np.sum(domain.ce_v * day * dby))
    robin = params.lam * float(np.sum(domain.bw * a * b))
    return grad + robin


def thermal_laplacian(domain: Domain, theta: np.ndarray,
                      params: PhysParams) -> np.ndarray:
    """Positive operator of the H^1_D form w.r.t. the frame L^2 weights.

    Interior frame rows are the standard 5-point -Laplacian with Dirichlet
    elimination at gamma0; gamma1 rows carry the Robin ghost.
    """
    out = _thermal_flux(domain, theta)
    out += params.lam * domain.bw * theta
    np.divide(out, domain.w1, out=out, where=domain.w1 > 0)
    out[~domain.theta_free] = 0.0
    return out


def _thermal_flux(domain: Domain, theta: np.ndarray) -> np.ndarray:
    out = np.zeros_like(theta)
    dx = domain.ce_h * (theta[1:, :] - theta[:-1, :])
    out[:-1, :] -= dx
    out[1:, :] += dx
    dy = domain.ce_v * (theta[:, 1:] - theta[:, :-1])
    out[:, :-1] -= dy
    out[:, 1:] += dy
    return out


def thermal_diagonal(domain: Domain, params: PhysParams) -> np.ndarray:
    """Diagonal of thermal_laplacian (Jacobi preconditioning)."""
    deg = np.zeros_like(domain.w1)
    deg[:-1, :] += domain.ce_h
    deg[1:, :] += domain.ce_h
    deg[:, :-1] += domain.ce_v
    deg[:, 1:] += domain.ce_v
    deg += params.lam * domain.bw
    out = np.divide(deg, domain.w1, where=domain.w1 > 0)
    out[~domain.theta_free] = 0.0
    return out


# ---------------------------------------------------------------------------
# thermoelastic coupling (exactly skew-adjoint pair)

def coupling_to_plate(domain: Domain, theta: np.ndarray,
                      params: PhysParams) -> np.ndarray:
    """Weak form of mu*lap(theta) acting on the plate equation: defined so
    <C theta, p>_Omega = mu * sum(w1 * theta * lap p) for clamped p."""
    h2 = domain.h * domain.h
    q = params.mu * domain.w1 * theta
    out = laplacian_clamped_transpose(domain, q) / h2
    out[domain.gamma1] = 0.0
    return out


def coupling_to_heat(domain: Domain, ut: np.ndarray,
                     params: PhysParams) -> np.ndarray:
    """mu*lap(u_t) restricted to the frame temperature dofs; the exact
    negative adjoint of coupling_to_plate, which is what cancels the
    coupling in the discrete energy identity."""
    out = params.mu * laplacian_clamped(domain, ut)
    out[~domain.theta_free] = 0.0
    return out


# ---------------------------------------------------------------------------
# generic preconditioned CG

@dataclass
class LinearOperator:
    """A matrix-free symmetric operator with its inner product."""

    apply: callable
    dot: callable
    symmetric: bool = True
    positive_definite: bool = True


def cg_solve(op: LinearOperator, rhs: np.ndarray, tol: float = 1e-10,
             max_iter: int = 10000, precond=None, x0=None):
    """Preconditioned conjugate gradients.

    Returns (x, iterations). Residual tolerance is relative to |rhs|; raises
    SolverError with the best iterate on non-convergence.
    """
    dot = op.dot
    bnorm = np.sqrt(dot(rhs, rhs))
    if bnorm == 0.0:
        return np.zeros_like(rhs), 0
    if x0 is None:
        x = np.zeros_like(rhs)
        r = rhs.copy()
    else:
        x = x0.copy()
        r = rhs - op.apply(x)
    z = precond(r) if precond is not None else r
    p = z.copy()
    rz = dot(r, z)
    for k in range(max_iter):
        rnorm = np.sqrt(dot(r, r))
        if rnorm <= tol * bnorm:
            return x, k
        ap = op.apply(p)
        pap = dot(p, ap)
        if pap <= 0.0:
            raise SolverError(
                f"CG breakdown: operator not positive definite (pAp={pap:g})",
                best=x, residual=rnorm / bnorm, iterations=k,
            )
        alpha = rz / pap
        x = x + alpha * p
        r = r - alpha * ap
        z = precond(r) if precond is not None else r
        rz_new = dot(r, z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    rnorm = np.sqrt(dot(r, r))
    raise SolverError(
        f"CG did not converge in {max_iter} iterations "
        f"(relative residual {rnorm / bnorm:.3e})",
        best=x, residual=rnorm / bnorm, iterations=max_iter,
    )


# ---------------------------------------------------------------------------
# Dirichlet Laplacian on the whole square and its inverse

def dirichlet_sine_eigenvalues(domain: Domain) -> np.ndarray:
    """Eigenvalues of the 5-point Dirichlet -Laplacian on interior nodes,
    as an (n-1, n-1) grid matching DST-I ordering."""
    n, h = domain.n, domain.h
    j = np.arange(1, n)
    lam1d = (4.0 / (h * h)) * np.sin(j * np.pi / (2 * n)) ** 2
    return lam1d[:, None] + lam1d[None, :]


def sine_solve(domain: Domain, rhs_interior: np.ndarray,
               symbol: np.ndarray) -> np.ndarray:
    """Diagonal solve in the discrete sine basis (interior nodes)."""
    coeff = dstn(rhs_interior, type=1, norm="ortho")
    coeff /= symbol
    return idstn(coeff, type=1, norm="ortho")


def neg_laplacian_dirichlet(domain: Domain, w: np.ndarray) -> np.ndarray:
    """-Laplacian with zero Dirichlet data on the outer boundary."""
    out = -laplacian_clamped(domain, w)
    out[domain.gamma1] = 0.0
    return out


def dirichlet_inverse(domain: Domain, f, region="omega", tol: float = 1e-12,
                      max_iter: int = 500) -> np.ndarray:
    """Solve lap(w) = f with w = 0 on the outer boundary.

    CG on the SPD -lap with an exact sine-basis preconditioner (the
    preconditioner solves the same operator, so CG converges in a couple of
    iterations while still certifying the residual).
    """
    if region != "omega":
        raise UsageError(
            "dirichlet_inverse is defined with Dirichlet data on the outer "
            "boundary of Omega; other regions are not supported"
        )
    fv = f.values if isinstance(f, Field) else np.asarray(f, dtype=float)
    rhs = -fv.copy()
    rhs[domain.gamma1] = 0.0
    h2 = domain.h * domain.h
    symbol = dirichlet_sine_eigenvalues(domain)

    def precond(r):
        out = np.zeros_like(r)
        out[1:-1, 1:-1] = sine_solve(domain, r[1:-1, 1:-1], symbol)
        return out

    op = LinearOperator(
        apply=lambda w: neg_laplacian_dirichlet(domain, w),
        dot=lambda a, b: h2 * float(np.sum(a * b)),
    )
    w, _ = cg_solve(op, rhs, tol=tol, max_iter=max_iter, precond=precond)
    return w
