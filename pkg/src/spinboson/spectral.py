"""Non-Hermitian spectral primitives.

Everything here is dense-solver based and sized for desk-scale matrices.
Two storage layouts are supported throughout: plain dense matrices and the
permuted-block-diagonal layout produced by the model assembly (the exact
parity symmetry splits the Hamiltonian into two blocks, and all spectral
quantities of the full operator are unions or maxima over the blocks).

Contour projectors are trapezoid quadratures of the resolvent around a
circle.  The integrand is analytic in an annulus whose radii are set by the
distance of the nearest excluded eigenvalue, so the quadrature converges
geometrically and a small node count reaches residuals near machine
precision.  For large matrices the projector is never formed entrywise:
its action on a block of probe vectors is accumulated node by node (one LU
factorization per node), and the rank-one factors are recovered from that
action.  This keeps every ladder step at O(nodes * n^3 / 3) flops with tiny
memory instead of O(nodes * n^3) for full inverses.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lu_factor, lu_solve
from scipy.sparse.linalg import LinearOperator, svds

from .errors import ContourCollisionError, DegeneracyError, TrackingError
from .fock import OperatorMatrix

DENSE_SVD_LIMIT = 500
DEFAULT_QUAD_POINTS = 64
IDEMPOTENCY_TOL = 1e-10
MAX_QUAD_POINTS = 1024


def _as_blocks(H) -> list[tuple[np.ndarray | None, np.ndarray]]:
    """Normalize input to a list of (global indices, dense block)."""
    if isinstance(H, OperatorMatrix):
        if H.blocks is not None:
            return [(ix, block) for ix, block in H.blocks]
        return [(None, H.matrix)]
    arr = np.asarray(H, dtype=complex)
    return [(None, arr)]


def eig_all(H, hermitian_tol: float = 1e-10) -> np.ndarray:
    """All eigenvalues, sorted by (real, imaginary) part.

    For operators flagged Hermitian the imaginary parts are checked against
    ``hermitian_tol`` before being returned.
    """
    vals = []
    for _, block in _as_blocks(H):
        vals.append(np.linalg.eigvals(block))
    spectrum = np.concatenate(vals)
    if isinstance(H, OperatorMatrix) and H.hermitian:
        worst = float(np.max(np.abs(spectrum.imag))) if len(spectrum) else 0.0
        scale = max(1.0, float(np.max(np.abs(spectrum))))
        if worst > hermitian_tol * scale:
            raise ValueError(
                f"hermitian-flagged operator produced imaginary parts up to {worst}"
            )
    order = np.lexsort((spectrum.imag, spectrum.real))
    return spectrum[order]


def eigvals_by_sector(op: OperatorMatrix) -> dict:
    """Eigenvalues per storage block, cached on the operator."""
    cache = getattr(op, "_eig_cache", None)
    if cache is None:
        cache = {}
        for key, (ix, block) in enumerate(_as_blocks(op)):
            cache[key] = np.linalg.eigvals(block)
        op._eig_cache = cache
    return cache


@dataclass
class RieszProjector:
    """Contour-quadrature spectral projector.

    Either ``matrix`` (dense) or the rank-factored pair ``right @ left^H``
    is populated.  ``trace_value`` estimates the enclosed spectral count;
    ``idempotency_residual`` is the measured quadrature defect |P^2 - P|
    (exact norm for dense storage, probe-block estimate for factored).
    """

    center: complex
    radius: float
    quad_points: int
    dim: int
    idempotency_residual: float
    trace_value: complex
    rank: int
    matrix: np.ndarray | None = None
    right: np.ndarray | None = None
    left: np.ndarray | None = None
    indices: np.ndarray | None = None  # embedding into a larger space

    def to_dense(self) -> np.ndarray:
        if self.matrix is not None:
            return self.matrix
        return self.right @ self.left.conj().T

    def apply(self, x: np.ndarray) -> np.ndarray:
        if self.matrix is not None:
            return self.matrix @ x
        return self.right @ (self.left.conj().T @ x)

    def apply_adjoint(self, y: np.ndarray) -> np.ndarray:
        if self.matrix is not None:
            return self.matrix.conj().T @ y
        return self.left @ (self.right.conj().T @ y)


def _contour_nodes(center: complex, radius: float, n_nodes: int):
    t = 2.0 * np.pi * np.arange(n_nodes) / n_nodes
    phases = np.exp(1j * t)
    return center + radius * phases, phases


def _check_annulus(
    eigs: np.ndarray, center: complex, radius: float, margin: float
) -> None:
    dist = np.abs(eigs - center)
    bad = (dist > radius * (1.0 - margin)) & (dist < radius * (1.0 + margin))
    if np.any(bad):
        worst = eigs[bad][np.argmin(np.abs(dist[bad] - radius))]
        raise ContourCollisionError(
            f"eigenvalue {worst} lies within {margin:.0%} of the contour "
            f"(center {center}, radius {radius})"
        )


def riesz_projection(
    H,
    center: complex,
    radius: float,
    quad_points: int = DEFAULT_QUAD_POINTS,
    eigs: np.ndarray | None = None,
    margin: float = 0.2,
    tol: float = IDEMPOTENCY_TOL,
    assume_clear: bool = False,
    adaptive: bool = True,
) -> RieszProjector:
    """Dense contour projector -(1/2 pi i) oint (H - z)^(-1) dz.

    The node count doubles until the idempotency residual drops below
    ``tol`` (cap MAX_QUAD_POINTS).  Unless ``assume_clear`` is set, the
    spectrum (given or computed) is checked against a collision annulus
    around the circle.
    """
    blocks = _as_blocks(H)
    dim = sum(b.shape[0] for _, b in blocks)
    if eigs is None and not assume_clear:
        eigs = eig_all(H)
    if eigs is not None and not assume_clear:
        _check_annulus(np.asarray(eigs), center, radius, margin)

    n_nodes = quad_points
    while True:
        total = np.zeros((dim, dim), dtype=complex)
        offset = 0
        for ix, block in blocks:
            nb = block.shape[0]
            acc = np.zeros((nb, nb), dtype=complex)
            nodes, phases = _contour_nodes(center, radius, n_nodes)
            ident = np.eye(nb, dtype=complex)
            for z, ph in zip(nodes, phases):
                lu = lu_factor(block - z * ident)
                acc += ph * lu_solve(lu, ident)
            acc *= -radius / n_nodes
            rows = ix if ix is not None else np.arange(nb) + offset
            total[np.ix_(rows, rows)] = acc
            offset += nb
        residual = float(np.linalg.norm(total @ total - total, 2))
        if not adaptive or residual < tol or n_nodes >= MAX_QUAD_POINTS:
            break
        n_nodes *= 2
    trace = complex(np.trace(total))
    rank = int(round(trace.real))
    return RieszProjector(
        center=center,
        radius=radius,
        quad_points=n_nodes,
        dim=dim,
        idempotency_residual=residual,
        trace_value=trace,
        rank=rank,
        matrix=total,
    )


def _contour_block_action(
    A: np.ndarray,
    center: complex,
    radius: float,
    n_nodes: int,
    X: np.ndarray,
    Y: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """(P @ X, P^H @ Y) by one LU per contour node."""
    n = A.shape[0]
    PX = np.zeros((n, X.shape[1]), dtype=complex)
    PHY = np.zeros((n, Y.shape[1]), dtype=complex)
    nodes, phases = _contour_nodes(center, radius, n_nodes)
    ident = np.eye(n, dtype=complex)
    for z, ph in zip(nodes, phases):
        lu = lu_factor(A - z * ident)
        PX += ph * lu_solve(lu, X)
        PHY += np.conj(ph) * lu_solve(lu, Y, trans=2)
    return (-radius / n_nodes) * PX, (-radius / n_nodes) * PHY


def riesz_rank_one(
    A: np.ndarray,
    center: complex,
    radius: float,
    quad_points: int = 16,
    probe: np.ndarray | None = None,
    left_probe: np.ndarray | None = None,
    n_random_probes: int = 3,
    tol: float = IDEMPOTENCY_TOL,
    seed: int = 7,
    indices: np.ndarray | None = None,
) -> RieszProjector:
    """Factored contour projector for an expected simple eigenvalue.

    Two quadrature passes over a dense block: the first recovers the range
    and corange from probe vectors, the second measures the idempotency
    defect and the enclosed trace on that subspace.  Nodes double until the
    defect passes ``tol``.
    """
    n = A.shape[0]
    rng = np.random.default_rng(seed)
    cols = [probe] if probe is not None else []
    cols += [rng.standard_normal(n) + 1j * rng.standard_normal(n)
             for _ in range(n_random_probes)]
    X = np.stack([c / np.linalg.norm(c) for c in cols], axis=1)
    ycols = [left_probe] if left_probe is not None else [X[:, 0]]
    ycols += [rng.standard_normal(n) + 1j * rng.standard_normal(n)]
    Y = np.stack([c / np.linalg.norm(c) for c in ycols], axis=1)

    n_nodes = quad_points
    while True:
        PX, PHY = _contour_block_action(A, center, radius, n_nodes, X, Y)
        u_basis, svals, _ = np.linalg.svd(PX, full_matrices=False)
        if svals[0] < 1e3 * np.finfo(float).eps:
            raise TrackingError(
                f"contour at {center} (radius {radius}) encloses no spectrum "
                "visible to the probes"
            )
        u = u_basis[:, 0]
        wl, _, _ = np.linalg.svd(PHY, full_matrices=False)
        w = wl[:, 0]
        sigma_ratio = float(svals[1] / svals[0]) if len(svals) > 1 else 0.0

        # second pass: trace on span{u, random} and the defect of P on its
        # own range (P fixes range vectors, so |P u - u| measures the
        # quadrature error in operator norm up to O(1) factors)
        extra = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        Q, _ = np.linalg.qr(np.stack([u, extra / np.linalg.norm(extra)], axis=1))
        PQ, _ = _contour_block_action(A, center, radius, n_nodes, Q, Y[:, :1])
        trace = complex(np.trace(Q.conj().T @ PQ))
        pu = PQ @ (Q.conj().T @ u)
        idem = float(np.linalg.norm(pu - u))
        if idem < tol or n_nodes >= MAX_QUAD_POINTS:
            break
        n_nodes *= 2

    pairing = np.vdot(u, w).conjugate()  # w^H u
    if abs(pairing) < 1e-8:
        raise DegeneracyError(
            f"left/right pairing nearly singular at contour center {center}"
        )
    left = w / np.conj(pairing)  # so that P = u @ left^H has P u = u
    proj = RieszProjector(
        center=center,
        radius=radius,
        quad_points=n_nodes,
        dim=n,
        idempotency_residual=idem,
        trace_value=trace,
        rank=int(round(trace.real)),
        right=u.reshape(-1, 1),
        left=left.reshape(-1, 1),
        indices=indices,
    )
    proj.sigma_ratio = sigma_ratio
    return proj


@dataclass
class SpectralRecord:
    """One tracked eigenvalue with its cross-validation data."""

    lam: complex
    gap: float
    projector_rank: int
    residual: float
    rayleigh: complex = 0.0
    method_disagreement: float = 0.0
    projector: RieszProjector | None = None
    right_vector: np.ndarray | None = None
    left_vector: np.ndarray | None = None
    extras: dict = field(default_factory=dict)


def track_eigenvalue(
    H,
    seed: complex,
    radius: float,
    probe: np.ndarray | None = None,
    left_probe: np.ndarray | None = None,
    quad_points: int = 16,
    agree_tol: float = 1e-8,
) -> SpectralRecord:
    """Locate the unique eigenvalue inside circle(seed, radius).

    Two independent routes must agree: the nearest candidate from the full
    eigenvalue list and the Rayleigh quotient built from the contour
    projector with the adjoint-projector left pairing.  Probe vectors are
    given in the global coordinates of H; for block-stored operators the
    tracked eigenvalue is located in its block and the returned vectors are
    embedded back into the full space.
    """
    blocks = _as_blocks(H)
    if isinstance(H, OperatorMatrix):
        cache = eigvals_by_sector(H)
    else:
        cache = {0: np.linalg.eigvals(blocks[0][1])}
    hits: list[tuple[int, int]] = []
    for key, (ix, _) in enumerate(blocks):
        inside = np.nonzero(np.abs(cache[key] - seed) <= radius)[0]
        hits.extend((key, int(i)) for i in inside)
    if len(hits) == 0:
        raise TrackingError(
            f"no eigenvalue inside circle(center {seed}, radius {radius})"
        )
    if len(hits) > 1:
        raise DegeneracyError(
            f"{len(hits)} eigenvalues inside circle(center {seed}, "
            f"radius {radius}); tracking needs exactly one"
        )
    key, i = hits[0]
    ix, A = blocks[key]
    lam = complex(cache[key][i])
    spectrum = np.concatenate([cache[k] for k in cache])
    dist_sorted = np.sort(np.abs(spectrum - lam))
    gap = float(dist_sorted[1]) if len(dist_sorted) > 1 else np.inf

    def localize(vec):
        if vec is None:
            return None
        vec = np.asarray(vec, dtype=complex)
        return vec[ix] if ix is not None else vec

    # contour centered on the candidate, radius limited by the gap
    proj_radius = min(radius, 0.4 * gap) if np.isfinite(gap) else radius
    proj = riesz_rank_one(
        A,
        center=lam,
        radius=proj_radius,
        quad_points=quad_points,
        probe=localize(probe),
        left_probe=localize(left_probe),
        indices=ix,
    )
    if proj.rank != 1 or abs(proj.trace_value - 1.0) > 0.1:
        raise DegeneracyError(
            f"projector at {lam} reports trace {proj.trace_value}, expected 1"
        )
    u = proj.right[:, 0]
    x0 = localize(probe)
    x0 = u if x0 is None else x0
    y0 = localize(left_probe)
    y0 = x0 if y0 is None else y0
    pv = proj.apply(np.asarray(x0, dtype=complex))
    pw = proj.apply_adjoint(np.asarray(y0, dtype=complex))
    denom = np.vdot(pw, pv)
    if abs(denom) < 1e-12 * np.linalg.norm(pv) * np.linalg.norm(pw):
        raise TrackingError("Rayleigh pairing degenerate for the given probes")
    rayleigh = complex(np.vdot(pw, A @ pv) / denom)
    disagreement = abs(rayleigh - lam)
    scale = max(1.0, abs(lam))
    if disagreement > agree_tol * scale:
        raise TrackingError(
            f"eigenvalue routes disagree: contour Rayleigh {rayleigh} vs "
            f"direct {lam} (|diff| = {disagreement:.3e})"
        )
    residual = float(np.linalg.norm(A @ u - lam * u))

    def globalize(vec):
        if ix is None:
            return vec
        out = np.zeros(H.dim if isinstance(H, OperatorMatrix) else len(vec), complex)
        out[ix] = vec
        return out

    return SpectralRecord(
        lam=lam,
        gap=gap,
        projector_rank=proj.rank,
        residual=residual,
        rayleigh=rayleigh,
        method_disagreement=disagreement,
        projector=proj,
        right_vector=globalize(u),
        left_vector=globalize(proj.left[:, 0]),
        extras={"block": key},
    )


def _block_resolvent_norm(A: np.ndarray, z: complex, tol: float = 1e-9) -> float:
    n = A.shape[0]
    shifted = A - z * np.eye(n, dtype=complex)
    if n <= DENSE_SVD_LIMIT:
        smin = float(np.linalg.svd(shifted, compute_uv=False)[-1])
        if smin <= n * np.finfo(float).eps * max(1.0, float(np.abs(shifted).max())):
            return np.inf
        return 1.0 / smin
    try:
        lu = lu_factor(shifted)
    except Exception:
        return np.inf
    op = LinearOperator(
        (n, n),
        matvec=lambda x: lu_solve(lu, x),
        rmatvec=lambda y: lu_solve(lu, y, trans=2),
        dtype=complex,
    )
    rng = np.random.default_rng(12345)
    v0 = rng.standard_normal(n)
    try:
        s = svds(op, k=1, which="LM", v0=v0, tol=tol, return_singular_vectors=False)
        return float(s[0])
    except Exception:
        # fall back to power iteration on (R^H R)
        x = v0.astype(complex)
        x /= np.linalg.norm(x)
        val = 0.0
        for _ in range(200):
            y = lu_solve(lu, x)
            y = lu_solve(lu, y, trans=2)
            nrm = np.linalg.norm(y)
            if nrm == 0.0:
                return 0.0
            x_new = y / nrm
            if np.linalg.norm(x_new - x) < tol:
                x = x_new
                val = nrm
                break
            x, val = x_new, nrm
        return float(np.sqrt(val))


def resolvent_norm(H, z: complex, eigs: np.ndarray | None = None) -> float:
    """Operator norm of (H - z)^(-1) via the smallest singular value.

    Returns inf when z sits on the spectrum to solver precision.
    """
    if eigs is not None and len(eigs):
        scale = max(1.0, float(np.max(np.abs(eigs))))
        if np.min(np.abs(np.asarray(eigs) - z)) < 1e-13 * scale:
            return np.inf
    return max(_block_resolvent_norm(block, z) for _, block in _as_blocks(H))


def resolvent_scan(H, z_grid, jobs: int = 1) -> list[tuple[complex, float]]:
    """Elementwise resolvent norms over a grid, order preserving."""
    z_list = list(z_grid)
    if jobs > 1 and len(z_list) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            norms = list(pool.map(lambda z: resolvent_norm(H, z), z_list))
    else:
        norms = [resolvent_norm(H, z) for z in z_list]
    return list(zip(z_list, norms))


def shifted_inverse_eigenvalue(
    A: np.ndarray,
    shift: complex,
    iters: int = 40,
    tol: float = 1e-13,
    v0: np.ndarray | None = None,
) -> tuple[complex, np.ndarray]:
    """Eigenvalue of A nearest to ``shift`` by shifted inverse iteration."""
    n = A.shape[0]
    lu = lu_factor(A - shift * np.eye(n, dtype=complex))
    rng = np.random.default_rng(2024)
    x = v0.astype(complex) if v0 is not None else (
        rng.standard_normal(n) + 1j * rng.standard_normal(n)
    )
    x /= np.linalg.norm(x)
    lam = shift
    for _ in range(iters):
        y = lu_solve(lu, x)
        y /= np.linalg.norm(y)
        lam_new = complex(np.vdot(y, A @ y))
        if abs(lam_new - lam) < tol * max(1.0, abs(lam_new)):
            x = y
            lam = lam_new
            break
        x, lam = y, lam_new
    return lam, x


def projected_resolvent_norm(
    A: np.ndarray, z: complex, proj: RieszProjector, tol: float = 1e-8
) -> float:
    """Norm of (A - z)^(-1) (1 - P) for a factored rank-one projector."""
    n = A.shape[0]
    shifted = A - z * np.eye(n, dtype=complex)
    if n <= DENSE_SVD_LIMIT:
        comp = np.eye(n, dtype=complex) - proj.to_dense()
        return float(
            np.linalg.svd(np.linalg.solve(shifted, comp), compute_uv=False)[0]
        )
    lu = lu_factor(shifted)

    def matvec(x):
        x = np.asarray(x, dtype=complex).reshape(-1)
        return lu_solve(lu, x - proj.apply(x))

    def rmatvec(y):
        y = np.asarray(y, dtype=complex).reshape(-1)
        s = lu_solve(lu, y, trans=2)
        return s - proj.apply_adjoint(s)

    op = LinearOperator((n, n), matvec=matvec, rmatvec=rmatvec, dtype=complex)
    rng = np.random.default_rng(54321)
    try:
        s = svds(
            op, k=1, which="LM", v0=rng.standard_normal(n), tol=tol,
            return_singular_vectors=False,
        )
        return float(s[0])
    except Exception:
        x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        x /= np.linalg.norm(x)
        val = 0.0
        for _ in range(300):
            y = rmatvec(matvec(x))
            nrm = np.linalg.norm(y)
            if nrm == 0.0:
                return 0.0
            x_new = y / nrm
            delta = np.linalg.norm(x_new - x)
            x, val = x_new, nrm
            if delta < tol:
                break
        return float(np.sqrt(val))


def rank_two_difference_norm(
    u1: np.ndarray, l1: np.ndarray, u2: np.ndarray, l2: np.ndarray
) -> float:
    """Spectral norm of u1 l1^H - u2 l2^H without forming the matrices."""
    A = np.stack([u1, -u2], axis=1)
    B = np.stack([l1, l2], axis=1)
    qa, ra = np.linalg.qr(A)
    qb, rb = np.linalg.qr(B)
    core = ra @ rb.conj().T
    return float(np.linalg.svd(core, compute_uv=False)[0])
