"""Square-summability counts, lower-bound certificates and Friedrichs boundary data.

The deficiency count d is detected, never proven: Gram matrices of the
fundamental solution are accumulated over a horizon ladder (with scale
bookkeeping so growth beyond double range only shifts a log offset), and
eigen-directions whose growth between horizons stays below a threshold are
counted as square summable.  The boundary data (Theta, Upsilon, M, L) is then
assembled from the recessive solution and a complement of square-summable
solutions; the pivoted index selection makes the leading block of Upsilon the
canonical skew identity.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .errors import (
    NotRecessive,
    RankDeficientComplement,
    RangeMismatch,
    SubmatrixCheckFailed,
    SympextError,
)
from .propagation import MatrixSolution, RelationPair, semi_norm_sq
from .recessive import RecessiveResult, recessive_certificate, recessive_solution
from .structure import nonoscillation_scan
from .system import SymplecticSystem, check_atkinson
from .tolerances import DEFAULT, Tolerances

_RESCALE_TRIGGER = 1e120


@dataclasses.dataclass
class SquareSummabilityReport:
    lam: complex
    horizons: list[int]
    log10_eigs: list[np.ndarray]     # ascending, one array per horizon
    pair_counts: list[int]           # bounded-direction count per horizon pair
    d_estimate: int
    confidence: str                  # "Stable" | "Marginal"
    warnings: list[str]


_SPLIT_RATIO = 1e-6  # forward eigenvalues this far below the top are re-examined backward


def _log10_partial_sum(sys, hist, sigmas, c, K) -> float:
    """log10 of sum_{k<=K} |W_k^{1/2} (z_k)_x|^2 for z_k = exp(sigma_k) hist_k c.

    Every term is nonnegative, so the log-scale summation carries no
    cancellation regardless of the dynamic range.
    """
    n = hist.shape[1] // 2
    logs = np.full(K + 1, -np.inf)
    for k in range(K + 1):
        x = hist[k][:n, :] @ c
        contrib = float(np.real(x.conj() @ sys.weight(k) @ x))
        if contrib > 0:
            logs[k] = 2.0 * sigmas[k] + math.log(contrib)
    peak = float(np.max(logs))
    if not np.isfinite(peak):
        return -300.0
    total = peak + math.log(float(np.sum(np.exp(logs - peak))))
    return total / math.log(10.0)


def _scaled_sweep(sys, lam, top, backward):
    """Propagate a full basis with scalar rescale bookkeeping.

    Forward: identity at 0, up to ``top``.  Backward: identity at ``top``,
    down to 0.  Returns the mantissa history, the per-step natural-log scales
    and the scaled Psi-Gram snapshots requested by the caller via history.
    """
    dim = 2 * sys.n
    hist = np.zeros((top + 1, dim, dim), dtype=complex)
    sigmas = np.zeros(top + 1)
    basis = np.eye(dim, dtype=complex)
    log_scale = 0.0
    steps = range(top, 0, -1) if backward else range(top + 1)
    if backward:
        hist[top] = basis
        for k in steps:
            basis = sys.s_lambda(k - 1, lam) @ basis
            peak = np.max(np.abs(basis))
            if peak > _RESCALE_TRIGGER:
                basis /= peak
                log_scale += math.log(peak)
            hist[k - 1] = basis
            sigmas[k - 1] = log_scale
    else:
        for k in steps:
            hist[k] = basis
            sigmas[k] = log_scale
            if k < top:
                basis = sys.s_lambda_inv(k, lam) @ basis
                peak = np.max(np.abs(basis))
                if peak > _RESCALE_TRIGGER:
                    basis /= peak
                    log_scale += math.log(peak)
    return hist, sigmas


def _scaled_gram(sys, hist, sigmas, K):
    """Psi-Gram of the stored basis over [0, K] as (mantissa, log-offset)."""
    dim = hist.shape[1]
    n = dim // 2
    gram = np.zeros((dim, dim), dtype=complex)
    offset = 2.0 * float(np.max(sigmas[: K + 1]))
    for k in range(K + 1):
        x = hist[k][:n, :]
        gram += math.exp(2.0 * sigmas[k] - offset) * (x.conj().T @ sys.weight(k) @ x)
    return 0.5 * (gram + gram.conj().T), offset


def _direction_analysis(sys, lam, horizons, tol):
    """Per-horizon log10 Psi-energies of a direction basis, dichotomy-aware.

    The forward Gram is accurate for its dominant cluster but its small
    eigenvalues ride a noise floor (per-step rounding injects the growing
    mode at relative machine epsilon).  Directions more than _SPLIT_RATIO
    below the top are therefore re-derived from a backward-anchored basis,
    where forward-decaying solutions are the numerically stable ones, and
    their partial sums are evaluated directly in log scale.
    """
    dim = 2 * sys.n
    top = horizons[-1]
    fwd_hist, fwd_sig = _scaled_sweep(sys, lam, top, backward=False)
    fwd = {}
    for K in horizons:
        gram, offset = _scaled_gram(sys, fwd_hist, fwd_sig, K)
        eigs, vecs = np.linalg.eigh(gram)
        fwd[K] = (eigs, vecs, offset)
    eigs_top, vecs_top, _ = fwd[top]
    emax = max(float(eigs_top[-1]), 1e-300)
    suspects = int(np.sum(eigs_top < emax * _SPLIT_RATIO))

    candidate_cols = np.zeros((dim, 0), dtype=complex)
    candidate_sums = {K: np.zeros(0) for K in horizons}
    if suspects:
        bwd_hist, bwd_sig = _scaled_sweep(sys, lam, top, backward=True)
        bgram, _ = _scaled_gram(sys, bwd_hist, bwd_sig, top)
        _, bvecs = np.linalg.eigh(bgram)
        cand = bvecs[:, -suspects:]  # backward-dominant = forward-decaying/slow
        for K in horizons:
            sums = np.array([_log10_partial_sum(sys, bwd_hist, bwd_sig, cand[:, j], K) for j in range(suspects)])
            candidate_sums[K] = sums
        cols = []
        for j in range(suspects):
            v0 = bwd_hist[0] @ cand[:, j]
            cols.append(v0 / max(np.linalg.norm(v0), 1e-300))
        candidate_cols = np.stack(cols, axis=1)

    display = []
    fwd_group = []
    for K in horizons:
        eigs, _, offset = fwd[K]
        keep = np.maximum(eigs[suspects:], 1e-300)
        fwd_logs = np.log10(keep) + offset / math.log(10.0)
        fwd_group.append(fwd_logs)
        display.append(np.sort(np.concatenate([fwd_logs, candidate_sums[K]])))

    pair_counts = []
    for i in range(len(horizons) - 1):
        budget = math.log10(tol.growth_ratio) * math.log2(horizons[i + 1] / horizons[i])
        count = int(np.sum(fwd_group[i + 1] - fwd_group[i] <= budget))
        count += int(np.sum(candidate_sums[horizons[i + 1]] - candidate_sums[horizons[i]] <= budget))
        pair_counts.append(count)

    bounded_vectors = np.concatenate(
        [candidate_cols, vecs_top[:, suspects:]], axis=1
    )  # candidates first, then forward directions ascending
    return display, pair_counts, bounded_vectors, suspects


def count_square_summable(
    sys: SymplecticSystem,
    lam: complex,
    horizons,
    tol: Tolerances = DEFAULT,
) -> SquareSummabilityReport:
    """Estimate the number of linearly independent square-summable solutions.

    For each horizon K the Gram G_K = sum_{k<=K} Phi_k^* Psi_k Phi_k is
    accumulated with scale bookkeeping.  A direction counts as bounded when
    its index-matched eigenvalue grows by less than ``growth_ratio`` per
    horizon doubling; the estimate is the count at the last pair and the
    confidence is Stable when the last two pairs agree.
    """
    horizons = sorted(set(int(h) for h in horizons))
    if len(horizons) < 2 or horizons[0] < 1:
        raise RangeMismatch("need at least two increasing positive horizons")
    log10_eigs, pair_counts, _, _ = _direction_analysis(sys, lam, horizons, tol)
    warnings: list[str] = []
    d_estimate = pair_counts[-1]
    confidence = "Stable" if len(pair_counts) >= 2 and pair_counts[-1] == pair_counts[-2] else "Marginal"
    if abs(np.imag(lam)) > 0 and d_estimate < sys.n:
        warnings.append(f"d={d_estimate} < n={sys.n} at nonreal lambda contradicts theory; treat as numerical")
    return SquareSummabilityReport(
        lam=complex(lam),
        horizons=horizons,
        log10_eigs=log10_eigs,
        pair_counts=pair_counts,
        d_estimate=d_estimate,
        confidence=confidence,
        warnings=warnings,
    )


@dataclasses.dataclass
class Classification:
    kind: str          # "LimitPoint" | "LimitCircle" | "Intermediate"
    d: int

    def __str__(self):
        return self.kind if self.kind != "Intermediate" else f"Intermediate({self.d})"


def classify(sys: SymplecticSystem, report: SquareSummabilityReport) -> Classification:
    """LimitPoint iff d = n, LimitCircle iff d = 2n, Intermediate(d) otherwise."""
    if report.confidence != "Stable":
        raise SympextError("classification requires a Stable square-summability report")
    d = report.d_estimate
    if d == sys.n:
        return Classification("LimitPoint", d)
    if d == 2 * sys.n:
        return Classification("LimitCircle", d)
    return Classification("Intermediate", d)


@dataclasses.dataclass
class LowerBoundCertificate:
    kind: str            # "CertifiedAtLeast" | "Inconclusive"
    nu: float
    horizon: int
    reason: str

    @property
    def certified(self) -> bool:
        return self.kind == "CertifiedAtLeast"


def lower_bound_certificate(
    sys: SymplecticSystem,
    nu: float,
    K: int,
    atkinson_window: tuple[int, int] | None = None,
    tol: Tolerances = DEFAULT,
) -> LowerBoundCertificate:
    """Finite-horizon evidence that the minimal relation is bounded below by nu.

    Certifies iff the definiteness condition holds on the window and the
    disconjugacy onset within [0, K] is M = 0; a finite horizon can never
    certify disconjugacy on the whole half-line, so the verdict is flagged as
    evidence, not proof.
    """
    window = atkinson_window or (0, 2 * sys.n)
    holds, _ = check_atkinson(sys, nu, window, tol)
    if not holds:
        return LowerBoundCertificate("Inconclusive", nu, K, f"Atkinson condition fails on window {window}")
    scan = nonoscillation_scan(sys, nu, K, tol)
    if scan.onset != 0:
        return LowerBoundCertificate(
            "Inconclusive", nu, K, f"disconjugacy onset {scan.onset} within horizon {K} is not 0"
        )
    return LowerBoundCertificate("CertifiedAtLeast", nu, K, f"disconjugate on [0, {K}] and definite on {window}")


@dataclasses.dataclass
class FriedrichsData:
    """Boundary data of the Friedrichs restriction of the maximal relation."""

    nu: float
    lam: float
    d: int
    m: int
    theta: MatrixSolution          # 2n x d solution columns
    upsilon: np.ndarray            # d x d, Theta_m^* J Theta_m
    indices: list[int]             # i_1..i_{d-n}, 1-based row picks
    M: np.ndarray                  # d x 2n
    L: np.ndarray                  # d x 2(d-n)
    recessive: RecessiveResult

    def boundary_columns(self) -> list[int]:
        """Theta columns entering the limit conditions (the recessive picks)."""
        return list(range(len(self.indices)))

    def invariant_residuals(self) -> dict:
        d, n = self.d, self.theta.n
        j2n = np.zeros((2 * n, 2 * n), dtype=complex)
        j2n[:n, n:] = np.eye(n)
        j2n[n:, :n] = -np.eye(n)
        r = d - n
        ups_sub = self.upsilon[: 2 * r, : 2 * r]
        canonical = np.zeros((2 * r, 2 * r), dtype=complex)
        canonical[:r, r:] = np.eye(r)
        canonical[r:, :r] = -np.eye(r)
        ml = np.hstack([self.M, self.L])
        sv = np.linalg.svd(ml, compute_uv=False)
        rank = int(np.sum(sv > DEFAULT.rank * sv[0])) if sv.size and sv[0] > 0 else 0
        identity = self.M @ j2n @ self.M.conj().T - self.L @ ups_sub @ self.L.conj().T
        return {
            "rank_ML": rank,
            "ml_identity": float(np.linalg.norm(identity)),
            "upsilon_submatrix": float(np.linalg.norm(ups_sub - canonical)),
        }

    def to_json_dict(self) -> dict:
        return {
            "nu": self.nu,
            "lambda": [float(np.real(self.lam)), float(np.imag(self.lam))],
            "d": self.d,
            "m": self.m,
            "indices": [int(i) for i in self.indices],
            "upsilon": _matrix_json(self.upsilon),
            "M": _matrix_json(self.M),
            "L": _matrix_json(self.L),
            "theta_0": _matrix_json(self.theta.values[0]),
            "theta_m": _matrix_json(self.theta.values[self.m]),
        }


def _matrix_json(m: np.ndarray) -> list:
    m = np.atleast_2d(np.asarray(m, dtype=complex))
    return [[[float(e.real), float(e.imag)] for e in row] for row in m]


def select_pivot_rows(u_hat: np.ndarray, count: int, tol: Tolerances = DEFAULT) -> tuple[list[int], np.ndarray]:
    """Pick ``count`` rows of u_hat forming a well-conditioned square block.

    Returns 0-based row indices (ascending) and the right factor T with
    (selected rows of u_hat @ T) = I.  Raises RankDeficientComplement when no
    such block exists at the rank tolerance.
    """
    u_hat = np.atleast_2d(np.asarray(u_hat, dtype=complex))
    if count == 0:
        return [], np.zeros((0, 0), dtype=complex)
    piv = _pivot_order(u_hat.conj().T)  # column pivoting on the transpose ranks rows
    sel = sorted(int(p) for p in piv[:count])
    block = u_hat[sel, :]
    sv = np.linalg.svd(block, compute_uv=False)
    if sv.size < count or sv[-1] <= tol.rank * max(sv[0], 1e-300):
        raise RankDeficientComplement(f"complement bottom block has rank < {count}")
    return sel, np.linalg.inv(block)


def _pivot_order(a: np.ndarray) -> list[int]:
    """Column order of a greedy pivoted Gram-Schmidt sweep (small sizes only)."""
    a = a.copy()
    m, n = a.shape
    piv = list(range(n))
    q = np.zeros((m, 0), dtype=complex)
    for step in range(min(m, n)):
        norms = np.linalg.norm(a[:, step:], axis=0)
        best = step + int(np.argmax(norms))
        a[:, [step, best]] = a[:, [best, step]]
        piv[step], piv[best] = piv[best], piv[step]
        col = a[:, step].copy()
        if q.shape[1]:
            col -= q @ (q.conj().T @ col)
        norm = np.linalg.norm(col)
        if norm > 0:
            q = np.hstack([q, (col / norm)[:, None]])
            for j in range(step + 1, n):
                a[:, j] -= q[:, -1] * (q[:, -1].conj() @ a[:, j])
    return piv


def assemble_theta(
    sys: SymplecticSystem,
    nu: float,
    lam: float,
    d: int,
    m: int | None = None,
    anchors=None,
    tol: Tolerances = DEFAULT,
) -> FriedrichsData:
    """Build the d boundary-condition data of the Friedrichs restriction.

    Requires lam strictly below the disconjugacy anchor nu.  The recessive
    solution at lam supplies n square-summable columns; when d > n the
    complement is drawn from the bounded Gram eigen-directions, shifted so its
    top block vanishes at m, and rescaled so the pivoted rows of its bottom
    block form an identity.  The canonical M = [[I,0],[0,0]] and
    L = [[0,0],[I,0]] then satisfy the self-adjointness rank and kernel
    identities by construction.
    """
    if not (np.imag(lam) == 0 and np.real(lam) < nu):
        raise RangeMismatch(f"assembly needs real lambda < nu, got lambda={lam}, nu={nu}")
    lam = float(np.real(lam))
    n = sys.n
    if not (n <= d <= 2 * n):
        raise RangeMismatch(f"d={d} outside [n, 2n] = [{n}, {2*n}]")
    anchors = sorted(set(int(a) for a in anchors)) if anchors else [40, 80, 160]
    top = anchors[-1]

    rec = recessive_solution(sys, lam, anchors, m=0, tol=tol)
    basis = rec.basis
    if m is None:
        m = _normalization_point(basis, tol)
    if m != rec.m:
        xm = basis.X[m]
        try:
            basis = basis.right_multiplied(np.linalg.inv(xm))
        except np.linalg.LinAlgError as exc:
            raise NotRecessive(f"X_m singular at the requested normalization point m={m}") from exc
        rec = dataclasses.replace(rec, basis=basis, m=m)
    cert_ok, _ = recessive_certificate(sys, rec, min(top, basis.horizon), tol)
    if not cert_ok:
        raise NotRecessive(f"recessive certificate failed at lambda={lam}")

    if d > n:
        complement = _summable_complement(sys, lam, d, m, basis, top, tol)
        u_hat_m = complement.values[m, n:, :]
        sel, transform = select_pivot_rows(u_hat_m, d - n, tol)
        complement = complement.right_multiplied(transform)
        indices = [s + 1 for s in sel]
    else:
        complement = MatrixSolution(lam, np.zeros((basis.values.shape[0], 2 * n, 0), dtype=complex))
        sel, indices = [], []

    remaining = [i for i in range(n) if i not in sel]
    theta_vals = np.concatenate(
        [basis.values[:, :, sel], complement.values, basis.values[:, :, remaining]], axis=2
    )
    theta = MatrixSolution(lam, theta_vals)

    j = sys.j
    upsilon_m = theta.values[m].conj().T @ j @ theta.values[m]
    upsilon_0 = theta.values[0].conj().T @ j @ theta.values[0]
    wronskian_drift = float(np.linalg.norm(upsilon_m - upsilon_0))

    r = d - n
    canonical = np.zeros((2 * r, 2 * r), dtype=complex)
    canonical[:r, r:] = np.eye(r)
    canonical[r:, :r] = -np.eye(r)
    sub_defect = float(np.linalg.norm(upsilon_m[: 2 * r, : 2 * r] - canonical))
    scale = 1.0 + float(np.linalg.norm(theta.values[m])) ** 2
    if sub_defect > tol.res * scale or wronskian_drift > tol.res * scale * (basis.horizon + 1):
        raise SubmatrixCheckFailed(
            f"Upsilon leading block defect {sub_defect:.3e}, Wronskian drift {wronskian_drift:.3e}"
        )

    m_mat = np.zeros((d, 2 * n), dtype=complex)
    m_mat[:n, :n] = np.eye(n)
    l_mat = np.zeros((d, 2 * r), dtype=complex)
    l_mat[n:, :r] = np.eye(r)

    return FriedrichsData(
        nu=nu,
        lam=lam,
        d=d,
        m=m,
        theta=theta,
        upsilon=upsilon_m,
        indices=indices,
        M=m_mat,
        L=l_mat,
        recessive=rec,
    )


def _normalization_point(basis: MatrixSolution, tol: Tolerances) -> int:
    """Smallest k with invertible X_k and condition number within bounds."""
    for k in range(basis.horizon + 1):
        x = basis.X[k]
        sv = np.linalg.svd(x, compute_uv=False)
        if sv[-1] > 0 and sv[0] / sv[-1] <= tol.cond_max:
            return k
    raise NotRecessive("no normalization point with acceptable condition number")


def _summable_complement(sys, lam, d, m, basis, top, tol) -> MatrixSolution:
    """d-n square-summable solutions independent of the recessive columns.

    Bounded Gram eigen-directions span the square-summable initial values;
    the directions least explained by the recessive columns are selected,
    propagated directly (they are bounded, so no rescaling is needed), and
    the shift Z - Ztilde X_m kills their top block at m.
    """
    from .propagation import propagate_forward

    n = sys.n
    halves = [max(top // 2, 2), top]
    _, pair_counts, vectors, _ = _direction_analysis(sys, lam, halves, tol)
    bounded = pair_counts[-1]
    if bounded < d:
        raise RankDeficientComplement(f"only {bounded} bounded directions at lambda={lam}, need d={d}")
    candidates = vectors[:, :d]  # backward-derived slow directions lead the ordering
    # orthogonalize against the recessive initial values, keep the d-n strongest residuals
    q, _ = np.linalg.qr(basis.values[0])
    residual = candidates - q @ (q.conj().T @ candidates)
    order = np.argsort(-np.linalg.norm(residual, axis=0))
    picks = candidates[:, order[: d - n]]
    comp = propagate_forward(sys, picks, lam, basis.horizon)
    shift = comp.values[m, :n, :]  # top block at m
    shifted = comp.values - np.einsum("kij,jm->kim", basis.values, shift)
    return MatrixSolution(lam, shifted)


def boundary_form_limit(z, theta, K: int, T: int, tol: Tolerances = DEFAULT) -> tuple[complex, bool]:
    """Finite-horizon surrogate of the limit pairing lim theta_k^* J z_k.

    Value is the pairing at K; convergence demands the oscillation over the
    tail window [K-T, K] to stay below the limit tolerance.
    """
    zv = z.values if hasattr(z, "values") else np.asarray(z, dtype=complex)
    tv = theta.values if hasattr(theta, "values") else np.asarray(theta, dtype=complex)
    if K >= zv.shape[0] or K >= tv.shape[0] or T < 0 or T > K:
        raise RangeMismatch(f"tail window [{K - T}, {K}] outside truncation")
    n = zv.shape[1] // 2
    j = np.zeros((2 * n, 2 * n), dtype=complex)
    j[:n, n:] = np.eye(n)
    j[n:, :n] = -np.eye(n)
    samples = np.array([tv[k].conj() @ j @ zv[k] for k in range(K - T, K + 1)])
    value = complex(samples[-1])
    oscillation = float(np.max(np.abs(samples - value)))
    converged = oscillation <= tol.lim * max(1.0, abs(value))
    return value, converged


@dataclasses.dataclass
class MembershipVerdict:
    member: bool
    conditions: dict

    def failed_conditions(self) -> list[str]:
        return [name for name, c in self.conditions.items() if not c["ok"]]


def friedrichs_membership(
    sys: SymplecticSystem,
    pair: RelationPair,
    data: FriedrichsData,
    K: int | None = None,
    tol: Tolerances = DEFAULT,
) -> MembershipVerdict:
    """Diagnostic membership test for the Friedrichs restriction.

    Conditions, reported separately: (a) per-step maximal-relation residual,
    (b) relative Psi-norm tails of z and f on the last quarter window,
    (c) x_0 = 0, (d) vanishing boundary forms against the selected recessive
    columns (empty in the limit point case).
    """
    K = pair.horizon if K is None else min(K, pair.horizon)
    T = max(K // 4, 1)
    n = sys.n
    conditions: dict = {}

    res = pair.residual_profile(sys)[: K + 1]
    scale = 1.0 + np.linalg.norm(pair.z, axis=1)[: K + 1]
    worst = float(np.max(res / scale))
    conditions["residual"] = {"ok": worst <= tol.res, "value": worst, "tolerance": tol.res}

    z_total = semi_norm_sq(sys, pair.z, 0, K)
    z_tail = semi_norm_sq(sys, pair.z, K - T, K)
    f_total = semi_norm_sq(sys, pair.f, 0, K)
    f_tail = semi_norm_sq(sys, pair.f, K - T, K)
    z_frac = z_tail / max(z_total, 1e-300)
    f_frac = f_tail / max(f_total, 1e-300)
    conditions["z_tail"] = {"ok": z_total == 0.0 or z_frac <= tol.tail, "value": z_frac, "tolerance": tol.tail}
    conditions["f_tail"] = {"ok": f_total == 0.0 or f_frac <= tol.tail, "value": f_frac, "tolerance": tol.tail}

    x0 = float(np.linalg.norm(pair.z[0, :n]))
    x0_scale = max(1.0, float(np.max(np.abs(pair.z))))
    conditions["x0"] = {"ok": x0 <= tol.res * x0_scale, "value": x0, "tolerance": tol.res * x0_scale}

    boundary_ok = True
    forms = []
    horizon = min(K, data.theta.horizon)
    for idx, col in enumerate(data.boundary_columns()):
        theta_col = data.theta.values[:, :, col]
        value, converged = boundary_form_limit(pair.z, theta_col, horizon, max(horizon // 4, 1), tol)
        ok = converged and abs(value) <= tol.lim * max(1.0, float(np.max(np.abs(pair.z[:horizon + 1]))))
        boundary_ok = boundary_ok and ok
        forms.append({"index": data.indices[idx], "value": [value.real, value.imag], "converged": converged, "ok": ok})
    conditions["boundary_forms"] = {"ok": boundary_ok, "value": forms, "tolerance": tol.lim}

    member = all(c["ok"] for c in conditions.values())
    return MembershipVerdict(member=member, conditions=conditions)
