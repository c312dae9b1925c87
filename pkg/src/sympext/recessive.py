"""Recessive and dominant solutions via anchored principal solutions.

The principal solution at anchor N (terminal value (0; -I) at N+1),
renormalized so its X-block is the identity at the normalization point m,
approaches the recessive solution as N grows.  In the geometrically
dominated regime successive anchors agree to machine precision.  Near the
critical spectral value the approach is only algebraic, so a model-based
correction is applied: the pairwise Wronskians of the renormalized anchors
equal exact differences of inverse accumulation matrices, and fitting their
decay law recovers the missing absolute term.  The corrected candidate is an
exact solution by construction (it is a constant-coefficient combination of
solutions), so every downstream structural identity is preserved.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .errors import (
    NotConverged,
    NotControllable,
    NotRecessive,
    Oscillatory,
    RangeMismatch,
    SingularX,
)
from .propagation import MatrixSolution, VectorSolution, step_forward
from .structure import (
    controllability_check,
    is_conjoined_basis,
    nonoscillation_scan,
    principal_solution,
)
from .system import SymplecticSystem
from .tolerances import DEFAULT, Tolerances


def principal_at(sys: SymplecticSystem, nu: float, N: int, tol: Tolerances = DEFAULT) -> MatrixSolution:
    """Principal solution anchored at N, checked to be a conjoined basis."""
    z = principal_solution(sys, nu, N)
    if not is_conjoined_basis(sys, z, tol):
        raise NotRecessive(f"principal solution at N={N} is not a conjoined basis")
    return z


def _solve_x(x: np.ndarray, j: int) -> np.ndarray:
    try:
        inv = np.linalg.inv(x)
    except np.linalg.LinAlgError as exc:
        raise SingularX(j) from exc
    if not np.all(np.isfinite(inv.view(float))):
        raise SingularX(j)
    return inv


def lambda_accum(sys: SymplecticSystem, z: MatrixSolution, k0: int, k: int) -> np.ndarray:
    """Accumulation matrix sum_{j=k0}^{k-1} -X_j^{-1} B_j X_{j+1}^{-*}.

    Empty sum for k = k0.  Each summand is Hermitian for a conjoined basis
    with invertible X, and positive semidefinite once the recessive
    certificate holds.
    """
    if k < k0 or k > z.horizon + 1:
        raise RangeMismatch(f"need k0 <= k <= K+1, got k0={k0}, k={k}")
    n = z.n
    total = np.zeros((n, n), dtype=complex)
    if k == k0:
        return total
    inv_next = _solve_x(z.X[k0], k0)
    for j in range(k0, k):
        inv_j = inv_next
        inv_next = _solve_x(z.X[j + 1], j + 1)
        b = sys.blocks(j)[1]
        total -= inv_j @ b @ inv_next.conj().T
    return total


def lambda_min_trace(sys: SymplecticSystem, z: MatrixSolution, k0: int, K: int) -> np.ndarray:
    """lambda_min of the running accumulation matrix for k = k0..K."""
    if K > z.horizon + 1:
        raise RangeMismatch(f"K={K} exceeds stored truncation")
    n = z.n
    trace = np.zeros(K - k0 + 1)
    total = np.zeros((n, n), dtype=complex)
    inv_next = _solve_x(z.X[k0], k0)
    for k in range(k0, K + 1):
        trace[k - k0] = float(np.min(np.linalg.eigvalsh(0.5 * (total + total.conj().T))))
        if k == K:
            break
        inv_j = inv_next
        inv_next = _solve_x(z.X[k + 1], k + 1)
        total -= inv_j @ sys.blocks(k)[1] @ inv_next.conj().T
    return trace


@dataclasses.dataclass
class RecessiveResult:
    nu: float
    m: int
    anchors: list[int]
    basis: MatrixSolution
    converged: bool
    refined: bool
    history: list[dict]
    diagnostics: dict


def _renormalized_candidate(sys, nu, N, m, tol) -> MatrixSolution:
    z = principal_at(sys, nu, N, tol)
    xm = z.X[m]
    return z.right_multiplied(_solve_x(xm, m))


def _fit_decay_exponent(t: np.ndarray, ratio: float) -> float | None:
    """Solve (t1^-p - t2^-p)/(t2^-p - t3^-p) = ratio by bisection."""

    def g(p):
        num = t[0] ** -p - t[1] ** -p
        den = t[1] ** -p - t[2] ** -p
        return num / den

    lo, hi = 1e-3, 60.0
    glo, ghi = g(lo) - ratio, g(hi) - ratio
    if not np.isfinite(glo) or not np.isfinite(ghi) or glo * ghi > 0:
        return None
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        gm = g(mid) - ratio
        if not np.isfinite(gm):
            return None
        if glo * gm <= 0:
            hi = mid
        else:
            lo, glo = mid, gm
    return 0.5 * (lo + hi)


def _refine(sys, cands, anchors, m, tol):
    """Wronskian-model correction from the last three anchors.

    Writing each renormalized candidate as R - D P_i with P_i the inverse
    accumulation at anchor i, the pairwise Wronskians C_i^* J C_j equal
    P_i - P_j exactly.  A power-law fit P(t) = c t^-p on the two measured
    differences supplies the absolute P at the last anchors, and the
    corrected combination cancels the D-component.  Returns None when the
    measured Wronskians do not look like a decaying positive ladder.
    """
    c1, c2, c3 = cands[-3], cands[-2], cands[-1]
    t = np.array([N + 1 - m for N in anchors[-3:]], dtype=float)
    j = sys.j
    om12 = c1.values[m].conj().T @ j @ c2.values[m]
    om23 = c2.values[m].conj().T @ j @ c3.values[m]
    scale = max(np.linalg.norm(c3.values[m]) ** 2, 1.0)
    if np.linalg.norm(om23) <= tol.rec * scale:
        return None  # already at the noise floor; nothing to correct
    om12h = 0.5 * (om12 + om12.conj().T)
    om23h = 0.5 * (om23 + om23.conj().T)
    herm_defect = max(np.linalg.norm(om12 - om12h), np.linalg.norm(om23 - om23h))
    eig12 = np.min(np.linalg.eigvalsh(om12h))
    eig23 = np.min(np.linalg.eigvalsh(om23h))
    if eig12 <= 0 or eig23 <= 0 or herm_defect > 1e-6 * scale:
        return None  # ladder not positive-decreasing; model does not apply
    tr12 = float(np.real(np.trace(om12)))
    tr23 = float(np.real(np.trace(om23)))
    p = _fit_decay_exponent(t, tr12 / tr23)
    if p is None:
        return None
    denom = t[1] ** -p - t[2] ** -p
    c_hat = om23h / denom
    p3_hat = c_hat * t[2] ** -p
    p2_hat = c_hat * t[1] ** -p
    model_residual = float(np.linalg.norm(om12h - (c_hat * t[0] ** -p - p2_hat)) / max(np.linalg.norm(om12h), 1e-300))
    theta = np.linalg.solve(om23h, p3_hat)
    common = min(c2.values.shape[0], c3.values.shape[0])
    corrected = c3.values[:common] + (c3.values[:common] - c2.values[:common]) @ theta
    correction_size = float(np.linalg.norm((c3.values[:common] - c2.values[:common]) @ theta))
    step_size = float(np.linalg.norm(c3.values[:common] - c2.values[:common]))
    if correction_size > 2.0 * step_size + tol.rec:
        return None  # correction larger than the raw anchor step: distrust the model
    # extend the corrected combination forward to the full horizon
    full = np.zeros_like(c3.values)
    full[:common] = corrected
    nu = c3.lam
    for k in range(common - 1, c3.values.shape[0] - 1):
        full[k + 1] = step_forward(sys, full[k], k, nu)
    info = {
        "exponent": p,
        "model_residual": model_residual,
        "correction_size": correction_size,
        "raw_step_size": step_size,
        "wronskian_hermitian_defect": float(herm_defect),
    }
    return MatrixSolution(nu, full), info


def recessive_solution(
    sys: SymplecticSystem,
    nu: float,
    anchors,
    m: int = 0,
    tol: Tolerances = DEFAULT,
    scan_horizon: int | None = None,
) -> RecessiveResult:
    """Recessive solution candidate from an anchor ladder, normalized X_m = I.

    The existence hypotheses are pre-checked up to the largest anchor (the
    scan horizon can be lowered for speed).  Raises Oscillatory /
    NotControllable when they fail and NotConverged (with history) when the
    anchors neither agree raw nor admit a trustworthy decay-model correction.
    """
    anchors = sorted(set(int(a) for a in anchors))
    if not anchors:
        raise NotConverged("empty anchor list")
    top = anchors[-1]
    if m < 0 or m > anchors[0]:
        raise RangeMismatch(f"normalization point m={m} must lie in [0, {anchors[0]}]")

    scan = nonoscillation_scan(sys, nu, scan_horizon or top, tol)
    if not scan.found:
        raise Oscillatory(f"no disconjugacy onset within horizon {scan.horizon} at nu={nu}")
    if not controllability_check(sys, (m, top), tol):
        raise NotControllable(f"controllability fails on [{m}, {top}]")

    cands = [_renormalized_candidate(sys, nu, N, m, tol) for N in anchors]
    history: list[dict] = []
    raw_converged = False
    for prev, cur, N in zip(cands, cands[1:], anchors[1:]):
        window = slice(0, m + 1)
        diff = float(np.max(np.abs(cur.values[window] - prev.values[window])))
        scale = 1.0 + float(np.max(np.abs(cur.values[window])))
        history.append({"anchor": N, "raw_diff": diff, "scale": scale})
        raw_converged = diff <= tol.rec * scale

    basis = cands[-1]
    refined = False
    converged = raw_converged and len(anchors) >= 2
    fit_info: dict = {}
    if not converged and len(anchors) >= 3:
        refinement = _refine(sys, cands, anchors, m, tol)
        if refinement is not None:
            basis, fit_info = refinement
            refined = True
            converged = fit_info["model_residual"] <= 1e-6
    if not converged:
        raise NotConverged(
            f"anchors {anchors} did not converge at nu={nu} "
            f"(last raw diff {history[-1]['raw_diff'] if history else 'n/a'})",
            history,
        )

    diagnostics = _certify_shape(sys, basis, m, tol)
    diagnostics.update(fit_info)
    trace = lambda_min_trace(sys, basis, m, basis.horizon)
    diagnostics["lambda_min_trace"] = [float(v) for v in trace]
    return RecessiveResult(
        nu=nu,
        m=m,
        anchors=anchors,
        basis=basis,
        converged=converged,
        refined=refined,
        history=history,
        diagnostics=diagnostics,
    )


def _certify_shape(sys, basis: MatrixSolution, m: int, tol) -> dict:
    """Invertibility/PSD diagnostics of the candidate on [m, K]."""
    conds = []
    min_eigs = []
    K = basis.horizon
    for k in range(m, K + 1):
        x = basis.X[k]
        conds.append(float(np.linalg.cond(x)))
    for k in range(m, K):
        try:
            inv_k = _solve_x(basis.X[k], k)
            inv_k1 = _solve_x(basis.X[k + 1], k + 1)
        except SingularX:
            min_eigs.append(float("-inf"))
            continue
        summand = -inv_k @ sys.blocks(k)[1] @ inv_k1.conj().T
        summand = 0.5 * (summand + summand.conj().T)
        min_eigs.append(float(np.min(np.linalg.eigvalsh(summand))))
    min_eigs = np.array(min_eigs)
    scale = max(float(np.max(np.abs(min_eigs[np.isfinite(min_eigs)]))) if min_eigs.size else 1.0, 1.0)
    return {
        "max_condition": max(conds) if conds else float("nan"),
        "summand_min_eig": float(np.min(min_eigs)) if min_eigs.size else float("nan"),
        "summands_psd": bool(np.all(min_eigs >= -tol.psd * scale)) if min_eigs.size else True,
    }


def recessive_certificate(
    sys: SymplecticSystem,
    result: RecessiveResult,
    K: int,
    tol: Tolerances = DEFAULT,
) -> tuple[bool, np.ndarray]:
    """Finite-horizon proxy for lambda_min(Lambda_k) -> infinity.

    ok requires a nondecreasing lambda_min trace that clears ``lambda_big`` at
    the horizon; a monotone trace that stays below the bar is reported as not
    ok (inconclusive at this K), never as a refutation.
    """
    if not result.converged:
        raise NotConverged("certificate requires a converged recessive result")
    K = min(K, result.basis.horizon)
    trace = lambda_min_trace(sys, result.basis, result.m, K)
    increments = np.diff(trace)
    slack = tol.psd * max(1.0, float(np.max(np.abs(trace))))
    monotone = bool(np.all(increments >= -slack))
    ok = monotone and trace[-1] > tol.lambda_big
    return ok, trace


def dominant_solution(sys: SymplecticSystem, basis: MatrixSolution, k0: int = 0) -> MatrixSolution:
    """Associated dominant solution X^ = X Lambda, U^ = U Lambda + X^{-*} from k0.

    The output solves the same system (variation of parameters) and forms a
    normalized conjoined pair with the input.
    """
    K = basis.horizon
    n = basis.n
    values = np.zeros_like(basis.values)
    lam_k = np.zeros((n, n), dtype=complex)
    inv_k = _solve_x(basis.X[k0], k0)
    for k in range(k0, K + 1):
        values[k, :n, :] = basis.X[k] @ lam_k
        values[k, n:, :] = basis.U[k] @ lam_k + inv_k.conj().T
        if k == K:
            break
        inv_next = _solve_x(basis.X[k + 1], k + 1)
        lam_k = lam_k - inv_k @ sys.blocks(k)[1] @ inv_next.conj().T
        inv_k = inv_next
    # the terminal point and anything below k0 follow by exact stepping:
    # the combination is itself a solution, so no X-inverse is needed there
    values[K + 1] = step_forward(sys, values[K], K, basis.lam)
    for k in range(k0 - 1, -1, -1):
        values[k] = sys.s_lambda(k, basis.lam) @ values[k + 1]
    return MatrixSolution(basis.lam, values)


def companion_decay(sys: SymplecticSystem, basis: MatrixSolution, companion: MatrixSolution, a: int, b: int) -> np.ndarray:
    """Norms of X_companion^{-1} X_basis on [a, b]; decays for a recessive basis."""
    out = np.zeros(b - a + 1)
    for i, k in enumerate(range(a, b + 1)):
        out[i] = float(np.linalg.norm(np.linalg.solve(companion.X[k], basis.X[k])))
    return out


def trivialize(sys: SymplecticSystem, z: VectorSolution, a: int, b: int) -> VectorSolution:
    """Zero the solution on [0, a], keep it on [b+1, K+1], patch (a, b].

    The x-part ramps linearly to the admissibility-forced value at b and the
    u-part is back-solved through B_k (pseudoinverse when singular), so the
    output stays admissible whenever B is invertible on the patch.  The patch
    window is flagged: the output is not a solution there.
    """
    if not (0 <= a < b <= z.horizon):
        raise RangeMismatch(f"need 0 <= a < b <= K, got a={a}, b={b}, K={z.horizon}")
    n = z.n
    values = z.values.copy()
    values[: a + 1] = 0.0
    # admissibility at k=b with the retained tail fixes x_b
    ab_, bb_ = sys.blocks(b)[:2]
    xb = ab_ @ z.values[b + 1, :n] + bb_ @ z.values[b + 1, n:]
    for k in range(a + 1, b + 1):
        frac = (k - a) / (b - a)
        values[k, :n] = frac * xb
        values[k, n:] = 0.0
    for k in range(b - 1, a - 1, -1):
        ak, bk = sys.blocks(k)[:2]
        rhs = values[k, :n] - ak @ values[k + 1, :n]
        try:
            values[k + 1, n:] = np.linalg.solve(bk, rhs)
        except np.linalg.LinAlgError:
            from .linalg import pinv

            values[k + 1, n:] = pinv(bk) @ rhs
    return VectorSolution(z.lam, values, forcing=None, patch_window=(a, b))
