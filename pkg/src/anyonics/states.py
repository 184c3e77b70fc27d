"""Pair density matrices for the target system of an interferometry experiment.

A state lives on an (A, C) pair: A is the probed composite, C its entangled
partner outside the interferometer.  Stored coefficients follow the convention
in which the operator expansion carries an extra 1/d_f, so the quantum trace
is the plain sum of diagonal coefficients.

Keys are ((a, c, f, mu), (a2, c2, f, mu2)) label tuples; bra and ket always
share the overall charge f.
"""

from __future__ import annotations

import numpy as np

from .fusion import CheckResult, ModelDataError, ValidationReport
from .model import AnyonModel

TRACE_TOL = 1e-9
PSD_TOL = 1e-9


def _as_key(ket, bra) -> tuple:
    ket = tuple(ket)
    bra = tuple(bra)
    if len(ket) != 4 or len(bra) != 4:
        raise ModelDataError(f"state keys must be (a, c, f, mu) tuples, got {ket!r}, {bra!r}")
    if ket[2] != bra[2]:
        raise ModelDataError(f"bra and ket must share the overall charge, got {ket!r}, {bra!r}")
    return ket, bra


class PureTargetState:
    """A normalized state vector over splitting channels |a,c;f,mu>."""

    def __init__(self, model: AnyonModel, amplitudes: dict):
        self.model = model
        amps = {}
        for (a, c, f, mu), val in amplitudes.items():
            a, c, f = model.label(model.index(a)), model.label(model.index(c)), model.label(model.index(f))
            if model.n_abc(a, c, f) <= mu:
                raise ModelDataError(f"channel ({a},{c};{f},{mu}) not admissible")
            amps[(a, c, f, int(mu))] = complex(val)
        norm = sum(abs(v) ** 2 for v in amps.values())
        if abs(norm - 1.0) > TRACE_TOL:
            raise ModelDataError(f"state not normalized: sum |psi|^2 = {norm}")
        self.amplitudes = amps


class PairDensityMatrix:
    """Density matrix of the target pair, immutable by convention."""

    def __init__(self, model: AnyonModel, coeff: dict, superselection: dict | None = None):
        self.model = model
        self.coeff = {}
        for (ket, bra), val in coeff.items():
            ket, bra = _as_key(ket, bra)
            val = complex(val)
            if val != 0.0:
                self.coeff[(ket, bra)] = val
        self.superselection = dict(superselection) if superselection else None

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_pure(cls, psi: PureTargetState, superselection: dict | None = None) -> "PairDensityMatrix":
        coeff = {}
        for x, vx in psi.amplitudes.items():
            for y, vy in psi.amplitudes.items():
                if x[2] != y[2]:
                    continue  # charge conservation: cross-f terms are absent
                coeff[(x, y)] = vx * np.conj(vy)
        return cls(psi.model, coeff, superselection)

    @classmethod
    def mixture(cls, parts) -> "PairDensityMatrix":
        """Convex combination [(weight, rho), ...]; weights are not re-normalized."""
        model = parts[0][1].model
        sup = parts[0][1].superselection
        coeff: dict = {}
        for w, rho in parts:
            for key, val in rho.coeff.items():
                coeff[key] = coeff.get(key, 0.0) + w * val
        return cls(model, coeff, sup)

    def scaled(self, factor: complex) -> "PairDensityMatrix":
        return PairDensityMatrix(
            self.model, {k: v * factor for k, v in self.coeff.items()}, self.superselection
        )

    # -- traces and marginals ----------------------------------------------

    def quantum_trace(self) -> complex:
        return sum(v for (ket, bra), v in self.coeff.items() if ket == bra)

    def standard_trace(self) -> complex:
        acc = 0.0 + 0.0j
        for (ket, bra), v in self.coeff.items():
            if ket == bra:
                acc += v / self.model.quantum_dimension(ket[2])
        return acc

    def charge_distribution(self) -> dict:
        """Marginal probability of the target charge a after tracing out C."""
        out: dict = {}
        for (ket, bra), v in self.coeff.items():
            if ket == bra:
                out[ket[0]] = out.get(ket[0], 0.0) + v.real
        return out

    def diagonal(self) -> dict:
        return {ket: v for (ket, bra), v in self.coeff.items() if ket == bra}

    # -- comparisons ---------------------------------------------------------

    def distance(self, other: "PairDensityMatrix") -> float:
        keys = set(self.coeff) | set(other.coeff)
        return max(
            (abs(self.coeff.get(k, 0.0) - other.coeff.get(k, 0.0)) for k in keys), default=0.0
        )

    # -- validation ------------------------------------------------------------

    def check(self, tol: float = PSD_TOL) -> ValidationReport:
        report = ValidationReport()

        herm = CheckResult("hermiticity", True)
        for (ket, bra), v in self.coeff.items():
            resid = abs(v - np.conj(self.coeff.get((bra, ket), 0.0)))
            herm.worst_residual = max(herm.worst_residual, resid)
            if resid > tol:
                herm.add((ket, bra), f"rho_xy != conj(rho_yx), residual {resid:.3e}", resid)
        report.checks.append(herm)

        tr = CheckResult("unit_quantum_trace", True)
        resid = abs(self.quantum_trace() - 1.0)
        tr.worst_residual = resid
        if resid > TRACE_TOL:
            tr.add((), f"quantum trace deviates by {resid:.3e}", resid)
        report.checks.append(tr)

        psd = CheckResult("positivity", True)
        for f, mat, _ in self._f_blocks():
            h = 0.5 * (mat + mat.conj().T)
            eigs = np.linalg.eigvalsh(h)
            low = float(eigs.min()) if eigs.size else 0.0
            if low < -tol:
                psd.add((f,), f"negative eigenvalue {low:.3e}", -low)
            psd.worst_residual = max(psd.worst_residual, max(0.0, -low))
        report.checks.append(psd)

        if self.superselection is not None:
            sect = CheckResult("superselection", True)
            for (ket, bra), v in self.coeff.items():
                sa, sa2 = self.superselection.get(ket[0]), self.superselection.get(bra[0])
                sc, sc2 = self.superselection.get(ket[1]), self.superselection.get(bra[1])
                if (sa != sa2 or sc != sc2) and abs(v) > tol:
                    sect.add((ket, bra), f"coherence across sectors, |rho| = {abs(v):.3e}", abs(v))
            report.checks.append(sect)
        return report

    def _f_blocks(self):
        """Group coefficients into Hermitian matrices per overall charge f."""
        by_f: dict = {}
        for (ket, bra), v in self.coeff.items():
            by_f.setdefault(ket[2], {})[(ket, bra)] = v
        for f, entries in sorted(by_f.items()):
            idx = sorted({k[0][:2] + (k[0][3],) for k in entries} | {k[1][:2] + (k[1][3],) for k in entries})
            pos = {lab: i for i, lab in enumerate(idx)}
            mat = np.zeros((len(idx), len(idx)), dtype=complex)
            for (ket, bra), v in entries.items():
                mat[pos[(ket[0], ket[1], ket[3])], pos[(bra[0], bra[1], bra[3])]] = v
            yield f, mat, idx


# ---------------------------------------------------------------------------
# module-level operation aliases


def from_pure(psi: PureTargetState, superselection: dict | None = None) -> PairDensityMatrix:
    return PairDensityMatrix.from_pure(psi, superselection)


def quantum_trace(rho: PairDensityMatrix) -> complex:
    return rho.quantum_trace()


def standard_trace(rho: PairDensityMatrix) -> complex:
    return rho.standard_trace()


def trace_out_partner(rho: PairDensityMatrix) -> dict:
    return rho.charge_distribution()


def check_state(rho: PairDensityMatrix, tol: float = PSD_TOL) -> ValidationReport:
    return rho.check(tol)


# ---------------------------------------------------------------------------
# the shared measurement-update transform


def reweight_channels(rho: PairDensityMatrix, weight) -> PairDensityMatrix:
    """Scale every difference-charge component of rho by weight(a, a2, e).

    For each (a, c, a2, c2) block the (f, mu, mu2) coefficient vector is
    rotated to the difference-charge basis with the inverse bent F-matrix,
    scaled componentwise, and rotated back, including the sqrt(d_f'/d_f)
    normalization of the stored-coefficient convention.  The result is NOT
    renormalized; callers divide by the outcome probability.
    """
    model = rho.model
    groups: dict = {}
    for (ket, bra), v in rho.coeff.items():
        groups.setdefault((ket[0], ket[1], bra[0], bra[1]), {})[(ket[2], ket[3], bra[3])] = v

    out: dict = {}
    for (a, c, a2, c2), comps in groups.items():
        blk = model.bent_f_block(a, c, a2, c2)
        if blk.empty:
            raise ModelDataError(f"no bent F-block for ({a},{c};{a2},{c2})")
        dims = np.array([model.quantum_dimension(model.label(f)) for f, _, _ in blk.cols])
        vec = np.zeros(len(blk.cols), dtype=complex)
        for j, (f, mu, nu) in enumerate(blk.cols):
            vec[j] = comps.get((model.label(f), mu, nu), 0.0)
        tilde = (vec / np.sqrt(dims)) @ blk.mat.conj().T
        for i, (e, _, _) in enumerate(blk.rows):
            tilde[i] *= weight(a, a2, model.label(e))
        back = (tilde @ blk.mat) * np.sqrt(dims)
        for j, (f, mu, nu) in enumerate(blk.cols):
            if back[j] != 0.0:
                flab = model.label(f)
                key = ((a, c, flab, mu), (a2, c2, flab, nu))
                out[key] = out.get(key, 0.0) + back[j]
    return PairDensityMatrix(model, out, rho.superselection)
