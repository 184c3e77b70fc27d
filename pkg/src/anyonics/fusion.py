"""Fusion algebra of an anyon model: charges, multiplicities, quantum dimensions.

Charges are interned string labels; every tensor here works on the dense
integer indices assigned at model construction.  The fusion tensor is stored
sparsely: an absent key means multiplicity zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

#: absolute tolerance for all real/complex comparisons in the fusion layer
DIM_TOL = 1e-9


class UnknownChargeError(KeyError):
    """A charge label or index that does not belong to the model."""


class ModelDataError(ValueError):
    """Model data violates a structural requirement (bad conjugates, dims, ...)."""


class NumericalError(RuntimeError):
    """A numerical routine failed to reach its tolerance."""


@dataclass
class CheckResult:
    """Outcome of one named consistency check."""

    name: str
    passed: bool
    worst_residual: float = 0.0
    violations: list = field(default_factory=list)

    def add(self, where, detail: str, residual: float = 0.0):
        self.violations.append((where, detail))
        self.passed = False
        self.worst_residual = max(self.worst_residual, residual)


@dataclass
class ValidationReport:
    """Ordered list of check results, with an overall verdict."""

    checks: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def worst_residual(self) -> float:
        return max((c.worst_residual for c in self.checks), default=0.0)

    def check(self, name: str):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def failed(self) -> list:
        return [c for c in self.checks if not c.passed]

    def __str__(self) -> str:
        lines = []
        for c in self.checks:
            status = "pass" if c.passed else "FAIL"
            lines.append(f"{c.name:24s} {status}  worst residual {c.worst_residual:.3e}")
            for where, detail in c.violations[:8]:
                lines.append(f"    at {where}: {detail}")
            if len(c.violations) > 8:
                lines.append(f"    ... {len(c.violations) - 8} more")
        for k, v in self.meta.items():
            lines.append(f"{k} = {v}")
        return "\n".join(lines)

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "worst_residual": self.worst_residual,
            "checks": [
                {
                    "name": c.name,
                    "passed": c.passed,
                    "worst_residual": c.worst_residual,
                    "violations": [
                        {"where": list(w) if isinstance(w, tuple) else w, "detail": d}
                        for w, d in c.violations
                    ],
                }
                for c in self.checks
            ],
            "meta": dict(self.meta),
        }


class FusionTensor:
    """Sparse fusion multiplicities N_ab^c over integer charge indices."""

    def __init__(self, n_charges: int, vacuum: int, entries: dict):
        self.n_charges = n_charges
        self.vacuum = vacuum
        self.entries = {k: int(v) for k, v in entries.items() if int(v) != 0}
        self._pair_cache: dict = {}

    def n(self, a: int, b: int, c: int) -> int:
        return self.entries.get((a, b, c), 0)

    def fuse(self, a: int, b: int) -> list:
        """All (c, N_ab^c) with nonzero multiplicity, in ascending charge order."""
        key = (a, b)
        out = self._pair_cache.get(key)
        if out is None:
            out = [(c, self.n(a, b, c)) for c in range(self.n_charges) if self.n(a, b, c)]
            self._pair_cache[key] = out
        return out

    def conjugate(self, a: int) -> int:
        partners = [b for b in range(self.n_charges) if self.n(a, b, self.vacuum)]
        if len(partners) != 1:
            raise ModelDataError(f"charge {a} has {len(partners)} conjugates, expected 1")
        return partners[0]

    def matrix(self, a: int) -> np.ndarray:
        """The fusion matrix (N_a)_{bc} = N_ab^c."""
        m = np.zeros((self.n_charges, self.n_charges), dtype=float)
        for (x, b, c), mult in self.entries.items():
            if x == a:
                m[b, c] = mult
        return m

    # -- axioms ----------------------------------------------------------

    def dense(self) -> np.ndarray:
        """Dense int array N[a, b, c]."""
        n = np.zeros((self.n_charges,) * 3, dtype=np.int64)
        for (a, b, c), mult in self.entries.items():
            n[a, b, c] = mult
        return n

    def validate(self) -> ValidationReport:
        """Check commutativity, vacuum, conjugation and associativity axioms.

        Violations are reported as data; nothing raises.
        """
        report = ValidationReport()
        nc = self.n_charges
        n = self.dense()

        comm = CheckResult("commutativity", True)
        for a, b, c in zip(*np.nonzero(n != n.transpose(1, 0, 2))):
            comm.add((int(a), int(b), int(c)), f"N_ab^c={n[a, b, c]} but N_ba^c={n[b, a, c]}")
        report.checks.append(comm)

        vac = CheckResult("vacuum", True)
        want = np.eye(nc, dtype=np.int64)
        for a, c in zip(*np.nonzero(n[:, self.vacuum, :] != want)):
            vac.add((int(a), self.vacuum, int(c)), f"N_a1^c={n[a, self.vacuum, c]}, expected {want[a, c]}")
        report.checks.append(vac)

        conj = CheckResult("conjugation", True)
        conj_map = {}
        for a in range(nc):
            partners = [b for b in range(nc) if n[a, b, self.vacuum]]
            multiplicities = [int(n[a, b, self.vacuum]) for b in partners]
            if len(partners) != 1 or multiplicities != [1]:
                conj.add((a,), f"conjugate candidates {partners} with N {multiplicities}")
            else:
                conj_map[a] = partners[0]
        for a, abar in conj_map.items():
            if conj_map.get(abar) != a:
                conj.add((a,), f"conj(conj({a})) = {conj_map.get(abar)} != {a}")
        if conj_map.get(self.vacuum) not in (None, self.vacuum):
            conj.add((self.vacuum,), "vacuum is not self-conjugate")
        report.checks.append(conj)

        assoc = CheckResult("associativity", True)
        lhs = np.einsum("abe,ecd->abcd", n, n)
        rhs = np.einsum("afd,bcf->abcd", n, n)
        for a, b, c, d in zip(*np.nonzero(lhs != rhs)):
            assoc.add(
                (int(a), int(b), int(c), int(d)),
                f"sum_e N N = {lhs[a, b, c, d]} != {rhs[a, b, c, d]} = sum_f N N",
            )
        report.checks.append(assoc)
        return report

    # -- quantum dimensions ----------------------------------------------

    def quantum_dimensions(self) -> tuple:
        """Perron-Frobenius dimension of every charge and the total dimension D.

        d_a is the spectral radius of the fusion matrix N_a.  Values within
        DIM_TOL of 1 are snapped to exactly 1 (Abelian charges).
        """
        dims = np.empty(self.n_charges, dtype=float)
        for a in range(self.n_charges):
            try:
                eigs = np.linalg.eigvals(self.matrix(a))
            except np.linalg.LinAlgError as exc:  # pragma: no cover - numpy rarely fails here
                raise NumericalError(f"eigensolve failed for charge {a}: {exc}") from exc
            dims[a] = float(np.max(np.abs(eigs)))
            if abs(dims[a] - 1.0) < DIM_TOL:
                dims[a] = 1.0
        # compatibility with fusion: d_a d_b = sum_c N_ab^c d_c
        fused = self.dense() @ dims
        worst = float(np.max(np.abs(np.outer(dims, dims) - fused)))
        if worst > 1e-6:
            raise NumericalError(f"quantum dimensions inconsistent with fusion: residual {worst:.3e}")
        total = float(np.sqrt(np.sum(dims**2)))
        return dims, total, worst


def validate_fusion(tensor: FusionTensor) -> ValidationReport:
    """Module-level alias: the axiom report for a fusion tensor."""
    return tensor.validate()
