"""Problem instances: mean-reward matrices over bandits, separability audits,
synthetic generators, and agent-to-cluster mappings.

An instance is an M x K matrix of arm means (one row per latent bandit), a
mapping of N agents onto the M bandits, and two separability parameters:

* ``eta``  -- every bandit's best arm scores at least ``eta`` below the local
  best arm under every other bandit (cross-bandit separation of best arms).
* ``eta1`` -- every bandit's best arm's mean differs by at least ``eta1``
  between its home bandit and any other bandit (used by the verified
  second-phase scheme; 0 means unknown/unused).

All indices are zero-based internally; report helpers print one-based labels
as well.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

# Sentinel alpha for assign_agents: deterministic balanced mapping i -> i % M.
BALANCED = -1.0

# Small fixed instance: 3 bandits x 10 arms. Best arms are columns 3, 5, 6
# (one-based: 4, 6, 7); separability holds at eta = eta1 = 0.3.
_SMALL_MEANS = (
    (0.09, 0.26, 0.49, 0.91, 0.56, 0.16, 0.31, 0.75, 0.76, 0.77),
    (0.02, 0.27, 0.36, 0.42, 0.47, 0.92, 0.32, 0.62, 0.82, 0.90),
    (0.14, 0.46, 0.64, 0.44, 0.70, 0.03, 0.96, 0.72, 0.79, 0.95),
)


@dataclass(frozen=True)
class Violation:
    """One failed separability check.

    ``assumption`` is one of ``"unique-argmax"``, ``"cross-separation"``
    (best arm of one bandit too good under another), or
    ``"mean-separation"`` (best-arm means too close across bandits).
    """

    assumption: str
    bandits: tuple[int, int]
    arm: int
    margin: float


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    max_eta: float
    max_eta1: float
    min_gap_per_bandit: tuple[float, ...]
    violations: tuple[Violation, ...]


def validate(means, requested_eta: float, requested_eta1: float = 0.0) -> ValidationReport:
    """Audit a mean matrix against the separability requirements.

    ``max_eta`` is the largest cross-bandit separation the matrix supports:
    the minimum over ordered bandit pairs (a, b), a != b, of
    ``means[b, best_b] - means[b, best_a]``.  ``max_eta1`` is the minimum over
    ordered pairs of ``|means[i, best_i] - means[j, best_i]|``.  The report is
    ``ok`` iff every row has a strictly unique argmax, ``max_eta`` covers the
    requested eta, and (when a positive eta1 is requested) ``max_eta1`` covers
    it too.

    Raises ValueError on non-finite entries or a matrix with fewer columns
    than rows.
    """
    mat = np.asarray(means, dtype=float)
    if mat.ndim != 2:
        raise ValueError(f"mean matrix must be 2-D, got shape {mat.shape}")
    if not np.all(np.isfinite(mat)):
        raise ValueError("mean matrix contains non-finite entries")
    num_bandits, num_arms = mat.shape
    if num_bandits < 1:
        raise ValueError("mean matrix needs at least one bandit row")
    if num_arms < num_bandits:
        raise ValueError(
            f"need at least as many arms as bandits ({num_arms} < {num_bandits})"
        )

    best = [int(np.argmax(row)) for row in mat]
    violations: list[Violation] = []

    for m, row in enumerate(mat):
        if int(np.sum(row == row[best[m]])) > 1:
            violations.append(Violation("unique-argmax", (m, m), best[m], 0.0))

    min_gaps = []
    for m, row in enumerate(mat):
        others = np.delete(row, best[m])
        min_gaps.append(float(row[best[m]] - others.max()) if others.size else math.inf)

    max_eta = math.inf
    max_eta1 = math.inf
    for a in range(num_bandits):
        for b in range(num_bandits):
            if a == b:
                continue
            margin = float(mat[b, best[b]] - mat[b, best[a]])
            max_eta = min(max_eta, margin)
            if margin < requested_eta:
                violations.append(Violation("cross-separation", (a, b), best[a], margin))
            sep = float(abs(mat[a, best[a]] - mat[b, best[a]]))
            max_eta1 = min(max_eta1, sep)
            if requested_eta1 > 0.0 and sep < requested_eta1:
                violations.append(Violation("mean-separation", (a, b), best[a], sep))

    return ValidationReport(
        ok=not violations,
        max_eta=max_eta,
        max_eta1=max_eta1,
        min_gap_per_bandit=tuple(min_gaps),
        violations=tuple(violations),
    )


@dataclass
class Instance:
    """A clustered-bandit problem: mean matrix, agent mapping, separations.

    The constructor enforces the separability invariants (strictly unique
    per-row argmax, cross separation >= eta, and mean separation >= eta1 when
    eta1 > 0), so any constructed Instance is valid by construction.
    """

    means: np.ndarray
    mapping: tuple[int, ...] = ()
    eta: float = 0.0
    eta1: float = 0.0
    provenance: str = ""

    def __post_init__(self):
        self.means = np.array(self.means, dtype=float)
        self.mapping = tuple(int(b) for b in self.mapping)
        report = validate(self.means, self.eta, self.eta1)
        if not report.ok:
            raise ValueError(
                f"instance violates separability requirements: {report.violations[:3]}"
            )
        bad = [b for b in self.mapping if not 0 <= b < self.num_bandits]
        if bad:
            raise ValueError(f"mapping contains out-of-range bandit indices: {bad[:5]}")

    @property
    def num_agents(self) -> int:
        return len(self.mapping)

    @property
    def num_bandits(self) -> int:
        return self.means.shape[0]

    @property
    def num_arms(self) -> int:
        return self.means.shape[1]

    @property
    def best_arms(self) -> tuple[int, ...]:
        return tuple(int(np.argmax(row)) for row in self.means)

    def gap(self, bandit: int, arm: int) -> float:
        """Mean difference between the bandit's best arm and ``arm`` (0 for the best arm)."""
        row = self.means[bandit]
        return float(row[int(np.argmax(row))] - row[arm])

    def gaps(self, bandit: int) -> np.ndarray:
        row = self.means[bandit]
        return row[int(np.argmax(row))] - row

    def min_gap(self, bandit: int) -> float:
        g = self.gaps(bandit)
        g = g[g > 0]
        return float(g.min()) if g.size else math.inf

    def with_mapping(self, mapping) -> "Instance":
        return Instance(self.means, tuple(mapping), self.eta, self.eta1, self.provenance)

    def to_dict(self) -> dict:
        return {
            "means": self.means.tolist(),
            "mapping": list(self.mapping),
            "eta": self.eta,
            "eta1": self.eta1,
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Instance":
        return cls(
            means=np.asarray(doc["means"], dtype=float),
            mapping=tuple(doc.get("mapping", ())),
            eta=float(doc.get("eta", 0.0)),
            eta1=float(doc.get("eta1", 0.0)),
            provenance=str(doc.get("provenance", "")),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), sort_keys=True))

    @classmethod
    def load(cls, path) -> "Instance":
        return cls.from_dict(json.loads(Path(path).read_text()))


def gen_fixed_small() -> Instance:
    """The hard-coded 3x10 instance with eta = eta1 = 0.3 and empty mapping."""
    return Instance(
        means=np.array(_SMALL_MEANS, dtype=float),
        eta=0.3,
        eta1=0.3,
        provenance="fixed-small",
    )


def gen_random_separated(num_bandits: int, num_arms: int, eta: float, seed: int) -> Instance:
    """Random instance with cross-bandit separation at least ``eta``.

    Each bandit gets a distinct best arm (chosen without replacement) with
    mean drawn from U(1-eta, 1); the best arms of the other bandits score
    U(0, 1-2*eta) under this bandit; every remaining arm scores U(0, best
    mean).  Draws that would tie an argmax are resampled (at most 100
    attempts).  The declared eta is the requested one; eta1 is set to the
    measured mean separation of the draw, which the construction guarantees
    to be at least eta.
    """
    if not num_arms >= num_bandits >= 1:
        raise ValueError("need num_arms >= num_bandits >= 1")
    if not 0.0 < eta < 0.5:
        raise ValueError(f"eta must lie in (0, 1/2), got {eta}")
    rng = np.random.default_rng(seed)
    for _ in range(100):
        best_arms = rng.choice(num_arms, size=num_bandits, replace=False)
        means = np.zeros((num_bandits, num_arms))
        best_means = rng.uniform(1.0 - eta, 1.0, size=num_bandits)
        for m in range(num_bandits):
            means[m, best_arms[m]] = best_means[m]
        for m in range(num_bandits):
            for j in range(num_bandits):
                if j != m:
                    means[m, best_arms[j]] = rng.uniform(0.0, 1.0 - 2.0 * eta)
        rest = [k for k in range(num_arms) if k not in set(best_arms.tolist())]
        for m in range(num_bandits):
            for k in rest:
                means[m, k] = rng.uniform(0.0, best_means[m])
        report = validate(means, eta, eta)
        if report.ok:
            return Instance(
                means=means,
                eta=eta,
                eta1=report.max_eta1 if math.isfinite(report.max_eta1) else 0.0,
                provenance=f"random-separated(M={num_bandits},K={num_arms},eta={eta},seed={seed})",
            )
    raise RuntimeError("could not draw a tie-free separated instance in 100 attempts")


def gen_uniform_gap(num_bandits: int, num_arms: int, eta: float) -> Instance:
    """Instance where bandit m's best arm is arm m with mean 1 and every
    other arm has mean 1 - eta; both separations equal eta exactly."""
    if not num_arms >= num_bandits >= 1:
        raise ValueError("need num_arms >= num_bandits >= 1")
    if eta <= 0.0:
        raise ValueError(f"eta must be positive, got {eta}")
    means = np.full((num_bandits, num_arms), 1.0 - eta)
    for m in range(num_bandits):
        means[m, m] = 1.0
    return Instance(
        means=means,
        eta=eta,
        eta1=eta,
        provenance=f"uniform-gap(M={num_bandits},K={num_arms},eta={eta})",
    )


def assign_agents(num_agents: int, num_bandits: int, alpha: float, seed: int = 0) -> list[int]:
    """Map agents to clusters.

    With ``alpha >= 0`` each agent is independently assigned to cluster i
    (one-based) with probability proportional to i**alpha; alpha = 0 is the
    uniform mapping.  A negative alpha selects the deterministic balanced
    mapping agent i -> i % num_bandits.
    """
    if num_agents < 1 or num_bandits < 1:
        raise ValueError("need num_agents >= 1 and num_bandits >= 1")
    if alpha < 0:
        return [i % num_bandits for i in range(num_agents)]
    weights = np.arange(1, num_bandits + 1, dtype=float) ** alpha
    probs = weights / weights.sum()
    rng = np.random.default_rng(seed)
    return rng.choice(num_bandits, size=num_agents, p=probs).tolist()


_HEADER_RE = re.compile(r"eta\s*=\s*([0-9eE+.\-]+)\s+eta1\s*=\s*([0-9eE+.\-]+)")


def load_means_csv(path) -> Instance:
    """Load a mean matrix from CSV: one row per bandit, one column per arm.

    An optional leading comment line ``# eta=<v> eta1=<v>`` pins the
    separability parameters; otherwise the largest values supported by the
    matrix are used.  The mapping is left empty.
    """
    path = Path(path)
    eta = eta1 = None
    rows: list[list[float]] = []
    with path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                match = _HEADER_RE.search(line)
                if match:
                    eta, eta1 = float(match.group(1)), float(match.group(2))
                continue
            cells = [c.strip() for c in line.split(",")]
            try:
                rows.append([float(c) for c in cells])
            except ValueError:
                bad = next(i for i, c in enumerate(cells) if not _is_float(c))
                raise ValueError(
                    f"{path}: non-numeric cell at row {lineno}, column {bad + 1}"
                ) from None
            if len(rows) > 1 and len(rows[-1]) != len(rows[0]):
                raise ValueError(
                    f"{path}: ragged row {lineno} has {len(rows[-1])} cells, expected {len(rows[0])}"
                )
    if not rows:
        raise ValueError(f"{path}: no data rows")
    means = np.asarray(rows, dtype=float)
    if eta is None:
        report = validate(means, 0.0, 0.0)
        eta = report.max_eta if math.isfinite(report.max_eta) else 0.0
        eta1 = report.max_eta1 if math.isfinite(report.max_eta1) else 0.0
    return Instance(means=means, eta=eta, eta1=eta1, provenance=f"csv:{path.name}")


def _is_float(cell: str) -> bool:
    try:
        float(cell)
        return True
    except ValueError:
        return False
