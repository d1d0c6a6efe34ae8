"""Operational consequences of a family's block/tensor decomposition.

Four questions about a family of states reduce to the shape of its finest
decomposition: can the states be broadcast onto two parties, can a channel
fixing them nevertheless leave a trace of the state label in its
environment, can a bipartite family be cloned sequentially, and how many
classical/quantum/redundant bits does the family carry. Each predicate here
answers one of them, returning a small report with the witnesses.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import (
    BadWeights,
    DimensionMismatch,
    NotBroadcastable,
    ValidationError,
)
from .linalg import (
    DEFAULT_TOL,
    StateFamily,
    Tolerances,
    as_complex_matrix,
    density_matrix,
    entropy_of_spectrum,
    hermitian_part,
    partial_trace,
    state_family,
    von_neumann_entropy,
)
from .structure import DecomposedFamily, decompose

__all__ = [
    "BroadcastReport",
    "BroadcastOutput",
    "ImprintReport",
    "ImprintingParts",
    "GeneralizedImprintReport",
    "SequentialCloneReport",
    "EntropyReport",
    "BlockEntropy",
    "is_broadcastable",
    "broadcast_states",
    "no_imprinting_holds",
    "imprinting_parts",
    "generalized_no_imprinting",
    "sequential_clonability",
    "entropy_report",
]

BROADCAST_MODES = ("product", "classical", "quantum")


@dataclass(frozen=True)
class BroadcastReport:
    ok: bool
    witness_block: int | None  # first block with a nontrivial information factor
    commutator_defect: float  # cross-check: max Frobenius norm of [rho_s, rho_t]
    decomposition: DecomposedFamily


def is_broadcastable(family, seed: int = 0, tol: Tolerances = DEFAULT_TOL) -> BroadcastReport:
    """A family can be broadcast iff every block has d_info = 1.

    That holds exactly when the states all commute, so the report carries
    the largest pairwise commutator norm as an independent cross-check.
    """
    fam = family if isinstance(family, StateFamily) else state_family(family, tol=tol)
    decomp = decompose(fam, seed=seed, tol=tol)
    witness = None
    for l, (di, _) in enumerate(decomp.structure.blocks):
        if di > 1:
            witness = l
            break
    defect = 0.0
    mats = fam.mats()
    for i in range(len(mats)):
        for j in range(i + 1, len(mats)):
            defect = max(defect, float(np.linalg.norm(mats[i] @ mats[j] - mats[j] @ mats[i])))
    return BroadcastReport(witness is None, witness, defect, decomp)


@dataclass(frozen=True)
class BroadcastOutput:
    mode: str
    chi: tuple  # one DensityMatrix on (ambient x ambient) per family member
    marginal_defect: float  # worst distance of either marginal from rho_s


def broadcast_states(decomp: DecomposedFamily, mode: str = "product", tol: Tolerances = DEFAULT_TOL) -> BroadcastOutput:
    """Two-party outputs whose both marginals reproduce every family member.

    Requires every block to have d_info = 1 (NotBroadcastable otherwise).
    The output is block diagonal over pairs of matching blocks, with the
    per-block two-party state chosen by mode: "product" uses red (x) red,
    "classical" perfectly correlates the redundant eigenbasis, "quantum"
    purifies it into an entangled pair (all phases zero).
    """
    if mode not in BROADCAST_MODES:
        raise ValueError(f"mode must be one of {BROADCAST_MODES}, got {mode!r}")
    for l, (di, _) in enumerate(decomp.structure.blocks):
        if di > 1:
            raise NotBroadcastable(f"block {l} has information dimension {di}")
    d0 = decomp.family.dim
    n = len(decomp.family)
    embeds = []  # per block: ambient-coordinates isometry onto the block
    for l in range(decomp.n_blocks):
        embeds.append(decomp.support @ decomp.structure.block_basis(l))
    chis = []
    worst = 0.0
    for s in range(n):
        chi = np.zeros((d0 * d0, d0 * d0), dtype=complex)
        for l, (di, dr) in enumerate(decomp.structure.blocks):
            w = float(decomp.weights[s, l])
            if w <= 0.0:
                continue
            red = decomp.red_states[l].mat
            q = decomp.red_spectra[l]
            if mode == "product":
                zeta = np.kron(red, red)
            elif mode == "classical":
                zeta = np.zeros((dr * dr, dr * dr), dtype=complex)
                for k in range(dr):
                    zeta[k * dr + k, k * dr + k] = q[k]
            else:  # quantum
                vec = np.zeros(dr * dr, dtype=complex)
                for k in range(dr):
                    vec[k * dr + k] = np.sqrt(q[k])
                zeta = np.outer(vec, vec.conj())
            lift = np.kron(embeds[l], embeds[l])
            chi += w * (lift @ zeta @ lift.conj().T)
        rho = decomp.family.states[s].mat
        left = partial_trace(chi, d0, d0, keep="left")
        right = partial_trace(chi, d0, d0, keep="right")
        worst = max(
            worst,
            float(np.linalg.norm(left - rho)),
            float(np.linalg.norm(right - rho)),
        )
        chis.append(density_matrix(hermitian_part(chi), tol))
    return BroadcastOutput(mode, tuple(chis), worst)


@dataclass(frozen=True)
class ImprintReport:
    ok: bool
    offending: tuple | None  # (s, s_prime, block) of the first unequal weights
    max_weight_gap: float
    decomposition: DecomposedFamily


def no_imprinting_holds(family, seed: int = 0, tol: Tolerances = DEFAULT_TOL) -> ImprintReport:
    """No channel fixing the family can leave the label in its environment.

    Holds iff the weight rows of the decomposition are identical across
    states (within 1e-8); the first offending (s, s', block) is reported
    otherwise.
    """
    fam = family if isinstance(family, StateFamily) else state_family(family, tol=tol)
    decomp = decompose(fam, seed=seed, tol=tol)
    w = decomp.weights
    offending = None
    worst = 0.0
    for s in range(w.shape[0]):
        for t in range(s + 1, w.shape[0]):
            for l in range(w.shape[1]):
                gap = abs(float(w[s, l] - w[t, l]))
                worst = max(worst, gap)
                if gap > 1e-8 and offending is None:
                    offending = (s, t, l)
    return ImprintReport(offending is None, offending, worst, decomp)


@dataclass(frozen=True)
class ImprintingParts:
    """Pieces of an operator that a family-preserving channel cannot mix.

    outer lives on the orthocomplement of the family's support, the two
    cross parts connect that complement to the support, and block_parts[l]
    is the redundant-factor compression of the support part on block l.
    """

    outer: np.ndarray
    outer_to_support: np.ndarray
    support_to_outer: np.ndarray
    block_parts: tuple


def imprinting_parts(sigma, decomp: DecomposedFamily, tol: Tolerances = DEFAULT_TOL) -> ImprintingParts:
    """Split a probe operator along the family's preserved decomposition."""
    m = as_complex_matrix(sigma)
    d0 = decomp.family.dim
    if m.shape != (d0, d0):
        raise DimensionMismatch(
            f"probe operator has shape {m.shape}, expected ({d0}, {d0})"
        )
    p_a = decomp.support @ decomp.support.conj().T
    p_0 = np.eye(d0) - p_a
    parts = []
    for l, (di, dr) in enumerate(decomp.structure.blocks):
        embed = decomp.support @ decomp.structure.block_basis(l)  # d0 x di*dr
        compressed = embed.conj().T @ m @ embed
        parts.append(partial_trace(compressed, di, dr, keep="right"))
    return ImprintingParts(
        outer=p_0 @ m @ p_0,
        outer_to_support=p_0 @ m @ p_a,
        support_to_outer=p_a @ m @ p_0,
        block_parts=tuple(parts),
    )


@dataclass(frozen=True)
class GeneralizedImprintReport:
    ok: bool
    offending: tuple | None  # (s, s_prime, part_name) of the first mismatch
    max_gap: float


def generalized_no_imprinting(sigmas, decomp: DecomposedFamily, tol: Tolerances = DEFAULT_TOL) -> GeneralizedImprintReport:
    """Whether probe operators agree on everything a preserving channel keeps.

    Feeds each probe through `imprinting_parts` and compares all four parts
    across probes; they must be independent of the probe index within 1e-8
    for no channel fixing the family to distinguish the probes through its
    environment.
    """
    sigmas = list(sigmas)
    if len(sigmas) < 2:
        raise ValidationError("need at least two probe operators to compare")
    parts = [imprinting_parts(s, decomp, tol) for s in sigmas]
    offending = None
    worst = 0.0

    def gap(a, b):
        return float(np.linalg.norm(a - b))

    for s in range(len(parts)):
        for t in range(s + 1, len(parts)):
            named = [
                ("outer", gap(parts[s].outer, parts[t].outer)),
                ("outer_to_support", gap(parts[s].outer_to_support, parts[t].outer_to_support)),
                ("support_to_outer", gap(parts[s].support_to_outer, parts[t].support_to_outer)),
            ]
            for l in range(decomp.n_blocks):
                named.append(
                    (f"block_{l}", gap(parts[s].block_parts[l], parts[t].block_parts[l]))
                )
            for name, g in named:
                worst = max(worst, g)
                if g > 1e-8 and offending is None:
                    offending = (s, t, name)
    return GeneralizedImprintReport(offending is None, offending, worst)


@dataclass(frozen=True)
class SequentialCloneReport:
    clonable: bool
    residues: tuple  # residues[s][l]: operator on red(l) (x) second party
    orthogonality_defect: float  # worst normalized overlap between residues
    blocks: tuple  # (d_info, d_red) per block of the first-party marginals
    marginal_decomposition: DecomposedFamily


def sequential_clonability(chis, d_first: int, d_second: int, seed: int = 0, tol: Tolerances = DEFAULT_TOL) -> SequentialCloneReport:
    """Whether bipartite states survive cloning of their first party.

    Decomposes the first-party marginals; the parts of each chi that a
    cloner must both keep and copy are the per-block residues obtained by
    compressing the first party onto a block and tracing out its
    information factor. Cloning is possible iff, within every block, the
    residues of different states are mutually orthogonal (normalized
    overlap <= 1e-8). When all inputs are pure the equivalent
    pairwise-overlap shortcut (|<chi_s|chi_t>| near 0 or 1) decides the
    flag directly.
    """
    mats = [as_complex_matrix(c) for c in chis]
    if len(mats) < 2:
        raise ValidationError("need at least two states to clone against each other")
    d = d_first * d_second
    for i, m in enumerate(mats):
        if m.shape != (d, d):
            raise DimensionMismatch(
                f"state {i} has shape {m.shape}, expected ({d}, {d})"
            )
    marginals = [partial_trace(m, d_first, d_second, keep="left") for m in mats]
    decomp = decompose(state_family(marginals, tol=tol), seed=seed, tol=tol)

    residues = []
    for m in mats:
        per_block = []
        for l, (di, dr) in enumerate(decomp.structure.blocks):
            embed = decomp.support @ decomp.structure.block_basis(l)  # d_first x di*dr
            lift = np.kron(embed, np.eye(d_second, dtype=complex))
            compressed = lift.conj().T @ m @ lift  # on info (x) red (x) second
            per_block.append(partial_trace(compressed, di, dr * d_second, keep="right"))
        residues.append(tuple(per_block))

    worst = 0.0
    for l in range(decomp.n_blocks):
        for s in range(len(mats)):
            for t in range(s + 1, len(mats)):
                a, b = residues[s][l], residues[t][l]
                na, nb = float(np.linalg.norm(a)), float(np.linalg.norm(b))
                if na <= tol.tol_zero or nb <= tol.tol_zero:
                    continue
                overlap = abs(complex(np.vdot(a.reshape(-1), b.reshape(-1)))) / (na * nb)
                worst = max(worst, overlap)
    clonable = worst <= 1e-8

    ranks = [np.linalg.matrix_rank(m, tol=1e-9 * max(1.0, float(np.linalg.norm(m)))) for m in mats]
    if all(r == 1 for r in ranks):
        vecs = []
        for m in mats:
            w, v = np.linalg.eigh(hermitian_part(m))
            vecs.append(v[:, -1] * np.sqrt(max(float(w[-1]), 0.0)))
        clonable = True
        for s in range(len(vecs)):
            for t in range(s + 1, len(vecs)):
                ov = abs(complex(np.vdot(vecs[s], vecs[t])))
                ov /= max(float(np.linalg.norm(vecs[s]) * np.linalg.norm(vecs[t])), tol.tol_zero)
                if min(ov, abs(1.0 - ov)) > 1e-8:
                    clonable = False
    return SequentialCloneReport(
        clonable, tuple(residues), worst, decomp.structure.blocks, decomp
    )


@dataclass(frozen=True)
class BlockEntropy:
    weight: float  # average probability of the block
    info_bits: float  # entropy of the averaged information state
    red_bits: float  # entropy of the redundant state


@dataclass(frozen=True)
class EntropyReport:
    """Information split of an ensemble along its decomposition, in bits.

    classical: entropy of the block label; nonclassical: average entropy of
    the information factors; redundant: average entropy of the redundant
    factors. Blind compression of the ensemble costs classical +
    nonclassical qubits per state, of which the classical part may travel
    over a classical channel, and teleportation consumes nonclassical ebits.
    """

    classical: float
    nonclassical: float
    redundant: float
    per_block: tuple

    @property
    def total(self) -> float:
        return self.classical + self.nonclassical + self.redundant

    @property
    def compression_qubits(self) -> float:
        return self.classical + self.nonclassical

    @property
    def classical_replaceable_bits(self) -> float:
        return self.classical

    @property
    def teleport_ebits(self) -> float:
        return self.nonclassical


def entropy_report(decomp: DecomposedFamily, weights=None, tol: Tolerances = DEFAULT_TOL) -> EntropyReport:
    """Classical/nonclassical/redundant entropy split of a weighted family.

    Weights default to the family's own (or uniform); they must be strictly
    positive and sum to 1 within tol_trace (BadWeights otherwise). The
    three components add up to the entropy of the weighted average state,
    and they are additive under `tensor_structure`.
    """
    n = len(decomp.family)
    if weights is None:
        pw = decomp.family.effective_weights()
    else:
        pw = np.asarray(weights, dtype=float)
        if pw.ndim != 1 or pw.shape[0] != n:
            raise BadWeights(f"need {n} weights, got shape {pw.shape}")
        if not np.all(np.isfinite(pw)) or np.any(pw <= 0):
            raise BadWeights("weights must be finite and strictly positive")
        if abs(float(pw.sum()) - 1.0) > tol.tol_trace:
            raise BadWeights(f"weights sum to {pw.sum()!r}, expected 1")
    p_blocks = pw @ decomp.weights  # average probability per block
    per_block = []
    nonclassical = 0.0
    redundant = 0.0
    for l, (di, _) in enumerate(decomp.structure.blocks):
        p_l = float(p_blocks[l])
        acc = np.zeros((di, di), dtype=complex)
        for s in range(n):
            info = decomp.info_states[s][l]
            if info is not None:
                acc += pw[s] * float(decomp.weights[s, l]) * info.mat
        if p_l > tol.tol_zero:
            info_bits = von_neumann_entropy(acc / p_l, tol)
        else:
            info_bits = 0.0
        red_bits = entropy_of_spectrum(decomp.red_spectra[l])
        nonclassical += p_l * info_bits
        redundant += p_l * red_bits
        per_block.append(BlockEntropy(p_l, info_bits, red_bits))
    classical = entropy_of_spectrum(p_blocks)
    return EntropyReport(classical, nonclassical, redundant, tuple(per_block))
