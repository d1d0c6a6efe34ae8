"""Quantum channels in Kraus form and their structure predicates.

The central fact driving this module: a channel leaves every member of a
state family untouched exactly when, in the family's block/tensor frame, it
acts as the identity on each information factor and as some redundant-factor
channel fixing the block's redundant state. `has_block_form` tests that
shape, `block_channel` constructs channels of that shape, and the two
confinement predicates expose the subspace-leakage arguments behind the
characterization. Gauge independence is obtained by re-deriving canonical
Kraus operators from the Choi matrix before testing anything.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import (
    DimensionMismatch,
    HypothesisFailed,
    KStateNotFixed,
    NotPreserved,
    ValidationError,
)
from .linalg import (
    DEFAULT_TOL,
    DensityMatrix,
    StateFamily,
    Tolerances,
    as_complex_matrix,
    hermitian_part,
    state_family,
    trace_norm,
)
from .structure import Structure

__all__ = [
    "KrausChannel",
    "kraus_channel",
    "identity_channel",
    "apply_channel",
    "apply_to_matrix",
    "choi_matrix",
    "kraus_from_choi",
    "canonical_kraus",
    "PreservationReport",
    "preserves_family",
    "BlockFormReport",
    "has_block_form",
    "block_channel",
    "confines_positive_part",
    "confines_paired_subspace",
    "environment_state",
]


@dataclass(frozen=True)
class KrausChannel:
    """Completely positive trace-preserving map given by Kraus operators."""

    input_dim: int
    output_dim: int
    kraus_ops: tuple

    def __len__(self) -> int:
        return len(self.kraus_ops)


def kraus_channel(ops, tol: Tolerances = DEFAULT_TOL) -> KrausChannel:
    """Validate Kraus operators: shared shape, sum K^dag K = I within 1e-9."""
    mats = [as_complex_matrix(k) for k in ops]
    if not mats:
        raise ValidationError("a channel needs at least one Kraus operator")
    d_out, d_in = mats[0].shape
    for i, k in enumerate(mats):
        if k.shape != (d_out, d_in):
            raise DimensionMismatch(f"Kraus operator {i} has shape {k.shape}, expected {(d_out, d_in)}")
    total = sum(k.conj().T @ k for k in mats)
    defect = float(np.linalg.norm(total - np.eye(d_in)))
    if defect > tol.tol_psd * np.sqrt(d_in):
        raise ValidationError(f"channel is not trace preserving: defect {defect:.3e}")
    frozen = []
    for k in mats:
        k = np.array(k, copy=True)
        k.setflags(write=False)
        frozen.append(k)
    return KrausChannel(d_in, d_out, tuple(frozen))


def identity_channel(dim: int) -> KrausChannel:
    return kraus_channel([np.eye(dim, dtype=complex)])


def apply_to_matrix(channel: KrausChannel, mat) -> np.ndarray:
    """Linear extension of the channel to arbitrary matrices."""
    m = as_complex_matrix(mat)
    if m.shape != (channel.input_dim, channel.input_dim):
        raise DimensionMismatch(
            f"operator of shape {m.shape} does not match channel input dim {channel.input_dim}"
        )
    out = np.zeros((channel.output_dim, channel.output_dim), dtype=complex)
    for k in channel.kraus_ops:
        out += k @ m @ k.conj().T
    return out


def apply_channel(channel: KrausChannel, rho: DensityMatrix, tol: Tolerances = DEFAULT_TOL) -> DensityMatrix:
    out = hermitian_part(apply_to_matrix(channel, rho.mat))
    return DensityMatrix(
        out, float(np.trace(out).real), 0.0, rho.normalized
    )


def choi_matrix(channel: KrausChannel) -> np.ndarray:
    """Choi matrix sum_i vec(K_i) vec(K_i)^dag (row-major vec)."""
    d = channel.input_dim * channel.output_dim
    j = np.zeros((d, d), dtype=complex)
    for k in channel.kraus_ops:
        v = k.reshape(-1)
        j += np.outer(v, v.conj())
    return hermitian_part(j)


def kraus_from_choi(choi, input_dim: int, output_dim: int, tol: Tolerances = DEFAULT_TOL) -> KrausChannel:
    """Canonical Kraus operators from a Choi matrix (eigenvectors, scaled).

    Eigenvalues below tol_zero times the largest are dropped; slightly
    negative ones from numerical noise are clipped.
    """
    j = hermitian_part(choi)
    if j.shape != (input_dim * output_dim,) * 2:
        raise DimensionMismatch("Choi matrix shape does not match the given dimensions")
    w, v = np.linalg.eigh(j)
    lmax = max(float(w[-1]), 0.0)
    ops = []
    for i in range(w.size):
        if w[i] > tol.tol_zero * max(1.0, lmax):
            ops.append(np.sqrt(w[i]) * v[:, i].reshape(output_dim, input_dim))
    return kraus_channel(ops, tol)


def canonical_kraus(channel: KrausChannel, tol: Tolerances = DEFAULT_TOL) -> KrausChannel:
    """Gauge-fixed Kraus representation derived from the Choi matrix."""
    return kraus_from_choi(choi_matrix(channel), channel.input_dim, channel.output_dim, tol)


@dataclass(frozen=True)
class PreservationReport:
    ok: bool
    max_deviation: float  # largest trace-norm change over the family


def preserves_family(channel: KrausChannel, family, tol: Tolerances = DEFAULT_TOL) -> PreservationReport:
    """Whether every family member is a fixed point (trace norm <= 1e-8)."""
    fam = family if isinstance(family, StateFamily) else state_family(family, tol=tol)
    if channel.input_dim != fam.dim or channel.output_dim != fam.dim:
        raise DimensionMismatch("channel dimensions do not match the family")
    worst = 0.0
    for s in fam.states:
        worst = max(worst, trace_norm(apply_to_matrix(channel, s.mat) - s.mat))
    return PreservationReport(worst <= 1e-8, worst)


@dataclass(frozen=True)
class BlockFormReport:
    ok: bool
    max_violation: float
    violations: tuple  # (block, row, col) triples whose matrix unit fails


def has_block_form(channel: KrausChannel, structure: Structure, tol_commute: float = 1e-8, tol: Tolerances = DEFAULT_TOL, support=None) -> BlockFormReport:
    """Whether the channel is identity (x) redundant-channel on every block.

    Equivalent test: every canonical Kraus operator commutes with every
    matrix unit of the structure, within tol_commute per operator pair. The
    canonical representation makes the outcome independent of how the
    channel's Kraus operators were originally presented.

    When the structure lives on a proper subspace of the channel's space,
    pass `support` (an isometry from structure coordinates into the
    channel's coordinates): matrix units are lifted through it and the
    defect additionally counts leakage out of the supported subspace.
    """
    if support is None:
        if channel.input_dim != structure.dim or channel.output_dim != structure.dim:
            raise DimensionMismatch("channel dimensions do not match the structure")
        lift = None
        leak = None
    else:
        emb = np.asarray(support, dtype=complex)
        if emb.shape != (channel.input_dim, structure.dim):
            raise DimensionMismatch(
                f"support embedding has shape {emb.shape}, expected "
                f"({channel.input_dim}, {structure.dim})"
            )
        lift = emb
        leak = np.eye(channel.input_dim) - emb @ emb.conj().T
    ops = canonical_kraus(channel, tol).kraus_ops
    worst = 0.0
    violations = []
    for l, (di, _) in enumerate(structure.blocks):
        for row in range(di):
            for col in range(di):
                unit = structure.matrix_unit(l, row, col)
                if lift is not None:
                    unit = lift @ unit @ lift.conj().T
                defect = 0.0
                for k in ops:
                    scale = max(1.0, float(np.linalg.norm(k)))
                    defect = max(
                        defect, float(np.linalg.norm(k @ unit - unit @ k)) / scale
                    )
                    if leak is not None:
                        defect = max(
                            defect,
                            float(np.linalg.norm(leak @ k @ (lift @ lift.conj().T)))
                            / scale,
                        )
                worst = max(worst, defect)
                if defect > tol_commute:
                    violations.append((l, row, col))
    return BlockFormReport(not violations, worst, tuple(violations))


def block_channel(structure: Structure, per_block, fix_red_state: bool = False, red_states=None, tol: Tolerances = DEFAULT_TOL) -> KrausChannel:
    """Assemble the channel acting as identity (x) per_block[l] on block l.

    Global Kraus operator i is the direct sum over blocks of each block
    channel's i-th Kraus operator (shorter lists are padded with zeros), so
    cross-block coherences are handled consistently and the result is trace
    preserving whenever every block channel is. With `fix_red_state`, each
    block channel must fix the corresponding state in `red_states` within
    1e-8 trace norm (KStateNotFixed otherwise) -- exactly the condition for
    the assembled channel to preserve every family with this structure.
    """
    if len(per_block) != len(structure.blocks):
        raise DimensionMismatch(
            f"need {len(structure.blocks)} block channels, got {len(per_block)}"
        )
    for l, (ch, (_, dr)) in enumerate(zip(per_block, structure.blocks)):
        if ch.input_dim != dr or ch.output_dim != dr:
            raise DimensionMismatch(
                f"block {l} channel acts on dim {ch.input_dim}, expected {dr}"
            )
    if fix_red_state:
        if red_states is None or len(red_states) != len(per_block):
            raise ValidationError("fix_red_state requires one redundant state per block")
        for l, (ch, red) in enumerate(zip(per_block, red_states)):
            red_mat = as_complex_matrix(red)
            dev = trace_norm(apply_to_matrix(ch, red_mat) - red_mat)
            if dev > 1e-8:
                raise KStateNotFixed(
                    f"block {l} channel moves its redundant state by {dev:.3e}"
                )
    n_ops = max(len(ch.kraus_ops) for ch in per_block)
    g = structure.transform
    ops = []
    for i in range(n_ops):
        inner = np.zeros((structure.dim, structure.dim), dtype=complex)
        for l, (ch, (di, dr)) in enumerate(zip(per_block, structure.blocks)):
            if i >= len(ch.kraus_ops):
                continue
            off = structure.block_offset(l)
            sz = di * dr
            inner[off : off + sz, off : off + sz] = np.kron(
                np.eye(di), ch.kraus_ops[i]
            )
        ops.append(g.conj().T @ inner @ g)
    return kraus_channel(ops, tol)


def confines_positive_part(channel: KrausChannel, obs, tol: Tolerances = DEFAULT_TOL) -> bool:
    """No leakage out of the positive eigenspace of a preserved observable.

    Requires T(obs) = obs within 1e-8 (NotPreserved otherwise). Returns True
    iff (I - P) K P = 0 within 1e-8 for every canonical Kraus operator K,
    with P the projector onto the strictly positive eigenspace of obs. For a
    preserved observable this always holds; the predicate exists so the
    leakage argument is directly checkable.
    """
    o = hermitian_part(obs)
    dev = float(np.linalg.norm(apply_to_matrix(channel, o) - o))
    if dev > 1e-8 * max(1.0, float(np.linalg.norm(o))):
        raise NotPreserved(f"channel moves the observable by {dev:.3e}")
    w, v = np.linalg.eigh(o)
    lmax = float(np.abs(w).max())
    if lmax <= tol.tol_zero:
        raise NotPreserved("observable is numerically zero")
    pos = v[:, w > tol.tol_rank * lmax]
    p = pos @ pos.conj().T
    comp = np.eye(channel.input_dim) - p
    worst = 0.0
    for k in canonical_kraus(channel, tol).kraus_ops:
        worst = max(
            worst,
            float(np.linalg.norm(comp @ k @ p)) / max(1.0, float(np.linalg.norm(k))),
        )
    return worst <= 1e-8


def confines_paired_subspace(channel: KrausChannel, rho, p1, p2, tol: Tolerances = DEFAULT_TOL) -> bool:
    """Leakage confinement transfers across a preserved state's support split.

    Hypotheses (HypothesisFailed if any is violated): P1 and P2 are
    orthogonal projectors summing to the support projector of rho, the
    channel fixes rho, and no canonical Kraus operator leaks out of P1.
    Returns True iff no canonical Kraus operator leaks out of P2 either,
    within 1e-8.
    """
    r = hermitian_part(rho)
    q1 = hermitian_part(p1)
    q2 = hermitian_part(p2)
    d = channel.input_dim
    for name, q in (("p1", q1), ("p2", q2)):
        if float(np.linalg.norm(q @ q - q)) > 1e-8 * d:
            raise HypothesisFailed(f"{name} is not an orthogonal projector")
    if float(np.linalg.norm(q1 @ q2)) > 1e-8 * d:
        raise HypothesisFailed("p1 and p2 are not orthogonal to each other")
    w, v = np.linalg.eigh(r)
    lmax = max(float(w[-1]), 0.0)
    if lmax <= tol.tol_zero:
        raise HypothesisFailed("state is numerically zero")
    keep = v[:, w > tol.tol_rank * lmax]
    p_sup = keep @ keep.conj().T
    if float(np.linalg.norm(q1 + q2 - p_sup)) > 1e-8 * d:
        raise HypothesisFailed("p1 + p2 does not equal the support projector of rho")
    dev = trace_norm(apply_to_matrix(channel, r) - r)
    if dev > 1e-8:
        raise HypothesisFailed(f"channel moves the state by {dev:.3e}")
    eye = np.eye(d)
    ops = canonical_kraus(channel, tol).kraus_ops
    leak1 = max(
        float(np.linalg.norm((eye - q1) @ k @ q1)) / max(1.0, float(np.linalg.norm(k)))
        for k in ops
    )
    if leak1 > 1e-8:
        raise HypothesisFailed(f"channel already leaks out of p1 by {leak1:.3e}")
    leak2 = max(
        float(np.linalg.norm((eye - q2) @ k @ q2)) / max(1.0, float(np.linalg.norm(k)))
        for k in ops
    )
    return leak2 <= 1e-8


def environment_state(channel: KrausChannel, rho) -> np.ndarray:
    """State left in the environment of the channel's isometric dilation.

    Entry (i, j) is Tr(K_i rho K_j^dag) for the channel's own Kraus list,
    i.e. the environment basis is tied to that list; compare environment
    states across inputs only for a fixed channel object.
    """
    m = as_complex_matrix(rho)
    n = len(channel.kraus_ops)
    env = np.zeros((n, n), dtype=complex)
    for i, ki in enumerate(channel.kraus_ops):
        for j, kj in enumerate(channel.kraus_ops):
            env[i, j] = np.trace(ki @ m @ kj.conj().T)
    return hermitian_part(env)
