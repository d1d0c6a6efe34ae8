"""Shared generators for the test suite.

Everything here is seeded through numpy Generators passed in by the caller,
so individual tests stay reproducible in isolation.
"""

import json

import numpy as np

from kidecomp import (
    block_channel,
    kraus_channel,
    kraus_from_choi,
    state_family,
)
from kidecomp.linalg import density_matrix
from kidecomp.structure import DecomposedFamily, Structure


def haar_unitary(rng, d):
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_density(rng, d, rank=None):
    rank = d if rank is None else rank
    a = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    m = a @ a.conj().T
    return m / np.trace(m).real


def random_pure(rng, d):
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return v / np.linalg.norm(v)


def build_family(rng, blocks, n_states, scramble=True, red_rank=None, pad_to=None, equal_weights=False):
    """Plant a known block/tensor structure and scramble it.

    Returns a dict with the ambient states, the planted data (unitary, per
    block redundant states, weight matrix) and bookkeeping dims. `pad_to`
    embeds the construction into a larger space so the family average has a
    proper support subspace. `equal_weights` gives every member the same
    block probabilities.
    """
    dim = sum(a * b for a, b in blocks)
    total = dim if pad_to is None else pad_to
    assert total >= dim
    u = haar_unitary(rng, total)
    red = [random_density(rng, b, rank=red_rank) for _, b in blocks]
    if equal_weights:
        weights = np.tile(rng.dirichlet([2.0] * len(blocks)), (n_states, 1))
    else:
        weights = rng.dirichlet([2.0] * len(blocks), size=n_states)
    if not scramble:
        u = np.eye(total, dtype=complex)
    states = []
    for s in range(n_states):
        m = np.zeros((total, total), dtype=complex)
        off = 0
        for l, (a, b) in enumerate(blocks):
            m[off : off + a * b, off : off + a * b] = weights[s, l] * np.kron(
                random_density(rng, a), red[l]
            )
            off += a * b
        states.append(u @ m @ u.conj().T)
    return {
        "states": states,
        "unitary": u,
        "red": red,
        "weights": weights,
        "blocks": [tuple(b) for b in blocks],
        "dim": total,
        "planted_dim": dim,
    }


def random_blocks(rng, max_total=12, max_factor=3):
    """Random multiset of (d_info, d_red) with the total dimension capped."""
    blocks = []
    total = 0
    while True:
        a = int(rng.integers(1, max_factor + 1))
        b = int(rng.integers(1, max_factor + 1))
        if total + a * b > max_total:
            if blocks:
                return blocks
            continue
        blocks.append((a, b))
        total += a * b
        if total == max_total or rng.random() < 0.35:
            return blocks


def random_cptp(rng, d_in, d_out=None, n_kraus=None):
    d_out = d_in if d_out is None else d_out
    n_kraus = d_in if n_kraus is None else n_kraus
    # the stacked Kraus block must be a tall isometry
    n_kraus = max(n_kraus, -(-d_in // d_out))
    z = rng.standard_normal((d_out * n_kraus, d_in)) + 1j * rng.standard_normal(
        (d_out * n_kraus, d_in)
    )
    q, _ = np.linalg.qr(z)
    ops = [q[i * d_out : (i + 1) * d_out, :] for i in range(n_kraus)]
    return kraus_channel(ops)


def red_fixing_channel(rng, red, strength=0.5):
    """Channel on the redundant factor that fixes `red` with full Kraus span."""
    b = red.shape[0]
    lam, vecs = np.linalg.eigh(red)
    f = haar_unitary(rng, b)
    ops = [np.sqrt(1.0 - strength) * np.eye(b, dtype=complex)]
    for j in range(b):
        for i in range(b):
            ops.append(
                np.sqrt(strength * max(lam[j], 0.0))
                * np.outer(vecs[:, j], f[:, i].conj())
            )
    return kraus_channel([op for op in ops if np.linalg.norm(op) > 1e-14])


def preserving_block_channel(rng, decomp, strength=None):
    """Random family-preserving channel assembled blockwise."""
    per = []
    for l, (_, dr) in enumerate(decomp.structure.blocks):
        s = rng.uniform(0.2, 0.8) if strength is None else strength
        per.append(red_fixing_channel(rng, decomp.red_states[l].mat, s))
    return block_channel(
        decomp.structure,
        per,
        fix_red_state=True,
        red_states=[r.mat for r in decomp.red_states],
    )


def rotated_info_channel(rng, decomp, angle):
    """Unitary channel rotating one info factor by `angle`; breaks block form."""
    target = None
    for l, (di, _) in enumerate(decomp.structure.blocks):
        if di >= 2:
            target = l
            break
    assert target is not None, "needs a block with d_info >= 2"
    di, dr = decomp.structure.blocks[target]
    g = np.eye(di, dtype=complex)
    c, s = np.cos(angle), np.sin(angle)
    g[0, 0], g[0, 1], g[1, 0], g[1, 1] = c, -s, s, c
    inner = np.eye(decomp.structure.dim, dtype=complex)
    off = decomp.structure.block_offset(target)
    sz = di * dr
    inner[off : off + sz, off : off + sz] = np.kron(g, np.eye(dr))
    tr = decomp.structure.transform
    emb = decomp.support
    d0 = emb.shape[0]
    rot = emb @ tr.conj().T @ inner @ tr @ emb.conj().T
    rot = rot + (np.eye(d0) - emb @ emb.conj().T)
    return kraus_channel([rot])


def preservation_constraints(states, d):
    """Linear system (A, b): trace preservation plus T(rho_s) = rho_s rows,
    acting on the channel's Choi matrix flattened row-major."""
    cols = d * d * d * d
    a_tp = np.zeros((d * d, cols), dtype=complex)
    for j in range(d):
        for l in range(d):
            row = np.zeros((d, d, d, d), dtype=complex)
            for i in range(d):
                row[i, j, i, l] = 1.0
            a_tp[j * d + l] = row.reshape(-1)
    parts = [a_tp]
    rhs = [np.eye(d, dtype=complex).reshape(-1)]
    for rho in states:
        a_fx = np.zeros((d * d, cols), dtype=complex)
        for i in range(d):
            for k in range(d):
                row = np.zeros((d, d, d, d), dtype=complex)
                row[i, :, k, :] = rho
                a_fx[i * d + k] = row.reshape(-1)
        parts.append(a_fx)
        rhs.append(rho.reshape(-1))
    return np.vstack(parts), np.concatenate(rhs)


def commuting_face(blocks, u, d):
    """Orthonormal columns spanning vec of u (sum_l I x B_l) u^dag."""
    cols = []
    off = 0
    for a, b in blocks:
        for p in range(b):
            for q in range(b):
                unit = np.zeros((b, b), dtype=complex)
                unit[p, q] = 1.0
                k = np.zeros((d, d), dtype=complex)
                k[off : off + a * b, off : off + a * b] = np.kron(
                    np.eye(a, dtype=complex), unit
                )
                k = u @ k @ u.conj().T
                cols.append(k.reshape(-1) / np.sqrt(a))
        off += a * b
    return np.array(cols).T


def projected_preserving_channel(rng, built):
    """Family-preserving channel from constraint projection.

    Starts from a strictly interior feasible Choi matrix (a mixture, over
    blocks, of channels acting as the identity off one block while replacing
    that block's redundant factor), least-squares-projects a random Hermitian
    perturbation onto the affine preservation constraints restricted to the
    cone face selected by the planted structure, then steps as far as the
    cone allows. The family's computed decomposition never enters.
    """
    d = built["dim"]
    assert built["planted_dim"] == d, "needs a full-support family"
    a_mat, b_vec = preservation_constraints(built["states"], d)
    v = commuting_face(built["blocks"], built["unitary"], d)
    r = v.shape[1]
    lift = np.einsum("ar,bs->abrs", v, v.conj()).reshape(d * d * d * d, r * r)
    a2 = a_mat @ lift
    a2p = np.linalg.pinv(a2, rcond=1e-10)
    # base point: mix, over blocks, the channel acting as identity everywhere
    # except a full-span replace-with-red mixture on one block; its face
    # coefficient matrix is strictly positive, i.e. relative interior
    u = built["unitary"]
    blocks = built["blocks"]
    m0 = np.zeros((r, r), dtype=complex)
    for target in range(len(blocks)):
        per = []
        for l, (_, b) in enumerate(blocks):
            if l == target:
                lam, vecs = np.linalg.eigh(built["red"][l])
                f = haar_unitary(rng, b)
                ops = [np.sqrt(0.5) * np.eye(b, dtype=complex)]
                for j in range(b):
                    for i in range(b):
                        ops.append(
                            np.sqrt(0.5 * max(lam[j], 0.0))
                            * np.outer(vecs[:, j], f[:, i].conj())
                        )
                per.append(ops)
            else:
                per.append([np.eye(b, dtype=complex)])
        n_ops = max(len(p) for p in per)
        choi_t = np.zeros((d * d, d * d), dtype=complex)
        for i in range(n_ops):
            inner = np.zeros((d, d), dtype=complex)
            off = 0
            for l, (a, b) in enumerate(blocks):
                if i < len(per[l]):
                    inner[off : off + a * b, off : off + a * b] = np.kron(
                        np.eye(a), per[l][i]
                    )
                off += a * b
            k = (u @ inner @ u.conj().T).reshape(-1)
            choi_t += np.outer(k, k.conj())
        m0 += v.conj().T @ choi_t @ v / len(blocks)
    m0 = 0.5 * (m0 + m0.conj().T)
    base_aff = float(np.linalg.norm(a2 @ m0.reshape(-1) - b_vec))
    base_min = float(np.linalg.eigvalsh(m0).min())
    assert base_aff < 1e-10, f"base point misses the constraints by {base_aff:.3e}"
    assert base_min > 1e-8, f"base point not interior: min eig {base_min:.3e}"
    g0 = rng.standard_normal((r, r)) + 1j * rng.standard_normal((r, r))
    g0 = 0.5 * (g0 + g0.conj().T)
    g = g0.reshape(-1) - a2p @ (a2 @ g0.reshape(-1))
    g = g.reshape(r, r)
    g = 0.5 * (g + g.conj().T)
    gnorm = float(np.linalg.norm(g))
    if gnorm > 1e-12:
        lam0, u0 = np.linalg.eigh(m0)
        isqrt = (u0 * (1.0 / np.sqrt(np.clip(lam0, 1e-14, None)))) @ u0.conj().T
        smin = float(np.linalg.eigvalsh(isqrt @ g @ isqrt).min())
        t_max = np.inf if smin >= -1e-15 else 1.0 / (-smin)
        t = min(t_max * rng.uniform(0.3, 0.9), 10.0 / gnorm)
        m0 = m0 + t * g
        w, vv = np.linalg.eigh(m0)
        m0 = (vv * np.clip(w, 0, None)) @ vv.conj().T
    choi = (v @ m0 @ v.conj().T).reshape(d * d, d * d)
    return kraus_from_choi(choi, d, d)


def trivial_decomp_of(states):
    """Hand-coarsened alternative: a single block holding each state whole."""
    fam = state_family(states)
    d = states[0].shape[0]
    st = Structure(d, ((d, 1),), np.eye(d, dtype=complex))
    return DecomposedFamily(
        family=fam,
        structure=st,
        support=np.eye(d, dtype=complex),
        weights=np.ones((len(states), 1)),
        info_states=tuple((density_matrix(s),) for s in states),
        red_states=(density_matrix(np.eye(1, dtype=complex)),),
        red_spectra=((1.0,),),
    )


def split_decomp_identical_pair(p=0.75):
    """Hand-split alternative for {rho, rho}: pretends the eigenbasis carries
    classical information."""
    rho = np.diag([p, 1.0 - p]).astype(complex)
    fam = state_family([rho, rho])
    st = Structure(2, ((1, 1), (1, 1)), np.eye(2, dtype=complex))
    one = density_matrix(np.eye(1, dtype=complex))
    return DecomposedFamily(
        family=fam,
        structure=st,
        support=np.eye(2, dtype=complex),
        weights=np.array([[p, 1.0 - p], [p, 1.0 - p]]),
        info_states=((one, one), (one, one)),
        red_states=(one, one),
        red_spectra=((1.0,), (1.0,)),
    )


def family_payload(mats, labels=None, weights=None, dim=None, factor_dims=None, tolerances=None):
    dim = mats[0].shape[0] if dim is None else dim
    states = []
    for i, m in enumerate(mats):
        entry = {
            "label": labels[i] if labels else f"state{i}",
            "matrix": [[[float(x.real), float(x.imag)] for x in row] for row in np.asarray(m, dtype=complex)],
        }
        if weights is not None:
            entry["weight"] = float(weights[i])
        states.append(entry)
    payload = {"version": "1", "dim": int(dim), "states": states}
    if factor_dims is not None:
        payload["factor_dims"] = [int(x) for x in factor_dims]
    if tolerances is not None:
        payload["tolerances"] = tolerances
    return payload


def write_family_file(path, mats, **kw):
    payload = family_payload(mats, **kw)
    with open(path, "w") as fh:
        json.dump(payload, fh)
    return path


def write_kraus_file(path, ops, input_dim=None, output_dim=None):
    ops = [np.asarray(k, dtype=complex) for k in ops]
    input_dim = ops[0].shape[1] if input_dim is None else input_dim
    payload = {
        "version": "1",
        "input_dim": int(input_dim),
        "kraus": [[[[float(x.real), float(x.imag)] for x in row] for row in k] for k in ops],
    }
    if output_dim is not None:
        payload["output_dim"] = int(output_dim)
    with open(path, "w") as fh:
        json.dump(payload, fh)
    return path


def weights_match(got, want, atol=1e-6):
    """Column-permutation-tolerant comparison of weight matrices."""
    got = np.asarray(got, dtype=float)
    want = np.asarray(want, dtype=float)
    if got.shape != want.shape:
        return False
    import itertools

    for perm in itertools.permutations(range(want.shape[1])):
        if np.allclose(got[:, list(perm)], want, atol=atol):
            return True
    return False
