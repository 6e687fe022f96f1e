import numpy as np
import pytest

from crossings import finitelab as fl


FLIP = fl.FiniteChain.from_matrix([[0, 1], [1, 0]])
CYCLE3 = fl.FiniteChain.from_matrix([[0, 1, 0], [0, 0, 1], [1, 0, 0]])
TWO = fl.FiniteChain.from_matrix([[0.9, 0.1], [0.2, 0.8]])


def birth_death(n=5, up=0.4, down=0.3):
    P = np.zeros((n, n))
    for i in range(n):
        if i > 0:
            P[i, i - 1] = down
        if i < n - 1:
            P[i, i + 1] = up
        P[i, i] = 1 - P[i].sum()
    return fl.FiniteChain.from_matrix(P)


# ---------------------------------------------------------------------------
# independent oracles: truncated power series instead of linear solves

def first_passage_series(P, src, dst, n_terms=20000, tol=1e-16):
    """Distribution of the first dst-visit from each src state, by iteration."""
    Q = P[np.ix_(src, src)]
    R = P[np.ix_(src, dst)]
    acc = R.copy()
    term = Q @ R
    for _ in range(n_terms):
        acc += term
        if term.max() < tol:
            break
        term = Q @ term
    return acc


def occupation_series(P, A, Ac, n_terms=20000, tol=1e-16):
    """Expected visits before the first re-entrance into A, by iteration."""
    n = P.shape[0]
    occ = np.zeros((len(A), n))
    # doubled space: phase 0 lives on A, phase 1 on Ac; absorbing on return
    T = np.zeros((len(A) + len(Ac), len(A) + len(Ac)))
    T[:len(A), :len(A)] = P[np.ix_(A, A)]
    T[:len(A), len(A):] = P[np.ix_(A, Ac)]
    T[len(A):, len(A):] = P[np.ix_(Ac, Ac)]
    v = np.zeros((len(A), len(A) + len(Ac)))
    v[:, :len(A)] = np.eye(len(A))
    for _ in range(n_terms):
        occ[:, A] += v[:, :len(A)]
        occ[:, Ac] += v[:, len(A):]
        if v.max() < tol:
            break
        v = v @ T
    return occ


# ---------------------------------------------------------------------------
# stationary vectors and duals

def test_stationary_examples():
    assert FLIP.mu.tolist() == [0.5, 0.5]
    assert np.allclose(CYCLE3.mu, 1 / 3, atol=1e-14)
    assert np.allclose(TWO.mu, [2 / 3, 1 / 3], atol=1e-12)


def test_stationary_residual_tight():
    rng = np.random.default_rng(0)
    for _ in range(20):
        ch = fl.random_irreducible_chain(7, rng)
        assert np.max(np.abs(ch.mu @ ch.P - ch.mu)) <= 1e-12
        assert ch.mu.sum() == pytest.approx(1.0, abs=1e-12)


def test_reducible_reports_classes():
    P = np.array([[1.0, 0.0], [0.0, 1.0]])
    with pytest.raises(fl.ReducibleChainError) as exc:
        fl.stationary_vector(P)
    assert len(exc.value.components) == 2


def test_dual_examples():
    # doubly stochastic: dual is the transpose
    assert np.allclose(fl.dual_kernel(CYCLE3), CYCLE3.P.T, atol=1e-14)
    # reversible birth-death: self-dual
    bd = birth_death()
    assert np.allclose(fl.dual_kernel(bd), bd.P, atol=1e-12)
    # the 2-state example is self-dual too: (2/3 * 0.1) / (1/3) = 0.2
    assert np.allclose(fl.dual_kernel(TWO), TWO.P, atol=1e-12)


def test_dual_involution_and_invariance():
    rng = np.random.default_rng(5)
    for _ in range(20):
        ch = fl.random_irreducible_chain(6, rng)
        Phat = fl.dual_kernel(ch)
        assert np.max(np.abs(ch.mu @ Phat - ch.mu)) < 1e-12
        chhat = fl.FiniteChain(P=Phat, mu=ch.mu)
        assert np.max(np.abs(fl.dual_kernel(chhat) - ch.P)) <= 1e-12


# ---------------------------------------------------------------------------
# kernels

def test_entrance_kernel_cycle():
    part = fl.Bipartition.of(3, [1, 2])
    K, dag = fl.entrance_kernel_exact(CYCLE3, part)
    assert np.allclose(K, [[1, 0], [1, 0]], atol=1e-14)
    assert np.allclose(dag, 0, atol=1e-14)


def test_entrance_kernel_flip():
    K, _ = fl.entrance_kernel_exact(FLIP, fl.Bipartition.of(2, [1]))
    assert np.allclose(K, [[1.0]])


def test_exit_kernel_examples():
    assert np.allclose(fl.exit_kernel_exact(CYCLE3, fl.Bipartition.of(3, [1, 2]))[0],
                       [[1.0]])
    assert np.allclose(fl.exit_kernel_exact(FLIP, fl.Bipartition.of(2, [1]))[0],
                       [[1.0]])


def test_kernels_stochastic_random():
    rng = np.random.default_rng(1)
    for _ in range(30):
        ch = fl.random_irreducible_chain(6, rng)
        part = fl.random_bipartition(6, rng)
        K, dag = fl.entrance_kernel_exact(ch, part)
        assert np.all(K >= -1e-14)
        assert np.allclose(K.sum(axis=1) + dag, 1.0, atol=1e-12)
        Kx, dagx = fl.exit_kernel_exact(ch, part)
        assert np.all(Kx >= -1e-14)
        assert np.allclose(Kx.sum(axis=1) + dagx, 1.0, atol=1e-12)


def test_kernels_match_power_series_oracle():
    rng = np.random.default_rng(42)
    ch = fl.random_irreducible_chain(6, rng)
    part = fl.random_bipartition(6, rng)
    A, Ac = part.A, part.Ac
    G = first_passage_series(ch.P, A, Ac)
    H = first_passage_series(ch.P, Ac, A)
    K, _ = fl.entrance_kernel_exact(ch, part)
    assert np.allclose(K, G @ H, atol=1e-12)
    occ = occupation_series(ch.P, A, Ac)
    assert np.allclose(fl.occupation_matrix(ch, part), occ, atol=1e-11)


def test_exit_rows_outside_exit_set_go_to_cemetery():
    # state 2 can only reach A={0} through state 1: it is outside the exit set
    P = np.array([
        [0.2, 0.4, 0.4],
        [0.5, 0.5, 0.0],
        [0.0, 0.5, 0.5],
    ])
    ch = fl.FiniteChain.from_matrix(P)
    part = fl.Bipartition.of(3, [0])
    K, dag = fl.exit_kernel_exact(ch, part)
    assert dag[1] == pytest.approx(1.0)   # Ac order is [1, 2]; state 2 is row 1
    assert K[1].sum() == pytest.approx(0.0)
    assert K[0].sum() == pytest.approx(1.0, abs=1e-12)


# ---------------------------------------------------------------------------
# measures and identities

def test_measures_cycle():
    part = fl.Bipartition.of(3, [1, 2])
    nu = fl.entrance_measure(CYCLE3, part)
    assert np.allclose(nu, [1 / 3, 0], atol=1e-14)
    nux = fl.exit_measure(CYCLE3, part)
    assert np.allclose(nux, [1 / 3], atol=1e-14)


def test_measures_flip():
    assert np.allclose(fl.entrance_measure(FLIP, fl.Bipartition.of(2, [1])), [0.5])


def test_entrance_exit_total_masses_agree():
    rng = np.random.default_rng(9)
    for _ in range(25):
        ch = fl.random_irreducible_chain(5, rng)
        part = fl.random_bipartition(5, rng)
        assert (fl.entrance_measure(ch, part).sum()
                == pytest.approx(fl.exit_measure(ch, part).sum(), abs=1e-13))


def test_invariance_examples():
    part = fl.Bipartition.of(3, [1, 2])
    K, _ = fl.entrance_kernel_exact(CYCLE3, part)
    assert fl.verify_invariance(fl.entrance_measure(CYCLE3, part), K) == 0.0
    pf = fl.Bipartition.of(2, [1])
    Kx, _ = fl.exit_kernel_exact(FLIP, pf)
    assert fl.verify_invariance(fl.exit_measure(FLIP, pf), Kx) == 0.0


def test_kac_cycle_and_flip():
    assert np.allclose(fl.kac_reconstruct(CYCLE3, fl.Bipartition.of(3, [1, 2])),
                       CYCLE3.mu, atol=1e-14)
    assert np.allclose(fl.kac_reconstruct(FLIP, fl.Bipartition.of(2, [1])),
                       FLIP.mu, atol=1e-14)


def test_kac_split_cycle():
    push, split = fl.kac_split_check(CYCLE3, fl.Bipartition.of(3, [1, 2]))
    assert push == 0.0 and split == 0.0


def test_duality_flip_and_birth_death():
    assert fl.duality_check(FLIP, fl.Bipartition.of(2, [1])) == 0.0
    bd = birth_death()
    assert fl.duality_check(bd, fl.Bipartition.of(5, [0, 1, 2])) <= 1e-12


def test_reverse_inducing_examples():
    assert fl.reverse_inducing_check(CYCLE3, fl.Bipartition.of(3, [1, 2])) <= 1e-14
    assert fl.reverse_inducing_check(FLIP, fl.Bipartition.of(2, [1])) <= 1e-14


def test_property_suite_100_random_instances():
    out = fl.identity_suite(100, 6, seed=20240815)
    assert out["pass"], out["worst"]
    assert max(out["worst"].values()) <= 1e-10


def test_scale_equivariance():
    rng = np.random.default_rng(3)
    ch = fl.random_irreducible_chain(6, rng)
    part = fl.random_bipartition(6, rng)
    c = 3.75
    scaled = fl.FiniteChain(P=ch.P, mu=ch.mu * c)
    assert np.allclose(fl.entrance_measure(scaled, part),
                       c * fl.entrance_measure(ch, part), rtol=1e-13)
    assert np.allclose(fl.exit_measure(scaled, part),
                       c * fl.exit_measure(ch, part), rtol=1e-13)
    assert np.allclose(fl.kac_reconstruct(scaled, part),
                       c * fl.kac_reconstruct(ch, part), rtol=1e-12)


def test_swap_symmetry():
    rng = np.random.default_rng(8)
    for _ in range(10):
        ch = fl.random_irreducible_chain(5, rng)
        part = fl.random_bipartition(5, rng)
        dual = fl.FiniteChain(P=fl.dual_kernel(ch), mu=ch.mu)
        assert np.allclose(fl.exit_measure(dual, part.swapped()),
                           fl.entrance_measure(ch, part), atol=1e-13)


def test_unit_eigenvalue_simple():
    K, _ = fl.entrance_kernel_exact(CYCLE3, fl.Bipartition.of(3, [1, 2]))
    assert fl.unit_eigenvalue_simple(K)
    assert not fl.unit_eigenvalue_simple(np.eye(2))


def test_reverse_inducing_rejects_multiple_recurrent_classes():
    # block-diagonal kernel: two recurrent classes
    P = np.array([
        [0.0, 1.0, 0.0, 0.0],
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [0.0, 0.0, 1.0, 0.0],
    ])
    with pytest.raises(fl.ReducibleChainError):
        fl.stationary_vector(P)


def test_bipartition_validation():
    with pytest.raises(ValueError):
        fl.Bipartition.of(3, [])
    with pytest.raises(ValueError):
        fl.Bipartition.of(3, [0, 1, 2])
    with pytest.raises(ValueError):
        fl.Bipartition.of(3, [5])


def test_chain_validation():
    with pytest.raises(ValueError, match="sum"):
        fl.FiniteChain.from_matrix([[0.5, 0.4], [0.5, 0.5]])
    with pytest.raises(ValueError, match="negative"):
        fl.FiniteChain.from_matrix([[1.2, -0.2], [0.5, 0.5]])
    with pytest.raises(ValueError, match="invariant"):
        fl.FiniteChain(P=np.array([[0.9, 0.1], [0.2, 0.8]]),
                       mu=np.array([0.5, 0.5]))


def test_chain_from_spec_rationals():
    chain, part = fl.chain_from_spec({
        "p": [["0", "1"], ["1", "0"]],
        "mu": ["1/2", "1/2"],
        "partition": [1],
    })
    assert chain.n == 2
    assert part.A.tolist() == [1]
    with pytest.raises(KeyError, match="partition"):
        fl.chain_from_spec({"p": [["0", "1"], ["1", "0"]]})
