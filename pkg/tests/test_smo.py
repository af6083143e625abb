import json

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from termlab.errors import InputError
from termlab.learner.smo import (
    CLASSIFICATION,
    REGRESSION,
    KernelRows,
    KernelSpec,
    SvmModel,
    kkt_violation,
    smo_train,
)

XOR_X = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]])
XOR_Y = np.array([-1, -1, 1, 1])


def dual_problem(x, y, task, gamma, epsilon=0.1):
    k = oracles.rbf(np.asarray(x, float), gamma)
    if task == CLASSIFICATION:
        y = np.asarray(y, float)
        return np.outer(y, y) * k, -np.ones(len(y)), y
    n = len(y)
    signs = np.r_[np.ones(n), -np.ones(n)]
    k2 = np.block([[k, k], [k, k]])
    return np.outer(signs, signs) * k2, np.r_[epsilon - y, epsilon + y], signs


def random_problem(rng, task, n=None):
    n = n or int(rng.integers(4, 31))
    x = rng.normal(size=(n, int(rng.integers(1, 4))))
    if task == CLASSIFICATION:
        y = np.where(x[:, 0] + 0.5 * rng.normal(size=n) > 0, 1, -1)
        y[0], y[1] = 1, -1
    else:
        y = np.sin(x[:, 0]) + 0.1 * rng.normal(size=n)
    return x, y


def test_separable_pair():
    m = smo_train([[-1.0], [1.0]], [-1, 1], kernel=KernelSpec("linear"), C=10.0)
    assert m.predict([[-2.0], [2.0]]).tolist() == [-1, 1]
    # maximum-margin solution: w = 1, b = 0
    assert m.decision_function([[0.0], [1.0]]) == pytest.approx([0.0, 1.0], abs=1e-3)


def test_xor_with_rbf():
    m = smo_train(XOR_X, XOR_Y, kernel=KernelSpec("rbf", 1.0), C=10.0)
    assert (m.predict(XOR_X) == XOR_Y).all()
    assert m.kkt_violation <= 1e-3


@pytest.mark.parametrize("task", [CLASSIFICATION, REGRESSION])
def test_objective_matches_qp_oracle(task):
    rng = np.random.default_rng(7 if task == CLASSIFICATION else 8)
    for _ in range(6):
        x, y = random_problem(rng, task, n=20)
        m = smo_train(x, y, task, KernelSpec("rbf", 0.5), C=1.0, tol=1e-6)
        ref = oracles.qp_projected_gradient(*dual_problem(x, y, task, 0.5), 1.0)
        assert abs(m.objective - ref) <= 1e-6


def test_default_tol_objective_is_close():
    # the KKT gap bounds suboptimality only loosely; at the default tol the
    # objective is still within a small absolute margin
    rng = np.random.default_rng(3)
    x, y = random_problem(rng, CLASSIFICATION, n=25)
    m = smo_train(x, y, kernel=KernelSpec("rbf", 1.0))
    ref = oracles.qp_minimum(*dual_problem(x, y, CLASSIFICATION, 1.0), 1.0)
    assert 0 <= m.objective - ref < 1e-3


@pytest.mark.parametrize("task", [CLASSIFICATION, REGRESSION])
def test_feasibility_at_every_iteration(task):
    rng = np.random.default_rng(11)
    x, y = random_problem(rng, task, n=25)
    c = 2.0
    n_vars = 25 if task == CLASSIFICATION else 50
    signs = np.where(np.asarray(y) > 0, 1.0, -1.0) if task == CLASSIFICATION \
        else np.r_[np.ones(25), -np.ones(25)]
    seen = []

    def check(alpha):
        assert alpha.shape == (n_vars,)
        assert alpha.min() >= -1e-9 and alpha.max() <= c + 1e-9
        assert abs(signs @ alpha) <= 1e-9
        seen.append(1)

    m = smo_train(x, y, task, KernelSpec("rbf", 1.0), C=c, callback=check)
    assert len(seen) == m.n_iter > 0
    assert np.abs(m.dual_coef).max() <= c + 1e-9


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([CLASSIFICATION, REGRESSION]))
def test_kkt_gap_below_tol(seed, task):
    x, y = random_problem(np.random.default_rng(seed), task)
    m = smo_train(x, y, task, KernelSpec("rbf", 1.0), C=1.0, tol=1e-3)
    assert m.kkt_violation <= 1e-3
    assert np.abs(m.dual_coef).max() <= 1.0 + 1e-12
    if task == CLASSIFICATION:
        # dual coefficients carry the label sign
        sv_y = np.where(y > 0, 1, -1)[np.abs(m.alpha) > 0]
        assert (np.sign(m.dual_coef) == sv_y).all()


def test_kkt_violation_helper():
    y = np.array([1.0, -1.0])
    assert kkt_violation(np.zeros(2), np.array([-1.0, -1.0]), y, 1.0) == 2.0
    assert kkt_violation(np.zeros(2), np.array([0.0, 0.0]), y, 1.0) == 0.0


@pytest.mark.parametrize("value", [-2.5, 0.0, 3.0])
def test_constant_targets(value):
    rng = np.random.default_rng(0)
    x = rng.normal(size=(15, 3))
    m = smo_train(x, np.full(15, value), REGRESSION, KernelSpec("rbf", 1.0), epsilon=0.1)
    pred = m.predict(rng.normal(size=(10, 3)))
    assert np.abs(pred - value).max() <= 0.1 + 1e-3


@pytest.mark.parametrize("task", [CLASSIFICATION, REGRESSION])
def test_permutation_invariance(task):
    rng = np.random.default_rng(21)
    x, y = random_problem(rng, task, n=30)
    perm = rng.permutation(len(y))
    probe = rng.normal(size=(20, x.shape[1]))
    a = smo_train(x, y, task, KernelSpec("rbf", 1.0), tol=1e-9)
    b = smo_train(x[perm], y[perm], task, KernelSpec("rbf", 1.0), tol=1e-9)
    assert np.abs(a.decision_function(probe) - b.decision_function(probe)).max() <= 1e-6


def test_deterministic():
    rng = np.random.default_rng(2)
    x, y = random_problem(rng, REGRESSION, n=30)
    a = smo_train(x, y, REGRESSION)
    b = smo_train(x, y, REGRESSION)
    assert a.to_dict() == b.to_dict()


@given(st.integers(0, 1000), st.floats(0.01, 10))
def test_rbf_kernel_is_psd_and_matches_oracle(seed, gamma):
    x = np.random.default_rng(seed).normal(size=(12, 3))
    k = KernelSpec("rbf", gamma).matrix(x, x)
    assert np.allclose(k, oracles.rbf(x, gamma), atol=1e-12)
    assert np.linalg.eigvalsh(k).min() >= -1e-9


def test_kernel_rows_cache_is_bounded():
    x = np.random.default_rng(0).normal(size=(10, 2))
    rows = KernelRows(x, KernelSpec("rbf", 1.0), cache_rows=3)
    for i in range(10):
        assert np.allclose(rows.row(i), KernelSpec("rbf", 1.0).matrix(x[i:i + 1], x)[0])
    assert len(rows._rows) == 3


def test_default_gamma():
    x = np.array([[0.0, 2.0], [2.0, 0.0]])
    assert KernelSpec().with_default_gamma(x).gamma == pytest.approx(1 / (2 * 1.0))


def test_sparse_linear_matches_dense():
    rng = np.random.default_rng(4)
    x, y = random_problem(rng, CLASSIFICATION, n=30)
    dense = smo_train(x, y, kernel=KernelSpec("linear"), tol=1e-8)
    sparse = smo_train(sp.csr_matrix(x), y, kernel=KernelSpec("linear"), tol=1e-8)
    assert np.allclose(dense.decision_function(x), sparse.decision_function(sp.csr_matrix(x)),
                       atol=1e-6)


def test_model_json_round_trip():
    m = smo_train(XOR_X, XOR_Y, kernel=KernelSpec("rbf", 1.0), C=10.0)
    again = SvmModel.from_dict(json.loads(json.dumps(m.to_dict())))
    assert np.array_equal(again.decision_function(XOR_X), m.decision_function(XOR_X))


@pytest.mark.parametrize("x, y, message", [
    ([[1.0]], [1], "at least 2"),
    ([[1.0], [2.0]], [1, 1], "both classes"),
    ([[1.0], [np.nan]], [1, -1], "non-finite"),
    ([[1.0], [2.0]], [1], "lengths"),
])
def test_bad_training_input(x, y, message):
    with pytest.raises(InputError, match=message):
        smo_train(x, y)
