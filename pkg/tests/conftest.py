import os
from pathlib import Path

import numpy as np
import pytest

from advlab import Dataset, load_mnist

DATA_DIR = Path(__file__).resolve().parent.parent / "data" / "mnist"


def pytest_collection_modifyitems(items):
    # anything drawing on the session battery trains the full zoo: tag it so
    # `-m "not battery"` gives a fast run
    for item in items:
        if "battery" in getattr(item, "fixturenames", ()):
            item.add_marker(pytest.mark.battery)


@pytest.fixture(scope="session")
def mnist():
    return load_mnist(os.environ.get("ADVLAB_DATA", str(DATA_DIR)))


@pytest.fixture(scope="session")
def mnist_train(mnist):
    return mnist[0]


@pytest.fixture(scope="session")
def mnist_test(mnist):
    return mnist[1]


def make_blobs(n_per_class=40, centers=((0.0, 0.0), (3.0, 3.0)), scale=0.5, seed=0, name="blobs"):
    # well-separated Gaussian blobs: learnable by every model family in a
    # handful of epochs
    rng = np.random.default_rng(seed)
    xs, ys = [], []
    for c, mu in enumerate(centers):
        xs.append(rng.normal(mu, scale, size=(n_per_class, len(mu))))
        ys.append(np.full(n_per_class, c, dtype=np.int64))
    X = np.concatenate(xs)
    Y = np.concatenate(ys)
    perm = rng.permutation(len(Y))
    return Dataset(inputs=X[perm], labels=Y[perm], name=name)


@pytest.fixture
def blobs2():
    return make_blobs()


@pytest.fixture
def blobs3():
    return make_blobs(centers=((0.0, 0.0), (4.0, 0.0), (0.0, 4.0)), seed=1)


def rel_close(analytic, numeric, tol):
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    denom = 1.0 + np.abs(numeric)
    return bool((np.abs(analytic - numeric) <= tol * denom).all())


def check_model_grads(model, X, Y, tol=1e-5, masks=None):
    """Compare batch_grads (mean loss) against central differences for every
    parameter array and for the input."""
    from advlab.numerics import finite_diff_gradient

    X = np.array(X, dtype=np.float64)
    Y = np.asarray(Y)
    _, grads, grad_input = model.batch_grads(X, Y, masks=masks)

    def mean_loss():
        return float(np.mean(model.losses(X, Y, masks=masks) if masks is not None else model.losses(X, Y)))

    for name, arr in model.param_arrays().items():
        base = arr.copy()

        def f(v, arr=arr):
            arr[...] = v
            return mean_loss()

        numeric = finite_diff_gradient(f, base.copy())
        arr[...] = base
        assert rel_close(grads[name], numeric, tol), f"param {name} gradient mismatch"

    numeric_in = finite_diff_gradient(
        lambda v: float(
            np.mean(model.losses(v, Y, masks=masks) if masks is not None else model.losses(v, Y))
        ),
        X.copy(),
    )
    assert rel_close(grad_input / X.shape[0], numeric_in, tol), "input gradient mismatch"
