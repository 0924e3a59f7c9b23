import numpy as np
import pytest

from advlab.attacks import (
    AttackConfig,
    apply_attack,
    epsilon_sweep,
    fgsm,
    input_gradients,
    plane_basis,
    random_sign_noise,
    rotate_in_plane,
    rotation_attack,
    uniform_noise,
)
from advlab.errors import ConfigError, DegenerateGeometryError
from advlab.models import LogisticModel, SoftmaxModel
from advlab.numerics import RngStream, softplus


def test_fgsm_logistic_example():
    # w = (2, -1), x = (0.25, 0.75), y = +1: gradient of softplus(-y a) is
    # negative along w, so the attack moves opposite to w
    m = LogisticModel(np.array([2.0, -1.0]), 0.0)
    x = np.array([0.25, 0.75])
    adv = fgsm(m, x, 1, 0.5)
    assert np.allclose(adv, [0.25 - 0.5, 0.75 + 0.5], atol=1e-15)
    # attacked activation drops by epsilon * l1(w)
    drop = float(m.activation(x) - m.activation(adv))
    assert abs(drop - 0.5 * 3.0) < 1e-12


def test_fgsm_max_norm_contract():
    rng = np.random.default_rng(0)
    m = SoftmaxModel(rng.standard_normal((4, 6)), rng.standard_normal(4))
    X = rng.standard_normal((50, 6))
    Y = rng.integers(0, 4, size=50)
    for eps in (0.0, 0.1, 0.3):
        adv = fgsm(m, X, Y, eps)
        assert np.abs(adv - X).max() <= eps + 1e-12
        assert adv.shape == X.shape


def test_fgsm_epsilon_zero_identity():
    m = LogisticModel(np.array([1.0, -2.0]), 0.1)
    x = np.array([0.3, 0.7])
    assert np.allclose(fgsm(m, x, 1, 0.0), x, atol=0.0)


def test_fgsm_zero_gradient_coordinate_untouched():
    # weight 0 in coordinate 1 means zero gradient there: no perturbation
    m = LogisticModel(np.array([1.0, 0.0]), 0.0)
    adv = fgsm(m, np.array([0.5, 0.5]), 1, 0.25)
    assert adv[1] == 0.5
    assert adv[0] == 0.25


def test_fgsm_clamp():
    m = LogisticModel(np.array([-3.0, 3.0]), 0.0)
    adv = fgsm(m, np.array([0.05, 0.95]), 1, 0.25, clamp=(0.0, 1.0))
    assert adv.min() >= 0.0 and adv.max() <= 1.0


def test_fgsm_corner_optimality_small():
    # on the epsilon cube the loss is maximized at the sign-gradient corner
    # (monotone logistic loss of an affine function)
    rng = np.random.default_rng(1)
    d = 6
    for _ in range(30):
        w = rng.standard_normal(d)
        m = LogisticModel(w, float(rng.standard_normal()))
        x = rng.standard_normal(d)
        y = int(rng.choice([-1, 1]))
        eps = float(rng.uniform(0.05, 0.5))
        adv = fgsm(m, x, y, eps)
        attack_loss = float(m.losses(adv[None, :], [y])[0])
        corners = x[None, :] + eps * _signs(d)
        corner_losses = m.losses(corners, np.full(len(corners), y))
        assert attack_loss >= corner_losses.max() - 1e-10


def _signs(d):
    # all 2^d sign vectors
    bits = np.arange(2**d)[:, None] >> np.arange(d)[None, :]
    return np.where(bits & 1, 1.0, -1.0)


def test_input_gradients_matches_loss_grad():
    rng = np.random.default_rng(2)
    m = SoftmaxModel(rng.standard_normal((3, 5)), rng.standard_normal(3))
    X = rng.standard_normal((4, 5))
    Y = rng.integers(0, 3, size=4)
    G = input_gradients(m, X, Y)
    for i in range(4):
        gi = m.loss_grad(X[i], int(Y[i])).grad_input
        assert np.allclose(G[i], gi, atol=1e-12)


def test_epsilon_sweep_zero_entry_is_clean():
    rng = np.random.default_rng(3)
    m = SoftmaxModel(rng.standard_normal((3, 5)), rng.standard_normal(3))
    x = rng.standard_normal(5)
    grid = (np.arange(21) - 10) * 0.05
    res = epsilon_sweep(m, x, 1, grid)
    assert res.epsilons[10] == 0.0
    clean_logits = m.logits(x[None, :])[0]
    assert np.allclose(res.logits_per_eps[10], clean_logits, atol=0.0)
    assert res.logits_per_eps.shape == (21, 3)
    assert res.predicted.shape == (21,)


def test_epsilon_sweep_rejects_unsorted_grid():
    m = SoftmaxModel.zeros(4, 3)
    with pytest.raises(ConfigError):
        epsilon_sweep(m, np.zeros(4), 0, np.array([0.0, 0.0, 0.1]))


def test_epsilon_sweep_direction_fixed_at_zero():
    # the ray direction comes from the clean point: logits at eps are
    # logits(x + eps * sign(grad at x)), even for negative eps
    rng = np.random.default_rng(4)
    m = SoftmaxModel(rng.standard_normal((3, 5)), rng.standard_normal(3))
    x = rng.standard_normal(5)
    g = m.loss_grad(x, 1).grad_input
    d = np.sign(g)
    res = epsilon_sweep(m, x, 1, np.array([-0.2, 0.0, 0.2]))
    assert np.allclose(res.logits_per_eps[0], m.logits((x - 0.2 * d)[None, :])[0], atol=1e-12)
    assert np.allclose(res.logits_per_eps[2], m.logits((x + 0.2 * d)[None, :])[0], atol=1e-12)


def test_sweep_csv_format(tmp_path):
    rng = np.random.default_rng(5)
    m = SoftmaxModel(rng.standard_normal((3, 4)), rng.standard_normal(3))
    res = epsilon_sweep(m, rng.standard_normal(4), 0, np.array([-0.1, 0.0, 0.1]))
    out = tmp_path / "sweep.csv"
    res.write_csv(out)
    text = out.read_bytes().decode()
    lines = text.strip().split("\r\n")
    assert lines[0] == "epsilon,logit_0,logit_1,logit_2,predicted,correct"
    assert len(lines) == 4
    row = lines[2].split(",")
    assert row[0] == "0.0"
    assert row[-1] in ("true", "false")
    # repr round-trip: the stored logits parse back to the exact float64
    for token, val in zip(row[1:4], res.logits_per_eps[1]):
        assert float(token) == val


def test_random_sign_noise_moments():
    rng = RngStream(0, "noise")
    eta = random_sign_noise(np.zeros((200, 50)), 0.25, rng)
    assert set(np.unique(eta)) == {-0.25, 0.25}
    assert abs(float(eta.mean())) < 0.01


def test_uniform_noise_bounds():
    rng = RngStream(1, "noise")
    eta = uniform_noise(np.zeros((200, 50)), 0.25, rng)
    assert np.abs(eta).max() <= 0.25
    assert abs(float(eta.mean())) < 0.01
    assert float(np.abs(eta).mean()) > 0.05  # actually spread out


def test_noise_is_additive():
    rng = np.random.default_rng(6)
    x = rng.standard_normal((10, 5))
    a = random_sign_noise(x, 0.1, RngStream(2, "noise"))
    b = random_sign_noise(np.zeros((10, 5)), 0.1, RngStream(2, "noise"))
    assert np.allclose(a - x, b, atol=1e-15)


def test_plane_basis_orthonormal():
    rng = np.random.default_rng(7)
    for _ in range(20):
        x = rng.standard_normal(8)
        g = rng.standard_normal(8)
        u, v = plane_basis(x, g)
        assert abs(u @ u - 1) < 1e-12
        assert abs(v @ v - 1) < 1e-12
        assert abs(u @ v) < 1e-12
        # u spans x, v completes the (x, g) plane
        assert abs(np.linalg.norm(x) - x @ u) < 1e-9


def test_plane_basis_degenerate():
    with pytest.raises(DegenerateGeometryError):
        plane_basis(np.zeros(4), np.ones(4))
    x = np.array([1.0, 0.0])
    with pytest.raises(DegenerateGeometryError):
        plane_basis(x, 2.0 * x)  # gradient parallel to x


def test_rotation_identity_and_norm():
    rng = np.random.default_rng(8)
    x = rng.standard_normal(6)
    g = rng.standard_normal(6)
    u, v = plane_basis(x, g)
    assert np.allclose(rotate_in_plane(x, u, v, 0.0), x, atol=0.0)
    for theta in (0.3, 1.0, np.pi / 2):
        r = rotate_in_plane(x, u, v, theta)
        assert abs(np.linalg.norm(r) - np.linalg.norm(x)) < 1e-9
        # components outside the plane are untouched
        resid = x - (x @ u) * u - (x @ v) * v
        resid_r = r - (r @ u) * u - (r @ v) * v
        assert np.allclose(resid, resid_r, atol=1e-9)


def test_rotation_inverse():
    rng = np.random.default_rng(9)
    x = rng.standard_normal(6)
    g = rng.standard_normal(6)
    u, v = plane_basis(x, g)
    r = rotate_in_plane(x, u, v, 0.7)
    back = rotate_in_plane(r, u, v, -0.7)
    assert np.allclose(back, x, atol=1e-12)


def test_rotation_attack_range():
    m = SoftmaxModel(np.random.default_rng(10).standard_normal((3, 5)), np.zeros(3))
    x = np.abs(np.random.default_rng(11).standard_normal(5))
    with pytest.raises(ConfigError):
        rotation_attack(x, m, 0, 2.0)  # > pi/2
    r = rotation_attack(x, m, 0, 0.5)
    assert r.shape == x.shape


def test_apply_attack_dispatch():
    rng = np.random.default_rng(12)
    m = SoftmaxModel(rng.standard_normal((3, 5)), np.zeros(3))
    X = rng.standard_normal((6, 5))
    Y = rng.integers(0, 3, size=6)
    adv = apply_attack(m, X, Y, AttackConfig("fgsm", 0.25))
    assert np.abs(adv - X).max() <= 0.25 + 1e-12
    noisy = apply_attack(m, X, Y, AttackConfig("random_sign", 0.25), RngStream(0, "noise"))
    assert set(np.unique(np.abs(noisy - X).round(12))) == {0.25}
    with pytest.raises(ConfigError):
        apply_attack(m, X, Y, AttackConfig("random_sign", 0.25))  # rng required


def test_attack_config_validation():
    with pytest.raises(ConfigError):
        AttackConfig("fgsm", -0.1)
    with pytest.raises(ConfigError):
        AttackConfig("warp", 0.1)
    with pytest.raises(ConfigError):
        AttackConfig("fgsm", 0.1, clamp=(1.0, 0.0))


def test_fgsm_loss_increase_epsilon_l1():
    # for logistic loss the adversarial activation shift is exactly
    # epsilon * l1(w): softplus identity checked end to end
    rng = np.random.default_rng(13)
    for _ in range(20):
        w = rng.standard_normal(7)
        m = LogisticModel(w, float(rng.standard_normal()))
        x = rng.standard_normal(7)
        y = int(rng.choice([-1, 1]))
        adv = fgsm(m, x, y, 0.3)
        a0 = float(m.activation(x))
        a1 = float(m.activation(adv))
        assert abs(softplus(-y * a1) - softplus(0.3 * np.abs(w).sum() - y * a0)) < 1e-12
