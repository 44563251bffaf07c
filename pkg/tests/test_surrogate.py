import numpy as np
import pytest
import torch

from reachverify import surrogate as S
from reachverify.datagen import generate_dataset
from reachverify.errors import ConfigInvalid, CorruptFile, DatasetEmpty, FormatVersionMismatch, NonFiniteInput
from reachverify.scenario import ScenarioSpec

TINY = S.OperatorConfig(token_dim=8, num_blocks=1, num_heads=2, ff_dim=16, decoder_dim=16, epochs=1, batch_size=32)


@pytest.fixture(scope="module")
def data():
    samples = list(generate_dataset(ScenarioSpec(), 200, 123))
    x = np.array([s.input for s in samples])
    y = np.array([s.label for s in samples])
    return x, y


def test_parameter_count_formula():
    cfg = S.OperatorConfig()
    assert cfg.num_blocks == 8
    m = S.build_model(cfg)
    assert m.parameter_count() == S.parameter_count_formula(cfg) == 412_044
    for cfg in (TINY, S.OperatorConfig(token_dim=32, num_blocks=3, num_heads=8, ff_dim=40, decoder_dim=7)):
        assert S.build_model(cfg).parameter_count() == S.parameter_count_formula(cfg)


def test_same_seed_same_weights():
    a, b = S.build_model(TINY, seed=5), S.build_model(TINY, seed=5)
    for (na, ta), (nb, tb) in zip(a.net.state_dict().items(), b.net.state_dict().items()):
        assert na == nb and torch.equal(ta, tb)
    c = S.build_model(TINY, seed=6)
    assert not torch.equal(a.net.fc1.weight, c.net.fc1.weight)


def test_build_does_not_touch_global_rng():
    torch.manual_seed(0)
    expected = torch.rand(3)
    torch.manual_seed(0)
    S.build_model(TINY, seed=99)
    assert torch.equal(torch.rand(3), expected)


def test_config_invalid():
    with pytest.raises(ConfigInvalid):
        S.build_model(S.OperatorConfig(token_dim=10, num_heads=4))
    with pytest.raises(ConfigInvalid):
        S.build_model(S.OperatorConfig(num_blocks=0))
    with pytest.raises(ConfigInvalid):
        S.OperatorConfig.from_dict({"token_dim": 8, "depth": 3})


def test_forward_shape_clamp_and_totality():
    m = S.build_model(S.OperatorConfig())
    rng = np.random.default_rng(0)
    x = rng.normal(size=(100_000, 16)) * 5
    x[:, 8:] = np.abs(x[:, 8:])
    y = m(x)
    assert y.shape == (100_000, 12)
    assert np.all(np.isfinite(y))
    assert np.all(y[:, 6:] >= 0)
    assert m(x[0]).shape == (12,)
    np.testing.assert_array_equal(m(x[:50]), m(x[:50]))


def test_forward_rejects_nonfinite():
    m = S.build_model(TINY)
    x = np.zeros(16)
    x[3] = np.nan
    with pytest.raises(NonFiniteInput):
        S.forward(m, x)
    x[3] = np.inf
    with pytest.raises(NonFiniteInput):
        S.forward(m, x)


def test_batch_equals_singles(data):
    m = S.build_model(S.OperatorConfig())
    x = data[0][:20]
    batch = m(x)
    singles = np.array([m(row) for row in x])
    np.testing.assert_allclose(batch, singles, rtol=1e-5, atol=1e-6)


def test_learning_rate_schedule(data):
    cfg = S.OperatorConfig(learning_rate=1e-3, lr_step=150)
    assert S.learning_rate_at(cfg, 0) == 1e-3
    assert S.learning_rate_at(cfg, 149) == 1e-3
    assert S.learning_rate_at(cfg, 150) == 0.5e-3
    assert S.learning_rate_at(cfg, 300) == 0.25e-3
    small = S.OperatorConfig(**{**TINY.__dict__, "epochs": 5, "lr_step": 2, "learning_rate": 1e-3})
    res = S.train(S.build_model(small), *data, small)
    assert res.lr_history == pytest.approx([1e-3, 1e-3, 0.5e-3, 0.5e-3, 0.25e-3], rel=1e-12)


def test_one_epoch_smoke(data):
    cfg = S.OperatorConfig(epochs=1)
    m = S.build_model(cfg)
    res = S.train(m, *data, cfg)
    assert len(res.loss_history) == 1
    assert np.isfinite(res.loss_history[0])
    assert res.loss_history[0] <= res.initial_loss
    assert m.metadata["train_samples"] == 1000


def test_training_is_deterministic(data):
    cfg = S.OperatorConfig(**{**TINY.__dict__, "epochs": 3})
    a = S.train(S.build_model(cfg), *data, cfg)
    b = S.train(S.build_model(cfg), *data, cfg)
    assert a.loss_history == b.loss_history
    for ta, tb in zip(a.model.net.state_dict().values(), b.model.net.state_dict().values()):
        assert torch.equal(ta, tb)


def test_empty_dataset():
    with pytest.raises(DatasetEmpty):
        S.train(S.build_model(TINY), np.zeros((0, 16)), np.zeros((0, 12)))


def test_save_load_round_trip(tmp_path, data):
    cfg = S.OperatorConfig(**{**TINY.__dict__, "epochs": 1})
    m = S.build_model(cfg)
    S.train(m, *data, cfg)
    path = tmp_path / "m.rvop"
    S.save_model(m, path)
    back = S.load_model(path)
    assert back.config == cfg
    assert back.metadata == m.metadata
    x = data[0][:100]
    np.testing.assert_array_equal(back(x), m(x))


def test_load_other_config(tmp_path):
    cfg = S.OperatorConfig(token_dim=16, num_blocks=2, num_heads=4, ff_dim=24, decoder_dim=20)
    path = tmp_path / "m.rvop"
    S.save_model(S.build_model(cfg, seed=3), path)
    back = S.load_model(path)
    assert back.config == cfg and len(back.net.blocks) == 2


def test_corrupt_files(tmp_path):
    path = tmp_path / "m.rvop"
    S.save_model(S.build_model(TINY), path)
    raw = path.read_bytes()
    (tmp_path / "short").write_bytes(raw[: len(raw) // 2])
    with pytest.raises(CorruptFile):
        S.load_model(tmp_path / "short")
    flipped = bytearray(raw)
    flipped[200] ^= 0xFF
    (tmp_path / "flip").write_bytes(bytes(flipped))
    with pytest.raises(CorruptFile):
        S.load_model(tmp_path / "flip")


def test_version_mismatch(tmp_path):
    import hashlib
    import struct
    path = tmp_path / "m.rvop"
    S.save_model(S.build_model(TINY), path)
    body = bytearray(path.read_bytes()[:-32])
    body[4:8] = struct.pack("<I", 99)
    path.write_bytes(bytes(body) + hashlib.sha256(bytes(body)).digest())
    with pytest.raises(FormatVersionMismatch):
        S.load_model(path)


def fd_gradient_check(cfg, x, y, eps=1e-6):
    """Largest relative mismatch between autograd and central differences."""
    m = S.build_model(cfg)
    m.net.double()
    m.set_scaling(x, y)
    xt = torch.as_tensor(x, dtype=torch.float64)
    w = torch.as_tensor(np.random.default_rng(1).normal(size=(len(x), 12)))

    def objective():
        # smooth projection of the raw output, so kinks of |.| do not pollute the check
        return (m.net(xt) * w).sum() + S.normalized_l1(m, xt, torch.as_tensor(y))

    m.net.zero_grad()
    objective().backward()
    worst = 0.0
    with torch.no_grad():
        for p in m.net.parameters():
            flat, grad = p.view(-1), p.grad.view(-1)
            for i in range(flat.numel()):
                orig = flat[i].item()
                flat[i] = orig + eps
                fp = objective().item()
                flat[i] = orig - eps
                fm = objective().item()
                flat[i] = orig
                fd = (fp - fm) / (2 * eps)
                a = grad[i].item()
                rel = abs(a - fd) / max(abs(a), abs(fd), 1e-3)
                worst = max(worst, rel)
    return worst


def test_gradient_check_tiny(data):
    cfg = S.OperatorConfig(token_dim=8, num_blocks=1, num_heads=2, ff_dim=16, decoder_dim=16)
    x, y = data[0][:10], data[1][:10]
    assert fd_gradient_check(cfg, x, y) <= 1e-4


def test_loss_drops_within_50_epochs(data):
    cfg = S.OperatorConfig(epochs=50)
    res = S.train(S.build_model(cfg), *data, cfg)
    assert min(res.loss_history) <= 0.8 * res.loss_history[0]
