from dataclasses import replace

import numpy as np
import pytest

from craftforecast.common import BatchException
from craftforecast.data.batch import NodeBatch, value_scale
from craftforecast.data.hierarchy import GroupSampler, HierGroup, make_virtual_parent
from craftforecast.data.samples import CfbMatrix, build_sample, itm_observed_mask
from craftforecast.data.world import generate_world
from craftforecast.execution.model import CraftParams, craft_forward
from craftforecast.models import TrainConfig, VariantEnum, WorldConfig
from craftforecast.numeric.gradcheck import grad_check


@pytest.fixture
def micro_batch(micro_dataset, micro_train_config) -> NodeBatch:
    samples = micro_dataset.split("train")
    sampler = GroupSampler(samples, micro_train_config.m)
    rng = np.random.default_rng(0)
    groups = [sampler.sample(rng) for _ in range(micro_train_config.groups_per_batch)]
    return NodeBatch.from_groups(groups, micro_train_config.kernel, value_scale(samples))


def test_batch_layout(micro_batch):
    assert micro_batch.n_nodes == 8
    assert micro_batch.y_L.shape == (8, 8)
    assert micro_batch.c_Lmat.shape == (8, 3, 3)
    assert micro_batch.itm_trend.shape == (8, 3, 11)
    assert list(micro_batch.is_parent) == [False, False, False, True] * 2
    assert np.array_equal(micro_batch.c_P_values, np.where(np.tri(3, dtype=bool), micro_batch.c_P_truth, 0.0))
    assert np.allclose(micro_batch.y_L_trend + micro_batch.y_L_residual, micro_batch.y_L)


def test_batch_rejects_mixed_groups(micro_dataset):
    samples = micro_dataset.split("train")
    rng = np.random.default_rng(0)
    groups = [GroupSampler(samples, 3).sample(rng), GroupSampler(samples, 2).sample(rng)]
    with pytest.raises(BatchException):
        NodeBatch.from_groups(groups, 5)
    with pytest.raises(BatchException):
        NodeBatch.from_groups([], 5)


def test_zero_parameters(micro_batch, micro_train_config):
    params = CraftParams.init(micro_train_config, np.random.default_rng(0))
    for param in params.parameter_set():
        param.data[...] = 0.0
    out = craft_forward(micro_batch, params, micro_train_config)
    assert np.array_equal(out.y_hat.data, np.zeros((8, 3)))
    assert np.array_equal(out.c_hat_TP.data, np.zeros((8, 3, 3)))
    assert out.L_recon.item() == 0.0


def test_final_sums(micro_batch, micro_train_config):
    params = CraftParams.init(micro_train_config, np.random.default_rng(1))
    out = craft_forward(micro_batch, params, micro_train_config)
    assert np.array_equal(out.y_hat.data, out.y_trend.data + out.y_residual.data)
    assert np.array_equal(out.c_hat_TP.data, out.c_trend.data + out.c_residual.data)
    weights = micro_train_config.weights
    expected = (
        out.L_y.item()
        + weights.alpha1 * out.L_be_k.item()
        + weights.alpha2 * out.L_be_y.item()
        + weights.alpha3 * out.L_recon.item()
    )
    assert out.total.item() == pytest.approx(expected, rel=1e-12)


def test_unobserved_entries_do_not_reach_forecast(micro_dataset, micro_train_config):
    samples = micro_dataset.split("train")
    groups = [GroupSampler(samples, 3).sample(np.random.default_rng(seed)) for seed in (0, 1)]
    L, P = 8, 3
    future = np.triu(np.ones((P, P)), k=1) * 5.0
    unseen = (~itm_observed_mask(L, P)) * 5.0

    def perturb(group: HierGroup) -> HierGroup:
        children = [
            replace(c, c_P=CfbMatrix(c.c_P.origin, c.c_P.truth + future), itm_rows=c.itm_rows + unseen)
            for c in group.children
        ]
        return HierGroup(children=children, parent=make_virtual_parent(children))

    params = CraftParams.init(micro_train_config, np.random.default_rng(2))
    base = craft_forward(NodeBatch.from_groups(groups, 5), params, micro_train_config)
    perturbed = craft_forward(NodeBatch.from_groups([perturb(g) for g in groups], 5), params, micro_train_config)
    assert np.array_equal(base.y_hat.data, perturbed.y_hat.data)
    assert base.L_be_k.item() == perturbed.L_be_k.item()
    assert base.L_be_y.item() != perturbed.L_be_y.item()


def test_masked_entries_get_no_gradient(micro_batch, micro_train_config):
    params = CraftParams.init(micro_train_config, np.random.default_rng(3))
    registry = params.parameter_set()
    registry.zero_grad()
    out = craft_forward(micro_batch, params, micro_train_config)
    out.L_be_k.backward()
    grads = {param.name: param.grad.copy() for param in registry}
    assert np.any(grads["kpm.encoder.W"] != 0)
    # only the Koopman path feeds the backward-extraction loss
    assert np.all(grads["itm.encoder.W"] == 0)
    assert np.all(grads["etg.W_q"] == 0)


def test_parent_passes_through_guide(micro_batch, micro_train_config):
    params = CraftParams.init(micro_train_config, np.random.default_rng(4))
    out = craft_forward(micro_batch, params, micro_train_config)
    parents = micro_batch.is_parent
    assert np.allclose(out.y_hat.data[parents], out.y_itm[parents], rtol=0, atol=1e-12)
    assert not np.allclose(out.y_hat.data[~parents], out.y_itm[~parents])


def test_variants(micro_batch, micro_train_config):
    params = CraftParams.init(micro_train_config, np.random.default_rng(5))
    kpm_only = craft_forward(micro_batch, params, micro_train_config.model_copy(update={"variant": VariantEnum.kpm_only}))
    assert kpm_only.c_hat_TP is None and kpm_only.L_be_y is None and kpm_only.y_itm is None
    assert np.array_equal(kpm_only.y_hat.data, kpm_only.y_kpm)

    itm = craft_forward(micro_batch, params, micro_train_config.model_copy(update={"variant": VariantEnum.itm}))
    assert np.array_equal(itm.y_hat.data, itm.y_itm)
    weights = micro_train_config.weights
    expected = itm.L_y.item() + weights.alpha1 * itm.L_be_k.item() + weights.alpha2 * itm.L_be_y.item()
    assert itm.total.item() == pytest.approx(expected, rel=1e-12)

    # the demand band only changes the label loss
    guided = craft_forward(micro_batch, params, micro_train_config.model_copy(update={"variant": VariantEnum.itm_etg}))
    full = craft_forward(micro_batch, params, micro_train_config)
    assert np.array_equal(guided.y_hat.data, full.y_hat.data)
    assert full.L_y.item() >= guided.L_y.item()


def test_full_loss_gradient():
    world_config = WorldConfig(
        n_cities=1, districts_per_city=1, hotels_per_district=3, horizon=30, max_lead=10, L=4, P=2, split_ratios=(1, 0, 0)
    )
    world = generate_world(world_config, seed=3)
    groups = []
    for origin in (10, 15):
        children = [build_sample(world, hotel.hotel_id, origin, 4, 2) for hotel in world.hotels[:2]]
        groups.append(HierGroup(children=children, parent=make_virtual_parent(children)))
    scale = value_scale([c for g in groups for c in g.children])
    batch = NodeBatch.from_groups(groups, 3, scale)

    config = TrainConfig(L=4, P=2, D=3, kernel=3, m=2, groups_per_batch=2, allow_custom_windows=True)
    params = CraftParams.init(config, np.random.default_rng(6))
    assert grad_check(lambda: craft_forward(batch, params, config).total, list(params.parameter_set())) <= 1e-3


def test_parameter_registry(micro_train_config):
    params = CraftParams.init(micro_train_config, np.random.default_rng(0))
    registry = params.parameter_set()
    L, P, D = 8, 3, 4
    kpm = 2 * P * D + D + P
    itm = 2 * (L + P) * D + D + (L + P) + 2 * (D * D + D)
    etg = 3 * D * D
    heads = L * P + P + P * P + P
    assert registry.count() == kpm + itm + etg + heads
    assert len(set(registry.names())) == len(registry)


def high_demand_group(L: int, P: int, m: int, origin: int) -> HierGroup:
    config = WorldConfig(
        n_cities=1,
        districts_per_city=1,
        hotels_per_district=m,
        horizon=40,
        max_lead=20,
        holiday_count=2,
        base_demand_min=20,
        base_demand_max=30,
        L=L,
        P=P,
    )
    world = generate_world(config, seed=1)
    children = [build_sample(world, hotel.hotel_id, origin, L, P) for hotel in world.hotels]
    return HierGroup(children=children, parent=make_virtual_parent(children))


def test_scalar_forward_by_hand():
    group = high_demand_group(L=2, P=1, m=1, origin=10)
    batch = NodeBatch.from_groups([group], 3)
    config = TrainConfig(L=2, P=1, D=1, kernel=3, m=1, groups_per_batch=1, allow_custom_windows=True)
    params = CraftParams.init(config, np.random.default_rng(0))
    registry = params.parameter_set()
    weights = {
        "kpm.encoder.W": 0.5,
        "kpm.encoder.b": 0.1,
        "kpm.decoder.W": 1.5,
        "kpm.decoder.b": -0.2,
        "itm.encoder.W": [0.3, -0.2, 0.4],
        "itm.encoder.b": 0.05,
        "itm.decoder.W": [0.7, -0.1, 2.0],
        "itm.decoder.b": [0.0, 0.0, 0.3],
        "itm.complete.W": 0.9,
        "itm.complete.b": 0.1,
        "itm.adapt.W": 1.2,
        "itm.adapt.b": -0.1,
        "etg.W_q": 0.8,
        "etg.W_k": -0.6,
        "etg.W_v": 0.5,
        "residual.y.W": [0.25, -0.75],
        "residual.y.b": 0.2,
        "residual.c.W": 0.0,
        "residual.c.b": 0.0,
    }
    for name, value in weights.items():
        param = registry[name]
        param.data[...] = np.reshape(value, param.shape)
    out = craft_forward(batch, params, config)

    z_lookback = np.tanh(0.5 * batch.c_L_trend[:, 0, 0] + 0.1)
    z_future = np.tanh(0.5 * batch.c_P_values[:, 0, 0] + 0.1)
    K = z_lookback @ z_future / (z_lookback @ z_lookback + config.ridge_lambda)
    y_init = 1.5 * np.tanh(0.5 * batch.y_L_trend[:, -1] + 0.1) * K - 0.2
    residual = 0.25 * batch.y_L_residual[:, 0] - 0.75 * batch.y_L_residual[:, 1] + 0.2
    zy = np.tanh(0.3 * batch.y_L_trend[:, 0] - 0.2 * batch.y_L_trend[:, 1] + 0.4 * y_init + 0.05)
    zt = np.tanh(1.2 * (0.9 * zy + 0.1) - 0.1)
    scores = np.outer(0.8 * zt, -0.6 * zt)
    B = np.exp(scores) / np.exp(scores).sum(axis=1, keepdims=True)
    guided = np.array([B[0] @ (0.5 * zt), zt[1]])
    y_hat = 2.0 * guided + 0.3 + residual

    assert out.y_kpm[:, 0] == pytest.approx(y_init + residual, rel=1e-12)
    assert out.y_itm[:, 0] == pytest.approx(2.0 * zt + 0.3 + residual, rel=1e-12)
    assert out.y_hat.data[:, 0] == pytest.approx(y_hat, rel=1e-12)
    assert out.L_recon.item() == pytest.approx((y_hat[1] - y_hat[0]) ** 2, rel=1e-12)


def test_node_scaling_levels():
    group = high_demand_group(L=8, P=3, m=3, origin=20)
    scale = value_scale(group.children)
    batch = NodeBatch.from_groups([group], 5, scale, node_scaling=True)
    raw = np.stack([node.y_L for node in group.nodes])
    assert batch.levels * scale == pytest.approx(np.maximum(raw.mean(axis=1), 1.0), rel=1e-12)
    assert np.allclose(batch.y_L * (batch.levels * scale)[:, None], raw, rtol=1e-12, atol=0)
    assert np.allclose(batch.y_L.mean(axis=1), 1.0, rtol=1e-12)
    assert np.array_equal(NodeBatch.from_groups([group], 5, scale).levels, np.ones(4))


def test_reconciliation_in_booking_units():
    group = high_demand_group(L=8, P=3, m=3, origin=20)
    config = TrainConfig(L=8, P=3, D=4, kernel=5, m=3, groups_per_batch=1, allow_custom_windows=True)
    params = CraftParams.init(config, np.random.default_rng(0))
    registry = params.parameter_set()
    for param in registry:
        param.data[...] = 0.0
    registry["itm.decoder.b"].data[...] = 1.0

    scaled = craft_forward(NodeBatch.from_groups([group], 5, 10.0, node_scaling=True), params, config)
    assert np.array_equal(scaled.y_hat.data, np.ones((4, 3)))
    # every node forecasts its own level, children levels add up to the parent level
    assert scaled.L_recon.item() == pytest.approx(0.0, abs=1e-18)

    plain = craft_forward(NodeBatch.from_groups([group], 5, 10.0), params, config)
    assert plain.L_recon.item() == pytest.approx(12.0, rel=1e-12)
