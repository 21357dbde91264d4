"""Acceptance suite.

Each test covers one acceptance criterion at its stated tolerance and
prints a PASS line on success (run with ``pytest -s`` to see them
immediately; any failure shows up as a normal test failure). The
end-to-end criteria drive the real CLI on synthetic datasets.
"""

import functools
import json
import time
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from trajtransfer import quat
from trajtransfer.cli import main as cli_main
from trajtransfer.config import RunConfig
from trajtransfer.dtw import DtwParams, PairwiseDistanceCache, dtw_mt, waypoint_cost
from trajtransfer.features import FeatureVector
from trajtransfer.net import MultimodalNet, NetConfig, load_model, nll_loss_and_grads, pretrain
from trajtransfer.partframe import PointCloudPart, compute_part_frame, to_part_frame
from trajtransfer.synth import SyntheticSpec, generate_synthetic
from trajtransfer.trajectory import GripperState, Trajectory, Waypoint


def report(name: str, detail: str = ""):
    suffix = f" ({detail})" if detail else ""
    print(f"\nACCEPTANCE {name}: PASS{suffix}")


def random_unit_quat(rng):
    q = rng.normal(size=4)
    return q / np.linalg.norm(q)


def random_waypoint(rng, scale=0.1):
    return Waypoint(
        gripper=list(GripperState)[int(rng.integers(3))],
        translation=rng.normal(scale=scale, size=3),
        rotation=random_unit_quat(rng),
    )


def acceptance_config() -> RunConfig:
    cfg = RunConfig()
    cfg = cfg.override(
        "net",
        h1_pc=48, h1_lang=24, h1_traj=32, h2_pt=48, h2_lt=48, h3=32,
        corruption_p=0.3, sparsity_lambda=1e-4, maxnorm_c=3.0, dropout_rate=0.1,
        learning_rate=0.2, lr_decay=0.2, batch_size=64,
        epochs_pretrain=4, epochs_finetune=40, rng_seed=0,
    )
    cfg = cfg.override("labels", t_g=1.5, t_w=15.0, negative_ratio=2.0, seed=0)
    cfg = cfg.override(
        "synth",
        n_tasks=40, demos_per_task=8, outlier_fraction=0.2, tasks_per_manual=2,
        points_per_part=320, rng_seed=0,
    )
    return cfg


class TestDtwOracleEquivalence:
    def test_dp_equals_exhaustive_over_thousand_pairs(self):
        started = time.time()
        rng = np.random.default_rng(100)
        alphabet = [random_waypoint(rng) for _ in range(14)]
        params = DtwParams()

        def path_sets(m_a, m_b):
            @functools.lru_cache(maxsize=None)
            def walk(i, j):
                if i == m_a - 1 and j == m_b - 1:
                    return (((i, j),),)
                paths = []
                for di, dj in ((1, 1), (1, 0), (0, 1)):
                    ni, nj = i + di, j + dj
                    if ni < m_a and nj < m_b:
                        for rest in walk(ni, nj):
                            paths.append(((i, j),) + rest)
                return tuple(paths)

            return walk(0, 0)

        all_paths = {(a, b): path_sets(a, b) for a in range(1, 6) for b in range(1, 6)}

        checked = 0
        for _ in range(1000):
            m_a, m_b = int(rng.integers(1, 6)), int(rng.integers(1, 6))
            a = Trajectory(
                tuple(alphabet[i] for i in rng.integers(len(alphabet), size=m_a)), id="a"
            )
            b = Trajectory(
                tuple(alphabet[i] for i in rng.integers(len(alphabet), size=m_b)), id="b"
            )
            cost = np.array(
                [[waypoint_cost(x, y, params) for y in b.waypoints] for x in a.waypoints]
            )
            best = None
            for path in all_paths[(m_a, m_b)]:
                total = 0.0
                for i, j in path:
                    total = cost[i, j] + total
                if best is None or total < best:
                    best = total
            result = dtw_mt(a, b, params)
            assert result.cumulative == best, (m_a, m_b, result.cumulative, best)
            checked += 1

        elapsed = time.time() - started
        assert elapsed < 60.0, f"oracle comparison took {elapsed:.1f}s"
        report("dtw-oracle-equivalence", f"{checked} pairs, {elapsed:.1f}s")


class TestMetricIdentities:
    def test_identities_over_500_pairs(self):
        rng = np.random.default_rng(101)
        params = DtwParams()
        plain_params = DtwParams(alpha_t=1.0, alpha_r=0.5, beta=0.0, gamma=0.0)

        def plain_reference(xs, ys):
            @functools.lru_cache(maxsize=None)
            def best(i, j):
                d = float(np.linalg.norm(xs[i] - ys[j]))
                if i == 0 and j == 0:
                    return d
                options = []
                if i > 0 and j > 0:
                    options.append(best(i - 1, j - 1))
                if i > 0:
                    options.append(best(i - 1, j))
                if j > 0:
                    options.append(best(i, j - 1))
                return d + min(options)

            i, j = len(xs) - 1, len(ys) - 1
            length = 1
            while i > 0 or j > 0:
                if i == 0:
                    j -= 1
                elif j == 0:
                    i -= 1
                else:
                    target = min(best(i - 1, j - 1), best(i - 1, j), best(i, j - 1))
                    if best(i - 1, j - 1) == target:
                        i, j = i - 1, j - 1
                    elif best(i - 1, j) == target:
                        i -= 1
                    else:
                        j -= 1
                length += 1
            return best(len(xs) - 1, len(ys) - 1) / length

        for _ in range(500):
            m_a, m_b = int(rng.integers(1, 9)), int(rng.integers(1, 9))
            a = Trajectory(tuple(random_waypoint(rng) for _ in range(m_a)), id="a")
            b = Trajectory(tuple(random_waypoint(rng) for _ in range(m_b)), id="b")

            assert dtw_mt(a, a, params).distance == 0.0
            forward_result = dtw_mt(a, b, params)
            backward_result = dtw_mt(b, a, params)
            assert forward_result.distance >= 0.0
            assert abs(forward_result.distance - backward_result.distance) < 1e-12
            assert max(m_a, m_b) <= forward_result.path_len <= m_a + m_b - 1

            xs = tuple(w.translation for w in a.waypoints)
            ys = tuple(w.translation for w in b.waypoints)
            flat_a = Trajectory(
                tuple(Waypoint(gripper=GripperState.OPEN, translation=t, rotation=(0, 0, 0, 1)) for t in xs),
                id="fa",
            )
            flat_b = Trajectory(
                tuple(Waypoint(gripper=GripperState.OPEN, translation=t, rotation=(0, 0, 0, 1)) for t in ys),
                id="fb",
            )
            got = dtw_mt(flat_a, flat_b, plain_params).distance
            assert abs(got - plain_reference(xs, ys)) < 1e-9
        report("metric-identities", "500 pairs")


class TestSlerpFrameSuite:
    def test_slerp_properties(self):
        rng = np.random.default_rng(102)
        for _ in range(500):
            q0, q1 = random_unit_quat(rng), random_unit_quat(rng)
            t = float(rng.uniform(0, 1))
            out = quat.slerp(q0, q1, t)
            assert abs(np.linalg.norm(out) - 1.0) < 1e-6
            full = quat.angle_between(q0, q1)
            assert abs(quat.angle_between(q0, out) - t * full) < 1e-6
        report("slerp-properties", "500 samples")

    def test_transfer_invariance_on_200_parts(self):
        rng = np.random.default_rng(103)
        for _ in range(200):
            base = rng.normal(size=(150, 3)) * np.array([0.05, 0.015, 0.01])
            blob = rng.normal(size=(40, 3)) * 0.008 + np.array([0.07, 0.0, 0.0])
            positions = np.vstack([base, blob])
            colors = np.full((positions.shape[0], 3), 120.0)
            part = PointCloudPart(points=np.hstack([positions, colors]), part_id="p")
            traj = Trajectory(tuple(random_waypoint(rng, scale=0.2) for _ in range(5)), id="t")

            local_a = to_part_frame(traj, compute_part_frame(part))

            angle = rng.uniform(0, 2 * np.pi)
            q_pose = quat.from_axis_angle([0, 0, 1], angle)
            rot = quat.to_matrix(q_pose)
            shift = rng.normal(scale=0.5, size=3)
            moved_part = PointCloudPart(
                points=np.hstack([positions @ rot.T + shift, colors]), part_id="p2"
            )
            moved_traj = traj.with_waypoints(
                [
                    Waypoint(
                        gripper=w.gripper,
                        translation=rot @ w.translation + shift,
                        rotation=quat.normalize(quat.multiply(q_pose, w.rotation)),
                    )
                    for w in traj.waypoints
                ]
            )
            local_b = to_part_frame(moved_traj, compute_part_frame(moved_part))

            assert np.max(np.abs(local_a.translations() - local_b.translations())) < 1e-6
            for qa, qb in zip(local_a.rotations(), local_b.rotations()):
                assert quat.angle_between(qa, qb) < 1e-6
        report("transfer-invariance", "200 parts")


class TestGradientCheck:
    def test_full_network_gradients(self):
        started = time.time()
        config = NetConfig(
            h1_pc=8, h1_lang=6, h1_traj=8, h2_pt=8, h2_lt=6, h3=6,
            dropout_rate=0.0, maxnorm_c=10.0,
        )
        dims = (10, 7, 12)
        rng = np.random.default_rng(104)
        net = MultimodalNet.initialize(config, dims, rng)
        inputs = {
            "pc": rng.uniform(0.1, 1.0, size=(6, dims[0])),
            "lang": rng.uniform(0.1, 2.0, size=(6, dims[1])),
            "traj": rng.normal(scale=0.8, size=(6, dims[2])),
        }
        y = rng.integers(0, 2, size=6).astype(float)
        loss, grads, d_out_b = nll_loss_and_grads(net, inputs, y)

        eps = 1e-6
        worst = 0.0
        n_params = 0
        for name, arr in net.parameters():
            flat = arr.reshape(-1)
            gflat = grads[name].reshape(-1)
            for idx in range(flat.size):
                orig = flat[idx]
                flat[idx] = orig + eps
                up, _, _ = nll_loss_and_grads(net, inputs, y)
                flat[idx] = orig - eps
                down, _, _ = nll_loss_and_grads(net, inputs, y)
                flat[idx] = orig
                numeric = (up - down) / (2 * eps)
                denom = max(1.0, abs(numeric), abs(gflat[idx]))
                worst = max(worst, abs(numeric - gflat[idx]) / denom)
                n_params += 1
        orig = net.out_b
        net.out_b = orig + eps
        up, _, _ = nll_loss_and_grads(net, inputs, y)
        net.out_b = orig - eps
        down, _, _ = nll_loss_and_grads(net, inputs, y)
        net.out_b = orig
        numeric = (up - down) / (2 * eps)
        worst = max(worst, abs(numeric - d_out_b) / max(1.0, abs(numeric), abs(d_out_b)))
        n_params += 1

        elapsed = time.time() - started
        assert worst < 1e-4, f"worst relative gradient error {worst:.2e}"
        assert elapsed < 30.0, f"gradient check took {elapsed:.1f}s"
        report("gradient-check", f"{n_params} parameters, worst {worst:.2e}, {elapsed:.1f}s")


class TestNoiseHandlingEfficacy:
    def test_best_demo_never_an_outlier(self):
        from trajtransfer.labels import select_best_demo

        params = DtwParams()
        total = 0
        qualifying = 0
        successes = 0
        for seed in range(500):
            spec = SyntheticSpec(
                n_tasks=1, demos_per_task=8, outlier_fraction=0.4,
                tasks_per_manual=1, points_per_part=120, rng_seed=seed,
            )
            task = generate_synthetic(spec).tasks[0]
            total += 1
            # The generator emits cluster demos first, outliers last.
            n_out = int(round(spec.demos_per_task * spec.outlier_fraction))
            cluster = task.demos[: spec.demos_per_task - n_out]
            outliers = task.demos[spec.demos_per_task - n_out :]
            cache = PairwiseDistanceCache(params)
            diameter = max(
                cache.distance(a, b)
                for i, a in enumerate(cluster)
                for b in cluster[i + 1 :]
            )
            to_outlier = min(
                cache.distance(a, o) for a in cluster for o in outliers
            )
            if not diameter < 0.5 * to_outlier:
                continue
            qualifying += 1
            best = select_best_demo(task, cache=cache)
            if best.id in {c.id for c in cluster}:
                successes += 1
        assert qualifying >= 400, f"only {qualifying}/{total} tasks met the separation condition"
        rate = successes / qualifying
        assert rate >= 0.99, f"cluster recovery rate {rate:.3f}"
        report("noise-handling", f"{successes}/{qualifying} qualifying tasks")


@pytest.fixture(scope="module")
def cli_workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("acceptance")
    cfg = acceptance_config()
    cfg_path = root / "config.json"
    cfg.save(cfg_path)
    runner = CliRunner()
    result = runner.invoke(
        cli_main, ["synth", "--out", str(root / "dataset"), "--config", str(cfg_path)]
    )
    assert result.exit_code == 0, result.output
    return root, cfg_path


class TestEndToEndOrdering:
    def test_table_ordering_on_synthetic_dataset(self, cli_workspace):
        root, cfg_path = cli_workspace
        started = time.time()
        runner = CliRunner()
        report_path = root / "ordering.json"
        result = runner.invoke(
            cli_main,
            [
                "eval",
                "--dataset", str(root / "dataset"),
                "--out-json", str(report_path),
                "--seed", "0",
                "--config", str(cfg_path),
            ],
        )
        assert result.exit_code == 0, result.output
        elapsed = time.time() - started

        table = json.loads(report_path.read_text())
        acc = {row["model"]: row["accuracy"] for row in table["rows"]}
        assert acc["chance"] < acc["similarity+random"], acc
        assert acc["similarity+random"] <= acc["similarity+weighted"], acc
        assert acc["full"] > acc["chance"] + 20.0, acc
        assert acc["full"] >= acc["no-noise-handling"], acc
        assert elapsed < 900.0, f"end-to-end eval took {elapsed:.0f}s"
        report(
            "end-to-end-ordering",
            " ".join(f"{k}={v:.1f}" for k, v in acc.items()) + f", {elapsed:.0f}s",
        )


class TestSsdaTraining:
    def test_reconstruction_loss_decreases_three_seeds(self):
        for seed in (1, 2, 3):
            rng = np.random.default_rng(seed)
            data = [
                FeatureVector(
                    pc=rng.uniform(0, 1, size=40),
                    lang=rng.uniform(0, 2, size=12),
                    traj=rng.normal(size=24),
                )
                for _ in range(60)
            ]
            config = NetConfig(
                h1_pc=12, h1_lang=6, h1_traj=8, h2_pt=10, h2_lt=8, h3=6,
                corruption_p=0.0, sparsity_lambda=0.0, maxnorm_c=50.0,
                learning_rate=0.005, lr_decay=0.5, batch_size=10,
                epochs_pretrain=5, rng_seed=seed,
            )
            net = pretrain(data, config)
            # Max-norm is asserted inline after every update during
            # training; re-check the final state here.
            assert net.max_row_norm() <= config.maxnorm_c * (1 + 1e-12) + 1e-9
            for name, curve in net.pretrain_history.items():
                assert len(curve) == 6
                for before, after in zip(curve, curve[1:]):
                    assert after < before, f"seed {seed} block {name}: {curve}"
        report("ssda-training", "3 seeds x 5 epochs, all blocks strictly decreasing")


class TestDeterminism:
    def test_train_and_eval_bit_identical(self, tmp_path):
        cfg = acceptance_config()
        cfg = cfg.override(
            "synth", n_tasks=12, demos_per_task=5, tasks_per_manual=2, points_per_part=120
        )
        cfg = cfg.override("net", epochs_pretrain=3, epochs_finetune=15)
        cfg_path = tmp_path / "config.json"
        cfg.save(cfg_path)
        runner = CliRunner()
        result = runner.invoke(
            cli_main, ["synth", "--out", str(tmp_path / "ds"), "--config", str(cfg_path)]
        )
        assert result.exit_code == 0, result.output

        models = []
        for name in ("m1.npz", "m2.npz"):
            result = runner.invoke(
                cli_main,
                [
                    "train",
                    "--dataset", str(tmp_path / "ds"),
                    "--out", str(tmp_path / name),
                    "--config", str(cfg_path),
                ],
            )
            assert result.exit_code == 0, result.output
            net, _ = load_model(tmp_path / name)
            models.append(net)
        for block_name, (w, b) in models[0].blocks.items():
            w2, b2 = models[1].blocks[block_name]
            assert np.array_equal(w, w2)
            assert np.array_equal(b, b2)
        assert np.array_equal(models[0].out_w, models[1].out_w)
        assert models[0].out_b == models[1].out_b

        reports = []
        for name in ("r1.json", "r2.json"):
            result = runner.invoke(
                cli_main,
                [
                    "eval",
                    "--dataset", str(tmp_path / "ds"),
                    "--out-json", str(tmp_path / name),
                    "--out-csv", str(tmp_path / f"{name}.csv"),
                    "--seed", "0",
                    "--config", str(cfg_path),
                ],
            )
            assert result.exit_code == 0, result.output
            reports.append(
                ((tmp_path / name).read_bytes(), (tmp_path / f"{name}.csv").read_bytes())
            )
        assert reports[0][0] == reports[1][0]
        assert reports[0][1] == reports[1][1]
        report("determinism", "train weights and eval reports bit-identical")
