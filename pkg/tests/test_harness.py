import json
import os

import numpy as np
import pytest

from pullgeo.cli import main as cli_main
from pullgeo.datasets import (
    ExperimentConfig,
    generate_dataset,
    hyperbolic_geometry,
    spherical_geometry,
    spiral_arclength_samples,
)
from pullgeo.errors import DegenerateCurve
from pullgeo.metrics import (
    chord_parameters,
    curve_set_distance,
    geodesic_error,
    variation_deviations,
    variation_error,
)
from pullgeo.pullback import PullbackSpace
from pullgeo.diffeo import translation_diffeo
from pullgeo.svg import SvgFigure


def identity_space():
    return PullbackSpace.of(translation_diffeo(np.zeros(2)))


class TestGenerators:
    def test_two_points_are_endpoints(self):
        cfg = ExperimentConfig(dataset="hyperbolic_branch", n_points=2, noise_sigma=0.0, halfwidth=1.0)
        data, ordered = generate_dataset(cfg)
        assert ordered and data.shape == (2, 2)
        space = hyperbolic_geometry()
        assert space.distance(data[0], data[1]) == pytest.approx(2.0, abs=1e-9)

    def test_hyperbolic_data_on_native_geodesic(self):
        cfg = ExperimentConfig(dataset="hyperbolic_branch", n_points=31, noise_sigma=0.0, halfwidth=1.5)
        data, _ = generate_dataset(cfg)
        space = hyperbolic_geometry()
        assert curve_set_distance(space, data) < 1e-6
        # the base point sits mid-curve by symmetry
        assert np.allclose(data[len(data) // 2], [0.0, 1.0], atol=1e-9)

    def test_circle_data_on_native_geodesic(self):
        cfg = ExperimentConfig(dataset="circle_arc", n_points=31, noise_sigma=0.0, halfwidth=1.1)
        data, _ = generate_dataset(cfg)
        space = spherical_geometry()
        assert curve_set_distance(space, data) < 1e-6
        assert np.allclose(data[len(data) // 2], [1.0, 0.0], atol=1e-9)

    def test_noise_and_seed_determinism(self):
        cfg = ExperimentConfig(dataset="circle_arc", n_points=10, noise_sigma=0.05, seed=7)
        a, _ = generate_dataset(cfg)
        b, _ = generate_dataset(cfg)
        assert np.array_equal(a, b)
        clean, _ = generate_dataset(ExperimentConfig(dataset="circle_arc", n_points=10, noise_sigma=0.0))
        assert not np.allclose(a, clean)

    def test_spiral_arclength_uniform(self):
        pts = spiral_arclength_samples(200, 0.2, 0.15, 4 * np.pi)
        chords = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        assert chords.std() / chords.mean() < 0.01

    def test_config_json_round_trip(self, tmp_path):
        cfg = ExperimentConfig(dataset="spiral", n_points=64, seed=3)
        path = tmp_path / "cfg.json"
        cfg.to_json(path)
        clone = ExperimentConfig.from_json(path)
        assert clone.dataset == cfg.dataset
        assert clone.n_points == cfg.n_points
        assert tuple(clone.base_point) == tuple(cfg.base_point)


class TestMetrics:
    def test_chord_parameters(self):
        data = np.array([[0.0, 0.0], [1.0, 0.0], [3.0, 0.0]])
        assert np.allclose(chord_parameters(data), [0.0, 1 / 3, 1.0])

    def test_degenerate_curve(self):
        with pytest.raises(DegenerateCurve):
            chord_parameters(np.zeros((4, 2)))

    def test_straight_line_zero_error(self):
        space = identity_space()
        data = np.stack([np.linspace(0, 2, 9), np.zeros(9)], axis=1)
        assert geodesic_error(space, data) == pytest.approx(0.0, abs=1e-12)

    def test_two_points_zero_error(self):
        space = hyperbolic_geometry()
        data = np.array([[0.4, 0.2], [-0.3, 1.1]])
        assert geodesic_error(space, data) == pytest.approx(0.0, abs=1e-8)

    def test_variation_zero_when_same_start(self):
        space = spherical_geometry()
        data = np.array([[0.1, 0.0], [0.5, 0.3], [0.9, 0.4]])
        assert variation_error(space, data, data[0]) == pytest.approx(0.0, abs=1e-9)

    def test_variation_linear_in_flat_space(self, rng):
        space = identity_space()
        data = np.stack([np.linspace(0, 3, 7), np.zeros(7)], axis=1)
        z_new = np.array([0.0, 1.0])
        ts = chord_parameters(data)
        expected = np.mean((1 - ts) * np.linalg.norm(z_new - data[0]))
        assert variation_error(space, data, z_new) == pytest.approx(expected, abs=1e-12)
        devs = variation_deviations(space, data, z_new)
        assert np.allclose(devs, (1 - ts) * np.linalg.norm(z_new - data[0]), atol=1e-12)


class TestSvg:
    def test_emits_valid_markup(self, tmp_path):
        fig = SvgFigure()
        fig.scatter(np.array([[0.0, 0.0], [1.0, 1.0]]), label="pts")
        fig.polyline(np.array([[0.0, 0.0], [0.5, 0.8], [1.0, 1.0]]), label="line")
        text = fig.to_string()
        assert text.startswith("<svg") and text.endswith("</svg>")
        assert "circle" in text and "polyline" in text
        path = tmp_path / "fig.svg"
        fig.save(path)
        assert path.exists()


@pytest.fixture(scope="module")
def bundle(tmp_path_factory):
    out = tmp_path_factory.mktemp("hyp")
    cfg = ExperimentConfig(
        dataset="hyperbolic_branch", geometry="hyperbolic", n_points=24,
        noise_sigma=0.01, seed=0, halfwidth=1.5, output_dir=str(out),
        perturb_trials=5, n_interp=21,
    )
    from pullgeo.experiments import run_experiment

    return cfg, run_experiment(cfg)


class TestExperimentBundle:

    def test_all_stages_ok(self, bundle):
        _, summary = bundle
        for stage, result in summary["stages"].items():
            assert result["status"] == "ok", (stage, result)

    def test_artifacts_exist(self, bundle):
        cfg, _ = bundle
        for name in ["data.csv", "interpolation.csv", "interpolation.svg", "barycentre.csv",
                     "barycentre.svg", "logs.csv", "rae.csv", "rae.svg", "summary.json"]:
            assert os.path.exists(os.path.join(cfg.output_dir, name)), name

    def test_barycentre_near_symmetric_centre(self, bundle):
        _, summary = bundle
        bary = np.array(summary["stages"]["barycentre"]["barycentre"])
        # symmetric data around (0, 1): barycentre within a few noise sigmas
        assert np.linalg.norm(bary - [0.0, 1.0]) < 3 * 0.01 + 0.02

    def test_deviation_within_bound(self, bundle):
        _, summary = bundle
        stability = summary["stages"]["interpolation"]["stability"]
        small = [s for s in stability if s["scale"] == 1e-3][0]
        assert small["max_deviation_over_bound"] <= 1.1

    def test_determinism_byte_identical(self, tmp_path):
        from pullgeo.experiments import run_experiment

        outs = []
        for sub in ["a", "b"]:
            out = tmp_path / sub
            cfg = ExperimentConfig(
                dataset="hyperbolic_branch", geometry="hyperbolic", n_points=12,
                noise_sigma=0.01, seed=5, output_dir=str(out), perturb_trials=3, n_interp=11,
            )
            run_experiment(cfg)
            outs.append(out)
        for name in ["data.csv", "interpolation.csv", "barycentre.csv", "rae.csv", "summary.json"]:
            a = (outs[0] / name).read_bytes()
            b = (outs[1] / name).read_bytes()
            assert a == b, name


class TestCli:
    def test_generate(self, tmp_path, capsys):
        rc = cli_main(["generate", "--dataset", "circle_arc", "--n-points", "8",
                       "--noise-sigma", "0.0", "-o", str(tmp_path)])
        assert rc == 0
        assert (tmp_path / "data.csv").exists()

    def test_bench(self, tmp_path, capsys):
        rc = cli_main(["bench", "--n-samples", "20", "--output", str(tmp_path / "bench.json")])
        assert rc == 0
        doc = json.loads((tmp_path / "bench.json").read_text())
        assert doc["hyperbolic"]["max_roundtrip_error"] < 1e-6

    def test_interpolate_stage(self, tmp_path):
        rc = cli_main(["interpolate", "--dataset", "hyperbolic_branch", "--n-points", "12",
                       "--seed", "1", "-o", str(tmp_path)])
        assert rc == 0
        assert (tmp_path / "interpolation.csv").exists()
        doc = json.loads((tmp_path / "interpolation_summary.json").read_text())
        assert doc["status"] == "ok"

    def test_train_small(self, tmp_path):
        rc = cli_main(["train", "--dataset", "spiral", "--n-points", "24", "--seed", "0",
                       "--noise-sigma", "0.0", "--epochs", "1", "-o", str(tmp_path)])
        assert rc == 0
        assert (tmp_path / "checkpoint.json").exists()
