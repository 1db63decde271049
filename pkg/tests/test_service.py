"""HTTP surface tests via the in-process test client."""

import json
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from tokon.service.app import app

FIXTURE = Path(__file__).parent / "fixtures" / "ihepc_3day.txt"


@pytest.fixture()
def client():
    return TestClient(app)


@pytest.fixture()
def dataset_path(tmp_path, client):
    response = client.post(
        "/ingest/ihepc",
        json={
            "input_path": str(FIXTURE),
            "out_dir": str(tmp_path / "data"),
            "horizon": 4,
            "context_len": 20,
        },
    )
    assert response.status_code == 200, response.text
    return response.json()["records_path"]


class TestHealth:
    def test_healthz(self, client):
        response = client.get("/healthz")
        assert response.status_code == 200
        assert response.json()["status"] == "ok"


class TestIngestEndpoint:
    def test_ingest_ihepc(self, tmp_path, client):
        response = client.post(
            "/ingest/ihepc",
            json={
                "input_path": str(FIXTURE),
                "out_dir": str(tmp_path / "data"),
                "horizon": 4,
                "context_len": 20,
            },
        )
        body = response.json()
        assert body["record_count"] == 2
        assert body["context_lengths"] == [20]
        assert Path(body["records_path"]).exists()
        assert Path(body["manifest_path"]).exists()

    def test_ingest_m4(self, tmp_path, client):
        source = tmp_path / "monthly.csv"
        source.write_text(
            "\n".join(f"M{i}," + ",".join(str(v) for v in range(70)) for i in range(3))
            + "\n"
        )
        response = client.post(
            "/ingest/m4",
            json={
                "input_path": str(source),
                "out_dir": str(tmp_path / "out"),
                "lengths": [49],
                "horizon": 18,
                "counts": [2],
            },
        )
        assert response.status_code == 200
        assert response.json()["record_count"] == 2

    def test_missing_input_is_400(self, tmp_path, client):
        response = client.post(
            "/ingest/ihepc",
            json={"input_path": "/does/not/exist", "out_dir": str(tmp_path)},
        )
        assert response.status_code == 400
        assert response.json()["error"] == "FileNotFound"


class TestStatsEndpoint:
    def test_stats(self, client, dataset_path):
        response = client.post("/stats", json={"dataset_path": dataset_path, "first_n": 2})
        body = response.json()
        assert body["stats"]["sample_count"] == 48
        assert body["stats"]["mean"] == pytest.approx(203.75)


class TestSearchEndpoint:
    def test_oracle_search(self, client, dataset_path, tmp_path):
        response = client.post(
            "/search",
            json={
                "dataset_path": dataset_path,
                "backend": {"kind": "quantizing-oracle"},
                "epsilon": 1.0,
                "calibration_n": 2,
                "trace_path": str(tmp_path / "trace.csv"),
            },
        )
        body = response.json()
        assert response.status_code == 200
        assert body["converged"] is True
        assert body["evaluations"] == 2 * body["iterations"]
        assert Path(body["trace_path"]).exists()
        assert body["target_mean"] == 499.5

    def test_dry_run_renders_without_backend(self, client, dataset_path):
        response = client.post(
            "/search",
            json={
                "dataset_path": dataset_path,
                "backend": {"kind": "remote-llm"},
                "calibration_n": 2,
                "dry_run": True,
            },
        )
        body = response.json()
        assert body["sigma_t"] is None
        assert body["prompts_rendered"] == 2
        assert body["total_prompt_tokens"] > 0

    def test_validation_error_is_422(self, client):
        response = client.post("/search", json={"dataset_path": 42})
        assert response.status_code == 422


class TestForecastAndEvaluate:
    def test_forecast_then_evaluate(self, client, dataset_path, tmp_path):
        out = tmp_path / "results.json"
        response = client.post(
            "/forecast",
            json={
                "dataset_path": dataset_path,
                "out_path": str(out),
                "backend": {"kind": "naive-last"},
            },
        )
        body = response.json()
        assert response.status_code == 200
        assert body["report"]["rmse_per_step"] == [1.0, 2.0, 3.0, 4.0]
        evaluate = client.post("/evaluate", json={"results_paths": [str(out)]})
        assert evaluate.status_code == 200
        assert (
            evaluate.json()["reports"][0]["report"] == body["report"]
        )

    def test_forecast_with_normalization(self, client, dataset_path, tmp_path):
        response = client.post(
            "/forecast",
            json={
                "dataset_path": dataset_path,
                "out_path": str(tmp_path / "r.json"),
                "backend": {"kind": "quantizing-oracle"},
                "use_tokon": True,
                "sigma_t": 300.0,
                "stats_first_n": 2,
            },
        )
        body = response.json()
        assert response.status_code == 200
        assert body["normalization"]["target_std"] == 300.0
        bound = 0.5 * body["normalization"]["stats"]["std_dev"] / 300.0
        for value in body["report"]["rmse_per_step"]:
            assert value <= bound

    def test_tokon_without_sigma_is_400(self, client, dataset_path, tmp_path):
        response = client.post(
            "/forecast",
            json={
                "dataset_path": dataset_path,
                "out_path": str(tmp_path / "r.json"),
                "backend": {"kind": "naive-last"},
                "use_tokon": True,
            },
        )
        assert response.status_code == 400

    def test_evaluate_plot_table(self, client, dataset_path, tmp_path):
        paths = []
        for kind in ("baseline", "tsfc"):
            out = tmp_path / f"{kind}.json"
            client.post(
                "/forecast",
                json={
                    "dataset_path": dataset_path,
                    "out_path": str(out),
                    "backend": {"kind": "naive-last"},
                    "prompt_kind": kind,
                },
            )
            paths.append(str(out))
        plot = tmp_path / "plot.csv"
        response = client.post(
            "/evaluate", json={"results_paths": paths, "plot_out": str(plot)}
        )
        assert response.status_code == 200
        lines = plot.read_text().splitlines()
        assert lines[0] == "step,baseline,tsfc"
        flat = [float(v) for line in lines[1:] for v in line.split(",")[1:]]
        assert min(flat) == 1.0


class TestTokenAndPromptEndpoints:
    def test_count_tokens(self, client):
        response = client.post(
            "/count-tokens",
            json={"raw": "1023.37, 950.2, 1111.11", "normalized": "512, 498, 530"},
        )
        body = response.json()
        assert body == {
            "raw_tokens": 13,
            "normalized_tokens": 5,
            "reduction_factor": 2.6,
        }

    def test_dump_prompt(self, client, dataset_path):
        response = client.post(
            "/dump-prompt",
            json={"dataset_path": dataset_path, "series_id": "aihepc-00000"},
        )
        text = response.json()["text"]
        assert text.startswith("Given the recorded measurements from 2007-02-01 00:00")
        assert text.endswith("please answer the predicted values only")

    def test_dump_prompt_unknown_id(self, client, dataset_path):
        response = client.post(
            "/dump-prompt",
            json={"dataset_path": dataset_path, "series_id": "nope"},
        )
        assert response.status_code == 400
