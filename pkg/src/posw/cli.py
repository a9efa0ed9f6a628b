"""Thin-client CLI for the consensus service.

All computation happens behind the service API: without ``--server`` the
FastAPI app is mounted in-process (no sockets, same request/response models),
with ``--server URL`` the same requests go to a remote instance. File I/O is
always client-side, so a remote server never needs access to local paths.

Exit codes: 0 success, 2 validation error, 3 I/O error, 4 round cap exceeded.
"""

from __future__ import annotations

import json
import sys
import warnings
from typing import Sequence

import click
import httpx

from . import __version__
from .datasets import PredictionDataset, load_dataset, save_dataset
from .errors import DatasetError
from .results import save_results

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_IO = 3
EXIT_CAP = 4


class ServiceClient:
    """HTTP client over the in-process app or a remote server."""

    def __init__(self, server: str | None):
        if server:
            self._client = httpx.Client(base_url=server, timeout=300.0)
        else:
            # Same request/response surface as a live server, no sockets.
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")  # test-client deprecation chatter
                from fastapi.testclient import TestClient

            from .api import create_app

            self._client = TestClient(create_app())

    def post(self, path: str, payload: dict) -> dict:
        try:
            response = self._client.post(path, json=payload)
        except httpx.HTTPError as exc:
            _fail(EXIT_IO, f"cannot reach service: {exc}")
        if response.status_code == 200:
            return response.json()
        detail = {}
        try:
            detail = response.json().get("detail", {})
        except ValueError:
            pass
        if isinstance(detail, dict) and detail.get("type") == "cap-exceeded":
            click.echo(json.dumps(detail.get("replay"), indent=2), err=True)
            _fail(EXIT_CAP, detail.get("message", "round cap exceeded"))
        message = detail.get("message") if isinstance(detail, dict) else str(detail)
        _fail(EXIT_VALIDATION, message or f"service rejected the request ({response.status_code})")

    def close(self) -> None:
        self._client.close()


def _fail(code: int, message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _load_input(path: str, renormalize: bool) -> PredictionDataset:
    try:
        return load_dataset(path, renormalize=renormalize)
    except DatasetError as exc:
        _fail(EXIT_VALIDATION, str(exc))
    except OSError as exc:
        _fail(EXIT_IO, str(exc))


def _config_payload(
    seed: int | None,
    no_early_stop: bool,
    tie_tolerance: float,
    local_tie_policy: str,
    round_cap_factor: int | None,
) -> dict:
    payload: dict = {
        "early_stop": not no_early_stop,
        "tie_tolerance": tie_tolerance,
        "local_tie_policy": local_tie_policy,
    }
    if seed is not None:
        payload["rng_seed"] = seed
    if round_cap_factor is not None:
        payload["round_cap_factor"] = round_cap_factor
    return payload


def _effective_format(fmt: str | None, path: str) -> str:
    if fmt is not None:
        return fmt
    suffix = path.rsplit(".", 1)[-1].lower() if "." in path else ""
    return suffix if suffix in ("csv", "json") else "json"


def _write_results(
    path: str | None,
    fmt: str | None,
    records: list[dict],
    summary: dict,
    timing: dict | None,
    columns: Sequence[str],
) -> None:
    if path is None:
        return
    try:
        save_results(records, summary, path, _effective_format(fmt, path),
                     timing=timing, columns=columns)
    except OSError as exc:
        _fail(EXIT_IO, str(exc))


def common_options(fn):
    fn = click.option("--server", default=None, help="Base URL of a running service; default is in-process.")(fn)
    fn = click.option("--seed", type=int, default=None, help="Base RNG seed.")(fn)
    fn = click.option("--no-early-stop", is_flag=True, help="Disable majority early stopping.")(fn)
    fn = click.option("--tie-tolerance", type=float, default=1e-9, show_default=True)(fn)
    fn = click.option(
        "--local-tie-policy",
        type=click.Choice(["lowest-index", "seeded-random"]),
        default="lowest-index",
        show_default=True,
    )(fn)
    fn = click.option("--round-cap-factor", type=int, default=None)(fn)
    fn = click.option(
        "--format", "fmt", type=click.Choice(["csv", "json"]), default=None,
        help="Output format; inferred from the output extension when omitted.",
    )(fn)
    return fn


@click.group()
@click.version_option(version=__version__, prog_name="posw")
def main() -> None:
    """Consensus experiments for ensembles of classifiers."""


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path())
@click.option("--output", "output_path", default=None, type=click.Path())
@click.option("--renormalize", is_flag=True, help="Rescale rows whose sum drifted off 1.")
@common_options
def run(input_path, output_path, renormalize, server, seed, no_early_stop, tie_tolerance,
        local_tie_policy, round_cap_factor, fmt):
    """Run consensus on every sample of a dataset."""
    dataset = _load_input(input_path, renormalize)
    client = ServiceClient(server)
    out = client.post(
        "/run",
        {
            "dataset": dataset.to_dict(),
            "config": _config_payload(seed, no_early_stop, tie_tolerance,
                                      local_tie_policy, round_cap_factor),
        },
    )
    client.close()
    _write_results(
        output_path, fmt, out["records"], out["summary"], out["timing"],
        columns=("sample_id", "final_label", "final_class", "rounds", "early_stopped"),
    )
    summary = out["summary"]
    click.echo(f"samples: {summary['n_samples']}")
    click.echo(f"rounds histogram: {summary['rounds_histogram']}")
    click.echo(f"mean time per sample: {out['timing']['mean_s'] * 1e3:.3f} ms")


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path())
@click.option("--output", "output_path", default=None, type=click.Path())
@click.option("--methods", default=None, help="Comma-separated subset of posw,majority,bft,soft,locals.")
@click.option("--renormalize", is_flag=True)
@common_options
def compare(input_path, output_path, methods, renormalize, server, seed, no_early_stop,
            tie_tolerance, local_tie_policy, round_cap_factor, fmt):
    """Compare consensus accuracy against the baselines (needs ground truth)."""
    dataset = _load_input(input_path, renormalize)
    client = ServiceClient(server)
    out = client.post(
        "/compare",
        {
            "dataset": dataset.to_dict(),
            "methods": methods.split(",") if methods else None,
            "config": _config_payload(seed, no_early_stop, tie_tolerance,
                                      local_tie_policy, round_cap_factor),
        },
    )
    client.close()
    rows = [
        {"method": name, "accuracy": acc, "undecided": out["undecided"].get(name, 0)}
        for name, acc in sorted(out["accuracies"].items())
    ]
    _write_results(output_path, fmt, rows, {"n_samples": out["n_samples"]}, None,
                   columns=("method", "accuracy", "undecided"))
    click.echo(f"{'method':<12} {'accuracy':>9} {'undecided':>10}")
    for row in rows:
        click.echo(f"{row['method']:<12} {row['accuracy']:>9.4f} {row['undecided']:>10}")


@main.command()
@click.option("--samples", type=int, required=True)
@click.option("--peers", type=int, required=True)
@click.option("--classes", "n_classes", type=int, required=True)
@click.option("--accuracy", "accuracy_text", default="0.85",
              help="Per-peer accuracy targets, comma-separated; one value broadcasts to all peers.")
@click.option("--concentration", type=float, default=6.0, show_default=True,
              help="Belief peakedness; larger is closer to one-hot.")
@click.option("--output", "output_path", required=True, type=click.Path())
@common_options
def gen(samples, peers, n_classes, accuracy_text, concentration, output_path, server, seed,
        no_early_stop, tie_tolerance, local_tie_policy, round_cap_factor, fmt):
    """Generate a synthetic dataset with known per-peer accuracies."""
    try:
        parts = [float(x) for x in accuracy_text.split(",")]
    except ValueError:
        _fail(EXIT_VALIDATION, f"bad --accuracy value {accuracy_text!r}")
    accuracies = parts * peers if len(parts) == 1 else parts
    client = ServiceClient(server)
    out = client.post(
        "/gen",
        {
            "n_samples": samples,
            "n_peers": peers,
            "n_classes": n_classes,
            "accuracies": accuracies,
            "concentration": concentration,
            "rng_seed": seed if seed is not None else 0,
        },
    )
    client.close()
    try:
        dataset = PredictionDataset.from_dict(out)
        save_dataset(dataset, output_path, _effective_format(fmt, output_path))
    except DatasetError as exc:
        _fail(EXIT_VALIDATION, str(exc))
    except OSError as exc:
        _fail(EXIT_IO, str(exc))
    click.echo(f"wrote {dataset.n_samples} samples to {output_path}")


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path())
@click.option("--output", "output_path", default=None, type=click.Path())
@click.option("--silent", "silent_peers", multiple=True, type=int,
              help="Peer id to silence; repeatable.")
@click.option("--liar", "liar_specs", multiple=True,
              help="PEER:LABEL:PROB fixed-liar fault; LABEL is a class name or index. Repeatable.")
@click.option("--renormalize", is_flag=True)
@common_options
def simulate(input_path, output_path, silent_peers, liar_specs, renormalize, server, seed,
             no_early_stop, tie_tolerance, local_tie_policy, round_cap_factor, fmt):
    """Run the network harness per sample, optionally injecting faults."""
    dataset = _load_input(input_path, renormalize)
    faults = [{"peer": p, "kind": "silent"} for p in silent_peers]
    for spec in liar_specs:
        faults.append(_parse_liar(spec, dataset))
    client = ServiceClient(server)
    out = client.post(
        "/simulate",
        {
            "dataset": dataset.to_dict(),
            "faults": faults,
            "config": _config_payload(seed, no_early_stop, tie_tolerance,
                                      local_tie_policy, round_cap_factor),
        },
    )
    client.close()
    _write_results(
        output_path, fmt, out["records"], out["summary"], None,
        columns=("sample_id", "final_label", "final_class", "rounds",
                 "early_stopped", "reference_match"),
    )
    summary = out["summary"]
    click.echo(f"faults: {summary['fault_summary']}")
    click.echo(
        f"reference match: {summary['reference_match_samples']}/{summary['n_samples']} samples"
    )


def _parse_liar(spec: str, dataset: PredictionDataset) -> dict:
    parts = spec.split(":")
    if len(parts) != 3:
        _fail(EXIT_VALIDATION, f"bad --liar spec {spec!r}; expected PEER:LABEL:PROB")
    peer_text, label_text, prob_text = parts
    try:
        peer = int(peer_text)
        prob = float(prob_text)
    except ValueError:
        _fail(EXIT_VALIDATION, f"bad --liar spec {spec!r}; expected PEER:LABEL:PROB")
    if dataset.class_names and label_text in dataset.class_names:
        label = dataset.class_names.index(label_text)
    else:
        try:
            label = int(label_text)
        except ValueError:
            _fail(EXIT_VALIDATION, f"unknown class label {label_text!r} in --liar spec")
    return {"peer": peer, "kind": "liar", "label": label, "prob": prob}


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host, port):
    """Start the consensus service."""
    import uvicorn

    from .api import create_app

    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    main()
