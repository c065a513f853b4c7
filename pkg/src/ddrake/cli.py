"""Thin CLI client for the simulation service.

Subcommands post to the HTTP API (an in-process instance by default, or
a remote one via --server) and write result CSVs locally.  The in-process
path mounts the ASGI app behind a synchronous test client, so no network
stack is involved.
"""

from __future__ import annotations

import json
import sys

import click
import httpx

from .harness import MetricRecord, emit_csv


def _client(server: str | None) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server, timeout=None)
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # test-client shim deprecation noise
        from fastapi.testclient import TestClient

    from .service import app  # imported lazily; numpy-heavy

    return TestClient(app)


def _post(server: str | None, path: str, payload: dict) -> dict:
    with _client(server) as client:
        resp = client.post(path, json=payload)
    if resp.status_code != 200:
        try:
            detail = resp.json().get("detail", resp.text)
        except Exception:
            detail = resp.text
        click.echo(f"error: {detail}", err=True)
        sys.exit(1)
    return resp.json()


def _campaign_payload(config, snr, detector, frames, seed, threads, **extra) -> dict:
    payload = {}
    if config:
        payload.update(json.load(config))
    if snr:
        payload["snr_db"] = list(snr)
    if detector:
        payload["detectors"] = list(detector)
    if frames is not None:
        payload["max_frames"] = frames
    if seed is not None:
        payload["master_seed"] = seed
    payload["workers"] = threads
    payload.update({k: v for k, v in extra.items() if v is not None})
    return payload


def _write_records(data: dict, out: str) -> None:
    records = [
        MetricRecord(
            snr_db=r["snr_db"],
            detector=r["detector"],
            bits=r["bits"],
            bit_errors=r["bit_errors"],
            frames=r["frames"],
            frame_errors=r["frame_errors"],
            iter_multiplies_per_frame=r["iter_multiplies_per_frame"],
            wall_time_s=r["wall_time_s"],
        )
        for r in data["records"]
    ]
    emit_csv(records, out)
    click.echo(f"wrote {len(records)} records to {out}")


_campaign_options = [
    click.option("--config", type=click.File("r"), default=None, help="JSON config mirroring the campaign spec."),
    click.option("--snr", type=float, multiple=True, help="SNR point in dB (repeatable)."),
    click.option("--detector", type=str, multiple=True, help="Detector variant (repeatable)."),
    click.option("--frames", type=int, default=None, help="Max frames per SNR point."),
    click.option("--seed", type=int, default=None, help="Master seed."),
    click.option("--out", type=str, default="results.csv", show_default=True, help="Output CSV path."),
    click.option("--threads", type=int, default=1, show_default=True, help="Worker processes."),
    click.option("--server", type=str, default=None, help="Remote service URL (default: in-process)."),
]


def _add_options(opts):
    def deco(f):
        for opt in reversed(opts):
            f = opt(f)
        return f

    return deco


@click.group()
def main():
    """Delay-Doppler rake link-level simulator."""


@main.command()
@_add_options(_campaign_options)
def ber(config, snr, detector, frames, seed, out, threads, server):
    """Run a BER sweep and write a CSV."""
    payload = _campaign_payload(config, snr, detector, frames, seed, threads)
    _write_records(_post(server, "/campaign", payload), out)


@main.command()
@_add_options(_campaign_options)
def fer(config, snr, detector, frames, seed, out, threads, server):
    """Run a FER sweep (coded/turbo detectors) and write a CSV."""
    payload = _campaign_payload(config, snr, detector, frames, seed, threads)
    payload.setdefault("detectors", ["coded_mrc", "turbo_mrc"])
    _write_records(_post(server, "/campaign", payload), out)


@main.command()
@click.option("--n", "n_doppler", type=int, required=True, help="Doppler bins N.")
@click.option("--m", "m_delay", type=int, required=True, help="Delay bins M.")
@click.option("--l-max", type=int, required=True, help="Null-row count.")
@click.option("--paths", "n_branches", type=int, required=True, help="Unique delay taps L.")
@click.option("--iters", type=int, default=10, show_default=True, help="Detector iterations S.")
@click.option("--server", type=str, default=None, help="Remote service URL (default: in-process).")
def complexity(n_doppler, m_delay, l_max, n_branches, iters, server):
    """Print the detector's complex-multiplication budget."""
    data = _post(
        server,
        "/complexity",
        {"N": n_doppler, "M": m_delay, "l_max": l_max, "L": n_branches, "S": iters},
    )
    for key in ("iterative", "setup_products", "setup_ffts", "tf_initializer", "total"):
        click.echo(f"{key}: {data[key]}")


if __name__ == "__main__":
    main()
