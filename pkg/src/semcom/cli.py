"""Command line pipeline: transmit, channel, receive, evaluate, pipeline.

Every stage is deterministic given the config and seeds; ``pipeline`` simply
chains the four stages, so running them separately produces identical bytes.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import channel as channel_mod
from . import metrics, plugin, stream
from .config import ConfigError, RunConfig, load_run_config
from .extractor import BackgroundUpdate, Transmitter
from .frame import Frame, FrameError, load_frame, save_frame
from .metrics import FrameScore, QualityReport, build_report
from .receiver import RECON_EXTERNAL, Receiver, ReconstructorSpec
from .synthgen import SceneError, generate

MANIFEST_NAME = "manifest.json"
STREAM_NAME = "stream.bin"
ORIGINALS_DIR = "originals"
SUMMARY_NAME = "summary.json"

_DOMAIN_ERRORS = (
    ConfigError,
    FrameError,
    SceneError,
    stream.StreamError,
    channel_mod.ChannelError,
    plugin.PluginError,
    metrics.MetricError,
    ValueError,
)


def _snr_dir(out_dir: Path, cfg: channel_mod.ChannelConfig) -> Path:
    return out_dir / f"snr_{cfg.snr_db:g}db"


def _load_input_frames(cfg: RunConfig, out_dir: Path) -> tuple[list[Frame], list[str]]:
    """Frames plus their file names; scene frames are materialized on disk."""
    if cfg.input_kind == "frames":
        frames_dir = Path(cfg.frames_dir)
        paths = sorted(frames_dir.glob("*.ppm")) + sorted(frames_dir.glob("*.pgm"))
        if not paths:
            raise ConfigError(f"no frames in {frames_dir}")
        return [load_frame(p) for p in paths], [str(p) for p in paths]
    frames, _ = generate(cfg.scene)
    originals = out_dir / ORIGINALS_DIR
    originals.mkdir(parents=True, exist_ok=True)
    names = []
    for i, frame in enumerate(frames):
        path = originals / f"{i:06d}.ppm"
        save_frame(frame, path)
        names.append(str(path))
    return frames, names


def run_transmit(cfg: RunConfig, out_dir: Path) -> dict:
    """Produce the record stream and its manifest."""
    out_dir.mkdir(parents=True, exist_ok=True)
    frames, names = _load_input_frames(cfg, out_dir)
    geometry = frames[0].geometry
    for i, frame in enumerate(frames):
        if frame.geometry != geometry:
            raise ConfigError(
                f"frame {i} geometry {frame.geometry} differs from {geometry}"
            )
    external_masks = None
    if cfg.extractor_cmd:
        external_masks = plugin.run_extractor(
            cfg.extractor_cmd,
            frames,
            prompt=cfg.extractor.prompt,
            timeout=cfg.extractor_timeout,
        )
    # The per-frame loop emits periodic updates only; the session bootstrap
    # background (the receiver's initial store) goes out first as period 0.
    tx = Transmitter(frames[0], cfg.extractor, first_period_index=1)
    records: list[dict] = []
    stream_path = out_dir / STREAM_NAME
    offset = 0
    with open(stream_path, "wb") as fh:
        bootstrap = stream.encode_background(BackgroundUpdate(0, frames[0]))
        fh.write(bootstrap)
        records.append(
            {
                "offset": 0,
                "size": len(bootstrap),
                "kind": "background",
                "index": 0,
            }
        )
        offset += len(bootstrap)
        for i, frame in enumerate(frames):
            mask = external_masks[i] if external_masks is not None else None
            step = tx.step(frame, external_mask=mask)
            encoded = stream.encode_semantic(step.semantic, geometry)
            fh.write(encoded)
            records.append(
                {
                    "offset": offset,
                    "size": len(encoded),
                    "kind": "semantic",
                    "index": step.semantic.frame_index,
                }
            )
            offset += len(encoded)
            if step.background_update is not None:
                encoded = stream.encode_background(step.background_update)
                fh.write(encoded)
                records.append(
                    {
                        "offset": offset,
                        "size": len(encoded),
                        "kind": "background",
                        "index": step.background_update.period_index,
                    }
                )
                offset += len(encoded)
    manifest = {
        "geometry": list(geometry),
        "frame_count": len(frames),
        "originals": names,
        "records": records,
        "stream_bytes": offset,
        "semantic_bytes": sum(r["size"] for r in records if r["kind"] == "semantic"),
        "background_bytes": sum(
            r["size"] for r in records if r["kind"] == "background"
        ),
        "full_frame_bytes": sum(f.n_bytes for f in frames),
    }
    (out_dir / MANIFEST_NAME).write_text(
        json.dumps(manifest, indent=2), encoding="utf-8"
    )
    return manifest


def _read_manifest(out_dir: Path) -> dict:
    path = out_dir / MANIFEST_NAME
    if not path.exists():
        raise ConfigError(f"missing manifest {path}; run transmit first")
    return json.loads(path.read_text(encoding="utf-8"))


def run_channel(
    cfg: RunConfig, ch: channel_mod.ChannelConfig, out_dir: Path
) -> dict:
    """Pass the clean stream through one channel configuration."""
    manifest = _read_manifest(out_dir)
    data = (out_dir / STREAM_NAME).read_bytes()
    snr_dir = _snr_dir(out_dir, ch)
    snr_dir.mkdir(parents=True, exist_ok=True)
    total = channel_mod.ChannelTrace()
    weighted_snr = 0.0
    snr_bits = 0
    with open(snr_dir / "noisy.bin", "wb") as fh:
        for position, rec in enumerate(manifest["records"]):
            record = data[rec["offset"] : rec["offset"] + rec["size"]]
            noisy, trace = channel_mod.apply_channel(record, ch, position)
            fh.write(noisy)
            total.bits_sent += trace.bits_sent
            total.bits_flipped += trace.bits_flipped
            if trace.measured_snr_db is not None and trace.bits_sent:
                weighted_snr += trace.measured_snr_db * trace.bits_sent
                snr_bits += trace.bits_sent
    summary = {
        "mode": ch.mode,
        "snr_db": ch.snr_db,
        "seed": ch.seed,
        "gain_model": ch.gain_model,
        "strict_headers": ch.strict_headers,
        "bits_sent": total.bits_sent,
        "bits_flipped": total.bits_flipped,
        "flip_rate": (total.bits_flipped / total.bits_sent) if total.bits_sent else 0.0,
        "measured_snr_db": (weighted_snr / snr_bits) if snr_bits else None,
    }
    (snr_dir / "trace.json").write_text(json.dumps(summary, indent=2), "utf-8")
    return summary


def run_receive(
    cfg: RunConfig, ch: channel_mod.ChannelConfig, out_dir: Path
) -> list[Path]:
    """Decode a noisy stream into reconstructed frame files."""
    snr_dir = _snr_dir(out_dir, ch)
    noisy_path = snr_dir / "noisy.bin"
    if not noisy_path.exists():
        raise ConfigError(f"missing noisy stream {noisy_path}; run channel first")
    data = noisy_path.read_bytes()
    recon_dir = snr_dir / "recon"
    recon_dir.mkdir(parents=True, exist_ok=True)
    external = cfg.reconstructor.kind == RECON_EXTERNAL
    inline_spec = ReconstructorSpec() if external else cfg.reconstructor
    rx = Receiver(
        mode=cfg.compose_mode,
        reconstructor=inline_spec,
        denoise_background=cfg.denoise_background,
    )
    emitted: list[tuple[int, Frame]] = []
    for offset, header in stream.iter_records(data):
        record = data[offset : offset + header.size]
        frame = rx.step(record)
        if frame is not None:
            emitted.append((header.index, frame))
    if external:
        outputs = plugin.run_reconstructor(
            cfg.reconstructor.external_cmd,
            [frame for _, frame in emitted],
            timeout=cfg.reconstructor.timeout,
        )
        emitted = [(idx, out) for (idx, _), out in zip(emitted, outputs)]
    paths = []
    for index, frame in emitted:
        path = recon_dir / f"{index:06d}.ppm"
        save_frame(frame, path)
        paths.append(path)
    return paths


def _payload_bytes(record: bytes) -> bytes:
    spans = stream.unprotected_spans(record)
    return b"".join(record[a:b] for a, b in spans)


def run_evaluate(
    cfg: RunConfig, channels: list[channel_mod.ChannelConfig], out_dir: Path
) -> QualityReport:
    """Score reconstructed frames and write the CSV report and plot data."""
    manifest = _read_manifest(out_dir)
    data = (out_dir / STREAM_NAME).read_bytes()
    originals = {
        i: load_frame(name) for i, name in enumerate(manifest["originals"])
    }
    width, height, depth = manifest["geometry"]
    per_frame_bytes = width * height * depth
    scales = metrics.max_scales(width, height)
    rows: list[FrameScore] = []
    for ch in channels:
        snr_dir = _snr_dir(out_dir, ch)
        noisy = (snr_dir / "noisy.bin").read_bytes()
        if len(noisy) != len(data):
            raise ConfigError(f"noisy stream {snr_dir} does not match the manifest")
        semantic_records = [r for r in manifest["records"] if r["kind"] == "semantic"]
        background_total = sum(
            r["size"] for r in manifest["records"] if r["kind"] == "background"
        )
        shares = metrics.amortize_background(background_total, len(semantic_records))
        for rec, share in zip(semantic_records, shares):
            index = rec["index"]
            recon_path = snr_dir / "recon" / f"{index:06d}.ppm"
            if not recon_path.exists():
                raise ConfigError(f"missing reconstructed frame {recon_path}")
            recon = load_frame(recon_path)
            original = originals[index]
            clean_rec = data[rec["offset"] : rec["offset"] + rec["size"]]
            noisy_rec = noisy[rec["offset"] : rec["offset"] + rec["size"]]
            sent = _payload_bytes(clean_rec)
            received = _payload_bytes(noisy_rec)
            bep = channel_mod.estimate_bep(sent, received) if sent else 0.0
            rows.append(
                FrameScore(
                    frame_index=index,
                    snr_db=ch.snr_db,
                    channel_mode=ch.mode,
                    reconstructor=cfg.reconstructor.kind,
                    psnr_db=metrics.psnr(original, recon),
                    ms_ssim=metrics.ms_ssim(original, recon, scales=scales),
                    vif=metrics.vif_paper(original, recon),
                    bep=bep,
                    semantic_bytes=rec["size"],
                    background_bytes_amortized=share,
                    full_frame_bytes=per_frame_bytes,
                )
            )
    report = build_report(rows)
    report.to_csv(out_dir / cfg.report_csv)
    _write_plot_data(report, out_dir / cfg.plot_dir)
    summary = {
        "semantic_bytes": report.semantic_bytes,
        "background_bytes": report.background_bytes,
        "full_frame_bytes": report.full_frame_bytes,
        "reduction_fraction": report.reduction_fraction,
        "reference_reduction": report.reference_reduction,
        "aggregates": {
            f"snr_{snr:g}db/{rec}": values
            for (snr, rec), values in report.aggregates().items()
        },
    }
    (out_dir / SUMMARY_NAME).write_text(json.dumps(summary, indent=2), "utf-8")
    return report


def _write_plot_data(report: QualityReport, plot_dir: Path) -> None:
    """Two-column (snr, mean) tables per metric and reconstructor."""
    plot_dir.mkdir(parents=True, exist_ok=True)
    aggregates = report.aggregates()
    reconstructors = sorted({rec for _, rec in aggregates})
    for metric in ("psnr_db", "ms_ssim", "vif", "bep"):
        for rec in reconstructors:
            points = [
                (snr, values[metric])
                for (snr, r), values in aggregates.items()
                if r == rec
            ]
            lines = [f"{snr:g} {value}" for snr, value in sorted(points)]
            path = plot_dir / f"{metric}_{rec}.dat"
            path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def run_pipeline(cfg: RunConfig, out_dir: Path) -> QualityReport:
    run_transmit(cfg, out_dir)
    for ch in cfg.channels:
        run_channel(cfg, ch, out_dir)
        run_receive(cfg, ch, out_dir)
    return run_evaluate(cfg, cfg.channels, out_dir)


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    if getattr(args, "out", None):
        cfg.output_dir = args.out
    if getattr(args, "seed", None) is not None:
        cfg.channels = [replace(ch, seed=args.seed) for ch in cfg.channels]
    if getattr(args, "snr_db", None) is not None:
        cfg.channels = [replace(cfg.channels[0], snr_db=args.snr_db)]
    return cfg


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="semcom",
        description="semantic image transmission simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("transmit", "extract semantics and write the record stream"),
        ("channel", "corrupt the stream through the configured channel"),
        ("receive", "compose and reconstruct frames from a noisy stream"),
        ("evaluate", "score reconstructions and write report/plot data"),
        ("pipeline", "run all stages in sequence"),
    ]:
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", required=True, help="run config file")
        cmd.add_argument("--out", help="override output.dir")
        if name in ("channel", "pipeline"):
            cmd.add_argument("--seed", type=int, help="override channel seed")
        if name in ("channel", "receive", "pipeline"):
            cmd.add_argument(
                "--snr-db",
                dest="snr_db",
                type=float,
                help="run a single SNR instead of the configured sweep",
            )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _apply_overrides(load_run_config(args.config), args)
        out_dir = Path(cfg.output_dir)
        if args.command == "transmit":
            manifest = run_transmit(cfg, out_dir)
            print(
                f"transmitted {manifest['frame_count']} frames: "
                f"{manifest['stream_bytes']} stream bytes "
                f"({len(manifest['records'])} records) -> {out_dir / STREAM_NAME}"
            )
        elif args.command == "channel":
            for ch in cfg.channels:
                summary = run_channel(cfg, ch, out_dir)
                print(
                    f"snr {ch.snr_db:g} dB [{ch.mode}]: flipped "
                    f"{summary['bits_flipped']}/{summary['bits_sent']} bits "
                    f"(rate {summary['flip_rate']:.4g})"
                )
        elif args.command == "receive":
            for ch in cfg.channels:
                paths = run_receive(cfg, ch, out_dir)
                print(f"snr {ch.snr_db:g} dB: wrote {len(paths)} frames")
        elif args.command == "evaluate":
            report = run_evaluate(cfg, cfg.channels, out_dir)
            _print_report(report, out_dir)
        elif args.command == "pipeline":
            report = run_pipeline(cfg, out_dir)
            _print_report(report, out_dir)
    except _DOMAIN_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def _print_report(report: QualityReport, out_dir: Path) -> None:
    print(f"report: {len(report.rows)} rows -> {out_dir}")
    for (snr, rec), values in report.aggregates().items():
        psnr_db = values["psnr_db"]
        psnr_text = "+inf" if math.isinf(psnr_db) else f"{psnr_db:.2f}"
        print(
            f"  snr {snr:g} dB [{rec}]: psnr {psnr_text} dB, "
            f"ms_ssim {values['ms_ssim']:.4f}, vif {values['vif']:.4f}, "
            f"bep {values['bep']:.4g}"
        )
    print(
        f"data reduction: {report.reduction_fraction:.4f} "
        f"(reference operating point {report.reference_reduction:.4f})"
    )


if __name__ == "__main__":
    sys.exit(main())
