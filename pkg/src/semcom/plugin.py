"""External-process protocol for extractors and reconstructors.

The tool writes ``input/NNNNNN.ppm`` (six digits, starting at 000000) into a
fresh work directory, ``prompt.txt`` alongside it for extractors, then runs
the configured command with the work directory as its single trailing
argument.  The process must write one ``output/NNNNNN.ppm`` per input:
extractors a binary mask raster (0/255), reconstructors a same-geometry
frame.  A nonzero exit, a timeout, or missing outputs fail the stage.
"""
from __future__ import annotations

import shlex
import subprocess
import tempfile
from pathlib import Path

import numpy as np

from .frame import Frame, load_frame, save_frame

DEFAULT_TIMEOUT = 120.0


class PluginError(Exception):
    pass


def _run_batch(
    command: str,
    frames: list[Frame],
    prompt: str | None,
    timeout: float,
    workdir: str | None,
) -> list[Frame]:
    if not command:
        raise PluginError("empty plugin command")
    ctx = (
        tempfile.TemporaryDirectory(prefix="semcom-plugin-")
        if workdir is None
        else None
    )
    root = Path(ctx.name) if ctx is not None else Path(workdir)
    try:
        in_dir = root / "input"
        out_dir = root / "output"
        in_dir.mkdir(parents=True, exist_ok=True)
        out_dir.mkdir(parents=True, exist_ok=True)
        for i, frame in enumerate(frames):
            save_frame(frame, in_dir / f"{i:06d}.ppm")
        if prompt is not None:
            (root / "prompt.txt").write_text(prompt, encoding="utf-8")
        argv = shlex.split(command) + [str(root)]
        try:
            proc = subprocess.run(
                argv,
                capture_output=True,
                timeout=timeout,
                text=True,
            )
        except subprocess.TimeoutExpired as exc:
            raise PluginError(f"plugin timed out after {timeout}s: {argv}") from exc
        except OSError as exc:
            raise PluginError(f"cannot run plugin {argv}: {exc}") from exc
        if proc.returncode != 0:
            raise PluginError(
                f"plugin exited with {proc.returncode}: {argv}\n"
                f"stderr: {proc.stderr.strip()[:2000]}"
            )
        outputs = []
        for i in range(len(frames)):
            path = out_dir / f"{i:06d}.ppm"
            if not path.exists():
                raise PluginError(f"plugin produced no output for frame {i}: {path}")
            outputs.append(load_frame(path))
        return outputs
    finally:
        if ctx is not None:
            ctx.cleanup()


def run_reconstructor(
    command: str,
    frames: list[Frame],
    timeout: float = DEFAULT_TIMEOUT,
    workdir: str | None = None,
) -> list[Frame]:
    """Run an external reconstructor batch; outputs must keep geometry."""
    outputs = _run_batch(command, frames, None, timeout, workdir)
    for i, (inp, out) in enumerate(zip(frames, outputs)):
        if out.geometry != inp.geometry:
            raise PluginError(
                f"reconstructor changed geometry of frame {i}: "
                f"{inp.geometry} -> {out.geometry}"
            )
    return outputs


def run_extractor(
    command: str,
    frames: list[Frame],
    prompt: str | None = None,
    timeout: float = DEFAULT_TIMEOUT,
    workdir: str | None = None,
) -> list[np.ndarray]:
    """Run an external extractor batch; returns one boolean mask per frame."""
    outputs = _run_batch(command, frames, prompt or "", timeout, workdir)
    masks = []
    for i, (inp, out) in enumerate(zip(frames, outputs)):
        if (out.height, out.width) != (inp.height, inp.width):
            raise PluginError(
                f"extractor mask {i} has shape {out.width}x{out.height}, "
                f"frame is {inp.width}x{inp.height}"
            )
        masks.append(np.any(out.pixels != 0, axis=2))
    return masks
