#!/usr/bin/env python3
"""Protocol stub: mask pixels whose brightest channel exceeds 127.

Exits 4 if the protocol-mandated prompt.txt is missing.
"""
import sys
from pathlib import Path

import numpy as np

from semcom.frame import Frame, load_frame, save_frame

root = Path(sys.argv[1])
if not (root / "prompt.txt").exists():
    sys.exit(4)
out = root / "output"
out.mkdir(exist_ok=True)
for path in sorted((root / "input").glob("*.ppm")):
    frame = load_frame(path)
    bright = frame.pixels.max(axis=2) > 127
    save_frame(Frame(np.where(bright, 255, 0).astype(np.uint8)), out / path.name)
