"""Regenerate the golden fixtures from standalone stage oracles.

Nothing here imports skelrecall: the skeleton of a 1-px line is the line
itself, the L1 tube is built by enumerating offsets, and the clip step is an
elementwise product. SKT bytes are packed by hand.
"""

import struct
from pathlib import Path

import numpy as np

HERE = Path(__file__).parent


def skt_bytes(labels: np.ndarray, k: int) -> bytes:
    head = b"SKTN" + struct.pack("<BBBH", 1, labels.ndim, 0, k)
    head += struct.pack(f"<{labels.ndim}I", *labels.shape)
    return head + labels.astype(np.uint8).tobytes()


def l1_tube(skel: np.ndarray, radius: int) -> np.ndarray:
    out = np.zeros_like(skel, dtype=bool)
    h, w = skel.shape
    for r, c in zip(*np.nonzero(skel)):
        for dr in range(-radius, radius + 1):
            for dc in range(-radius, radius + 1):
                rr, cc = r + dr, c + dc
                if abs(dr) + abs(dc) <= radius and 0 <= rr < h and 0 <= cc < w:
                    out[rr, cc] = True
    return out


def main():
    line = np.zeros((9, 11), dtype=np.uint8)
    line[4, 2:9] = 1
    two = np.zeros((16, 16), dtype=np.uint8)
    two[5, 3:13] = 1
    two[10, 3:13] = 2
    gap_gt = np.zeros((5, 15), dtype=np.uint8)
    gap_gt[2, 2:13] = 1
    gap_pred = gap_gt.copy()
    gap_pred[2, 7] = 0

    for name, y, k in (("line", line, 1), ("two_lines", two, 2)):
        skel = y > 0  # already one pixel wide
        tube = l1_tube(skel, 2) * y
        (HERE / f"{name}.skt").write_bytes(skt_bytes(y, k))
        (HERE / f"{name}_tube_r2.skt").write_bytes(skt_bytes(tube, k))
    (HERE / "gap_gt.skt").write_bytes(skt_bytes(gap_gt, 1))
    (HERE / "gap_pred.skt").write_bytes(skt_bytes(gap_pred, 1))


if __name__ == "__main__":
    main()
