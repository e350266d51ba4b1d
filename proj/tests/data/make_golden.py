"""Writes golden.ppm and its signature from a NumPy reference of the mining rules.

The C++ suite compares against the frozen outputs; rerun only when the
signature definition itself changes.
"""
import json
import numpy as np

W = H = 16
ys, xs = np.mgrid[0:H, 0:W]
img = np.stack([(xs * 37 + ys * 11) % 256, (xs * xs + 3 * ys) % 256, (xs * ys * 5 + 17) % 256], axis=-1).astype(np.uint8)

with open("golden.ppm", "wb") as f:
    f.write(b"P6\n%d %d\n255\n" % (W, H))
    f.write(img.tobytes())

Bc, Bs, Bt, tau = 16, 18, 16, 0.15
color = []
for c in range(3):
    h = np.zeros(Bc)
    for v in img[..., c].ravel():
        h[int(v) * Bc // 256] += 1
    color += list(h / (W * H))

rgb = img.astype(np.float64)
luma = 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]


def conv(f, k):
    out = np.zeros_like(f)
    for dy in range(3):
        for dx in range(3):
            out += k[dy][dx] * np.roll(np.roll(f, -(dx - 1), axis=1), -(dy - 1), axis=0)
    return out


gx = conv(luma, [[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]])
gy = conv(luma, [[-1, -2, -1], [0, 0, 0], [1, 2, 1]])
mag = np.sqrt(gx * gx + gy * gy)
theta = np.mod(np.arctan2(gy, gx), np.pi)
theta[theta >= np.pi] -= np.pi
mask = mag > tau * mag.max()
s = np.zeros(Bs)
for t in theta[mask]:
    s[min(int(np.floor(t * Bs / np.pi)), Bs - 1)] += 1
structure = list(s / s.sum()) if mask.any() else [1.0 / Bs] * Bs

energy = np.abs(conv(luma, [[0, 1, 0], [1, -4, 1], [0, 1, 0]]))
elog = np.log1p(energy)
t = np.zeros(Bt)
if elog.max() > 0:
    for v in (elog / elog.max()).ravel():
        t[min(int(np.floor(v * Bt)), Bt - 1)] += 1
    texture = list(t / (W * H))
else:
    texture = [1.0] + [0.0] * (Bt - 1)

with open("golden_signature.json", "w") as f:
    json.dump({"color": color, "structure": structure, "texture": texture}, f, indent=1)
    f.write("\n")
