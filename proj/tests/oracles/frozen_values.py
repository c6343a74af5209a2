"""Independent reference values frozen into the C++ unit tests.

Run with: python3 tests/oracles/frozen_values.py
Everything here is written directly from the defining formulas with numpy,
sharing no code with the C++ implementation.
"""
import math

import numpy as np

np.set_printoptions(precision=17)


def correlate(img, k, mode="edge"):
    r = k.shape[0] // 2
    p = np.pad(img, r, mode=mode) if mode == "edge" else np.pad(img, r)
    h, w = img.shape
    out = np.zeros_like(img, dtype=float)
    for y in range(h):
        for x in range(w):
            out[y, x] = np.sum(k * p[y:y + 2 * r + 1, x:x + 2 * r + 1])
    return out


SX = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], float)
SY = SX.T
LAP = np.array([[0, 1, 0], [1, -4, 1], [0, 1, 0]], float)

print("conv2d sobel_x on [[0,0,1]]*3:\n", correlate(np.array([[0, 0, 1]] * 3, float), SX))

imp = np.zeros((3, 3)); imp[1, 1] = 1
print("avg_pool impulse:\n", correlate(imp, np.full((3, 3), 1 / 9)))

checker = np.indices((8, 8)).sum(0) % 2
lap = correlate(checker.astype(float), LAP)
print("checker lap var", lap.var(), "d_blur", 1 / (lap.var() + 1e-6))

ramp = np.tile(np.arange(8) / 7.0, (8, 1))
print("ramp d_noise", np.mean(np.abs(ramp - correlate(ramp, np.full((3, 3), 1 / 9)))))

step = np.zeros((16, 16)); step[:, 8:] = 1
g = np.hypot(correlate(step, SX), correlate(step, SY))
print("step d_edge", np.mean(g > 0.08))

fixture = np.array([[0.1, 0.5, 0.9, 0.3], [0.2, 0.7, 0.4, 0.6],
                    [0.8, 0.0, 1.0, 0.25], [0.55, 0.45, 0.35, 0.65]])
print("fixture mean/std", fixture.mean(), fixture.std())

t, dim = 7, 8
pe = []
for i in range(dim // 2):
    f = 10000 ** (2 * i / dim)
    pe += [math.sin(t / f), math.cos(t / f)]
print("pe(7,8)", pe)

sigma = 1.0
r = math.ceil(3 * sigma)
k = np.exp(-0.5 * np.arange(-r, r + 1) ** 2 / sigma ** 2)
k /= k.sum()
print("gauss center 1d", k[r], "2d", k[r] ** 2)

betas = np.linspace(1e-4, 0.02, 1000)
print("alpha_bar[1000]", np.prod(1 - betas), "alpha_bar[500]", np.prod(1 - betas[:500]))
ab = np.prod(1 - betas[:500])
print("g* z0=0.5 t=500", math.sqrt(1 - ab) / (ab * 0.25 + 1 - ab))
