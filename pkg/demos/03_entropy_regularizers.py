"""Why swap the nearest-neighbor entropy for a kernel-density entropy?

Both regularizers reward spread-out embeddings on the unit sphere, but they
behave very differently when two embeddings nearly coincide, which is common
when training data is repetitive. This script traces both estimators and
their gradient norms as a pair of points collapses, then shows that the
kernel estimator still prefers evenly spread configurations.
"""

import math

import numpy as np

from pathssl import (
    EmbeddingBatch,
    KernelConfig,
    kde_entropy,
    kde_grad,
    koleo_entropy,
    koleo_grad,
    normalize_to_sphere,
    vmf_kernel,
)

cfg = KernelConfig(kappa=5.0)

# The kernel itself: a similarity in (e^-kappa, e^kappa) driven by the angle.
x = np.array([1.0, 0.0])
print(f"kernel at angle 0:   {vmf_kernel(x, x, cfg):9.4f}")
print(f"kernel at angle 90:  {vmf_kernel(x, np.array([0.0, 1.0]), cfg):9.4f}")
print(f"kernel at angle 180: {vmf_kernel(x, -x, cfg):9.4f}\n")


def pair_at_distance(d):
    theta = math.asin(d / 2.0)
    z = np.array([[math.cos(theta), math.sin(theta)], [math.cos(theta), -math.sin(theta)]])
    return EmbeddingBatch(z, normalized=True)


print("two unit vectors approaching each other:")
print(f"{'distance':>10s} {'H_nn':>10s} {'|grad_nn|':>10s} {'H_kde':>10s} {'|grad_kde|':>10s}")
for d in (1.0, 1e-1, 1e-2, 1e-3, 1e-6):
    batch = pair_at_distance(d)
    g_nn = np.linalg.norm(koleo_grad(batch)[0])
    g_kde = np.linalg.norm(kde_grad(batch, cfg)[0])
    print(
        f"{d:10.0e} {koleo_entropy(batch):10.3f} {g_nn:10.1f}"
        f" {kde_entropy(batch, cfg):10.3f} {g_kde:10.3f}"
    )
print(
    "\nThe nearest-neighbor gradient norm is exactly 1/d and diverges, while"
    "\nthe kernel gradient norm stays pinned at kappa = 5 at any separation.\n"
)

# Spread preference: among 8 points on the circle, the evenly spaced
# configuration scores higher than any configuration with a duplicate point.
angles = np.linspace(0.0, 2.0 * math.pi, 8, endpoint=False)
uniform = EmbeddingBatch(np.stack([np.cos(angles), np.sin(angles)], 1), normalized=True)
h_uniform = kde_entropy(uniform, cfg)

rng = np.random.default_rng(0)
worst = -math.inf
for _ in range(200):
    thetas = rng.uniform(0.0, 2.0 * math.pi, 8)
    thetas[1] = thetas[0]  # collapse one pair
    z = np.stack([np.cos(thetas), np.sin(thetas)], 1)
    worst = max(worst, kde_entropy(EmbeddingBatch(z, normalized=True), cfg))

print(f"kernel entropy, 8 points evenly spaced:              {h_uniform:.4f}")
print(f"best of 200 random configs with a coincident pair:   {worst:.4f}")

# Batches come from raw model outputs; normalization is a separate step.
raw = rng.normal(size=(6, 128))
batch = normalize_to_sphere(EmbeddingBatch(raw))
print(f"\nrandom 6x128 batch, normalized: H_nn={koleo_entropy(batch):.3f}, H_kde={kde_entropy(batch, cfg):.3f}")
