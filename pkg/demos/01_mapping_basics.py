"""Map unit vectors to sparse binary codes and inspect what comes out.

Run:  python demos/01_mapping_basics.py
"""

import numpy as np

from sphx import (
    TransformKind,
    UnitVector,
    apply_transform,
    expected_sparsity,
    make_transform,
    map_vector,
    overlap,
    score,
    threshold_h,
)

rng = np.random.default_rng(7)

# A corpus vector is any point on the unit sphere.
x = UnitVector.normalized(rng.standard_normal(100))
y = UnitVector.normalized(rng.standard_normal(100))

# Pick the code length m and the sparsity exponent r. The activation
# threshold h = sqrt(2 r ln m) then controls how many of the m random
# projections stay active: roughly m^(1-r) of them.
m, r = 2**14, 0.5
h = threshold_h(m, r)
print(f"m={m}, r={r} -> h={h:.4f}")
print(f"expected active dimensions: {expected_sparsity(m, r).exact:.1f}")

# The Gaussian transform is the reference construction...
gauss = make_transform(TransformKind.GAUSSIAN, d=100, m=m, seed=1)
code_g = map_vector(gauss, x, h)
print(f"gaussian code: k={code_g.k}, first dims {code_g.support[:8]}")

# ...and the structured transform (sign flips + fast cosine transform)
# produces statistically identical codes in O(m log m) per vector.
fast = make_transform(TransformKind.STRUCTURED, d=100, m=m, seed=1)
code_s = map_vector(fast, x, h)
proj = apply_transform(fast, x)
print(f"structured code: k={code_s.k}; output norm^2 / m = {proj.values @ proj.values / m:.12f}")

# Codes of similar vectors share dimensions; the overlap fraction is the
# retrieval score. Compare a random pair against a correlated pair.
z_coords = 0.95 * x.coords + np.sqrt(1 - 0.95**2) * (
    lambda v: v / np.linalg.norm(v)
)(rng.standard_normal(100) - (rng.standard_normal(100) @ x.coords) * x.coords)
z = UnitVector.normalized(z_coords)

code_y = map_vector(fast, y, h)
code_z = map_vector(fast, z, h)
print(f"\n<x,y> = {x.coords @ y.coords:+.3f} -> overlap {overlap(code_s, code_y)}, "
      f"score {score(code_s, code_y):.2e}")
print(f"<x,z> = {x.coords @ z.coords:+.3f} -> overlap {overlap(code_s, code_z)}, "
      f"score {score(code_s, code_z):.2e}")
print("similar vectors share many more active dimensions than random pairs")
