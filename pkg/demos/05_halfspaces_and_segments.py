"""The geometric facts behind the contraction bounds, checked numerically.

* Distance from a point to an open half-space has a closed form; it is
  compared with a sampling search that only uses membership tests.
* After one round, every empty half-space keeps a distance from the new
  outputs of at least alpha times its distance from the broadcasters.
* For a body of revolution with concave radius, the two slabs cut at
  (1 - alpha) h obey volume bounds with equality for a cone.
"""

import numpy as np

from subspace_consensus import AdversarySpec, WeightRule, run
from subspace_consensus.analysis import verify_halfspace_formula, verify_halfspace_zone, verify_segment_bounds
from subspace_consensus.geometry import RadiusFunction, segment_volume_bounds

print(verify_halfspace_formula(trials=20, samples=50_000).summary())

spec = AdversarySpec(4, "random_broadcastable", k=2, seed=9)
trace = run(spec, WeightRule(), np.random.default_rng(9).uniform(-5, 5, (4, 2)), 20)
print(verify_halfspace_zone(trace, trials=50, seed=1).summary())

cone = RadiusFunction.from_callable(lambda x: 1.0 - x, 1.0)
for d in (2, 3):
    b = segment_volume_bounds(cone, 0.5, d)
    print(f"cone, d={d}: left {b.left_integral:.6f} <= {b.left_bound:.6f}, "
          f"right {b.right_integral:.6f} >= {b.right_bound:.6f} (budget {b.budget:.1e})")
print(verify_segment_bounds(trials=20).summary())
