"""Analyze the bundled submarine models and track a short circle."""

from symtrack import analyze_k, analyze_z, builtin_curve
from symtrack.specfile import load_spec
from symtrack.tracking import track

for name in ("submarine-symmetric", "submarine-asymmetric"):
    sys = load_spec(name).system
    print(f"== {name}")
    print(analyze_z(sys).summary())
    print(analyze_k(sys, samples=100).summary())

sub = load_spec("submarine-symmetric").system
res = track(sub, builtin_curve("circle"), epsilon=0.1, omega_osc=4.0)
print(f"circle at 4 Hz: max error {res.summary()['max_error']:.4g}")
