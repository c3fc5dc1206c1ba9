"""The scalar endpoint system on two generators, end to end.

Every H block is the same positive scalar, tuned so the system sits at
the endpoint of its one-parameter family.  This is the smallest system
in class BII: twins equivalent, a two-dimensional top eigenspace, and
cubic growth of the sphere sums.  The script normalizes it, classifies
it, and measures the growth exponent from the series.
"""

import numpy as np

from freerep import (
    classify,
    exponent_fit,
    first_shell,
    generate,
    norm,
    normalize,
    sphere_sums,
)

# ---------------------------------------------------------------- build
raw = generate.s0_system()
print("alphabet:", ", ".join(raw.alphabet.names))
print("block value:", raw.blocks[(0, 2)][0, 0], "(= 1/sqrt(3))")

# ------------------------------------------------------------ normalize
# rescales H so the transfer operator has spectral radius exactly 1 and
# solves for the positive definite form B that makes everything unitary
nsys = normalize(raw)
print("\nrho certificate:", nsys.rho_certificate)
print("B diagonal:", np.real([b[0, 0] for b in nsys.B]))
print("fixed-point residual: %.2e" % nsys.fix_residual)

# ------------------------------------------------------------- classify
rep = classify(nsys)
print("\nclass:", rep.class_label)
print("twins equivalent:", rep.package.equivalent)
print("top eigenspace: multiplicity %d, block dimension %d"
      % (rep.mult_one, rep.dim_one))
print("predicted growth exponent:", rep.predicted_exponent)

# --------------------------------------------------------- sphere sums
# s_n sums |<v, pi(x) v>|^2 over the sphere of radius n; for this
# system s_1 = 2/3 exactly and s_n grows like n^2 (exponent 3)
v = np.ones(1)
f = first_shell(nsys, {0: v})
f = first_shell(nsys, {0: v / norm(f)})
series = sphere_sums(f, f, 12)
for n in (0, 1, 2, 3, 6, 12):
    print("s_%-2d = %.12f" % (n, series.s[n]))

fit = exponent_fit(series)
print("\nmeasured exponent: %.3f (confidence %.2f)"
      % (fit.p_hat, fit.confidence))
print("prediction matched within 0.3:",
      abs(fit.p_hat - rep.predicted_exponent) <= 0.3)
