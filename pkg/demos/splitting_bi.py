"""Class BI: the intertwiner, its splitting, and finite-rank corners.

When the classifier finds a Q tuple (classes AI and BI) the pair
blocks [[-Q_a, B], [B, -Q]] assemble into an operator J conjugating
the representation to its twin.  For BI the twins are also equivalent
through a form-unitary K, and the composition splits the space into
two eigenspaces with unimodular eigenvalues.  The script builds J for
a random BI instance, verifies it is a unitary intertwiner, splits it,
and inspects the rank profile of its letter-corner compressions.
"""

import itertools

import numpy as np

from freerep import (
    build_J,
    classify,
    finite_rank_check,
    fin_residual,
    general_intertwiner_family,
    generate,
    normalize,
    split,
    verify_inverse_relations,
    verify_isometry_and_intertwining,
)

nsys = normalize(generate.bi_instance(3))
rep = classify(nsys)
print("class:", rep.class_label, "/ verdict:", rep.realization_verdict)
print("Q residual: %.2e, antisymmetry: %.2e"
      % (rep.Q.residual, rep.Q.antisymmetry_residual))

# ------------------------------------------------------------- build J
J = build_J(rep)
print("\npair-block scale relating the twin forms: %.6f" % J.bhat_scale)
print("unitarizing scale t (t^2 = scale): %.6f" % J.unitary_scale)

# the inverse comes in closed form; the three inverse relations tie the
# hatted tuples to the originals
rel = verify_inverse_relations(J)
print("inverse relations, worst residual: %.2e" % rel.max)

# isometry on the depth subspaces W_1..W_3 and commutation with the
# generator action, then the telescoped word identity up to length 5
iso = verify_isometry_and_intertwining(J, depth=3, word_max=5)
print("W dimensions:", iso.w_dims)
print("isometry residuals:", ["%.1e" % g for g in iso.gram_residuals])
print("intertwining residual: %.2e" % iso.intertwine_residual)
print("word identity residual: %.2e" % fin_residual(J, word_max=4))

# ---------------------------------------------------------------- split
sp = split(J)
print("\nsplitting constant c = %.6f (|c| < 2)" % sp.c)
print("eigenvalues %s and %s, both unimodular within %.1e"
      % (np.round(sp.lambda_plus, 6), np.round(sp.lambda_minus, 6),
         sp.unimodularity))
print("projector defects: idempotency %.1e, orthogonality %.1e, "
      "completeness %.1e" % (sp.idempotency, sp.orthogonality,
                             sp.completeness))
print("commutation with the action on W_2: %.2e" % sp.commutation_residual)
print("eigenspace dimensions:", sp.subspace_dims)

# J is one point of a two-parameter family; off-center members split
# with a nonzero constant and eigenvalues away from +-1
member, _ = general_intertwiner_family(J, lam=1.0, c=0.7)
spm = split(member)
print("\nfamily member at c0 = 0.7 splits with c = %.6f" % spm.c)
print("eigenvalues %s and %s, product %s"
      % (np.round(spm.lambda_plus, 6), np.round(spm.lambda_minus, 6),
         np.round(spm.lambda_plus * spm.lambda_minus, 6)))

# --------------------------------------------------- finite-rank corner
# compressing J between the letter subspaces of depth n gives operators
# whose rank stabilizes immediately and never exceeds the target block
print("\nrank of the (b, a) corner of J on W_1..W_5:")
letters = nsys.alphabet.letters
for a, b in itertools.permutations(letters[:2], 2):
    fr = finite_rank_check(J, a, b, nmax=5, method="chain")
    print("  %s -> %s: ranks %s, cap %d"
          % (nsys.alphabet.letter_name(a), nsys.alphabet.letter_name(b),
             fr.ranks, fr.cap))
